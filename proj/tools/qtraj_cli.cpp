// Command-line front end; talks to the solver only through the C API.
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qtraj/qtraj.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct ModelDeleter {
  void operator()(qt_model* m) const { qt_model_free(m); }
};
using ModelPtr = std::unique_ptr<qt_model, ModelDeleter>;

void print_line(const char* line, void*) {
  std::fputs(line, stdout);
  std::fputc('\n', stdout);
  std::fflush(stdout);
}

int report(qt_status s, const char* context) {
  std::fprintf(stderr, "qtraj: %s: %s\n", context, qt_last_error());
  return s == QT_ERR_PARSE || s == QT_ERR_IO || s == QT_ERR_INVALID_ARGUMENT ? kExitUsage : kExitFailure;
}

struct Options {
  std::string model;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::string seed, trajectories, unraveling, threads;
  double z = 3.0;
};

void add_common(CLI::App* cmd, Options& o, bool with_output) {
  cmd->add_option("--model,-m", o.model, "model file")->required();
  if (with_output) {
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--unraveling", o.unraveling, "qsd, jump or orthojump");
    cmd->add_option("--set", o.overrides, "override a [run] setting, key=value")->take_all();
  }
}

int load(const Options& o, ModelPtr& out) {
  qt_model* raw = nullptr;
  const qt_status s = qt_model_load(o.model.c_str(), &raw);
  if (s != QT_OK) return report(s, "cannot load model");
  out.reset(raw);
  std::vector<std::pair<std::string, std::string>> settings;
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "qtraj: --set expects key=value, got '%s'\n", kv.c_str());
      return kExitUsage;
    }
    settings.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.seed.empty()) settings.emplace_back("seed", o.seed);
  if (!o.trajectories.empty()) settings.emplace_back("trajectories", o.trajectories);
  if (!o.unraveling.empty()) settings.emplace_back("unraveling", o.unraveling);
  if (!o.threads.empty()) settings.emplace_back("threads", o.threads);
  for (const auto& [key, value] : settings) {
    const qt_status st = qt_model_set(out.get(), key.c_str(), value.c_str());
    if (st != QT_OK) {
      std::fprintf(stderr, "qtraj: bad setting %s=%s: %s\n", key.c_str(), value.c_str(), qt_last_error());
      return kExitUsage;
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum trajectory solver for Lindblad master equations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", qt_version());

  Options o;
  if (const char* env = std::getenv("QTRAJ_OUT_DIR")) o.out_dir = env;

  auto* run = app.add_subcommand("run", "integrate one trajectory");
  add_common(run, o, true);
  run->add_option("--out-dir,-o", o.out_dir, "directory for the output files (default $QTRAJ_OUT_DIR)");

  auto* ensemble = app.add_subcommand("ensemble", "average over many trajectories");
  add_common(ensemble, o, true);
  ensemble->add_option("--out-dir,-o", o.out_dir, "directory for the output files (default $QTRAJ_OUT_DIR)");
  ensemble->add_option("--trajectories,-n", o.trajectories, "number of trajectories");
  ensemble->add_option("--threads,-j", o.threads, "worker threads, 0 for all cores");

  auto* oracle = app.add_subcommand("oracle-check", "compare an ensemble with the dense master equation");
  add_common(oracle, o, true);
  oracle->add_option("--trajectories,-n", o.trajectories, "number of trajectories");
  oracle->add_option("--threads,-j", o.threads, "worker threads, 0 for all cores");
  oracle->add_option("--z", o.z, "tolerance in standard errors")->check(CLI::NonNegativeNumber);

  auto* print = app.add_subcommand("print-model", "echo the parsed model in normal form");
  add_common(print, o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  ModelPtr model;
  if (const int rc = load(o, model); rc != kExitOk) return rc;

  if (print->parsed()) {
    char* text = nullptr;
    const qt_status s = qt_model_print(model.get(), &text);
    if (s != QT_OK) return report(s, "print-model");
    std::fputs(text, stdout);
    qt_string_free(text);
    return kExitOk;
  }

  if (oracle->parsed()) {
    int passed = 0;
    const qt_status s = qt_oracle_check(model.get(), o.z, print_line, nullptr, &passed, nullptr);
    if (s != QT_OK) return report(s, "oracle-check");
    return passed ? kExitOk : kExitFailure;
  }

  const qt_run_mode mode = run->parsed() ? QT_RUN_SINGLE : QT_RUN_ENSEMBLE;
  const qt_status s =
      qt_run(model.get(), mode, o.out_dir.empty() ? nullptr : o.out_dir.c_str(), print_line, nullptr, nullptr);
  if (s != QT_OK) return report(s, run->parsed() ? "run" : "ensemble");
  return kExitOk;
}
