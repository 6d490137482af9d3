// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 1 for ctest).
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "qtraj/dense.hpp"
#include "qtraj/model.hpp"
#include "qtraj/oracle.hpp"
#include "support/reference.hpp"
#include "support/trees.hpp"

using namespace qtraj;
using ref::C;
using ref::Mat;

namespace {

// Tolerances and budgets, pinned.
namespace tol {
constexpr double kDecayZ = 3.0;
constexpr double kDecayFloor = 1e-2;
constexpr double kDecayBudget = 120.0;
constexpr double kOracleZ = 3.0;
constexpr double kOracleBudget = 300.0;
constexpr double kTreeTol = 1e-10;
constexpr double kTreeBudget = 30.0;
constexpr double kRk4RatioLo = 12.0, kRk4RatioHi = 20.0;
constexpr double kAdaptiveEps = 1e-8, kAdaptiveTol = 1e-6;
constexpr double kMovingTol = 1e-3;
constexpr double kMovingStorage = 0.2;
constexpr std::size_t kShgEarlyBasis = 200;
constexpr double kShgBasisLo = 10, kShgBasisHi = 400;
constexpr double kShgBudget = 300.0;
constexpr double kJumpZ = 3.0;
}  // namespace tol

struct Outcome {
  bool pass = true;
  std::string detail;
};

Operator prim(PrimaryKind k, std::size_t f) { return Operator::primary(k, f); }

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("qtraj_acceptance_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

CompiledModel load(const std::string& name) { return compile_model(load_model(QTRAJ_MODELS_DIR "/" + name)); }

// 1. Damped oscillator from |1>: <n>(t) = exp(-2 gamma t).
Outcome analytic_decay() {
  const double gamma = 0.5;
  const ModelOperators model(0.0 * prim(PrimaryKind::Number, 0), {std::sqrt(2 * gamma) * prim(PrimaryKind::Annihilation, 0)});
  OutputSpec out;
  out.operators = {prim(PrimaryKind::Number, 0)};
  out.file_names = {"n"};
  RunConfig cfg;
  cfg.dt = 1e-3;
  cfg.numdts = 100;
  cfg.numsteps = 30;
  cfg.n_trajectories = 2000;
  cfg.seed = 1001;
  cfg.integrator.kind = IntegratorKind::Rk4;
  Outcome o;
  for (auto u : {Unraveling::Qsd, Unraveling::Jump, Unraveling::OrthoJump}) {
    cfg.unraveling = u;
    const auto r = run_ensemble(State::basis(8, 1, PhysicalType::Field), model, cfg, out, std::nullopt);
    double worst = 0.0;
    for (std::size_t k = 0; k < r.times.size(); ++k) {
      const double exact = std::exp(-2 * gamma * r.times[k]);
      const double d = std::abs(r.mean[k][0] - C(exact));
      const double bound = std::max(tol::kDecayZ * r.standard_error[k][0].real(), tol::kDecayFloor);
      worst = std::max(worst, d / bound);
      if (d > bound) o.pass = false;
    }
    o.detail += std::string(to_string(u)) + " max |d|/bound " + fmt("%.3f", worst) + "; ";
  }
  return o;
}

// 2. Ensembles against the dense master equation.
Outcome oracle_equivalence() {
  Outcome o;
  for (const char* file : {"damped_atom.qt", "jaynes_cummings.qt"}) {
    CompiledModel m = load(file);
    const ModelFile mf = load_model(std::string(QTRAJ_MODELS_DIR "/") + file);
    std::vector<std::string> names;
    for (const auto& d : mf.outputs) names.push_back(print_expr(*d.expr));
    m.run.n_trajectories = 2000;
    for (auto u : {Unraveling::Qsd, Unraveling::Jump, Unraveling::OrthoJump}) {
      m.run.unraveling = u;
      const auto r = oracle_check(m, names, tol::kOracleZ);
      if (!r.report.all_pass) {
        o.pass = false;
        std::fputs(r.report.table().c_str(), stdout);
      }
      o.detail += std::string(file) + "/" + to_string(u) + " " + std::to_string(r.report.rows.size() - r.report.failures) +
                  "/" + std::to_string(r.report.rows.size()) + "; ";
    }
  }
  return o;
}

// 3. Operator trees against independent Kronecker matrices.
Outcome operator_sweep() {
  const std::vector<std::vector<FreedomSpec>> layouts{
      {ref::field(4), ref::atom(3), ref::spin()},
      {ref::field(4), ref::field(3), ref::spin()},
      {ref::spin(), ref::field(4)},
      {ref::atom(3), ref::field(2), ref::spin()},
  };
  std::mt19937_64 rng(314159);
  Outcome o;
  double worst_apply = 0.0, worst_hc = 0.0, worst_pow = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto& layout = layouts[static_cast<std::size_t>(trial) % layouts.size()];
    ref::TreeGen gen{std::mt19937_64(rng()), layout};
    const Operator e = gen.tree(3);
    const double t = 0.37 * (trial % 5);
    const State psi = ref::random_state(layout, rng);
    const Mat dense = ref::reference_dense(e, layout, t);
    const ref::Vec expected = dense * ref::to_vec(psi);
    const ref::Vec got = ref::to_vec(apply(e, psi, t));
    State in_place = psi;
    apply_in_place(e, in_place, t);
    worst_apply = std::max({worst_apply, (got - expected).cwiseAbs().maxCoeff(),
                            (ref::to_vec(in_place) - expected).cwiseAbs().maxCoeff()});
    worst_hc = std::max(worst_hc, (ref::reference_dense(e.hc(), layout, t) - dense.adjoint()).cwiseAbs().maxCoeff());
    const Mat sq = ref::reference_dense(pow(e, 2), layout, t);
    worst_pow = std::max(worst_pow, (sq - dense * dense).cwiseAbs().maxCoeff());
    // pow applied through the kernels equals applying twice.
    State twice = psi;
    apply_in_place(e, twice, t);
    apply_in_place(e, twice, t);
    worst_pow = std::max(worst_pow, (ref::to_vec(apply(pow(e, 2), psi, t)) - ref::to_vec(twice)).cwiseAbs().maxCoeff());
  }
  // hc(z A B) = conj(z) hc(B) hc(A) on a fixed pair.
  const std::vector<FreedomSpec> layout{ref::field(4), ref::spin()};
  const C z(0.3, -1.1);
  const Operator a = prim(PrimaryKind::Annihilation, 0) + prim(PrimaryKind::SigmaPlus, 1);
  const Operator b = prim(PrimaryKind::Number, 0) * prim(PrimaryKind::SigmaMinus, 1);
  const Mat lhs = ref::reference_dense((z * (a * b)).hc(), layout, 0.0);
  const Mat rhs = std::conj(z) * ref::reference_dense(b.hc(), layout, 0.0) * ref::reference_dense(a.hc(), layout, 0.0);
  worst_hc = std::max(worst_hc, (lhs - rhs).cwiseAbs().maxCoeff());
  o.pass = worst_apply <= tol::kTreeTol && worst_hc <= tol::kTreeTol && worst_pow <= tol::kTreeTol;
  o.detail = "apply " + fmt("%.2e", worst_apply) + ", hc " + fmt("%.2e", worst_hc) + ", pow " + fmt("%.2e", worst_pow);
  return o;
}

// 4. Closed Rabi oscillation: P_up(t) = sin^2(g t).
Outcome deterministic_convergence() {
  const double g = 1.0;
  const ModelOperators model(g * (prim(PrimaryKind::SigmaPlus, 0) + prim(PrimaryKind::SigmaMinus, 0)), {});
  OutputSpec out;
  out.operators = {prim(PrimaryKind::SigmaPlus, 0) * prim(PrimaryKind::SigmaMinus, 0)};
  out.file_names = {"p"};
  const State down = State::basis(2, 0, PhysicalType::Spin);
  auto max_error = [&](IntegratorConfig integ, double dt, int per_output, int outputs) {
    RunConfig cfg;
    cfg.dt = dt;
    cfg.numdts = per_output;
    cfg.numsteps = outputs;
    cfg.integrator = integ;
    const auto r = run_single(down, model, cfg, out, std::nullopt);
    double e = 0.0;
    for (std::size_t k = 0; k < r.record.times.size(); ++k)
      e = std::max(e, std::abs(r.record.means[k][0].real() - std::pow(std::sin(g * r.record.times[k]), 2)));
    return e;
  };
  const IntegratorConfig rk4{IntegratorKind::Rk4, 1e-6, 1e-10};
  const double coarse = max_error(rk4, 0.1, 5, 10);
  const double fine = max_error(rk4, 0.05, 10, 10);
  const double ratio = coarse / fine;
  const double adaptive = max_error(IntegratorConfig{IntegratorKind::Adaptive, tol::kAdaptiveEps, 1e-10}, 0.1, 5, 20);
  Outcome o;
  o.pass = ratio >= tol::kRk4RatioLo && ratio <= tol::kRk4RatioHi && adaptive <= tol::kAdaptiveTol;
  o.detail = "rk4 error ratio " + fmt("%.2f", ratio) + " (" + fmt("%.2e", coarse) + " -> " + fmt("%.2e", fine) +
             "), adaptive max error " + fmt("%.2e", adaptive);
  return o;
}

// 5. Moving basis of 20 levels against a fixed basis of 200, same noise.
Outcome moving_basis_equivalence() {
  const double E = 2.0, gamma = 1.0;
  const Operator a = prim(PrimaryKind::Annihilation, 0);
  const ModelOperators model(E * kI * (a.hc() - a), {std::sqrt(2 * gamma) * a});
  OutputSpec out;
  out.operators = {prim(PrimaryKind::Number, 0)};
  out.file_names = {"n"};
  RunConfig cfg;
  cfg.dt = 0.01;
  cfg.numdts = 10;
  cfg.numsteps = 50;
  cfg.seed = 2718;
  cfg.unraveling = Unraveling::Qsd;
  cfg.integrator = IntegratorConfig{IntegratorKind::Adaptive, 1e-8, 1e-10};
  const State fixed0 = State::basis(200, 0, PhysicalType::Field);
  const auto fixed = run_single(fixed0, model, cfg, out, std::nullopt);
  cfg.moving.enabled = true;
  cfg.moving.n_moving_freedoms = 1;
  cfg.moving.cutoff_epsilon = 1e-8;
  cfg.moving.shift_accuracy = 1e-8;
  cfg.moving.pad_size = 2;
  const State moving0 = State::basis(20, 0, PhysicalType::Field);
  const auto moving = run_single(moving0, model, cfg, out, std::nullopt);
  double worst = 0.0;
  for (std::size_t k = 0; k < fixed.record.times.size(); ++k)
    worst = std::max(worst, std::abs(fixed.record.means[k][0] - moving.record.means[k][0]));
  const double storage = static_cast<double>(moving0.size()) / static_cast<double>(fixed0.size());
  Outcome o;
  o.pass = worst <= tol::kMovingTol && storage <= tol::kMovingStorage;
  o.detail = "max |d<n>| " + fmt("%.2e", worst) + ", <n>(5) " + fmt("%.4f", fixed.record.means.back()[0].real()) +
             ", storage ratio " + fmt("%.2f", storage);
  return o;
}

// 6. The three-freedom SHG model from its model file.
Outcome shg_structure() {
  const CompiledModel m = load("shg.qt");
  const auto dir = scratch("shg");
  std::vector<std::string> lines;
  const auto r = run_single(m.initial, m.operators, m.run, m.outputs, dir,
                            [&](const SummaryLine& l) { lines.push_back(format_summary(l)); });
  Outcome o;
  if (lines.size() != 11 || lines[0] != "0 0 0 0 0 5000 0") {
    o.pass = false;
    o.detail = "first line '" + (lines.empty() ? std::string() : lines[0]) + "', " + std::to_string(lines.size()) +
               " lines; ";
  }
  const auto& basis = r.record.basis_size;
  if (basis.size() < 2 || basis[1] >= tol::kShgEarlyBasis) o.pass = false;
  std::size_t lo = SIZE_MAX, hi = 0;
  for (std::size_t k = 1; k < basis.size(); ++k) {
    lo = std::min(lo, basis[k]);
    hi = std::max(hi, basis[k]);
  }
  if (static_cast<double>(lo) < tol::kShgBasisLo || static_cast<double>(hi) > tol::kShgBasisHi) o.pass = false;
  int good_files = 0;
  for (const auto& name : m.outputs.file_names) {
    std::ifstream is(dir / name);
    int rows = 0;
    bool shape = true;
    for (std::string line; std::getline(is, line); ++rows) {
      std::istringstream ls(line);
      int cols = 0;
      for (double v; ls >> v;) ++cols;
      if (cols != 5) shape = false;
    }
    if (shape && rows == 11) ++good_files;
  }
  if (good_files != 5) o.pass = false;
  o.detail += "basis at t=0.5 " + std::to_string(basis.size() > 1 ? basis[1] : 0) + ", later " + std::to_string(lo) +
              ".." + std::to_string(hi) + ", " + std::to_string(good_files) + "/5 files of 11x5";
  std::filesystem::remove_all(dir);
  return o;
}

// 7. Mean jump count against the integrated oracle rate.
Outcome jump_statistics() {
  const double kappa = 0.1, T = 5.0;
  const Operator l = std::sqrt(2 * kappa) * prim(PrimaryKind::SigmaMinus, 0);
  const ModelOperators model(0.0 * prim(PrimaryKind::SigmaZ, 0), {l});
  // Oracle: integral of Tr(L^dag L rho) by Simpson's rule.
  const std::vector<FreedomSpec> specs{ref::spin()};
  const DenseModel dm = dense_model(model, specs);
  const int n = 500;
  std::vector<double> ts;
  for (int k = 0; k <= n; ++k) ts.push_back(T * k / n);
  Mat rho0 = Mat::Zero(2, 2);
  rho0(1, 1) = 1.0;
  const auto rhos = integrate_master(rho0, dm, ts, 1e-4);
  const Mat ldl = dm.lindblads[0].adjoint() * dm.lindblads[0];
  double integral = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    integral += w * (ldl * rhos[static_cast<std::size_t>(k)]).trace().real();
  }
  integral *= (T / n) / 3.0;

  OutputSpec out;
  RunConfig cfg;
  cfg.dt = 1e-3;
  cfg.numdts = 500;
  cfg.numsteps = 10;
  cfg.n_trajectories = 2000;
  cfg.seed = 4242;
  cfg.integrator.kind = IntegratorKind::Rk4;
  Outcome o;
  for (auto u : {Unraveling::Jump, Unraveling::OrthoJump}) {
    cfg.unraveling = u;
    const auto r = run_ensemble(State::basis(2, 1, PhysicalType::Spin), model, cfg, out, std::nullopt);
    const double mean = r.mean_jumps.back(), se = r.jumps_standard_error.back();
    if (!(std::abs(mean - integral) <= tol::kJumpZ * se)) o.pass = false;
    o.detail += "lambda=" + fmt("%g", jump_lambda(u)) + " " + fmt("%.4f", mean) + " +- " + fmt("%.4f", se) + "; ";
  }
  o.detail += "oracle " + fmt("%.4f", integral);
  return o;
}

// 8. Byte-identical outputs across repeats and thread counts.
Outcome determinism() {
  Outcome o;
  CompiledModel jc = load("jaynes_cummings.qt");
  jc.run.n_trajectories = 64;
  std::vector<std::filesystem::path> dirs;
  for (unsigned threads : {1u, 1u, 4u}) {
    jc.run.threads = threads;
    const auto dir = scratch("det" + std::to_string(dirs.size()));
    run_ensemble(jc.initial, jc.operators, jc.run, jc.outputs, dir);
    dirs.push_back(dir);
  }
  int compared = 0;
  for (const auto& name : jc.outputs.file_names) {
    const std::string first = slurp(dirs[0] / name);
    if (first.empty() || first != slurp(dirs[1] / name) || first != slurp(dirs[2] / name)) o.pass = false;
    ++compared;
  }
  // Single trajectories, including the moving basis.
  const CompiledModel shg = load("shg.qt");
  const auto s1 = scratch("shg1"), s2 = scratch("shg2");
  std::string out1, out2;
  run_single(shg.initial, shg.operators, shg.run, shg.outputs, s1,
             [&](const SummaryLine& l) { out1 += format_summary(l) + '\n'; });
  run_single(shg.initial, shg.operators, shg.run, shg.outputs, s2,
             [&](const SummaryLine& l) { out2 += format_summary(l) + '\n'; });
  if (out1 != out2) o.pass = false;
  for (const auto& name : shg.outputs.file_names) {
    if (slurp(s1 / name) != slurp(s2 / name)) o.pass = false;
    ++compared;
  }
  o.detail = std::to_string(compared) + " files compared, serial vs 4 threads and repeated runs";
  for (const auto& d : dirs) std::filesystem::remove_all(d);
  std::filesystem::remove_all(s1);
  std::filesystem::remove_all(s2);
  return o;
}

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome()> run;
  double budget_seconds;  // 0: none
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "analytic decay", analytic_decay, tol::kDecayBudget},
      {2, "oracle equivalence", oracle_equivalence, tol::kOracleBudget},
      {3, "operator algebra sweep", operator_sweep, tol::kTreeBudget},
      {4, "deterministic convergence", deterministic_convergence, 0.0},
      {5, "moving basis equivalence", moving_basis_equivalence, 0.0},
      {6, "SHG structure", shg_structure, tol::kShgBudget},
      {7, "jump statistics", jump_statistics, 0.0},
      {8, "determinism", determinism, 0.0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0.0 && seconds > c.budget_seconds) {
      o.pass = false;
      o.detail += " (over the " + fmt("%.0f", c.budget_seconds) + " s budget)";
    }
    if (!o.pass) ++failed;
    std::printf("criterion %d %-26s %s  %s [%.1f s]\n", c.number, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                seconds);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
