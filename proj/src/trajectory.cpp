#include "qtraj/trajectory.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace qtraj {

void RunConfig::validate() const {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (numdts < 1) throw Error(ErrorCode::InvalidArgument, "numdts must be positive");
  if (numsteps < 0) throw Error(ErrorCode::InvalidArgument, "numsteps must be non-negative");
  if (n_trajectories < 1) throw Error(ErrorCode::InvalidArgument, "at least one trajectory is required");
  if (integrator.kind == IntegratorKind::Adaptive && !(integrator.eps > 0.0))
    throw Error(ErrorCode::InvalidArgument, "adaptive integrator needs eps > 0");
  if (moving.enabled) moving.validate();
}

void OutputSpec::validate() const {
  if (file_names.size() != operators.size())
    throw Error(ErrorCode::InvalidArgument, "each output operator needs exactly one file name");
  const int columns = 4 * static_cast<int>(operators.size());
  for (int p : pipe) {
    if (columns > 0 && (p < 1 || p > columns))
      throw Error(ErrorCode::InvalidArgument, "pipe index " + std::to_string(p) + " outside 1.." +
                                                  std::to_string(columns));
  }
}

Complex expectation(const Operator& op, const State& psi, double t, Workspace& ws) {
  auto o_psi = ws.acquire(psi);
  apply_in_place(op, *o_psi, t, ws);
  return inner_product(psi, *o_psi) / psi.norm_squared();
}

Complex expectation(const Operator& op, const State& psi, double t) {
  Workspace ws;
  return expectation(op, psi, t, ws);
}

Complex variance(const Operator& op, const State& psi, double t, Workspace& ws) {
  auto o_psi = ws.acquire(psi);
  apply_in_place(op, *o_psi, t, ws);
  const double n2 = psi.norm_squared();
  const Complex mean = inner_product(psi, *o_psi) / n2;
  apply_unchecked(op, *o_psi, t, ws);
  return inner_product(psi, *o_psi) / n2 - mean * mean;
}

Complex variance(const Operator& op, const State& psi, double t) {
  Workspace ws;
  return variance(op, psi, t, ws);
}

namespace {

void validate_moving(const State& psi, const MovingBasisParams& m) {
  if (!m.enabled) return;
  if (m.n_moving_freedoms > psi.num_freedoms())
    throw Error(ErrorCode::InvalidArgument, "more moving freedoms than freedoms");
  for (std::size_t k = 0; k < m.n_moving_freedoms; ++k) {
    if (psi.freedom(k).type != PhysicalType::Field)
      throw Error(ErrorCode::InvalidArgument, "moving-basis freedom " + std::to_string(k) + " is not a FIELD");
  }
}

void maintain_basis(State& psi, const MovingBasisParams& m) {
  for (std::size_t k = 0; k < m.n_moving_freedoms; ++k) recenter(psi, k, m.shift_accuracy);
  for (std::size_t k = 0; k < psi.num_freedoms(); ++k) {
    if (psi.freedom(k).type != PhysicalType::Spin) adjust_cutoff(psi, k, m.cutoff_epsilon, m.pad_size);
  }
}

void record_row(TrajectoryRecord& rec, const State& psi, double t, const std::vector<Operator>& observables,
                const StepStats& stats, std::uint64_t substeps, Workspace& ws) {
  rec.times.push_back(t);
  auto& means = rec.means.emplace_back();
  auto& vars = rec.variances.emplace_back();
  for (const auto& op : observables) {
    means.push_back(expectation(op, psi, t, ws));
    vars.push_back(variance(op, psi, t, ws));
  }
  rec.basis_size.push_back(psi.used_size());
  rec.substeps.push_back(substeps);
  rec.jumps.push_back(stats.jumps);
}

double column_value(const std::vector<Complex>& means, const std::vector<Complex>& vars, int column) {
  const auto op = static_cast<std::size_t>((column - 1) / 4);
  switch ((column - 1) % 4) {
    case 0: return means[op].real();
    case 1: return means[op].imag();
    case 2: return vars[op].real();
    default: return vars[op].imag();
  }
}

SummaryLine summarize(const OutputSpec& out, double t, const std::vector<Complex>& means,
                      const std::vector<Complex>& vars, double basis, double substeps) {
  SummaryLine line;
  line.t = t;
  for (std::size_t i = 0; i < 4; ++i)
    line.piped[i] = out.operators.empty() ? 0.0 : column_value(means, vars, out.pipe[i]);
  line.basis_size = basis;
  line.substeps = substeps;
  return line;
}

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream os(dir / name);
  if (!os) throw Error(ErrorCode::Io, "cannot open output file " + (dir / name).string());
  return os;
}

}  // namespace

std::string format_number(double x) {
  if (x == 0.0) return "0";  // also folds -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string format_summary(const SummaryLine& line) {
  std::string s = format_number(line.t);
  for (double v : line.piped) s += ' ' + format_number(v);
  s += ' ' + format_number(line.basis_size);
  s += ' ' + format_number(line.substeps);
  return s;
}

TrajectoryRecord simulate_trajectory(const State& psi0, const ModelOperators& model, const RunConfig& cfg,
                                     const std::vector<Operator>& observables, std::uint64_t index,
                                     const RowCallback& on_row) {
  cfg.validate();
  model.validate(psi0);
  for (const auto& op : observables) op.validate(psi0);
  validate_moving(psi0, cfg.moving);

  State psi = psi0;
  psi.normalize();
  Stepper stepper(model, cfg.unraveling, cfg.integrator);
  NoiseSource noise(cfg.seed, index);
  Workspace ws;
  TrajectoryRecord rec;
  record_row(rec, psi, 0.0, observables, stepper.stats(), 0, ws);
  if (on_row) on_row(rec, 0);

  std::uint64_t substeps_before = 0;
  for (int k = 1; k <= cfg.numsteps; ++k) {
    for (int s = 0; s < cfg.numdts; ++s) {
      const double t = (static_cast<double>(k - 1) * cfg.numdts + s) * cfg.dt;
      try {
        stepper.step(psi, t, cfg.dt, noise);
        if (cfg.moving.enabled) maintain_basis(psi, cfg.moving);
      } catch (const Error& e) {
        throw Error(e.code(), std::string(e.what()) + " (trajectory " + std::to_string(index) + ", t = " +
                                  format_number(t) + ")");
      }
    }
    const std::uint64_t total = stepper.stats().adaptive_substeps;
    record_row(rec, psi, cfg.output_time(k), observables, stepper.stats(), total - substeps_before, ws);
    substeps_before = total;
    if (on_row) on_row(rec, rec.times.size() - 1);
  }
  return rec;
}

SingleRunResult run_single(const State& psi0, const ModelOperators& model, const RunConfig& cfg,
                           const OutputSpec& out, const std::optional<std::filesystem::path>& out_dir,
                           const LineCallback& on_line) {
  out.validate();
  std::vector<std::ofstream> files;
  if (out_dir) {
    for (const auto& name : out.file_names) files.push_back(open_output(*out_dir, name));
  }
  SingleRunResult result;
  auto on_row = [&](const TrajectoryRecord& rec, std::size_t k) {
    for (std::size_t i = 0; i < files.size(); ++i) {
      files[i] << format_number(rec.times[k]) << ' ' << format_number(rec.means[k][i].real()) << ' '
               << format_number(rec.means[k][i].imag()) << ' ' << format_number(rec.variances[k][i].real())
               << ' ' << format_number(rec.variances[k][i].imag()) << '\n';
    }
    SummaryLine line = summarize(out, rec.times[k], rec.means[k], rec.variances[k],
                                 static_cast<double>(rec.basis_size[k]), static_cast<double>(rec.substeps[k]));
    result.summary.push_back(line);
    if (on_line) on_line(line);
  };
  result.record = simulate_trajectory(psi0, model, cfg, out.operators, 0, on_row);
  for (auto& f : files) {
    f.flush();
    if (!f) throw Error(ErrorCode::Io, "failed writing output file");
  }
  return result;
}

namespace {

struct Welford {
  std::size_t n = 0;
  double mean = 0.0, m2 = 0.0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double standard_error() const {
    return n > 1 ? std::sqrt(m2 / (static_cast<double>(n) * static_cast<double>(n - 1))) : 0.0;
  }
};

}  // namespace

EnsembleResult run_ensemble(const State& psi0, const ModelOperators& model, const RunConfig& cfg,
                            const OutputSpec& out, const std::optional<std::filesystem::path>& out_dir,
                            const LineCallback& on_line) {
  cfg.validate();
  out.validate();
  const std::size_t n = cfg.n_trajectories;
  std::vector<TrajectoryRecord> records(n);

  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        records[i] = simulate_trajectory(psi0, model, cfg, out.operators, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  // Reduce in trajectory order so the result is independent of scheduling.
  EnsembleResult res;
  res.n_trajectories = n;
  res.times = records[0].times;
  const std::size_t rows = res.times.size();
  const std::size_t nops = out.operators.size();
  for (std::size_t k = 0; k < rows; ++k) {
    std::vector<Welford> re(nops), im(nops), vre(nops), vim(nops);
    Welford jumps, basis, substeps;
    for (const auto& rec : records) {
      for (std::size_t i = 0; i < nops; ++i) {
        re[i].add(rec.means[k][i].real());
        im[i].add(rec.means[k][i].imag());
        vre[i].add(rec.variances[k][i].real());
        vim[i].add(rec.variances[k][i].imag());
      }
      jumps.add(static_cast<double>(rec.jumps[k]));
      basis.add(static_cast<double>(rec.basis_size[k]));
      substeps.add(static_cast<double>(rec.substeps[k]));
    }
    auto& mean = res.mean.emplace_back();
    auto& mvar = res.mean_variance.emplace_back();
    auto& se = res.standard_error.emplace_back();
    for (std::size_t i = 0; i < nops; ++i) {
      mean.emplace_back(re[i].mean, im[i].mean);
      mvar.emplace_back(vre[i].mean, vim[i].mean);
      se.emplace_back(re[i].standard_error(), im[i].standard_error());
    }
    res.mean_jumps.push_back(jumps.mean);
    res.jumps_standard_error.push_back(jumps.standard_error());
    res.mean_basis_size.push_back(basis.mean);
    res.mean_substeps.push_back(substeps.mean);
    res.summary.push_back(summarize(out, res.times[k], mean, mvar, basis.mean, substeps.mean));
  }

  if (out_dir) {
    for (std::size_t i = 0; i < nops; ++i) {
      auto os = open_output(*out_dir, out.file_names[i]);
      for (std::size_t k = 0; k < rows; ++k) {
        os << format_number(res.times[k]) << ' ' << format_number(res.mean[k][i].real()) << ' '
           << format_number(res.mean[k][i].imag()) << ' ' << format_number(res.mean_variance[k][i].real()) << ' '
           << format_number(res.mean_variance[k][i].imag()) << ' '
           << format_number(res.standard_error[k][i].real()) << ' '
           << format_number(res.standard_error[k][i].imag()) << '\n';
      }
      if (!os) throw Error(ErrorCode::Io, "failed writing " + out.file_names[i]);
    }
  }
  if (on_line)
    for (const auto& line : res.summary) on_line(line);
  return res;
}

}  // namespace qtraj
