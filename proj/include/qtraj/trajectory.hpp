#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qtraj/moving_basis.hpp"
#include "qtraj/stepper.hpp"

namespace qtraj {

/// Time grid, stochastic and basis settings of a run. Outputs are written
/// every numdts coarse steps of length dt, numsteps times after t = 0.
struct RunConfig {
  double dt = 0.01;
  int numdts = 1;
  int numsteps = 1;
  std::size_t n_trajectories = 1;
  std::uint64_t seed = 1;
  Unraveling unraveling = Unraveling::Qsd;
  IntegratorConfig integrator;
  MovingBasisParams moving;
  /// Worker threads for ensembles; 0 picks the hardware concurrency.
  unsigned threads = 0;

  void validate() const;
  double output_time(int k) const { return static_cast<double>(k) * numdts * dt; }
};

/// Observables, their output files and the four stdout columns. Pipe
/// entries are 1-based indices into the concatenated value columns, where
/// operator k owns 4k+1..4k+4 (Re <O>, Im <O>, Re var, Im var).
struct OutputSpec {
  std::vector<Operator> operators;
  std::vector<std::string> file_names;
  std::array<int, 4> pipe{1, 1, 1, 1};

  void validate() const;
};

Complex expectation(const Operator& op, const State& psi, double t, Workspace& ws);
Complex expectation(const Operator& op, const State& psi, double t = 0.0);
/// <O^2> - <O>^2; complex for non-Hermitian O.
Complex variance(const Operator& op, const State& psi, double t, Workspace& ws);
Complex variance(const Operator& op, const State& psi, double t = 0.0);

/// Everything one trajectory reports at its output times.
struct TrajectoryRecord {
  std::vector<double> times;
  /// means[k][i], variances[k][i]: operator i at output time k.
  std::vector<std::vector<Complex>> means;
  std::vector<std::vector<Complex>> variances;
  std::vector<std::size_t> basis_size;
  /// Accepted deterministic substeps since the previous output.
  std::vector<std::uint64_t> substeps;
  /// Jumps since t = 0.
  std::vector<std::uint64_t> jumps;
};

using RowCallback = std::function<void(const TrajectoryRecord&, std::size_t row)>;

/// Integrates one trajectory with noise stream `index` of cfg.seed.
TrajectoryRecord simulate_trajectory(const State& psi0, const ModelOperators& model, const RunConfig& cfg,
                                     const std::vector<Operator>& observables, std::uint64_t index,
                                     const RowCallback& on_row = {});

/// Stdout-style summary of one output time.
struct SummaryLine {
  double t = 0.0;
  std::array<double, 4> piped{};
  double basis_size = 0.0;
  double substeps = 0.0;
};

std::string format_number(double x);
std::string format_summary(const SummaryLine& line);

struct SingleRunResult {
  TrajectoryRecord record;
  std::vector<SummaryLine> summary;
};

using LineCallback = std::function<void(const SummaryLine&)>;

/// One trajectory; writes one file per observable when out_dir is set and
/// reports a summary line per output time as soon as it is computed.
SingleRunResult run_single(const State& psi0, const ModelOperators& model, const RunConfig& cfg,
                           const OutputSpec& out, const std::optional<std::filesystem::path>& out_dir,
                           const LineCallback& on_line = {});

/// Means and standard errors over an ensemble of trajectories.
struct EnsembleResult {
  std::size_t n_trajectories = 0;
  std::vector<double> times;
  /// [k][i] as in TrajectoryRecord.
  std::vector<std::vector<Complex>> mean;
  std::vector<std::vector<Complex>> mean_variance;
  /// Standard errors of Re <O> and Im <O>, packed as complex(se_re, se_im).
  std::vector<std::vector<Complex>> standard_error;
  std::vector<double> mean_jumps, jumps_standard_error;
  std::vector<double> mean_basis_size, mean_substeps;
  std::vector<SummaryLine> summary;
};

/// Runs cfg.n_trajectories trajectories (in parallel when cfg.threads != 1)
/// and reduces them in index order, so results do not depend on threading.
EnsembleResult run_ensemble(const State& psi0, const ModelOperators& model, const RunConfig& cfg,
                            const OutputSpec& out, const std::optional<std::filesystem::path>& out_dir,
                            const LineCallback& on_line = {});

}  // namespace qtraj
