#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "qtraj/model.hpp"

namespace qtraj {

/// Hamiltonian and Lindblad operators as dense matrices on one truncation.
struct DenseModel {
  Eigen::MatrixXcd hamiltonian;
  std::vector<Eigen::MatrixXcd> lindblads;
  /// Set when H depends on time; hamiltonian then holds H(0).
  std::function<Eigen::MatrixXcd(double)> hamiltonian_at;

  std::size_t dim() const { return static_cast<std::size_t>(hamiltonian.rows()); }
};

inline constexpr std::size_t kMaxOracleDim = 64;

DenseModel dense_model(const ModelOperators& model, std::span<const FreedomSpec> freedoms);

/// Right-hand side of the Lindblad master equation.
Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& h,
                              const std::vector<Eigen::MatrixXcd>& ls);

/// Fixed-step RK4 for the master equation, returning rho at each of the
/// (non-decreasing, non-negative) sample times. Throws Numeric if an
/// eigenvalue of rho drops below -1e-6.
std::vector<Eigen::MatrixXcd> integrate_master(const Eigen::MatrixXcd& rho0, const DenseModel& model,
                                               const std::vector<double>& sample_times, double dt_oracle);

/// A step that is stable for RK4 on this model and at most `max_dt`.
double suggested_oracle_step(const DenseModel& model, double max_dt = 1e-3);

/// Tr(O rho) for every sample and observable: [k][i].
std::vector<std::vector<Complex>> oracle_expectations(const std::vector<Eigen::MatrixXcd>& rhos,
                                                      const std::vector<Eigen::MatrixXcd>& observables);

double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

struct ComparisonRow {
  std::size_t op = 0;
  std::string name;
  double t = 0.0;
  Complex mean, oracle;
  double deviation = 0.0;
  double threshold = 0.0;  // max(z*|SE|, abs_floor)
  double z_se = 0.0;
  bool pass = false;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  bool all_pass = true;
  std::size_t failures = 0;

  /// Rows sorted by deviation / threshold, largest first.
  std::vector<ComparisonRow> worst(std::size_t count) const;
  /// ASCII table: operator, t, mean, oracle, |d|, z*SE, PASS/FAIL.
  std::string table() const;
};

inline constexpr double kCompareAbsFloor = 1e-3;

/// means/standard_errors/oracle indexed [k][i]; SE packed as complex(se_re, se_im).
ComparisonReport compare_ensemble(const std::vector<double>& times, const std::vector<std::vector<Complex>>& means,
                                  const std::vector<std::vector<Complex>>& standard_errors,
                                  const std::vector<std::vector<Complex>>& oracle,
                                  const std::vector<std::string>& names, double z,
                                  double abs_floor = kCompareAbsFloor);

struct OracleCheckResult {
  EnsembleResult ensemble;
  std::vector<std::vector<Complex>> oracle;
  ComparisonReport report;
};

/// Runs the ensemble of a compiled model and compares its output
/// operators against the master equation on the initial truncation.
OracleCheckResult oracle_check(const CompiledModel& model, const std::vector<std::string>& names, double z = 3.0,
                               const LineCallback& on_line = {});

}  // namespace qtraj
