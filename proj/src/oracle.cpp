#include "qtraj/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "qtraj/dense.hpp"

namespace qtraj {

using Eigen::MatrixXcd;

DenseModel dense_model(const ModelOperators& model, std::span<const FreedomSpec> freedoms) {
  std::size_t dim = 1;
  for (const auto& f : freedoms) dim *= f.dim_used;
  if (dim > kMaxOracleDim)
    throw Error(ErrorCode::InvalidArgument, "oracle dimension " + std::to_string(dim) + " exceeds " +
                                                std::to_string(kMaxOracleDim));
  DenseModel d;
  d.hamiltonian = to_dense(model.hamiltonian, freedoms, 0.0);
  for (const auto& l : model.lindblads) d.lindblads.push_back(to_dense(l, freedoms, 0.0));
  // Probe for explicit time dependence at a few irrational times.
  bool varies = false;
  for (double t : {0.7390851332, 1.6180339887, 3.1415926536})
    if (!to_dense(model.hamiltonian, freedoms, t).isApprox(d.hamiltonian, 0.0)) varies = true;
  if (varies) {
    std::vector<FreedomSpec> specs(freedoms.begin(), freedoms.end());
    Operator h = model.hamiltonian;
    d.hamiltonian_at = [specs, h](double t) { return to_dense(h, specs, t); };
  }
  return d;
}

MatrixXcd lindblad_rhs(const MatrixXcd& rho, const MatrixXcd& h, const std::vector<MatrixXcd>& ls) {
  const auto n = rho.rows();
  auto check = [&](const MatrixXcd& m, const char* what) {
    if (m.rows() != n || m.cols() != n)
      throw Error(ErrorCode::StructureMismatch, std::string("lindblad_rhs: ") + what + " has the wrong dimension");
  };
  if (rho.cols() != n) throw Error(ErrorCode::StructureMismatch, "lindblad_rhs: rho is not square");
  check(h, "H");
  const Complex mi(0.0, -1.0);
  MatrixXcd out = mi * (h * rho - rho * h);
  for (const auto& l : ls) {
    check(l, "a Lindblad operator");
    const MatrixXcd ld = l.adjoint();
    const MatrixXcd ldl = ld * l;
    out.noalias() += l * rho * ld;
    out.noalias() -= 0.5 * (ldl * rho + rho * ldl);
  }
  return out;
}

namespace {

double min_eigenvalue(const MatrixXcd& rho) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

std::vector<MatrixXcd> integrate_master(const MatrixXcd& rho0, const DenseModel& model,
                                        const std::vector<double>& sample_times, double dt_oracle) {
  const auto n = rho0.rows();
  if (rho0.cols() != n || static_cast<std::size_t>(n) != model.dim())
    throw Error(ErrorCode::StructureMismatch, "integrate_master: rho0 does not match the model dimension");
  if (static_cast<std::size_t>(n) > kMaxOracleDim)
    throw Error(ErrorCode::InvalidArgument, "integrate_master: dimension exceeds " + std::to_string(kMaxOracleDim));
  if (!(dt_oracle > 0.0) || !std::isfinite(dt_oracle))
    throw Error(ErrorCode::InvalidArgument, "integrate_master: dt_oracle must be positive");
  for (std::size_t k = 0; k < sample_times.size(); ++k)
    if (!(sample_times[k] >= 0.0) || (k > 0 && sample_times[k] < sample_times[k - 1]))
      throw Error(ErrorCode::InvalidArgument, "integrate_master: sample times must be non-negative and sorted");

  auto rhs = [&](const MatrixXcd& rho, double t) {
    return model.hamiltonian_at ? lindblad_rhs(rho, model.hamiltonian_at(t), model.lindblads)
                                : lindblad_rhs(rho, model.hamiltonian, model.lindblads);
  };

  std::vector<MatrixXcd> out;
  out.reserve(sample_times.size());
  MatrixXcd rho = rho0;
  double t = 0.0;
  for (double target : sample_times) {
    const auto steps = static_cast<long>(std::ceil((target - t) / dt_oracle - 1e-9));
    if (steps > 0) {
      const double h = (target - t) / static_cast<double>(steps);
      for (long s = 0; s < steps; ++s) {
        const MatrixXcd k1 = rhs(rho, t);
        const MatrixXcd k2 = rhs(rho + 0.5 * h * k1, t + 0.5 * h);
        const MatrixXcd k3 = rhs(rho + 0.5 * h * k2, t + 0.5 * h);
        const MatrixXcd k4 = rhs(rho + h * k3, t + h);
        rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        rho = 0.5 * (rho + rho.adjoint()).eval();
        t += h;
      }
      t = target;
    }
    if (!rho.allFinite()) throw Error(ErrorCode::Numeric, "integrate_master: non-finite density matrix");
    const double lam = min_eigenvalue(rho);
    if (lam < -1e-6) {
      std::ostringstream msg;
      msg << "integrate_master: positivity lost at t=" << format_number(t) << " (eigenvalue "
          << format_number(lam) << "); reduce dt_oracle";
      throw Error(ErrorCode::Numeric, msg.str());
    }
    out.push_back(rho);
  }
  return out;
}

double suggested_oracle_step(const DenseModel& model, double max_dt) {
  // Crude bound on the generator norm; RK4 is stable for h*|lambda| < 2.7.
  double bound = 2.0 * model.hamiltonian.norm();
  if (model.hamiltonian_at) {
    for (double t : {0.5, 1.0, 2.0, 5.0}) bound = std::max(bound, 2.0 * model.hamiltonian_at(t).norm());
  }
  for (const auto& l : model.lindblads) bound += 2.0 * l.squaredNorm();
  if (bound <= 0.0) return max_dt;
  return std::min(max_dt, 0.5 / bound);
}

std::vector<std::vector<Complex>> oracle_expectations(const std::vector<MatrixXcd>& rhos,
                                                      const std::vector<MatrixXcd>& observables) {
  std::vector<std::vector<Complex>> out;
  for (const auto& rho : rhos) {
    auto& row = out.emplace_back();
    for (const auto& o : observables) {
      if (o.rows() != rho.rows() || o.cols() != rho.cols())
        throw Error(ErrorCode::StructureMismatch, "oracle_expectations: dimension mismatch");
      row.push_back((o * rho).trace());
    }
  }
  return out;
}

double trace_distance(const MatrixXcd& a, const MatrixXcd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::StructureMismatch, "trace_distance: dimension mismatch");
  const MatrixXcd d = 0.5 * ((a - b) + (a - b).adjoint());
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(d, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

ComparisonReport compare_ensemble(const std::vector<double>& times, const std::vector<std::vector<Complex>>& means,
                                  const std::vector<std::vector<Complex>>& standard_errors,
                                  const std::vector<std::vector<Complex>>& oracle,
                                  const std::vector<std::string>& names, double z, double abs_floor) {
  if (means.size() != times.size() || standard_errors.size() != times.size() || oracle.size() != times.size())
    throw Error(ErrorCode::StructureMismatch, "compare_ensemble: time grids differ");
  if (!(z >= 0.0) || !(abs_floor >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "compare_ensemble: z and abs_floor must be non-negative");
  ComparisonReport report;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (means[k].size() != names.size() || standard_errors[k].size() != names.size() ||
        oracle[k].size() != names.size())
      throw Error(ErrorCode::StructureMismatch, "compare_ensemble: operator lists differ");
    for (std::size_t i = 0; i < names.size(); ++i) {
      ComparisonRow row;
      row.op = i;
      row.name = names[i];
      row.t = times[k];
      row.mean = means[k][i];
      row.oracle = oracle[k][i];
      row.deviation = std::abs(row.mean - row.oracle);
      row.z_se = z * std::abs(standard_errors[k][i]);
      row.threshold = std::max(row.z_se, abs_floor);
      row.pass = row.deviation <= row.threshold;
      if (!row.pass) {
        report.all_pass = false;
        ++report.failures;
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::vector<ComparisonRow> ComparisonReport::worst(std::size_t count) const {
  std::vector<ComparisonRow> sorted = rows;
  std::stable_sort(sorted.begin(), sorted.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    return a.deviation / a.threshold > b.deviation / b.threshold;
  });
  if (sorted.size() > count) sorted.resize(count);
  return sorted;
}

namespace {

std::string complex_text(Complex z) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g%+.6gi", z.real(), z.imag());
  return buf;
}

}  // namespace

std::string ComparisonReport::table() const {
  std::size_t wname = 8;
  for (const auto& r : rows) wname = std::max(wname, r.name.size());
  std::ostringstream os;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-*s %8s %24s %24s %11s %11s %s\n", static_cast<int>(wname), "operator", "t",
                "mean", "oracle", "|d|", "z*SE", "result");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s %8.4g %24s %24s %11.4e %11.4e %s\n", static_cast<int>(wname),
                  r.name.c_str(), r.t, complex_text(r.mean).c_str(), complex_text(r.oracle).c_str(), r.deviation,
                  r.z_se, r.pass ? "PASS" : "FAIL");
    os << buf;
  }
  os << (all_pass ? "all " + std::to_string(rows.size()) + " comparisons PASS\n"
                  : std::to_string(failures) + " of " + std::to_string(rows.size()) + " comparisons FAIL\n");
  if (!all_pass) {
    os << "worst deviations:\n";
    for (const auto& r : worst(std::min<std::size_t>(5, failures)))
      os << "  " << r.name << " at t=" << format_number(r.t) << ": |d|=" << r.deviation
         << " > " << r.threshold << '\n';
  }
  return os.str();
}

OracleCheckResult oracle_check(const CompiledModel& model, const std::vector<std::string>& names, double z,
                               const LineCallback& on_line) {
  if (names.size() != model.outputs.operators.size())
    throw Error(ErrorCode::InvalidArgument, "oracle_check: one name per output operator is required");
  if (model.outputs.operators.empty()) throw Error(ErrorCode::Validation, "oracle_check: the model has no outputs");
  const auto specs = model.initial.freedoms();
  const DenseModel dm = dense_model(model.operators, specs);
  std::vector<MatrixXcd> observables;
  for (const auto& o : model.outputs.operators) observables.push_back(to_dense(o, specs, 0.0));

  OracleCheckResult result;
  result.ensemble = run_ensemble(model.initial, model.operators, model.run, model.outputs, std::nullopt, on_line);

  const Eigen::VectorXcd psi = to_vector(model.initial);
  const MatrixXcd rho0 = psi * psi.adjoint() / psi.squaredNorm();
  const double dt_oracle = suggested_oracle_step(dm, std::min(1e-3, model.run.dt));
  result.oracle = oracle_expectations(integrate_master(rho0, dm, result.ensemble.times, dt_oracle), observables);
  result.report = compare_ensemble(result.ensemble.times, result.ensemble.mean, result.ensemble.standard_error,
                                   result.oracle, names, z);
  return result;
}

}  // namespace qtraj
