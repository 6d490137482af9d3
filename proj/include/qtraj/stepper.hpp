#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "qtraj/operator.hpp"
#include "qtraj/state.hpp"

namespace qtraj {

/// The three unravelings of a Lindblad master equation.
enum class Unraveling { Qsd, Jump, OrthoJump };

const char* to_string(Unraveling u);
/// Jump-rate parameter lambda: 0 for Jump, 1 for OrthoJump (and QSD, where
/// it is unused).
double jump_lambda(Unraveling u);

/// Hamiltonian and Lindblad operators with cached Hermitian conjugates.
struct ModelOperators {
  Operator hamiltonian;
  std::vector<Operator> lindblads;
  std::vector<Operator> lindblads_hc;

  ModelOperators(Operator h, std::vector<Operator> ls);
  void validate(const State& layout) const;
};

/// Seeded random stream for one trajectory.
class NoiseSource {
 public:
  NoiseSource(std::uint64_t seed, std::uint64_t stream);

  /// Complex Wiener increment: real and imaginary parts independent
  /// normals of variance dt/2, so M|dxi|^2 = dt and M dxi^2 = 0.
  Complex complex_increment(double dt);
  double uniform();

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

struct StepStats {
  std::uint64_t adaptive_substeps = 0;  // accepted substeps
  std::uint64_t jumps = 0;
  std::uint64_t rate_warnings = 0;  // steps with total jump probability above 0.1
};

enum class IntegratorKind { Rk4, Adaptive };

struct IntegratorConfig {
  IntegratorKind kind = IntegratorKind::Adaptive;
  /// Per-amplitude error target of the adaptive scheme.
  double eps = 1e-6;
  /// Absolute floor of the per-amplitude error scale |c| + floor.
  double abs_floor = 1e-10;
};

/// Classical fourth-order Runge-Kutta and embedded Cash-Karp 4(5) schemes on
/// states. The derivative is a callable f(const State& psi, double t, State& out).
class RungeKutta {
 public:
  template <class F>
  void rk4_step(F&& f, State& psi, double t, double dt);

  /// Advances psi from t to exactly t + dt with accepted adaptive substeps.
  /// Returns the number of accepted substeps. The proposed substep size
  /// carries over between calls.
  template <class F>
  std::uint64_t rkck_adaptive(F&& f, State& psi, double t, double dt, double eps, double abs_floor = 1e-10);

  void reset_step_size() { h_ = 0.0; }

 private:
  template <class F>
  double rkck_try(F& f, const State& psi, double t, double h, double abs_floor);

  std::vector<State> k_;
  State stage_, trial_, err_;
  double h_ = 0.0;
};

/// One coarse step of length dt under a chosen unraveling: deterministic
/// part by RK4 or adaptive Cash-Karp, stochastic part by a single Euler step.
class Stepper {
 public:
  Stepper(ModelOperators model, Unraveling unraveling, IntegratorConfig integrator);

  /// Deterministic drift d|psi>/dt of the unraveling (psi normalized within 1e-8).
  void drift(const State& psi, double t, State& out);
  /// Advances psi over [t, t+dt] under the drift alone (no renormalization).
  void deterministic_advance(State& psi, double t, double dt);

  /// Advances a normalized psi by one coarse step; psi stays normalized.
  void step(State& psi, double t, double dt, NoiseSource& noise);

  const StepStats& stats() const { return stats_; }
  const ModelOperators& model() const { return model_; }
  Unraveling unraveling() const { return unraveling_; }

 private:
  void drift_unchecked(const State& psi, double t, State& out);
  void qsd_step(State& psi, double t, double dt, NoiseSource& noise);
  void jump_step(State& psi, double t, double dt, NoiseSource& noise);

  ModelOperators model_;
  Unraveling unraveling_;
  IntegratorConfig integrator_;
  RungeKutta rk_;
  Workspace ws_;
  std::vector<double> rates_;
  StepStats stats_;
};

// ---------------------------------------------------------------------------

template <class F>
void RungeKutta::rk4_step(F&& f, State& psi, double t, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "rk4 step needs dt > 0");
  k_.resize(4);
  f(psi, t, k_[0]);
  stage_.assign(psi);
  stage_.add_scaled(0.5 * dt, k_[0]);
  f(stage_, t + 0.5 * dt, k_[1]);
  stage_.assign(psi);
  stage_.add_scaled(0.5 * dt, k_[1]);
  f(stage_, t + 0.5 * dt, k_[2]);
  stage_.assign(psi);
  stage_.add_scaled(dt, k_[2]);
  f(stage_, t + dt, k_[3]);
  psi.add_scaled(dt / 6.0, k_[0]);
  psi.add_scaled(dt / 3.0, k_[1]);
  psi.add_scaled(dt / 3.0, k_[2]);
  psi.add_scaled(dt / 6.0, k_[3]);
}

// Cash-Karp tableau.
namespace rkck {
inline constexpr double a2 = 0.2, a3 = 0.3, a4 = 0.6, a5 = 1.0, a6 = 0.875;
inline constexpr double b21 = 0.2;
inline constexpr double b31 = 3.0 / 40.0, b32 = 9.0 / 40.0;
inline constexpr double b41 = 0.3, b42 = -0.9, b43 = 1.2;
inline constexpr double b51 = -11.0 / 54.0, b52 = 2.5, b53 = -70.0 / 27.0, b54 = 35.0 / 27.0;
inline constexpr double b61 = 1631.0 / 55296.0, b62 = 175.0 / 512.0, b63 = 575.0 / 13824.0,
                        b64 = 44275.0 / 110592.0, b65 = 253.0 / 4096.0;
inline constexpr double c1 = 37.0 / 378.0, c3 = 250.0 / 621.0, c4 = 125.0 / 594.0, c6 = 512.0 / 1771.0;
inline constexpr double dc1 = c1 - 2825.0 / 27648.0, dc3 = c3 - 18575.0 / 48384.0,
                        dc4 = c4 - 13525.0 / 55296.0, dc5 = -277.0 / 14336.0, dc6 = c6 - 0.25;
}  // namespace rkck

template <class F>
double RungeKutta::rkck_try(F& f, const State& psi, double t, double h, double abs_floor) {
  using namespace rkck;
  k_.resize(6);
  f(psi, t, k_[0]);
  stage_.assign(psi);
  stage_.add_scaled(h * b21, k_[0]);
  f(stage_, t + a2 * h, k_[1]);
  stage_.assign(psi);
  stage_.add_scaled(h * b31, k_[0]);
  stage_.add_scaled(h * b32, k_[1]);
  f(stage_, t + a3 * h, k_[2]);
  stage_.assign(psi);
  stage_.add_scaled(h * b41, k_[0]);
  stage_.add_scaled(h * b42, k_[1]);
  stage_.add_scaled(h * b43, k_[2]);
  f(stage_, t + a4 * h, k_[3]);
  stage_.assign(psi);
  stage_.add_scaled(h * b51, k_[0]);
  stage_.add_scaled(h * b52, k_[1]);
  stage_.add_scaled(h * b53, k_[2]);
  stage_.add_scaled(h * b54, k_[3]);
  f(stage_, t + a5 * h, k_[4]);
  stage_.assign(psi);
  stage_.add_scaled(h * b61, k_[0]);
  stage_.add_scaled(h * b62, k_[1]);
  stage_.add_scaled(h * b63, k_[2]);
  stage_.add_scaled(h * b64, k_[3]);
  stage_.add_scaled(h * b65, k_[4]);
  f(stage_, t + a6 * h, k_[5]);

  trial_.assign(psi);
  trial_.add_scaled(h * c1, k_[0]);
  trial_.add_scaled(h * c3, k_[2]);
  trial_.add_scaled(h * c4, k_[3]);
  trial_.add_scaled(h * c6, k_[5]);

  err_.assign(k_[0]);
  err_ *= h * dc1;
  err_.add_scaled(h * dc3, k_[2]);
  err_.add_scaled(h * dc4, k_[3]);
  err_.add_scaled(h * dc5, k_[4]);
  err_.add_scaled(h * dc6, k_[5]);

  // Max over amplitudes of |err| / (|c| + floor).
  double worst = 0.0;
  const auto y = psi.amplitudes();
  const auto e = err_.amplitudes();
  err_.for_each_used_run([&](std::size_t off, std::size_t len) {
    for (std::size_t i = off; i < off + len; ++i)
      worst = std::max(worst, std::abs(e[i]) / (std::abs(y[i]) + abs_floor));
  });
  return worst;
}

template <class F>
std::uint64_t RungeKutta::rkck_adaptive(F&& f, State& psi, double t, double dt, double eps,
                                        double abs_floor) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "adaptive step needs dt > 0");
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "adaptive step needs eps > 0");
  constexpr double kSafety = 0.9, kMaxGrow = 5.0, kMaxShrink = 0.1;
  const double t_end = t + dt;
  double h = (h_ > 0.0) ? std::min(h_, dt) : dt;
  std::uint64_t accepted = 0;
  double now = t;
  while (now < t_end) {
    const double remaining = t_end - now;
    const bool last = h >= remaining * (1.0 - 1e-12);
    const double h_try = last ? remaining : h;
    const double ratio = rkck_try(f, psi, now, h_try, abs_floor) / eps;
    if (ratio <= 1.0) {
      psi.assign(trial_);
      ++accepted;
      now = last ? t_end : now + h_try;
      const double grow = ratio > 0.0 ? kSafety * std::pow(ratio, -0.2) : kMaxGrow;
      const double proposal = h_try * std::min(grow, kMaxGrow);
      // A step clipped to the interval end does not shorten the proposal.
      h = (last && h_try < h) ? std::max(h, proposal) : proposal;
    } else {
      h = h_try * std::max(kSafety * std::pow(ratio, -0.25), kMaxShrink);
      if (h < dt * 1e-12)
        throw Error(ErrorCode::Numeric, "adaptive step size underflow (stiff or diverging drift)");
    }
  }
  h_ = h;
  return accepted;
}

}  // namespace qtraj
