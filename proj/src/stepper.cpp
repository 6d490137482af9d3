#include "qtraj/stepper.hpp"

#include <cmath>
#include <string>

namespace qtraj {

const char* to_string(Unraveling u) {
  switch (u) {
    case Unraveling::Qsd: return "qsd";
    case Unraveling::Jump: return "jump";
    case Unraveling::OrthoJump: return "orthojump";
  }
  return "?";
}

double jump_lambda(Unraveling u) { return u == Unraveling::Jump ? 0.0 : 1.0; }

ModelOperators::ModelOperators(Operator h, std::vector<Operator> ls)
    : hamiltonian(std::move(h)), lindblads(std::move(ls)) {
  lindblads_hc.reserve(lindblads.size());
  for (const auto& l : lindblads) lindblads_hc.push_back(l.hc());
}

void ModelOperators::validate(const State& layout) const {
  hamiltonian.validate(layout);
  for (const auto& l : lindblads) l.validate(layout);
}

NoiseSource::NoiseSource(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

Complex NoiseSource::complex_increment(double dt) {
  const double s = std::sqrt(0.5 * dt);
  const double re = normal_(engine_);
  const double im = normal_(engine_);
  return {s * re, s * im};
}

double NoiseSource::uniform() { return uniform_(engine_); }

Stepper::Stepper(ModelOperators model, Unraveling unraveling, IntegratorConfig integrator)
    : model_(std::move(model)), unraveling_(unraveling), integrator_(integrator) {
  if (integrator_.kind == IntegratorKind::Adaptive && !(integrator_.eps > 0.0))
    throw Error(ErrorCode::InvalidArgument, "adaptive integrator needs eps > 0");
  rates_.resize(model_.lindblads.size());
}

void Stepper::drift(const State& psi, double t, State& out) {
  model_.validate(psi);
  const double n2 = psi.norm_squared();
  if (std::abs(n2 - 1.0) > 2e-8) throw Error(ErrorCode::InvalidArgument, "drift expects a normalized state");
  drift_unchecked(psi, t, out);
}

// Expectations are taken relative to <psi|psi>, which differs from one only
// inside Runge-Kutta stages.
void Stepper::drift_unchecked(const State& psi, double t, State& out) {
  out.assign(psi);
  apply_unchecked(model_.hamiltonian, out, t, ws_);
  out *= -kI;
  if (model_.lindblads.empty()) return;
  const double n2 = psi.norm_squared();
  for (std::size_t j = 0; j < model_.lindblads.size(); ++j) {
    auto l_psi = ws_.acquire(psi);
    apply_unchecked(model_.lindblads[j], *l_psi, t, ws_);
    const Complex mean_l = inner_product(psi, *l_psi) / n2;
    const double mean_ldl = l_psi->norm_squared() / n2;
    const double abs2 = std::norm(mean_l);
    auto ldl_psi = ws_.acquire(*l_psi);
    apply_unchecked(model_.lindblads_hc[j], *ldl_psi, t, ws_);
    out.add_scaled(-0.5, *ldl_psi);
    switch (unraveling_) {
      case Unraveling::Qsd:
        out.add_scaled(std::conj(mean_l), *l_psi);
        out.add_scaled(-0.5 * abs2, psi);
        break;
      case Unraveling::Jump:
        out.add_scaled(0.5 * mean_ldl, psi);
        break;
      case Unraveling::OrthoJump:
        out.add_scaled(std::conj(mean_l), *l_psi);
        out.add_scaled(0.5 * mean_ldl - abs2, psi);
        break;
    }
  }
}

void Stepper::deterministic_advance(State& psi, double t, double dt) {
  auto f = [this](const State& y, double s, State& out) { drift_unchecked(y, s, out); };
  if (integrator_.kind == IntegratorKind::Rk4) {
    rk_.rk4_step(f, psi, t, dt);
    ++stats_.adaptive_substeps;
  } else {
    stats_.adaptive_substeps += rk_.rkck_adaptive(f, psi, t, dt, integrator_.eps, integrator_.abs_floor);
  }
}

void Stepper::step(State& psi, double t, double dt, NoiseSource& noise) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "step needs dt > 0");
  if (unraveling_ == Unraveling::Qsd)
    qsd_step(psi, t, dt, noise);
  else
    jump_step(psi, t, dt, noise);
}

void Stepper::qsd_step(State& psi, double t, double dt, NoiseSource& noise) {
  deterministic_advance(psi, t, dt);
  if (!model_.lindblads.empty()) {
    const double n2 = psi.norm_squared();
    auto kick = ws_.acquire(psi);
    kick->set_zero();
    for (std::size_t j = 0; j < model_.lindblads.size(); ++j) {
      auto l_psi = ws_.acquire(psi);
      apply_unchecked(model_.lindblads[j], *l_psi, t + dt, ws_);
      const Complex mean_l = inner_product(psi, *l_psi) / n2;
      const Complex dxi = noise.complex_increment(dt);
      kick->add_scaled(dxi, *l_psi);
      kick->add_scaled(-mean_l * dxi, psi);
    }
    psi += *kick;
  }
  const double n = psi.norm();
  if (!(n > 1e-12)) throw Error(ErrorCode::Numeric, "state norm collapsed during QSD step");
  psi *= 1.0 / n;
}

void Stepper::jump_step(State& psi, double t, double dt, NoiseSource& noise) {
  const std::size_t nl = model_.lindblads.size();
  if (nl == 0) {
    deterministic_advance(psi, t, dt);
    psi.normalize();
    return;
  }
  const double lambda = jump_lambda(unraveling_);
  const double n2 = psi.norm_squared();
  double total = 0.0;
  for (std::size_t j = 0; j < nl; ++j) {
    auto l_psi = ws_.acquire(psi);
    apply_unchecked(model_.lindblads[j], *l_psi, t, ws_);
    const double mean_ldl = l_psi->norm_squared() / n2;
    const double abs2 = std::norm(inner_product(psi, *l_psi) / n2);
    double rate = mean_ldl - lambda * abs2;
    // Eigenstates of L give an exactly vanishing variance up to roundoff.
    if (std::abs(rate) <= 1e-14 * mean_ldl) rate = 0.0;
    if (rate < -1e-12)
      throw Error(ErrorCode::Numeric, "negative jump rate " + std::to_string(rate) + " for Lindblad operator " +
                                          std::to_string(j));
    rates_[j] = std::max(rate, 0.0) * dt;
    total += rates_[j];
  }
  if (total > 0.5)
    throw Error(ErrorCode::Numeric, "jump probability per step " + std::to_string(total) +
                                        " exceeds 0.5; reduce dt");
  if (total > 0.1) ++stats_.rate_warnings;

  const double u = noise.uniform();
  if (u < total) {
    std::size_t j = 0;
    double cum = rates_[0];
    while (j + 1 < nl && u >= cum) cum += rates_[++j];
    auto l_psi = ws_.acquire(psi);
    apply_unchecked(model_.lindblads[j], *l_psi, t, ws_);
    if (lambda != 0.0) {
      const Complex mean_l = inner_product(psi, *l_psi) / n2;
      l_psi->add_scaled(-mean_l, psi);
    }
    const double n = l_psi->norm();
    if (!(n > 0.0)) throw Error(ErrorCode::Numeric, "zero-norm jump state");
    psi.assign(*l_psi);
    psi *= 1.0 / n;
    ++stats_.jumps;
    return;
  }
  deterministic_advance(psi, t, dt);
  psi.normalize();
}

}  // namespace qtraj
