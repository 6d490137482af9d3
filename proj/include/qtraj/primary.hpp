#pragma once

#include <cmath>
#include <cstddef>

#include "qtraj/state.hpp"
#include "qtraj/types.hpp"

namespace qtraj {

enum class PrimaryKind {
  Identity,
  Annihilation,  // hc gives the creation operator
  Number,
  PositionX,  // (a + a^dag)/sqrt(2)
  MomentumP,  // i(a^dag - a)/sqrt(2)
  SigmaPlus,
  SigmaMinus,
  SigmaZ,
  Transition,  // |i><j| on an ATOM
};

const char* to_string(PrimaryKind kind);

/// A kernel acting on one degree of freedom. Field kernels act as the
/// physical operator for a slice represented around a moving-basis center.
class PrimaryOperator {
 public:
  PrimaryOperator(PrimaryKind kind, std::size_t freedom);
  /// Transition operator |to><from| on an ATOM freedom.
  static PrimaryOperator transition(std::size_t freedom, int to, int from);

  PrimaryKind kind() const { return kind_; }
  std::size_t freedom() const { return freedom_; }
  int level_to() const { return to_; }
  int level_from() const { return from_; }
  /// Required physical type; Identity accepts any type.
  bool accepts(PhysicalType type) const;
  bool hermitian() const;

  friend bool operator==(const PrimaryOperator&, const PrimaryOperator&) = default;

 private:
  PrimaryKind kind_;
  std::size_t freedom_;
  int to_ = 0;
  int from_ = 0;
};

namespace kernels {

// In-place kernels on the first v.size() (used) levels of a slice. Anything
// pushed beyond the top used level is truncated.

/// a_phys = a + alpha, or a_phys^dag = a^dag + conj(alpha) when hc.
template <class View>
void annihilation(const View& v, bool hc) {
  const std::size_t n = v.size();
  const Complex alpha = hc ? std::conj(v.center()) : v.center();
  if (!hc) {
    for (std::size_t i = 0; i + 1 < n; ++i)
      v[i] = std::sqrt(static_cast<double>(i + 1)) * v[i + 1] + alpha * v[i];
    v[n - 1] *= alpha;
  } else {
    for (std::size_t i = n - 1; i > 0; --i)
      v[i] = std::sqrt(static_cast<double>(i)) * v[i - 1] + alpha * v[i];
    v[0] *= alpha;
  }
}

/// n_phys = n + alpha a^dag + conj(alpha) a + |alpha|^2.
template <class View>
void number(const View& v) {
  const std::size_t n = v.size();
  const Complex alpha = v.center();
  if (alpha == Complex{}) {
    for (std::size_t i = 1; i < n; ++i) v[i] *= static_cast<double>(i);
    v[0] = 0.0;
    return;
  }
  const double shift = std::norm(alpha);
  Complex prev{};
  for (std::size_t i = 0; i < n; ++i) {
    const Complex cur = v[i];
    Complex out = (static_cast<double>(i) + shift) * cur;
    if (i > 0) out += alpha * std::sqrt(static_cast<double>(i)) * prev;
    if (i + 1 < n) out += std::conj(alpha) * std::sqrt(static_cast<double>(i + 1)) * v[i + 1];
    prev = cur;
    v[i] = out;
  }
}

/// Quadrature c * a + d * a^dag + offset, used for X and P.
template <class View>
void quadrature(const View& v, Complex c_lower, Complex c_raise, Complex offset) {
  const std::size_t n = v.size();
  Complex prev{};
  for (std::size_t i = 0; i < n; ++i) {
    const Complex cur = v[i];
    Complex out = offset * cur;
    if (i > 0) out += c_raise * std::sqrt(static_cast<double>(i)) * prev;
    if (i + 1 < n) out += c_lower * std::sqrt(static_cast<double>(i + 1)) * v[i + 1];
    prev = cur;
    v[i] = out;
  }
}

template <class View>
void position(const View& v) {
  const double r = 1.0 / std::sqrt(2.0);
  quadrature(v, r, r, std::sqrt(2.0) * v.center().real());
}

template <class View>
void momentum(const View& v) {
  const double r = 1.0 / std::sqrt(2.0);
  quadrature(v, Complex(0.0, -r), Complex(0.0, r), std::sqrt(2.0) * v.center().imag());
}

/// sigma_+ in the basis {down, up}; hc gives sigma_-.
template <class View>
void sigma_plus(const View& v, bool hc) {
  if (!hc) {
    v[1] = v[0];
    v[0] = 0.0;
  } else {
    v[0] = v[1];
    v[1] = 0.0;
  }
}

template <class View>
void sigma_z(const View& v) {
  v[0] = -v[0];
}

/// |to><from|; hc swaps the roles.
template <class View>
void transition(const View& v, int to, int from, bool hc) {
  if (hc) std::swap(to, from);
  const std::size_t n = v.size();
  const auto ti = static_cast<std::size_t>(to);
  const auto fi = static_cast<std::size_t>(from);
  const Complex moved = fi < n ? v[fi] : Complex{};
  for (std::size_t i = 0; i < n; ++i) v[i] = 0.0;
  if (ti < n) v[ti] = moved;
}

}  // namespace kernels

}  // namespace qtraj
