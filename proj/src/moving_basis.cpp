#include "qtraj/moving_basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace qtraj {

void MovingBasisParams::validate() const {
  if (!(shift_accuracy > 0.0)) throw Error(ErrorCode::InvalidArgument, "shift_accuracy must be positive");
  if (!(cutoff_epsilon > 0.0 && cutoff_epsilon < 0.5))
    throw Error(ErrorCode::InvalidArgument, "cutoff epsilon must lie in (0, 0.5)");
  if (pad_size < 1) throw Error(ErrorCode::InvalidArgument, "pad size must be at least 1");
}

namespace {

// Largest sub-step |delta| for the Taylor series.
constexpr double kMaxSubstep = 0.5;
constexpr int kMaxTerms = 400;

struct DisplaceBuffers {
  std::vector<Complex> sum, term, next;
};

// y <- g y with g = -d a^dag + conj(d) a on n levels.
void apply_generator(const std::vector<Complex>& y, std::vector<Complex>& out, Complex d, std::size_t n) {
  const Complex dc = std::conj(d);
  for (std::size_t i = 0; i < n; ++i) {
    Complex v{};
    if (i > 0) v -= d * std::sqrt(static_cast<double>(i)) * y[i - 1];
    if (i + 1 < n) v += dc * std::sqrt(static_cast<double>(i + 1)) * y[i + 1];
    out[i] = v;
  }
}

double vec_norm(const std::vector<Complex>& y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::norm(y[i]);
  return std::sqrt(s);
}

void displace_impl(const SliceView& v, Complex delta, double accuracy, DisplaceBuffers& buf) {
  const std::size_t n = v.size();
  buf.sum.resize(n);
  buf.term.resize(n);
  buf.next.resize(n);
  for (std::size_t i = 0; i < n; ++i) buf.sum[i] = v[i];
  const double scale = vec_norm(buf.sum, n);
  if (scale == 0.0) return;
  const int substeps = std::max(1, static_cast<int>(std::ceil(std::abs(delta) / kMaxSubstep)));
  const Complex d = delta / static_cast<double>(substeps);
  for (int s = 0; s < substeps; ++s) {
    buf.term = buf.sum;
    for (int k = 1; k <= kMaxTerms; ++k) {
      apply_generator(buf.term, buf.next, d, n);
      const double inv_k = 1.0 / k;
      for (std::size_t i = 0; i < n; ++i) {
        buf.term[i] = buf.next[i] * inv_k;
        buf.sum[i] += buf.term[i];
      }
      if (vec_norm(buf.term, n) < accuracy * scale) break;
    }
  }
  for (std::size_t i = 0; i < n; ++i) v[i] = buf.sum[i];
}

void require_field(const State& psi, std::size_t freedom, const char* what) {
  if (freedom >= psi.num_freedoms())
    throw Error(ErrorCode::InvalidArgument, std::string(what) + ": freedom out of range");
  if (psi.freedom(freedom).type != PhysicalType::Field)
    throw Error(ErrorCode::TypeMismatch, std::string(what) + ": freedom " + std::to_string(freedom) +
                                             " is not a FIELD");
}

}  // namespace

void displace_slice(const SliceView& coeffs, Complex delta, double accuracy) {
  if (!(accuracy > 0.0)) throw Error(ErrorCode::InvalidArgument, "displacement accuracy must be positive");
  if (delta == Complex{}) return;
  DisplaceBuffers buf;
  displace_impl(coeffs, delta, accuracy, buf);
}

void move_coords(State& psi, Complex displacement, std::size_t freedom, double shift_accuracy) {
  require_field(psi, freedom, "move_coords");
  if (!(shift_accuracy > 0.0)) throw Error(ErrorCode::InvalidArgument, "shift accuracy must be positive");
  if (displacement == Complex{}) return;
  psi.set_dim_used(freedom, psi.freedom(freedom).dim_allocated);
  DisplaceBuffers buf;
  psi.for_each_slice(freedom, [&](const SliceView& v) { displace_impl(v, displacement, shift_accuracy, buf); });
  psi.set_center(freedom, psi.freedom(freedom).center + displacement);
}

Complex local_annihilation_expectation(const State& psi, std::size_t freedom) {
  require_field(psi, freedom, "local_annihilation_expectation");
  Complex sum{};
  psi.for_each_slice(freedom, [&](const ConstSliceView& v) {
    for (std::size_t i = 0; i + 1 < v.size(); ++i)
      sum += std::conj(v[i]) * std::sqrt(static_cast<double>(i + 1)) * v[i + 1];
  });
  return sum / psi.norm_squared();
}

void recenter(State& psi, std::size_t freedom, double shift_accuracy) {
  const Complex delta = local_annihilation_expectation(psi, freedom);
  if (std::abs(delta) < shift_accuracy) return;
  move_coords(psi, delta, freedom, shift_accuracy);
}

double adjust_cutoff(State& psi, std::size_t freedom, double epsilon, int pad_size) {
  if (freedom >= psi.num_freedoms()) throw Error(ErrorCode::InvalidArgument, "adjust_cutoff: freedom out of range");
  const auto& spec = psi.freedom(freedom);
  if (spec.type == PhysicalType::Spin)
    throw Error(ErrorCode::TypeMismatch, "adjust_cutoff applies to FIELD and ATOM freedoms only");
  if (pad_size < 1) throw Error(ErrorCode::InvalidArgument, "pad size must be at least 1");

  const std::size_t used = spec.dim_used;
  const std::size_t alloc = spec.dim_allocated;
  const auto pad = static_cast<std::size_t>(pad_size);

  std::vector<double> prob(used, 0.0);
  std::as_const(psi).for_each_slice(freedom, [&](const ConstSliceView& v) {
    for (std::size_t i = 0; i < v.size(); ++i) prob[i] += std::norm(v[i]);
  });
  double total = 0.0;
  for (double p : prob) total += p;
  if (!(total > 0.0)) throw Error(ErrorCode::Numeric, "adjust_cutoff on a zero state");
  for (double& p : prob) p /= total;
  // Probability of the top `pad` levels of a basis of size d; levels beyond
  // the current used range are empty.
  auto top = [&](std::size_t d) {
    double s = 0.0;
    for (std::size_t i = d > pad ? d - pad : 0; i < std::min(d, used); ++i) s += prob[i];
    return s;
  };

  std::size_t d = used;
  if (top(d) > epsilon) {
    while (d < alloc && top(d) > epsilon) d = std::min(alloc, d + pad);
    if (d != used) psi.set_dim_used(freedom, d);
    return 0.0;
  }
  double discarded = 0.0;
  while (d > 1) {
    const std::size_t smaller = d - 1;
    if (top(smaller) > epsilon || discarded + prob[smaller] > epsilon) break;
    discarded += prob[smaller];
    d = smaller;
  }
  if (d != used) {
    psi.set_dim_used(freedom, d);
    if (discarded > 0.0) psi.normalize();
  }
  return discarded;
}

}  // namespace qtraj
