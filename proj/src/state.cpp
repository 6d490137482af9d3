#include "qtraj/state.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qtraj/primary.hpp"

namespace qtraj {

const char* to_string(PhysicalType type) {
  switch (type) {
    case PhysicalType::Field: return "field";
    case PhysicalType::Spin: return "spin";
    case PhysicalType::Atom: return "atom";
  }
  return "?";
}

namespace {

void check_spec(const FreedomSpec& f) {
  if (f.dim_allocated == 0) throw Error(ErrorCode::InvalidArgument, "freedom dimension must be positive");
  if (f.dim_used == 0 || f.dim_used > f.dim_allocated)
    throw Error(ErrorCode::InvalidArgument, "dim_used must lie in [1, dim_allocated]");
  if (f.type == PhysicalType::Spin && f.dim_allocated != 2)
    throw Error(ErrorCode::InvalidArgument, "a SPIN freedom has dimension 2");
  if (f.type == PhysicalType::Atom && f.dim_allocated < 2)
    throw Error(ErrorCode::InvalidArgument, "an ATOM freedom needs at least 2 levels");
  if (f.type != PhysicalType::Field && f.center != Complex{})
    throw Error(ErrorCode::InvalidArgument, "only FIELD freedoms carry a moving-basis center");
}

}  // namespace

State State::zeros(std::vector<FreedomSpec> freedoms) {
  if (freedoms.empty()) throw Error(ErrorCode::InvalidArgument, "a state needs at least one freedom");
  if (freedoms.size() > detail::kMaxFreedoms)
    throw Error(ErrorCode::InvalidArgument,
                "at most " + std::to_string(detail::kMaxFreedoms) + " freedoms are supported");
  for (const auto& f : freedoms) check_spec(f);
  State s;
  s.freedoms_ = std::move(freedoms);
  s.rebuild_layout();
  s.amplitudes_.assign(std::accumulate(s.allocated_.begin(), s.allocated_.end(), std::size_t{1},
                                       std::multiplies<>()),
                       Complex{});
  return s;
}

State State::basis(std::size_t dim, std::size_t n, PhysicalType type) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
  if (n >= dim)
    throw Error(ErrorCode::InvalidArgument,
                "basis index " + std::to_string(n) + " out of range for dimension " + std::to_string(dim));
  State s = zeros({FreedomSpec{type, dim, dim, {}}});
  s.amplitudes_[n] = 1.0;
  return s;
}

State State::coherent(std::size_t dim, Complex alpha) {
  State s = zeros({FreedomSpec{PhysicalType::Field, dim, dim, {}}});
  // c_n = e^{-|alpha|^2/2} alpha^n / sqrt(n!), by recurrence.
  Complex c = std::exp(-0.5 * std::norm(alpha));
  for (std::size_t n = 0; n < dim; ++n) {
    s.amplitudes_[n] = c;
    c *= alpha / std::sqrt(static_cast<double>(n + 1));
  }
  s.normalize();
  return s;
}

State State::product(std::span<const State> parts) {
  if (parts.empty()) throw Error(ErrorCode::InvalidArgument, "product of an empty list of states");
  std::vector<FreedomSpec> specs;
  for (const auto& p : parts) {
    if (p.num_freedoms() != 1)
      throw Error(ErrorCode::InvalidArgument, "product_state expects single-freedom parts");
    specs.push_back(p.freedoms_[0]);
  }
  State s = zeros(std::move(specs));
  // Fill by accumulating the partial products one freedom at a time.
  std::vector<Complex> acc{1.0};
  for (const auto& p : parts) {
    std::vector<Complex> next;
    next.reserve(acc.size() * p.size());
    for (Complex a : acc)
      for (Complex b : p.amplitudes_) next.push_back(a * b);
    acc = std::move(next);
  }
  s.amplitudes_ = std::move(acc);
  return s;
}

State State::from_amplitudes(std::vector<FreedomSpec> freedoms, std::vector<Complex> amplitudes) {
  State s = zeros(std::move(freedoms));
  if (amplitudes.size() != s.amplitudes_.size())
    throw Error(ErrorCode::InvalidArgument, "expected " + std::to_string(s.amplitudes_.size()) +
                                                " amplitudes, got " + std::to_string(amplitudes.size()));
  s.amplitudes_ = std::move(amplitudes);
  // Anything outside the used box must be zero.
  std::vector<Complex> kept(s.amplitudes_.size());
  s.for_each_used_run([&](std::size_t off, std::size_t len) {
    std::copy_n(s.amplitudes_.begin() + off, len, kept.begin() + off);
  });
  if (kept != s.amplitudes_)
    throw Error(ErrorCode::InvalidArgument, "non-zero amplitude outside the used dimensions");
  return s;
}

void State::rebuild_layout() {
  const std::size_t m = freedoms_.size();
  allocated_.resize(m);
  used_.resize(m);
  strides_.resize(m);
  std::size_t stride = 1;
  for (std::size_t k = m; k-- > 0;) {
    allocated_[k] = freedoms_[k].dim_allocated;
    used_[k] = freedoms_[k].dim_used;
    strides_[k] = stride;
    stride *= allocated_[k];
  }
}

std::size_t State::used_size() const {
  return std::accumulate(used_.begin(), used_.end(), std::size_t{1}, std::multiplies<>());
}

Complex State::amplitude(std::span<const std::size_t> index) const {
  if (index.size() != freedoms_.size()) throw Error(ErrorCode::InvalidArgument, "index rank mismatch");
  std::size_t flat = 0;
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= allocated_[k]) throw Error(ErrorCode::InvalidArgument, "index out of range");
    flat += index[k] * strides_[k];
  }
  return amplitudes_[flat];
}

void State::set_amplitude(std::span<const std::size_t> index, Complex value) {
  if (index.size() != freedoms_.size()) throw Error(ErrorCode::InvalidArgument, "index rank mismatch");
  std::size_t flat = 0;
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= used_[k]) throw Error(ErrorCode::InvalidArgument, "index outside the used basis");
    flat += index[k] * strides_[k];
  }
  amplitudes_[flat] = value;
}

bool State::same_structure(const State& other) const {
  if (freedoms_.size() != other.freedoms_.size()) return false;
  for (std::size_t k = 0; k < freedoms_.size(); ++k) {
    if (freedoms_[k].type != other.freedoms_[k].type ||
        freedoms_[k].dim_allocated != other.freedoms_[k].dim_allocated)
      return false;
  }
  return true;
}

void State::check_compatible(const State& other, const char* what) const {
  if (!same_structure(other))
    throw Error(ErrorCode::StructureMismatch, std::string(what) + ": states have different freedom structure");
  for (std::size_t k = 0; k < freedoms_.size(); ++k) {
    if (freedoms_[k].center != other.freedoms_[k].center)
      throw Error(ErrorCode::StructureMismatch,
                  std::string(what) + ": states are expanded around different moving-basis centers");
  }
}

void State::grow_used_to(const State& other) {
  for (std::size_t k = 0; k < freedoms_.size(); ++k) {
    if (other.used_[k] > used_[k]) {
      used_[k] = other.used_[k];
      freedoms_[k].dim_used = used_[k];
    }
  }
}

State& State::add_scaled(Complex z, const State& source) {
  check_compatible(source, "add_scaled");
  grow_used_to(source);
  if (z == Complex{}) return *this;
  Complex* dst = amplitudes_.data();
  const Complex* src = source.amplitudes_.data();
  detail::for_each_run(source.used_, allocated_, strides_, [&](std::size_t off, std::size_t len) {
    for (std::size_t i = off; i < off + len; ++i) dst[i] += z * src[i];
  });
  return *this;
}

State& State::operator+=(const State& other) {
  check_compatible(other, "operator+=");
  grow_used_to(other);
  Complex* dst = amplitudes_.data();
  const Complex* src = other.amplitudes_.data();
  detail::for_each_run(other.used_, allocated_, strides_, [&](std::size_t off, std::size_t len) {
    for (std::size_t i = off; i < off + len; ++i) dst[i] += src[i];
  });
  return *this;
}

State& State::operator-=(const State& other) { return add_scaled(-1.0, other); }

State& State::operator*=(Complex z) {
  Complex* a = amplitudes_.data();
  for_each_used_run([&](std::size_t off, std::size_t len) {
    for (std::size_t i = off; i < off + len; ++i) a[i] *= z;
  });
  return *this;
}

void State::assign(const State& source) {
  if (!same_structure(source) || amplitudes_.size() != source.amplitudes_.size()) {
    *this = source;
    return;
  }
  set_zero();
  freedoms_ = source.freedoms_;
  used_ = source.used_;
  Complex* dst = amplitudes_.data();
  const Complex* src = source.amplitudes_.data();
  for_each_used_run([&](std::size_t off, std::size_t len) { std::copy_n(src + off, len, dst + off); });
}

void State::set_zero() {
  Complex* a = amplitudes_.data();
  for_each_used_run([&](std::size_t off, std::size_t len) { std::fill_n(a + off, len, Complex{}); });
}

double State::norm_squared() const {
  double sum = 0.0;
  const Complex* a = amplitudes_.data();
  for_each_used_run([&](std::size_t off, std::size_t len) {
    for (std::size_t i = off; i < off + len; ++i) sum += std::norm(a[i]);
  });
  return sum;
}

double State::norm() const { return std::sqrt(norm_squared()); }

void State::normalize() {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorCode::Numeric, "cannot normalize a state of norm " + std::to_string(n));
  *this *= 1.0 / n;
}

Complex inner_product(const State& bra, const State& ket) {
  bra.check_compatible(ket, "inner_product");
  std::vector<std::size_t> common(bra.used_.size());
  for (std::size_t k = 0; k < common.size(); ++k) common[k] = std::min(bra.used_[k], ket.used_[k]);
  Complex sum{};
  const Complex* a = bra.amplitudes_.data();
  const Complex* b = ket.amplitudes_.data();
  detail::for_each_run(common, bra.allocated_, bra.strides_, [&](std::size_t off, std::size_t len) {
    for (std::size_t i = off; i < off + len; ++i) sum += std::conj(a[i]) * b[i];
  });
  return sum;
}

void State::apply_primary(const PrimaryOperator& op, bool hc, double t) {
  (void)t;  // shipped kernels are time independent
  const std::size_t k = op.freedom();
  if (k >= freedoms_.size())
    throw Error(ErrorCode::TypeMismatch, std::string(to_string(op.kind())) + " acts on freedom " +
                                             std::to_string(k) + " but the state has " +
                                             std::to_string(freedoms_.size()));
  if (!op.accepts(freedoms_[k].type))
    throw Error(ErrorCode::TypeMismatch, std::string(to_string(op.kind())) + " cannot act on a " +
                                             to_string(freedoms_[k].type) + " freedom");
  switch (op.kind()) {
    case PrimaryKind::Identity:
      break;
    case PrimaryKind::Annihilation:
      for_each_slice(k, [hc](const SliceView& v) { kernels::annihilation(v, hc); });
      break;
    case PrimaryKind::Number:
      for_each_slice(k, [](const SliceView& v) { kernels::number(v); });
      break;
    case PrimaryKind::PositionX:
      for_each_slice(k, [](const SliceView& v) { kernels::position(v); });
      break;
    case PrimaryKind::MomentumP:
      for_each_slice(k, [](const SliceView& v) { kernels::momentum(v); });
      break;
    case PrimaryKind::SigmaPlus:
      for_each_slice(k, [hc](const SliceView& v) { kernels::sigma_plus(v, hc); });
      break;
    case PrimaryKind::SigmaMinus:
      for_each_slice(k, [hc](const SliceView& v) { kernels::sigma_plus(v, !hc); });
      break;
    case PrimaryKind::SigmaZ:
      for_each_slice(k, [](const SliceView& v) { kernels::sigma_z(v); });
      break;
    case PrimaryKind::Transition: {
      const int to = op.level_to(), from = op.level_from();
      for_each_slice(k, [=](const SliceView& v) { kernels::transition(v, to, from, hc); });
      break;
    }
  }
}

std::vector<Complex> State::to_compact() const {
  std::vector<Complex> out;
  out.reserve(used_size());
  for_each_used_run([&](std::size_t off, std::size_t len) {
    out.insert(out.end(), amplitudes_.begin() + off, amplitudes_.begin() + off + len);
  });
  return out;
}

std::size_t State::compact_to_flat(std::size_t j) const {
  std::size_t flat = 0;
  for (std::size_t k = freedoms_.size(); k-- > 0;) {
    flat += (j % used_[k]) * strides_[k];
    j /= used_[k];
  }
  return flat;
}

void State::set_center(std::size_t k, Complex center) {
  if (freedoms_.at(k).type != PhysicalType::Field)
    throw Error(ErrorCode::TypeMismatch, "only FIELD freedoms have a moving-basis center");
  freedoms_[k].center = center;
}

void State::set_dim_used(std::size_t k, std::size_t dim_used) {
  auto& f = freedoms_.at(k);
  if (dim_used == 0 || dim_used > f.dim_allocated)
    throw Error(ErrorCode::InvalidArgument, "dim_used must lie in [1, dim_allocated]");
  if (f.type == PhysicalType::Spin && dim_used != 2)
    throw Error(ErrorCode::InvalidArgument, "a SPIN freedom always uses both levels");
  if (dim_used < used_[k]) {
    // Zero the slab n_k in [dim_used, used) inside the current used box.
    for_each_slice(k, [&](const SliceView& v) {
      for (std::size_t i = dim_used; i < v.size(); ++i) v[i] = 0.0;
    });
  }
  f.dim_used = dim_used;
  used_[k] = dim_used;
}

State operator+(State a, const State& b) { return a += b; }
State operator-(State a, const State& b) { return a -= b; }
State operator*(Complex z, State a) { return a *= z; }
State operator*(double x, State a) { return a *= Complex(x, 0.0); }

}  // namespace qtraj
