#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <type_traits>
#include <vector>

#include "qtraj/types.hpp"

namespace qtraj {

class PrimaryOperator;

/// Per-freedom layout of a product state.
struct FreedomSpec {
  PhysicalType type = PhysicalType::Field;
  std::size_t dim_allocated = 1;
  std::size_t dim_used = 1;
  /// Moving-basis center alpha = (q + ip)/sqrt(2); always zero for SPIN and ATOM.
  Complex center{};

  friend bool operator==(const FreedomSpec&, const FreedomSpec&) = default;
};

/// A single-freedom slice of a product state: `size` amplitudes spaced
/// `stride` apart. Primary-operator kernels only ever see this view.
template <class T>
class BasicSliceView {
 public:
  BasicSliceView(T* data, std::size_t stride, std::size_t size, Complex center)
      : data_(data), stride_(stride), size_(size), center_(center) {}

  T& operator[](std::size_t i) const { return data_[i * stride_]; }
  std::size_t size() const { return size_; }
  Complex center() const { return center_; }

 private:
  T* data_;
  std::size_t stride_;
  std::size_t size_;
  Complex center_;
};

using SliceView = BasicSliceView<Complex>;
using ConstSliceView = BasicSliceView<const Complex>;

namespace detail {

inline constexpr std::size_t kMaxFreedoms = 16;

// Visits the sub-box `extent` (per-freedom counts, each <= allocated) of a
// row-major array as maximal contiguous runs f(offset, length). Trailing
// freedoms that are fully covered collapse into the run.
template <class F>
void for_each_run(std::span<const std::size_t> extent, std::span<const std::size_t> allocated,
                  std::span<const std::size_t> strides, F&& f) {
  const std::size_t m = extent.size();
  if (m == 0) return;
  std::size_t j = m - 1;
  while (j > 0 && extent[j] == allocated[j]) --j;
  if (j == 0 && extent[0] == allocated[0]) {
    f(std::size_t{0}, extent[0] * strides[0]);
    return;
  }
  // Freedoms after j are full, so a run spans extent[j] * strides[j].
  const std::size_t run = extent[j] * strides[j];
  std::array<std::size_t, kMaxFreedoms> idx{};
  std::size_t offset = 0;
  for (;;) {
    f(offset, run);
    std::ptrdiff_t k = static_cast<std::ptrdiff_t>(j) - 1;
    for (; k >= 0; --k) {
      ++idx[k];
      offset += strides[k];
      if (idx[k] < extent[k]) break;
      offset -= idx[k] * strides[k];
      idx[k] = 0;
    }
    if (k < 0) return;
  }
}

}  // namespace detail

/// Pure state in a truncated product Hilbert space.
///
/// Amplitudes are stored row-major over the allocated dimensions with
/// freedom 0 varying slowest. Only the box n_j < dim_used(j) may hold
/// non-zero amplitudes; every operation keeps the rest exactly zero.
class State {
 public:
  State() = default;

  /// Basis state |n> of a single freedom. SPIN requires dim == 2
  /// (n = 0 is spin down).
  static State basis(std::size_t dim, std::size_t n, PhysicalType type);
  /// Truncated coherent state, renormalized over the kept amplitudes.
  static State coherent(std::size_t dim, Complex alpha);
  /// Tensor product of single-freedom states, freedoms in list order.
  static State product(std::span<const State> parts);
  /// Explicit amplitudes over the allocated layout of `freedoms`.
  static State from_amplitudes(std::vector<FreedomSpec> freedoms, std::vector<Complex> amplitudes);
  /// All-zero state with the given layout.
  static State zeros(std::vector<FreedomSpec> freedoms);

  std::size_t num_freedoms() const { return freedoms_.size(); }
  const FreedomSpec& freedom(std::size_t k) const { return freedoms_.at(k); }
  std::span<const FreedomSpec> freedoms() const { return freedoms_; }
  std::size_t stride(std::size_t k) const { return strides_[k]; }

  /// Number of allocated amplitudes (product of dim_allocated).
  std::size_t size() const { return amplitudes_.size(); }
  /// Product of dim_used; the reported basis size.
  std::size_t used_size() const;

  std::span<const Complex> amplitudes() const { return amplitudes_; }
  Complex amplitude(std::span<const std::size_t> index) const;
  /// Sets one amplitude; the index must lie inside the used box.
  void set_amplitude(std::span<const std::size_t> index, Complex value);

  bool same_structure(const State& other) const;

  State& operator+=(const State& other);
  State& operator-=(const State& other);
  State& operator*=(Complex z);
  /// this += z * source.
  State& add_scaled(Complex z, const State& source);
  /// Copies `source` into this state, reusing storage when the layout matches.
  void assign(const State& source);
  void set_zero();

  double norm_squared() const;
  double norm() const;
  void normalize();

  /// Applies a primary operator (or its Hermitian conjugate) to every slice
  /// along the operator's freedom.
  void apply_primary(const PrimaryOperator& op, bool hc, double t);

  /// Calls f(view) for every used slice along freedom k. The loops over
  /// the other freedoms collapse into one when k is first or last.
  template <class F>
  void for_each_slice(std::size_t k, F&& f) {
    visit_slices(*this, k, f);
  }
  template <class F>
  void for_each_slice(std::size_t k, F&& f) const {
    visit_slices(*this, k, f);
  }

  /// Calls f(offset, length) for the contiguous runs covering the used box.
  template <class F>
  void for_each_used_run(F&& f) const {
    detail::for_each_run(used_, allocated_, strides_, f);
  }

  /// Dense vector over the used box (row-major in used dimensions).
  std::vector<Complex> to_compact() const;
  /// Flat storage index of compact index j.
  std::size_t compact_to_flat(std::size_t j) const;

  // Moving-basis support. These change the representation, not the
  // amplitudes; callers are responsible for keeping the physics consistent.
  void set_center(std::size_t k, Complex center);
  /// Changes dim_used of freedom k. Shrinking zeroes the dropped amplitudes.
  void set_dim_used(std::size_t k, std::size_t dim_used);

  friend Complex inner_product(const State& bra, const State& ket);

 private:
  template <class Self, class F>
  static void visit_slices(Self& self, std::size_t k, F& f);

  void rebuild_layout();
  void check_compatible(const State& other, const char* what) const;
  void grow_used_to(const State& other);

  std::vector<FreedomSpec> freedoms_;
  std::vector<std::size_t> allocated_;
  std::vector<std::size_t> used_;
  std::vector<std::size_t> strides_;
  std::vector<Complex> amplitudes_;
};

Complex inner_product(const State& bra, const State& ket);

State operator+(State a, const State& b);
State operator-(State a, const State& b);
State operator*(Complex z, State a);
State operator*(double x, State a);

template <class Self, class F>
void State::visit_slices(Self& self, std::size_t k, F& f) {
  using Value = std::remove_pointer_t<decltype(self.amplitudes_.data())>;
  using View = BasicSliceView<Value>;
  const std::size_t m = self.freedoms_.size();
  const std::size_t stride = self.strides_[k];
  const std::size_t len = self.used_[k];
  const Complex center = self.freedoms_[k].center;
  Value* data = self.amplitudes_.data();
  auto inner = [&](std::size_t base) {
    if (k + 1 == m) {
      f(View(data + base, 1, len, center));
      return;
    }
    detail::for_each_run(std::span(self.used_).subspan(k + 1),
                         std::span(self.allocated_).subspan(k + 1),
                         std::span(self.strides_).subspan(k + 1),
                         [&](std::size_t off, std::size_t run) {
                           for (std::size_t r = 0; r < run; ++r)
                             f(View(data + base + off + r, stride, len, center));
                         });
  };
  if (k == 0) {
    inner(0);
    return;
  }
  // Outer loop over the used box of the freedoms before k.
  std::array<std::size_t, detail::kMaxFreedoms> idx{};
  std::size_t offset = 0;
  for (;;) {
    inner(offset);
    std::ptrdiff_t j = static_cast<std::ptrdiff_t>(k) - 1;
    for (; j >= 0; --j) {
      ++idx[j];
      offset += self.strides_[j];
      if (idx[j] < self.used_[j]) break;
      offset -= idx[j] * self.strides_[j];
      idx[j] = 0;
    }
    if (j < 0) return;
  }
}

}  // namespace qtraj
