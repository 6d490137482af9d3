#pragma once

#include <cstddef>

#include "qtraj/state.hpp"

namespace qtraj {

/// Moving-basis and dynamic-truncation settings.
struct MovingBasisParams {
  bool enabled = false;
  double shift_accuracy = 1e-6;
  /// Cutoff probability: the top `pad_size` levels may hold at most this much.
  double cutoff_epsilon = 0.01;
  int pad_size = 2;
  /// Freedoms 0..n_moving_freedoms-1 are recentered; they must be FIELD.
  std::size_t n_moving_freedoms = 0;

  void validate() const;
};

/// coeffs <- D(-delta) coeffs, re-expressing a slice in a basis whose
/// center is shifted by +delta. Uses a sub-stepped Taylor series of the
/// (anti-Hermitian, tridiagonal) generator; each sub-step stops once the
/// appended term falls below accuracy relative to the slice norm.
void displace_slice(const SliceView& coeffs, Complex delta, double accuracy);

/// Shifts the center of FIELD freedom `freedom` by `displacement` without
/// changing the physical state. The freedom's used dimension is opened up to
/// its allocation; adjust_cutoff trims it again.
void move_coords(State& psi, Complex displacement, std::size_t freedom, double shift_accuracy);

/// <a_local> for one freedom: the annihilation expectation relative to the
/// current center.
Complex local_annihilation_expectation(const State& psi, std::size_t freedom);

/// Moves the center of a FIELD freedom onto <a_phys>. No-op when the shift
/// is below shift_accuracy.
void recenter(State& psi, std::size_t freedom, double shift_accuracy);

/// Grows or shrinks dim_used of a FIELD/ATOM freedom so that the top
/// pad_size used levels hold at most `epsilon` of the probability. Returns
/// the discarded probability (zero unless the basis shrank).
double adjust_cutoff(State& psi, std::size_t freedom, double epsilon, int pad_size);

}  // namespace qtraj
