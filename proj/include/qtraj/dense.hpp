#pragma once

#include <Eigen/Dense>
#include <span>

#include "qtraj/operator.hpp"

namespace qtraj {

inline constexpr std::size_t kDefaultDenseCap = 4096;

/// Dense matrix of `e` on the truncated space spanned by the used levels of
/// `freedoms` (row-major, freedom 0 slowest), including moving-basis
/// centers. Columns are images of basis vectors, so
/// to_dense(e) * psi.to_compact() == apply(e, psi).to_compact().
Eigen::MatrixXcd to_dense(const Operator& e, std::span<const FreedomSpec> freedoms, double t = 0.0,
                          std::size_t cap = kDefaultDenseCap);

/// Convenience overload using the layout of an existing state.
Eigen::MatrixXcd to_dense(const Operator& e, const State& layout, double t = 0.0,
                          std::size_t cap = kDefaultDenseCap);

Eigen::VectorXcd to_vector(const State& psi);

}  // namespace qtraj
