#include "qtraj/dense.hpp"

#include <string>

namespace qtraj {

Eigen::MatrixXcd to_dense(const Operator& e, std::span<const FreedomSpec> freedoms, double t,
                          std::size_t cap) {
  std::vector<FreedomSpec> compact(freedoms.begin(), freedoms.end());
  std::size_t dim = 1;
  for (auto& f : compact) {
    f.dim_allocated = f.dim_used;
    dim *= f.dim_used;
    if (dim > cap)
      throw Error(ErrorCode::InvalidArgument,
                  "dense dimension exceeds the cap of " + std::to_string(cap));
  }
  State basis = State::zeros(compact);
  e.validate(basis);
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  Workspace ws;
  for (std::size_t j = 0; j < dim; ++j) {
    // The layout is compact, so flat and compact indices coincide.
    std::vector<Complex> amps(dim);
    amps[j] = 1.0;
    State column = State::from_amplitudes(compact, std::move(amps));
    apply_unchecked(e, column, t, ws);
    const auto a = column.amplitudes();
    for (std::size_t i = 0; i < dim; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[i];
  }
  return m;
}

Eigen::MatrixXcd to_dense(const Operator& e, const State& layout, double t, std::size_t cap) {
  return to_dense(e, layout.freedoms(), t, cap);
}

Eigen::VectorXcd to_vector(const State& psi) {
  const auto c = psi.to_compact();
  Eigen::VectorXcd v(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) v(static_cast<Eigen::Index>(i)) = c[i];
  return v;
}

}  // namespace qtraj
