#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "qtraj/primary.hpp"
#include "qtraj/state.hpp"

namespace qtraj {

/// Scalar function of time multiplying an operator subtree.
struct TimeFunction {
  std::function<Complex(double)> fn;
  std::string label;  // for printing only
};

/// Reusable scratch states for operator evaluation. Leases are released in
/// LIFO order. Not thread safe; give each thread its own.
class Workspace {
 public:
  class Lease {
   public:
    Lease(Workspace& ws, std::size_t slot) : ws_(&ws), slot_(slot) {}
    Lease(const Lease&) = delete;
    Lease& operator=(const Lease&) = delete;
    ~Lease() { --ws_->in_use_; }
    State& operator*() const { return ws_->pool_[slot_]; }
    State* operator->() const { return &ws_->pool_[slot_]; }

   private:
    Workspace* ws_;
    std::size_t slot_;
  };

  /// Borrows a scratch state holding a copy of `like`.
  Lease acquire(const State& like);
  std::size_t allocated() const { return pool_.size(); }

 private:
  std::deque<State> pool_;  // stable addresses while leases are live
  std::size_t in_use_ = 0;
};

/// Immutable operator expression tree over primary operators. Copies share
/// structure. Products apply their factors right to left.
class Operator {
 public:
  enum class Node { Primary, Sum, Product, Scalar, TimeFn, Power };

  static constexpr int kMaxPower = 32;

  Operator(const PrimaryOperator& primary);  // NOLINT(google-explicit-constructor)
  static Operator primary(PrimaryKind kind, std::size_t freedom);
  static Operator transition(std::size_t freedom, int to, int from);
  static Operator identity();

  static Operator sum(std::vector<Operator> terms);
  static Operator product(std::vector<Operator> factors);
  static Operator scaled(Complex z, Operator child);
  static Operator time_scaled(TimeFunction f, Operator child);
  static Operator power(Operator child, int k);

  Node node() const;
  /// Leaf data; valid for Node::Primary.
  const PrimaryOperator& primary_op() const;
  bool hc_flag() const;
  /// Children of Sum/Product, or the single child of Scalar/TimeFn/Power.
  const std::vector<Operator>& children() const;
  Complex scalar() const;
  const TimeFunction& time_function() const;
  int exponent() const;

  /// Hermitian conjugate, distributed down to the leaves.
  Operator hc() const;

  /// Throws unless every leaf matches a freedom of `layout` by index and type.
  void validate(const State& layout) const;
  /// Debug rendering of the tree.
  std::string to_string() const;

 private:
  struct Impl;
  explicit Operator(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

Operator operator+(const Operator& a, const Operator& b);
Operator operator-(const Operator& a, const Operator& b);
Operator operator-(const Operator& a);
Operator operator*(const Operator& a, const Operator& b);
Operator operator*(Complex z, const Operator& a);
Operator operator*(const Operator& a, Complex z);
Operator operator*(double x, const Operator& a);
Operator pow(const Operator& a, int k);

/// psi <- e psi, with scratch from `ws`. A single primary needs no scratch;
/// a Sum level needs one scratch state (two when it has more than two terms).
void apply_in_place(const Operator& e, State& psi, double t, Workspace& ws);
void apply_in_place(const Operator& e, State& psi, double t = 0.0);
/// Returns e psi.
State apply(const Operator& e, const State& psi, double t = 0.0);
/// Same as apply_in_place but skips validation; for hot loops whose
/// operators were validated once up front.
void apply_unchecked(const Operator& e, State& psi, double t, Workspace& ws);

}  // namespace qtraj
