#pragma once

#include <random>
#include <vector>

#include "qtraj/operator.hpp"
#include "support/reference.hpp"

namespace ref {

using qtraj::FreedomSpec;
using qtraj::Operator;
using qtraj::PhysicalType;
using qtraj::PrimaryKind;
using qtraj::TimeFunction;

// Dense matrix of an operator tree built from the hand-written matrices
// in support/reference.hpp, walking the tree but never calling a kernel.
inline Mat reference_dense(const Operator& e, const std::vector<FreedomSpec>& layout, double t) {
  std::vector<int> dims;
  for (const auto& s : layout) dims.push_back(static_cast<int>(s.dim_used));
  int total = 1;
  for (int d : dims) total *= d;
  switch (e.node()) {
    case Operator::Node::Primary: {
      const auto& p = e.primary_op();
      const std::size_t k = p.freedom();
      const int d = dims[k];
      const C alpha = layout[k].center;
      Mat b;
      switch (p.kind()) {
        case PrimaryKind::Identity: return Mat::Identity(total, total);
        case PrimaryKind::Annihilation: b = ref::annihilation(d, alpha); break;
        case PrimaryKind::Number: b = ref::number(d, alpha); break;
        case PrimaryKind::PositionX: b = ref::position(d, alpha); break;
        case PrimaryKind::MomentumP: b = ref::momentum(d, alpha); break;
        case PrimaryKind::SigmaPlus: b = ref::sigma_plus(); break;
        case PrimaryKind::SigmaMinus: b = ref::sigma_minus(); break;
        case PrimaryKind::SigmaZ: b = ref::sigma_z(); break;
        case PrimaryKind::Transition: b = ref::transition(d, p.level_to(), p.level_from()); break;
      }
      if (e.hc_flag()) b = b.adjoint().eval();
      return ref::embed(b, dims, k);
    }
    case Operator::Node::Sum: {
      Mat m = Mat::Zero(total, total);
      for (const auto& c : e.children()) m += reference_dense(c, layout, t);
      return m;
    }
    case Operator::Node::Product: {
      Mat m = Mat::Identity(total, total);
      for (const auto& c : e.children()) m = m * reference_dense(c, layout, t);
      return m;
    }
    case Operator::Node::Scalar: return e.scalar() * reference_dense(e.children()[0], layout, t);
    case Operator::Node::TimeFn: return e.time_function().fn(t) * reference_dense(e.children()[0], layout, t);
    case Operator::Node::Power: {
      const Mat b = reference_dense(e.children()[0], layout, t);
      Mat m = Mat::Identity(total, total);
      for (int i = 0; i < e.exponent(); ++i) m = m * b;
      return m;
    }
  }
  return {};
}

struct TreeGen {
  std::mt19937_64 rng;
  std::vector<FreedomSpec> layout;

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }
  C scalar() {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    return {u(rng), u(rng)};
  }

  Operator leaf() {
    const auto k = static_cast<std::size_t>(pick(static_cast<int>(layout.size())));
    Operator op = Operator::identity();
    switch (layout[k].type) {
      case PhysicalType::Field: {
        const PrimaryKind kinds[] = {PrimaryKind::Annihilation, PrimaryKind::Number, PrimaryKind::PositionX,
                                     PrimaryKind::MomentumP, PrimaryKind::Identity};
        op = Operator::primary(kinds[pick(5)], k);
        break;
      }
      case PhysicalType::Spin: {
        const PrimaryKind kinds[] = {PrimaryKind::SigmaPlus, PrimaryKind::SigmaMinus, PrimaryKind::SigmaZ};
        op = Operator::primary(kinds[pick(3)], k);
        break;
      }
      case PhysicalType::Atom: {
        const int d = static_cast<int>(layout[k].dim_used);
        const int to = pick(d);
        const int from = (to + 1 + pick(d - 1)) % d;
        op = Operator::transition(k, to, from);
        break;
      }
    }
    return pick(3) == 0 ? op.hc() : op;
  }

  Operator tree(int depth) {
    if (depth <= 0 || pick(5) == 0) return leaf();
    switch (pick(7)) {
      case 0:
      case 1: {
        std::vector<Operator> terms;
        for (int i = 0, n = 2 + pick(3); i < n; ++i) terms.push_back(tree(depth - 1));
        return Operator::sum(terms);
      }
      case 2:
      case 3: {
        std::vector<Operator> factors;
        for (int i = 0, n = 2 + pick(2); i < n; ++i) factors.push_back(tree(depth - 1));
        return Operator::product(factors);
      }
      case 4: return Operator::scaled(scalar(), tree(depth - 1));
      case 5: {
        const double w = 0.5 + pick(4);
        TimeFunction f{[w](double t) { return C(std::cos(w * t), std::sin(2.0 * w * t)); }, "f(t)"};
        return Operator::time_scaled(f, tree(depth - 1));
      }
      default: return Operator::power(tree(depth - 1), 1 + pick(3));
    }
  }
};

}  // namespace ref
