#include "qtraj/operator.hpp"

#include <sstream>

namespace qtraj {

struct Operator::Impl {
  Node node;
  PrimaryOperator primary{PrimaryKind::Identity, 0};
  bool hc = false;
  std::vector<Operator> children;
  Complex scalar{1.0};
  TimeFunction time_fn;
  int exponent = 1;
};

Workspace::Lease Workspace::acquire(const State& like) {
  if (in_use_ == pool_.size()) pool_.emplace_back();
  const std::size_t slot = in_use_++;
  pool_[slot].assign(like);
  return Lease(*this, slot);
}

Operator::Operator(const PrimaryOperator& primary) {
  auto impl = std::make_shared<Impl>();
  impl->node = Node::Primary;
  impl->primary = primary;
  impl_ = std::move(impl);
}

Operator Operator::primary(PrimaryKind kind, std::size_t freedom) {
  return Operator(PrimaryOperator(kind, freedom));
}

Operator Operator::transition(std::size_t freedom, int to, int from) {
  return Operator(PrimaryOperator::transition(freedom, to, from));
}

Operator Operator::identity() { return primary(PrimaryKind::Identity, 0); }

Operator Operator::sum(std::vector<Operator> terms) {
  if (terms.empty()) throw Error(ErrorCode::InvalidArgument, "empty operator sum");
  if (terms.size() == 1) return terms.front();
  auto impl = std::make_shared<Impl>();
  impl->node = Node::Sum;
  impl->children = std::move(terms);
  return Operator(std::move(impl));
}

Operator Operator::product(std::vector<Operator> factors) {
  if (factors.empty()) throw Error(ErrorCode::InvalidArgument, "empty operator product");
  if (factors.size() == 1) return factors.front();
  auto impl = std::make_shared<Impl>();
  impl->node = Node::Product;
  impl->children = std::move(factors);
  return Operator(std::move(impl));
}

Operator Operator::scaled(Complex z, Operator child) {
  auto impl = std::make_shared<Impl>();
  impl->node = Node::Scalar;
  impl->scalar = z;
  impl->children.push_back(std::move(child));
  return Operator(std::move(impl));
}

Operator Operator::time_scaled(TimeFunction f, Operator child) {
  if (!f.fn) throw Error(ErrorCode::InvalidArgument, "empty time function");
  auto impl = std::make_shared<Impl>();
  impl->node = Node::TimeFn;
  impl->time_fn = std::move(f);
  impl->children.push_back(std::move(child));
  return Operator(std::move(impl));
}

Operator Operator::power(Operator child, int k) {
  if (k < 1 || k > kMaxPower)
    throw Error(ErrorCode::InvalidArgument,
                "operator power must lie in [1, " + std::to_string(kMaxPower) + "], got " + std::to_string(k));
  if (k == 1) return child;
  auto impl = std::make_shared<Impl>();
  impl->node = Node::Power;
  impl->exponent = k;
  impl->children.push_back(std::move(child));
  return Operator(std::move(impl));
}

Operator::Node Operator::node() const { return impl_->node; }
const PrimaryOperator& Operator::primary_op() const { return impl_->primary; }
bool Operator::hc_flag() const { return impl_->hc; }
const std::vector<Operator>& Operator::children() const { return impl_->children; }
Complex Operator::scalar() const { return impl_->scalar; }
const TimeFunction& Operator::time_function() const { return impl_->time_fn; }
int Operator::exponent() const { return impl_->exponent; }

Operator Operator::hc() const {
  const Impl& n = *impl_;
  switch (n.node) {
    case Node::Primary: {
      auto impl = std::make_shared<Impl>(n);
      impl->hc = !n.hc;
      return Operator(std::move(impl));
    }
    case Node::Sum: {
      std::vector<Operator> terms;
      terms.reserve(n.children.size());
      for (const auto& c : n.children) terms.push_back(c.hc());
      return sum(std::move(terms));
    }
    case Node::Product: {
      std::vector<Operator> factors;
      factors.reserve(n.children.size());
      for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) factors.push_back(it->hc());
      return product(std::move(factors));
    }
    case Node::Scalar:
      return scaled(std::conj(n.scalar), n.children[0].hc());
    case Node::TimeFn: {
      auto fn = n.time_fn.fn;
      TimeFunction conj_fn{[fn](double t) { return std::conj(fn(t)); }, "conj(" + n.time_fn.label + ")"};
      return time_scaled(std::move(conj_fn), n.children[0].hc());
    }
    case Node::Power:
      return power(n.children[0].hc(), n.exponent);
  }
  return *this;
}

void Operator::validate(const State& layout) const {
  const Impl& n = *impl_;
  if (n.node != Node::Primary) {
    for (const auto& c : n.children) c.validate(layout);
    return;
  }
  const auto& p = n.primary;
  if (p.kind() == PrimaryKind::Identity) return;
  if (p.freedom() >= layout.num_freedoms())
    throw Error(ErrorCode::TypeMismatch, std::string(qtraj::to_string(p.kind())) + " acts on freedom " +
                                             std::to_string(p.freedom()) + " but the state has " +
                                             std::to_string(layout.num_freedoms()) + " freedoms");
  const auto& f = layout.freedom(p.freedom());
  if (!p.accepts(f.type))
    throw Error(ErrorCode::TypeMismatch, std::string(qtraj::to_string(p.kind())) + " cannot act on " +
                                             qtraj::to_string(f.type) + " freedom " +
                                             std::to_string(p.freedom()));
  if (p.kind() == PrimaryKind::Transition &&
      (static_cast<std::size_t>(p.level_to()) >= f.dim_allocated ||
       static_cast<std::size_t>(p.level_from()) >= f.dim_allocated))
    throw Error(ErrorCode::TypeMismatch, "transition level out of range for atom freedom " +
                                             std::to_string(p.freedom()));
}

std::string Operator::to_string() const {
  const Impl& n = *impl_;
  std::ostringstream os;
  switch (n.node) {
    case Node::Primary:
      os << qtraj::to_string(n.primary.kind()) << '[' << n.primary.freedom();
      if (n.primary.kind() == PrimaryKind::Transition)
        os << ';' << n.primary.level_to() << ',' << n.primary.level_from();
      os << ']' << (n.hc ? "^dag" : "");
      break;
    case Node::Sum:
    case Node::Product: {
      os << '(';
      const char* sep = n.node == Node::Sum ? " + " : " * ";
      for (std::size_t i = 0; i < n.children.size(); ++i) os << (i ? sep : "") << n.children[i].to_string();
      os << ')';
      break;
    }
    case Node::Scalar:
      os << n.scalar << "*" << n.children[0].to_string();
      break;
    case Node::TimeFn:
      os << '{' << n.time_fn.label << "}*" << n.children[0].to_string();
      break;
    case Node::Power:
      os << n.children[0].to_string() << '^' << n.exponent;
      break;
  }
  return os.str();
}

Operator operator+(const Operator& a, const Operator& b) {
  std::vector<Operator> terms;
  if (a.node() == Operator::Node::Sum) terms = a.children(); else terms.push_back(a);
  if (b.node() == Operator::Node::Sum)
    terms.insert(terms.end(), b.children().begin(), b.children().end());
  else
    terms.push_back(b);
  return Operator::sum(std::move(terms));
}

Operator operator-(const Operator& a) { return Operator::scaled(-1.0, a); }
Operator operator-(const Operator& a, const Operator& b) { return a + (-b); }

Operator operator*(const Operator& a, const Operator& b) {
  std::vector<Operator> factors;
  if (a.node() == Operator::Node::Product) factors = a.children(); else factors.push_back(a);
  if (b.node() == Operator::Node::Product)
    factors.insert(factors.end(), b.children().begin(), b.children().end());
  else
    factors.push_back(b);
  return Operator::product(std::move(factors));
}

Operator operator*(Complex z, const Operator& a) { return Operator::scaled(z, a); }
Operator operator*(const Operator& a, Complex z) { return Operator::scaled(z, a); }
Operator operator*(double x, const Operator& a) { return Operator::scaled(x, a); }
Operator pow(const Operator& a, int k) { return Operator::power(a, k); }

namespace {

// Evaluates psi <- e psi up to a pending scalar factor, which is returned
// instead of being applied. Scalar nodes therefore never touch amplitudes
// themselves; factors fold until a Sum or the caller needs them.
Complex eval(const Operator& e, State& psi, double t, Workspace& ws) {
  using Node = Operator::Node;
  switch (e.node()) {
    case Node::Primary:
      psi.apply_primary(e.primary_op(), e.hc_flag(), t);
      return 1.0;
    case Node::Scalar:
      return e.scalar() * eval(e.children()[0], psi, t, ws);
    case Node::TimeFn:
      return e.time_function().fn(t) * eval(e.children()[0], psi, t, ws);
    case Node::Power: {
      Complex factor = 1.0;
      for (int i = 0; i < e.exponent(); ++i) factor *= eval(e.children()[0], psi, t, ws);
      return factor;
    }
    case Node::Product: {
      Complex factor = 1.0;
      const auto& fs = e.children();
      for (auto it = fs.rbegin(); it != fs.rend(); ++it) factor *= eval(*it, psi, t, ws);
      return factor;
    }
    case Node::Sum: {
      const auto& terms = e.children();
      auto acc = ws.acquire(psi);
      const Complex first = eval(terms[0], *acc, t, ws);
      if (first != Complex(1.0)) *acc *= first;
      if (terms.size() > 2) {
        auto tmp = ws.acquire(psi);
        for (std::size_t i = 1; i + 1 < terms.size(); ++i) {
          tmp->assign(psi);
          const Complex f = eval(terms[i], *tmp, t, ws);
          acc->add_scaled(f, *tmp);
        }
      }
      const Complex last = eval(terms.back(), psi, t, ws);
      if (last != Complex(1.0)) psi *= last;
      psi += *acc;
      return 1.0;
    }
  }
  return 1.0;
}

}  // namespace

void apply_unchecked(const Operator& e, State& psi, double t, Workspace& ws) {
  const Complex f = eval(e, psi, t, ws);
  if (f != Complex(1.0)) psi *= f;
}

void apply_in_place(const Operator& e, State& psi, double t, Workspace& ws) {
  e.validate(psi);
  apply_unchecked(e, psi, t, ws);
}

void apply_in_place(const Operator& e, State& psi, double t) {
  Workspace ws;
  apply_in_place(e, psi, t, ws);
}

State apply(const Operator& e, const State& psi, double t) {
  State out = psi;
  apply_in_place(e, out, t);
  return out;
}

}  // namespace qtraj
