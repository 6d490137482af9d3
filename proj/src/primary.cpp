#include "qtraj/primary.hpp"

#include <string>

namespace qtraj {

const char* to_string(PrimaryKind kind) {
  switch (kind) {
    case PrimaryKind::Identity: return "Identity";
    case PrimaryKind::Annihilation: return "Annihilation";
    case PrimaryKind::Number: return "Number";
    case PrimaryKind::PositionX: return "PositionX";
    case PrimaryKind::MomentumP: return "MomentumP";
    case PrimaryKind::SigmaPlus: return "SigmaPlus";
    case PrimaryKind::SigmaMinus: return "SigmaMinus";
    case PrimaryKind::SigmaZ: return "SigmaZ";
    case PrimaryKind::Transition: return "Transition";
  }
  return "?";
}

PrimaryOperator::PrimaryOperator(PrimaryKind kind, std::size_t freedom) : kind_(kind), freedom_(freedom) {
  if (kind == PrimaryKind::Transition)
    throw Error(ErrorCode::InvalidArgument, "use PrimaryOperator::transition for transition operators");
}

PrimaryOperator PrimaryOperator::transition(std::size_t freedom, int to, int from) {
  if (to < 0 || from < 0) throw Error(ErrorCode::InvalidArgument, "transition levels must be non-negative");
  if (to == from)
    throw Error(ErrorCode::InvalidArgument, "transition |i><j| requires i != j (got i = j = " +
                                                std::to_string(to) + ")");
  PrimaryOperator op(PrimaryKind::Identity, freedom);
  op.kind_ = PrimaryKind::Transition;
  op.to_ = to;
  op.from_ = from;
  return op;
}

bool PrimaryOperator::accepts(PhysicalType type) const {
  switch (kind_) {
    case PrimaryKind::Identity: return true;
    case PrimaryKind::Annihilation:
    case PrimaryKind::Number:
    case PrimaryKind::PositionX:
    case PrimaryKind::MomentumP: return type == PhysicalType::Field;
    case PrimaryKind::SigmaPlus:
    case PrimaryKind::SigmaMinus:
    case PrimaryKind::SigmaZ: return type == PhysicalType::Spin;
    case PrimaryKind::Transition: return type == PhysicalType::Atom;
  }
  return false;
}

bool PrimaryOperator::hermitian() const {
  switch (kind_) {
    case PrimaryKind::Identity:
    case PrimaryKind::Number:
    case PrimaryKind::PositionX:
    case PrimaryKind::MomentumP:
    case PrimaryKind::SigmaZ: return true;
    default: return false;
  }
}

}  // namespace qtraj
