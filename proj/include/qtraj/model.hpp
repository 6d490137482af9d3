#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qtraj/trajectory.hpp"

namespace qtraj {

/// Position in the model text (1-based).
struct SourceLoc {
  int line = 0;
  int column = 0;
};

/// Syntax tree of a model-file expression. Types (scalar vs operator) are
/// resolved when the model is checked, not at parse time.
struct Expr {
  enum class Kind {
    Number,     // real literal
    Imaginary,  // literal followed by i, e.g. 0.3i
    Name,       // parameter, freedom, `i` or `t`
    Call,       // builtin function or primary operator
    Negate,
    Add,
    Subtract,
    Multiply,
    Power,  // integer exponent
    Hc,     // Hermitian conjugate (postfix .hc() or hc(...))
  };

  Kind kind = Kind::Number;
  double number = 0.0;
  int exponent = 0;
  std::string name;
  std::vector<std::shared_ptr<const Expr>> args;
  SourceLoc loc;
};

using ExprPtr = std::shared_ptr<const Expr>;

/// Structural equality, ignoring source locations.
bool same_expr(const Expr& a, const Expr& b);
/// Canonical rendering with minimal parentheses; parses back to an equal tree.
std::string print_expr(const Expr& e);

struct FreedomDecl {
  std::string name;
  PhysicalType type = PhysicalType::Field;
  std::size_t dim = 1;
  SourceLoc loc;
};

struct InitialDecl {
  enum class Kind { Fock, Coherent, SpinDown, SpinUp, Level };
  std::string freedom;
  Kind kind = Kind::Fock;
  std::size_t level = 0;  // Fock / Level
  ExprPtr alpha;          // Coherent
  SourceLoc loc;
};

struct OutputDecl {
  std::string file;
  ExprPtr expr;
};

/// A parsed and checked model file.
struct ModelFile {
  std::vector<FreedomDecl> freedoms;
  std::vector<std::pair<std::string, ExprPtr>> params;
  ExprPtr hamiltonian;
  std::vector<ExprPtr> lindblads;
  std::vector<InitialDecl> initial;
  /// Explicit amplitudes over the whole product basis; replaces `initial`.
  std::vector<ExprPtr> amplitudes;
  std::vector<OutputDecl> outputs;
  std::array<int, 4> pipe{1, 1, 1, 1};
  RunConfig run;
};

/// Parses, resolves and type-checks a model. Also checks numerically that
/// the Hamiltonian is Hermitian on the declared truncation. Every failure is
/// an Error with code Parse and a "line L, column C" prefix where one applies.
ModelFile parse_model(std::string_view text);
ModelFile load_model(const std::string& path);

/// Stable normalized rendering: parse_model(print_model(m)) is equivalent to m.
std::string print_model(const ModelFile& m);
bool equivalent(const ModelFile& a, const ModelFile& b);

/// Sets one [run] key (same syntax as in the file), e.g. ("seed", "7").
void apply_run_setting(ModelFile& m, std::string_view key, std::string_view value);

/// Operators, initial state and run settings ready to simulate.
struct CompiledModel {
  State initial;
  ModelOperators operators;
  OutputSpec outputs;
  RunConfig run;
};

CompiledModel compile_model(const ModelFile& m);

}  // namespace qtraj
