#include "qtraj/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "qtraj/dense.hpp"

namespace qtraj {

namespace {

constexpr int kMaxNesting = 256;
constexpr std::size_t kMaxAmplitudes = std::size_t{1} << 26;
constexpr std::size_t kHermiticityFieldDim = 8;

[[noreturn]] void fail(SourceLoc loc, const std::string& msg) {
  if (loc.line > 0)
    throw Error(ErrorCode::Parse,
                "line " + std::to_string(loc.line) + ", column " + std::to_string(loc.column) + ": " + msg);
  throw Error(ErrorCode::Parse, msg);
}

const std::set<std::string, std::less<>>& scalar_functions() {
  static const std::set<std::string, std::less<>> names{"sqrt", "sin", "cos", "exp"};
  return names;
}

const std::set<std::string, std::less<>>& primary_names() {
  static const std::set<std::string, std::less<>> names{"a", "adag", "n", "x", "p", "sp", "sm", "sz", "tr"};
  return names;
}

bool is_reserved(std::string_view name) {
  return name == "i" || name == "t" || name == "hc" || scalar_functions().count(name) ||
         primary_names().count(name);
}

// ---------------------------------------------------------------------------
// Lexer

struct Segment {
  int line;
  int column;  // column of text[0]
  std::string text;
};

struct Token {
  enum class Kind { Number, Imaginary, Ident, Punct, End };
  Kind kind = Kind::End;
  double value = 0.0;
  std::string text;
  SourceLoc loc;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> lex(const std::vector<Segment>& segments) {
  std::vector<Token> out;
  SourceLoc end_loc{1, 1};
  for (const auto& seg : segments) {
    const std::string& s = seg.text;
    std::size_t i = 0;
    while (i < s.size()) {
      const char c = s[i];
      const SourceLoc loc{seg.line, seg.column + static_cast<int>(i)};
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      Token tok;
      tok.loc = loc;
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
        std::size_t j = i;
        while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
        if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
          std::size_t k = j + 1;
          if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
          if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
            j = k;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
          }
        }
        tok.text = s.substr(i, j - i);
        double v = 0.0;
        auto res = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.text.data() + tok.text.size())
          fail(loc, "malformed number '" + tok.text + "'");
        tok.value = v;
        tok.kind = Token::Kind::Number;
        if (j < s.size() && s[j] == 'i' && !(j + 1 < s.size() && ident_char(s[j + 1]))) {
          tok.kind = Token::Kind::Imaginary;
          ++j;
        } else if (j < s.size() && ident_char(s[j])) {
          fail(loc, "malformed number '" + s.substr(i, j - i + 1) + "'");
        }
        i = j;
      } else if (ident_start(c)) {
        std::size_t j = i;
        while (j < s.size() && ident_char(s[j])) ++j;
        tok.kind = Token::Kind::Ident;
        tok.text = s.substr(i, j - i);
        i = j;
      } else if (std::string_view("+-*^(),.").find(c) != std::string_view::npos) {
        tok.kind = Token::Kind::Punct;
        tok.text = std::string(1, c);
        ++i;
      } else {
        std::string shown = std::isprint(static_cast<unsigned char>(c)) ? std::string(1, c)
                                                                           : "\\x" + std::to_string(
                                                                                         static_cast<unsigned char>(c));
        fail(loc, "unexpected character '" + shown + "'");
      }
      out.push_back(std::move(tok));
    }
    end_loc = {seg.line, seg.column + static_cast<int>(s.size())};
  }
  Token end;
  end.kind = Token::Kind::End;
  end.loc = end_loc;
  out.push_back(end);
  return out;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  ExprPtr parse_all() {
    if (peek().kind == Token::Kind::End) fail(peek().loc, "expected an expression");
    ExprPtr e = expr();
    if (peek().kind != Token::Kind::End) fail(peek().loc, "unexpected '" + peek().text + "'");
    return e;
  }

  // Comma-separated list of expressions spanning the whole input.
  std::vector<ExprPtr> parse_list() {
    std::vector<ExprPtr> items{expr()};
    while (accept(",")) items.push_back(expr());
    if (peek().kind != Token::Kind::End) fail(peek().loc, "unexpected '" + peek().text + "'");
    return items;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& take() { return toks_[pos_ == toks_.size() - 1 ? pos_ : pos_++]; }
  bool is(const char* p) const { return peek().kind == Token::Kind::Punct && peek().text == p; }
  bool accept(const char* p) {
    if (!is(p)) return false;
    ++pos_;
    return true;
  }
  void expect(const char* p) {
    if (!accept(p)) {
      const auto& t = peek();
      fail(t.loc, std::string("expected '") + p + "' but found " +
                      (t.kind == Token::Kind::End ? std::string("end of expression") : "'" + t.text + "'"));
    }
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p_(p) {
      if (++p_.depth_ > kMaxNesting) fail(p_.peek().loc, "expression nested too deeply");
    }
    ~DepthGuard() { --p_.depth_; }
    Parser& p_;
  };

  static ExprPtr node(Expr::Kind kind, SourceLoc loc, std::vector<ExprPtr> args = {}) {
    auto e = std::make_shared<Expr>();
    e->kind = kind;
    e->loc = loc;
    e->args = std::move(args);
    return e;
  }

  ExprPtr expr() {
    DepthGuard guard(*this);
    ExprPtr lhs = term();
    for (;;) {
      const SourceLoc loc = peek().loc;
      if (accept("+"))
        lhs = node(Expr::Kind::Add, loc, {lhs, term()});
      else if (accept("-"))
        lhs = node(Expr::Kind::Subtract, loc, {lhs, term()});
      else
        return lhs;
    }
  }

  ExprPtr term() {
    ExprPtr lhs = unary();
    for (;;) {
      const SourceLoc loc = peek().loc;
      if (!accept("*")) return lhs;
      lhs = node(Expr::Kind::Multiply, loc, {lhs, unary()});
    }
  }

  ExprPtr unary() {
    DepthGuard guard(*this);
    const SourceLoc loc = peek().loc;
    if (accept("-")) return node(Expr::Kind::Negate, loc, {unary()});
    return power();
  }

  ExprPtr power() {
    ExprPtr base = postfix();
    const SourceLoc loc = peek().loc;
    if (!accept("^")) return base;
    const Token& t = take();
    if (t.kind != Token::Kind::Number || t.value != std::floor(t.value) || t.text.find_first_of(".eE") != std::string::npos)
      fail(t.loc, "exponent must be a non-negative integer literal");
    if (t.value > 1e6) fail(t.loc, "exponent too large");
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Power;
    e->loc = loc;
    e->exponent = static_cast<int>(t.value);
    e->args = {base};
    if (is("^")) fail(peek().loc, "chained powers need parentheses");
    return e;
  }

  ExprPtr postfix() {
    ExprPtr e = primary();
    while (is(".")) {
      const SourceLoc loc = peek().loc;
      ++pos_;
      const Token& t = take();
      if (t.kind != Token::Kind::Ident || t.text != "hc") fail(t.loc, "expected 'hc' after '.'");
      expect("(");
      expect(")");
      e = node(Expr::Kind::Hc, loc, {e});
    }
    return e;
  }

  ExprPtr primary() {
    DepthGuard guard(*this);
    const Token& t = peek();
    switch (t.kind) {
      case Token::Kind::Number:
      case Token::Kind::Imaginary: {
        auto e = std::make_shared<Expr>();
        e->kind = t.kind == Token::Kind::Number ? Expr::Kind::Number : Expr::Kind::Imaginary;
        e->number = t.value;
        e->loc = t.loc;
        ++pos_;
        return e;
      }
      case Token::Kind::Ident: {
        auto e = std::make_shared<Expr>();
        e->name = t.text;
        e->loc = t.loc;
        ++pos_;
        if (accept("(")) {
          if (e->name == "hc") {
            e->kind = Expr::Kind::Hc;
            e->name.clear();
            e->args.push_back(expr());
            expect(")");
            return e;
          }
          e->kind = Expr::Kind::Call;
          if (!is(")")) {
            e->args.push_back(expr());
            while (accept(",")) e->args.push_back(expr());
          }
          expect(")");
          return e;
        }
        e->kind = Expr::Kind::Name;
        return e;
      }
      case Token::Kind::Punct:
        if (t.text == "(") {
          ++pos_;
          ExprPtr e = expr();
          expect(")");
          return e;
        }
        fail(t.loc, "unexpected '" + t.text + "'");
      case Token::Kind::End:
        fail(t.loc, "unexpected end of expression");
    }
    fail(t.loc, "unexpected token");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

ExprPtr parse_expr_segments(const std::vector<Segment>& segs) { return Parser(lex(segs)).parse_all(); }

// ---------------------------------------------------------------------------
// Type checking and compilation

struct Scalar {
  Complex value{};
  std::function<Complex(double)> fn;  // set when time dependent
  std::string label;

  bool time_dependent() const { return static_cast<bool>(fn); }
  Complex at(double t) const { return fn ? fn(t) : value; }
  std::function<Complex(double)> as_function() const {
    if (fn) return fn;
    const Complex v = value;
    return [v](double) { return v; };
  }
};

struct Value {
  std::optional<Scalar> scalar;
  std::optional<Operator> op;
};

struct FreedomInfo {
  std::size_t index;
  PhysicalType type;
  std::size_t dim;
};

class Compiler {
 public:
  std::map<std::string, FreedomInfo, std::less<>> freedoms;
  std::map<std::string, Scalar, std::less<>> params;

  Value compile(const Expr& e) const {
    switch (e.kind) {
      case Expr::Kind::Number:
        return scalar_value(Complex(e.number, 0.0), e);
      case Expr::Kind::Imaginary:
        return scalar_value(Complex(0.0, e.number), e);
      case Expr::Kind::Name: {
        if (e.name == "i") return scalar_value(kI, e);
        if (e.name == "t") {
          Scalar s;
          s.fn = [](double t) { return Complex(t, 0.0); };
          s.label = "t";
          return {s, std::nullopt};
        }
        if (auto it = params.find(e.name); it != params.end()) return {it->second, std::nullopt};
        if (freedoms.count(e.name))
          fail(e.loc, "freedom '" + e.name + "' used as a value; wrap it in a primary operator such as a(" +
                          e.name + ")");
        if (primary_names().count(e.name) || scalar_functions().count(e.name))
          fail(e.loc, "'" + e.name + "' must be called with arguments");
        fail(e.loc, "unknown identifier '" + e.name + "'");
      }
      case Expr::Kind::Call:
        return call(e);
      case Expr::Kind::Negate: {
        Value v = compile(*e.args[0]);
        if (v.op) return {std::nullopt, -*v.op};
        return {map_scalar(*v.scalar, [](Complex z) { return -z; }, e), std::nullopt};
      }
      case Expr::Kind::Add:
      case Expr::Kind::Subtract: {
        Value a = compile(*e.args[0]);
        Value b = compile(*e.args[1]);
        const bool sub = e.kind == Expr::Kind::Subtract;
        if (a.op && b.op) return {std::nullopt, sub ? *a.op - *b.op : *a.op + *b.op};
        if (a.op || b.op)
          fail(e.loc, std::string("type mismatch: cannot ") + (sub ? "subtract" : "add") +
                          " a scalar and an operator");
        return {combine(*a.scalar, *b.scalar, sub ? [](Complex x, Complex y) { return x - y; }
                                                   : [](Complex x, Complex y) { return x + y; },
                        e),
                std::nullopt};
      }
      case Expr::Kind::Multiply: {
        Value a = compile(*e.args[0]);
        Value b = compile(*e.args[1]);
        if (a.op && b.op) return {std::nullopt, *a.op * *b.op};
        if (a.op) return {std::nullopt, scale(*b.scalar, *a.op)};
        if (b.op) return {std::nullopt, scale(*a.scalar, *b.op)};
        return {combine(*a.scalar, *b.scalar, [](Complex x, Complex y) { return x * y; }, e), std::nullopt};
      }
      case Expr::Kind::Power: {
        Value v = compile(*e.args[0]);
        const int k = e.exponent;
        if (v.op) {
          if (k < 1 || k > Operator::kMaxPower)
            fail(e.loc, "operator power must lie in [1, " + std::to_string(Operator::kMaxPower) + "]");
          return {std::nullopt, pow(*v.op, k)};
        }
        return {map_scalar(*v.scalar, [k](Complex z) { return std::pow(z, k); }, e), std::nullopt};
      }
      case Expr::Kind::Hc: {
        Value v = compile(*e.args[0]);
        if (v.op) return {std::nullopt, v.op->hc()};
        return {map_scalar(*v.scalar, [](Complex z) { return std::conj(z); }, e), std::nullopt};
      }
    }
    fail(e.loc, "unsupported expression");
  }

  Scalar compile_scalar(const Expr& e, const char* what, bool allow_time = true) const {
    Value v = compile(e);
    if (v.op) fail(e.loc, std::string("type mismatch: ") + what + " must be a scalar, not an operator");
    if (!allow_time && v.scalar->time_dependent())
      fail(e.loc, std::string(what) + " cannot depend on time");
    return *v.scalar;
  }

  Operator compile_operator(const Expr& e, const char* what) const {
    Value v = compile(e);
    if (!v.op) fail(e.loc, std::string("type mismatch: ") + what + " must be an operator, not a scalar");
    return *v.op;
  }

 private:
  static Value scalar_value(Complex z, const Expr& e) {
    Scalar s;
    s.value = z;
    s.label = print_expr(e);
    return {s, std::nullopt};
  }

  template <class F>
  static Scalar map_scalar(const Scalar& a, F f, const Expr& e) {
    Scalar s;
    s.label = print_expr(e);
    if (!a.time_dependent()) {
      s.value = f(a.value);
      return s;
    }
    auto fa = a.fn;
    s.fn = [fa, f](double t) { return f(fa(t)); };
    return s;
  }

  template <class F>
  static Scalar combine(const Scalar& a, const Scalar& b, F f, const Expr& e) {
    Scalar s;
    s.label = print_expr(e);
    if (!a.time_dependent() && !b.time_dependent()) {
      s.value = f(a.value, b.value);
      return s;
    }
    auto fa = a.as_function();
    auto fb = b.as_function();
    s.fn = [fa, fb, f](double t) { return f(fa(t), fb(t)); };
    return s;
  }

  static Operator scale(const Scalar& s, const Operator& op) {
    if (s.time_dependent()) return Operator::time_scaled(TimeFunction{s.fn, s.label}, op);
    return s.value * op;
  }

  const FreedomInfo& freedom_arg(const Expr& call, std::size_t i, PhysicalType want) const {
    const Expr& arg = *call.args[i];
    if (arg.kind != Expr::Kind::Name) fail(arg.loc, "'" + call.name + "' expects a freedom name");
    auto it = freedoms.find(arg.name);
    if (it == freedoms.end()) fail(arg.loc, "unknown identifier '" + arg.name + "' (not a declared freedom)");
    if (it->second.type != want)
      fail(arg.loc, "type mismatch: '" + call.name + "' needs a " + to_string(want) + " freedom but '" +
                        arg.name + "' is a " + to_string(it->second.type));
    return it->second;
  }

  static int level_arg(const Expr& call, std::size_t i, std::size_t dim) {
    const Expr& arg = *call.args[i];
    if (arg.kind != Expr::Kind::Number || arg.number != std::floor(arg.number) || arg.number < 0)
      fail(arg.loc, "transition levels must be non-negative integer literals");
    if (arg.number >= static_cast<double>(dim))
      fail(arg.loc, "transition level " + format_number(arg.number) + " out of range for an atom with " +
                        std::to_string(dim) + " levels");
    return static_cast<int>(arg.number);
  }

  Value call(const Expr& e) const {
    const std::string& f = e.name;
    auto arity = [&](std::size_t n) {
      if (e.args.size() != n)
        fail(e.loc, "'" + f + "' takes " + std::to_string(n) + " argument" + (n == 1 ? "" : "s"));
    };
    if (scalar_functions().count(f)) {
      arity(1);
      const Scalar arg = compile_scalar(*e.args[0], ("argument of " + f).c_str());
      Complex (*fn)(const Complex&) = nullptr;
      if (f == "sqrt") fn = [](const Complex& z) { return std::sqrt(z); };
      if (f == "sin") fn = [](const Complex& z) { return std::sin(z); };
      if (f == "cos") fn = [](const Complex& z) { return std::cos(z); };
      if (f == "exp") fn = [](const Complex& z) { return std::exp(z); };
      return {map_scalar(arg, fn, e), std::nullopt};
    }
    if (f == "tr") {
      arity(3);
      const auto& fr = freedom_arg(e, 0, PhysicalType::Atom);
      const int to = level_arg(e, 1, fr.dim);
      const int from = level_arg(e, 2, fr.dim);
      if (to == from) fail(e.loc, "transition tr(atom, i, j) requires i != j");
      return {std::nullopt, Operator::transition(fr.index, to, from)};
    }
    static const std::map<std::string, std::pair<PrimaryKind, bool>, std::less<>> table{
        {"a", {PrimaryKind::Annihilation, false}}, {"adag", {PrimaryKind::Annihilation, true}},
        {"n", {PrimaryKind::Number, false}},       {"x", {PrimaryKind::PositionX, false}},
        {"p", {PrimaryKind::MomentumP, false}},    {"sp", {PrimaryKind::SigmaPlus, false}},
        {"sm", {PrimaryKind::SigmaMinus, false}},  {"sz", {PrimaryKind::SigmaZ, false}},
    };
    auto it = table.find(f);
    if (it == table.end()) {
      if (freedoms.count(f) || params.count(f)) fail(e.loc, "'" + f + "' is not a function");
      fail(e.loc, "unknown identifier '" + f + "'");
    }
    arity(1);
    const auto [kind, dagger] = it->second;
    const PrimaryOperator probe(kind, 0);
    const PhysicalType want = probe.accepts(PhysicalType::Field)  ? PhysicalType::Field
                              : probe.accepts(PhysicalType::Spin) ? PhysicalType::Spin
                                                                  : PhysicalType::Atom;
    const auto& fr = freedom_arg(e, 0, want);
    Operator op = Operator::primary(kind, fr.index);
    return {std::nullopt, dagger ? op.hc() : op};
  }
};

// ---------------------------------------------------------------------------
// File structure

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct Line {
  int number;
  int column;  // column of text[0]
  std::string text;
};

struct KeyValue {
  std::string key;
  SourceLoc key_loc;
  Segment value;
};

KeyValue split_key_value(const Line& line) {
  const auto eq = line.text.find('=');
  if (eq == std::string::npos) fail({line.number, line.column}, "expected 'key = value'");
  KeyValue kv;
  kv.key = std::string(trim(std::string_view(line.text).substr(0, eq)));
  kv.key_loc = {line.number, line.column};
  if (kv.key.empty()) fail({line.number, line.column}, "missing key before '='");
  std::size_t v = eq + 1;
  while (v < line.text.size() && std::isspace(static_cast<unsigned char>(line.text[v]))) ++v;
  kv.value = {line.number, line.column + static_cast<int>(v), line.text.substr(v)};
  if (trim(kv.value.text).empty()) fail({line.number, line.column + static_cast<int>(eq)}, "missing value after '='");
  return kv;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream is{std::string(s)};
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

template <class T>
T parse_integer(std::string_view text, SourceLoc loc, const char* what) {
  T v{};
  const auto t = trim(text);
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || t.empty())
    fail(loc, std::string(what) + " must be an integer, got '" + std::string(t) + "'");
  return v;
}

double parse_real(std::string_view text, SourceLoc loc, const char* what) {
  double v = 0.0;
  auto t = trim(text);
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || t.empty() || !std::isfinite(v))
    fail(loc, std::string(what) + " must be a number, got '" + std::string(trim(text)) + "'");
  return v;
}

bool parse_switch(std::string_view text, SourceLoc loc, const char* what) {
  const auto t = trim(text);
  if (t == "on" || t == "true" || t == "yes") return true;
  if (t == "off" || t == "false" || t == "no") return false;
  fail(loc, std::string(what) + " must be on or off");
}

void set_run_value(RunConfig& run, std::string_view key, std::string_view value, SourceLoc loc) {
  if (key == "dt") {
    run.dt = parse_real(value, loc, "dt");
    if (!(run.dt > 0.0)) fail(loc, "dt must be positive");
  } else if (key == "numdts") {
    run.numdts = parse_integer<int>(value, loc, "numdts");
  } else if (key == "numsteps") {
    run.numsteps = parse_integer<int>(value, loc, "numsteps");
  } else if (key == "trajectories") {
    run.n_trajectories = parse_integer<std::size_t>(value, loc, "trajectories");
  } else if (key == "seed") {
    run.seed = parse_integer<std::uint64_t>(value, loc, "seed");
  } else if (key == "threads") {
    run.threads = parse_integer<unsigned>(value, loc, "threads");
  } else if (key == "unraveling") {
    const auto v = trim(value);
    if (v == "qsd") run.unraveling = Unraveling::Qsd;
    else if (v == "jump") run.unraveling = Unraveling::Jump;
    else if (v == "orthojump") run.unraveling = Unraveling::OrthoJump;
    else fail(loc, "unraveling must be qsd, jump or orthojump");
  } else if (key == "integrator") {
    const auto w = words(value);
    if (w.empty() || w.size() > 2) fail(loc, "integrator must be 'rk4' or 'adaptive [eps]'");
    if (w[0] == "rk4" && w.size() == 1) {
      run.integrator.kind = IntegratorKind::Rk4;
    } else if (w[0] == "adaptive") {
      run.integrator.kind = IntegratorKind::Adaptive;
      if (w.size() == 2) run.integrator.eps = parse_real(w[1], loc, "eps");
    } else {
      fail(loc, "integrator must be 'rk4' or 'adaptive [eps]'");
    }
  } else if (key == "eps") {
    run.integrator.eps = parse_real(value, loc, "eps");
  } else if (key == "abs_floor") {
    run.integrator.abs_floor = parse_real(value, loc, "abs_floor");
  } else if (key == "moving") {
    run.moving.enabled = parse_switch(value, loc, "moving");
  } else if (key == "cutoff_epsilon") {
    run.moving.cutoff_epsilon = parse_real(value, loc, "cutoff_epsilon");
  } else if (key == "pad") {
    run.moving.pad_size = parse_integer<int>(value, loc, "pad");
  } else if (key == "shift_accuracy") {
    run.moving.shift_accuracy = parse_real(value, loc, "shift_accuracy");
  } else if (key == "n_moving") {
    run.moving.n_moving_freedoms = parse_integer<std::size_t>(value, loc, "n_moving");
  } else {
    fail(loc, "unknown run setting '" + std::string(key) + "'");
  }
}

void check_run(const ModelFile& m) {
  try {
    m.run.validate();
  } catch (const Error& e) {
    fail({}, std::string("[run]: ") + e.what());
  }
  if (m.run.moving.enabled) {
    if (m.run.moving.n_moving_freedoms > m.freedoms.size()) fail({}, "[run]: n_moving exceeds the number of freedoms");
    for (std::size_t k = 0; k < m.run.moving.n_moving_freedoms; ++k)
      if (m.freedoms[k].type != PhysicalType::Field)
        fail(m.freedoms[k].loc, "moving-basis freedom '" + m.freedoms[k].name + "' must be a field");
  }
}

Compiler make_compiler(const ModelFile& m) {
  Compiler c;
  for (std::size_t k = 0; k < m.freedoms.size(); ++k) {
    const auto& f = m.freedoms[k];
    c.freedoms[f.name] = {k, f.type, f.dim};
  }
  for (const auto& [name, expr] : m.params) c.params[name] = c.compile_scalar(*expr, "a parameter", false);
  return c;
}

std::vector<FreedomSpec> specs_of(const ModelFile& m) {
  std::vector<FreedomSpec> specs;
  for (const auto& f : m.freedoms) specs.push_back({f.type, f.dim, f.dim, {}});
  return specs;
}

// Numerical Hermiticity on a reduced truncation. The top level of each
// FIELD is masked since ladder truncation is only exact below it.
void check_hermitian(const Operator& h, const ModelFile& m, SourceLoc loc) {
  std::vector<FreedomSpec> specs = specs_of(m);
  for (auto& s : specs) {
    if (s.type == PhysicalType::Field) s.dim_allocated = s.dim_used = std::min(s.dim_used, kHermiticityFieldDim);
  }
  auto total = [&] {
    std::size_t d = 1;
    for (const auto& s : specs) d *= s.dim_used;
    return d;
  };
  while (total() > kDefaultDenseCap) {
    auto it = std::max_element(specs.begin(), specs.end(), [](const FreedomSpec& a, const FreedomSpec& b) {
      return (a.type == PhysicalType::Field ? a.dim_used : 0) < (b.type == PhysicalType::Field ? b.dim_used : 0);
    });
    if (it->type != PhysicalType::Field || it->dim_used <= 2)
      fail(loc, "system too large for the Hermiticity check");
    it->dim_allocated = it->dim_used = it->dim_used - 1;
  }
  const std::size_t dim = total();
  std::vector<bool> keep(dim, true);
  for (std::size_t j = 0; j < dim; ++j) {
    std::size_t rest = j;
    for (std::size_t k = specs.size(); k-- > 0;) {
      const std::size_t n = rest % specs[k].dim_used;
      rest /= specs[k].dim_used;
      if (specs[k].type == PhysicalType::Field && specs[k].dim_used > 1 && n + 1 == specs[k].dim_used) keep[j] = false;
    }
  }
  for (double t : {0.0, 1.0}) {
    const Eigen::MatrixXcd mat = to_dense(h, specs, t);
    const double scale = std::max(1.0, mat.cwiseAbs().maxCoeff());
    for (std::size_t r = 0; r < dim; ++r) {
      if (!keep[r]) continue;
      for (std::size_t c = 0; c <= r; ++c) {
        if (!keep[c]) continue;
        const auto ri = static_cast<Eigen::Index>(r), ci = static_cast<Eigen::Index>(c);
        if (std::abs(mat(ri, ci) - std::conj(mat(ci, ri))) > 1e-8 * scale)
          fail(loc, "the Hamiltonian is not Hermitian (checked numerically on the truncated space)");
      }
    }
  }
}

// Runs every semantic check, compiling each expression once.
void check_model(const ModelFile& m, SourceLoc ham_loc) {
  if (m.freedoms.empty()) fail({}, "the model declares no freedoms");
  if (!m.hamiltonian) fail({}, "the model has no [hamiltonian] section");
  const Compiler c = make_compiler(m);
  const Operator h = c.compile_operator(*m.hamiltonian, "the Hamiltonian");
  for (const auto& l : m.lindblads) c.compile_operator(*l, "a Lindblad operator");
  for (const auto& o : m.outputs) c.compile_operator(*o.expr, "an output");
  for (const auto& init : m.initial)
    if (init.alpha) c.compile_scalar(*init.alpha, "a coherent amplitude", false);
  double norm2 = 0.0;
  for (const auto& a : m.amplitudes) norm2 += std::norm(c.compile_scalar(*a, "an amplitude", false).value);
  if (!m.amplitudes.empty()) {
    if (!(norm2 > 0.0)) fail(m.amplitudes.front()->loc, "the initial amplitudes are all zero");
    std::size_t total = 1;
    for (const auto& f : m.freedoms) total *= f.dim;
    if (m.amplitudes.size() != total)
      fail(m.amplitudes.front()->loc, "expected " + std::to_string(total) + " amplitudes, got " +
                                          std::to_string(m.amplitudes.size()));
  }
  const int columns = 4 * static_cast<int>(m.outputs.size());
  for (int p : m.pipe)
    if (columns > 0 && (p < 1 || p > columns))
      fail({}, "pipe index " + std::to_string(p) + " outside 1.." + std::to_string(columns));
  check_run(m);
  check_hermitian(h, m, ham_loc);
}

}  // namespace

// ---------------------------------------------------------------------------

bool same_expr(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
  switch (a.kind) {
    case Expr::Kind::Number:
    case Expr::Kind::Imaginary:
      if (a.number != b.number) return false;
      break;
    case Expr::Kind::Name:
    case Expr::Kind::Call:
      if (a.name != b.name) return false;
      break;
    case Expr::Kind::Power:
      if (a.exponent != b.exponent) return false;
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!same_expr(*a.args[i], *b.args[i])) return false;
  return true;
}

namespace {

int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Add:
    case Expr::Kind::Subtract: return 1;
    case Expr::Kind::Multiply: return 2;
    case Expr::Kind::Negate: return 3;
    case Expr::Kind::Power: return 4;
    default: return 5;
  }
}

std::string wrap(const Expr& e, bool parens) { return parens ? "(" + print_expr(e) + ")" : print_expr(e); }

}  // namespace

std::string print_expr(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Number: return format_number(e.number);
    case Expr::Kind::Imaginary: return format_number(e.number) + "i";
    case Expr::Kind::Name: return e.name;
    case Expr::Kind::Call: {
      std::string s = e.name + "(";
      for (std::size_t i = 0; i < e.args.size(); ++i) s += (i ? ", " : "") + print_expr(*e.args[i]);
      return s + ")";
    }
    case Expr::Kind::Negate: return "-" + wrap(*e.args[0], precedence(*e.args[0]) < 3);
    case Expr::Kind::Add:
    case Expr::Kind::Subtract:
    case Expr::Kind::Multiply: {
      const int p = precedence(e);
      const char* op = e.kind == Expr::Kind::Add ? " + " : e.kind == Expr::Kind::Subtract ? " - " : "*";
      return wrap(*e.args[0], precedence(*e.args[0]) < p) + op + wrap(*e.args[1], precedence(*e.args[1]) <= p);
    }
    case Expr::Kind::Power: return wrap(*e.args[0], precedence(*e.args[0]) < 5) + "^" + std::to_string(e.exponent);
    case Expr::Kind::Hc: return "hc(" + print_expr(*e.args[0]) + ")";
  }
  return "?";
}

ModelFile parse_model(std::string_view text) {
  // Split into lines, dropping comments and blank lines.
  std::vector<std::pair<std::string, std::vector<Line>>> sections;
  std::set<std::string> seen;
  static const std::set<std::string> known{"freedoms", "params", "hamiltonian", "lindblads",
                                           "initial",  "outputs", "run"};
  int number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    ++number;
    start = end + 1;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    std::size_t lead = 0;
    while (lead < raw.size() && std::isspace(static_cast<unsigned char>(raw[lead]))) ++lead;
    const std::string_view body = trim(raw);
    if (body.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const SourceLoc loc{number, static_cast<int>(lead) + 1};
    if (body.front() == '[') {
      if (body.back() != ']') fail(loc, "malformed section header");
      std::string name(trim(body.substr(1, body.size() - 2)));
      if (!known.count(name)) fail(loc, "unknown section [" + name + "]");
      if (!seen.insert(name).second) fail(loc, "duplicate section [" + name + "]");
      sections.emplace_back(name, std::vector<Line>{});
    } else {
      if (sections.empty()) fail(loc, "content before the first [section]");
      sections.back().second.push_back({number, static_cast<int>(lead) + 1, std::string(body)});
    }
    if (end == text.size()) break;
  }

  ModelFile m;
  SourceLoc ham_loc{};
  std::set<std::string, std::less<>> names;
  auto declare = [&](const std::string& name, SourceLoc loc) {
    if (name.empty() || !ident_start(name[0]) || !std::all_of(name.begin(), name.end(), ident_char))
      fail(loc, "'" + name + "' is not a valid name");
    if (is_reserved(name)) fail(loc, "'" + name + "' is a builtin name and cannot be redefined");
    if (!names.insert(name).second) fail(loc, "'" + name + "' is already defined");
  };

  // Declarations come first regardless of section order.
  std::sort(sections.begin(), sections.end(), [](const auto& a, const auto& b) {
    auto rank = [](const std::string& s) { return s == "freedoms" ? 0 : s == "params" ? 1 : 2; };
    return rank(a.first) < rank(b.first);
  });

  std::size_t total_dim = 1;
  for (const auto& [name, lines] : sections) {
    if (name == "freedoms") {
      for (const auto& line : lines) {
        const KeyValue kv = split_key_value(line);
        declare(kv.key, kv.key_loc);
        const SourceLoc vloc{kv.value.line, kv.value.column};
        const auto w = words(kv.value.text);
        FreedomDecl d;
        d.name = kv.key;
        d.loc = kv.key_loc;
        if (w[0] == "spin") {
          if (w.size() == 2 && parse_integer<std::size_t>(w[1], vloc, "spin dimension") != 2)
            fail(vloc, "a spin has dimension 2");
          if (w.size() > 2) fail(vloc, "expected 'spin'");
          d.type = PhysicalType::Spin;
          d.dim = 2;
        } else if ((w[0] == "field" || w[0] == "atom") && w.size() == 2) {
          d.type = w[0] == "field" ? PhysicalType::Field : PhysicalType::Atom;
          d.dim = parse_integer<std::size_t>(w[1], vloc, "dimension");
          if (d.dim < 1 || (d.type == PhysicalType::Atom && d.dim < 2))
            fail(vloc, d.type == PhysicalType::Atom ? "an atom needs at least 2 levels" : "dimension must be positive");
        } else {
          fail(vloc, "expected 'field N', 'spin' or 'atom N'");
        }
        if (d.dim > kMaxAmplitudes || (total_dim *= d.dim) > kMaxAmplitudes)
          fail(vloc, "total basis size too large");
        if (m.freedoms.size() >= detail::kMaxFreedoms) fail(vloc, "too many freedoms");
        m.freedoms.push_back(std::move(d));
      }
    } else if (name == "params") {
      Compiler c = make_compiler(m);
      for (const auto& line : lines) {
        const KeyValue kv = split_key_value(line);
        declare(kv.key, kv.key_loc);
        ExprPtr e = parse_expr_segments({kv.value});
        c.params[kv.key] = c.compile_scalar(*e, "a parameter", false);
        m.params.emplace_back(kv.key, std::move(e));
      }
    } else if (name == "hamiltonian") {
      std::vector<Segment> segs;
      for (const auto& line : lines) segs.push_back({line.number, line.column, line.text});
      if (segs.empty()) fail({}, "empty [hamiltonian] section");
      ham_loc = {segs.front().line, segs.front().column};
      m.hamiltonian = parse_expr_segments(segs);
    } else if (name == "lindblads") {
      for (const auto& line : lines) m.lindblads.push_back(parse_expr_segments({{line.number, line.column, line.text}}));
    } else if (name == "initial") {
      std::set<std::string> done;
      for (const auto& line : lines) {
        const KeyValue kv = split_key_value(line);
        const SourceLoc vloc{kv.value.line, kv.value.column};
        if (kv.key == "amplitudes") {
          if (!m.amplitudes.empty()) fail(kv.key_loc, "duplicate amplitudes entry");
          m.amplitudes = Parser(lex({kv.value})).parse_list();
          continue;
        }
        auto it = std::find_if(m.freedoms.begin(), m.freedoms.end(), [&](const auto& f) { return f.name == kv.key; });
        if (it == m.freedoms.end()) fail(kv.key_loc, "unknown identifier '" + kv.key + "' (not a declared freedom)");
        if (!done.insert(kv.key).second) fail(kv.key_loc, "duplicate initial state for '" + kv.key + "'");
        InitialDecl init;
        init.freedom = kv.key;
        init.loc = kv.key_loc;
        const auto w = words(kv.value.text);
        const std::string& what = w[0];
        auto level = [&](const char* label) {
          if (w.size() != 2) fail(vloc, std::string("expected '") + what + " N'");
          const auto n = parse_integer<std::size_t>(w[1], vloc, label);
          if (n >= it->dim) fail(vloc, std::string(label) + " " + std::to_string(n) + " out of range");
          return n;
        };
        if (what == "fock" && it->type == PhysicalType::Field) {
          init.kind = InitialDecl::Kind::Fock;
          init.level = level("Fock level");
        } else if (what == "coherent" && it->type == PhysicalType::Field) {
          init.kind = InitialDecl::Kind::Coherent;
          const auto pos = kv.value.text.find("coherent") + 8;
          init.alpha = parse_expr_segments({{kv.value.line, kv.value.column + static_cast<int>(pos),
                                             kv.value.text.substr(pos)}});
        } else if ((what == "down" || what == "up") && w.size() == 1 && it->type == PhysicalType::Spin) {
          init.kind = what == "down" ? InitialDecl::Kind::SpinDown : InitialDecl::Kind::SpinUp;
        } else if (what == "level" && it->type == PhysicalType::Atom) {
          init.kind = InitialDecl::Kind::Level;
          init.level = level("atom level");
        } else {
          fail(vloc, "type mismatch: '" + std::string(trim(kv.value.text)) + "' is not a valid initial state for " +
                         to_string(it->type) + " freedom '" + kv.key + "'");
        }
        m.initial.push_back(std::move(init));
      }
      if (!m.amplitudes.empty() && !m.initial.empty())
        fail(m.initial.front().loc, "use either per-freedom initial states or explicit amplitudes, not both");
    } else if (name == "outputs") {
      bool have_pipe = false;
      for (const auto& line : lines) {
        const KeyValue kv = split_key_value(line);
        const SourceLoc vloc{kv.value.line, kv.value.column};
        if (kv.key == "pipe") {
          const auto w = words(kv.value.text);
          if (w.size() != 4) fail(vloc, "pipe needs exactly 4 column indices");
          for (std::size_t i = 0; i < 4; ++i) m.pipe[i] = parse_integer<int>(w[i], vloc, "pipe index");
          have_pipe = true;
          continue;
        }
        if (kv.key.find_first_of("/\\") != std::string::npos || kv.key == "." || kv.key == "..")
          fail(kv.key_loc, "output file names must not contain directories");
        if (std::any_of(m.outputs.begin(), m.outputs.end(), [&](const auto& o) { return o.file == kv.key; }))
          fail(kv.key_loc, "duplicate output file '" + kv.key + "'");
        m.outputs.push_back({kv.key, parse_expr_segments({kv.value})});
      }
      if (!have_pipe && !m.outputs.empty()) m.pipe = {1, 2, 3, 4};
    } else if (name == "run") {
      for (const auto& line : lines) {
        const KeyValue kv = split_key_value(line);
        set_run_value(m.run, kv.key, kv.value.text, {kv.value.line, kv.value.column});
      }
    }
  }
  check_model(m, ham_loc);
  return m;
}

ModelFile load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open model file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  try {
    return parse_model(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void apply_run_setting(ModelFile& m, std::string_view key, std::string_view value) {
  ModelFile copy = m;
  set_run_value(copy.run, trim(key), value, {});
  check_run(copy);
  m.run = copy.run;
}

std::string print_model(const ModelFile& m) {
  std::ostringstream os;
  os << "[freedoms]\n";
  for (const auto& f : m.freedoms) {
    os << f.name << " = " << to_string(f.type);
    if (f.type != PhysicalType::Spin) os << ' ' << f.dim;
    os << '\n';
  }
  if (!m.params.empty()) {
    os << "\n[params]\n";
    for (const auto& [name, e] : m.params) os << name << " = " << print_expr(*e) << '\n';
  }
  os << "\n[hamiltonian]\n" << print_expr(*m.hamiltonian) << '\n';
  if (!m.lindblads.empty()) {
    os << "\n[lindblads]\n";
    for (const auto& l : m.lindblads) os << print_expr(*l) << '\n';
  }
  if (!m.initial.empty() || !m.amplitudes.empty()) {
    os << "\n[initial]\n";
    for (const auto& init : m.initial) {
      os << init.freedom << " = ";
      switch (init.kind) {
        case InitialDecl::Kind::Fock: os << "fock " << init.level; break;
        case InitialDecl::Kind::Coherent: os << "coherent " << print_expr(*init.alpha); break;
        case InitialDecl::Kind::SpinDown: os << "down"; break;
        case InitialDecl::Kind::SpinUp: os << "up"; break;
        case InitialDecl::Kind::Level: os << "level " << init.level; break;
      }
      os << '\n';
    }
    if (!m.amplitudes.empty()) {
      os << "amplitudes = ";
      for (std::size_t i = 0; i < m.amplitudes.size(); ++i) os << (i ? ", " : "") << print_expr(*m.amplitudes[i]);
      os << '\n';
    }
  }
  if (!m.outputs.empty()) {
    os << "\n[outputs]\n";
    for (const auto& o : m.outputs) os << o.file << " = " << print_expr(*o.expr) << '\n';
    os << "pipe = " << m.pipe[0] << ' ' << m.pipe[1] << ' ' << m.pipe[2] << ' ' << m.pipe[3] << '\n';
  }
  const RunConfig& r = m.run;
  os << "\n[run]\n"
     << "dt = " << format_number(r.dt) << '\n'
     << "numdts = " << r.numdts << '\n'
     << "numsteps = " << r.numsteps << '\n'
     << "trajectories = " << r.n_trajectories << '\n'
     << "seed = " << r.seed << '\n'
     << "threads = " << r.threads << '\n'
     << "unraveling = " << to_string(r.unraveling) << '\n'
     << "integrator = " << (r.integrator.kind == IntegratorKind::Rk4 ? "rk4" : "adaptive") << '\n'
     << "eps = " << format_number(r.integrator.eps) << '\n'
     << "abs_floor = " << format_number(r.integrator.abs_floor) << '\n'
     << "moving = " << (r.moving.enabled ? "on" : "off") << '\n'
     << "cutoff_epsilon = " << format_number(r.moving.cutoff_epsilon) << '\n'
     << "pad = " << r.moving.pad_size << '\n'
     << "shift_accuracy = " << format_number(r.moving.shift_accuracy) << '\n'
     << "n_moving = " << r.moving.n_moving_freedoms << '\n';
  return os.str();
}

namespace {

bool same_run(const RunConfig& a, const RunConfig& b) {
  return a.dt == b.dt && a.numdts == b.numdts && a.numsteps == b.numsteps && a.n_trajectories == b.n_trajectories &&
         a.seed == b.seed && a.threads == b.threads && a.unraveling == b.unraveling &&
         a.integrator.kind == b.integrator.kind && a.integrator.eps == b.integrator.eps &&
         a.integrator.abs_floor == b.integrator.abs_floor && a.moving.enabled == b.moving.enabled &&
         a.moving.cutoff_epsilon == b.moving.cutoff_epsilon && a.moving.pad_size == b.moving.pad_size &&
         a.moving.shift_accuracy == b.moving.shift_accuracy &&
         a.moving.n_moving_freedoms == b.moving.n_moving_freedoms;
}

bool same_list(const std::vector<ExprPtr>& a, const std::vector<ExprPtr>& b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](const ExprPtr& x, const ExprPtr& y) { return same_expr(*x, *y); });
}

}  // namespace

bool equivalent(const ModelFile& a, const ModelFile& b) {
  if (a.freedoms.size() != b.freedoms.size() || a.params.size() != b.params.size() ||
      a.initial.size() != b.initial.size() || a.outputs.size() != b.outputs.size())
    return false;
  for (std::size_t i = 0; i < a.freedoms.size(); ++i) {
    const auto &x = a.freedoms[i], &y = b.freedoms[i];
    if (x.name != y.name || x.type != y.type || x.dim != y.dim) return false;
  }
  for (std::size_t i = 0; i < a.params.size(); ++i)
    if (a.params[i].first != b.params[i].first || !same_expr(*a.params[i].second, *b.params[i].second)) return false;
  if (!same_expr(*a.hamiltonian, *b.hamiltonian) || !same_list(a.lindblads, b.lindblads) ||
      !same_list(a.amplitudes, b.amplitudes))
    return false;
  for (std::size_t i = 0; i < a.initial.size(); ++i) {
    const auto &x = a.initial[i], &y = b.initial[i];
    if (x.freedom != y.freedom || x.kind != y.kind || x.level != y.level || bool(x.alpha) != bool(y.alpha) ||
        (x.alpha && !same_expr(*x.alpha, *y.alpha)))
      return false;
  }
  for (std::size_t i = 0; i < a.outputs.size(); ++i)
    if (a.outputs[i].file != b.outputs[i].file || !same_expr(*a.outputs[i].expr, *b.outputs[i].expr)) return false;
  return a.pipe == b.pipe && same_run(a.run, b.run);
}

CompiledModel compile_model(const ModelFile& m) {
  const Compiler c = make_compiler(m);
  std::vector<Operator> ls;
  for (const auto& l : m.lindblads) ls.push_back(c.compile_operator(*l, "a Lindblad operator"));
  ModelOperators ops(c.compile_operator(*m.hamiltonian, "the Hamiltonian"), std::move(ls));

  State psi0;
  if (!m.amplitudes.empty()) {
    std::vector<Complex> amps;
    for (const auto& a : m.amplitudes) amps.push_back(c.compile_scalar(*a, "an amplitude", false).value);
    psi0 = State::from_amplitudes(specs_of(m), std::move(amps));
    psi0.normalize();
  } else {
    std::vector<State> parts;
    for (const auto& f : m.freedoms) {
      auto it = std::find_if(m.initial.begin(), m.initial.end(), [&](const auto& i) { return i.freedom == f.name; });
      if (it == m.initial.end()) {
        parts.push_back(State::basis(f.dim, 0, f.type));
        continue;
      }
      switch (it->kind) {
        case InitialDecl::Kind::Coherent:
          parts.push_back(State::coherent(f.dim, c.compile_scalar(*it->alpha, "a coherent amplitude", false).value));
          break;
        case InitialDecl::Kind::SpinUp: parts.push_back(State::basis(2, 1, PhysicalType::Spin)); break;
        case InitialDecl::Kind::SpinDown: parts.push_back(State::basis(2, 0, PhysicalType::Spin)); break;
        default: parts.push_back(State::basis(f.dim, it->level, f.type)); break;
      }
    }
    psi0 = State::product(parts);
  }

  OutputSpec out;
  for (const auto& o : m.outputs) {
    out.operators.push_back(c.compile_operator(*o.expr, "an output"));
    out.file_names.push_back(o.file);
  }
  out.pipe = m.pipe;
  return CompiledModel{std::move(psi0), std::move(ops), std::move(out), m.run};
}

}  // namespace qtraj
