#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "qtraj/dense.hpp"
#include "qtraj/model.hpp"
#include "support/reference.hpp"

using namespace qtraj;
using ref::C;
using ref::Mat;

namespace {

std::string shg_text(int field_dim) {
  std::ifstream is(QTRAJ_MODELS_DIR "/shg.qt");
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  std::string text = ss.str();
  const std::string from = "field 50";
  const std::string to = "field " + std::to_string(field_dim);
  for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size()))
    text.replace(pos, from.size(), to);
  return text;
}

std::string small_model(const std::string& hamiltonian, const std::string& extra = "") {
  return "[freedoms]\nc = field 4\ns = spin\n[params]\ng = 0.5\n[hamiltonian]\n" + hamiltonian + "\n" + extra;
}

// Parse failure message, or "" on success.
std::string parse_error(const std::string& text) {
  try {
    parse_model(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

Operator prim(PrimaryKind k, std::size_t f) { return Operator::primary(k, f); }

}  // namespace

TEST_SUITE("model") {

TEST_CASE("the SHG model file parses") {
  const ModelFile m = parse_model(shg_text(50));
  REQUIRE(m.freedoms.size() == 3);
  CHECK(m.freedoms[0].name == "m1");
  CHECK(m.freedoms[2].type == PhysicalType::Spin);
  CHECK(m.lindblads.size() == 3);
  CHECK(m.outputs.size() == 5);
  CHECK(m.pipe == std::array<int, 4>{1, 5, 13, 17});
  CHECK(m.run.dt == 0.01);
  CHECK(m.run.numdts == 50);
  CHECK(m.run.numsteps == 10);
  CHECK(m.run.seed == 38388389u);
  CHECK(m.run.unraveling == Unraveling::Qsd);
  CHECK(m.run.integrator.kind == IntegratorKind::Adaptive);
  CHECK(m.run.moving.enabled);
  CHECK(m.run.moving.n_moving_freedoms == 2);
  CHECK(m.run.moving.cutoff_epsilon == 0.01);
  CHECK(m.run.moving.pad_size == 2);
  const CompiledModel c = compile_model(m);
  CHECK(c.initial.size() == 5000);
  CHECK(c.outputs.file_names.front() == "X1.out");
}

TEST_CASE("model trees match hand-built trees") {
  const CompiledModel c = compile_model(parse_model(shg_text(6)));
  const double E = 20, chi = 0.4, omega = -0.7, eta = 0.001, g1 = 1, g2 = 1, kappa = 0.1;
  const Operator a1 = prim(PrimaryKind::Annihilation, 0), a2 = prim(PrimaryKind::Annihilation, 1);
  const Operator sp = prim(PrimaryKind::SigmaPlus, 2), sm = prim(PrimaryKind::SigmaMinus, 2);
  const Operator h = E * kI * (a1.hc() - a1) + 0.5 * chi * kI * (pow(a1.hc(), 2) * a2 - pow(a1, 2) * a2.hc()) +
                     omega * sp * sm + eta * kI * (a2 * sp - a2.hc() * sm);
  const std::vector<Operator> ls{std::sqrt(2 * g1) * a1, std::sqrt(2 * g2) * a2, std::sqrt(2 * kappa) * sm};
  const State& layout = c.initial;
  CHECK((to_dense(c.operators.hamiltonian, layout) - to_dense(h, layout)).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(c.operators.lindblads.size() == 3);
  for (std::size_t j = 0; j < 3; ++j)
    CHECK((to_dense(c.operators.lindblads[j], layout) - to_dense(ls[j], layout)).cwiseAbs().maxCoeff() < 1e-12);

  // Independent Kronecker construction of the Hamiltonian.
  const std::vector<int> dims{6, 6, 2};
  const Mat A1 = ref::embed(ref::annihilation(6), dims, 0), A2 = ref::embed(ref::annihilation(6), dims, 1);
  const Mat SP = ref::embed(ref::sigma_plus(), dims, 2), SM = ref::embed(ref::sigma_minus(), dims, 2);
  const C I(0, 1);
  const Mat H = E * I * (A1.adjoint() - A1) +
                0.5 * chi * I * (A1.adjoint() * A1.adjoint() * A2 - A1 * A1 * A2.adjoint()) + omega * SP * SM +
                eta * I * (A2 * SP - A2.adjoint() * SM);
  CHECK((to_dense(c.operators.hamiltonian, layout) - H).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((to_dense(c.operators.lindblads[2], layout) - std::sqrt(2 * kappa) * SM).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("unknown identifiers are reported with their location") {
  const auto msg = parse_error(small_model("sp(s)*undefined_freedom"));
  CHECK(contains(msg, "line 7, column 7"));
  CHECK(contains(msg, "undefined_freedom"));
  CHECK(contains(parse_error(small_model("a(nope)")), "nope"));
}

TEST_CASE("type mismatches") {
  CHECK(contains(parse_error(small_model("a(s)")), "type mismatch"));
  CHECK(contains(parse_error(small_model("sp(c)")), "type mismatch"));
  CHECK(contains(parse_error(small_model("sqrt(a(c))")), "type mismatch"));
  CHECK(contains(parse_error(small_model("sp(s)*sm(s)", "[lindblads]\ng\n")), "type mismatch"));
  CHECK(contains(parse_error(small_model("n(c) + 1")), "type mismatch"));
  CHECK(contains(parse_error(small_model("n(c)^-1")), "line 7"));
  CHECK(contains(parse_error(small_model("n(c)^x")), "line 7"));
}

TEST_CASE("reserved names and duplicate declarations") {
  CHECK(!parse_error("[freedoms]\ni = spin\n").empty());
  CHECK(!parse_error("[freedoms]\nt = spin\n").empty());
  CHECK(!parse_error("[freedoms]\nsqrt = spin\n").empty());
  CHECK(!parse_error("[freedoms]\nsp = spin\n").empty());
  CHECK(!parse_error("[freedoms]\ns = spin\n[params]\ni = 2\n").empty());
  CHECK(!parse_error("[freedoms]\ns = spin\n[params]\ns = 2\n").empty());
  CHECK(!parse_error("[freedoms]\ns = spin\ns = spin\n").empty());
  CHECK(!parse_error("[freedoms]\ns = spin\n[freedoms]\nq = spin\n").empty());
  CHECK(!parse_error("[stuff]\n").empty());
  CHECK(!parse_error("[freedoms]\nq = atom 1\n").empty());
  CHECK(!parse_error("[freedoms]\nq = field 0\n").empty());
}

TEST_CASE("non-Hermitian Hamiltonians are rejected") {
  CHECK(contains(parse_error(small_model("a(c)")), "Hermitian"));
  CHECK(contains(parse_error(small_model("i*n(c)")), "Hermitian"));
  CHECK(contains(parse_error(small_model("g*sp(s)")), "Hermitian"));
  // Hermitian ones pass, including products that truncation spoils at the top level.
  CHECK(parse_error(small_model("g*(sp(s)*a(c) + sm(s)*adag(c))")).empty());
  CHECK(parse_error(small_model("a(c)*adag(c)")).empty());
  CHECK(parse_error(small_model("x(c)^2 + p(c)^2")).empty());
  CHECK(parse_error(small_model("cos(t)*(a(c) + a(c).hc())")).empty());
  CHECK(contains(parse_error(small_model("sin(t)*a(c)")), "Hermitian"));
}

TEST_CASE("lexical and syntax errors carry line and column") {
  CHECK(contains(parse_error(small_model("n(c) + $")), "line 7, column 8"));
  CHECK(contains(parse_error(small_model("n(c) +")), "line 7"));
  CHECK(contains(parse_error(small_model("(n(c)")), "line 7"));
  CHECK(contains(parse_error(small_model("n(c))")), "line 7"));
  CHECK(contains(parse_error(small_model("n(c) 2")), "line 7"));
  CHECK(contains(parse_error("[freedoms]\nc = field\n"), "line 2"));
  CHECK(contains(parse_error("[freedoms]\nc spin\n"), "line 2"));
  CHECK(contains(parse_error("stray\n"), "line 1"));
  CHECK(contains(parse_error(small_model("n(c)", "[run]\ndt = -1\n")), "line 9"));
  CHECK(contains(parse_error(small_model("n(c)", "[run]\nunraveling = sideways\n")), "line 9"));
  CHECK(contains(parse_error(small_model("n(c)", "[run]\nbogus = 1\n")), "line 9"));
}

TEST_CASE("precedence and associativity") {
  // -a^2 is -(a^2); a-b-c is (a-b)-c; a*b+c is (a*b)+c.
  const ModelFile m = parse_model(
      "[freedoms]\nc = field 5\n[params]\nx1 = -2^2\nx2 = 1-2-3\nx3 = 2*3+4\nx4 = (1+2i)*(1-2i)\n"
      "x5 = 2i^2\n[hamiltonian]\nx1*n(c)\n");
  const auto value = [&](std::size_t k) {
    const Expr& e = *m.params[k].second;
    return print_expr(e);
  };
  CHECK(value(0) == "-2^2");
  CHECK(value(1) == "1 - 2 - 3");
  CHECK(value(2) == "2*3 + 4");
  const CompiledModel c = compile_model(m);
  const State& layout = c.initial;
  const Mat h = to_dense(c.operators.hamiltonian, layout);
  CHECK(std::abs(h(1, 1) - C(-4.0)) < 1e-14);
  const Mat expected = -4.0 * ref::number(5);
  CHECK((h - expected).cwiseAbs().maxCoeff() < 1e-14);

  // Parameters evaluated through a Hermitian multiple of the identity-free operator.
  const auto eval = [](const std::string& expr) {
    const ModelFile mm = parse_model("[freedoms]\nc = field 3\n[params]\nv = " + expr + "\n[hamiltonian]\nv*n(c)\n");
    const CompiledModel cc = compile_model(mm);
    return to_dense(cc.operators.hamiltonian, cc.initial)(1, 1);
  };
  CHECK(std::abs(eval("1-2-3") - C(-4.0)) < 1e-14);
  CHECK(std::abs(eval("2*3+4") - C(10.0)) < 1e-14);
  CHECK(std::abs(eval("(1+2i)*(1-2i)") - C(5.0)) < 1e-14);
  CHECK(std::abs(eval("-(2^3)") - C(-8.0)) < 1e-14);
  CHECK(std::abs(eval("sqrt(16) + cos(0) + exp(0)") - C(6.0)) < 1e-14);
  CHECK(std::abs(eval("i*i") - C(-1.0)) < 1e-14);
}

TEST_CASE("print_model round-trips") {
  const std::vector<std::string> texts{
      shg_text(50),
      small_model("g*(sp(s)*a(c) + sm(s)*adag(c)) - 0.25i*(-1i)*n(c)^2",
                  "[lindblads]\nsqrt(0.1)*sm(s)\n(1+0.5i)*a(c)\n[initial]\nc = coherent 0.3 - 0.2i\ns = up\n"
                  "[outputs]\nN = n(c)\nS = sp(s).hc()\npipe = 2 1 3 4\n[run]\nunraveling = orthojump\n"
                  "integrator = rk4\ntrajectories = 12\nthreads = 3\n"),
      "[freedoms]\nq = atom 3\n[params]\nw = 2\n[hamiltonian]\nw*(tr(q,1,0) + tr(q,0,1)) + cos(t)*(tr(q,2,1) + tr(q,1,2))\n"
      "[lindblads]\ntr(q,0,2)\n[initial]\namplitudes = 0.6, 0, 0.8i\n[run]\nintegrator = adaptive 1e-7\n",
  };
  for (const auto& text : texts) {
    const ModelFile a = parse_model(text);
    const std::string printed = print_model(a);
    const ModelFile b = parse_model(printed);
    CHECK(equivalent(a, b));
    CHECK(print_model(b) == printed);
  }
  const ModelFile a = parse_model(texts[0]);
  ModelFile b = a;
  apply_run_setting(b, "seed", "7");
  CHECK(!equivalent(a, b));
}

TEST_CASE("print_expr keeps meaning") {
  std::mt19937_64 rng(9);
  const std::vector<std::string> ops{"n(c)", "a(c)", "adag(c)", "sp(s)", "sz(s)", "x(c)"};
  const std::vector<std::string> scalars{"g", "2", "0.5i", "(g+1)", "sqrt(g)", "-1"};
  std::uniform_int_distribution<std::size_t> pick_op(0, ops.size() - 1), pick_scalar(0, scalars.size() - 1);
  std::uniform_int_distribution<int> op(0, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::string expr = ops[pick_op(rng)];
    for (int k = 0; k < 4; ++k) {
      switch (op(rng)) {
        case 0: expr = expr + " + " + ops[pick_op(rng)]; break;
        case 1: expr = ops[pick_op(rng)] + " - (" + expr + ")"; break;
        case 2: expr = "(" + expr + ")*" + ops[pick_op(rng)]; break;
        case 5: expr = scalars[pick_scalar(rng)] + "*" + expr; break;
        case 3: expr = "-(" + expr + ")"; break;
        case 4: expr = "(" + expr + ")^2"; break;
      }
    }
    // Sandwich into a Hermitian form so the model loads.
    const std::string h = "(" + expr + ") + (" + expr + ").hc()";
    const ModelFile m = parse_model(small_model(h));
    const ModelFile again = parse_model(small_model(print_expr(*m.hamiltonian)));
    CHECK(same_expr(*m.hamiltonian, *again.hamiltonian));
    const CompiledModel c1 = compile_model(m), c2 = compile_model(again);
    CHECK((to_dense(c1.operators.hamiltonian, c1.initial) - to_dense(c2.operators.hamiltonian, c2.initial))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("initial states") {
  SUBCASE("per freedom") {
    const auto c = compile_model(parse_model(small_model("n(c)", "[initial]\nc = fock 2\ns = up\n")));
    const Eigen::VectorXcd v = to_vector(c.initial);
    CHECK(std::abs(v(2 * 2 + 1) - C(1.0)) < 1e-15);
    CHECK(std::abs(v.norm() - 1.0) < 1e-15);
  }
  SUBCASE("coherent") {
    const auto c = compile_model(parse_model(small_model("n(c)", "[initial]\nc = coherent 0.5i\n")));
    const Eigen::VectorXcd v = to_vector(c.initial);
    // spin defaults to down; c_1/c_0 = alpha
    CHECK(std::abs(v(2) / v(0) - C(0, 0.5)) < 1e-12);
  }
  SUBCASE("defaults to ground states") {
    const auto c = compile_model(parse_model(small_model("n(c)")));
    CHECK(std::abs(to_vector(c.initial)(0) - C(1.0)) < 1e-15);
  }
  SUBCASE("amplitudes are normalized") {
    const auto c = compile_model(parse_model(small_model("n(c)", "[initial]\namplitudes = 1, 1, 0, 0, 0, 0, 0, 0\n")));
    const Eigen::VectorXcd v = to_vector(c.initial);
    CHECK(std::abs(v(0) - C(std::sqrt(0.5))) < 1e-15);
  }
  CHECK(!parse_error(small_model("n(c)", "[initial]\namplitudes = 1, 1\n")).empty());
  CHECK(!parse_error(small_model("n(c)", "[initial]\nc = fock 4\n")).empty());
  CHECK(!parse_error(small_model("n(c)", "[initial]\nc = up\n")).empty());
  CHECK(!parse_error(small_model("n(c)", "[initial]\ns = fock 0\n")).empty());
  CHECK(!parse_error(small_model("n(c)", "[initial]\nc = fock 0\namplitudes = 1, 0, 0, 0, 0, 0, 0, 0\n")).empty());
  CHECK_THROWS_AS(compile_model(parse_model(small_model("n(c)", "[initial]\namplitudes = 0, 0, 0, 0, 0, 0, 0, 0\n"))),
                  Error);
}

TEST_CASE("time-dependent coefficients") {
  const auto c = compile_model(parse_model(small_model("cos(2*t)*n(c) + t*sz(s)")));
  const State& layout = c.initial;
  const Mat h0 = to_dense(c.operators.hamiltonian, layout, 0.0);
  const Mat h1 = to_dense(c.operators.hamiltonian, layout, 0.7);
  const std::vector<int> dims{4, 2};
  const Mat n = ref::embed(ref::number(4), dims, 0), z = ref::embed(ref::sigma_z(), dims, 1);
  CHECK((h0 - n).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((h1 - (std::cos(1.4) * n + 0.7 * z)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("run settings") {
  ModelFile m = parse_model(small_model("n(c)"));
  apply_run_setting(m, "seed", "99");
  apply_run_setting(m, "unraveling", "jump");
  apply_run_setting(m, "integrator", "adaptive 1e-6");
  apply_run_setting(m, "trajectories", "40");
  apply_run_setting(m, "dt", "0.002");
  CHECK(m.run.seed == 99u);
  CHECK(m.run.unraveling == Unraveling::Jump);
  CHECK(m.run.integrator.kind == IntegratorKind::Adaptive);
  CHECK(m.run.integrator.eps == 1e-6);
  CHECK(m.run.n_trajectories == 40u);
  CHECK(m.run.dt == 0.002);
  const ModelFile before = m;
  CHECK_THROWS_AS(apply_run_setting(m, "dt", "zero"), Error);
  CHECK_THROWS_AS(apply_run_setting(m, "dt", "-1"), Error);
  CHECK_THROWS_AS(apply_run_setting(m, "warp", "9"), Error);
  CHECK(equivalent(m, before));
  apply_run_setting(m, "moving", "on");
  apply_run_setting(m, "n_moving", "1");
  CHECK_THROWS_AS(apply_run_setting(m, "n_moving", "2"), Error);  // the spin cannot move
  CHECK(m.run.moving.n_moving_freedoms == 1u);
}

TEST_CASE("fuzzed input only raises structured errors") {
  std::mt19937_64 rng(2024);
  const std::string base = shg_text(6);
  std::uniform_int_distribution<int> byte(0, 255);
  const std::string alphabet = "()[]=+-*^.,#\n 0123456789ia(m1)adag sqrt tr hc field spin atom";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  int accepted = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text;
    if (trial % 4 == 0) {
      const std::size_t len = static_cast<std::size_t>(byte(rng)) * 2;
      for (std::size_t k = 0; k < len; ++k) text.push_back(static_cast<char>(byte(rng)));
    } else {
      text = base;
      const int edits = 1 + trial % 5;
      for (int k = 0; k < edits; ++k) {
        std::uniform_int_distribution<std::size_t> at(0, text.size() - 1);
        const std::size_t pos = at(rng);
        switch (k % 3) {
          case 0: text[pos] = alphabet[pick(rng)]; break;
          case 1: text.erase(pos, 1); break;
          case 2: text.insert(pos, 1, static_cast<char>(byte(rng))); break;
        }
      }
    }
    try {
      const ModelFile m = parse_model(text);
      (void)print_model(m);
      ++accepted;
    } catch (const Error& e) {
      CHECK(std::string(e.what()).size() > 0);
    }
  }
  MESSAGE("accepted mutants: " << accepted);
  // Deep nesting is a diagnostic, not a stack overflow.
  const std::string deep(100000, '(');
  CHECK(!parse_error(small_model(deep)).empty());
}

TEST_CASE("load_model names the file") {
  try {
    load_model("/nonexistent/model.qt");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
    CHECK(contains(e.what(), "/nonexistent/model.qt"));
  }
  const ModelFile m = load_model(QTRAJ_MODELS_DIR "/shg.qt");
  CHECK(m.freedoms.size() == 3);
}

}  // TEST_SUITE
