#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "refleq/expr.hpp"

using namespace refleq;

TEST_CASE("parse shapes and free variables") {
  const Expression e = Expression::parse("exp(sin(t))");
  REQUIRE(e.free_vars().size() == 1);
  CHECK(e.free_vars()[0] == "t");
  const auto& root = e.root();
  REQUIRE(root.kind == Expression::NodeKind::call);
  CHECK(root.func == Expression::Func::exp);
  REQUIRE(root.args.size() == 1);
  CHECK(root.args[0].kind == Expression::NodeKind::call);
  CHECK(root.args[0].func == Expression::Func::sin);

  const Expression zero = Expression::parse("0");
  CHECK(zero.free_vars().empty());
  CHECK(zero.is_literal_zero());
}

TEST_CASE("precedence: unary minus vs power") {
  const Expression e = Expression::parse("-t^2");
  CHECK(e.eval({{"t", 3.0}}) == -9.0);
  CHECK(Expression::parse("(-t)^2").eval({{"t", 3.0}}) == 9.0);
  // right-associative power
  CHECK(Expression::parse("2^3^2").eval(std::span<const double>{}) == 512.0);
  CHECK(Expression::parse("2^-2").eval(std::span<const double>{}) == 0.25);
}

TEST_CASE("reference evaluations") {
  CHECK(Expression::parse("exp(-abs(t))/9").eval({{"t", 0.0}}) ==
        doctest::Approx(1.0 / 9.0).epsilon(1e-15));
  CHECK(Expression::parse("t - p").eval({{"t", 2.0}, {"p", 0.5}}) == 1.5);
  CHECK(Expression::parse("sin(x1)+cos(x2)").eval({{"x1", 0.0}, {"x2", 0.0}}) ==
        1.0);
  CHECK(Expression::parse("pi").eval(std::span<const double>{}) ==
        doctest::Approx(M_PI));
  CHECK(Expression::parse("e").eval(std::span<const double>{}) ==
        doctest::Approx(M_E));
  CHECK(Expression::parse("sign(0)").eval(std::span<const double>{}) == 0.0);
  CHECK(Expression::parse("sign(-3)").eval(std::span<const double>{}) == -1.0);
  CHECK(Expression::parse("min(2,3)+max(2,3)").eval(std::span<const double>{}) ==
        5.0);
  CHECK(Expression::parse("1e-2").eval(std::span<const double>{}) == 0.01);
  CHECK(Expression::parse("2.5E3").eval(std::span<const double>{}) == 2500.0);
}

TEST_CASE("precedence matches composed double arithmetic") {
  const Expression e = Expression::parse("a+b*c");
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 200; ++i) {
    const double a = u(rng), b = u(rng), c = u(rng);
    const double v[3] = {a, b, c};  // free vars in appearance order a, b, c
    CHECK(e.eval(std::span<const double>(v, 3)) == a + (b * c));
  }
}

TEST_CASE("parse errors carry offsets and expectations") {
  CHECK_THROWS_AS(Expression::parse(""), ParseError);
  try {
    Expression::parse("1 + * 2");
    FAIL("expected throw");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
    CHECK(!e.expected().empty());
  }
  try {
    Expression::parse("foo(1)");
    FAIL("expected throw");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("unknown function") != std::string::npos);
  }
  try {
    Expression::parse("min(1)");
    FAIL("expected throw");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("arity") != std::string::npos);
  }
  CHECK_THROWS_AS(Expression::parse("sin(1,2)"), ParseError);
  CHECK_THROWS_AS(Expression::parse("(1+2"), ParseError);
  CHECK_THROWS_AS(Expression::parse("1 2"), ParseError);
}

TEST_CASE("eval errors: unbound variables and domain failures") {
  CHECK_THROWS_AS(Expression::parse("x+y").eval({{"x", 1.0}}), EvalError);
  CHECK_THROWS_AS(Expression::parse("ln(0)").eval(std::span<const double>{}),
                  EvalError);
  CHECK_THROWS_AS(Expression::parse("ln(-1)").eval(std::span<const double>{}),
                  EvalError);
  CHECK_THROWS_AS(Expression::parse("sqrt(-4)").eval(std::span<const double>{}),
                  EvalError);
  CHECK_THROWS_AS(Expression::parse("1/0").eval(std::span<const double>{}),
                  EvalError);
  CHECK_THROWS_AS(
      Expression::parse("(-2)^0.5").eval(std::span<const double>{}),
      EvalError);
  // fine: IEEE semantics away from the listed domain errors
  CHECK(Expression::parse("1/3").eval(std::span<const double>{}) ==
        doctest::Approx(1.0 / 3.0));
}

namespace {

// random well-formed expression source, depth-bounded
std::string random_expr(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 6);
  switch (pick(rng)) {
    case 0: {
      std::uniform_real_distribution<double> u(-5, 5);
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", std::fabs(u(rng)));
      return buf;
    }
    case 1: {
      const char* vars[] = {"t", "x1", "x2", "p"};
      return vars[rng() % 4];
    }
    case 2:
      return "-" + random_expr(rng, depth - 1);
    case 3: {
      const char* ops[] = {"+", "-", "*", "/"};
      return "(" + random_expr(rng, depth - 1) + ops[rng() % 4] +
             random_expr(rng, depth - 1) + ")";
    }
    case 4: {
      const char* fns[] = {"sin", "cos", "tan", "tanh", "exp", "abs", "sign"};
      return std::string(fns[rng() % 7]) + "(" + random_expr(rng, depth - 1) +
             ")";
    }
    case 5: {
      const char* fns[] = {"min", "max"};
      return std::string(fns[rng() % 2]) + "(" + random_expr(rng, depth - 1) +
             "," + random_expr(rng, depth - 1) + ")";
    }
    default:
      return "(" + random_expr(rng, depth - 1) + "^2)";
  }
}

}  // namespace

TEST_CASE("round trip: parse of pretty-print is structurally identical") {
  std::mt19937 rng(20240817);
  for (int i = 0; i < 1000; ++i) {
    const std::string src = random_expr(rng, 4);
    const Expression a = Expression::parse(src);
    const Expression b = Expression::parse(a.str());
    CHECK(a.same_structure(b));
    if (!a.same_structure(b)) {
      MESSAGE("source: ", src, "  printed: ", a.str());
      break;
    }
  }
}

TEST_CASE("pretty-print keeps structure for tricky cases") {
  for (const char* src : {"-t^2", "(-t)^2", "a-(-b)", "(a+b)*c", "a+(b+c)",
                          "(a^b)^c", "a^(b^c)", "-(x+y)"}) {
    const Expression a = Expression::parse(src);
    CHECK(a.same_structure(Expression::parse(a.str())));
  }
}

TEST_CASE("compiled expressions bind positions and constants") {
  const Expression e = Expression::parse("exp(-abs(t))/9*(sin(x1)+cos(x2))+0*p");
  static const std::string pos[] = {"t", "x1", "x2"};
  const CompiledExpr fn(e, pos, {{"p", 0.5}});
  CHECK(fn(0.0, 0.0, 0.0) == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
  CHECK_THROWS_AS(CompiledExpr(e, std::span<const std::string>(pos, 2)),
                  Error);
}
