#include <doctest.h>

#include <cmath>

#include "refleq/solver.hpp"
#include "refleq/verify.hpp"

using namespace refleq;

namespace {

const QuadratureConfig kQuad{};
const GridSpec kSmallGrid{15.0, 0.05};

ProblemSpec geometry(double a, double b) {
  ProblemSpec ps;
  ps.a = a;
  ps.b = b;
  ps.f = [](double, double, double) { return 0.0; };
  ps.h = ps.f;
  return ps;
}

}  // namespace

TEST_CASE("constant-lipschitz condition: closed-form geometry") {
  ProblemSpec ps = geometry(std::sqrt(2.0), 1.0);
  ps.kernel = KernelSpec{Expression::parse("exp(-s)"), 1.0, 1.0, 0.0};

  SUBCASE("reference tuple (sqrt2, 1, 1/20, 1/20, c=1)") {
    const auto rep =
        check_constant_lipschitz(ps, 0.05, 0.05, kQuad, 1.0);
    const double closed = (2.0 * std::sqrt(2.0) + 2.0) * 0.15;
    CHECK(std::fabs(rep.lhs - closed) < 1e-9);
    CHECK(rep.verdict);
    CHECK(rep.rhs == 1.0);
    CHECK(rep.factor == rep.lhs);
  }

  SUBCASE("quadrature-computed kernel mass agrees") {
    const auto rep = check_constant_lipschitz(ps, 0.05, 0.05, kQuad);
    CHECK(rep.c == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(rep.lhs ==
          doctest::Approx((2.0 * std::sqrt(2.0) + 2.0) * 0.15).epsilon(1e-7));
  }

  SUBCASE("trivial contraction at zero constants") {
    const auto rep = check_constant_lipschitz(ps, 0.0, 0.0, kQuad, 1.0);
    CHECK(rep.lhs == 0.0);
    CHECK(rep.verdict);
  }

  SUBCASE("large constant fails") {
    const auto rep = check_constant_lipschitz(ps, 10.0, 0.05, kQuad, 1.0);
    CHECK(rep.lhs > 1.0);
    CHECK(!rep.verdict);
  }
}

TEST_CASE("lp condition: reference constants") {
  ProblemSpec ps = geometry(std::sqrt(2.0), 1.0);
  ps.kernel = KernelSpec{Expression::parse("exp(-s)"), 1.0, 1.0, 0.0};
  ps.mu.rho = Expression::parse("exp(sin(t))");
  const Expression lip = Expression::parse("exp(-abs(t))/9");

  const auto rep = check_lp_lipschitz(ps, lip, lip, 2.0, kQuad,
                                      LipschitzEnvelope{1.0, 0.0});
  CHECK(rep.q == 2.0);
  CHECK(rep.lf == doctest::Approx(1.0 / 9.0).epsilon(1e-7));
  CHECK(rep.lh == doctest::Approx(1.0 / 9.0).epsilon(1e-7));
  CHECK(rep.k_qnorm == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-7));

  const double want_lhs = (std::sqrt(2.0) + 1.0) / 9.0;
  const double want_rhs = 1.0 / (std::sqrt(2.0) + 2.0);
  CHECK(std::fabs(rep.lhs - want_lhs) < 1e-6);
  CHECK(std::fabs(rep.rhs - want_rhs) < 1e-6);
  CHECK(rep.verdict);

  // (h'2) membership data: ||Lf||_L2(dmu) frozen from the oracle
  CHECK(rep.lf_mu_norm == doctest::Approx(0.11818632339450358).epsilon(1e-6));
  CHECK(rep.lf_mu_norm <= std::sqrt(M_E) / 9.0);

  SUBCASE("zero lipschitz data is trivially contractive") {
    const Expression zero = Expression::parse("0");
    const auto z = check_lp_lipschitz(ps, zero, zero, 2.0, kQuad);
    CHECK(z.lhs == 0.0);
    CHECK(z.verdict);
  }

  SUBCASE("p must exceed 1") {
    CHECK_THROWS_AS(check_lp_lipschitz(ps, lip, lip, 1.0, kQuad), Error);
  }
}

TEST_CASE("estimate_lipschitz") {
  SUBCASE("reference rhs at t = 0 approaches 1/9") {
    const Expression g = Expression::parse("(exp(-abs(t))/9)*(sin(x1)+cos(x2))");
    SampleBox box;
    box.t_lo = box.t_hi = 0.0;
    const double est = estimate_lipschitz(g, box, 2000);
    CHECK(est <= 1.0 / 9.0 + 1e-9);
    CHECK(est == doctest::Approx(1.0 / 9.0).epsilon(1e-4));
  }
  SUBCASE("constant in (x1,x2) gives 0") {
    const Expression g = Expression::parse("sin(t)");
    CHECK(estimate_lipschitz(g, SampleBox{}, 1500) == 0.0);
  }
  SUBCASE("linear function recovers its slope") {
    const Expression g = Expression::parse("2*x1");
    CHECK(estimate_lipschitz(g, SampleBox{}, 1500) ==
          doctest::Approx(2.0).epsilon(1e-9));
  }
  SUBCASE("sample floor enforced") {
    CHECK_THROWS_AS(
        estimate_lipschitz(Expression::parse("x1"), SampleBox{}, 10), Error);
  }
}

TEST_CASE("picard: zero rhs converges immediately to 0") {
  ProblemSpec ps = geometry(std::sqrt(2.0), 1.0);
  const GridFunction x0 = GridFunction::sample(

      kSmallGrid, [](double t) { return std::cos(2 * t); });
  const SolveTrace trace = picard_solve(ps, x0, 1e-8, 50, kQuad);
  CHECK(trace.converged);
  CHECK(trace.iterations() <= 2);
  CHECK(sup_distance(trace.solution,
                     GridFunction::constant(kSmallGrid, 0.0)) == 0.0);
}

TEST_CASE("picard: manufactured sinusoid without coupling (eps = 0)") {
  // f(t) = cos t - (sqrt2 - 1) sin t forces u = sin t
  ProblemSpec ps = geometry(std::sqrt(2.0), 1.0);
  const double amb = std::sqrt(2.0) - 1.0;
  ps.f = [amb](double t, double, double) {
    return std::cos(t) - amb * std::sin(t);
  };
  const GridSpec grid{20.0, 0.02};
  const SolveTrace trace =
      picard_solve(ps, GridFunction::constant(grid, 0.0), 1e-8, 50, kQuad);
  REQUIRE(trace.converged);
  double err = 0;
  for (long i = 0; i < trace.solution.size(); ++i) {
    const double t = trace.solution.node(i);
    if (std::fabs(t) > 10) continue;
    err = std::max(err, std::fabs(trace.solution[i] - std::sin(t)));
  }
  CHECK(err < 1e-4);
  CHECK(std::isfinite(trace.final_residual));
  CHECK(trace.final_residual < 1e-4);
}

TEST_CASE("picard: geometric decay, a-priori bound, uniqueness") {
  // contractive manufactured problem on a small grid
  ProblemSpec tmpl = geometry(std::sqrt(2.0), 1.0);
  tmpl.h = [](double t, double x1, double x2) {
    return std::exp(-std::fabs(t)) / 20.0 * (std::sin(x1) + std::cos(x2));
  };
  tmpl.h_lipschitz = 0.05;
  tmpl.kernel = KernelSpec{Expression::parse("exp(-s)"), 1.0, 1.0, 0.0};

  const ManufacturedProblem mp = manufacture(
      Expression::parse("sin(t)"), tmpl, kSmallGrid, 0.05, kQuad);
  const double rho_hat = mp.gate.factor;
  REQUIRE(rho_hat < 1.0);

  std::vector<GridFunction> iterates;
  const auto observe = [&](int, const GridFunction& x, double) {
    iterates.push_back(x);
  };
  const SolveTrace trace =
      picard_solve(mp.problem, GridFunction::constant(kSmallGrid, 0.0), 1e-9,
                   100, kQuad, 1, observe);
  REQUIRE(trace.converged);

  // geometric decay of the step sizes
  for (std::size_t k = 1; k < trace.steps.size(); ++k) {
    if (trace.steps[k - 1] < 1e-7) continue;
    CHECK(trace.steps[k] <= rho_hat * trace.steps[k - 1] + 1e-6);
  }

  // a-priori error bound against the final iterate as proxy for the limit
  const GridFunction& last = iterates.back();
  const double d0 = trace.steps.front();
  for (std::size_t k = 0; k + 1 < iterates.size(); ++k) {
    const double bound =
        std::pow(rho_hat, static_cast<double>(k + 1)) / (1 - rho_hat) * d0;
    CHECK(sup_distance(iterates[k], last) <= bound + 1e-6);
  }

  // uniqueness: a far-away start through the same operator lands on the
  // same fixed point; each run ends within tol * rho/(1-rho) of it
  SolutionOperator gamma(mp.problem, kSmallGrid, kQuad);
  const SolveTrace again = picard_solve(
      mp.problem, gamma, GridFunction::constant(kSmallGrid, 0.0), 1e-9, 100,
      kQuad);
  const SolveTrace other = picard_solve(
      mp.problem, gamma, GridFunction::constant(kSmallGrid, 10.0), 1e-9, 100,
      kQuad);
  REQUIRE(again.converged);
  REQUIRE(other.converged);
  const double gap_bound = 2e-9 * std::max(1.0, rho_hat / (1 - rho_hat));
  CHECK(sup_distance(other.solution, again.solution) <= gap_bound);
}

TEST_CASE("picard: non-convergence is reported, not thrown") {
  // expanding iteration: f = 3 x1 with identity-ish geometry still
  // contracts per-step only when the constant is < 1; force max_iter = 3
  ProblemSpec ps = geometry(std::sqrt(2.0), 1.0);
  ps.f = [](double, double x1, double) { return 0.2 + 3.0 * std::tanh(x1); };
  const SolveTrace trace =
      picard_solve(ps, GridFunction::constant(kSmallGrid, 0.0), 1e-12, 3,
                   kQuad);
  CHECK(!trace.converged);
  CHECK(trace.iterations() == 3);
  CHECK(!std::isfinite(trace.final_residual));
}
