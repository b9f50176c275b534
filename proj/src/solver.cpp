#include "refleq/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "refleq/verify.hpp"

namespace refleq {

ContractionReport check_constant_lipschitz(
    const ProblemSpec& ps, double lf, double lh, const QuadratureConfig& cfg,
    std::optional<double> kernel_mass_override) {
  if (lf < 0 || lh < 0)
    throw Error("contraction check: Lipschitz constants must be >= 0");
  ContractionReport rep;
  rep.theorem = ContractionTheorem::constant_lipschitz;
  rep.lambda = ps.lambda();
  rep.geom = ps.geom();
  rep.c = kernel_mass_override ? *kernel_mass_override
                               : kernel_constant_c(ps.kernel, cfg);
  rep.lf = lf;
  rep.lh = lh;
  rep.lhs = rep.geom / (rep.lambda * rep.lambda) * (lf + 2.0 * rep.c * lh);
  rep.rhs = 1.0;
  rep.factor = rep.lhs;
  rep.verdict = rep.lhs < rep.rhs;
  return rep;
}

double lp_norm_line(const Expression& l_expr, double p,
                    const LipschitzEnvelope& envelope,
                    const QuadratureConfig& cfg, const MeasureSpec* mu,
                    double p_delay) {
  static const std::string kT[] = {"t"};
  CompiledExpr l(l_expr, kT, {{"p", p_delay}});
  std::optional<CompiledExpr> rho;
  if (mu) rho.emplace(mu->rho, kT);

  const auto weighted = [&](double t) {
    const double w = rho ? (*rho)(t) : 1.0;
    return std::pow(std::fabs(l(t)), p) * w;
  };
  // fold both half-lines into one semi-infinite integral
  const auto folded = [&](double t) { return weighted(t) + weighted(-t); };

  const double decay = p * envelope.decay;
  double bound = envelope.bound;
  if (bound <= 0) {
    // sample the certificate: sup of folded(t) e^{decay t}
    for (double t = 0; t <= 60.0 / envelope.decay; t += 0.01)
      bound = std::max(bound, folded(t) * std::exp(decay * t));
    bound *= 1.25;
  }
  const double integral =
      integrate_semi_infinite(folded, 0.0, decay, bound, cfg);
  return std::pow(integral, 1.0 / p);
}

ContractionReport check_lp_lipschitz(const ProblemSpec& ps,
                                     const Expression& lf_expr,
                                     const Expression& lh_expr, double p,
                                     const QuadratureConfig& cfg,
                                     LipschitzEnvelope envelope) {
  if (!(p > 1)) throw Error("contraction check: p must be > 1");
  ContractionReport rep;
  rep.theorem = ContractionTheorem::lp_lipschitz;
  rep.lambda = ps.lambda();
  rep.geom = ps.geom();
  rep.p = p;
  rep.q = p / (p - 1.0);
  rep.k_qnorm = kernel_q_norm(ps.kernel, rep.q, cfg);
  rep.lf = lp_norm_line(lf_expr, p, envelope, cfg);
  rep.lh = lp_norm_line(lh_expr, p, envelope, cfg);
  rep.lf_mu_norm = lp_norm_line(lf_expr, p, envelope, cfg, &ps.mu, ps.p_delay);
  rep.lh_mu_norm = lp_norm_line(lh_expr, p, envelope, cfg, &ps.mu, ps.p_delay);
  rep.lhs = rep.lf + 2.0 * rep.k_qnorm * rep.lh;
  rep.rhs =
      rep.lambda * std::pow(rep.q * rep.lambda, 1.0 / rep.q) / rep.geom;
  rep.factor = rep.lhs / rep.rhs;
  rep.verdict = rep.lhs < rep.rhs;
  return rep;
}

double estimate_lipschitz(const Expression& g, const SampleBox& box,
                          int n_samples, double p_value) {
  if (n_samples < 1000)
    throw Error("estimate_lipschitz: need at least 1000 samples");
  static const std::string kVars[] = {"t", "x1", "x2"};
  CompiledExpr fn(g, kVars, {{"p", p_value}});

  double best = 0;
  const auto probe = [&](double t, double x1, double y1, double x2,
                         double y2) {
    const double den = std::fabs(x1 - x2) + std::fabs(y1 - y2);
    if (den <= 0) return;
    const double num = std::fabs(fn(t, x1, y1) - fn(t, x2, y2));
    best = std::max(best, num / den);
  };

  // deterministic stratified grid with axis-aligned small increments
  const int grid_n = 33;
  const auto lerp = [](double lo, double hi, int i, int n) {
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  for (int it = 0; it < grid_n; ++it) {
    const double t = box.t_lo == box.t_hi
                         ? box.t_lo
                         : lerp(box.t_lo, box.t_hi, it, grid_n);
    for (int ix = 0; ix < grid_n; ++ix) {
      const double x = lerp(box.x_lo, box.x_hi, ix, grid_n);
      for (double d : {1e-7, 1e-4, 0.1}) {
        probe(t, x, x, x + d, x);   // x1 increment only
        probe(t, x, x, x, x + d);   // x2 increment only
        probe(t, x, x, x + d, x + d);
      }
    }
    if (box.t_lo == box.t_hi) break;
  }

  // pseudo-random pairs (fixed seed: estimates are reproducible)
  std::mt19937 rng(0x5eed);
  std::uniform_real_distribution<double> ut(box.t_lo, box.t_hi);
  std::uniform_real_distribution<double> ux(box.x_lo, box.x_hi);
  std::uniform_real_distribution<double> uscale(-7.0, 0.0);
  for (int i = 0; i < n_samples; ++i) {
    const double t = box.t_lo == box.t_hi ? box.t_lo : ut(rng);
    const double x1 = ux(rng), y1 = ux(rng);
    if (i % 2) {
      probe(t, x1, y1, ux(rng), ux(rng));  // far pair
    } else {
      const double d = std::pow(10.0, uscale(rng));
      probe(t, x1, y1, x1 + d, y1 - d);    // nearby pair
    }
  }
  return best;
}

double SolveTrace::max_step_ratio(int first_index, double floor) const {
  double worst = 0;
  for (std::size_t k = static_cast<std::size_t>(std::max(first_index, 1));
       k < steps.size(); ++k) {
    if (steps[k - 1] < floor) continue;
    worst = std::max(worst, steps[k] / steps[k - 1]);
  }
  return worst;
}

SolveTrace picard_solve(const ProblemSpec& ps, const GridFunction& x0,
                        double tol, int max_iter, const QuadratureConfig& cfg,
                        int threads, const IterationObserver& observe) {
  SolutionOperator gamma(ps, x0.grid(), cfg, threads);
  return picard_solve(ps, gamma, x0, tol, max_iter, cfg, observe);
}

SolveTrace picard_solve(const ProblemSpec& ps, SolutionOperator& gamma,
                        const GridFunction& x0, double tol, int max_iter,
                        const QuadratureConfig& cfg,
                        const IterationObserver& observe) {
  if (!(tol > 0)) throw Error("picard_solve: tol must be > 0");
  SolveTrace trace;

  GridFunction x = x0;
  for (int k = 1; k <= max_iter; ++k) {
    GridFunction next = gamma.apply(x);
    const double d = sup_distance(next, x);
    trace.steps.push_back(d);
    x = std::move(next);
    if (observe) observe(k, x, d);
    if (d < tol) {
      trace.converged = true;
      break;
    }
  }
  trace.solution = x;
  if (trace.converged) {
    const double half = x.half_width();
    const double hi = std::min(10.0, half - 5.0 - 2.0 * x.step());
    if (hi > 0) {
      trace.final_residual =
          residual(ps, x, -hi, hi, cfg).sup_residual;
    }
  }
  return trace;
}

}  // namespace refleq
