#ifndef REFLEQ_SOLVER_HPP
#define REFLEQ_SOLVER_HPP

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "refleq/operator.hpp"

namespace refleq {

enum class ContractionTheorem { constant_lipschitz, lp_lipschitz };

/// Contraction-condition data. For the constant-Lipschitz condition the
/// inequality is
///   (|l-a| + |l+a| + 2|b|) / l^2 * (Lf + 2 c Lh) < 1,
/// for the Lp condition
///   ||Lf||_Lp(dx) + 2 ||K||_Lq ||Lh||_Lp(dx) < l (q l)^{1/q} / geom,
/// with l = sqrt(a^2-b^2), geom = |l-a|+|l+a|+2|b| and 1/p + 1/q = 1.
struct ContractionReport {
  ContractionTheorem theorem = ContractionTheorem::constant_lipschitz;
  double lambda = 0;
  double geom = 0;
  double c = 0;        // kernel mass (constant-Lipschitz case)
  double k_qnorm = 0;  // ||K||_Lq (Lp case)
  double p = 0, q = 0;
  double lf = 0, lh = 0;              // constants, or Lp(dx) norms
  double lf_mu_norm = 0, lh_mu_norm = 0;  // Lp(dmu) norms (membership data)
  double lhs = 0, rhs = 1;
  double factor = 0;  // lhs / rhs; the proof bound on the Picard step ratio
  bool verdict = false;
};

/// Constant-Lipschitz contraction check. `kernel_mass_override` substitutes
/// a known value of c = int_0^inf K.
ContractionReport check_constant_lipschitz(
    const ProblemSpec& ps, double lf, double lh, const QuadratureConfig& cfg,
    std::optional<double> kernel_mass_override = {});

/// Decay envelope for a time-dependent Lipschitz function:
/// |L(t)| <= bound * exp(-decay |t|). bound == 0 means "sample it".
struct LipschitzEnvelope {
  double decay = 1.0;
  double bound = 0.0;
};

/// Lp-Lipschitz contraction check (p > 1, q = p/(p-1)). The envelope
/// certifies the truncation of the Lp norms over the real line.
ContractionReport check_lp_lipschitz(const ProblemSpec& ps,
                                     const Expression& lf_expr,
                                     const Expression& lh_expr, double p,
                                     const QuadratureConfig& cfg,
                                     LipschitzEnvelope envelope = {});

/// ||L||_Lp(w dx) with w == 1 (dx) or w == rho (dmu).
double lp_norm_line(const Expression& l_expr, double p,
                    const LipschitzEnvelope& envelope,
                    const QuadratureConfig& cfg,
                    const MeasureSpec* mu = nullptr, double p_delay = 0);

struct SampleBox {
  double t_lo = -10, t_hi = 10;
  double x_lo = -4, x_hi = 4;
};

/// Sampled lower bound on the joint Lipschitz constant of g(t, x1, x2) in
/// (x1, x2): max over deterministic grid + pseudo-random pairs of
/// |g(t,x1,y1) - g(t,x2,y2)| / (|x1-x2| + |y1-y2|).
double estimate_lipschitz(const Expression& g, const SampleBox& box,
                          int n_samples, double p_value = 0.0);

struct SolveTrace {
  std::vector<double> steps;  // d_k = sup |x_{k+1} - x_k| per iteration
  bool converged = false;
  double final_residual = std::numeric_limits<double>::quiet_NaN();
  GridFunction solution;

  int iterations() const { return static_cast<int>(steps.size()); }
  /// max of d_{k+1}/d_k over steps with k >= first_index and d_k >= floor.
  double max_step_ratio(int first_index = 1, double floor = 0) const;
};

using IterationObserver =
    std::function<void(int k, const GridFunction& x, double step)>;

/// Banach fixed-point iteration of the solution operator from x0; stops
/// when sup|x_{k+1} - x_k| < tol or after max_iter steps. The contraction
/// gate (a ContractionReport with verdict true) is the caller's
/// responsibility (the CLI enforces it unless --force). On convergence the
/// equation residual over [-10,10] (clipped to the safe window) is stored.
SolveTrace picard_solve(const ProblemSpec& ps, const GridFunction& x0,
                        double tol, int max_iter, const QuadratureConfig& cfg,
                        int threads = 1, const IterationObserver& observe = {});

/// Same iteration through a caller-owned operator, so several runs (for
/// example the uniqueness check from two different starts) share one frozen
/// quadrature layout and iterate the identical discrete map.
SolveTrace picard_solve(const ProblemSpec& ps, SolutionOperator& gamma,
                        const GridFunction& x0, double tol, int max_iter,
                        const QuadratureConfig& cfg,
                        const IterationObserver& observe = {});

}  // namespace refleq

#endif  // REFLEQ_SOLVER_HPP
