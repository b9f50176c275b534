#ifndef REFLEQ_QUADRATURE_HPP
#define REFLEQ_QUADRATURE_HPP

#include <functional>
#include <span>
#include <vector>

#include "refleq/errors.hpp"
#include "refleq/expr.hpp"

namespace refleq {

struct MeasureSpec;  // measure.hpp

struct QuadratureConfig {
  double abs_tol = 1e-8;      // target absolute error per integral
  int max_refinements = 20;   // panel-doubling cap
  int initial_panels = 8;     // even, >= 4
  double hard_cap = 200.0;    // semi-infinite truncation: R <= lo + hard_cap/decay

  void validate() const;
};

/// Convolution kernel K(s), s >= 0, K >= 0, with an exponential decay
/// certificate K(s) <= bound * exp(-decay * s). `bound` == 0 means
/// "estimate by sampling" (done once per use site). `p_value` is bound to
/// the identifier `p` inside the expression.
struct KernelSpec {
  Expression k = Expression::parse("0");
  double decay = 1.0;
  double bound = 0.0;
  double p_value = 0.0;

  bool is_zero() const { return k.is_literal_zero(); }
};

struct IntegrateOptions {
  int initial_panels = 0;             // 0: use cfg.initial_panels
  int fixed_depth = -1;               // >= 0: run exactly this many doublings, skip the tolerance test
  int* depth_out = nullptr;           // refinement depth actually used
  std::vector<double>* level_deltas = nullptr;  // |I_2n - I_n| per refinement
};

/// Composite Simpson with panel doubling until |I_2n - I_n| < abs_tol.
/// Deterministic panel layout (no adaptive bisection). Throws
/// QuadratureError when the refinement cap is reached without meeting the
/// tolerance.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const QuadratureConfig& cfg, const IntegrateOptions& opt = {});

struct SemiInfiniteOptions {
  double panel_width_hint = 0.0;  // >0: truncation length rounded to a multiple of 2*hint, panels of width `hint`
  int fixed_depth = -1;
  int* depth_out = nullptr;
  double* cutoff_out = nullptr;   // lo + truncation length actually used
  double fixed_length = 0.0;      // >0: reuse a previously planned truncation length
};

/// Integral over [lo, inf) of f with caller-certified decay:
/// |f(y)| <= bound * exp(-decay * (y - lo)). Truncates where the dropped
/// tail is <= abs_tol, so the total error is <= 2 * abs_tol.
double integrate_semi_infinite(const std::function<double(double)>& f,
                               double lo, double decay, double bound,
                               const QuadratureConfig& cfg,
                               const SemiInfiniteOptions& opt = {});

/// c = int_0^inf K(y) dy, by cutoff doubling with a segment-based tail
/// estimate. Throws QuadratureError when the tail estimate never falls
/// below tolerance (divergence).
double kernel_constant_c(const KernelSpec& kernel, const QuadratureConfig& cfg);

/// (int_0^inf K(y)^q dy)^(1/q), q > 1.
double kernel_q_norm(const KernelSpec& kernel, double q,
                     const QuadratureConfig& cfg);

/// Sampled kernel certificate bound: max over s of K(s) * exp(decay * s)
/// when the spec does not declare one.
double kernel_certificate_bound(const KernelSpec& kernel,
                                const QuadratureConfig& cfg);

struct SupWeightedReport {
  double p1 = 0, p2 = 0;
  bool p1_saturated = false, p2_saturated = false;  // grid max still growing at z_max
  std::vector<double> p1_values, p2_values;         // per z
};

/// Weighted sup-integrals over a z grid:
///   P1(z) = int_{-z}^{z} exp(-lambda (t+z)) dmu(t)
///   P2(z) = int_{-z}^{z} exp(-lambda (z-t)) dmu(t)
/// The report flags a sweep whose maximum sits at the largest z while still
/// visibly increasing there (the grid sup has not converged).
SupWeightedReport p1_p2_sup(const MeasureSpec& mu, double lambda,
                            std::span<const double> z_grid,
                            const QuadratureConfig& cfg);

}  // namespace refleq

#endif  // REFLEQ_QUADRATURE_HPP
