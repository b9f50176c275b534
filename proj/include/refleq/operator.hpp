#ifndef REFLEQ_OPERATOR_HPP
#define REFLEQ_OPERATOR_HPP

#include <functional>
#include <memory>
#include <optional>

#include "refleq/expr.hpp"
#include "refleq/funcspace.hpp"
#include "refleq/measure.hpp"
#include "refleq/memo.hpp"
#include "refleq/quadrature.hpp"

namespace refleq {

/// Nonlinear right-hand-side slot: (t, x1, x2) -> value. Expression-backed
/// for configured problems; the manufactured-solution harness installs a
/// custom callable.
using Rhs3 = std::function<double(double t, double x1, double x2)>;

/// Full problem definition for
///   u'(t) = a u(t) + b u(-t) + f(t, u(beta(t)), u(beta(-t)))
///           + int_t^inf   K(s-t) h(s, u(beta(s)), u(beta(-s))) ds
///           + int_{-t}^inf K(s+t) h(s, u(beta(s)), u(beta(-s))) ds
struct ProblemSpec {
  double a = 0;
  double b = 0;            // b == 0 only in degraded no-reflection mode
  Rhs3 f;
  Rhs3 h;
  KernelSpec kernel;       // zero kernel: both integral terms vanish exactly
  Expression beta = Expression::parse("t");
  double p_delay = 0;      // bound to `p` inside beta/f/h/K expressions
  MeasureSpec mu;

  std::optional<double> f_lipschitz;  // declared constants, when known
  std::optional<double> h_lipschitz;

  double lambda() const;  // sqrt(a^2 - b^2)
  double geom() const;    // |lambda - a| + |lambda + a| + 2|b|

  /// Throws ConfigError unless a^2 - b^2 > 0 and beta is strictly
  /// increasing on the sampled working range.
  void validate() const;
};

double beta_at(const ProblemSpec& ps, double t);

struct RhsValue {
  double f_part = 0;
  double kernel_forward = 0;   // int_t^inf K(s-t) h(...) ds
  double kernel_backward = 0;  // int_{-t}^inf K(s+t) h(...) ds
  double total = 0;            // exact sum of the three
};

/// Frozen quadrature layout for the kernel convolution, shared across
/// Picard iterations so the discrete operator stays a fixed map (adaptive
/// depth decisions are discontinuous in the iterate and would inject
/// tolerance-size noise into the contraction tail).
struct ConvLayout {
  double cutoff = 0;                  // truncation length for the y-integral
  double sup_h = 0;                   // certified bound on |h(s, x(..), x(..))|
  detail::MemoTable<int> depth{1e-9};
  void clear() { cutoff = 0; sup_h = 0; depth.clear(); }
};

/// Shared evaluation state for repeated right-hand-side queries against one
/// candidate function: compiled expressions, sampled kernel certificate,
/// memoized convolution values. Thread-safe.
class RhsEvaluator {
 public:
  RhsEvaluator(const ProblemSpec& ps, const GridFunction& u,
               const QuadratureConfig& cfg, ConvLayout* shared_layout = nullptr);

  RhsValue at(double t) const;
  double total(double t) const { return at(t).total; }

  /// h composed with the candidate: h(s, u(beta(s)), u(beta(-s))).
  double h_at(double s) const;

  /// int_0^inf K(y) h_at(tau + y) dy; the backward kernel term at t is
  /// conv_forward(-t).
  double conv_forward(double tau) const;

  double sup_h_bound() const { return sup_h_; }

 private:
  const ProblemSpec& ps_;
  const GridFunction& u_;
  const QuadratureConfig& cfg_;
  CompiledExpr beta_;
  CompiledExpr kernel_;
  bool kernel_zero_;
  double kernel_bound_ = 0;
  double sup_h_ = 0;
  double panel_hint_;
  ConvLayout* layout_ = nullptr;
  mutable ConvLayout own_layout_;
  mutable detail::MemoTable<double> h_memo_;
  mutable detail::MemoTable<double> conv_memo_;
};

/// One-shot right-hand-side assembly (builds a fresh evaluator).
RhsValue assemble_rhs(const ProblemSpec& ps, const GridFunction& u, double t,
                      const QuadratureConfig& cfg);

/// Value at t of the unique bounded solution of
///   u' = a u + b u(-t) + G
/// via the explicit integral representation; `forcing_sup` must bound |G|
/// on the range the integral touches (decay certificate for truncation).
double linear_solution(const ProblemSpec& ps,
                       const std::function<double(double)>& forcing,
                       double forcing_sup, double t,
                       const QuadratureConfig& cfg,
                       double panel_width_hint = 0.0);

/// The Picard map x -> (bounded solution of u' = a u + b u(-t) + F_x), with
/// F_x(t) = f(t, x(beta t), x(beta -t)) + kernel terms at x. Holds the
/// frozen quadrature layout across repeated applications; grid points are
/// evaluated independently and may run on several threads (outputs are
/// assembled in index order, so results do not depend on thread count).
class SolutionOperator {
 public:
  SolutionOperator(const ProblemSpec& ps, GridSpec grid,
                   const QuadratureConfig& cfg, int threads = 1);

  GridFunction apply(const GridFunction& x);

  double forcing_bound() const { return forcing_bound_; }
  double truncation_length() const { return trunc_len_; }

 private:
  void plan(const std::function<double(double)>& g_cached);

  const ProblemSpec& ps_;
  GridSpec grid_;
  QuadratureConfig cfg_;
  int threads_;
  double trunc_len_ = 0;
  double forcing_bound_ = 0;
  std::vector<int> outer_depth_;
  ConvLayout conv_layout_;
  detail::MemoTable<double> g_memo_;
};

/// Single application of the solution operator (fresh layout each call).
GridFunction apply_solution_operator(const ProblemSpec& ps,
                                     const GridFunction& x,
                                     const QuadratureConfig& cfg,
                                     int threads = 1);

}  // namespace refleq

#endif  // REFLEQ_OPERATOR_HPP
