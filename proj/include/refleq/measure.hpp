#ifndef REFLEQ_MEASURE_HPP
#define REFLEQ_MEASURE_HPP

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "refleq/expr.hpp"
#include "refleq/funcspace.hpp"
#include "refleq/quadrature.hpp"

namespace refleq {

/// Positive measure dmu(t) = rho(t) dt, rho an expression in t with
/// rho > 0 (checked by sampling).
struct MeasureSpec {
  Expression rho = Expression::parse("1");
  std::string description;
};

/// mu([-r, r]) = int_{-r}^{r} rho(t) dt.
double mass(const MeasureSpec& mu, double r, const QuadratureConfig& cfg);

enum class ErgodicVerdict { decaying, non_decaying, inconclusive };

const char* to_string(ErgodicVerdict v);

struct ErgodicityReport {
  std::vector<double> radii;
  std::vector<double> means;   // (1/mass(r)) int_{-r}^{r} |phi| dmu
  double trend_slope = 0;      // least-squares slope of log(mean) vs log(r)
  ErgodicVerdict verdict = ErgodicVerdict::inconclusive;
};

/// Windowed weighted means of |phi|. Verdict rule:
///   decaying:     a non-increasing tail of >= min(3, n) sweep points and
///                 last mean < 0.1 * first (or all means below zero_floor)
///   non_decaying: last mean >= 0.5 * first, or means increasing at the end
///   inconclusive: otherwise
ErgodicityReport ergodic_mean(const std::function<double(double)>& phi,
                              const MeasureSpec& mu, std::vector<double> radii,
                              const QuadratureConfig& cfg,
                              double zero_floor = 1e-14);

ErgodicityReport ergodic_mean(const GridFunction& phi, const MeasureSpec& mu,
                              std::vector<double> radii,
                              const QuadratureConfig& cfg,
                              double zero_floor = 1e-14);

ErgodicityReport ergodic_mean(const Expression& phi, const MeasureSpec& mu,
                              std::vector<double> radii,
                              const QuadratureConfig& cfg);

/// Numeric evidence for the measure hypotheses. These are sampled
/// falsification probes over fixed window/shift families, never proofs;
/// verdicts are "supported" or "violated on sample".
struct HypothesisReport {
  // translation boundedness, windows A=[k,k+1] (k=2..50) disjoint from
  // I=[-1,1], shifts tau in {+-1, +-pi, +-10}
  double m1_ratio = 0;  // max mu(A+tau)/mu(A)
  std::string m1_verdict;

  // reflection boundedness mu(-A) <= m + n mu(A) on the same windows
  std::optional<std::pair<double, double>> m2_pair;  // (m, n)
  std::string m2_verdict;

  // pushforward domination d mu_beta <= lambda(t) d mu
  double h0_lambda_bound = 0;              // sampled max of the density ratio
  bool h0_translation_case = false;        // beta(t) = t - p detected
  std::vector<double> h0_limsup_estimate;  // at the largest three sweep radii
  std::string h0_verdict;
};

/// Probes (M1), (M2) and (h0) for the given measure / deformation pair.
/// `radii` drives the (h0) limsup sweep (largest three radii are used).
/// Throws if beta is not strictly increasing on the sampled grid.
HypothesisReport check_hypotheses(const MeasureSpec& mu, const Expression& beta,
                                  double p_delay, const QuadratureConfig& cfg,
                                  std::vector<double> radii = {5, 10, 20, 40});

}  // namespace refleq

#endif  // REFLEQ_MEASURE_HPP
