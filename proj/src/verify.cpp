#include "refleq/verify.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>

namespace refleq {

namespace {

// 4th-order derivative at node i. Central stencil away from t = 0; the
// reflection coupling and |t|-type coefficients leave the solution only C^1
// at the origin, so the nodes at t in {-h, 0, h} use 4th-order stencils
// that stay on one side of the kink (a central stencil across a second-
// derivative jump J degrades to ~J*h/3 there).
double d4_at(const GridFunction& u, long i, long n, double h) {
  const long k = i - n;  // t = k*h
  if (k >= 2 || k <= -2)
    return (u[i - 2] - 8.0 * u[i - 1] + 8.0 * u[i + 1] - u[i + 2]) / (12.0 * h);
  const auto right = [&](long j) {  // f'(x_0) from {x_0..x_4}
    return (-25.0 * u[j] + 48.0 * u[j + 1] - 36.0 * u[j + 2] +
            16.0 * u[j + 3] - 3.0 * u[j + 4]) /
           (12.0 * h);
  };
  const auto left = [&](long j) {  // mirrored
    return (25.0 * u[j] - 48.0 * u[j - 1] + 36.0 * u[j - 2] -
            16.0 * u[j - 3] + 3.0 * u[j - 4]) /
           (12.0 * h);
  };
  if (k == 0) return 0.5 * (right(i) + left(i));
  if (k == 1)  // f'(x_1) from {x_0..x_4}, nodes 0..4h
    return (-3.0 * u[i - 1] - 10.0 * u[i] + 18.0 * u[i + 1] -
            6.0 * u[i + 2] + u[i + 3]) /
           (12.0 * h);
  // k == -1: mirror of the above on nodes -4h..0
  return (3.0 * u[i + 1] + 10.0 * u[i] - 18.0 * u[i - 1] + 6.0 * u[i - 2] -
          u[i - 3]) /
         (12.0 * h);
}

}  // namespace

ResidualReport residual(const ProblemSpec& ps, const GridFunction& u,
                        double lo, double hi, const QuadratureConfig& cfg,
                        bool keep_per_point) {
  if (u.empty()) throw GridError("residual: empty solution");
  const double T = u.half_width(), h = u.step();
  if (lo > hi) throw Error("residual: empty window");
  if (lo < -T + 5.0 - 1e-9 || hi > T - 5.0 + 1e-9)
    throw Error("residual: window too close to domain edge (need [lo,hi] in [" +
                std::to_string(-T + 5.0) + ", " + std::to_string(T - 5.0) +
                "])");

  RhsEvaluator rhs(ps, u, cfg);
  const long n = (u.size() - 1) / 2;
  const long i_lo = static_cast<long>(std::ceil((lo + T) / h - 1e-9));
  const long i_hi = static_cast<long>(std::floor((hi + T) / h + 1e-9));

  ResidualReport rep;
  rep.window_lo = lo;
  rep.window_hi = hi;
  double sum_sq = 0, first_sq = 0, last_sq = 0;
  for (long i = i_lo; i <= i_hi; ++i) {
    const double t = (i - n) * h;
    const double d4 = d4_at(u, i, n, h);
    const double r =
        d4 - ps.a * u[i] - ps.b * u.at_reflected(i) - rhs.total(t);
    rep.sup_residual = std::max(rep.sup_residual, std::fabs(r));
    sum_sq += r * r;
    if (i == i_lo) first_sq = r * r;
    if (i == i_hi) last_sq = r * r;
    if (keep_per_point) rep.per_point.emplace_back(t, r);
  }
  // composite trapezoid of r^2, so l2 <= sup * sqrt(hi - lo) holds exactly
  rep.l2_residual = std::sqrt(
      std::max(0.0, h * (sum_sq - 0.5 * first_sq - 0.5 * last_sq)));
  return rep;
}

namespace {

const std::string kVarT[] = {"t"};

// State shared by every evaluation of a manufactured right-hand side.
// Owns the template problem and the target sample; base values are
// memoized for the lifetime of the solve (they do not depend on the
// Picard iterate).
struct MmsState {
  ProblemSpec tmpl;
  GridFunction target;
  QuadratureConfig cfg;
  CompiledExpr u_star;
  CompiledExpr beta;
  double epsilon;
  std::unique_ptr<RhsEvaluator> kernel_eval;  // convolutions at the target
  detail::MemoTable<double> base_memo;

  MmsState(const Expression& us, const ProblemSpec& t, GridFunction tg,
           double eps, const QuadratureConfig& c)
      : tmpl(t),
        target(std::move(tg)),
        cfg(c),
        u_star(us, kVarT, {{"p", t.p_delay}}),
        beta(t.beta, kVarT, {{"p", t.p_delay}}),
        epsilon(eps),
        base_memo(target.step() / static_cast<double>(1 << 20)) {
    if (!tmpl.kernel.is_zero())
      kernel_eval = std::make_unique<RhsEvaluator>(tmpl, target, cfg);
  }

  double d_u_star(double t) const {  // 6th-order central difference
    const double d = 0.01;
    return (-u_star(t - 3 * d) + 9.0 * u_star(t - 2 * d) -
            45.0 * u_star(t - d) + 45.0 * u_star(t + d) -
            9.0 * u_star(t + 2 * d) + u_star(t + 3 * d)) /
           (60.0 * d);
  }

  double base(double t) {
    return base_memo.get_or_compute(t, [&](double tt) {
      double v = d_u_star(tt) - tmpl.a * u_star(tt) - tmpl.b * u_star(-tt);
      if (kernel_eval)
        v -= kernel_eval->conv_forward(tt) + kernel_eval->conv_forward(-tt);
      return v;
    });
  }
};

}  // namespace

ManufacturedProblem manufacture(const Expression& u_star,
                                const ProblemSpec& tmpl, GridSpec grid,
                                double epsilon, const QuadratureConfig& cfg) {
  if (epsilon < 0) throw Error("manufacture: epsilon must be >= 0");
  for (const auto& v : u_star.free_vars())
    if (v != "t" && v != "p")
      throw Error("manufacture: target may only use variable t (got '" + v +
                  "')");
  grid.validate();

  CompiledExpr us(u_star, kVarT, {{"p", tmpl.p_delay}});
  GridFunction target =
      GridFunction::sample(grid, [&](double t) { return us(t); });

  auto state = std::make_shared<MmsState>(u_star, tmpl, std::move(target),
                                          epsilon, cfg);

  ManufacturedProblem out;
  out.problem = tmpl;
  out.problem.f = [state](double t, double x1, double /*x2*/) {
    return state->base(t) +
           state->epsilon *
               (std::sin(x1) - std::sin(state->target.eval_at(state->beta(t))));
  };
  out.problem.f_lipschitz = epsilon;
  out.target = state->target;
  out.epsilon = epsilon;

  double lh = 0;
  if (!tmpl.kernel.is_zero()) {
    if (!tmpl.h_lipschitz)
      throw Error(
          "manufacture: template with a kernel needs a declared h Lipschitz "
          "constant");
    lh = *tmpl.h_lipschitz;
  }
  out.gate = check_constant_lipschitz(out.problem, epsilon, lh, cfg);
  if (!out.gate.verdict)
    throw Error("manufacture: contraction check fails (lhs = " +
                std::to_string(out.gate.lhs) +
                "); epsilon too large for this geometry");
  return out;
}

namespace {

// Power of the length-n sample sequence at angular frequency omega, using a
// complex rotation instead of per-sample trig.
double spectral_power(const std::vector<double>& r, double t0, double h,
                      double omega) {
  std::complex<double> rot = std::exp(std::complex<double>(0, omega * h));
  std::complex<double> w = std::exp(std::complex<double>(0, omega * t0));
  std::complex<double> acc = 0;
  for (double v : r) {
    acc += v * w;
    w *= rot;
  }
  return std::norm(acc);
}

// Least squares of u against {1} + {sin w_j t, cos w_j t}; returns the
// coefficients (constant first, then sin/cos pairs) or throws on a
// rank-deficient dictionary.
std::vector<double> joint_fit(const std::vector<double>& u, double t0,
                              double h, const std::vector<double>& omegas) {
  const std::size_t m = 1 + 2 * omegas.size();
  const std::size_t n = u.size();
  std::vector<std::vector<double>> phi(m, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) phi[0][i] = 1.0;
  for (std::size_t j = 0; j < omegas.size(); ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double t = t0 + static_cast<double>(i) * h;
      phi[1 + 2 * j][i] = std::sin(omegas[j] * t);
      phi[2 + 2 * j][i] = std::cos(omegas[j] * t);
    }

  std::vector<std::vector<double>> a(m, std::vector<double>(m + 1, 0));
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += phi[r][i] * phi[c][i];
      a[r][c] = s;
    }
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += phi[r][i] * u[i];
    a[r][m] = s;
  }

  double max_diag = 0;
  for (std::size_t r = 0; r < m; ++r) max_diag = std::max(max_diag, a[r][r]);
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    if (std::fabs(a[col][col]) < 1e-12 * std::max(1.0, max_diag))
      throw Error("degenerate fit: rank-deficient trend dictionary");
    for (std::size_t r = 0; r < m; ++r) {
      if (r == col) continue;
      const double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= m; ++c) a[r][c] -= factor * a[col][c];
    }
  }
  std::vector<double> coef(m);
  for (std::size_t r = 0; r < m; ++r) coef[r] = a[r][m] / a[r][r];
  return coef;
}

std::vector<double> fit_values(const std::vector<double>& coef, double t0,
                               double h, std::size_t n,
                               const std::vector<double>& omegas) {
  std::vector<double> out(n, coef[0]);
  for (std::size_t j = 0; j < omegas.size(); ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double t = t0 + static_cast<double>(i) * h;
      out[i] += coef[1 + 2 * j] * std::sin(omegas[j] * t) +
                coef[2 + 2 * j] * std::cos(omegas[j] * t);
    }
  return out;
}

double l2(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

ErgodicityReport ergodic_diagnostics(const GridFunction& u,
                                     const MeasureSpec& mu,
                                     std::vector<double> radii,
                                     const QuadratureConfig& cfg,
                                     TrendFit* fit_out) {
  if (u.empty()) throw GridError("ergodic_diagnostics: empty function");
  const double T = u.half_width(), h = u.step(), t0 = -T;
  const std::vector<double>& samples = u.samples();
  const std::size_t n = samples.size();

  double scale = 0;
  for (double v : samples) scale = std::max(scale, std::fabs(v));
  const double floor = 1e-9 * std::max(1.0, scale);

  const double om_min = M_PI / T;
  const double om_max = std::min(20.0, 0.8 * M_PI / h);
  const double scan_step = M_PI / (8.0 * T);

  std::vector<double> omegas;
  std::vector<double> current = samples;
  std::vector<double> coef = {0.0};
  double norm0 = l2(samples);
  double norm_cur = norm0;

  // joint-fit residual norm for a frequency set
  const auto misfit_of = [&](const std::vector<double>& freqs) {
    const std::vector<double> c = joint_fit(samples, t0, h, freqs);
    const std::vector<double> fitted = fit_values(c, t0, h, n, freqs);
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = samples[i] - fitted[i];
      s += d * d;
    }
    return std::sqrt(s);
  };
  const auto golden_refine = [&](std::vector<double> freqs, std::size_t j,
                                 double radius) {
    double a = std::max(om_min, freqs[j] - radius);
    double b = std::min(om_max, freqs[j] + radius);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    const auto eval = [&](double om) {
      freqs[j] = om;
      try {
        return misfit_of(freqs);
      } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    double m1 = eval(x1), m2 = eval(x2);
    for (int it = 0; it < 60; ++it) {
      if (m1 > m2) {
        a = x1; x1 = x2; m1 = m2;
        x2 = a + gr * (b - a);
        m2 = eval(x2);
      } else {
        b = x2; x2 = x1; m2 = m1;
        x1 = b - gr * (b - a);
        m1 = eval(x1);
      }
    }
    return 0.5 * (a + b);
  };

  while (scale > 0 && omegas.size() < 8 && norm_cur > 1e-12 * norm0) {
    // dominant spectral peak of the current remainder
    double best_om = om_min, best_p = -1;
    for (double om = om_min; om <= om_max; om += scan_step) {
      const double p = spectral_power(current, t0, h, om);
      if (p > best_p) {
        best_p = p;
        best_om = om;
      }
    }
    // refine frequencies by minimizing the joint-fit residual: the raw
    // periodogram peak carries O(1/T^2) leakage bias, and earlier
    // frequencies shift once later tones join, so re-sweep them all
    std::vector<double> trial = omegas;
    trial.push_back(best_om);
    for (int sweep = 0; sweep < 3; ++sweep)
      for (std::size_t j = 0; j < trial.size(); ++j)
        trial[j] = golden_refine(trial, j, sweep == 0 ? scan_step : 4e-4);

    std::vector<double> trial_coef = joint_fit(samples, t0, h, trial);
    std::vector<double> fitted = fit_values(trial_coef, t0, h, n, trial);
    std::vector<double> rem(n);
    for (std::size_t i = 0; i < n; ++i) rem[i] = samples[i] - fitted[i];
    const double norm_new = l2(rem);

    // keep the atom only when it explains a meaningful share of the signal
    if (norm_new > 0.90 * norm_cur) break;
    omegas = std::move(trial);
    coef = std::move(trial_coef);
    current = std::move(rem);
    norm_cur = norm_new;
  }

  if (fit_out) {
    fit_out->omegas = omegas;
    fit_out->constant = coef[0];
    fit_out->sin_coef.clear();
    fit_out->cos_coef.clear();
    for (std::size_t j = 0; j < omegas.size(); ++j) {
      fit_out->sin_coef.push_back(coef[1 + 2 * j]);
      fit_out->cos_coef.push_back(coef[2 + 2 * j]);
    }
    fit_out->captured_fraction = norm0 > 0 ? 1.0 - norm_cur / norm0 : 0.0;
  }

  GridFunction remainder(u.grid(), omegas.empty() ? samples : current);
  return ergodic_mean(remainder, mu, std::move(radii), cfg, floor);
}

}  // namespace refleq
