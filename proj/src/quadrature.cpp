#include "refleq/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "refleq/measure.hpp"

namespace refleq {

void QuadratureConfig::validate() const {
  if (!(abs_tol > 0)) throw ConfigError("quad.abs_tol must be > 0", true);
  if (initial_panels < 4 || initial_panels % 2 != 0)
    throw ConfigError("quad.initial_panels must be even and >= 4", true);
  if (max_refinements < 1)
    throw ConfigError("quad.max_refinements must be >= 1", true);
}

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 const QuadratureConfig& cfg, const IntegrateOptions& opt) {
  if (hi < lo) throw QuadratureError("integrate: hi < lo");
  if (hi == lo) return 0.0;

  long n = opt.initial_panels > 0 ? opt.initial_panels : cfg.initial_panels;
  if (n < 2) n = 2;
  if (n % 2) ++n;

  const double len = hi - lo;
  double h = len / static_cast<double>(n);

  const double ends = f(lo) + f(hi);
  double odd = 0, interior = 0;
  for (long i = 1; i < n; ++i) {
    const double v = f(lo + static_cast<double>(i) * h);
    interior += v;
    if (i % 2) odd += v;
  }
  double prev = h / 3.0 * (ends + 4.0 * odd + 2.0 * (interior - odd));

  if (opt.fixed_depth == 0) {
    if (opt.depth_out) *opt.depth_out = 0;
    return prev;
  }

  for (int level = 1; level <= cfg.max_refinements; ++level) {
    n *= 2;
    h = len / static_cast<double>(n);
    double new_odd = 0;
    for (long i = 1; i < n; i += 2)
      new_odd += f(lo + static_cast<double>(i) * h);
    interior += new_odd;
    const double cur =
        h / 3.0 * (ends + 4.0 * new_odd + 2.0 * (interior - new_odd));
    const double delta = std::fabs(cur - prev);
    if (opt.level_deltas) opt.level_deltas->push_back(delta);

    if (opt.fixed_depth >= 0) {
      if (level == opt.fixed_depth) {
        if (opt.depth_out) *opt.depth_out = level;
        return cur;
      }
    } else if (delta < cfg.abs_tol) {
      if (opt.depth_out) *opt.depth_out = level;
      return cur;
    }
    prev = cur;
  }
  if (opt.fixed_depth >= 0) {
    if (opt.depth_out) *opt.depth_out = cfg.max_refinements;
    return prev;
  }
  std::ostringstream msg;
  msg << "integrate: tolerance " << cfg.abs_tol << " not met on [" << lo
      << ", " << hi << "] after " << cfg.max_refinements << " refinements";
  throw QuadratureError(msg.str());
}

double integrate_semi_infinite(const std::function<double(double)>& f,
                               double lo, double decay, double bound,
                               const QuadratureConfig& cfg,
                               const SemiInfiniteOptions& opt) {
  if (!(decay > 0))
    throw QuadratureError("integrate_semi_infinite: decay must be > 0");
  if (opt.depth_out) *opt.depth_out = 0;
  if (opt.cutoff_out) *opt.cutoff_out = lo;
  if (bound <= 0) return 0.0;  // certificate says |f| <= 0

  double len;
  if (opt.fixed_length > 0) {
    len = opt.fixed_length;
  } else {
    len = std::log(bound / (cfg.abs_tol * decay)) / decay;
    if (len <= 0) return 0.0;  // tail already below tolerance at lo
    if (opt.panel_width_hint > 0) {
      // round the truncation length up to an even panel count so the node
      // lattice stays aligned with the caller's grid
      const double two_w = 2.0 * opt.panel_width_hint;
      len = std::ceil(len / two_w) * two_w;
    }
    const double cap = cfg.hard_cap / decay;
    if (len > cap) {
      std::ostringstream msg;
      msg << "integrate_semi_infinite: certificate (bound=" << bound
          << ", decay=" << decay << ") needs truncation length " << len
          << " beyond the cap " << cap << "; required hard_cap >= "
          << len * decay;
      throw QuadratureError(msg.str());
    }
  }
  if (opt.cutoff_out) *opt.cutoff_out = lo + len;

  IntegrateOptions iopt;
  iopt.fixed_depth = opt.fixed_depth;
  iopt.depth_out = opt.depth_out;
  if (opt.panel_width_hint > 0) {
    long n = std::lround(len / opt.panel_width_hint);
    if (n < 4) n = 4;
    if (n % 2) ++n;
    iopt.initial_panels = static_cast<int>(n);
  }
  return integrate(f, lo, lo + len, cfg, iopt);
}

namespace {

const std::string kKernelVar[] = {"s"};

void check_kernel_nonnegative(const CompiledExpr& k, double hi) {
  for (double s = 0; s <= hi; s += std::max(hi / 4096.0, 1e-3))
    if (k(s) < 0)
      throw QuadratureError("kernel is negative at s=" + std::to_string(s));
}

// int_0^inf g(s) ds for g >= 0 decaying: fixed first segment, then cutoff
// doubling until two consecutive segment contributions fall below tolerance.
double integrate_decaying_tail(const std::function<double(double)>& g,
                               const QuadratureConfig& cfg) {
  const double seg_tol_scale = 0.1;  // per-segment tolerance
  QuadratureConfig seg_cfg = cfg;
  seg_cfg.abs_tol = cfg.abs_tol * seg_tol_scale;

  double r = 8.0;
  double total = integrate(g, 0.0, r, seg_cfg);
  int quiet = 0;
  const double r_cap = 3.0e7;
  while (r < r_cap) {
    const double seg = integrate(g, r, 2.0 * r, seg_cfg);
    total += seg;
    r *= 2.0;
    if (std::fabs(seg) < cfg.abs_tol) {
      if (++quiet >= 2) return total;
    } else {
      quiet = 0;
    }
  }
  throw QuadratureError(
      "kernel tail estimate not below tolerance at cutoff cap (divergence?)");
}

}  // namespace

double kernel_constant_c(const KernelSpec& kernel, const QuadratureConfig& cfg) {
  if (kernel.is_zero()) return 0.0;
  CompiledExpr k(kernel.k, kKernelVar, {{"p", kernel.p_value}});
  check_kernel_nonnegative(k, 64.0);
  return integrate_decaying_tail([&](double s) { return k(s); }, cfg);
}

double kernel_q_norm(const KernelSpec& kernel, double q,
                     const QuadratureConfig& cfg) {
  if (!(q > 1)) throw QuadratureError("kernel_q_norm: q must be > 1");
  if (kernel.is_zero()) return 0.0;
  CompiledExpr k(kernel.k, kKernelVar, {{"p", kernel.p_value}});
  check_kernel_nonnegative(k, 64.0);
  const double integral = integrate_decaying_tail(
      [&](double s) { return std::pow(k(s), q); }, cfg);
  return std::pow(integral, 1.0 / q);
}

double kernel_certificate_bound(const KernelSpec& kernel,
                                const QuadratureConfig& cfg) {
  if (kernel.is_zero()) return 0.0;
  if (kernel.bound > 0) return kernel.bound;
  CompiledExpr k(kernel.k, kKernelVar, {{"p", kernel.p_value}});
  const double hi = cfg.hard_cap / kernel.decay;
  double mx = 0;
  for (double s = 0; s <= hi; s += std::max(hi / 65536.0, 1e-4))
    mx = std::max(mx, k(s) * std::exp(kernel.decay * s));
  return mx * 1.05;  // sampled, inflated
}

SupWeightedReport p1_p2_sup(const MeasureSpec& mu, double lambda,
                            std::span<const double> z_grid,
                            const QuadratureConfig& cfg) {
  if (!(lambda > 0)) throw QuadratureError("p1_p2_sup: lambda must be > 0");
  static const std::string kT[] = {"t"};
  CompiledExpr rho(mu.rho, kT);

  SupWeightedReport rep;
  for (double z : z_grid) {
    const double i1 = integrate(
        [&](double t) { return std::exp(-lambda * (t + z)) * rho(t); }, -z, z,
        cfg);
    const double i2 = integrate(
        [&](double t) { return std::exp(-lambda * (z - t)) * rho(t); }, -z, z,
        cfg);
    rep.p1_values.push_back(i1);
    rep.p2_values.push_back(i2);
  }
  auto finish = [](const std::vector<double>& vals, double& sup, bool& sat) {
    sup = 0;
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < vals.size(); ++i)
      if (vals[i] > sup) sup = vals[argmax = i];
    if (vals.size() >= 2 && argmax == vals.size() - 1) {
      const double grow = vals.back() - vals[vals.size() - 2];
      sat = grow > 1e-7 * std::max(1.0, std::fabs(sup));
    }
  };
  finish(rep.p1_values, rep.p1, rep.p1_saturated);
  finish(rep.p2_values, rep.p2, rep.p2_saturated);
  return rep;
}

}  // namespace refleq
