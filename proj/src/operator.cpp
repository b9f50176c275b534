#include "refleq/operator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

namespace refleq {

namespace {

const std::string kVarT[] = {"t"};
const std::string kVarS[] = {"s"};

double memo_quantum(double grid_step) {
  return grid_step / static_cast<double>(1 << 20);
}

}  // namespace

double ProblemSpec::lambda() const {
  const double d = a * a - b * b;
  if (!(d > 0))
    throw ConfigError("problem: a^2 - b^2 must be positive", true);
  return std::sqrt(d);
}

double ProblemSpec::geom() const {
  const double l = lambda();
  return std::fabs(l - a) + std::fabs(l + a) + 2.0 * std::fabs(b);
}

void ProblemSpec::validate() const {
  (void)lambda();  // throws on a^2 - b^2 <= 0
  if (!kernel.is_zero() && !(kernel.decay > 0))
    throw ConfigError("problem: kernel decay certificate must be positive",
                      true);
  CompiledExpr beta_fn(beta, kVarT, {{"p", p_delay}});
  double prev = beta_fn(-50.0);
  for (double t = -50.0 + 0.125; t <= 50.0; t += 0.125) {
    const double bt = beta_fn(t);
    if (!(bt > prev))
      throw ConfigError("problem.beta: not strictly increasing (sampled at t=" +
                            std::to_string(t) + ")",
                        true);
    prev = bt;
  }
}

double beta_at(const ProblemSpec& ps, double t) {
  CompiledExpr beta_fn(ps.beta, kVarT, {{"p", ps.p_delay}});
  return beta_fn(t);
}

RhsEvaluator::RhsEvaluator(const ProblemSpec& ps, const GridFunction& u,
                           const QuadratureConfig& cfg, ConvLayout* shared)
    : ps_(ps),
      u_(u),
      cfg_(cfg),
      beta_(ps.beta, kVarT, {{"p", ps.p_delay}}),
      kernel_zero_(ps.kernel.is_zero()),
      panel_hint_(u.step()),
      layout_(shared ? shared : &own_layout_),
      h_memo_(memo_quantum(u.step())),
      conv_memo_(memo_quantum(u.step())) {
  if (u.empty()) throw GridError("rhs evaluation needs a non-empty candidate");
  if (kernel_zero_) return;

  kernel_ = CompiledExpr(ps.kernel.k, kVarS, {{"p", ps.kernel.p_value}});
  kernel_bound_ = kernel_certificate_bound(ps.kernel, cfg);

  // sampled bound on |h(s, u(beta s), u(beta -s))| over the range the
  // convolution quadratures can touch
  const double lam = ps.lambda();
  const double span = u.half_width() + 80.0 / lam + 80.0 / ps.kernel.decay;
  const double step = std::max(u.step(), 0.01);
  double sup = 0;
  for (double s = -span; s <= span; s += step)
    sup = std::max(sup, std::fabs(h_at(s)));
  sup_h_ = sup * 1.25;

  if (layout_->cutoff == 0 && layout_->sup_h == 0) {
    layout_->sup_h = std::max(sup_h_ * 1.5, 1e-300);
    const double bound = kernel_bound_ * layout_->sup_h;
    double len =
        std::log(bound / (cfg.abs_tol * ps.kernel.decay)) / ps.kernel.decay;
    if (len > 0) {
      const double two_w = 2.0 * panel_hint_;
      len = std::ceil(len / two_w) * two_w;
      const double cap = cfg.hard_cap / ps.kernel.decay;
      if (len > cap)
        throw QuadratureError(
            "kernel convolution: certificate needs truncation length " +
            std::to_string(len) + " beyond cap " + std::to_string(cap));
      layout_->cutoff = len;
    }
  } else if (sup_h_ > layout_->sup_h) {
    // candidate outgrew the certified bound: re-plan the layout
    layout_->depth.clear();
    layout_->sup_h = std::max(sup_h_ * 1.5, 1e-300);
    const double bound = kernel_bound_ * layout_->sup_h;
    double len =
        std::log(bound / (cfg.abs_tol * ps.kernel.decay)) / ps.kernel.decay;
    const double two_w = 2.0 * panel_hint_;
    len = len > 0 ? std::ceil(len / two_w) * two_w : 0.0;
    layout_->cutoff = std::max(layout_->cutoff, len);
  }
}

double RhsEvaluator::h_at(double s) const {
  return h_memo_.get_or_compute(s, [&](double ss) {
    return ps_.h(ss, u_.eval_at(beta_(ss)), u_.eval_at(beta_(-ss)));
  });
}

double RhsEvaluator::conv_forward(double tau) const {
  if (kernel_zero_ || layout_->cutoff == 0) return 0.0;
  return conv_memo_.get_or_compute(tau, [&](double t0) {
    SemiInfiniteOptions opt;
    opt.fixed_length = layout_->cutoff;
    opt.panel_width_hint = panel_hint_;
    int planned = -1;
    if (layout_->depth.lookup(t0, planned)) {
      opt.fixed_depth = planned;
      return integrate_semi_infinite(
          [&](double y) { return kernel_(y) * h_at(t0 + y); }, 0.0,
          ps_.kernel.decay, kernel_bound_ * layout_->sup_h, cfg_, opt);
    }
    int used = 0;
    opt.depth_out = &used;
    const double v = integrate_semi_infinite(
        [&](double y) { return kernel_(y) * h_at(t0 + y); }, 0.0,
        ps_.kernel.decay, kernel_bound_ * layout_->sup_h, cfg_, opt);
    layout_->depth.store(t0, used);
    return v;
  });
}

RhsValue RhsEvaluator::at(double t) const {
  RhsValue v;
  const double x1 = u_.eval_at(beta_(t));
  const double x2 = u_.eval_at(beta_(-t));
  v.f_part = ps_.f(t, x1, x2);
  if (!kernel_zero_) {
    v.kernel_forward = conv_forward(t);
    v.kernel_backward = conv_forward(-t);
  }
  v.total = v.f_part + v.kernel_forward + v.kernel_backward;
  return v;
}

RhsValue assemble_rhs(const ProblemSpec& ps, const GridFunction& u, double t,
                      const QuadratureConfig& cfg) {
  return RhsEvaluator(ps, u, cfg).at(t);
}

namespace {

// Combined integrand of the bounded-solution representation, with the
// backward integral mapped onto [t, inf) by y -> 2t - y:
//   u(t) = int_t^inf e^{-lam (y-t)} / (2 lam) *
//          [ -((lam+a) G(y) - b G(-y)) + (lam-a) G(2t-y) + b G(y-2t) ] dy
double representation_value(const ProblemSpec& ps,
                   const std::function<double(double)>& G, double sup_bound,
                   double t, const QuadratureConfig& cfg,
                   const SemiInfiniteOptions& opt) {
  const double lam = ps.lambda();
  const double a = ps.a, b = ps.b;
  const double inv2l = 1.0 / (2.0 * lam);
  const auto integrand = [&](double y) {
    return std::exp(-lam * (y - t)) * inv2l *
           (-((lam + a) * G(y) - b * G(-y)) + (lam - a) * G(2.0 * t - y) +
            b * G(y - 2.0 * t));
  };
  const double bound = sup_bound * ps.geom() * inv2l;
  return integrate_semi_infinite(integrand, t, lam, bound, cfg, opt);
}

}  // namespace

double linear_solution(const ProblemSpec& ps,
                       const std::function<double(double)>& forcing,
                       double forcing_sup, double t,
                       const QuadratureConfig& cfg, double panel_width_hint) {
  if (!(ps.a * ps.a - ps.b * ps.b > 0))
    throw ConfigError("linear_solution: lambda^2 = a^2 - b^2 must be positive",
                      true);
  if (forcing_sup <= 0) return 0.0;
  SemiInfiniteOptions opt;
  opt.panel_width_hint = panel_width_hint;
  return representation_value(ps, forcing, forcing_sup, t, cfg, opt);
}

SolutionOperator::SolutionOperator(const ProblemSpec& ps, GridSpec grid,
                                   const QuadratureConfig& cfg, int threads)
    : ps_(ps),
      grid_(grid),
      cfg_(cfg),
      threads_(std::max(1, threads)),
      g_memo_(memo_quantum(grid.step)) {
  grid_.validate();
  outer_depth_.assign(grid_.node_count(), -1);
}

void SolutionOperator::plan(const std::function<double(double)>& g_cached) {
  const double lam = ps_.lambda();
  const double geom = ps_.geom();
  double ext = 20.0 / lam;
  double bound = 0, len = 0;
  for (int pass = 0; pass < 4; ++pass) {
    double raw = 0;
    const double step = 4.0 * grid_.step;
    const double span = grid_.half_width + ext;
    for (double t = -span; t <= span + 1e-12; t += step)
      raw = std::max(raw, std::fabs(g_cached(t)));
    if (raw == 0.0) {  // forcing identically zero on the sample
      bound = 0;
      len = 0;
      break;
    }
    // headroom so later iterates (and restarts from other x0) stay inside
    // the certified bound without re-planning the layout
    bound = raw * 2.0;
    len = std::log(bound * geom / (2.0 * lam) / (cfg_.abs_tol * lam)) / lam;
    const double two_w = 2.0 * grid_.step;
    len = len > 0 ? std::ceil(len / two_w) * two_w : 0.0;
    if (len <= ext) break;
    ext = len + 5.0 / lam;
  }
  if (len > cfg_.hard_cap / lam)
    throw QuadratureError(
        "solution operator: forcing bound " + std::to_string(bound) +
        " needs truncation length " + std::to_string(len) + " beyond cap " +
        std::to_string(cfg_.hard_cap / lam));
  if (trunc_len_ == 0 && forcing_bound_ == 0) {
    trunc_len_ = len;
    forcing_bound_ = bound;
  } else if (bound > forcing_bound_) {
    // certified bound exceeded: re-plan the layout
    forcing_bound_ = bound;
    trunc_len_ = std::max(trunc_len_, len);
    std::fill(outer_depth_.begin(), outer_depth_.end(), -1);
  }
}

GridFunction SolutionOperator::apply(const GridFunction& x) {
  if (x.grid().half_width != grid_.half_width || x.grid().step != grid_.step)
    throw GridError("solution operator: candidate grid mismatch");

  RhsEvaluator rhs(ps_, x, cfg_, &conv_layout_);
  g_memo_.clear();
  const auto g_cached = [&](double y) {
    return g_memo_.get_or_compute(y, [&](double yy) { return rhs.total(yy); });
  };

  plan(g_cached);
  const long count = grid_.node_count();
  if (forcing_bound_ == 0)
    return GridFunction::constant(grid_, 0.0);

  std::vector<double> out(count);
  const long n_half = (count - 1) / 2;
  auto worker = [&](long i0, long i1) {
    for (long i = i0; i < i1; ++i) {
      const double t = (i - n_half) * grid_.step;
      SemiInfiniteOptions opt;
      opt.fixed_length = trunc_len_;
      opt.panel_width_hint = grid_.step;
      if (outer_depth_[i] >= 0) {
        opt.fixed_depth = outer_depth_[i];
        out[i] = representation_value(ps_, g_cached, forcing_bound_, t, cfg_, opt);
      } else {
        int used = 0;
        opt.depth_out = &used;
        out[i] = representation_value(ps_, g_cached, forcing_bound_, t, cfg_, opt);
        outer_depth_[i] = used;
      }
    }
  };

  const int workers = static_cast<int>(
      std::min<long>(threads_, std::max<long>(1, count)));
  if (workers <= 1) {
    worker(0, count);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const long chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const long i0 = w * chunk, i1 = std::min<long>(count, i0 + chunk);
      pool.emplace_back([&, w, i0, i1] {
        try {
          worker(i0, i1);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return GridFunction(grid_, std::move(out));
}

GridFunction apply_solution_operator(const ProblemSpec& ps,
                                     const GridFunction& x,
                                     const QuadratureConfig& cfg, int threads) {
  SolutionOperator op(ps, x.grid(), cfg, threads);
  return op.apply(x);
}

}  // namespace refleq
