#include "refleq/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "refleq/solver.hpp"
#include "refleq/verify.hpp"

namespace refleq {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string out_path(const CliOptions& opt, const std::string& name) {
  return (fs::path(opt.out_dir) / name).string();
}

struct CheckOutcome {
  Report report;
  std::optional<ContractionReport> constant_rep;
  std::optional<ContractionReport> lp_rep;
  std::string selected;
  bool verdict = false;
  double seconds = 0;
};

CheckOutcome run_checks(const RunConfig& cfg, const ProblemSpec& ps) {
  const auto t0 = Clock::now();
  CheckOutcome out;
  Report& rep = out.report;

  rep.set("problem.a", ps.a);
  rep.set("problem.b", ps.b);
  rep.set("problem.lambda", ps.lambda());
  rep.set("problem.geom", ps.geom());
  rep.set("problem.p", ps.p_delay);
  rep.set("problem.kernel", ps.kernel.is_zero() ? "0" : ps.kernel.k.source());
  rep.set("problem.beta", ps.beta.source());
  rep.set("problem.rho", ps.mu.rho.source());
  if (ps.b == 0) rep.set("problem.no_reflection_mode", true);
  if (!(ps.a > ps.b)) rep.set("problem.a_gt_b_warning", true);

  // constant-Lipschitz condition; constants declared or sampled
  double lf = 0, lh = 0;
  bool lf_est = false, lh_est = false;
  if (cfg.lf_const) {
    lf = *cfg.lf_const;
  } else {
    lf = estimate_lipschitz(cfg.f, SampleBox{}, 20000, cfg.p_delay);
    lf_est = true;
  }
  if (cfg.lh_const) {
    lh = *cfg.lh_const;
  } else if (cfg.has_h && !ps.kernel.is_zero()) {
    lh = estimate_lipschitz(cfg.h, SampleBox{}, 20000, cfg.p_delay);
    lh_est = true;
  }
  out.constant_rep = check_constant_lipschitz(ps, lf, lh, cfg.quad);
  {
    const ContractionReport& r = *out.constant_rep;
    rep.set("contraction.constant.lf", r.lf);
    rep.set("contraction.constant.lf_estimated", lf_est);
    rep.set("contraction.constant.lh", r.lh);
    rep.set("contraction.constant.lh_estimated", lh_est);
    rep.set("contraction.constant.c", r.c);
    rep.set("contraction.constant.lhs", r.lhs);
    rep.set("contraction.constant.rhs", r.rhs);
    rep.set("contraction.constant.factor", r.factor);
    rep.set("contraction.constant.verdict", r.verdict);
  }

  if (cfg.lf_expr) {
    const Expression lh_expr =
        cfg.lh_expr ? *cfg.lh_expr : Expression::parse("0");
    out.lp_rep = check_lp_lipschitz(ps, *cfg.lf_expr, lh_expr, cfg.check_p,
                                    cfg.quad,
                                    LipschitzEnvelope{cfg.lip_decay, 0.0});
    const ContractionReport& r = *out.lp_rep;
    rep.set("contraction.lp.p", r.p);
    rep.set("contraction.lp.q", r.q);
    rep.set("contraction.lp.lf_lp_dx", r.lf);
    rep.set("contraction.lp.lh_lp_dx", r.lh);
    rep.set("contraction.lp.lf_lp_dmu", r.lf_mu_norm);
    rep.set("contraction.lp.lh_lp_dmu", r.lh_mu_norm);
    rep.set("contraction.lp.k_qnorm", r.k_qnorm);
    rep.set("contraction.lp.lhs", r.lhs);
    rep.set("contraction.lp.rhs", r.rhs);
    rep.set("contraction.lp.factor", r.factor);
    rep.set("contraction.lp.verdict", r.verdict);
  }

  if (cfg.theorem == "constant") {
    out.selected = "constant";
  } else if (cfg.theorem == "lp") {
    if (!out.lp_rep)
      throw ConfigError(
          "check.theorem = lp needs [check] lf (and lh with a kernel)");
    out.selected = "lp";
  } else {
    out.selected = out.lp_rep ? "lp" : "constant";
  }
  out.verdict = out.selected == "lp" ? out.lp_rep->verdict
                                     : out.constant_rep->verdict;
  rep.set("contraction.selected", out.selected);
  rep.set("contraction.holds", out.verdict);

  const HypothesisReport hyp =
      check_hypotheses(ps.mu, ps.beta, ps.p_delay, cfg.quad, cfg.radii);
  rep.set("hyp.m1.ratio", hyp.m1_ratio);
  rep.set("hyp.m1.verdict", hyp.m1_verdict);
  if (hyp.m2_pair) {
    rep.set("hyp.m2.m", hyp.m2_pair->first);
    rep.set("hyp.m2.n", hyp.m2_pair->second);
  }
  rep.set("hyp.m2.verdict", hyp.m2_verdict);
  rep.set("hyp.h0.translation_case", hyp.h0_translation_case);
  rep.set("hyp.h0.lambda_bound", hyp.h0_lambda_bound);
  for (std::size_t i = 0; i < hyp.h0_limsup_estimate.size(); ++i)
    rep.set("hyp.h0.limsup." + std::to_string(i + 1),
            hyp.h0_limsup_estimate[i]);
  rep.set("hyp.h0.verdict", hyp.h0_verdict);

  const SupWeightedReport pp =
      p1_p2_sup(ps.mu, ps.lambda(), cfg.z_grid, cfg.quad);
  rep.set("hyp.h1.p1", pp.p1);
  rep.set("hyp.h1.p2", pp.p2);
  rep.set("hyp.h1.p1_saturated", pp.p1_saturated);
  rep.set("hyp.h1.p2_saturated", pp.p2_saturated);
  rep.set("hyp.h1.verdict",
          (std::isfinite(pp.p1) && std::isfinite(pp.p2)) ? "supported"
                                                         : "violated on sample");

  out.seconds = seconds_since(t0);
  return out;
}

void append_trace(Report& rep, const SolveTrace& trace, double picard_tol) {
  rep.set("solve.iterations", static_cast<long>(trace.iterations()));
  rep.set("solve.converged", trace.converged);
  if (!trace.steps.empty()) rep.set("solve.final_step", trace.steps.back());
  rep.set("solve.max_step_ratio",
          trace.max_step_ratio(1, 100.0 * picard_tol));
  if (std::isfinite(trace.final_residual))
    rep.set("solve.final_residual", trace.final_residual);
  for (std::size_t k = 0; k < trace.steps.size(); ++k)
    rep.set("solve.step." + std::to_string(k + 1), trace.steps[k]);
}

void write_solution_csv(const GridFunction& u, const std::string& path) {
  const auto dir = fs::path(path).parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write solution csv '" + path + "'");
  u.write_csv(out);
}

double recovery_window(const RunConfig& cfg) {
  return std::min(cfg.residual_window,
                  cfg.grid_half_width - 5.0 - 2.0 * cfg.grid_step);
}

}  // namespace

int cmd_check(const RunConfig& cfg, const CliOptions& opt, std::ostream& log) {
  const ProblemSpec ps = build_problem(cfg);
  CheckOutcome out = run_checks(cfg, ps);
  out.report.write_file(out_path(opt, cfg.report_name));
  log << out.report.str();
  log << (out.verdict ? "contraction holds" : "contraction condition violated; uniqueness not guaranteed")
      << " (" << out.selected << " condition, " << out.seconds << " s)\n";
  return out.verdict ? exit_ok : exit_condition_failed;
}

int cmd_solve(const RunConfig& cfg, const CliOptions& opt, std::ostream& log) {
  const ProblemSpec ps = build_problem(cfg);
  CheckOutcome out = run_checks(cfg, ps);
  if (!out.verdict && !opt.force) {
    out.report.write_file(out_path(opt, cfg.report_name));
    log << "contraction condition violated; uniqueness not guaranteed "
           "(use --force to iterate anyway)\n";
    return exit_condition_failed;
  }

  const GridFunction x0 = GridFunction::constant(cfg.grid(), cfg.x0_value);
  SolveTrace trace = picard_solve(ps, x0, cfg.picard_tol, cfg.picard_max_iter,
                                  cfg.quad, opt.threads);
  append_trace(out.report, trace, cfg.picard_tol);

  const std::string csv = out_path(opt, cfg.csv_name);
  write_solution_csv(trace.solution, csv);
  out.report.set("solve.csv", csv);
  out.report.write_file(out_path(opt, cfg.report_name));

  log << "picard: " << trace.iterations() << " iteration(s), "
      << (trace.converged ? "converged" : "NOT converged");
  if (std::isfinite(trace.final_residual))
    log << ", residual sup = " << trace.final_residual;
  log << "\nsolution written to " << csv << "\n";
  return trace.converged ? exit_ok : exit_not_converged;
}

int cmd_verify_mms(const RunConfig& cfg, const CliOptions& opt,
                   const std::string& target_expr, std::ostream& log) {
  ProblemSpec ps = build_problem(cfg);
  if (!ps.kernel.is_zero() && !ps.h_lipschitz) {
    if (!cfg.has_h)
      throw ConfigError("verify --mms: template has a kernel but no h", true);
    ps.h_lipschitz =
        estimate_lipschitz(cfg.h, SampleBox{}, 20000, cfg.p_delay);
  }

  const Expression target = Expression::parse(target_expr);
  const ManufacturedProblem mp =
      manufacture(target, ps, cfg.grid(), cfg.mms_epsilon, cfg.quad);

  const double w = recovery_window(cfg);
  const ResidualReport at_target =
      residual(mp.problem, mp.target, -w, w, cfg.quad);
  const bool sound = at_target.sup_residual < 1e-6;

  const GridFunction x0 = GridFunction::constant(cfg.grid(), cfg.x0_value);
  SolveTrace trace = picard_solve(mp.problem, x0, cfg.picard_tol,
                                  cfg.picard_max_iter, cfg.quad, opt.threads);
  double err = 0;
  for (long i = 0; i < trace.solution.size(); ++i) {
    if (std::fabs(trace.solution.node(i)) > w) continue;
    err = std::max(err,
                   std::fabs(trace.solution[i] - mp.target[i]));
  }
  const bool recovered = trace.converged && err < cfg.residual_tol;

  Report rep;
  rep.set("mms.target", target.str());
  rep.set("mms.epsilon", mp.epsilon);
  rep.set("mms.gate_lhs", mp.gate.lhs);
  rep.set("mms.residual_at_target", at_target.sup_residual);
  rep.set("mms.residual_at_target_ok", sound);
  rep.set("mms.iterations", static_cast<long>(trace.iterations()));
  rep.set("mms.converged", trace.converged);
  rep.set("mms.recovered_sup_error", err);
  rep.set("mms.recovered_ok", recovered);
  rep.write_file(out_path(opt, cfg.report_name));
  log << rep.str();
  return (sound && recovered) ? exit_ok : exit_condition_failed;
}

int cmd_verify_residual(const RunConfig& cfg, const CliOptions& opt,
                        const std::string& csv_path, std::ostream& log) {
  const ProblemSpec ps = build_problem(cfg);
  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot open solution csv '" + csv_path + "'");
  GridFunction u = [&] {
    try {
      return GridFunction::read_csv(in);
    } catch (const GridError& e) {
      throw ConfigError(std::string("solution csv: ") + e.what());
    }
  }();

  const double w = std::min(cfg.residual_window,
                            u.half_width() - 5.0 - 2.0 * u.step());
  const ResidualReport r = residual(ps, u, -w, w, cfg.quad, true);

  const std::string rcsv = out_path(opt, cfg.residual_csv_name);
  const auto dir = fs::path(rcsv).parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  std::ofstream rout(rcsv, std::ios::binary);
  rout << "t,residual\n";
  char buf[80];
  for (const auto& [t, v] : r.per_point) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", t, v);
    rout << buf;
  }

  Report rep;
  rep.set("residual.window_lo", r.window_lo);
  rep.set("residual.window_hi", r.window_hi);
  rep.set("residual.sup", r.sup_residual);
  rep.set("residual.l2", r.l2_residual);
  rep.set("residual.tol", cfg.residual_tol);
  rep.set("residual.csv", rcsv);
  rep.write_file(out_path(opt, cfg.report_name));
  log << rep.str();
  return r.sup_residual < cfg.residual_tol ? exit_ok : exit_condition_failed;
}

int cmd_ergodic(const RunConfig& cfg, const CliOptions& opt,
                std::ostream& log) {
  const ProblemSpec ps = build_problem(cfg);
  Report rep;
  ErgodicityReport er;
  if (cfg.phi_expr) {
    rep.set("ergodic.phi", cfg.phi_expr->str());
    er = ergodic_mean(*cfg.phi_expr, ps.mu, cfg.radii, cfg.quad);
  } else {
    const std::string csv = out_path(opt, cfg.csv_name);
    std::ifstream in(csv);
    if (!in)
      throw ConfigError("ergodic: no [check] phi configured and no solved "
                        "solution at '" + csv + "'");
    GridFunction u = [&] {
      try {
        return GridFunction::read_csv(in);
      } catch (const GridError& e) {
        throw ConfigError(std::string("solution csv: ") + e.what());
      }
    }();
    rep.set("ergodic.phi", "remainder of " + csv);
    TrendFit fit;
    er = ergodic_diagnostics(u, ps.mu, cfg.radii, cfg.quad, &fit);
    rep.set("ergodic.fit.captured_fraction", fit.captured_fraction);
    rep.set("ergodic.fit.constant", fit.constant);
    for (std::size_t j = 0; j < fit.omegas.size(); ++j)
      rep.set("ergodic.fit.omega." + std::to_string(j + 1), fit.omegas[j]);
  }
  for (std::size_t i = 0; i < er.radii.size(); ++i) {
    rep.set("ergodic.radius." + std::to_string(i + 1), er.radii[i]);
    rep.set("ergodic.mean." + std::to_string(i + 1), er.means[i]);
  }
  rep.set("ergodic.trend_slope", er.trend_slope);
  rep.set("ergodic.verdict", to_string(er.verdict));
  rep.set("ergodic.note",
          "sampled diagnostic, not a proof of almost automorphy");
  rep.write_file(out_path(opt, cfg.report_name));
  log << rep.str();
  return exit_ok;
}

int cmd_reproduce_paper(const CliOptions& opt, std::ostream& log) {
  const RunConfig cfg =
      opt.config_path.empty()
          ? parse_config(builtin_reference_config(), "<builtin reference>")
          : load_config(opt.config_path);
  const ProblemSpec ps = build_problem(cfg);

  int failures = 0;
  const auto check_line = [&](const char* name, bool ok,
                              const std::string& detail) {
    log << (ok ? "PASS" : "FAIL") << "  " << name;
    if (!detail.empty()) log << "  (" << detail << ")";
    log << "\n";
    if (!ok) ++failures;
  };

  // check stage: the published contraction constants
  const auto t0 = Clock::now();
  if (!cfg.lf_expr || !cfg.lh_expr)
    throw ConfigError("reference config must declare [check] lf and lh");
  const ContractionReport lp =
      check_lp_lipschitz(ps, *cfg.lf_expr, *cfg.lh_expr, cfg.check_p, cfg.quad,
                         LipschitzEnvelope{cfg.lip_decay, 0.0});
  const double check_seconds = seconds_since(t0);

  const double want_lhs = (std::sqrt(2.0) + 1.0) / 9.0;
  const double want_rhs = 1.0 / (std::sqrt(2.0) + 2.0);
  {
    std::ostringstream d;
    d << "lhs = " << lp.lhs << ", expected (sqrt(2)+1)/9 = " << want_lhs;
    check_line("lp condition lhs", std::fabs(lp.lhs - want_lhs) < 1e-6,
               d.str());
  }
  {
    std::ostringstream d;
    d << "rhs = " << lp.rhs << ", expected 1/(sqrt(2)+2) = " << want_rhs;
    check_line("lp condition rhs", std::fabs(lp.rhs - want_rhs) < 1e-6,
               d.str());
  }
  check_line("contraction holds", lp.verdict,
             "factor = " + std::to_string(lp.factor));
  {
    std::ostringstream d;
    d << check_seconds << " s";
    check_line("check stage under 1 s", check_seconds < 1.0, d.str());
  }

  // solve stage
  const GridFunction x0 = GridFunction::constant(cfg.grid(), cfg.x0_value);
  SolveTrace trace = picard_solve(ps, x0, cfg.picard_tol, cfg.picard_max_iter,
                                  cfg.quad, opt.threads);
  check_line("picard converged", trace.converged,
             std::to_string(trace.iterations()) + " iteration(s)");
  {
    std::ostringstream d;
    d << "sup residual = " << trace.final_residual << ", tol = "
      << cfg.residual_tol;
    check_line("equation residual",
               trace.converged &&
                   trace.final_residual < cfg.residual_tol,
               d.str());
  }

  Report rep;
  rep.set("reproduce.lhs", lp.lhs);
  rep.set("reproduce.lhs_expected", want_lhs);
  rep.set("reproduce.rhs", lp.rhs);
  rep.set("reproduce.rhs_expected", want_rhs);
  rep.set("reproduce.factor", lp.factor);
  rep.set("reproduce.verdict",
          lp.verdict ? "contraction holds" : "contraction violated");
  append_trace(rep, trace, cfg.picard_tol);
  const std::string csv = out_path(opt, cfg.csv_name);
  write_solution_csv(trace.solution, csv);
  rep.set("solve.csv", csv);
  rep.write_file(out_path(opt, cfg.report_name));

  if (!trace.converged) return exit_not_converged;
  return failures == 0 ? exit_ok : exit_condition_failed;
}

const char* builtin_reference_config() {
  return R"cfg(# Reference problem: delayed reflection equation with an exponential
# convolution kernel and the exp(sin t) measure density.
[problem]
a = 2^0.5
b = 1
f = (exp(-abs(t))/9)*(sin(x1)+cos(x2))
h = (exp(-abs(t))/9)*(sin(x1)+cos(x2))
K = exp(-s)
k_decay = 1
k_bound = 1
beta = t-p
rho = exp(sin(t))
p = 0.5

[grid]
T = 40
h = 0.02

[quad]
abs_tol = 1e-8
max_refinements = 20
initial_panels = 8

[picard]
tol = 1e-8
max_iter = 200
x0 = 0

[check]
theorem = lp
p = 2
z_grid = 0.5,1,2,4,8,16,32
radii = 2.5,5,10,20,40
lf = exp(-abs(t))/9
lh = exp(-abs(t))/9
lip_decay = 1

[output]
csv = solution.csv
residual_csv = residual.csv
report = report.txt
)cfg";
}

int report_exception(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return e.invariant() ? exit_condition_failed : exit_io;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return exit_io;
  } catch (const QuadratureError& e) {
    err << "error: " << e.what() << "\n";
    return exit_condition_failed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_condition_failed;
  }
}

}  // namespace refleq
