#ifndef REFLEQ_CONFIG_HPP
#define REFLEQ_CONFIG_HPP

#include <optional>
#include <string>
#include <vector>

#include "refleq/operator.hpp"

namespace refleq {

/// Fully validated run configuration (flat key=value sections: [problem],
/// [grid], [quad], [picard], [check], [output]).
struct RunConfig {
  // [problem]
  double a = 0, b = 0, p_delay = 0;
  Expression f = Expression::parse("0");
  Expression h = Expression::parse("0");
  Expression kernel_k = Expression::parse("0");
  Expression beta = Expression::parse("t");
  Expression rho = Expression::parse("1");
  double k_decay = 1.0, k_bound = 0.0;
  bool has_h = false;

  // [grid]
  double grid_half_width = 40.0;
  double grid_step = 0.02;

  // [quad]
  QuadratureConfig quad;

  // [picard]
  double picard_tol = 1e-8;
  int picard_max_iter = 200;
  double x0_value = 0.0;

  // [check]
  std::string theorem = "auto";  // auto | constant | lp
  double check_p = 2.0;
  std::vector<double> z_grid = {0.5, 1, 2, 4, 8, 16, 32};
  std::vector<double> radii = {2.5, 5, 10, 20, 40};
  std::optional<Expression> lf_expr, lh_expr, phi_expr;
  std::optional<double> lf_const, lh_const;
  double lip_decay = 1.0;
  double mms_epsilon = 0.05;
  double residual_tol = 1e-4;
  double residual_window = 10.0;

  // [output]
  std::string csv_name = "solution.csv";
  std::string residual_csv_name = "residual.csv";
  std::string report_name = "report.txt";

  GridSpec grid() const { return GridSpec{grid_half_width, grid_step}; }
};

/// Parse and validate configuration text. `origin` labels error messages.
RunConfig parse_config(std::string_view text, const std::string& origin);

/// Load from a file; throws ConfigError (non-invariant) when unreadable.
RunConfig load_config(const std::string& path);

/// Construct the problem (compiled rhs closures, kernel, measure) and run
/// all ProblemSpec invariants.
ProblemSpec build_problem(const RunConfig& cfg);

/// Insertion-ordered key=value report; byte-stable for identical inputs.
class Report {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, const char* value);
  void set(const std::string& key, double value);
  void set(const std::string& key, bool value);
  void set(const std::string& key, long value);
  void set(const std::string& key, int value) { set(key, static_cast<long>(value)); }

  std::string str() const;
  void write_file(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace refleq

#endif  // REFLEQ_CONFIG_HPP
