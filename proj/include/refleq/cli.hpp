#ifndef REFLEQ_CLI_HPP
#define REFLEQ_CLI_HPP

#include <iosfwd>
#include <string>

#include "refleq/config.hpp"

namespace refleq {

// Exit codes shared by every subcommand:
//   0 success, 1 condition/invariant failure, 2 non-convergence,
//   3 I/O or parse error.
enum ExitCode : int {
  exit_ok = 0,
  exit_condition_failed = 1,
  exit_not_converged = 2,
  exit_io = 3,
};

struct CliOptions {
  std::string config_path;
  std::string out_dir = "out";
  bool force = false;
  int threads = 1;
};

int cmd_check(const RunConfig& cfg, const CliOptions& opt, std::ostream& log);
int cmd_solve(const RunConfig& cfg, const CliOptions& opt, std::ostream& log);
int cmd_verify_mms(const RunConfig& cfg, const CliOptions& opt,
                   const std::string& target_expr, std::ostream& log);
int cmd_verify_residual(const RunConfig& cfg, const CliOptions& opt,
                        const std::string& csv_path, std::ostream& log);
int cmd_ergodic(const RunConfig& cfg, const CliOptions& opt, std::ostream& log);

/// End-to-end reproduction of the reference delayed-reflection problem:
/// asserts the published contraction constants, solves, and checks the
/// equation residual. Uses the built-in configuration unless
/// opt.config_path is set.
int cmd_reproduce_paper(const CliOptions& opt, std::ostream& log);

/// The built-in reference configuration text (also shipped as
/// configs/reference.cfg).
const char* builtin_reference_config();

/// Map an exception to the exit-code contract; prints the message to err.
int report_exception(std::ostream& err);

}  // namespace refleq

#endif  // REFLEQ_CLI_HPP
