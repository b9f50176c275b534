#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "refleq/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "refleq: bounded solutions of scalar integro-differential equations "
      "with reflection of the argument (contraction checks, Picard solver, "
      "verification harness)"};
  app.require_subcommand(1);
  app.fallthrough();

  refleq::CliOptions opt;
  app.add_option("--config", opt.config_path, "problem configuration file");
  app.add_option("--out", opt.out_dir, "output directory (default: out)");
  app.add_option("--threads", opt.threads, "worker threads for the solver");
  app.add_flag("--force", opt.force,
               "iterate even when the contraction gate fails");

  auto* c_check = app.add_subcommand(
      "check", "contraction conditions and measure hypothesis probes");
  auto* c_solve =
      app.add_subcommand("solve", "Picard fixed-point solve (gated by check)");
  auto* c_verify = app.add_subcommand(
      "verify", "manufactured-solution round trip or residual of a solution csv");
  std::string mms_target, residual_csv;
  c_verify->add_option("--mms", mms_target,
                       "target expression u*(t) for the manufactured round trip");
  c_verify->add_option("--residual", residual_csv,
                       "solution csv to check against the configured equation");
  auto* c_ergodic = app.add_subcommand(
      "ergodic", "weighted ergodic means (configured phi or last solution's remainder)");
  auto* c_repro = app.add_subcommand(
      "reproduce-paper", "end-to-end reference problem reproduction");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_repro->parsed())
      return refleq::cmd_reproduce_paper(opt, std::cout);

    if (opt.config_path.empty())
      throw refleq::ConfigError("--config <file> is required");
    const refleq::RunConfig cfg = refleq::load_config(opt.config_path);

    if (c_check->parsed()) return refleq::cmd_check(cfg, opt, std::cout);
    if (c_solve->parsed()) return refleq::cmd_solve(cfg, opt, std::cout);
    if (c_ergodic->parsed()) return refleq::cmd_ergodic(cfg, opt, std::cout);
    if (c_verify->parsed()) {
      if (mms_target.empty() == residual_csv.empty())
        throw refleq::ConfigError(
            "verify needs exactly one of --mms <expr> or --residual <csv>");
      if (!mms_target.empty())
        return refleq::cmd_verify_mms(cfg, opt, mms_target, std::cout);
      return refleq::cmd_verify_residual(cfg, opt, residual_csv, std::cout);
    }
    return refleq::exit_io;
  } catch (...) {
    return refleq::report_exception(std::cerr);
  }
}
