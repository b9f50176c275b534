#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "refleq/cli.hpp"
#include "refleq/funcspace.hpp"

using namespace refleq;
namespace fs = std::filesystem;

namespace {

// small, kernel-free problem so command round trips stay fast
const char* kFastConfig = R"cfg(
[problem]
a = 2^0.5
b = 1
f = (exp(-abs(t))/20)*(sin(x1)+cos(x2))
beta = t
rho = 1

[grid]
T = 15
h = 0.025

[check]
theorem = constant
lf_const = 0.05
radii = 1,2,4,8
z_grid = 0.5,1,2,4,8

[picard]
tol = 1e-8
max_iter = 60
)cfg";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("cmd_check: exit code tracks the selected verdict; reports stable") {
  const RunConfig cfg = parse_config(kFastConfig, "<cli test>");
  TempDir out_a("refleq_cli_a"), out_b("refleq_cli_b");
  CliOptions opt_a;
  opt_a.out_dir = out_a.str();
  std::ostringstream log;
  CHECK(cmd_check(cfg, opt_a, log) == exit_ok);

  CliOptions opt_b;
  opt_b.out_dir = out_b.str();
  CHECK(cmd_check(cfg, opt_b, log) == exit_ok);
  CHECK(read_file(out_a.str() + "/report.txt") ==
        read_file(out_b.str() + "/report.txt"));

  const std::string report = read_file(out_a.str() + "/report.txt");
  CHECK(report.find("contraction.constant.lhs") != std::string::npos);
  CHECK(report.find("contraction.holds = true") != std::string::npos);
  CHECK(report.find("hyp.m1.ratio") != std::string::npos);
  CHECK(report.find("hyp.h1.p1") != std::string::npos);
  CHECK(report.find("seconds") == std::string::npos);  // byte-stable
}

TEST_CASE("cmd_check: failing gate exits 1") {
  std::string text = kFastConfig;
  text.replace(text.find("lf_const = 0.05"), 15, "lf_const = 9.99");
  const RunConfig cfg = parse_config(text, "<cli test>");
  TempDir out("refleq_cli_gate");
  CliOptions opt;
  opt.out_dir = out.str();
  std::ostringstream log;
  CHECK(cmd_check(cfg, opt, log) == exit_condition_failed);
}

TEST_CASE("cmd_solve, cmd_verify, cmd_ergodic round trip") {
  const RunConfig cfg = parse_config(kFastConfig, "<cli test>");
  TempDir out("refleq_cli_solve");
  CliOptions opt;
  opt.out_dir = out.str();
  std::ostringstream log;

  REQUIRE(cmd_solve(cfg, opt, log) == exit_ok);
  const std::string csv_path = out.str() + "/solution.csv";
  REQUIRE(fs::exists(csv_path));
  {
    std::ifstream in(csv_path);
    const GridFunction u = GridFunction::read_csv(in);
    CHECK(u.half_width() == 15.0);
    CHECK(u.size() == 1201);
  }
  const std::string report = read_file(out.str() + "/report.txt");
  CHECK(report.find("solve.converged = true") != std::string::npos);
  CHECK(report.find("solve.final_residual") != std::string::npos);

  // residual verification of the solution we just wrote
  CHECK(cmd_verify_residual(cfg, opt, csv_path, log) == exit_ok);
  CHECK(fs::exists(out.str() + "/residual.csv"));
  {
    std::ifstream in(out.str() + "/residual.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,residual");
  }

  // ergodic diagnostics default to the last solved remainder
  CHECK(cmd_ergodic(cfg, opt, log) == exit_ok);
  const std::string ergodic_report = read_file(out.str() + "/report.txt");
  CHECK(ergodic_report.find("ergodic.verdict") != std::string::npos);

  // manufactured round trip on the same template
  CHECK(cmd_verify_mms(cfg, opt, "sin(t)", log) == exit_ok);
  const std::string mms_report = read_file(out.str() + "/report.txt");
  CHECK(mms_report.find("mms.recovered_ok = true") != std::string::npos);
}

TEST_CASE("cmd_ergodic with a configured phi expression") {
  std::string text = kFastConfig;
  text += "\nphi = exp(-abs(t))\n";  // appended to [picard]: invalid section
  CHECK_THROWS_AS(parse_config(text, "<cli test>"), ConfigError);

  text = kFastConfig;
  const std::string anchor = "radii = 1,2,4,8";
  text.replace(text.find(anchor), anchor.size(),
               "radii = 1,2,4,8\nphi = exp(-abs(t))");
  const RunConfig cfg = parse_config(text, "<cli test>");
  TempDir out("refleq_cli_ergodic");
  CliOptions opt;
  opt.out_dir = out.str();
  std::ostringstream log;
  CHECK(cmd_ergodic(cfg, opt, log) == exit_ok);
  const std::string report = read_file(out.str() + "/report.txt");
  CHECK(report.find("ergodic.mean.1") != std::string::npos);
}

TEST_CASE("reproduce-paper at a doubled grid step keeps the constants") {
  // coarser grid: the discretization part of the residual grows ~2 orders
  // (interpolation h^2, one-sided stencil h^4/5) but stays under 1e-3,
  // and the check-stage constants are grid-independent
  std::string text = builtin_reference_config();
  const std::string grid_anchor = "h = 0.02";
  text.replace(text.find(grid_anchor), grid_anchor.size(), "h = 0.04");
  const std::string tol_anchor = "lip_decay = 1";
  text.replace(text.find(tol_anchor), tol_anchor.size(),
               "lip_decay = 1\nresidual_tol = 1e-3");
  const fs::path cfg_path =
      fs::temp_directory_path() / "refleq_coarse_reference.cfg";
  {
    std::ofstream out(cfg_path);
    out << text;
  }
  TempDir out("refleq_cli_coarse");
  CliOptions opt;
  opt.out_dir = out.str();
  opt.config_path = cfg_path.string();
  std::ostringstream log;
  CHECK(cmd_reproduce_paper(opt, log) == exit_ok);
  const std::string report = read_file(out.str() + "/report.txt");
  CHECK(report.find("reproduce.verdict = contraction holds") !=
        std::string::npos);
  fs::remove(cfg_path);
}

TEST_CASE("exception mapping follows the exit-code contract") {
  std::ostringstream err;
  int code = -1;
  try {
    throw ConfigError("semantic", true);
  } catch (...) {
    code = report_exception(err);
  }
  CHECK(code == exit_condition_failed);
  try {
    throw ConfigError("io");
  } catch (...) {
    code = report_exception(err);
  }
  CHECK(code == exit_io);
  try {
    throw ParseError("bad", 3, {});
  } catch (...) {
    code = report_exception(err);
  }
  CHECK(code == exit_io);
  try {
    throw QuadratureError("tolerance");
  } catch (...) {
    code = report_exception(err);
  }
  CHECK(code == exit_condition_failed);
}
