#include "refleq/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace refleq {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string strip_quotes(std::string v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                        (v.front() == '\'' && v.back() == '\'')))
    return v.substr(1, v.size() - 2);
  return v;
}

struct RawConfig {
  // section -> key -> (value, line)
  std::map<std::string, std::map<std::string, std::pair<std::string, int>>> kv;
  std::string origin;

  std::optional<std::string> get(const std::string& sec,
                                 const std::string& key) const {
    auto s = kv.find(sec);
    if (s == kv.end()) return {};
    auto k = s->second.find(key);
    if (k == s->second.end()) return {};
    return k->second.first;
  }
};

RawConfig tokenize(std::string_view text, const std::string& origin) {
  static const std::set<std::string> known_sections = {
      "problem", "grid", "quad", "picard", "check", "output"};
  static const std::map<std::string, std::set<std::string>> known_keys = {
      {"problem", {"a", "b", "f", "h", "K", "beta", "rho", "p", "k_decay",
                   "k_bound"}},
      {"grid", {"T", "h"}},
      {"quad", {"abs_tol", "max_refinements", "initial_panels"}},
      {"picard", {"tol", "max_iter", "x0"}},
      {"check",
       {"theorem", "p", "z_grid", "radii", "lf", "lh", "lf_const", "lh_const",
        "lip_decay", "mms_epsilon", "residual_tol", "residual_window", "phi"}},
      {"output", {"csv", "residual_csv", "report"}},
  };

  RawConfig raw;
  raw.origin = origin;
  std::string section;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(line_no) +
                          ": malformed section header '" + t + "'");
      section = trim(t.substr(1, t.size() - 2));
      if (!known_sections.count(section))
        throw ConfigError(origin + ":" + std::to_string(line_no) +
                          ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got '" + t + "'");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": key outside of any [section]");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = strip_quotes(trim(t.substr(eq + 1)));
    if (!known_keys.at(section).count(key))
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": unknown key '" + key + "' in [" + section + "]");
    if (value.empty()) continue;  // blank value == absent
    if (!raw.kv[section].emplace(key, std::make_pair(value, line_no)).second)
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": duplicate key '" + key + "' in [" + section + "]");
  }
  return raw;
}

double scalar(const RawConfig& raw, const std::string& sec,
              const std::string& key, const std::string& text) {
  try {
    Expression e = Expression::parse(text);
    if (!e.free_vars().empty())
      throw ConfigError(raw.origin + ": [" + sec + "] " + key +
                        ": expected a numeric value, got free variable '" +
                        e.free_vars().front() + "'");
    return e.eval(std::span<const double>{});
  } catch (const ParseError& pe) {
    throw ConfigError(raw.origin + ": [" + sec + "] " + key + ": " +
                      pe.what());
  }
}

Expression expr_slot(const RawConfig& raw, const std::string& sec,
                     const std::string& key, const std::string& text,
                     const std::set<std::string>& allowed) {
  Expression e = [&] {
    try {
      return Expression::parse(text);
    } catch (const ParseError& pe) {
      throw ConfigError(raw.origin + ": [" + sec + "] " + key + ": " +
                        pe.what());
    }
  }();
  for (const auto& v : e.free_vars())
    if (!allowed.count(v)) {
      std::ostringstream msg;
      msg << raw.origin << ": [" << sec << "] " << key << ": variable '" << v
          << "' not allowed here (allowed:";
      for (const auto& a : allowed) msg << " " << a;
      msg << ")";
      throw ConfigError(msg.str(), true);
    }
  return e;
}

std::vector<double> number_list(const RawConfig& raw, const std::string& sec,
                                const std::string& key,
                                const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    out.push_back(scalar(raw, sec, key, t));
  }
  if (out.empty())
    throw ConfigError(raw.origin + ": [" + sec + "] " + key + ": empty list");
  for (std::size_t i = 1; i < out.size(); ++i)
    if (!(out[i] > out[i - 1]))
      throw ConfigError(raw.origin + ": [" + sec + "] " + key +
                            ": values must be strictly increasing",
                        true);
  return out;
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& origin) {
  const RawConfig raw = tokenize(text, origin);

  // required keys first, reported all at once
  std::vector<std::string> missing;
  for (const char* k : {"a", "b", "f"})
    if (!raw.get("problem", k)) missing.push_back(std::string("problem.") + k);
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << origin << ": missing required key(s):";
    for (const auto& m : missing) msg << " " << m;
    throw ConfigError(msg.str());
  }

  RunConfig cfg;
  const std::set<std::string> fh_vars = {"t", "x1", "x2", "p"};
  const std::set<std::string> k_vars = {"s", "p"};
  const std::set<std::string> t_vars = {"t", "p"};

  cfg.a = scalar(raw, "problem", "a", *raw.get("problem", "a"));
  cfg.b = scalar(raw, "problem", "b", *raw.get("problem", "b"));
  if (auto v = raw.get("problem", "p"))
    cfg.p_delay = scalar(raw, "problem", "p", *v);
  cfg.f = expr_slot(raw, "problem", "f", *raw.get("problem", "f"), fh_vars);
  if (auto v = raw.get("problem", "h")) {
    cfg.h = expr_slot(raw, "problem", "h", *v, fh_vars);
    cfg.has_h = true;
  }
  if (auto v = raw.get("problem", "K"))
    cfg.kernel_k = expr_slot(raw, "problem", "K", *v, k_vars);
  if (auto v = raw.get("problem", "beta"))
    cfg.beta = expr_slot(raw, "problem", "beta", *v, t_vars);
  if (auto v = raw.get("problem", "rho"))
    cfg.rho = expr_slot(raw, "problem", "rho", *v, t_vars);
  if (auto v = raw.get("problem", "k_decay"))
    cfg.k_decay = scalar(raw, "problem", "k_decay", *v);
  if (auto v = raw.get("problem", "k_bound"))
    cfg.k_bound = scalar(raw, "problem", "k_bound", *v);

  if (auto v = raw.get("grid", "T"))
    cfg.grid_half_width = scalar(raw, "grid", "T", *v);
  if (auto v = raw.get("grid", "h"))
    cfg.grid_step = scalar(raw, "grid", "h", *v);

  if (auto v = raw.get("quad", "abs_tol"))
    cfg.quad.abs_tol = scalar(raw, "quad", "abs_tol", *v);
  if (auto v = raw.get("quad", "max_refinements"))
    cfg.quad.max_refinements =
        static_cast<int>(scalar(raw, "quad", "max_refinements", *v));
  if (auto v = raw.get("quad", "initial_panels"))
    cfg.quad.initial_panels =
        static_cast<int>(scalar(raw, "quad", "initial_panels", *v));

  if (auto v = raw.get("picard", "tol"))
    cfg.picard_tol = scalar(raw, "picard", "tol", *v);
  if (auto v = raw.get("picard", "max_iter"))
    cfg.picard_max_iter = static_cast<int>(scalar(raw, "picard", "max_iter", *v));
  if (auto v = raw.get("picard", "x0"))
    cfg.x0_value = scalar(raw, "picard", "x0", *v);

  if (auto v = raw.get("check", "theorem")) {
    cfg.theorem = *v;
    if (cfg.theorem != "auto" && cfg.theorem != "constant" && cfg.theorem != "lp")
      throw ConfigError(origin +
                        ": [check] theorem must be auto, constant, or lp");
  }
  if (auto v = raw.get("check", "p"))
    cfg.check_p = scalar(raw, "check", "p", *v);
  if (auto v = raw.get("check", "z_grid"))
    cfg.z_grid = number_list(raw, "check", "z_grid", *v);
  if (auto v = raw.get("check", "radii"))
    cfg.radii = number_list(raw, "check", "radii", *v);
  if (auto v = raw.get("check", "lf"))
    cfg.lf_expr = expr_slot(raw, "check", "lf", *v, t_vars);
  if (auto v = raw.get("check", "lh"))
    cfg.lh_expr = expr_slot(raw, "check", "lh", *v, t_vars);
  if (auto v = raw.get("check", "lf_const"))
    cfg.lf_const = scalar(raw, "check", "lf_const", *v);
  if (auto v = raw.get("check", "lh_const"))
    cfg.lh_const = scalar(raw, "check", "lh_const", *v);
  if (auto v = raw.get("check", "lip_decay"))
    cfg.lip_decay = scalar(raw, "check", "lip_decay", *v);
  if (auto v = raw.get("check", "mms_epsilon"))
    cfg.mms_epsilon = scalar(raw, "check", "mms_epsilon", *v);
  if (auto v = raw.get("check", "residual_tol"))
    cfg.residual_tol = scalar(raw, "check", "residual_tol", *v);
  if (auto v = raw.get("check", "residual_window"))
    cfg.residual_window = scalar(raw, "check", "residual_window", *v);
  if (auto v = raw.get("check", "phi"))
    cfg.phi_expr = expr_slot(raw, "check", "phi", *v, t_vars);

  if (auto v = raw.get("output", "csv")) cfg.csv_name = *v;
  if (auto v = raw.get("output", "residual_csv")) cfg.residual_csv_name = *v;
  if (auto v = raw.get("output", "report")) cfg.report_name = *v;

  // invariants
  if (!(cfg.a * cfg.a - cfg.b * cfg.b > 0))
    throw ConfigError(origin + ": problem: a^2 - b^2 must be positive (a=" +
                          std::to_string(cfg.a) + ", b=" + std::to_string(cfg.b) +
                          ")",
                      true);
  const bool kernel_active = !cfg.kernel_k.is_literal_zero();
  if (kernel_active && !cfg.has_h)
    throw ConfigError(origin + ": problem.h is required when K is nonzero",
                      true);
  if (kernel_active && !(cfg.k_decay > 0))
    throw ConfigError(origin + ": problem.k_decay must be positive", true);
  GridSpec{cfg.grid_half_width, cfg.grid_step}.validate();
  cfg.quad.validate();
  if (!(cfg.picard_tol > 0))
    throw ConfigError(origin + ": picard.tol must be positive", true);
  if (cfg.picard_max_iter < 1)
    throw ConfigError(origin + ": picard.max_iter must be >= 1", true);
  if (!(cfg.check_p > 1))
    throw ConfigError(origin + ": check.p must be > 1", true);
  if (!(cfg.lip_decay > 0))
    throw ConfigError(origin + ": check.lip_decay must be positive", true);
  for (double z : cfg.z_grid)
    if (z < 0) throw ConfigError(origin + ": check.z_grid must be >= 0", true);
  if (cfg.radii.front() <= 0)
    throw ConfigError(origin + ": check.radii must be positive", true);

  // rho > 0 and beta monotone, sampled; build_problem re-checks beta
  {
    static const std::string kT[] = {"t"};
    CompiledExpr rho_fn(cfg.rho, kT, {{"p", cfg.p_delay}});
    for (double t = -50; t <= 50; t += 0.25)
      if (!(rho_fn(t) > 0))
        throw ConfigError(origin + ": problem.rho must be positive (rho(" +
                              std::to_string(t) + ") <= 0)",
                          true);
    CompiledExpr beta_fn(cfg.beta, kT, {{"p", cfg.p_delay}});
    double prev = beta_fn(-50.0);
    for (double t = -50.0 + 0.125; t <= 50.0; t += 0.125) {
      const double bt = beta_fn(t);
      if (!(bt > prev))
        throw ConfigError(origin +
                              ": problem.beta: not strictly increasing "
                              "(sampled at t=" +
                              std::to_string(t) + ")",
                          true);
      prev = bt;
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream body;
  body << in.rdbuf();
  return parse_config(body.str(), path);
}

ProblemSpec build_problem(const RunConfig& cfg) {
  static const std::string kFh[] = {"t", "x1", "x2"};

  ProblemSpec ps;
  ps.a = cfg.a;
  ps.b = cfg.b;
  ps.p_delay = cfg.p_delay;
  ps.beta = cfg.beta;
  ps.mu.rho = cfg.rho;
  ps.mu.description = cfg.rho.source();
  ps.kernel = KernelSpec{cfg.kernel_k, cfg.k_decay, cfg.k_bound, cfg.p_delay};

  CompiledExpr f_fn(cfg.f, kFh, {{"p", cfg.p_delay}});
  ps.f = [f_fn](double t, double x1, double x2) { return f_fn(t, x1, x2); };
  CompiledExpr h_fn(cfg.h, kFh, {{"p", cfg.p_delay}});
  ps.h = [h_fn](double t, double x1, double x2) { return h_fn(t, x1, x2); };

  ps.f_lipschitz = cfg.lf_const;
  ps.h_lipschitz = cfg.lh_const;
  ps.validate();
  return ps;
}

void Report::set(const std::string& key, const std::string& value) {
  entries_.emplace_back(key, value);
}
void Report::set(const std::string& key, const char* value) {
  entries_.emplace_back(key, std::string(value));
}
void Report::set(const std::string& key, double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  entries_.emplace_back(key, buf);
}
void Report::set(const std::string& key, bool value) {
  entries_.emplace_back(key, value ? "true" : "false");
}
void Report::set(const std::string& key, long value) {
  entries_.emplace_back(key, std::to_string(value));
}

std::string Report::str() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

void Report::write_file(const std::string& path) const {
  const auto dir = std::filesystem::path(path).parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write report file '" + path + "'");
  out << str();
}

}  // namespace refleq
