#include "refleq/funcspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace refleq {

long GridSpec::node_count() const {
  return 2 * std::lround(half_width / step) + 1;
}

void GridSpec::validate() const {
  if (!(half_width > 0) || !(step > 0))
    throw GridError("grid: half_width and step must be > 0");
  const double ratio = half_width / step;
  if (std::fabs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
    throw GridError("grid: half_width must be an integer multiple of step");
}

GridFunction::GridFunction(GridSpec grid, std::vector<double> samples)
    : grid_(grid), samples_(std::move(samples)) {
  grid_.validate();
  n_ = std::lround(grid_.half_width / grid_.step);
  if (static_cast<long>(samples_.size()) != 2 * n_ + 1)
    throw GridError("grid function: expected " + std::to_string(2 * n_ + 1) +
                    " samples, got " + std::to_string(samples_.size()));
  for (double v : samples_)
    if (!std::isfinite(v))
      throw GridError("grid function: non-finite sample");
}

GridFunction GridFunction::constant(GridSpec grid, double value) {
  grid.validate();
  return GridFunction(grid,
                      std::vector<double>(grid.node_count(), value));
}

GridFunction GridFunction::sample(GridSpec grid,
                                  const std::function<double(double)>& f) {
  grid.validate();
  const long n = std::lround(grid.half_width / grid.step);
  std::vector<double> samples(2 * n + 1);
  for (long i = 0; i <= 2 * n; ++i)
    samples[i] = f((i - n) * grid.step);
  return GridFunction(grid, std::move(samples));
}

double GridFunction::eval_at(double t) const {
  if (samples_.empty()) throw GridError("eval_at on empty grid function");
  const double x = (t + grid_.half_width) / grid_.step;
  if (x <= 0) return samples_.front();
  const long last = static_cast<long>(samples_.size()) - 1;
  if (x >= static_cast<double>(last)) return samples_.back();
  const long i = static_cast<long>(x);
  const double frac = x - static_cast<double>(i);
  return samples_[i] + frac * (samples_[i + 1] - samples_[i]);
}

GridFunction GridFunction::reflect() const {
  std::vector<double> rev(samples_.rbegin(), samples_.rend());
  return GridFunction(grid_, std::move(rev));
}

double sup_distance(const GridFunction& u, const GridFunction& v) {
  if (u.grid().half_width != v.grid().half_width ||
      u.grid().step != v.grid().step || u.size() != v.size())
    throw GridError("sup_distance: grid mismatch");
  double d = 0;
  for (long i = 0; i < u.size(); ++i)
    d = std::max(d, std::fabs(u[i] - v[i]));
  return d;
}

void GridFunction::write_csv(std::ostream& out) const {
  out << "t,u\n";
  char buf[80];
  for (long i = 0; i < size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", node(i), samples_[i]);
    out << buf;
  }
}

GridFunction GridFunction::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,", 0) != 0)
    throw GridError("solution csv: missing 't,u' header");
  std::vector<double> ts, us;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw GridError("solution csv: malformed row '" + line + "'");
    ts.push_back(std::stod(line.substr(0, comma)));
    us.push_back(std::stod(line.substr(comma + 1)));
  }
  if (ts.size() < 3 || ts.size() % 2 == 0)
    throw GridError("solution csv: expected an odd number of rows >= 3");
  const double step = ts[1] - ts[0];
  const double half = -ts.front();
  if (std::fabs(ts.back() - half) > 1e-9 * std::max(1.0, half))
    throw GridError("solution csv: grid not symmetric about 0");
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (std::fabs(ts[i] - ts[i - 1] - step) > 1e-9 * std::max(1.0, step))
      throw GridError("solution csv: non-uniform grid");
  return GridFunction(GridSpec{half, step}, std::move(us));
}

}  // namespace refleq
