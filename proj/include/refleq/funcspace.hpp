#ifndef REFLEQ_FUNCSPACE_HPP
#define REFLEQ_FUNCSPACE_HPP

#include <functional>
#include <iosfwd>
#include <vector>

#include "refleq/errors.hpp"

namespace refleq {

/// Symmetric uniform grid [-T, T] with step h, T/h integral.
struct GridSpec {
  double half_width = 0;
  double step = 0;

  long node_count() const;  // 2N+1
  void validate() const;
};

/// Candidate/solution function on the real line: uniform samples on
/// [-T, T], linear interpolation between nodes, clamp extension outside
/// (the value freezes at u(+-T)). Immutable after construction.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(GridSpec grid, std::vector<double> samples);

  static GridFunction constant(GridSpec grid, double value);
  static GridFunction sample(GridSpec grid,
                             const std::function<double(double)>& f);

  bool empty() const { return samples_.empty(); }
  const GridSpec& grid() const { return grid_; }
  double half_width() const { return grid_.half_width; }
  double step() const { return grid_.step; }
  long size() const { return static_cast<long>(samples_.size()); }
  double node(long i) const { return (i - n_) * grid_.step; }
  double operator[](long i) const { return samples_[i]; }
  const std::vector<double>& samples() const { return samples_; }

  /// Total: linear interpolation inside [-T, T], clamped outside.
  double eval_at(double t) const;

  /// v(t) = u(-t), samplewise reversal on the same grid.
  GridFunction reflect() const;

  /// Sample at the reflected node: u(-t_i).
  double at_reflected(long i) const { return samples_[2 * n_ - i]; }

  void write_csv(std::ostream& out) const;
  static GridFunction read_csv(std::istream& in);

 private:
  GridSpec grid_;
  long n_ = 0;  // samples_.size() == 2n_+1
  std::vector<double> samples_;
};

/// max_i |u_i - v_i|; throws GridError on mismatched grids.
double sup_distance(const GridFunction& u, const GridFunction& v);

}  // namespace refleq

#endif  // REFLEQ_FUNCSPACE_HPP
