#ifndef REFLEQ_TESTS_ORACLES_HPP
#define REFLEQ_TESTS_ORACLES_HPP

// Independent reference integrators used to compute expected test values.
// Composite 20-point Gauss-Legendre, deliberately unrelated to the Simpson
// machinery under test; callers choose panels so integrands are smooth
// within panels (split at |t| kinks).

#include <cmath>
#include <functional>

namespace oracles {

inline double gl_panel(const std::function<double(double)>& f, double a,
                       double b) {
  static const double X[10] = {
      0.0765265211334973, 0.2277858511416451, 0.3737060887154195,
      0.5108670019508271, 0.6360536807265150, 0.7463319064601508,
      0.8391169718222188, 0.9122344282513259, 0.9639719272779138,
      0.9931285991850949};
  static const double W[10] = {
      0.1527533871307258, 0.1491729864726037, 0.1420961093183820,
      0.1316886384491766, 0.1181945319615184, 0.1019301198172404,
      0.0832767415767048, 0.0626720483341091, 0.0406014298003869,
      0.0176140071391521};
  const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
  double s = 0;
  for (int i = 0; i < 10; ++i)
    s += W[i] * (f(c + hw * X[i]) + f(c - hw * X[i]));
  return s * hw;
}

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, int panels) {
  double s = 0;
  const double w = (b - a) / panels;
  for (int i = 0; i < panels; ++i)
    s += gl_panel(f, a + i * w, a + (i + 1) * w);
  return s;
}

// symmetric interval split at 0 (|t|-kinks land on a panel boundary)
inline double integrate_sym(const std::function<double(double)>& f, double r,
                            int panels_per_side) {
  return integrate(f, -r, 0, panels_per_side) +
         integrate(f, 0, r, panels_per_side);
}

inline double bessel_i0(double x) {
  double term = 1, sum = 1;
  for (int k = 1; k < 40; ++k) {
    term *= (x * x / 4.0) / (static_cast<double>(k) * k);
    sum += term;
  }
  return sum;
}

}  // namespace oracles

#endif  // REFLEQ_TESTS_ORACLES_HPP
