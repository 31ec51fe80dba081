#pragma once

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace deficit {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
};

/// Adaptive Gauss-Kronrod (G30/K61) over [breaks.front(), breaks.back()],
/// split at every interior break point. `converged` is false when the
/// summed Kronrod error estimate exceeds `abs_tol`.
template <class F>
QuadratureResult integrate_1d(F&& f, std::span<const double> breaks, double abs_tol, unsigned max_depth = 18) {
  using boost::math::quadrature::gauss_kronrod;
  QuadratureResult out;
  const double panels = double(std::max<std::size_t>(breaks.size(), 2) - 1);
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    if (!(breaks[k + 1] > breaks[k])) continue;
    // one unrefined pass for the L1 norm; the relative tolerance then aims
    // at abs_tol / 100 over all panels, never tighter than 1e-13
    double err = 0.0, l1 = 0.0;
    const double first = gauss_kronrod<double, 61>::integrate(f, breaks[k], breaks[k + 1], 0, 0.0, &err, &l1);
    const double rel = l1 > 0.0 ? std::max(1e-13, 0.01 * abs_tol / (panels * l1)) : 1e-13;
    if (err <= rel * l1) {
      out.value += first;
    } else {
      out.value += gauss_kronrod<double, 61>::integrate(f, breaks[k], breaks[k + 1], max_depth, rel, &err);
    }
    out.error += err;
  }
  out.converged = out.error <= abs_tol;
  return out;
}

/// Gauss-Hermite rule for the standard Gaussian measure: sum_i w_i g(x_i)
/// approximates the integral of g against N(0, 1). Weights sum to 1.
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const GaussHermite& gauss_hermite(std::size_t order);

/// Cubic B-spline through uniformly spaced samples, constant beyond the
/// sampled interval.
class CubicSpline1d {
 public:
  CubicSpline1d(std::vector<double> values, double x0, double h);

  double operator()(double x) const {
    if (x <= x0_) return values_.front();
    if (x >= x1_) return values_.back();
    return spline_(x);
  }
  double prime(double x) const {
    if (x <= x0_ || x >= x1_) return 0.0;
    return spline_.prime(x);
  }
  double x0() const { return x0_; }
  double x1() const { return x1_; }

 private:
  std::vector<double> values_;
  double x0_, x1_;
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline_;
};

/// Composite trapezoid on a 2-d box, refined by halving the spacing until
/// successive values of every output agree to `abs_tol`. The integrand
/// writes `outputs` values for a point.
struct TensorResult {
  std::vector<double> values;
  std::vector<double> errors;
  bool converged = true;
};

TensorResult integrate_box_2d(const std::function<void(double, double, double*)>& f, std::size_t outputs,
                              const double lo[2], const double hi[2], double h0, double abs_tol,
                              std::size_t max_points_per_axis);

}  // namespace deficit
