#pragma once

#include "deficitlab/density.hpp"
#include "deficitlab/estimate.hpp"
#include "deficitlab/functionals.hpp"
#include "deficitlab/inequalities.hpp"

#include <variant>
#include <vector>

namespace deficit {

/// f(x) = c exp(<a, x>)
struct LogLinear {
  Vec a;
  double c = 1.0;
};

/// Strictly positive samples of f on a uniform 1-d grid; cubic spline in
/// between and constant beyond the ends.
struct GridFn {
  double x0 = 0.0;
  double h = 1.0;
  std::vector<double> values;

  double x1() const { return x0 + h * double(values.size() - 1); }
};

class TestFunction {
 public:
  TestFunction(LogLinear f);
  TestFunction(GridFn f);

  static TestFunction constant(double c, int dim = 1);
  /// Samples fn on [lo, hi] with n nodes.
  template <class F>
  static TestFunction sampled(F&& fn, double lo, double hi, std::size_t n) {
    GridFn g{lo, (hi - lo) / double(n - 1), {}};
    g.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) g.values.push_back(fn(lo + g.h * double(i)));
    return TestFunction(std::move(g));
  }

  int dim() const;
  const LogLinear* log_linear() const noexcept { return std::get_if<LogLinear>(&f_); }
  const GridFn* grid() const noexcept { return std::get_if<GridFn>(&f_); }
  /// Pointwise value (d = 1).
  double operator()(double x) const;

 private:
  std::variant<LogLinear, GridFn> f_;
};

struct HyperSettings {
  std::size_t hermite_order = 128;
  /// Absolute tolerance of the L^q(gamma) quadrature.
  double norm_tol = 1e-12;
  /// Finite-difference step in t, refined by Richardson when the step and
  /// half step disagree by more than `fd_agreement`.
  double fd_step = 1e-4;
  double fd_agreement = 1e-5;
  /// Allowed gap in the derivative checks on top of 3 errors.
  double derivative_tol = 1e-4;
  /// The tilted laws |f|^p gamma are put on a grid of this half width.
  double tilt_halfwidth = 14.0;
  CheckSettings check{};
};

/// q(t) = 1 + (p - 1) e^{2t}
double hyper_q(double p, double t);

/// Mehler formula: P_t f(x) = E f(e^{-t} x + sqrt(1 - e^{-2t}) Y), Y ~ gamma.
TestFunction ou_apply(const TestFunction& f, double t, const HyperSettings& st = {});

/// (int |f|^q dgamma)^{1/q}
Estimate lq_gamma_norm(const TestFunction& f, double q, const HyperSettings& st = {});

/// ||P_t f||_{q(t)} <= ||f||_p
DeficitReport nelson_check(const TestFunction& f, double p, double t, const HyperSettings& st = {});

/// The law with density proportional to |f|^p gamma.
Density tilted_law(const TestFunction& f, double p, const HyperSettings& st = {});

struct GrossDerivative {
  /// -(2(p-1)/p^2) dLSI(X0)
  Estimate analytic;
  /// Difference quotient of log ||P_t f||_{q(t)} at t = 0.
  Estimate finite_difference;
  bool richardson = false;
  /// |analytic - finite_difference| within derivative_tol + 3 errors
  bool agrees = false;
  /// analytic <= 0 within 3 errors
  DeficitReport sign;
};

GrossDerivative gross_derivative_check(const TestFunction& f, double p, const HyperSettings& st = {});

/// theta D(Xh) + (1-theta) D(Yh) - D(sqrt(theta) Xh + sqrt(1-theta) Yh) for
/// the centered tilted laws of f and g.
Estimate entropy_production(const TestFunction& f, const TestFunction& g, double p, double theta,
                            const HyperSettings& st = {});

struct HyperRow {
  double p = 0.0, q = 0.0, t = 0.0, theta = 0.0;
  double lhs_norm = 0.0;  // ||P_t f||_q^{1-theta} ||P_t g||_q^theta
  double rhs_norm = 0.0;  // exp(-2t E/(p p')) ||f||_p^{1-theta} ||g||_p^theta
  double deficit = 0.0;
  double deriv_lhs = 0.0;
  double deriv_rhs = 0.0;
};

struct ImprovedNelson {
  /// d/dt log(||P_t f||_q^{1-theta} ||P_t g||_q^theta) at 0 <= -(2(p-1)/p^2) E
  DeficitReport derivative;
  Estimate production;
  /// Finite-t values, diagnostics only.
  std::vector<HyperRow> rows;
};

ImprovedNelson improved_nelson_check(const TestFunction& f, const TestFunction& g, double p, double theta,
                                     const std::vector<double>& t_grid, const HyperSettings& st = {});

}  // namespace deficit
