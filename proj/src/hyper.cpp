#include "deficitlab/hyper.hpp"

#include "deficitlab/error.hpp"
#include "deficitlab/kernels.hpp"
#include "deficitlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace deficit {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

void validate(const GridFn& g) {
  if (g.values.size() < 4) throw Error(ErrorKind::InvalidFunction, "grid function needs >= 4 samples");
  if (!(g.h > 0.0) || !std::isfinite(g.h) || !std::isfinite(g.x0))
    throw Error(ErrorKind::InvalidFunction, "grid function needs a positive finite spacing");
  bool any = false;
  for (double v : g.values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::InvalidFunction, "grid function values must be >= 0");
    any = any || v > 0.0;
  }
  if (!any) throw Error(ErrorKind::InvalidFunction, "grid function is identically zero");
}

CubicSpline1d spline_of(const GridFn& g) { return CubicSpline1d(g.values, g.x0, g.h); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// log ||f||_q without the 1/q power; returns (log integral, abs error of
// the integral relative to its value)
std::pair<double, double> log_moment(const TestFunction& f, double q, const HyperSettings& st) {
  if (const auto* l = f.log_linear()) return {q * std::log(l->c) + 0.5 * q * q * l->a.squaredNorm(), 0.0};
  const GridFn& g = *f.grid();
  const CubicSpline1d s = spline_of(g);
  const double lo = g.x0, hi = g.x1();
  // integrand f^q phi inside, constant extension outside
  auto integrand = [&](double x) {
    const double v = s(x);
    if (v <= 0.0) return 0.0;
    return std::exp(q * std::log(v) - 0.5 * x * x - kLogSqrt2Pi);
  };
  // one fixed rule per spline cell: the integrand is a polynomial times a
  // Gaussian there, and the spline's own rounding (~1e-12 absolute) would
  // stall adaptive refinement
  const std::size_t cells = g.values.size() - 1;
  const std::size_t stride = std::max<std::size_t>(1, cells / 4096);
  std::vector<double> breaks;
  for (std::size_t k = 0; k < cells; k += stride) breaks.push_back(lo + g.h * double(k));
  breaks.push_back(hi);
  const QuadratureResult r = integrate_1d(integrand, breaks, st.norm_tol, 0);
  const double tails = std::pow(g.values.front(), q) * normal_cdf(lo) + std::pow(g.values.back(), q) * normal_cdf(-hi);
  const double total = r.value + tails;
  if (!(total > 0.0) || !std::isfinite(total)) throw Error(ErrorKind::EstimatorFailed, "L^q(gamma) integral is not finite");
  return {std::log(total), std::max(r.error, 1e-16 * total) / total};
}

// log ||P_t f||_{q(t)} and its error
std::pair<double, double> log_flow_norm(const TestFunction& f, double p, double t, const HyperSettings& st) {
  const double q = hyper_q(p, t);
  const auto [lm, rel] = log_moment(t == 0.0 ? f : ou_apply(f, t, st), q, st);
  return {lm / q, rel / q};
}

struct Derivative {
  Estimate value;
  bool richardson = false;
};

// d/dt log ||P_t f||_{q(t)} at t = 0 from the right: second-order one-sided
// quotients with steps h and h/4, Richardson-combined if they disagree
Derivative flow_derivative(const TestFunction& f, double p, const HyperSettings& st) {
  const double h = st.fd_step;
  const auto v0 = log_flow_norm(f, p, 0.0, st);
  const auto vq = log_flow_norm(f, p, 0.25 * h, st);
  const auto vh = log_flow_norm(f, p, 0.5 * h, st);
  const auto v1 = log_flow_norm(f, p, h, st);
  const auto v2 = log_flow_norm(f, p, 2.0 * h, st);
  auto quotient = [](double a, double b, double c, double step) { return (-3.0 * a + 4.0 * b - c) / (2.0 * step); };
  const double dh = quotient(v0.first, v1.first, v2.first, h);
  const double dh2 = quotient(v0.first, vq.first, vh.first, 0.25 * h);
  // rounding noise of the finer quotient, step h/4
  const double noise =
      std::sqrt(9.0 * v0.second * v0.second + 16.0 * vq.second * vq.second + vh.second * vh.second) / (0.5 * h);
  Derivative out;
  const bool closed = f.log_linear() != nullptr;
  if (std::abs(dh - dh2) > st.fd_agreement) {
    out.richardson = true;
    // second-order error, step ratio 4
    const double r = (16.0 * dh2 - dh) / 15.0;
    out.value = Estimate::quadrature(r, std::abs(r - dh2) + noise);
  } else {
    out.value = closed ? Estimate::quadrature(dh2, std::abs(dh - dh2) + 1e-300)
                       : Estimate::quadrature(dh2, std::abs(dh - dh2) + noise);
  }
  return out;
}

}  // namespace

TestFunction::TestFunction(LogLinear f) : f_(std::move(f)) {
  const auto& l = std::get<LogLinear>(f_);
  if (l.a.size() < 1) throw Error(ErrorKind::InvalidFunction, "log-linear function needs a dimension");
  if (!(l.c > 0.0) || !std::isfinite(l.c) || !l.a.allFinite())
    throw Error(ErrorKind::InvalidFunction, "log-linear function needs finite a and c > 0");
}

TestFunction::TestFunction(GridFn f) : f_(std::move(f)) { validate(std::get<GridFn>(f_)); }

TestFunction TestFunction::constant(double c, int dim) { return TestFunction(LogLinear{Vec::Zero(dim), c}); }

int TestFunction::dim() const { return log_linear() ? int(log_linear()->a.size()) : 1; }

double TestFunction::operator()(double x) const {
  if (const auto* l = log_linear()) return l->c * std::exp(l->a[0] * x);
  const GridFn& g = *grid();
  return spline_of(g)(x);
}

double hyper_q(double p, double t) { return 1.0 + (p - 1.0) * std::exp(2.0 * t); }

TestFunction ou_apply(const TestFunction& f, double t, const HyperSettings& st) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorKind::InvalidTime, "OU time must be >= 0");
  if (t == 0.0) return f;
  if (const auto* l = f.log_linear()) {
    const double grow = 0.5 * l->a.squaredNorm() * -std::expm1(-2.0 * t);
    return TestFunction(LogLinear{l->a * std::exp(-t), l->c * std::exp(grow)});
  }
  const GridFn& g = *f.grid();
  const CubicSpline1d s = spline_of(g);
  std::vector<double> x(g.values.size()), out(g.values.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = g.x0 + g.h * double(i);
  kernels::mehler({s, x, t, gauss_hermite(st.hermite_order), out});
  for (auto& v : out) v = std::max(v, 0.0);
  return TestFunction(GridFn{g.x0, g.h, std::move(out)});
}

Estimate lq_gamma_norm(const TestFunction& f, double q, const HyperSettings& st) {
  if (!(q >= 1.0) || !std::isfinite(q)) throw Error(ErrorKind::InvalidScale, "q must be >= 1");
  const auto [lm, rel] = log_moment(f, q, st);
  const double v = std::exp(lm / q);
  if (f.log_linear()) return Estimate::closed(v);
  return Estimate::quadrature(v, v * rel / q);
}

DeficitReport nelson_check(const TestFunction& f, double p, double t, const HyperSettings& st) {
  if (!(p > 1.0)) throw Error(ErrorKind::InvalidScale, "p must be > 1");
  const double q = hyper_q(p, t);
  const Estimate lhs = lq_gamma_norm(ou_apply(f, t, st), q, st);
  const Estimate rhs = lq_gamma_norm(f, p, st);
  return make_report("nelson", lhs, rhs, {{"p", p}, {"q", q}, {"t", t}});
}

Density tilted_law(const TestFunction& f, double p, const HyperSettings& st) {
  if (const auto* l = f.log_linear()) {
    const int d = int(l->a.size());
    return gaussian(p * l->a, Mat::Identity(d, d));
  }
  const GridFn& g = *f.grid();
  const CubicSpline1d s = spline_of(g);
  const double lo = std::min(g.x0, -st.tilt_halfwidth), hi = std::max(g.x1(), st.tilt_halfwidth);
  const double h = std::max(g.h, (hi - lo) / double((std::size_t(1) << 15) - 1));
  const std::size_t n = std::size_t(std::ceil((hi - lo) / h)) + 1;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lo + h * double(i);
    const double fx = s(x);
    v[i] = fx > 0.0 ? std::exp(p * std::log(fx) - 0.5 * x * x - kLogSqrt2Pi) : 0.0;
  }
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) mass += (i == 0 || i + 1 == n ? 0.5 : 1.0) * h * v[i];
  if (!(mass > 0.0) || !std::isfinite(mass)) throw Error(ErrorKind::InvalidFunction, "|f|^p gamma has no mass");
  for (auto& x : v) x /= mass;
  return GridDensity(1, {lo}, {h}, {n}, std::move(v));
}

GrossDerivative gross_derivative_check(const TestFunction& f, double p, const HyperSettings& st) {
  if (!(p > 1.0)) throw Error(ErrorKind::InvalidScale, "p must be > 1");
  const double c = 2.0 * (p - 1.0) / (p * p);
  GrossDerivative out;
  const Estimate dlsi = lsi_deficit(tilted_law(f, p, st), st.check.estimator);
  out.analytic = linear({{-c, dlsi}});
  const Derivative fd = flow_derivative(f, p, st);
  out.finite_difference = fd.value;
  out.richardson = fd.richardson;
  const double noise = std::hypot(out.analytic.error, out.finite_difference.error);
  out.agrees = std::abs(out.analytic.value - out.finite_difference.value) <= st.derivative_tol + 3.0 * noise;
  out.sign = make_report("gross_sign", out.analytic, Estimate::closed(0.0), {{"p", p}});
  return out;
}

Estimate entropy_production(const TestFunction& f, const TestFunction& g, double p, double theta,
                            const HyperSettings& st) {
  const DeficitReport r = epi_deficit(tilted_law(f, p, st), tilted_law(g, p, st), theta, st.check);
  Estimate e;
  e.value = r.deficit;
  e.method = weakest(r.lhs.method, r.rhs.method);
  e.error = e.method == Method::ClosedForm ? 0.0 : r.err;
  e.finite = std::isfinite(r.deficit);
  return e;
}

ImprovedNelson improved_nelson_check(const TestFunction& f, const TestFunction& g, double p, double theta,
                                     const std::vector<double>& t_grid, const HyperSettings& st) {
  if (!(p > 1.0)) throw Error(ErrorKind::InvalidScale, "p must be > 1");
  if (!(theta >= 0.0 && theta <= 1.0)) throw Error(ErrorKind::InvalidScale, "theta must lie in [0, 1]");
  const double tb = 1.0 - theta;
  const double c = 2.0 * (p - 1.0) / (p * p);
  ImprovedNelson out;
  out.production = entropy_production(f, g, p, theta, st);
  const Derivative df = flow_derivative(f, p, st), dg = flow_derivative(g, p, st);
  Estimate lhs = linear({{tb, df.value}, {theta, dg.value}});
  const Estimate rhs = linear({{-c, out.production}});
  DeficitReport r = make_report("improved_nelson", lhs, rhs, {{"p", p}, {"theta", theta}});
  // the finite-difference tolerance is part of the error budget
  reassess(r, r.err + st.derivative_tol / 3.0);
  out.derivative = r;

  const double lf = log_flow_norm(f, p, 0.0, st).first, lg = log_flow_norm(g, p, 0.0, st).first;
  for (double t : t_grid) {
    HyperRow row;
    row.p = p;
    row.q = hyper_q(p, t);
    row.t = t;
    row.theta = theta;
    const double a = log_flow_norm(f, p, t, st).first, b = log_flow_norm(g, p, t, st).first;
    row.lhs_norm = std::exp(tb * a + theta * b);
    row.rhs_norm = std::exp(-c * t * out.production.value + tb * lf + theta * lg);
    row.deficit = row.rhs_norm - row.lhs_norm;
    row.deriv_lhs = lhs.value;
    row.deriv_rhs = rhs.value;
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace deficit
