#include "deficitlab/transport.hpp"

#include "deficitlab/error.hpp"
#include "deficitlab/kernels.hpp"
#include "deficitlab/quadrature.hpp"
#include "deficitlab/seed.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace deficit {

std::string_view to_string(W2Method m) {
  switch (m) {
    case W2Method::GaussianClosedForm: return "gaussian_closed_form";
    case W2Method::Quantile1d: return "quantile_1d";
    case W2Method::EntropicOt: return "entropic_ot";
  }
  return "unknown";
}

Estimate W2Estimate::distance() const {
  if (method == W2Method::GaussianClosedForm) return Estimate::closed(value);
  if (method == W2Method::Quantile1d) return Estimate::quadrature(value, error);
  return Estimate::monte_carlo(value, error);
}

Estimate W2Estimate::squared() const {
  return transform(distance(), [](double w) { return w * w; }, [](double w) { return 2.0 * w; });
}

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

// Gaussian quantile of the lower tail probability p, or minus the quantile
// of the upper tail probability q (whichever is smaller and so accurate).
double gaussian_transport(double p, double q) {
  if (p <= q) return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
  return kSqrt2 * boost::math::erfc_inv(2.0 * q);
}

W2Estimate quantile_mixture(const GaussianMixture& m, double tol) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::vector<double> breaks;
  for (const auto& c : m.components()) {
    const double sd = std::sqrt(c.cov(0, 0));
    lo = std::min(lo, c.mean[0] - 14.0 * sd);
    hi = std::max(hi, c.mean[0] + 14.0 * sd);
    breaks.push_back(c.mean[0]);
  }
  breaks.push_back(lo);
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  auto integrand = [&](double x) {
    const double f = std::exp(m.log_density(std::span<const double>(&x, 1)));
    if (f == 0.0) return 0.0;
    double p = 0.0, q = 0.0;
    for (const auto& c : m.components()) {
      const double z = (x - c.mean[0]) / std::sqrt(c.cov(0, 0));
      p += c.weight * 0.5 * std::erfc(-z / kSqrt2);
      q += c.weight * 0.5 * std::erfc(z / kSqrt2);
    }
    if (!(p > 0.0) || !(q > 0.0)) return 0.0;
    const double t = x - gaussian_transport(p, q);
    return t * t * f;
  };
  QuadratureResult r = integrate_1d(integrand, breaks, tol);
  // mass beyond 14 sd: bounded by the Gaussian tail second moment with a
  // generous transport length
  double tail = 0.0;
  for (const auto& c : m.components()) {
    const double sd = std::sqrt(c.cov(0, 0));
    const double reach = 14.0 * sd + std::abs(c.mean[0]) + 40.0;
    tail += c.weight * std::erfc(14.0 / kSqrt2) * reach * reach;
  }
  const Estimate sq = Estimate::quadrature(std::max(0.0, r.value), r.error + tail);
  const double w = std::sqrt(sq.value);
  return {w, w > 0.0 ? sq.error / (2.0 * w) : std::sqrt(sq.error), W2Method::Quantile1d};
}

double quantile_grid_sum(const GridDensity& g, std::size_t stride) {
  const auto& v = g.values();
  const std::size_t n = (g.counts()[0] - 1) / stride + 1;
  const double h = g.spacing()[0] * double(stride);
  std::vector<double> lower(n, 0.0), upper(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) lower[i] = lower[i - 1] + 0.5 * h * (v[(i - 1) * stride] + v[i * stride]);
  for (std::size_t i = n - 1; i-- > 0;) upper[i] = upper[i + 1] + 0.5 * h * (v[i * stride] + v[(i + 1) * stride]);
  const double mass = lower[n - 1];
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = v[i * stride];
    const double p = lower[i] / mass, q = upper[i] / mass;
    if (f == 0.0 || !(p > 0.0) || !(q > 0.0)) continue;
    const double x = g.coord(0, i * stride);
    const double t = x - gaussian_transport(p, q);
    acc += ((i == 0 || i + 1 == n) ? 0.5 : 1.0) * h * f * t * t;
  }
  return acc / mass;
}

W2Estimate quantile_grid(const GridDensity& g) {
  const double a = quantile_grid_sum(g, 1), b = quantile_grid_sum(g, 2);
  const double slack = g.renormalization() + g.truncated_mass();
  const Estimate sq = Estimate::quadrature(a, std::abs(a - b) + slack * (1.0 + a));
  const double w = std::sqrt(std::max(0.0, sq.value));
  return {w, w > 0.0 ? sq.error / (2.0 * w) : std::sqrt(sq.error), W2Method::Quantile1d};
}

// ---------------------------------------------------------------------------
// Sinkhorn

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Sinkhorn {
 public:
  Sinkhorn(const RowMat& x, const RowMat& y)
      : x_(x.data(), std::size_t(x.size())),
        y_(y.data(), std::size_t(y.size())),
        d_(int(x.cols())),
        n_(std::size_t(x.rows())),
        m_(std::size_t(y.rows())),
        f_(n_, 0.0), g_(m_, 0.0), p_(n_, 0.0), q_(m_, 0.0),
        log_a_(n_, -std::log(double(n_))),
        log_b_(m_, -std::log(double(m_))) {}

  // Debiased divergence at eps, warm-started from the current potentials.
  // The cross term is a fixed point of the alternating update, solved with
  // Anderson mixing (a few poorly coupled blocks of points otherwise give
  // modes that decay over thousands of sweeps). The self terms use the
  // averaged symmetric update, which settles in a few steps.
  double divergence(double eps, std::size_t max_iter, double tol) {
    std::vector<double> fn(n_), gn(m_), pn(n_), qn(m_);
    solve_cross(eps, max_iter, tol);
    for (std::size_t it = 0; it < max_iter; ++it) {
      softmin(x_, x_, p_, log_a_, eps, pn);
      double change = relax(p_, pn, 0.5);
      softmin(y_, y_, q_, log_b_, eps, qn);
      change = std::max(change, relax(q_, qn, 0.5));
      if (change < tol * eps) break;
    }
    softmin(x_, y_, g_, log_b_, eps, fn);
    softmin(y_, x_, f_, log_a_, eps, gn);
    softmin(x_, x_, p_, log_a_, eps, pn);
    softmin(y_, y_, q_, log_b_, eps, qn);
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += (fn[i] - pn[i]) / double(n_);
    for (std::size_t j = 0; j < m_; ++j) s += (gn[j] - qn[j]) / double(m_);
    return s;
  }

 private:
  void softmin(std::span<const double> a, std::span<const double> b, const std::vector<double>& pot,
               const std::vector<double>& logw, double eps, std::vector<double>& out) const {
    kernels::softmin({a, b, d_, pot, logw, eps, out});
  }

  static constexpr std::size_t kMemory = 6;

  // One alternating sweep from u = (f, g); returns G(u).
  void sweep(const Eigen::VectorXd& u, double eps, Eigen::VectorXd& out) {
    std::vector<double> f(u.data(), u.data() + n_), g(u.data() + n_, u.data() + n_ + m_), fn(n_), gn(m_);
    softmin(x_, y_, g, log_b_, eps, fn);
    softmin(y_, x_, fn, log_a_, eps, gn);
    out.resize(long(n_ + m_));
    std::copy(fn.begin(), fn.end(), out.data());
    std::copy(gn.begin(), gn.end(), out.data() + n_);
  }

  void solve_cross(double eps, std::size_t max_iter, double tol) {
    const long k = long(n_ + m_);
    Eigen::VectorXd u(k), gu, r, u_prev, r_prev;
    std::copy(f_.begin(), f_.end(), u.data());
    std::copy(g_.begin(), g_.end(), u.data() + n_);
    Eigen::MatrixXd du(k, 0), dr(k, 0);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < max_iter; ++it) {
      sweep(u, eps, gu);
      r = gu - u;
      // the residual is only defined up to the (f + c, g - c) symmetry
      const double shift = 0.5 * (r.head(long(n_)).mean() - r.tail(long(m_)).mean());
      r.head(long(n_)).array() -= shift;
      r.tail(long(m_)).array() += shift;
      const double change = r.lpNorm<Eigen::Infinity>();
      if (change < tol * eps) {
        u = gu;
        break;
      }
      if (change > 10.0 * best) {
        // mixing went astray: drop the history and take a plain step
        du.resize(k, 0);
        dr.resize(k, 0);
        u_prev.resize(0);
        best = change;
        u = gu;
        continue;
      }
      best = std::min(best, change);
      if (u_prev.size() == k) {
        if (du.cols() == long(kMemory)) {
          du = du.rightCols(long(kMemory) - 1).eval();
          dr = dr.rightCols(long(kMemory) - 1).eval();
        }
        du.conservativeResize(k, du.cols() + 1);
        dr.conservativeResize(k, dr.cols() + 1);
        du.col(du.cols() - 1) = u - u_prev;
        dr.col(dr.cols() - 1) = r - r_prev;
      }
      u_prev = u;
      r_prev = r;
      if (dr.cols() == 0) {
        u = gu;
        continue;
      }
      const Eigen::VectorXd gamma = dr.colPivHouseholderQr().solve(r);
      u = u + r - (du + dr) * gamma;
    }
    std::copy(u.data(), u.data() + n_, f_.begin());
    std::copy(u.data() + n_, u.data() + k, g_.begin());
  }


  static double relax(std::vector<double>& cur, const std::vector<double>& next, double omega) {
    double change = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const double v = (1.0 - omega) * cur[i] + omega * next[i];
      change = std::max(change, std::abs(v - cur[i]));
      cur[i] = v;
    }
    return change;
  }

  std::span<const double> x_, y_;
  int d_;
  std::size_t n_, m_;
  std::vector<double> f_, g_, p_, q_;
  std::vector<double> log_a_, log_b_;
};

double median_squared_distance(const RowMat& x, const RowMat& y) {
  const long k0 = std::min<long>(x.rows(), 128), k1 = std::min<long>(y.rows(), 128);
  std::vector<double> d2;
  d2.reserve(std::size_t(k0 * k1));
  for (long i = 0; i < k0; ++i)
    for (long j = 0; j < k1; ++j) d2.push_back((x.row(i) - y.row(j)).squaredNorm());
  auto mid = d2.begin() + long(d2.size() / 2);
  std::nth_element(d2.begin(), mid, d2.end());
  return *mid;
}

// Least-squares intercept of S = a + c eps^2.
double extrapolate(const std::vector<double>& eps, const std::vector<double>& s) {
  const std::size_t k = eps.size();
  if (k == 1) return s[0];
  double ub = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    ub += eps[i] * eps[i] / double(k);
    sb += s[i] / double(k);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double u = eps[i] * eps[i] - ub;
    num += u * (s[i] - sb);
    den += u * u;
  }
  const double c = den > 0.0 ? num / den : 0.0;
  return sb - c * ub;
}

}  // namespace

double sinkhorn_divergence(const Mat& x, const Mat& y, double eps, std::size_t max_iterations, double tolerance) {
  if (x.cols() != y.cols()) throw Error(ErrorKind::InvalidPair, "point sets have different dimensions");
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidScale, "regularization must be positive");
  const RowMat xr = x, yr = y;
  Sinkhorn sk(xr, yr);
  // anneal from a coarse level for a usable warm start
  const double med = median_squared_distance(xr, yr);
  for (double e = std::max(eps, med); e > eps; e *= 0.5) sk.divergence(e, max_iterations, tolerance);
  return sk.divergence(eps, max_iterations, tolerance);
}

W2Estimate w2_entropic(const Density& x, const EntropicOtSettings& st) {
  if (st.points < 2 || st.repetitions < 2)
    throw Error(ErrorKind::InvalidConfig, "entropic OT needs >= 2 points and >= 2 repetitions");
  if (st.eps_factors.empty()) throw Error(ErrorKind::InvalidConfig, "empty regularization schedule");
  const int d = x.dim();
  const Density g = standard_gaussian(d);
  std::vector<double> factors = st.eps_factors;
  std::sort(factors.begin(), factors.end(), std::greater<>());
  std::vector<double> values;
  Mat xs(long(st.points), d), ys(long(st.points), d);
  for (std::size_t rep = 0; rep < st.repetitions; ++rep) {
    // common random numbers: both clouds come from the same shifted points
    const std::uint64_t seed = derive_seed(st.seed, {0x6f74ULL, rep});
    draw_stratified(x, seed, xs);
    draw_stratified(g, seed, ys);
    const RowMat xr = xs, yr = ys;
    Sinkhorn sk(xr, yr);
    const double med = median_squared_distance(xr, yr);
    // warm-up from the coarsest level
    for (double e = 2.0 * factors.front() * med; e > factors.front() * med; e *= 0.5)
      sk.divergence(e, st.max_iterations, st.tolerance);
    std::vector<double> eps, s;
    for (double fct : factors) {
      eps.push_back(fct * med);
      s.push_back(sk.divergence(fct * med, st.max_iterations, st.tolerance));
    }
    values.push_back(extrapolate(eps, s));
  }
  const double n = double(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= (n - 1.0);
  // with few repetitions the sample spread is itself noisy (tail points
  // make it skewed); widen it so that 3 errors is a Student-t bound of the
  // same confidence as 3 sigma
  const boost::math::students_t tdist(n - 1.0);
  const double widen = boost::math::quantile(tdist, boost::math::cdf(boost::math::normal(), 3.0)) / 3.0;
  const double se = widen * std::sqrt(var / n);
  const double sq = std::max(0.0, mean);
  const double w = std::sqrt(sq);
  // delta method for the distance; near zero fall back to sqrt of the spread
  const double werr = w > 2.0 * std::sqrt(se) ? se / (2.0 * w) : std::sqrt(se + std::abs(std::min(0.0, mean)));
  return {w, werr, W2Method::EntropicOt};
}

W2Estimate w2_quantile_1d(const Density& x, const TransportSettings& st) {
  if (x.dim() != 1) throw Error(ErrorKind::InvalidDimension, "quantile coupling needs d = 1");
  if (const auto* m = x.mixture()) return quantile_mixture(*m, st.quantile_tol);
  if (const auto* g = x.grid()) return quantile_grid(*g);
  throw Error(ErrorKind::UnsupportedEstimator, "quantile coupling needs a mixture or a grid");
}

W2Estimate w2_to_gaussian(const Density& x, const TransportSettings& st) {
  const Moments mo = moments(x);
  if (!std::isfinite(mo.second_moment())) throw Error(ErrorKind::InvalidDensity, "second moment is not finite");
  if (x.is_gaussian()) {
    const auto& m = *x.mixture();
    const int d = m.dim();
    const double w2 = m.component(0).mean.squaredNorm() + m.component(0).cov.trace() + d -
                      2.0 * m.cov_sqrt(0).trace();
    return {std::sqrt(std::max(0.0, w2)), 0.0, W2Method::GaussianClosedForm};
  }
  if (x.dim() == 1 && !x.samples()) return w2_quantile_1d(x, st);
  return w2_entropic(x, st.ot);
}

DeficitReport talagrand_deficit(const Density& x, const TransportSettings& st) {
  const Estimate d = rel_entropy(x, st.estimator);
  const Estimate w2 = w2_to_gaussian(x, st).squared();
  return make_report("talagrand", w2, linear({{2.0, d}}));
}

DeficitReport hwi_deficit(const Density& x, const TransportSettings& st) {
  const FunctionalCatalog c = catalog(x, st.estimator);
  const Estimate w = w2_to_gaussian(x, st).distance();
  const Estimate root_i = transform(
      c.rel_fisher, [](double v) { return std::sqrt(std::max(0.0, v)); },
      [](double v) { return v > 0.0 ? 0.5 / std::sqrt(v) : 0.0; });
  Estimate rhs = product(root_i, w);
  const Estimate half_sq = transform(w, [](double v) { return 0.5 * v * v; }, [](double v) { return v; });
  // W enters both terms; combine the derivative d/dW (sqrt(I) W - W^2/2)
  // before propagating so the error is not double counted
  const double dw = root_i.value - w.value;
  rhs.value -= half_sq.value;
  rhs.error = std::hypot(std::abs(dw) * w.error, w.value * root_i.error);
  rhs.method = weakest(rhs.method, w.method);
  if (rhs.method != Method::ClosedForm && rhs.error == 0.0) rhs.error = 1e-300;
  return make_report("hwi", c.rel_entropy, rhs);
}

DeficitReport w2_convolution_deficit(const Density& x, const Density& y, double theta, const TransportSettings& st,
                                     const ConvolveOptions& conv) {
  const Density xc = center(x), yc = center(y);
  const Density z = convolve(xc, yc, theta, conv);
  const Estimate wx = w2_to_gaussian(xc, st).squared();
  const Estimate wy = w2_to_gaussian(yc, st).squared();
  const Estimate wz = w2_to_gaussian(z, st).squared();
  return make_report("w2_convolution", wz, linear({{theta, wx}, {1.0 - theta, wy}}), {{"theta", theta}});
}

}  // namespace deficit
