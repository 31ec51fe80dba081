#include "deficitlab/quadrature.hpp"

#include <Eigen/Dense>

#include <map>
#include <mutex>

namespace deficit {

namespace {

GaussHermite build_gauss_hermite(std::size_t n) {
  // Golub-Welsch for the monic Hermite (probabilists') recurrence, then
  // Newton polish and Christoffel weights from orthonormal polynomials.
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(long(n), long(n));
  for (std::size_t k = 1; k < n; ++k) {
    jac(long(k), long(k - 1)) = std::sqrt(double(k));
    jac(long(k - 1), long(k)) = std::sqrt(double(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac, Eigen::EigenvaluesOnly);
  GaussHermite gh;
  gh.nodes.assign(eig.eigenvalues().data(), eig.eigenvalues().data() + n);
  auto orthonormal = [n](double x, double& pn, double& dpn, double& sumsq) {
    // p_{k+1} = (x p_k - sqrt(k) p_{k-1}) / sqrt(k+1)
    double pm1 = 0.0, p = 1.0, dm1 = 0.0, dp = 0.0;
    sumsq = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double a = std::sqrt(double(k + 1)), b = std::sqrt(double(k));
      const double pn1 = (x * p - b * pm1) / a;
      const double dn1 = (p + x * dp - b * dm1) / a;
      pm1 = p;
      p = pn1;
      dm1 = dp;
      dp = dn1;
      if (k + 1 < n) sumsq += p * p;
    }
    pn = p;
    dpn = dp;
  };
  gh.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = gh.nodes[i], pn, dpn, sumsq;
    for (int it = 0; it < 3; ++it) {
      orthonormal(x, pn, dpn, sumsq);
      if (dpn == 0.0) break;
      x -= pn / dpn;
    }
    orthonormal(x, pn, dpn, sumsq);
    gh.nodes[i] = x;
    gh.weights[i] = 1.0 / sumsq;
  }
  return gh;
}

}  // namespace

const GaussHermite& gauss_hermite(std::size_t order) {
  static std::mutex mutex;
  static std::map<std::size_t, GaussHermite> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_gauss_hermite(order)).first;
  return it->second;
}

CubicSpline1d::CubicSpline1d(std::vector<double> values, double x0, double h)
    : values_(std::move(values)),
      x0_(x0),
      x1_(x0 + h * double(values_.size() - 1)),
      spline_(values_.data(), values_.size(), x0, h) {}

TensorResult integrate_box_2d(const std::function<void(double, double, double*)>& f, std::size_t outputs,
                              const double lo[2], const double hi[2], double h0, double abs_tol,
                              std::size_t max_points_per_axis) {
  std::size_t n[2];
  double h[2];
  for (int a = 0; a < 2; ++a) {
    n[a] = std::max<std::size_t>(9, std::size_t(std::ceil((hi[a] - lo[a]) / h0)) + 1);
    h[a] = (hi[a] - lo[a]) / double(n[a] - 1);
  }
  std::vector<double> buf(outputs);
  // sums of f over all nodes with trapezoid edge factors
  auto full_sum = [&](std::size_t n0, std::size_t n1, double h0_, double h1_, std::size_t stride0, std::size_t stride1,
                      bool skip_coarse, std::vector<double>& acc) {
    for (std::size_t i = 0; i < n0; ++i) {
      const double wx = (i == 0 || i + 1 == n0) ? 0.5 : 1.0;
      for (std::size_t j = 0; j < n1; ++j) {
        if (skip_coarse && (i % stride0 == 0) && (j % stride1 == 0)) continue;
        const double wy = (j == 0 || j + 1 == n1) ? 0.5 : 1.0;
        f(lo[0] + h0_ * double(i), lo[1] + h1_ * double(j), buf.data());
        for (std::size_t k = 0; k < outputs; ++k) acc[k] += wx * wy * buf[k];
      }
    }
  };
  std::vector<double> raw(outputs, 0.0);
  full_sum(n[0], n[1], h[0], h[1], 1, 1, false, raw);
  std::vector<double> prev(outputs);
  for (std::size_t k = 0; k < outputs; ++k) prev[k] = raw[k] * h[0] * h[1];
  TensorResult res;
  while (true) {
    const std::size_t m0 = 2 * n[0] - 1, m1 = 2 * n[1] - 1;
    if (m0 > max_points_per_axis || m1 > max_points_per_axis) {
      res.values = prev;
      res.errors.assign(outputs, std::numeric_limits<double>::infinity());
      res.converged = false;
      return res;
    }
    // Refined sum: old nodes keep their weights, except that the coarse
    // edge halving pattern is identical on the refined grid.
    full_sum(m0, m1, h[0] / 2, h[1] / 2, 2, 2, true, raw);
    std::vector<double> cur(outputs);
    double worst = 0.0;
    res.errors.assign(outputs, 0.0);
    for (std::size_t k = 0; k < outputs; ++k) {
      cur[k] = raw[k] * (h[0] / 2) * (h[1] / 2);
      res.errors[k] = std::abs(cur[k] - prev[k]);
      worst = std::max(worst, res.errors[k]);
    }
    n[0] = m0;
    n[1] = m1;
    h[0] /= 2;
    h[1] /= 2;
    prev = cur;
    if (worst <= abs_tol) {
      res.values = cur;
      res.converged = true;
      return res;
    }
  }
}

}  // namespace deficit
