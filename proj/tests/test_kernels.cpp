#include "oracles.hpp"

#include "deficitlab/kernels.hpp"
#include "deficitlab/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace deficit;

namespace {

std::vector<double> normals(oracle::Rng& r, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = r.normal();
  return v;
}

struct ThreadGuard {
  ~ThreadGuard() { kernels::set_threads(0); }
};

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("mixture_eval: parallel equals serial bit for bit") {
    ThreadGuard guard;
    oracle::Rng r(5);
    const GaussianMixture m = oracle::random_mixture(r, 2, 7);
    const std::size_t n = 5003;
    const auto x = normals(r, 2 * n);
    std::vector<double> ls(n), ss(2 * n);
    kernels::serial::mixture_eval({m, x, ls, ss});
    for (int threads : {1, 2, 3, 8}) {
      kernels::set_threads(threads);
      std::vector<double> lp(n), sp(2 * n);
      kernels::parallel::mixture_eval({m, x, lp, sp});
      CHECK(lp == ls);
      CHECK(sp == ss);
    }
    // and the value is the mixture density
    const double f0 = std::exp(ls[0]);
    double ref = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      const auto& c = m.component(k);
      const Vec d = Eigen::Map<const Vec>(x.data(), 2) - c.mean;
      ref += c.weight * std::exp(-0.5 * d.dot(c.cov.inverse() * d)) / (2 * M_PI * std::sqrt(c.cov.determinant()));
    }
    CHECK(f0 == doctest::Approx(ref).epsilon(1e-12));
  }

  TEST_CASE("softmin: parallel equals serial bit for bit") {
    ThreadGuard guard;
    oracle::Rng r(6);
    const std::size_t n = 300, m = 257;
    const auto x = normals(r, 2 * n), y = normals(r, 2 * m), g = normals(r, m);
    std::vector<double> lb(m, -std::log(double(m))), s(n);
    kernels::serial::softmin({x, y, 2, g, lb, 0.3, s});
    for (int threads : {1, 2, 5}) {
      kernels::set_threads(threads);
      std::vector<double> p(n);
      kernels::parallel::softmin({x, y, 2, g, lb, 0.3, p});
      CHECK(p == s);
    }
    // direct log-sum-exp for one row
    double mx = -1e300;
    std::vector<double> a(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double dx = x[0] - y[2 * j], dy = x[1] - y[2 * j + 1];
      a[j] = lb[j] + (g[j] - dx * dx - dy * dy) / 0.3;
      mx = std::max(mx, a[j]);
    }
    double sum = 0.0;
    for (double v : a) sum += std::exp(v - mx);
    CHECK(s[0] == doctest::Approx(-0.3 * (mx + std::log(sum))).epsilon(1e-12));
  }

  TEST_CASE("mehler: parallel equals serial, constants are fixed points") {
    ThreadGuard guard;
    std::vector<double> vals(1025);
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = 1.0 + 0.4 * std::sin(-10.0 + 20.0 * double(i) / 1024.0);
    const CubicSpline1d f(vals, -10.0, 20.0 / 1024.0);
    std::vector<double> x(999), s(999);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = -8.0 + 16.0 * double(i) / 998.0;
    kernels::serial::mehler({f, x, 0.3, gauss_hermite(96), s});
    for (int threads : {1, 4}) {
      kernels::set_threads(threads);
      std::vector<double> p(999);
      kernels::parallel::mehler({f, x, 0.3, gauss_hermite(96), p});
      CHECK(p == s);
    }
    const CubicSpline1d one(std::vector<double>(64, 2.0), -5.0, 0.2);
    std::vector<double> o(999);
    kernels::mehler({one, x, 0.7, gauss_hermite(32), o});
    for (double v : o) CHECK(v == doctest::Approx(2.0).epsilon(1e-13));
  }

  TEST_CASE("gauss-hermite rule integrates moments of N(0, 1)") {
    const auto& gh = gauss_hermite(40);
    double m0 = 0, m2 = 0, m4 = 0;
    for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
      const double x = gh.nodes[i], w = gh.weights[i];
      m0 += w;
      m2 += w * x * x;
      m4 += w * x * x * x * x;
    }
    CHECK(m0 == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
  }
}
