#include "oracles.hpp"

#include "deficitlab/transport.hpp"

#include <doctest.h>

#include <cmath>

using namespace deficit;

namespace {

Density bump(double m1, double v1, double m2, double v2, double w = 0.5) {
  Vec a(1), b(1);
  a << m1;
  b << m2;
  return GaussianMixture(1, {{w, a, Mat::Constant(1, 1, v1)}, {1 - w, b, Mat::Constant(1, 1, v2)}});
}

Density g1(double mean, double var) {
  Vec m(1);
  m << mean;
  return gaussian(m, Mat::Constant(1, 1, var));
}

}  // namespace

TEST_SUITE("transport") {
  TEST_CASE("gaussian closed forms") {
    CHECK(w2_to_gaussian(standard_gaussian(2)).value == 0.0);
    oracle::Rng r(2);
    for (int k = 0; k < 10; ++k) {
      const int d = r.integer(1, 3);
      const Vec mu = oracle::random_vec(r, d, 2.0);
      const W2Estimate w = w2_to_gaussian(gaussian(mu, Mat::Identity(d, d)));
      CHECK(w.method == W2Method::GaussianClosedForm);
      CHECK(w.error == 0.0);
      CHECK(w.value == doctest::Approx(mu.norm()).epsilon(1e-14));
    }
    // general covariance: |mu|^2 + tr(S + I - 2 S^{1/2})
    Mat s(2, 2);
    s << 2.0, 0.3, 0.3, 0.5;
    Eigen::SelfAdjointEigenSolver<Mat> es(s);
    const double truth = std::sqrt((s + Mat::Identity(2, 2) - 2.0 * es.operatorSqrt()).trace());
    CHECK(w2_to_gaussian(gaussian(Vec::Zero(2), s)).value == doctest::Approx(truth).epsilon(1e-13));
  }

  TEST_CASE("talagrand and hwi: equality for translates, N(0, 4) value") {
    oracle::Rng r(3);
    for (int k = 0; k < 10; ++k) {
      const int d = r.integer(1, 3);
      const Density x = gaussian(oracle::random_vec(r, d), Mat::Identity(d, d));
      CHECK(std::abs(talagrand_deficit(x).deficit) < 1e-12);
      CHECK(std::abs(hwi_deficit(x).deficit) < 1e-12);
    }
    CHECK(talagrand_deficit(standard_gaussian(1)).deficit == 0.0);
    CHECK(talagrand_deficit(g1(0, 4)).deficit == doctest::Approx(3.0 - std::log(4.0) - 1.0).epsilon(1e-14));
  }

  TEST_CASE("w2 convolution: closed forms") {
    CHECK(w2_convolution_deficit(standard_gaussian(1), standard_gaussian(1), 0.5).deficit == 0.0);
    const double truth = 0.5 - std::pow(std::sqrt(2.5) - 1.0, 2);
    CHECK(w2_convolution_deficit(g1(0, 4), standard_gaussian(1), 0.5).deficit ==
          doctest::Approx(truth).epsilon(1e-13));
  }

  TEST_CASE("quantile path matches an independent quantile integral") {
    oracle::Rng r(4);
    for (int k = 0; k < 5; ++k) {
      const Density x = oracle::random_mixture(r, 1, r.integer(2, 3));
      const W2Estimate q = w2_quantile_1d(x);
      CHECK(q.method == W2Method::Quantile1d);
      CHECK(q.value == doctest::Approx(oracle::w2_quantile_truth(oracle::comps_1d(*x.mixture()))).epsilon(2e-4));
    }
    // a gaussian through the quantile path still gives the closed form
    CHECK(w2_quantile_1d(g1(0.7, 2.0)).value == doctest::Approx(w2_to_gaussian(g1(0.7, 2.0)).value).epsilon(1e-8));
  }

  TEST_CASE("sinkhorn divergence: zero on identical clouds, positive otherwise") {
    oracle::Rng r(5);
    Mat x(60, 2), y(60, 2);
    for (long i = 0; i < 60; ++i) {
      x.row(i) << r.normal(), r.normal();
      y.row(i) << r.normal() + 1.0, r.normal();
    }
    CHECK(std::abs(sinkhorn_divergence(x, x, 0.5)) < 1e-4);
    const double s = sinkhorn_divergence(x, y, 0.05);
    // small eps: the squared mean shift 1 plus the upward bias of 60-point clouds
    CHECK(s > 0.5);
    CHECK(s < 3.0);
  }

  TEST_CASE("entropic OT agrees with the quantile formula") {
    const Density x = bump(-1.0, 0.4, 1.2, 0.6, 0.4);
    EntropicOtSettings st;
    st.seed = 77;
    const W2Estimate e = w2_entropic(x, st);
    const W2Estimate q = w2_quantile_1d(x);
    CHECK(e.method == W2Method::EntropicOt);
    CHECK(std::abs(e.value * e.value - q.value * q.value) <= 3.0 * e.squared().error);
  }

  TEST_CASE("talagrand and hwi on random 1-d mixtures") {
    oracle::Rng r(9);
    for (int k = 0; k < 20; ++k) {
      const Density x = oracle::random_mixture(r, 1, r.integer(1, 4));
      const DeficitReport t = talagrand_deficit(x), h = hwi_deficit(x);
      CHECK(t.deficit >= -3.0 * t.err);
      CHECK(h.deficit >= -3.0 * h.err);
    }
  }
}
