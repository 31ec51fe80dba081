#include "oracles.hpp"

#include "deficitlab/error.hpp"
#include "deficitlab/functionals.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace deficit;

namespace {

const double kHalfLog2PiE = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);

Density bump(double m1, double v1, double m2, double v2, double w = 0.5) {
  Vec a(1), b(1);
  a << m1;
  b << m2;
  return GaussianMixture(1, {{w, a, Mat::Constant(1, 1, v1)}, {1 - w, b, Mat::Constant(1, 1, v2)}});
}

EstimatorSettings mc(std::uint64_t seed, std::size_t n = 1'000'000) {
  EstimatorSettings st;
  st.prefer = EstimatorSettings::Prefer::MonteCarlo;
  st.mc_samples = n;
  st.seed = seed;
  return st;
}

bool within(const Estimate& e, double truth, double k) { return std::abs(e.value - truth) <= k * e.error; }

}  // namespace

TEST_SUITE("functionals") {
  TEST_CASE("closed forms of simple gaussians") {
    const FunctionalCatalog c = catalog(standard_gaussian(1));
    CHECK(c.entropy.value == doctest::Approx(kHalfLog2PiE).epsilon(1e-15));
    CHECK(c.entropy.method == Method::ClosedForm);
    CHECK(c.entropy.error == 0.0);
    CHECK(c.fisher.value == 1.0);
    CHECK(c.rel_entropy.value == 0.0);
    CHECK(c.rel_fisher.value == 0.0);
    for (int d : {1, 2, 3}) CHECK(fisher(standard_gaussian(d)).value == doctest::Approx(d));
    const double s2 = 2.5;
    const Density g = gaussian(Vec::Zero(3), s2 * Mat::Identity(3, 3));
    CHECK(entropy_power(g).value == doctest::Approx(s2).epsilon(1e-14));
    CHECK(stam_defect(g).value == doctest::Approx(1.0).epsilon(1e-14));
    // Monte Carlo agrees with the closed form
    const Estimate h = entropy(g, mc(4));
    CHECK(h.method == Method::MonteCarlo);
    CHECK(within(h, entropy(g).value, 4.0));
  }

  TEST_CASE("rho = 0.5 covariance: J = 8/3") {
    Mat s(2, 2);
    s << 1, 0.5, 0.5, 1;
    const Density x = gaussian(Vec::Zero(2), s);
    CHECK(fisher(x).value == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
    CHECK(within(fisher(x, mc(8)), 8.0 / 3.0, 4.0));
  }

  TEST_CASE("translation: dLSI of N(mu, I) vanishes, D and I follow |mu|^2") {
    oracle::Rng r(17);
    for (int k = 0; k < 10; ++k) {
      const int d = r.integer(1, 3);
      const Vec mu = oracle::random_vec(r, d, 2.0);
      const FunctionalCatalog c = catalog(gaussian(mu, Mat::Identity(d, d)));
      CHECK(c.rel_fisher.value == doctest::Approx(mu.squaredNorm()).epsilon(1e-12));
      CHECK(c.rel_entropy.value == doctest::Approx(mu.squaredNorm() / 2).epsilon(1e-12));
      CHECK(std::abs(c.lsi_deficit.value) < 1e-12);
    }
  }

  TEST_CASE("bimodal mixture: quadrature against the Simpson oracle and Monte Carlo") {
    const Density x = bump(-3.0, 1.0, 3.0, 1.0);
    const oracle::Truth1 t = oracle::mixture_truth_1d(oracle::comps_1d(*x.mixture()));
    const FunctionalCatalog c = catalog(x);
    CHECK(c.entropy.method == Method::Quadrature);
    CHECK(c.entropy.value == doctest::Approx(t.h).epsilon(1e-9));
    CHECK(c.fisher.value == doctest::Approx(t.J).epsilon(1e-9));
    CHECK(c.rel_entropy.value == doctest::Approx(t.D).epsilon(1e-9));
    CHECK(c.rel_fisher.value == doctest::Approx(t.I).epsilon(1e-9));
    CHECK(within(entropy(x, mc(21)), t.h, 3.0));
  }

  TEST_CASE("stam defect exceeds one for a separated mixture") {
    const Estimate p = stam_defect(bump(-2.0, 1.0, 2.0, 1.0));
    CHECK(p.value > 1.0 + 3.0 * p.error);
    CHECK(stam_defect(gaussian(Vec::Zero(1), Mat::Constant(1, 1, 0.3))).value == doctest::Approx(1.0));
  }

  TEST_CASE("grid path") {
    const Density g = discretize(*standard_gaussian(1).mixture(), 12.0, 4096);
    CHECK(std::abs(fisher(g).value - 1.0) < 1e-4);
    CHECK(std::abs(entropy(g).value - kHalfLog2PiE) < 1e-6);
    const Density x = bump(-1.0, 0.5, 1.5, 0.7);
    const Density gx = discretize(*x.mixture(), 14.0, 4096);
    const oracle::Truth1 t = oracle::mixture_truth_1d(oracle::comps_1d(*x.mixture()));
    CHECK(std::abs(rel_entropy(gx).value - t.D) < 1e-5);
    CHECK(std::abs(rel_fisher(gx).value - t.I) < 1e-3);
  }

  TEST_CASE("sample clouds: entropy refused for Fisher information") {
    const SampleCloud s = sample(standard_gaussian(1), 1000, 1);
    bool refused = false;
    try {
      fisher(Density(s));
    } catch (const Error& e) {
      refused = e.kind() == ErrorKind::UnsupportedEstimator;
    }
    CHECK(refused);
  }

  TEST_CASE("gaussian identities") {
    auto both = [](const Density& z, double s, double tol, const EstimatorSettings& st = {}) {
      const auto [a, b] = gaussian_identities(z, s, st);
      CHECK(std::abs(a.deficit) <= std::max(tol, 3.0 * a.err));
      CHECK(std::abs(b.deficit) <= std::max(tol, 3.0 * b.err));
    };
    {
      const auto [a, b] = gaussian_identities(standard_gaussian(2), 1.0);
      CHECK(a.deficit == 0.0);
      CHECK(b.deficit == 0.0);
    }
    both(gaussian(Vec::Zero(1), Mat::Constant(1, 1, 4.0)), 2.0, 1e-10);
    both(bump(-1.0, 0.5, 1.0, 0.5), 1.0, 0.0, mc(3, 200000));
    both(bump(-1.0, 0.5, 1.0, 0.5), 1.0, 1e-10);
  }

  TEST_CASE("the rho example: dLSI of (X + X*)/sqrt(2)") {
    // X = G (+) (rho correlation); its iid symmetrization is the mixture-free
    // Gaussian with covariance [[1, rho], [rho, 1]]: computed directly here
    const double rho = 0.5;
    Mat s(2, 2);
    s << 1, rho, rho, 1;
    const Estimate d = lsi_deficit(gaussian(Vec::Zero(2), s));
    const double truth = rho * rho / (1 - rho * rho) + 0.5 * std::log(1 - rho * rho);
    CHECK(d.value == doctest::Approx(truth).epsilon(1e-12));
    CHECK(d.value > rho * rho / 2);
  }
}
