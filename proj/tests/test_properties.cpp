// Seeded random sweeps over the invariants every law must satisfy.

#include "gaussian_oracle.hpp"

#include "deficitlab/functionals.hpp"
#include "deficitlab/inequalities.hpp"
#include "deficitlab/transport.hpp"

#include <doctest.h>

#include <cmath>

using namespace deficit;

namespace {

Density random_gaussian(oracle::Rng& r, int d) { return gaussian(oracle::random_vec(r, d), oracle::random_spd(r, d)); }

}  // namespace

TEST_SUITE("properties") {
  TEST_CASE("stam defect >= 1 and dLSI >= 0") {
    oracle::Rng r(101);
    for (int k = 0; k < 30; ++k) {
      const int d = r.integer(1, 2);
      const Density x = oracle::random_mixture(r, d, r.integer(1, 4));
      const FunctionalCatalog c = catalog(x);
      CHECK(c.stam_defect.value >= 1.0 - 3.0 * c.stam_defect.error - 1e-12);
      CHECK(c.lsi_deficit.value >= -3.0 * c.lsi_deficit.error - 1e-12);
      CHECK(c.rel_entropy.value >= -3.0 * c.rel_entropy.error - 1e-12);
    }
  }

  TEST_CASE("translation and scaling laws") {
    oracle::Rng r(102);
    for (int k = 0; k < 15; ++k) {
      const Density x = oracle::random_mixture(r, 1, r.integer(2, 3));
      const Density xc = center(x);
      const double s = r.uniform(0.5, 2.0);
      const Density xs = scale(x, s);
      const Estimate h = entropy(x), j = fisher(x);
      CHECK(entropy(xc).value == doctest::Approx(h.value).epsilon(1e-8).scale(1));
      CHECK(fisher(xc).value == doctest::Approx(j.value).epsilon(1e-8));
      CHECK(entropy(xs).value == doctest::Approx(h.value + std::log(s)).epsilon(1e-8).scale(1));
      CHECK(fisher(xs).value == doctest::Approx(j.value / (s * s)).epsilon(1e-8));
      CHECK(stam_defect(xs).value == doctest::Approx(stam_defect(x).value).epsilon(1e-8));
    }
  }

  TEST_CASE("random gaussian pairs: every deficit >= 0 and equals the oracle") {
    oracle::Rng r(103);
    const auto grid = default_theta_grid();
    for (int k = 0; k < 100; ++k) {
      const int d = r.integer(1, 4);
      const Density x = random_gaussian(r, d), y = random_gaussian(r, d);
      const double th = r.uniform();
      const Mat sx = x.mixture()->component(0).cov, sy = y.mixture()->component(0).cov;
      const oracle::PairTruth o = oracle::pair_truth(sx, sy, th, 1.0, grid);
      for (double v : {o.epi, o.fii, o.interpolation, o.sandwich_lower, o.sandwich_upper, o.reverse_epi, o.epi_classical,
                       o.reverse_fii, o.fii_classical, o.stam, o.three_epi})
        CHECK(v >= -1e-10);
      CHECK(epi_deficit(x, y, th).deficit == doctest::Approx(o.epi).epsilon(1e-10).scale(1));
      CHECK(interpolation_deficit(x, y, th).deficit == doctest::Approx(o.interpolation).epsilon(1e-10).scale(1));
      CHECK(fii_deficit(x, y, th).deficit == doctest::Approx(o.fii).epsilon(1e-10).scale(1));
      // conv_lsi is not centered: check its sign only
      CHECK(conv_lsi_deficit(x, y, th).within());
    }
  }

  TEST_CASE("random mixture pairs: epi, fii, interpolation hold") {
    oracle::Rng r(104);
    for (int k = 0; k < 20; ++k) {
      const int d = r.integer(1, 2);
      const Density x = oracle::random_mixture(r, d, r.integer(1, 3)), y = oracle::random_mixture(r, d, r.integer(1, 3));
      const double th = r.uniform();
      CHECK(epi_deficit(x, y, th).within());
      CHECK(fii_deficit(x, y, th).within());
      CHECK(interpolation_deficit(x, y, th).within());
      CHECK(stam_submult_deficit(x, y).within());
    }
  }

  TEST_CASE("talagrand on random gaussians") {
    oracle::Rng r(105);
    for (int k = 0; k < 50; ++k) {
      const Density x = random_gaussian(r, r.integer(1, 4));
      const DeficitReport t = talagrand_deficit(x), h = hwi_deficit(x);
      CHECK(t.deficit >= -1e-10);
      CHECK(h.deficit >= -1e-10);
    }
  }

  TEST_CASE("convolution is symmetric in (X, theta) <-> (Y, 1 - theta)") {
    oracle::Rng r(106);
    for (int k = 0; k < 20; ++k) {
      const int d = r.integer(1, 3);
      const Density x = oracle::random_mixture(r, d, 2), y = oracle::random_mixture(r, d, 3);
      const double th = r.uniform();
      const Moments a = moments(convolve(x, y, th)), b = moments(convolve(y, x, 1 - th));
      CHECK((a.mean - b.mean).norm() < 1e-12);
      CHECK((a.cov - b.cov).cwiseAbs().maxCoeff() < 1e-12);
      const Moments mx = moments(x), my = moments(y);
      CHECK((a.cov - (th * mx.cov + (1 - th) * my.cov)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}
