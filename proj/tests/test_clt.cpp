#include "oracles.hpp"

#include "deficitlab/clt.hpp"
#include "deficitlab/inequalities.hpp"

#include <doctest.h>

#include <cmath>

using namespace deficit;

namespace {

Density bimodal(double m = std::sqrt(0.8), double v = 0.2) {
  Vec a(1), b(1);
  a << -m;
  b << m;
  return GaussianMixture(1, {{0.5, a, Mat::Constant(1, 1, v)}, {0.5, b, Mat::Constant(1, 1, v)}});
}

Density g1(double var) { return gaussian(Vec::Zero(1), Mat::Constant(1, 1, var)); }

}  // namespace

TEST_SUITE("clt") {
  TEST_CASE("gaussians are fixed points and the slack is linear in n") {
    const double s = 2.0;
    const CltTrace tr = clt_trace(g1(s), 8);
    REQUIRE(tr.rows.size() == 8);
    const double d0 = 0.5 * (s - 1 - std::log(s));
    const double dl = 0.5 * (1 / s - 1 + std::log(s));
    for (const auto& r : tr.rows) {
      CHECK(r.D.value == doctest::Approx(d0).epsilon(1e-12));
      CHECK(r.dlsi.value == doctest::Approx(dl).epsilon(1e-12));
      CHECK(r.ent_clt.deficit == doctest::Approx(double(r.n - 1) * dl).epsilon(1e-10).scale(1));
      CHECK(std::abs(r.doubling.deficit) < 1e-12);
    }
    const CltTrace one = clt_trace(standard_gaussian(2), 4);
    for (const auto& r : one.rows) CHECK(std::abs(r.ent_clt.deficit) < 1e-12);
  }

  TEST_CASE("n = 2 of a symmetric two-point mixture has weights 1/4, 1/2, 1/4") {
    const double m = 1.1;
    const Density u = normalized_sum(bimodal(m, 0.3), 2);
    REQUIRE(u.mixture());
    const auto& c = u.mixture()->components();
    REQUIRE(c.size() == 3);
    std::vector<std::pair<double, double>> wm;
    for (const auto& k : c) wm.emplace_back(k.mean[0], k.weight);
    std::sort(wm.begin(), wm.end());
    CHECK(wm[0].first == doctest::Approx(-std::sqrt(2.0) * m));
    CHECK(wm[0].second == doctest::Approx(0.25));
    CHECK(std::abs(wm[1].first) < 1e-14);
    CHECK(wm[1].second == doctest::Approx(0.5));
    CHECK(wm[2].second == doctest::Approx(0.25));
    for (const auto& k : c) CHECK(k.cov(0, 0) == doctest::Approx(0.3));
  }

  TEST_CASE("covariance of U_n equals that of Z") {
    oracle::Rng r(12);
    const Density z = center(oracle::random_mixture(r, 2, 3));
    const Mat cz = moments(z).cov;
    for (std::size_t n : {2, 3, 5, 8}) {
      const Moments mu = moments(normalized_sum(z, n));
      CHECK((mu.cov - cz).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(mu.mean.norm() < 1e-12);
    }
  }

  TEST_CASE("grid fallback agrees with the exact mixture") {
    const Density z = bimodal();
    CltSettings tight;
    tight.convolve.component_budget = 2;
    for (std::size_t n : {3, 6}) {
      const Density exact = normalized_sum(z, n);
      const Density grid = normalized_sum(z, n, tight);
      REQUIRE(exact.mixture());
      REQUIRE(grid.grid());
      const auto comps = oracle::comps_1d(*exact.mixture());
      const GridDensity& g = *grid.grid();
      double l1 = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) l1 += std::abs(g.values()[i] - oracle::pdf(comps, g.coord(0, i))) * g.spacing()[0];
      CHECK(l1 < 1e-4);
      CHECK(std::abs(rel_entropy(grid).value - rel_entropy(exact).value) < 1e-5);
    }
  }

  TEST_CASE("bimodal trace: every report holds, entropy falls") {
    const CltTrace tr = clt_trace(bimodal(), 12);
    for (const auto& r : tr.rows) {
      CHECK(r.ent_clt.within());
      CHECK(r.fi_clt.within());
      CHECK(r.doubling.within());
      if (r.n > 1) CHECK(r.D.value <= tr.rows[r.n - 2].D.value + 3 * r.D.error);
    }
    // the two forms differ only by I(U_n)/2 - D(U_n) - dLSI(U_n) = 0
    for (const auto& r : tr.rows) CHECK(r.ent_clt.deficit == doctest::Approx(r.fi_clt.deficit).epsilon(1e-9).scale(1));
  }

  TEST_CASE("subadditivity: (1, 1) is the convolution LSI at theta = 1/2") {
    const Density z = bimodal();
    const auto reps = subadditivity_check(z, {{1, 1}, {1, 2}, {2, 3}, {4, 4}});
    REQUIRE(reps.size() == 4);
    for (const auto& r : reps) CHECK(r.within());
    const DeficitReport c = conv_lsi_deficit(z, z, 0.5);
    CHECK(reps[0].deficit == doctest::Approx(c.deficit).epsilon(1e-9));
  }
}
