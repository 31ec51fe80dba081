#include "gaussian_oracle.hpp"

#include "deficitlab/error.hpp"
#include "deficitlab/inequalities.hpp"

#include <doctest.h>

#include <cmath>

using namespace deficit;

namespace {

Mat corr(double rho) {
  Mat m(2, 2);
  m << 1, rho, rho, 1;
  return m;
}

Density bump(double m1, double v1, double m2, double v2, double w = 0.5) {
  Vec a(1), b(1);
  a << m1;
  b << m2;
  return GaussianMixture(1, {{w, a, Mat::Constant(1, 1, v1)}, {1 - w, b, Mat::Constant(1, 1, v2)}});
}

Density g0(const Mat& s) { return gaussian(Vec::Zero(s.rows()), s); }

}  // namespace

TEST_SUITE("inequalities") {
  TEST_CASE("every report matches the gaussian oracle") {
    oracle::Rng r(31);
    const auto grid = default_theta_grid();
    for (int k = 0; k < 40; ++k) {
      const int d = r.integer(1, 3);
      const Mat sx = oracle::random_spd(r, d), sy = oracle::random_spd(r, d);
      const double th = grid[std::size_t(r.integer(0, 10))], t = r.uniform(0.1, 3.0);
      const oracle::PairTruth o = oracle::pair_truth(sx, sy, th, t, grid);
      const Density x = g0(sx), y = g0(sy);
      const double tol = 1e-10;
      CHECK(epi_deficit(x, y, th).deficit == doctest::Approx(o.epi).epsilon(tol).scale(1));
      CHECK(fii_deficit(x, y, th).deficit == doctest::Approx(o.fii).epsilon(tol).scale(1));
      CHECK(interpolation_deficit(x, y, th).deficit == doctest::Approx(o.interpolation).epsilon(tol).scale(1));
      CHECK(fii_form_deficit(x, y, th).deficit == doctest::Approx(o.interpolation).epsilon(tol).scale(1));
      CHECK(conv_lsi_deficit(x, y, th).deficit == doctest::Approx(o.conv_lsi).epsilon(tol).scale(1));
      const auto [lo, up] = sandwich_check(x, y);
      CHECK(lo.deficit == doctest::Approx(o.sandwich_lower).epsilon(tol).scale(1));
      CHECK(up.deficit == doctest::Approx(o.sandwich_upper).epsilon(tol).scale(1));
      const auto [re, ce] = reverse_epi_deficit(x, y);
      CHECK(re.deficit == doctest::Approx(o.reverse_epi).epsilon(tol).scale(1));
      CHECK(ce.deficit == doctest::Approx(o.epi_classical).epsilon(tol).scale(1));
      const auto [rf, cf] = reverse_fii_deficit(x, y);
      CHECK(rf.deficit == doctest::Approx(o.reverse_fii).epsilon(tol).scale(1));
      CHECK(cf.deficit == doctest::Approx(o.fii_classical).epsilon(tol).scale(1));
      CHECK(stam_submult_deficit(x, y).deficit == doctest::Approx(o.stam).epsilon(tol).scale(1));
      CHECK(three_epi_deficit(x, y, t).deficit == doctest::Approx(o.three_epi).epsilon(tol).scale(1));
    }
  }

  TEST_CASE("isotropic gaussians: equality cases") {
    // N(0, I): every relation is tight
    const Density g = standard_gaussian(2);
    for (const auto& name : inequality_names()) {
      if (name == "hwi_jump") continue;
      for (const auto& rep : run_check(name, g, g, 0.5)) CHECK_MESSAGE(std::abs(rep.deficit) < 1e-10, rep.name);
    }
    // N(0, aI): the EPI-type relations stay tight, the LSI-type ones do not
    for (double a : {0.5, 3.0}) {
      const Density x = g0(a * Mat::Identity(2, 2));
      for (const char* name : {"epi", "fii", "sandwich", "reverse_epi", "reverse_fii", "stam_submult", "three_epi", "concavity"})
        for (const auto& rep : run_check(name, x, x, 0.3)) {
          if (rep.name == "sandwich_lower") continue;
          CHECK_MESSAGE(std::abs(rep.deficit) < 1e-10, rep.name);
        }
      const double dl = lsi_deficit(x).value;
      CHECK(dl > 0.0);
      CHECK(interpolation_deficit(x, x, 0.3).deficit == doctest::Approx(dl).epsilon(1e-12));
      CHECK(sandwich_check(x, x).first.deficit == doctest::Approx(dl).epsilon(1e-12));
    }
    // sums of different isotropic gaussians are still tight for the reverse forms
    const Density x = g0(0.5 * Mat::Identity(1, 1)), y = g0(2.0 * Mat::Identity(1, 1));
    CHECK(std::abs(reverse_epi_deficit(x, y).first.deficit) < 1e-12);
    CHECK(std::abs(reverse_epi_deficit(x, y).second.deficit) < 1e-12);
    CHECK(std::abs(reverse_fii_deficit(x, y).first.deficit) < 1e-12);
    CHECK(std::abs(stam_submult_deficit(x, y).deficit) < 1e-12);
  }

  TEST_CASE("the rho = 0.5 example") {
    const double rho = 0.5;
    const Density x = g0(corr(rho)), y = g0(corr(-rho));
    CHECK(fii_deficit(x, y, 0.5).deficit == doctest::Approx(2 * rho * rho / (1 - rho * rho)).epsilon(1e-12));
    CHECK(epi_deficit(x, y, 0.5).deficit == doctest::Approx(-0.5 * std::log(1 - rho * rho)).epsilon(1e-12));
    CHECK(std::abs(fii_deficit(x, x, 0.5).deficit) < 1e-14);
    CHECK(interpolation_deficit(x, y, 0.5).deficit >= 0.0);
    CHECK(conv_lsi_deficit(x, x, 0.5).deficit >= 0.0);
    const auto [lo, up] = sandwich_check(x, y);
    CHECK(lo.deficit >= 0.0);
    CHECK(up.deficit >= 0.0);
  }

  TEST_CASE("endpoints and translation invariance") {
    const Density x = bump(-1.0, 0.5, 1.0, 0.7), y = bump(-0.5, 0.3, 2.0, 1.1, 0.3);
    CHECK(std::abs(epi_deficit(x, y, 0.0).deficit) < 1e-12);
    CHECK(std::abs(epi_deficit(x, y, 1.0).deficit) < 1e-12);
    Vec mu(1);
    mu << 2.0;
    const Density xs = gaussian(mu, Mat::Identity(1, 1)), xc = standard_gaussian(1);
    CHECK(conv_lsi_deficit(xs, xs, 0.5).deficit == doctest::Approx(conv_lsi_deficit(xc, xc, 0.5).deficit));
  }

  TEST_CASE("reverse fii needs finite fisher information") {
    const Density x = bump(-1.0, 0.5, 1.0, 0.5);
    const Density g = discretize(*x.mixture(), 14.0, 4096);
    // a hard-edged box has infinite Fisher information
    std::vector<double> v(1001, 1.0);
    const Density box(GridDensity(1, {-0.5}, {0.001}, {1001}, v));
    bool raised = false;
    try {
      reverse_fii_deficit(box, g);
    } catch (const Error& e) {
      raised = e.kind() == ErrorKind::PreconditionViolated;
    }
    CHECK(raised);
  }

  TEST_CASE("mixture pairs: deficits within 3 errors, fii form agrees") {
    oracle::Rng r(41);
    for (int k = 0; k < 15; ++k) {
      const Density x = oracle::random_mixture(r, 1, r.integer(1, 3)), y = oracle::random_mixture(r, 1, r.integer(1, 3));
      const double th = r.uniform();
      for (const auto& name : inequality_names()) {
        if (name == "talagrand" || name == "hwi" || name == "w2_convolution" || name == "hwi_jump") continue;
        for (const auto& rep : run_check(name, x, y, th, {}, 0.7)) CHECK_MESSAGE(rep.within(), rep.name);
      }
      const auto a = interpolation_deficit(x, y, th), b = fii_form_deficit(x, y, th);
      CHECK(std::abs(a.deficit - b.deficit) <= 3.0 * std::hypot(a.err, b.err) + 1e-12);
    }
  }

  TEST_CASE("three epi: equality at X = Y = N(0, I), t = 1 and large t sign") {
    CHECK(std::abs(three_epi_deficit(standard_gaussian(2), standard_gaussian(2), 1.0).deficit) < 1e-12);
    const Density x = bump(-1.0, 0.4, 1.5, 0.6);
    CHECK(three_epi_deficit(x, standard_gaussian(1), 1000.0).within());
  }

  TEST_CASE("concavity and the de Bruijn slope") {
    const ConcavityResult g = concavity_check(standard_gaussian(1), {0.1, 1.0, 5.0});
    for (const auto& rep : g.reports) CHECK(std::abs(rep.deficit) < 1e-12);
    const Density x = bump(-1.2, 0.4, 1.0, 0.9, 0.3);
    std::vector<double> ts;
    for (int i = 1; i <= 10; ++i) ts.push_back(0.1 * i);
    const ConcavityResult c = concavity_check(x, ts);
    CHECK(c.slope_matches);
    CHECK(std::abs(c.slope.value - c.stam.value) <= 1e-3);
    for (std::size_t i = 0; i < c.reports.size(); ++i) {
      CHECK(c.reports[i].within());
      if (i > 0) CHECK(c.reports[i].deficit >= c.reports[i - 1].deficit - 3.0 * c.reports[i].err);
    }
  }

  TEST_CASE("hwi jump") {
    const StabilityReport v = hwi_jump_check(standard_gaussian(2));
    CHECK(v.vacuous);
    const StabilityReport rho = hwi_jump_check(g0(corr(0.5)));
    CHECK(!rho.vacuous);
    CHECK(std::abs(rho.eps_fisher) < 1e-12);
    CHECK(rho.conclusion.within());
    const StabilityReport m = hwi_jump_check(bump(-2.0, 0.3, 2.0, 0.3));
    CHECK(m.eps > 0.0);
    CHECK(m.conclusion.within());
  }

  TEST_CASE("run_check rejects unknown names") {
    bool raised = false;
    try {
      run_check("nope", standard_gaussian(1), standard_gaussian(1), 0.5);
    } catch (const Error& e) {
      raised = e.kind() == ErrorKind::InvalidConfig;
    }
    CHECK(raised);
  }
}
