#include "deficitlab/error.hpp"
#include "deficitlab/hyper.hpp"

#include <doctest.h>

#include <cmath>

using namespace deficit;

namespace {

TestFunction loglin(double a, double c = 1.0) {
  Vec v(1);
  v << a;
  return TestFunction(LogLinear{v, c});
}

TestFunction wave() {
  return TestFunction::sampled([](double x) { return 1.0 + 0.5 * std::sin(x); }, -12.0, 12.0, 1025);
}
TestFunction bump() {
  return TestFunction::sampled([](double x) { return 1.0 + 0.8 * std::exp(-x * x); }, -12.0, 12.0, 2049);
}
TestFunction ramp() {
  return TestFunction::sampled([](double x) { return 1.0 + 0.6 * std::tanh(x - 0.5); }, -12.0, 12.0, 2049);
}

}  // namespace

TEST_SUITE("hyper") {
  TEST_CASE("q(t)") {
    CHECK(hyper_q(2.0, 0.0) == 2.0);
    CHECK(hyper_q(3.0, 0.5) == doctest::Approx(1.0 + 2.0 * std::exp(1.0)));
  }

  TEST_CASE("ou_apply on log-linear functions is closed form") {
    for (double a : {-1.5, 0.3, 2.0})
      for (double t : {0.0, 0.1, 1.0}) {
        const TestFunction g = ou_apply(loglin(a, 1.7), t);
        REQUIRE(g.log_linear());
        CHECK(g.log_linear()->a[0] == doctest::Approx(a * std::exp(-t)).epsilon(1e-15));
        CHECK(g.log_linear()->c == doctest::Approx(1.7 * std::exp(a * a * (1 - std::exp(-2 * t)) / 2)).epsilon(1e-14));
      }
    // the long-time limit is the gamma mean e^{a^2/2}
    const TestFunction inf = ou_apply(loglin(0.8), 40.0);
    CHECK(inf(3.0) == doctest::Approx(std::exp(0.32)).epsilon(1e-12));
    bool raised = false;
    try {
      ou_apply(loglin(1.0), -0.1);
    } catch (const Error& e) {
      raised = e.kind() == ErrorKind::InvalidTime;
    }
    CHECK(raised);
  }

  TEST_CASE("ou_apply on a grid: Mehler oracle, semigroup law, t = 0") {
    const TestFunction f = wave();
    const TestFunction same = ou_apply(f, 0.0);
    for (double x = -4.0; x <= 4.0; x += 0.37) CHECK(std::abs(same(x) - f(x)) < 1e-12);
    const TestFunction a = ou_apply(ou_apply(f, 0.2), 0.3), b = ou_apply(f, 0.5);
    const double damp = std::exp(-(1 - std::exp(-1.0)) / 2);
    for (double x = -4.0; x <= 4.0; x += 0.37) {
      CHECK(std::abs(a(x) - b(x)) < 1e-8);
      CHECK(std::abs(b(x) - (1.0 + 0.5 * std::sin(std::exp(-0.5) * x) * damp)) < 1e-8);
    }
  }

  TEST_CASE("L^q(gamma) norms") {
    CHECK(lq_gamma_norm(TestFunction::constant(2.5), 3.0).value == doctest::Approx(2.5).epsilon(1e-15));
    for (double a : {0.5, 1.0})
      for (double q : {1.0, 2.0, 3.5}) CHECK(lq_gamma_norm(loglin(a), q).value == doctest::Approx(std::exp(a * a * q / 2)));
    const TestFunction e = TestFunction::sampled([](double x) { return std::exp(x); }, -12.0, 12.0, 2049);
    for (double q : {1.0, 2.0}) CHECK(std::abs(lq_gamma_norm(e, q).value - std::exp(q / 2)) < 1e-6);
    // mass is conserved by the semigroup
    const TestFunction f = wave();
    for (double t : {0.1, 0.5, 2.0}) CHECK(std::abs(lq_gamma_norm(ou_apply(f, t), 1.0).value - 1.0) < 1e-8);
  }

  TEST_CASE("nelson: log-linear extremals and suite functions") {
    for (double a : {-1.0, 0.4, 1.3})
      for (double p : {1.5, 2.0, 4.0})
        for (double t : {0.1, 0.5, 1.0}) CHECK(std::abs(nelson_check(loglin(a), p, t).deficit) < 1e-10);
    CHECK(std::abs(nelson_check(TestFunction::constant(3.0), 2.0, 0.7).deficit) < 1e-12);
    for (const TestFunction& f : {bump(), ramp(), wave()})
      for (double t : {0.1, 0.25, 0.5, 1.0}) {
        const DeficitReport r = nelson_check(f, 2.0, t);
        CHECK(r.within());
        CHECK(r.deficit > 0.0);
      }
  }

  TEST_CASE("gross derivative") {
    const GrossDerivative c = gross_derivative_check(TestFunction::constant(2.0), 2.0);
    CHECK(std::abs(c.analytic.value) < 1e-12);
    const GrossDerivative l = gross_derivative_check(loglin(0.7), 3.0);
    CHECK(std::abs(l.analytic.value) < 1e-10);
    CHECK(std::abs(l.finite_difference.value) < 1e-6);
    CHECK(l.agrees);
    for (const TestFunction& f : {bump(), ramp()}) {
      const GrossDerivative g = gross_derivative_check(f, 2.0);
      CHECK(g.agrees);
      CHECK(std::abs(g.analytic.value - g.finite_difference.value) <=
            1e-4 + 3.0 * std::hypot(g.analytic.error, g.finite_difference.error));
      CHECK(g.analytic.value < 0.0);
      CHECK(g.sign.within());
    }
  }

  TEST_CASE("entropy production") {
    CHECK(std::abs(entropy_production(loglin(0.5), loglin(-1.0), 2.0, 0.5).value) < 1e-10);
    const Estimate e = entropy_production(bump(), ramp(), 2.0, 0.5);
    CHECK(e.value > 3.0 * e.error);
    // f = g: the EPI deficit of the centered tilted law with itself
    const HyperSettings st;
    const Density x = center(tilted_law(bump(), 2.0, st));
    const Estimate s = entropy_production(bump(), bump(), 2.0, 0.3, st);
    CHECK(s.value == doctest::Approx(epi_deficit(x, x, 0.3, st.check).deficit).epsilon(1e-9).scale(1));
  }

  TEST_CASE("improved nelson derivative form") {
    const ImprovedNelson c = improved_nelson_check(TestFunction::constant(1.0), TestFunction::constant(1.0), 2.0, 0.5, {0.1});
    CHECK(std::abs(c.derivative.deficit) < 1e-10);
    const ImprovedNelson l = improved_nelson_check(loglin(0.6), loglin(-0.4), 2.0, 0.5, {0.05, 0.1});
    CHECK(std::abs(l.derivative.lhs.value) < 1e-6);
    CHECK(std::abs(l.derivative.rhs.value) < 1e-10);
    CHECK(l.derivative.within());
    const ImprovedNelson g = improved_nelson_check(bump(), ramp(), 2.0, 0.5, {0.05, 0.1, 0.25});
    CHECK(g.derivative.within());
    CHECK(g.rows.size() == 3);
    CHECK(g.production.value > 0.0);
  }

  TEST_CASE("invalid functions") {
    auto kind = [](auto&& fn) {
      try {
        fn();
      } catch (const Error& e) {
        return e.kind();
      }
      return ErrorKind::Unsupported;
    };
    CHECK(kind([] { TestFunction(GridFn{0.0, 0.1, {0, 0, 0, 0, 0}}); }) == ErrorKind::InvalidFunction);
    CHECK(kind([] { TestFunction(GridFn{0.0, 0.1, {1, -1, 1, 1, 1}}); }) == ErrorKind::InvalidFunction);
  }
}
