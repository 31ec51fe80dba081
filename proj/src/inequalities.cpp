#include "deficitlab/inequalities.hpp"

#include "deficitlab/error.hpp"
#include "deficitlab/seed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace deficit {

namespace {

constexpr double kTwoPiE = 2.0 * std::numbers::pi * std::numbers::e;

// Seeds for the roles a density plays in one check, so Monte Carlo
// estimates of different laws are independent.
enum Role : std::uint64_t { RoleX = 1, RoleY, RoleZ, RoleXW, RoleYW, RoleXYW, RoleHat };

FunctionalCatalog eval(const Density& x, const CheckSettings& st, std::uint64_t role, std::uint64_t extra = 0) {
  EstimatorSettings e = st.estimator;
  e.seed = derive_seed(st.estimator.seed, {role, extra});
  return catalog(x, e);
}

Density merge_if_mixture(Density d) {
  if (const auto* m = d.mixture()) return m->merged();
  return d;
}

// make_report combines the two sides' errors as if independent; when the
// sides share inputs the error of the deficit is known better from the
// inputs themselves.
DeficitReport build(std::string name, const Estimate& lhs, const Estimate& rhs, double deficit_err,
                    std::map<std::string, double> params = {}) {
  DeficitReport r = make_report(std::move(name), lhs, rhs, std::move(params));
  if (std::isfinite(r.deficit)) reassess(r, deficit_err);
  return r;
}

double err_of(std::initializer_list<std::pair<double, Estimate>> terms) { return linear(terms).error; }

double power(double h, double d) { return std::exp(2.0 * h / d) / kTwoPiE; }

struct Pair {
  Density x, y;
  FunctionalCatalog cx, cy;
};

Pair centered_pair(const Density& x, const Density& y, const CheckSettings& st, bool do_center = true) {
  if (x.dim() != y.dim()) throw Error(ErrorKind::InvalidPair, "densities have different dimensions");
  Density xc = do_center ? center(x) : x;
  Density yc = do_center ? center(y) : y;
  FunctionalCatalog cx = eval(xc, st, RoleX), cy = eval(yc, st, RoleY);
  return {std::move(xc), std::move(yc), cx, cy};
}

void check_theta(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw Error(ErrorKind::InvalidScale, "theta must lie in [0, 1]");
}

}  // namespace

std::vector<double> default_theta_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 10; ++k) g.push_back(k / 10.0);
  return g;
}

Density mix(const Density& x, const Density& y, double theta, const ConvolveOptions& opts) {
  return merge_if_mixture(convolve(x, y, theta, opts));
}

DeficitReport epi_deficit(const Density& x, const Density& y, double theta, const CheckSettings& st) {
  check_theta(theta);
  const Pair p = centered_pair(x, y, st);
  const FunctionalCatalog cz = eval(mix(p.x, p.y, theta, st.convolve), st, RoleZ);
  const Estimate rhs = linear({{theta, p.cx.rel_entropy}, {1.0 - theta, p.cy.rel_entropy}});
  return make_report("epi", cz.rel_entropy, rhs, {{"theta", theta}});
}

DeficitReport fii_deficit(const Density& x, const Density& y, double theta, const CheckSettings& st) {
  check_theta(theta);
  const Pair p = centered_pair(x, y, st);
  const FunctionalCatalog cz = eval(mix(p.x, p.y, theta, st.convolve), st, RoleZ);
  const Estimate rhs = linear({{theta, p.cx.rel_fisher}, {1.0 - theta, p.cy.rel_fisher}});
  return make_report("fii", cz.rel_fisher, rhs, {{"theta", theta}});
}

DeficitReport interpolation_deficit(const Density& x, const Density& y, double theta, const CheckSettings& st) {
  check_theta(theta);
  const Pair p = centered_pair(x, y, st);
  const FunctionalCatalog cz = eval(mix(p.x, p.y, theta, st.convolve), st, RoleZ);
  const double tb = 1.0 - theta;
  const Estimate lhs = linear({{1.0, p.cx.rel_entropy}, {1.0, p.cy.rel_entropy}});
  const Estimate rhs = linear({{0.5 * tb, p.cx.rel_fisher}, {0.5 * theta, p.cy.rel_fisher}, {1.0, cz.rel_entropy}});
  return make_report("interpolation", lhs, rhs, {{"theta", theta}});
}

DeficitReport fii_form_deficit(const Density& x, const Density& y, double theta, const CheckSettings& st) {
  check_theta(theta);
  const Pair p = centered_pair(x, y, st);
  const FunctionalCatalog cz = eval(mix(p.x, p.y, theta, st.convolve), st, RoleZ);
  const double tb = 1.0 - theta;
  const Estimate lhs = linear({{1.0, cz.lsi_deficit}, {0.5 * theta, p.cx.rel_fisher}, {0.5 * tb, p.cy.rel_fisher}});
  const Estimate rhs = linear({{1.0, p.cx.lsi_deficit}, {1.0, p.cy.lsi_deficit}, {0.5, cz.rel_fisher}});
  // I(conv) sits on both sides
  const double e = err_of({{0.5 * tb, p.cx.rel_fisher},
                           {0.5 * theta, p.cy.rel_fisher},
                           {-1.0, p.cx.rel_entropy},
                           {-1.0, p.cy.rel_entropy},
                           {1.0, cz.rel_entropy}});
  return build("fii_form", lhs, rhs, e, {{"theta", theta}});
}

DeficitReport conv_lsi_deficit(const Density& x, const Density& y, double theta, const CheckSettings& st) {
  check_theta(theta);
  const Pair p = centered_pair(x, y, st, false);
  const FunctionalCatalog cz = eval(mix(p.x, p.y, theta, st.convolve), st, RoleZ);
  const Estimate rhs = linear({{1.0, p.cx.lsi_deficit}, {1.0, p.cy.lsi_deficit}});
  return make_report("conv_lsi", cz.lsi_deficit, rhs, {{"theta", theta}});
}

std::pair<DeficitReport, DeficitReport> sandwich_check(const Density& x, const Density& y, const CheckSettings& st) {
  const Pair p = centered_pair(x, y, st);
  std::vector<double> grid = st.theta_grid;
  grid.push_back(0.5);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const Estimate sum = linear({{1.0, p.cx.lsi_deficit}, {1.0, p.cy.lsi_deficit}});

  struct Level {
    double theta;
    Estimate L;
    Estimate dz;
  };
  std::vector<Level> levels;
  for (double th : grid) {
    check_theta(th);
    const FunctionalCatalog cz = eval(mix(p.x, p.y, th, st.convolve), st, RoleZ, std::uint64_t(std::llround(th * 1e6)));
    // L = th/2 I(X) + (1-th)/2 I(Y) - I(Z)/2 + dLSI(Z) = th/2 I(X) + (1-th)/2 I(Y) - D(Z)
    levels.push_back(
        {th, linear({{0.5 * th, p.cx.rel_fisher}, {0.5 * (1.0 - th), p.cy.rel_fisher}, {-1.0, cz.rel_entropy}}),
         cz.rel_entropy});
  }
  const Level* best = &levels.front();
  const Level* half = nullptr;
  for (const auto& l : levels) {
    if (l.L.value > best->L.value) best = &l;
    if (l.theta == 0.5) half = &l;
  }
  const double th = best->theta;
  const double e_lower = err_of({{0.5 * (1.0 - th), p.cx.rel_fisher},
                                 {0.5 * th, p.cy.rel_fisher},
                                 {-1.0, p.cx.rel_entropy},
                                 {-1.0, p.cy.rel_entropy},
                                 {1.0, best->dz}});
  DeficitReport lower = build("sandwich_lower", best->L, sum, e_lower, {{"theta", th}});
  const Estimate upper_rhs = linear({{2.0, half->L}});
  const double e_upper = err_of({{1.0, p.cx.rel_entropy}, {1.0, p.cy.rel_entropy}, {-2.0, half->dz}});
  DeficitReport upper = build("sandwich_upper", sum, upper_rhs, e_upper, {{"theta", 0.5}});
  return {lower, upper};
}

std::pair<DeficitReport, DeficitReport> reverse_epi_deficit(const Density& x, const Density& y,
                                                            const CheckSettings& st) {
  const Pair p = centered_pair(x, y, st, false);
  const FunctionalCatalog cz = eval(merge_if_mixture(add(p.x, p.y, st.convolve)), st, RoleZ);
  const double d = x.dim();
  const Estimate &hx = p.cx.entropy, &jx = p.cx.fisher, &hy = p.cy.entropy, &jy = p.cy.fisher, &hz = cz.entropy;
  // (N(X) + N(Y)) (lambda p(X) + (1-lambda) p(Y)) = N(Y) p(X) + N(X) p(Y)
  auto rhs_f = [d](std::span<const double> v) {
    const double nx = power(v[0], d), ny = power(v[2], d);
    return ny * nx * v[1] / d + nx * ny * v[3] / d;
  };
  const Estimate rhs = propagate(rhs_f, {hx, jx, hy, jy});
  const Estimate nz = cz.entropy_power;
  const double e = propagate([&](std::span<const double> v) { return rhs_f(v) - power(v[4], d); },
                             {hx, jx, hy, jy, hz})
                       .error;
  const double lambda = p.cy.entropy_power.value / (p.cx.entropy_power.value + p.cy.entropy_power.value);
  DeficitReport reverse = build("reverse_epi", nz, rhs, e, {{"lambda", lambda}});
  const Estimate sum = linear({{1.0, p.cx.entropy_power}, {1.0, p.cy.entropy_power}});
  DeficitReport classical = make_report("epi_classical", sum, nz, {{"lambda", lambda}});
  return {reverse, classical};
}

std::pair<DeficitReport, DeficitReport> reverse_fii_deficit(const Density& x, const Density& y,
                                                            const CheckSettings& st) {
  const Pair p = centered_pair(x, y, st, false);
  if (!p.cx.fisher.finite || !p.cy.fisher.finite)
    throw Error(ErrorKind::PreconditionViolated, "reverse FII needs finite Fisher information");
  const FunctionalCatalog cz = eval(merge_if_mixture(add(p.x, p.y, st.convolve)), st, RoleZ);
  const double d = x.dim();
  const Estimate &hx = p.cx.entropy, &jx = p.cx.fisher, &hy = p.cy.entropy, &jy = p.cy.fisher, &jz = cz.fisher;
  auto rhs_f = [d](std::span<const double> v) {
    const double px = power(v[0], d) * v[1] / d, py = power(v[2], d) * v[3] / d;
    return (1.0 / v[1] + 1.0 / v[3]) * px * py;
  };
  const Estimate rhs = propagate(rhs_f, {hx, jx, hy, jy});
  const Estimate inv_z = propagate([](std::span<const double> v) { return 1.0 / v[0]; }, {jz});
  const double e =
      propagate([&](std::span<const double> v) { return rhs_f(v) - 1.0 / v[4]; }, {hx, jx, hy, jy, jz}).error;
  const double lambda = p.cy.entropy_power.value / (p.cx.entropy_power.value + p.cy.entropy_power.value);
  DeficitReport reverse = build("reverse_fii", inv_z, rhs, e, {{"lambda", lambda}});
  const Estimate sum = propagate([](std::span<const double> v) { return 1.0 / v[0] + 1.0 / v[1]; }, {jx, jy});
  DeficitReport classical = make_report("fii_classical", sum, inv_z, {{"lambda", lambda}});
  return {reverse, classical};
}

DeficitReport stam_submult_deficit(const Density& x, const Density& y, const CheckSettings& st) {
  const Pair p = centered_pair(x, y, st, false);
  const FunctionalCatalog cz = eval(merge_if_mixture(add(p.x, p.y, st.convolve)), st, RoleZ);
  const double d = x.dim();
  auto stam = [d](double h, double j) { return power(h, d) * j / d; };
  const Estimate rhs = propagate([&](std::span<const double> v) { return stam(v[0], v[1]) * stam(v[2], v[3]); },
                                 {p.cx.entropy, p.cx.fisher, p.cy.entropy, p.cy.fisher});
  return make_report("stam_submult", cz.stam_defect, rhs);
}

DeficitReport three_epi_deficit(const Density& x, const Density& y, double t, const CheckSettings& st) {
  if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorKind::InvalidTime, "t must be positive");
  const Pair p = centered_pair(x, y, st, false);
  const FunctionalCatalog cxw = eval(heat_flow(p.x, t, st.convolve), st, RoleXW);
  const FunctionalCatalog cyw = eval(heat_flow(p.y, t, st.convolve), st, RoleYW);
  const FunctionalCatalog cxyw =
      eval(heat_flow(merge_if_mixture(add(p.x, p.y, st.convolve)), t, st.convolve), st, RoleXYW);
  const double d = x.dim();
  // N(W) = t exactly
  auto lhs_f = [d, t](std::span<const double> v) { return power(v[0], d) * power(v[1], d) + t * power(v[2], d); };
  auto rhs_f = [d](std::span<const double> v) { return power(v[0], d) * power(v[1], d); };
  const Estimate lhs = propagate(lhs_f, {p.cx.entropy, p.cy.entropy, cxyw.entropy});
  const Estimate rhs = propagate(rhs_f, {cxw.entropy, cyw.entropy});
  return make_report("three_epi", lhs, rhs, {{"t", t}});
}

ConcavityResult concavity_check(const Density& x, const std::vector<double>& t_grid, const CheckSettings& st) {
  ConcavityResult out;
  const FunctionalCatalog c0 = eval(x, st, RoleX);
  out.stam = c0.stam_defect;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const double t = t_grid[k];
    if (!(t > 0.0) || !std::isfinite(t)) throw Error(ErrorKind::InvalidTime, "t must be positive");
    const FunctionalCatalog ct = eval(heat_flow(x, t, st.convolve), st, RoleXW, k);
    const Estimate rhs = linear({{1.0, c0.entropy_power}, {t, c0.stam_defect}});
    out.reports.push_back(make_report("concavity", ct.entropy_power, rhs, {{"t", t}}));
  }

  // de Bruijn: d/dt N(X + sqrt(t) G) at t = 0 equals p(X)
  const double h = st.slope_step;
  bool central = false;
  if (const auto* m = x.mixture()) {
    central = true;
    for (std::size_t i = 0; i < m->size(); ++i) {
      const double lo = Eigen::SelfAdjointEigenSolver<Mat>(m->component(i).cov).eigenvalues().minCoeff();
      if (lo <= 2.0 * h) central = false;
    }
  }
  auto n_at = [&](double t, std::uint64_t tag) { return eval(heat_flow(x, t, st.convolve), st, RoleHat, tag).entropy_power; };
  if (central) {
    const Estimate up = n_at(h, 1), down = n_at(-h, 2);
    out.slope = linear({{0.5 / h, up}, {-0.5 / h, down}});
  } else {
    // second-order one-sided quotient
    const Estimate a = n_at(h, 1), b = n_at(2.0 * h, 3);
    out.slope = linear({{-1.5 / h, c0.entropy_power}, {2.0 / h, a}, {-0.5 / h, b}});
  }
  out.central = central;
  const double noise = std::hypot(out.slope.error, out.stam.error);
  out.slope_matches = out.slope.finite && out.stam.finite &&
                      std::abs(out.slope.value - out.stam.value) <= st.slope_tolerance + 3.0 * noise;
  return out;
}

StabilityReport hwi_jump_check(const Density& x, const CheckSettings& st) {
  StabilityReport out;
  const Density xc = center(x);
  const Density xh = mix(xc, xc, 0.5, st.convolve);
  const FunctionalCatalog c = eval(xc, st, RoleX), ch = eval(xh, st, RoleHat);
  const Estimate &D = c.rel_entropy, &I = c.rel_fisher, &Dh = ch.rel_entropy, &Ih = ch.rel_fisher;
  if (!I.finite) throw Error(ErrorKind::PreconditionViolated, "stability check needs finite I(X)");

  const bool degenerate = D.value <= 3.0 * D.error || I.value <= 3.0 * I.error;
  if (degenerate) {
    out.vacuous = true;
    out.binding = "none";
    out.conclusion = make_report("hwi_jump", Estimate::closed(0.0), c.lsi_deficit, {{"eps", 0.0}});
    return out;
  }
  const Estimate W = w2_to_gaussian(xc, st.transport).distance();
  TransportSettings th = st.transport;
  th.ot.seed = derive_seed(st.transport.ot.seed, {RoleHat});
  const Estimate Wh = w2_to_gaussian(xh, th).distance();

  out.eps_entropy = 1.0 - Dh.value / D.value;
  out.eps_fisher = 1.0 - Ih.value / I.value;
  out.eps_transport = W.value > 0.0 ? std::pow(1.0 - Wh.value / W.value, 2) : 0.0;
  out.eps = std::max({0.0, out.eps_entropy, out.eps_transport, out.eps_fisher});

  // the conclusion (eps/4) I(X) <= I(X)/2 - D(X), written in the inputs of
  // whichever condition is binding
  Estimate lhs, rhs;
  double e = 0.0;
  auto delta = [](std::span<const double> v) { return 0.5 * v[1] - v[0]; };
  if (out.eps == 0.0) {
    out.binding = "none";
    lhs = Estimate::closed(0.0);
    rhs = c.lsi_deficit;
    e = rhs.error;
  } else if (out.eps == out.eps_fisher) {
    out.binding = "fisher";
    auto l = [](std::span<const double> v) { return 0.25 * (v[1] - v[2]); };
    lhs = propagate(l, {D, I, Ih});
    rhs = propagate(delta, {D, I});
    e = propagate([&](std::span<const double> v) { return delta(v) - l(v); }, {D, I, Ih}).error;
  } else if (out.eps == out.eps_entropy) {
    out.binding = "entropy";
    auto l = [](std::span<const double> v) { return 0.25 * (1.0 - v[2] / v[0]) * v[1]; };
    lhs = propagate(l, {D, I, Dh});
    rhs = propagate(delta, {D, I});
    e = propagate([&](std::span<const double> v) { return delta(v) - l(v); }, {D, I, Dh}).error;
  } else {
    out.binding = "transport";
    auto l = [](std::span<const double> v) { return 0.25 * std::pow(1.0 - v[3] / v[2], 2) * v[1]; };
    lhs = propagate(l, {D, I, W, Wh});
    rhs = propagate(delta, {D, I});
    e = propagate([&](std::span<const double> v) { return delta(v) - l(v); }, {D, I, W, Wh}).error;
  }
  out.conclusion = build("hwi_jump", lhs, rhs, e, {{"eps", out.eps}});
  return out;
}

const std::vector<std::string>& inequality_names() {
  static const std::vector<std::string> names{
      "epi",        "fii",        "interpolation", "fii_form", "conv_lsi",  "sandwich",    "reverse_epi",
      "reverse_fii", "stam_submult", "three_epi",  "concavity", "hwi_jump", "talagrand", "hwi",
      "w2_convolution"};
  return names;
}

std::vector<DeficitReport> run_check(const std::string& name, const Density& x, const Density& y, double theta,
                                     const CheckSettings& st, double t) {
  auto two = [](std::pair<DeficitReport, DeficitReport> p) { return std::vector<DeficitReport>{p.first, p.second}; };
  if (name == "epi") return {epi_deficit(x, y, theta, st)};
  if (name == "fii") return {fii_deficit(x, y, theta, st)};
  if (name == "interpolation") return {interpolation_deficit(x, y, theta, st)};
  if (name == "fii_form") return {fii_form_deficit(x, y, theta, st)};
  if (name == "conv_lsi") return {conv_lsi_deficit(x, y, theta, st)};
  if (name == "sandwich") return two(sandwich_check(x, y, st));
  if (name == "reverse_epi") return two(reverse_epi_deficit(x, y, st));
  if (name == "reverse_fii") return two(reverse_fii_deficit(x, y, st));
  if (name == "stam_submult") return {stam_submult_deficit(x, y, st)};
  if (name == "three_epi") return {three_epi_deficit(x, y, t, st)};
  if (name == "concavity") return concavity_check(x, {t}, st).reports;
  if (name == "hwi_jump") return {hwi_jump_check(x, st).conclusion};
  if (name == "talagrand") return {talagrand_deficit(x, st.transport)};
  if (name == "hwi") return {hwi_deficit(x, st.transport)};
  if (name == "w2_convolution") return {w2_convolution_deficit(x, y, theta, st.transport, st.convolve)};
  throw Error(ErrorKind::InvalidConfig, "unknown inequality '" + name + "'");
}

}  // namespace deficit
