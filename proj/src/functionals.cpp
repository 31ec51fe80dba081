#include "deficitlab/functionals.hpp"

#include "deficitlab/error.hpp"
#include "deficitlab/kernels.hpp"
#include "deficitlab/quadrature.hpp"
#include "deficitlab/seed.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

namespace deficit {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kTwoPiE = 2.0 * std::numbers::pi * std::numbers::e;

// Per-sample integrands, in this order:
//   0: -log f          (entropy)
//   1: |grad log f|^2  (Fisher)
//   2: log f - log g_s (relative entropy)
//   3: |grad log f + x/s|^2 (relative Fisher)
using Cov4 = std::array<std::array<double, 4>, 4>;

struct Raw {
  int dim = 1;
  double s = 1.0;
  Estimate h, J, D, I;
  double second_moment = 0.0;
  // covariance of the four Monte Carlo sample means, when applicable
  std::optional<Cov4> mean_cov;
};

double log_gs(std::span<const double> x, double s) {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  return -0.5 * double(x.size()) * (kLog2Pi + std::log(s)) - 0.5 * r2 / s;
}

void integrands(const GaussianMixture& m, std::span<const double> x, double s, double* score, double out[4]) {
  const int d = m.dim();
  const double lf = m.log_density_and_score(x, std::span<double>(score, std::size_t(d)));
  double b = 0.0, e = 0.0;
  for (int i = 0; i < d; ++i) {
    b += score[i] * score[i];
    const double r = score[i] + x[i] / s;
    e += r * r;
  }
  out[0] = -lf;
  out[1] = b;
  out[2] = lf - log_gs(x, s);
  out[3] = e;
}

Raw gaussian_closed(const GaussianMixture& m, double s) {
  const int d = m.dim();
  const auto& c = m.component(0);
  const double ld = m.log_det(0);
  const double tr = c.cov.trace(), trinv = m.precision(0).trace(), mu2 = c.mean.squaredNorm();
  Raw r;
  r.dim = d;
  r.s = s;
  r.h = Estimate::closed(0.5 * (d * (kLog2Pi + 1.0) + ld));
  r.J = Estimate::closed(trinv);
  r.D = Estimate::closed(0.5 * (tr / s + mu2 / s - d + d * std::log(s) - ld));
  r.I = Estimate::closed(tr / (s * s) - 2.0 * d / s + trinv + mu2 / (s * s));
  r.second_moment = tr + mu2;
  return r;
}

std::optional<Raw> quadrature_1d(const GaussianMixture& m, double s, const EstimatorSettings& st) {
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
  std::array<QuadratureResult, 4> res;
  for (int k = 0; k < 4; ++k) {
    auto f = [&](double x) {
      double score, out[4];
      integrands(m, std::span<const double>(&x, 1), s, &score, out);
      const double fx = std::exp(-out[0]);
      return fx == 0.0 ? 0.0 : fx * out[k];
    };
    res[k] = integrate_1d(f, breaks, st.abs_tol);
    if (!res[k].converged) return std::nullopt;
  }
  Raw r;
  r.dim = 1;
  r.s = s;
  r.h = Estimate::quadrature(res[0].value, res[0].error);
  r.J = Estimate::quadrature(res[1].value, res[1].error);
  r.D = Estimate::quadrature(res[2].value, res[2].error);
  r.I = Estimate::quadrature(res[3].value, res[3].error);
  r.second_moment = moments(Density(m)).second_moment();
  return r;
}

std::optional<Raw> quadrature_2d(const GaussianMixture& m, double s, const EstimatorSettings& st) {
  double lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double hi[2] = {-lo[0], -lo[1]};
  double h0 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m.size(); ++k) {
    const auto& c = m.component(k);
    for (int a = 0; a < 2; ++a) {
      const double sd = std::sqrt(c.cov(a, a));
      lo[a] = std::min(lo[a], c.mean[a] - 13.0 * sd);
      hi[a] = std::max(hi[a], c.mean[a] + 13.0 * sd);
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(c.cov, Eigen::EigenvaluesOnly);
    h0 = std::min(h0, 0.5 * std::sqrt(eig.eigenvalues()[0]));
  }
  auto f = [&](double x, double y, double* out) {
    const double p[2] = {x, y};
    double score[2], v[4];
    integrands(m, std::span<const double>(p, 2), s, score, v);
    const double fx = std::exp(-v[0]);
    for (int k = 0; k < 4; ++k) out[k] = fx == 0.0 ? 0.0 : fx * v[k];
  };
  TensorResult t = integrate_box_2d(f, 4, lo, hi, h0, st.abs_tol, st.tensor_max_points);
  if (!t.converged) return std::nullopt;
  Raw r;
  r.dim = 2;
  r.s = s;
  r.h = Estimate::quadrature(t.values[0], t.errors[0]);
  r.J = Estimate::quadrature(t.values[1], t.errors[1]);
  r.D = Estimate::quadrature(t.values[2], t.errors[2]);
  r.I = Estimate::quadrature(t.values[3], t.errors[3]);
  r.second_moment = moments(Density(m)).second_moment();
  return r;
}

Raw monte_carlo(const GaussianMixture& m, double s, const EstimatorSettings& st) {
  const int d = m.dim();
  const std::size_t n = std::max<std::size_t>(st.mc_samples, 2);
  constexpr std::size_t kChunk = std::size_t(1) << 16;
  std::array<double, 4> shift{}, s1{};
  Cov4 s2{};
  bool have_shift = false;
  const Density law(m);
  Mat draw;
  std::vector<double> pts, logf, score;
  for (std::size_t start = 0, chunk = 0; start < n; start += kChunk, ++chunk) {
    const std::size_t len = std::min(kChunk, n - start);
    draw.resize(long(len), d);
    draw_into(law, derive_seed(st.seed, {0x6d63ULL, chunk}), draw);
    pts.resize(len * std::size_t(d));
    for (std::size_t i = 0; i < len; ++i)
      for (int j = 0; j < d; ++j) pts[i * std::size_t(d) + std::size_t(j)] = draw(long(i), j);
    logf.resize(len);
    score.resize(len * std::size_t(d));
    kernels::mixture_eval({m, pts, logf, score});
    for (std::size_t i = 0; i < len; ++i) {
      const double* x = &pts[i * std::size_t(d)];
      const double* g = &score[i * std::size_t(d)];
      double b = 0.0, e = 0.0, r2 = 0.0;
      for (int j = 0; j < d; ++j) {
        b += g[j] * g[j];
        const double q = g[j] + x[j] / s;
        e += q * q;
        r2 += x[j] * x[j];
      }
      const double lg = -0.5 * d * (kLog2Pi + std::log(s)) - 0.5 * r2 / s;
      const std::array<double, 4> v = {-logf[i], b, logf[i] - lg, e};
      if (!have_shift) {
        shift = v;
        have_shift = true;
      }
      std::array<double, 4> c;
      for (int k = 0; k < 4; ++k) c[k] = v[k] - shift[k];
      for (int k = 0; k < 4; ++k) {
        s1[k] += c[k];
        for (int l = 0; l < 4; ++l) s2[k][l] += c[k] * c[l];
      }
    }
  }
  const double nn = double(n);
  Cov4 cov{};
  std::array<double, 4> mean;
  for (int k = 0; k < 4; ++k) mean[k] = shift[k] + s1[k] / nn;
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) cov[k][l] = (s2[k][l] - s1[k] * s1[l] / nn) / (nn - 1.0) / nn;
  Raw r;
  r.dim = d;
  r.s = s;
  r.h = Estimate::monte_carlo(mean[0], std::sqrt(std::max(0.0, cov[0][0])));
  r.J = Estimate::monte_carlo(mean[1], std::sqrt(std::max(0.0, cov[1][1])));
  r.D = Estimate::monte_carlo(mean[2], std::sqrt(std::max(0.0, cov[2][2])));
  r.I = Estimate::monte_carlo(mean[3], std::sqrt(std::max(0.0, cov[3][3])));
  r.second_moment = moments(law).second_moment();
  r.mean_cov = cov;
  return r;
}

// ---------------------------------------------------------------------------
// grid path

struct GridView {
  const GridDensity& g;
  std::size_t n0, n1;  // n1 = 1 in d = 1

  explicit GridView(const GridDensity& grid)
      : g(grid), n0(grid.counts()[0]), n1(grid.dim() == 2 ? grid.counts()[1] : 1) {}

  double f(std::size_t i, std::size_t j) const { return g.values()[i * n1 + j]; }
};

// Trapezoid sum over the subgrid of every `stride`-th node.
template <class F>
double grid_sum(const GridView& v, std::size_t stride, F&& fn) {
  const int d = v.g.dim();
  const std::size_t m0 = (v.n0 - 1) / stride + 1, m1 = d == 2 ? (v.n1 - 1) / stride + 1 : 1;
  double cell = 1.0;
  for (int a = 0; a < d; ++a) cell *= v.g.spacing()[a] * double(stride);
  double acc = 0.0;
  for (std::size_t i = 0; i < m0; ++i) {
    const double wx = (i == 0 || i + 1 == m0) ? 0.5 : 1.0;
    for (std::size_t j = 0; j < m1; ++j) {
      const double wy = d == 2 ? ((j == 0 || j + 1 == m1) ? 0.5 : 1.0) : 1.0;
      acc += wx * wy * fn(i * stride, j * stride);
    }
  }
  return acc * cell;
}

double grid_entropy(const GridView& v, std::size_t stride) {
  return grid_sum(v, stride, [&](std::size_t i, std::size_t j) {
    const double f = v.f(i, j);
    return f > 0.0 ? -f * std::log(std::max(f, kDensityFloor)) : 0.0;
  });
}

double grid_second_moment(const GridView& v, std::size_t stride) {
  const double mass = grid_sum(v, stride, [&](std::size_t i, std::size_t j) { return v.f(i, j); });
  const double m2 = grid_sum(v, stride, [&](std::size_t i, std::size_t j) {
    double r2 = 0.0;
    const double x = v.g.coord(0, i);
    r2 += x * x;
    if (v.g.dim() == 2) {
      const double y = v.g.coord(1, j);
      r2 += y * y;
    }
    return v.f(i, j) * r2;
  });
  return m2 / mass;
}

// Fisher information with difference step k nodes; one-sided at edges.
double grid_fisher(const GridView& v, std::size_t k) {
  const int d = v.g.dim();
  auto deriv = [&](std::size_t i, std::size_t j, int axis) {
    const std::size_t n = axis == 0 ? v.n0 : v.n1;
    const std::size_t idx = axis == 0 ? i : j;
    const double h = v.g.spacing()[axis];
    auto at = [&](std::size_t q) { return axis == 0 ? v.f(q, j) : v.f(i, q); };
    if (idx >= k && idx + k < n) return (at(idx + k) - at(idx - k)) / (2.0 * double(k) * h);
    if (idx + k < n) return (at(idx + k) - at(idx)) / (double(k) * h);
    if (idx >= k) return (at(idx) - at(idx - k)) / (double(k) * h);
    return 0.0;
  };
  return grid_sum(v, 1, [&](std::size_t i, std::size_t j) {
    const double f = v.f(i, j);
    if (!(f > kDensityFloor)) return 0.0;
    double g2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const double g = deriv(i, j, a);
      g2 += g * g;
    }
    return g2 / f;
  });
}

// The grid is the whole support, so a boundary value that has not decayed
// is a jump to zero and J is infinite.
bool edge_jump(const GridView& v) {
  double peak = 0.0, edge = 0.0;
  for (std::size_t i = 0; i < v.n0; ++i)
    for (std::size_t j = 0; j < v.n1; ++j) {
      const double f = v.f(i, j);
      peak = std::max(peak, f);
      const bool boundary = i == 0 || i + 1 == v.n0 || (v.g.dim() == 2 && (j == 0 || j + 1 == v.n1));
      if (boundary) edge = std::max(edge, f);
    }
  return edge > 1e-4 * peak;
}

Raw grid_functionals(const GridDensity& g, double s) {
  const GridView v(g);
  const int d = g.dim();
  const double slack = g.renormalization() + g.truncated_mass();
  const double h1 = grid_entropy(v, 1), h2 = grid_entropy(v, 2);
  const double j1 = grid_fisher(v, 1), j2 = grid_fisher(v, 2);
  const double m1 = grid_second_moment(v, 1), m2 = grid_second_moment(v, 2);
  const double jr = (4.0 * j1 - j2) / 3.0;
  Raw r;
  r.dim = d;
  r.s = s;
  r.h = Estimate::quadrature(h1, std::abs(h1 - h2) + slack * (1.0 + std::abs(h1)));
  r.J = edge_jump(v) ? Estimate::infinite(Method::Quadrature)
                     : Estimate::quadrature(jr, std::abs(j1 - j2) / 3.0 + slack * (1.0 + jr));
  const Estimate m2e = Estimate::quadrature(m1, std::abs(m1 - m2) + slack * (1.0 + m1));
  r.D = linear({{-1.0, r.h}, {0.5 / s, m2e}}, 0.5 * d * (kLog2Pi + std::log(s)));
  r.I = linear({{1.0, r.J}, {1.0 / (s * s), m2e}}, -2.0 * d / s);
  r.second_moment = m1;
  return r;
}

Raw raw_functionals(const Density& x, double s, const EstimatorSettings& st) {
  if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorKind::InvalidScale, "reference variance must be positive");
  if (x.samples())
    throw Error(ErrorKind::UnsupportedEstimator, "entropy and Fisher information are not estimated from raw samples");
  if (const auto* g = x.grid()) return grid_functionals(*g, s);
  const auto& m = *x.mixture();
  using P = EstimatorSettings::Prefer;
  if (st.prefer != P::MonteCarlo) {
    if (m.is_gaussian()) return gaussian_closed(m, s);
    if (m.dim() == 1) {
      if (auto r = quadrature_1d(m, s, st)) return *r;
    } else if (m.dim() == 2) {
      if (auto r = quadrature_2d(m, s, st)) return *r;
    }
  }
  return monte_carlo(m, s, st);
}

Estimate power_of(const Raw& r) {
  const double d = r.dim;
  return transform(
      r.h, [d](double h) { return std::exp(2.0 * h / d) / kTwoPiE; },
      [d](double h) { return 2.0 / d * std::exp(2.0 * h / d) / kTwoPiE; });
}

Estimate lsi_of(const Raw& r) {
  if (!r.I.finite) return Estimate::infinite(r.I.method);
  if (r.mean_cov) {
    const auto& c = *r.mean_cov;
    const double var = 0.25 * c[3][3] + c[2][2] - c[2][3];
    return Estimate::monte_carlo(0.5 * r.I.value - r.D.value, std::sqrt(std::max(0.0, var)));
  }
  return linear({{0.5, r.I}, {-1.0, r.D}});
}

Estimate stam_of(const Raw& r) {
  const Estimate n = power_of(r);
  if (!r.J.finite) return Estimate::infinite(r.J.method);
  if (r.mean_cov) {
    const auto& c = *r.mean_cov;
    const double p = n.value * r.J.value / r.dim;
    const double gh = 2.0 * p / r.dim, gj = n.value / r.dim;
    const double var = gh * gh * c[0][0] + gj * gj * c[1][1] + 2.0 * gh * gj * c[0][1];
    return Estimate::monte_carlo(p, std::sqrt(std::max(0.0, var)));
  }
  Estimate p = product(n, r.J);
  p.value /= r.dim;
  p.error /= r.dim;
  return p;
}

}  // namespace

Estimate entropy(const Density& x, const EstimatorSettings& st) { return raw_functionals(x, 1.0, st).h; }

Estimate entropy_power(const Density& x, const EstimatorSettings& st) {
  return power_of(raw_functionals(x, 1.0, st));
}

Estimate fisher(const Density& x, const EstimatorSettings& st) { return raw_functionals(x, 1.0, st).J; }

Estimate rel_entropy_to(const Density& x, double s, const EstimatorSettings& st) {
  return raw_functionals(x, s, st).D;
}

Estimate rel_fisher_to(const Density& x, double s, const EstimatorSettings& st) {
  return raw_functionals(x, s, st).I;
}

Estimate lsi_deficit(const Density& x, const EstimatorSettings& st) { return lsi_of(raw_functionals(x, 1.0, st)); }

Estimate stam_defect(const Density& x, const EstimatorSettings& st) { return stam_of(raw_functionals(x, 1.0, st)); }

FunctionalCatalog catalog(const Density& x, const EstimatorSettings& st) {
  const Raw r = raw_functionals(x, 1.0, st);
  return {r.h, power_of(r), r.J, r.D, r.I, lsi_of(r), stam_of(r)};
}

std::pair<DeficitReport, DeficitReport> gaussian_identities(const Density& z, double s, const EstimatorSettings& st) {
  const Raw r = raw_functionals(z, s, st);
  const double d = r.dim;
  const double m2 = r.second_moment;
  const std::map<std::string, double> params{{"s", s}};
  // h - (d/2) log(2 pi e s)  vs  -D + m2/(2s) - d/2
  DeficitReport first = make_report("gaussian_identity_entropy", linear({{1.0, r.h}}, -0.5 * d * (kLog2Pi + 1.0 + std::log(s))),
                                    linear({{-1.0, r.D}}, m2 / (2.0 * s) - 0.5 * d), params);
  // J  vs  I + 2d/s - m2/s^2
  DeficitReport second = make_report("gaussian_identity_fisher", r.J, linear({{1.0, r.I}}, 2.0 * d / s - m2 / (s * s)),
                                     params);
  if (r.mean_cov) {
    const auto& c = *r.mean_cov;
    reassess(first, std::sqrt(std::max(0.0, c[0][0] + c[2][2] + 2.0 * c[0][2])));
    reassess(second, std::sqrt(std::max(0.0, c[1][1] + c[3][3] - 2.0 * c[1][3])));
  }
  return {first, second};
}

}  // namespace deficit
