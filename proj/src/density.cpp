#include "deficitlab/density.hpp"

#include "deficitlab/error.hpp"
#include "deficitlab/seed.hpp"
#include "fft.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <boost/random/sobol.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace deficit {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDimension: return "invalid-dimension";
    case ErrorKind::InvalidDensity: return "invalid-density";
    case ErrorKind::InvalidScale: return "invalid-scale";
    case ErrorKind::InvalidPair: return "invalid-pair";
    case ErrorKind::BudgetExceeded: return "budget-exceeded";
    case ErrorKind::InsufficientCoverage: return "insufficient-coverage";
    case ErrorKind::EstimatorFailed: return "estimator-failed";
    case ErrorKind::UnsupportedEstimator: return "unsupported-estimator";
    case ErrorKind::PreconditionViolated: return "precondition-violated";
    case ErrorKind::InvalidTime: return "invalid-time";
    case ErrorKind::InvalidFunction: return "invalid-function";
    case ErrorKind::InvalidBody: return "invalid-body";
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::Unsupported: return "unsupported";
  }
  return "unknown";
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double normal_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

}  // namespace

// ---------------------------------------------------------------------------
// GaussianMixture

GaussianMixture::GaussianMixture(int dim, std::vector<GaussianComponent> components)
    : dim_(dim), components_(std::move(components)) {
  if (dim_ < 1) throw Error(ErrorKind::InvalidDimension, "mixture dimension must be >= 1");
  if (components_.empty()) throw Error(ErrorKind::InvalidDensity, "mixture has no components");
  double total = 0.0;
  factors_.reserve(components_.size());
  for (auto& c : components_) {
    if (!(c.weight > 0.0) || !std::isfinite(c.weight))
      throw Error(ErrorKind::InvalidDensity, "mixture weights must be strictly positive");
    if (c.mean.size() != dim_ || c.cov.rows() != dim_ || c.cov.cols() != dim_)
      throw Error(ErrorKind::InvalidDimension, "component shape does not match mixture dimension");
    if (!c.mean.allFinite() || !c.cov.allFinite())
      throw Error(ErrorKind::InvalidDensity, "component parameters must be finite");
    const double scale = std::max(1.0, c.cov.cwiseAbs().maxCoeff());
    if ((c.cov - c.cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw Error(ErrorKind::InvalidDensity, "covariance is not symmetric");
    c.cov = 0.5 * (c.cov + c.cov.transpose());
    total += c.weight;

    Factor f;
    Eigen::LLT<Mat> llt(c.cov);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::InvalidDensity, "covariance is not positive definite");
    f.chol = llt.matrixL();
    const double max_diag = c.cov.diagonal().maxCoeff();
    for (int i = 0; i < dim_; ++i) {
      const double pivot = f.chol(i, i) * f.chol(i, i);
      if (!(pivot > kPivotTolerance * max_diag))
        throw Error(ErrorKind::InvalidDensity, "covariance is numerically singular");
    }
    f.inv_chol = f.chol.triangularView<Eigen::Lower>().solve(Mat::Identity(dim_, dim_));
    f.precision = f.inv_chol.transpose() * f.inv_chol;
    f.log_det = 2.0 * f.chol.diagonal().array().log().sum();
    Eigen::SelfAdjointEigenSolver<Mat> eig(c.cov);
    f.cov_sqrt = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                 eig.eigenvectors().transpose();
    factors_.push_back(std::move(f));
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance) {
    std::ostringstream os;
    os << "mixture weights sum to " << total;
    throw Error(ErrorKind::InvalidDensity, os.str());
  }
  for (std::size_t i = 0; i < components_.size(); ++i)
    factors_[i].log_coef = std::log(components_[i].weight) - 0.5 * (dim_ * kLog2Pi + factors_[i].log_det);
}

double GaussianMixture::log_density(std::span<const double> x) const {
  double m = -std::numeric_limits<double>::infinity();
  double s = 0.0;
  double z[16];
  std::vector<double> heap;
  double* zp = z;
  if (dim_ > 16) {
    heap.resize(dim_);
    zp = heap.data();
  }
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& mu = components_[k].mean;
    const auto& L = factors_[k].inv_chol;
    double q = 0.0;
    for (int i = 0; i < dim_; ++i) {
      double acc = 0.0;
      for (int j = 0; j <= i; ++j) acc += L(i, j) * (x[j] - mu[j]);
      zp[i] = acc;
      q += acc * acc;
    }
    const double lw = factors_[k].log_coef - 0.5 * q;
    if (lw > m) {
      s = s * std::exp(m - lw) + 1.0;
      m = lw;
    } else {
      s += std::exp(lw - m);
    }
  }
  return m + std::log(s);
}

double GaussianMixture::log_density_and_score(std::span<const double> x, std::span<double> score) const {
  double m = -std::numeric_limits<double>::infinity();
  double s = 0.0;
  std::fill(score.begin(), score.begin() + dim_, 0.0);
  double diff[16], grad[16];
  std::vector<double> heap;
  double* dp = diff;
  double* gp = grad;
  if (dim_ > 16) {
    heap.resize(2 * std::size_t(dim_));
    dp = heap.data();
    gp = heap.data() + dim_;
  }
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const auto& mu = components_[k].mean;
    const auto& P = factors_[k].precision;
    for (int i = 0; i < dim_; ++i) dp[i] = x[i] - mu[i];
    double q = 0.0;
    for (int i = 0; i < dim_; ++i) {
      double acc = 0.0;
      for (int j = 0; j < dim_; ++j) acc += P(i, j) * dp[j];
      gp[i] = -acc;
      q += acc * dp[i];
    }
    const double lw = factors_[k].log_coef - 0.5 * q;
    if (lw > m) {
      const double r = std::exp(m - lw);
      s = s * r + 1.0;
      for (int i = 0; i < dim_; ++i) score[i] = score[i] * r + gp[i];
      m = lw;
    } else {
      const double e = std::exp(lw - m);
      s += e;
      for (int i = 0; i < dim_; ++i) score[i] += e * gp[i];
    }
  }
  for (int i = 0; i < dim_; ++i) score[i] /= s;
  return m + std::log(s);
}

GaussianMixture GaussianMixture::merged(double tol) const {
  std::vector<GaussianComponent> out;
  out.reserve(components_.size());
  auto close = [tol](const auto& a, const auto& b) {
    return (a - b).cwiseAbs().maxCoeff() <= tol * (1.0 + std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()));
  };
  for (const auto& c : components_) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const GaussianComponent& o) { return close(o.mean, c.mean) && close(o.cov, c.cov); });
    if (it == out.end()) {
      out.push_back(c);
    } else {
      it->weight += c.weight;
    }
  }
  return GaussianMixture(dim_, std::move(out));
}

// ---------------------------------------------------------------------------
// GridDensity

GridDensity::GridDensity(int dim, std::vector<double> origin, std::vector<double> spacing,
                         std::vector<std::size_t> counts, std::vector<double> values)
    : dim_(dim), origin_(std::move(origin)), spacing_(std::move(spacing)), counts_(std::move(counts)),
      values_(std::move(values)) {
  if (dim_ != 1 && dim_ != 2) throw Error(ErrorKind::InvalidDimension, "grid densities support d = 1 or 2");
  if (origin_.size() != std::size_t(dim_) || spacing_.size() != std::size_t(dim_) || counts_.size() != std::size_t(dim_))
    throw Error(ErrorKind::InvalidDimension, "grid axis descriptors do not match dimension");
  std::size_t n = 1;
  for (int a = 0; a < dim_; ++a) {
    if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a]))
      throw Error(ErrorKind::InvalidDensity, "grid spacing must be positive");
    if (!std::isfinite(origin_[a])) throw Error(ErrorKind::InvalidDensity, "grid origin must be finite");
    if (counts_[a] < 2) throw Error(ErrorKind::InvalidDensity, "grid needs at least two nodes per axis");
    n *= counts_[a];
  }
  if (values_.size() != n) throw Error(ErrorKind::InvalidDensity, "grid value count does not match axis counts");
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(values_[i] >= 0.0) || !std::isfinite(values_[i]))
      throw Error(ErrorKind::InvalidDensity, "grid values must be finite and nonnegative");
    mass += weight(i) * values_[i];
  }
  if (!(mass > 0.0) || !std::isfinite(mass)) throw Error(ErrorKind::InvalidDensity, "grid has zero mass");
  for (auto& v : values_) v /= mass;
  renormalization_ = std::abs(1.0 - mass);
}

double GridDensity::cell_volume() const {
  double v = 1.0;
  for (auto h : spacing_) v *= h;
  return v;
}

double GridDensity::weight(std::size_t flat) const {
  double w = cell_volume();
  if (dim_ == 1) {
    if (flat == 0 || flat + 1 == counts_[0]) w *= 0.5;
  } else {
    const std::size_t i = flat / counts_[1], j = flat % counts_[1];
    if (i == 0 || i + 1 == counts_[0]) w *= 0.5;
    if (j == 0 || j + 1 == counts_[1]) w *= 0.5;
  }
  return w;
}

GridDensity GridDensity::with_error_terms(double renormalization, double truncated_mass) const {
  GridDensity g = *this;
  g.renormalization_ = renormalization;
  g.truncated_mass_ = truncated_mass;
  return g;
}

GridDensity GridDensity::translated(std::span<const double> shift) const {
  GridDensity g = *this;
  for (int a = 0; a < dim_; ++a) g.origin_[a] += shift[a];
  return g;
}

// ---------------------------------------------------------------------------
// SampleCloud / Density

SampleCloud::SampleCloud(int dim, Mat points, std::uint64_t seed) : dim_(dim), points_(std::move(points)), seed_(seed) {
  if (dim_ < 1 || points_.cols() != dim_) throw Error(ErrorKind::InvalidDimension, "sample dimension mismatch");
  if (points_.rows() < 2) throw Error(ErrorKind::InvalidDensity, "sample cloud needs at least two points");
  if (!points_.allFinite()) throw Error(ErrorKind::InvalidDensity, "sample points must be finite");
}

int Density::dim() const {
  return std::visit([](const auto& d) { return d.dim(); }, law_);
}

Density standard_gaussian(int dim) {
  if (dim < 1) throw Error(ErrorKind::InvalidDimension, "dimension must be >= 1");
  return GaussianMixture(dim, {{1.0, Vec::Zero(dim), Mat::Identity(dim, dim)}});
}

Density gaussian(const Vec& mean, const Mat& cov) {
  return GaussianMixture(int(mean.size()), {{1.0, mean, cov}});
}

// ---------------------------------------------------------------------------
// moments

Moments moments(const Density& x) {
  const int d = x.dim();
  Moments out{Vec::Zero(d), Mat::Zero(d, d)};
  if (const auto* m = x.mixture()) {
    for (const auto& c : m->components()) {
      out.mean += c.weight * c.mean;
      out.cov += c.weight * (c.cov + c.mean * c.mean.transpose());
    }
    out.cov -= out.mean * out.mean.transpose();
  } else if (const auto* g = x.grid()) {
    double mass = 0.0;
    Mat second = Mat::Zero(d, d);
    Vec p(d);
    for (std::size_t k = 0; k < g->size(); ++k) {
      const double w = g->weight(k) * g->values()[k];
      if (d == 1) {
        p[0] = g->coord(0, k);
      } else {
        p[0] = g->coord(0, k / g->counts()[1]);
        p[1] = g->coord(1, k % g->counts()[1]);
      }
      mass += w;
      out.mean += w * p;
      second += w * p * p.transpose();
    }
    if (!(mass > 0.0)) throw Error(ErrorKind::InvalidDensity, "degenerate grid");
    out.mean /= mass;
    out.cov = second / mass - out.mean * out.mean.transpose();
  } else {
    const auto& pts = x.samples()->points();
    out.mean = pts.colwise().mean().transpose();
    const Mat centered = pts.rowwise() - out.mean.transpose();
    out.cov = centered.transpose() * centered / double(pts.rows() - 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// grid helpers

namespace {

// 4-point Lagrange interpolation along one axis of a row-major array.
// Positions are fractional indices; nodes outside the array count as zero.
double lagrange4(const double* v, std::size_t n, std::size_t stride, double u) {
  const double fl = std::floor(u);
  const long i = long(fl);
  const double t = u - fl;
  if (u < -1.0 || u > double(n)) return 0.0;
  auto at = [&](long k) { return (k < 0 || k >= long(n)) ? 0.0 : v[std::size_t(k) * stride]; };
  if (t == 0.0) return at(i);
  const double w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
  const double w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
  const double w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
  return w0 * at(i - 1) + w1 * at(i) + w2 * at(i + 1) + w3 * at(i + 2);
}

struct RawGrid {
  std::vector<double> origin, spacing;
  std::vector<std::size_t> counts;
  std::vector<double> values;
};

RawGrid raw(const GridDensity& g) { return {g.origin(), g.spacing(), g.counts(), g.values()}; }

// Resample onto a grid with the same origin and a new spacing/count per axis.
RawGrid resample(const RawGrid& in, const std::vector<double>& spacing, const std::vector<std::size_t>& counts) {
  RawGrid cur = in;
  const std::size_t rank = in.counts.size();
  for (std::size_t axis = 0; axis < rank; ++axis) {
    if (cur.spacing[axis] == spacing[axis] && cur.counts[axis] == counts[axis]) continue;
    RawGrid next = cur;
    next.spacing[axis] = spacing[axis];
    next.counts[axis] = counts[axis];
    std::size_t total = 1;
    for (auto c : next.counts) total *= c;
    next.values.assign(total, 0.0);
    const double ratio = spacing[axis] / cur.spacing[axis];
    if (rank == 1) {
      for (std::size_t k = 0; k < counts[0]; ++k)
        next.values[k] = std::max(0.0, lagrange4(cur.values.data(), cur.counts[0], 1, double(k) * ratio));
    } else if (axis == 0) {
      const std::size_t n1 = cur.counts[1];
      for (std::size_t k = 0; k < counts[0]; ++k)
        for (std::size_t j = 0; j < n1; ++j)
          next.values[k * n1 + j] = std::max(0.0, lagrange4(cur.values.data() + j, cur.counts[0], n1, double(k) * ratio));
    } else {
      const std::size_t n0 = cur.counts[0], n1 = cur.counts[1];
      for (std::size_t i = 0; i < n0; ++i)
        for (std::size_t k = 0; k < counts[1]; ++k)
          next.values[i * counts[1] + k] =
              std::max(0.0, lagrange4(cur.values.data() + i * n1, n1, 1, double(k) * ratio));
    }
    cur = std::move(next);
  }
  return cur;
}

RawGrid scaled(const RawGrid& g, double s) {
  RawGrid out = g;
  double jac = 1.0;
  for (std::size_t a = 0; a < g.counts.size(); ++a) {
    out.origin[a] *= s;
    out.spacing[a] *= s;
    jac *= s;
  }
  for (auto& v : out.values) v /= jac;
  return out;
}

// Zeroes round-off noise, drops empty boundary slices and caps per-axis size.
RawGrid tidy(RawGrid g, std::size_t max_points) {
  const std::size_t rank = g.counts.size();
  double vmax = 0.0;
  for (auto& v : g.values) vmax = std::max(vmax, v);
  for (auto& v : g.values)
    if (v < 1e-15 * vmax) v = 0.0;
  // trim
  std::vector<std::size_t> lo(rank, 0), hi(g.counts);
  auto slice_empty = [&](std::size_t axis, std::size_t idx) {
    if (rank == 1) return g.values[idx] == 0.0;
    const std::size_t n1 = g.counts[1];
    if (axis == 0) {
      for (std::size_t j = 0; j < n1; ++j)
        if (g.values[idx * n1 + j] != 0.0) return false;
    } else {
      for (std::size_t i = 0; i < g.counts[0]; ++i)
        if (g.values[i * n1 + idx] != 0.0) return false;
    }
    return true;
  };
  for (std::size_t a = 0; a < rank; ++a) {
    while (hi[a] - lo[a] > 3 && slice_empty(a, lo[a]) && slice_empty(a, lo[a] + 1)) ++lo[a];
    while (hi[a] - lo[a] > 3 && slice_empty(a, hi[a] - 1) && slice_empty(a, hi[a] - 2)) --hi[a];
  }
  RawGrid t;
  t.spacing = g.spacing;
  for (std::size_t a = 0; a < rank; ++a) {
    t.origin.push_back(g.origin[a] + g.spacing[a] * double(lo[a]));
    t.counts.push_back(hi[a] - lo[a]);
  }
  if (rank == 1) {
    t.values.assign(g.values.begin() + long(lo[0]), g.values.begin() + long(hi[0]));
  } else {
    for (std::size_t i = lo[0]; i < hi[0]; ++i)
      for (std::size_t j = lo[1]; j < hi[1]; ++j) t.values.push_back(g.values[i * g.counts[1] + j]);
  }
  // cap
  std::vector<double> spacing = t.spacing;
  std::vector<std::size_t> counts = t.counts;
  bool shrink = false;
  for (std::size_t a = 0; a < rank; ++a) {
    if (counts[a] > max_points) {
      spacing[a] = t.spacing[a] * double(counts[a] - 1) / double(max_points - 1);
      counts[a] = max_points;
      shrink = true;
    }
  }
  return shrink ? resample(t, spacing, counts) : t;
}

GridDensity finish(RawGrid g, double upstream_error, double truncated) {
  const int dim = int(g.counts.size());
  GridDensity out(dim, std::move(g.origin), std::move(g.spacing), std::move(g.counts), std::move(g.values));
  return out.with_error_terms(out.renormalization() + upstream_error, truncated);
}

GridDensity convolve_grids(const GridDensity& x, const GridDensity& y, double sx, double sy,
                           const ConvolveOptions& opts) {
  const std::size_t rank = std::size_t(x.dim());
  RawGrid a = scaled(raw(x), sx), b = scaled(raw(y), sy);
  std::vector<double> spacing(rank);
  for (std::size_t k = 0; k < rank; ++k) spacing[k] = std::min(a.spacing[k], b.spacing[k]);
  auto align = [&](const RawGrid& g) {
    std::vector<std::size_t> counts(rank);
    bool same = true;
    for (std::size_t k = 0; k < rank; ++k) {
      if (std::abs(g.spacing[k] - spacing[k]) <= 1e-13 * spacing[k]) {
        counts[k] = g.counts[k];
      } else {
        same = false;
        counts[k] = std::size_t(std::floor(double(g.counts[k] - 1) * g.spacing[k] / spacing[k] + 1e-9)) + 1;
      }
    }
    if (same) {
      RawGrid c = g;
      c.spacing = spacing;
      return c;
    }
    return resample(g, spacing, counts);
  };
  a = align(a);
  b = align(b);
  RawGrid c;
  c.spacing = spacing;
  double cell = 1.0;
  for (std::size_t k = 0; k < rank; ++k) {
    c.origin.push_back(a.origin[k] + b.origin[k]);
    c.counts.push_back(a.counts[k] + b.counts[k] - 1);
    cell *= spacing[k];
  }
  c.values = detail::linear_convolve(a.values, a.counts, b.values, b.counts);
  for (auto& v : c.values) v = std::max(0.0, v * cell);
  const std::size_t cap = rank == 1 ? opts.max_grid_points_1d : opts.max_grid_points_2d;
  return finish(tidy(std::move(c), cap), x.renormalization() + y.renormalization(),
                x.truncated_mass() + y.truncated_mass());
}

GaussianMixture combine_mixtures(const GaussianMixture& x, const GaussianMixture& y, double sx, double sy,
                                 double cx, double cy, const ConvolveOptions& opts) {
  if (x.size() * y.size() > opts.component_budget) {
    std::ostringstream os;
    os << x.size() << " x " << y.size() << " components exceeds budget " << opts.component_budget;
    throw Error(ErrorKind::BudgetExceeded, os.str());
  }
  std::vector<GaussianComponent> out;
  out.reserve(x.size() * y.size());
  for (const auto& a : x.components())
    for (const auto& b : y.components())
      out.push_back({a.weight * b.weight, sx * a.mean + sy * b.mean, cx * a.cov + cy * b.cov});
  // renormalize against accumulated round-off in the weight products
  double total = 0.0;
  for (const auto& c : out) total += c.weight;
  for (auto& c : out) c.weight /= total;
  return GaussianMixture(x.dim(), std::move(out));
}

SampleCloud combine_clouds(const SampleCloud& x, const SampleCloud& y, double sx, double sy, std::uint64_t seed) {
  const std::size_t n = std::min(x.size(), y.size());
  std::vector<std::size_t> px(x.size()), py(y.size());
  std::iota(px.begin(), px.end(), 0);
  std::iota(py.begin(), py.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(px.begin(), px.end(), rng);
  std::shuffle(py.begin(), py.end(), rng);
  Mat pts(long(n), x.dim());
  for (std::size_t i = 0; i < n; ++i) pts.row(long(i)) = sx * x.points().row(long(px[i])) + sy * y.points().row(long(py[i]));
  return SampleCloud(x.dim(), std::move(pts), seed);
}

}  // namespace

// ---------------------------------------------------------------------------
// scale / convolve / add / heat_flow

Density scale(const Density& x, double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorKind::InvalidScale, "scale factor must be positive");
  if (const auto* m = x.mixture()) {
    std::vector<GaussianComponent> comps = m->components();
    for (auto& c : comps) {
      c.mean *= s;
      c.cov *= s * s;
    }
    return GaussianMixture(m->dim(), std::move(comps));
  }
  if (const auto* g = x.grid()) {
    RawGrid r = scaled(raw(*g), s);
    return finish(std::move(r), g->renormalization(), g->truncated_mass());
  }
  const auto* c = x.samples();
  return SampleCloud(c->dim(), c->points() * s, c->seed());
}

Density convolve(const Density& x, const Density& y, double theta, const ConvolveOptions& opts) {
  if (x.dim() != y.dim()) throw Error(ErrorKind::InvalidPair, "densities have different dimensions");
  if (!(theta >= 0.0 && theta <= 1.0)) throw Error(ErrorKind::InvalidPair, "theta must lie in [0, 1]");
  if (x.kind() != y.kind()) throw Error(ErrorKind::InvalidPair, "convolution needs two densities of the same kind");
  if (theta == 0.0) return y;
  if (theta == 1.0) return x;
  const double sx = std::sqrt(theta), sy = std::sqrt(1.0 - theta);
  if (x.mixture()) return combine_mixtures(*x.mixture(), *y.mixture(), sx, sy, theta, 1.0 - theta, opts);
  if (x.grid()) return convolve_grids(*x.grid(), *y.grid(), sx, sy, opts);
  const std::uint64_t seed = derive_seed(opts.seed, {x.samples()->seed(), y.samples()->seed()});
  return combine_clouds(*x.samples(), *y.samples(), sx, sy, seed);
}

Density add(const Density& x, const Density& y, const ConvolveOptions& opts) {
  if (x.dim() != y.dim()) throw Error(ErrorKind::InvalidPair, "densities have different dimensions");
  if (x.kind() != y.kind()) throw Error(ErrorKind::InvalidPair, "sum needs two densities of the same kind");
  if (x.mixture()) return combine_mixtures(*x.mixture(), *y.mixture(), 1.0, 1.0, 1.0, 1.0, opts);
  if (x.grid()) return convolve_grids(*x.grid(), *y.grid(), 1.0, 1.0, opts);
  const std::uint64_t seed = derive_seed(opts.seed, {x.samples()->seed(), y.samples()->seed()});
  return combine_clouds(*x.samples(), *y.samples(), 1.0, 1.0, seed);
}

Density heat_flow(const Density& x, double t, const ConvolveOptions& opts) {
  if (!std::isfinite(t)) throw Error(ErrorKind::InvalidTime, "heat flow time must be finite");
  if (t == 0.0) return x;
  if (const auto* m = x.mixture()) {
    std::vector<GaussianComponent> comps = m->components();
    for (auto& c : comps) c.cov += t * Mat::Identity(m->dim(), m->dim());
    return GaussianMixture(m->dim(), std::move(comps));
  }
  if (t < 0.0) throw Error(ErrorKind::InvalidTime, "backward heat flow is only defined for mixtures");
  if (const auto* g = x.grid()) {
    RawGrid r = raw(*g);
    std::vector<std::size_t> pad(r.counts.size());
    for (std::size_t a = 0; a < pad.size(); ++a) pad[a] = std::size_t(std::ceil(12.0 * std::sqrt(t) / r.spacing[a])) + 2;
    r.values = detail::gaussian_smooth(r.values, r.counts, r.spacing, pad, t);
    for (std::size_t a = 0; a < pad.size(); ++a) {
      r.origin[a] -= double(pad[a]) * r.spacing[a];
      r.counts[a] += 2 * pad[a];
    }
    for (auto& v : r.values) v = std::max(0.0, v);
    const std::size_t cap = r.counts.size() == 1 ? opts.max_grid_points_1d : opts.max_grid_points_2d;
    return finish(tidy(std::move(r), cap), g->renormalization(), g->truncated_mass());
  }
  const auto* c = x.samples();
  Mat noise(long(c->size()), c->dim());
  draw_into(standard_gaussian(c->dim()), derive_seed(opts.seed, {c->seed(), 0x6e6f697365ULL}), noise);
  return SampleCloud(c->dim(), c->points() + std::sqrt(t) * noise, c->seed());
}

// ---------------------------------------------------------------------------
// discretize

GridDensity discretize(const GaussianMixture& x, double halfwidth, std::size_t points_per_axis) {
  const int d = x.dim();
  if (d > 2) throw Error(ErrorKind::InvalidDimension, "grid densities support d <= 2");
  if (!(halfwidth > 0.0) || points_per_axis < 2)
    throw Error(ErrorKind::InvalidDensity, "discretization needs positive halfwidth and >= 2 points");
  const Vec center = moments(Density(x)).mean;
  // mass outside the box: exact per axis, union bound across axes
  double tail = 0.0;
  for (const auto& c : x.components()) {
    for (int a = 0; a < d; ++a) {
      const double sd = std::sqrt(c.cov(a, a));
      const double lo = (c.mean[a] - (center[a] - halfwidth)) / sd;
      const double hi = ((center[a] + halfwidth) - c.mean[a]) / sd;
      tail += c.weight * (normal_tail(lo) + normal_tail(hi));
    }
  }
  if (tail > kCoverageTolerance) {
    std::ostringstream os;
    os << "grid halfwidth " << halfwidth << " leaves tail mass " << tail;
    throw Error(ErrorKind::InsufficientCoverage, os.str());
  }
  const double h = 2.0 * halfwidth / double(points_per_axis - 1);
  std::vector<double> origin(d), spacing(d, h);
  std::vector<std::size_t> counts(d, points_per_axis);
  for (int a = 0; a < d; ++a) origin[a] = center[a] - halfwidth;
  std::size_t total = d == 1 ? points_per_axis : points_per_axis * points_per_axis;
  std::vector<double> values(total);
  double p[2];
  for (std::size_t k = 0; k < total; ++k) {
    if (d == 1) {
      p[0] = origin[0] + h * double(k);
    } else {
      p[0] = origin[0] + h * double(k / points_per_axis);
      p[1] = origin[1] + h * double(k % points_per_axis);
    }
    values[k] = std::exp(x.log_density(std::span<const double>(p, std::size_t(d))));
  }
  GridDensity g(d, std::move(origin), std::move(spacing), std::move(counts), std::move(values));
  return g.with_error_terms(g.renormalization(), tail);
}

// ---------------------------------------------------------------------------
// sampling / centering

void draw_into(const Density& x, std::uint64_t seed, Mat& out) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  const int d = x.dim();
  if (const auto* m = x.mixture()) {
    std::vector<double> cdf;
    double acc = 0.0;
    for (const auto& c : m->components()) cdf.push_back(acc += c.weight);
    Vec z(d);
    for (long i = 0; i < out.rows(); ++i) {
      const double u = unif(rng) * acc;
      std::size_t k = std::size_t(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      k = std::min(k, m->size() - 1);
      for (int j = 0; j < d; ++j) z[j] = normal(rng);
      out.row(i) = (m->component(k).mean + m->cholesky(k) * z).transpose();
    }
  } else if (const auto* g = x.grid()) {
    std::vector<double> cdf(g->size());
    double acc = 0.0;
    for (std::size_t k = 0; k < g->size(); ++k) cdf[k] = acc += g->weight(k) * g->values()[k];
    for (long i = 0; i < out.rows(); ++i) {
      const double u = unif(rng) * acc;
      std::size_t k = std::size_t(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      k = std::min(k, g->size() - 1);
      if (d == 1) {
        out(i, 0) = g->coord(0, k) + (unif(rng) - 0.5) * g->spacing()[0];
      } else {
        out(i, 0) = g->coord(0, k / g->counts()[1]) + (unif(rng) - 0.5) * g->spacing()[0];
        out(i, 1) = g->coord(1, k % g->counts()[1]) + (unif(rng) - 0.5) * g->spacing()[1];
      }
    }
  } else {
    const auto& pts = x.samples()->points();
    std::uniform_int_distribution<long> pick(0, pts.rows() - 1);
    for (long i = 0; i < out.rows(); ++i) out.row(i) = pts.row(pick(rng));
  }
}

void draw_stratified(const Density& x, std::uint64_t seed, Mat& out) {
  const int d = x.dim();
  const std::size_t dims = x.mixture() ? std::size_t(d) : x.grid() ? std::size_t(d) + 1 : 1;
  boost::random::sobol qrng(dims);
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> shift(dims);
  for (auto& s : shift) s = rng();
  std::vector<double> u(dims);
  auto next = [&] {
    for (std::size_t j = 0; j < dims; ++j) u[j] = (double((qrng() ^ shift[j]) >> 11) + 0.5) * 0x1p-53;
  };
  auto probit = [](double p) { return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p); };
  auto pick = [](const std::vector<double>& cdf, double v) {
    const std::size_t k = std::size_t(std::upper_bound(cdf.begin(), cdf.end(), v) - cdf.begin());
    return std::min(k, cdf.size() - 1);
  };
  if (const auto* m = x.mixture(); m && d == 1 && m->size() > 1) {
    // exact quantile function of the mixture, so that points drawn for
    // different laws from the same seed are comonotone
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& c : m->components()) {
      const double sd = std::sqrt(c.cov(0, 0));
      lo = std::min(lo, c.mean[0] - 40.0 * sd);
      hi = std::max(hi, c.mean[0] + 40.0 * sd);
    }
    for (long i = 0; i < out.rows(); ++i) {
      next();
      const double p = u[0];
      auto gap = [&](double t) {
        double lower = 0.0, upper = 0.0;
        for (const auto& c : m->components()) {
          const double z = (t - c.mean[0]) / std::sqrt(c.cov(0, 0));
          lower += c.weight * 0.5 * std::erfc(-z / std::numbers::sqrt2);
          upper += c.weight * 0.5 * std::erfc(z / std::numbers::sqrt2);
        }
        return p < 0.5 ? lower - p : (1.0 - p) - upper;
      };
      std::uintmax_t iters = 200;
      const auto root = boost::math::tools::toms748_solve(gap, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
      out(i, 0) = 0.5 * (root.first + root.second);
    }
  } else if (const auto* m = x.mixture()) {
    std::vector<double> cdf;
    double acc = 0.0;
    for (const auto& c : m->components()) cdf.push_back(acc += c.weight);
    Vec z(d);
    for (long i = 0; i < out.rows(); ++i) {
      next();
      const double v = u[0] * acc;
      const std::size_t k = pick(cdf, v);
      // the position inside the component's slice of u[0] drives z[0]
      const double lo = k == 0 ? 0.0 : cdf[k - 1];
      const double r = std::clamp((v - lo) / m->component(k).weight, 0x1p-60, 1.0 - 0x1p-53);
      z[0] = probit(r);
      for (int j = 1; j < d; ++j) z[j] = probit(u[std::size_t(j)]);
      out.row(i) = (m->component(k).mean + m->cholesky(k) * z).transpose();
    }
  } else if (const auto* g = x.grid()) {
    std::vector<double> cdf(g->size());
    double acc = 0.0;
    for (std::size_t k = 0; k < g->size(); ++k) cdf[k] = acc += g->weight(k) * g->values()[k];
    for (long i = 0; i < out.rows(); ++i) {
      next();
      const std::size_t k = pick(cdf, u[0] * acc);
      if (d == 1) {
        out(i, 0) = g->coord(0, k) + (u[1] - 0.5) * g->spacing()[0];
      } else {
        out(i, 0) = g->coord(0, k / g->counts()[1]) + (u[1] - 0.5) * g->spacing()[0];
        out(i, 1) = g->coord(1, k % g->counts()[1]) + (u[2] - 0.5) * g->spacing()[1];
      }
    }
  } else {
    const auto& pts = x.samples()->points();
    for (long i = 0; i < out.rows(); ++i) {
      next();
      out.row(i) = pts.row(std::min<long>(long(u[0] * double(pts.rows())), pts.rows() - 1));
    }
  }
}

SampleCloud sample(const Density& x, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorKind::InvalidDensity, "sample size must be >= 2");
  Mat pts(long(n), x.dim());
  draw_into(x, seed, pts);
  return SampleCloud(x.dim(), std::move(pts), seed);
}

Density center(const Density& x) {
  const Vec mu = moments(x).mean;
  if (const auto* m = x.mixture()) {
    std::vector<GaussianComponent> comps = m->components();
    for (auto& c : comps) c.mean -= mu;
    return GaussianMixture(m->dim(), std::move(comps));
  }
  if (const auto* g = x.grid()) {
    const Vec shift = -mu;
    return g->translated(std::span<const double>(shift.data(), std::size_t(shift.size())));
  }
  const auto* c = x.samples();
  Mat pts = c->points().rowwise() - mu.transpose();
  return SampleCloud(c->dim(), std::move(pts), c->seed());
}

}  // namespace deficit
