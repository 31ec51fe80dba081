#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace deficit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr std::size_t kDefaultComponentBudget = 4096;
inline constexpr double kDensityFloor = 1e-300;
inline constexpr double kWeightSumTolerance = 1e-12;
inline constexpr double kPivotTolerance = 1e-12;
inline constexpr double kCoverageTolerance = 1e-8;

struct GaussianComponent {
  double weight = 1.0;
  Vec mean;
  Mat cov;
};

/// Finite mixture of Gaussians on R^d. Validated and factorized on
/// construction; immutable afterwards.
class GaussianMixture {
 public:
  GaussianMixture(int dim, std::vector<GaussianComponent> components);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return components_.size(); }
  bool is_gaussian() const noexcept { return components_.size() == 1; }
  const std::vector<GaussianComponent>& components() const noexcept { return components_; }
  const GaussianComponent& component(std::size_t i) const { return components_[i]; }

  const Mat& precision(std::size_t i) const { return factors_[i].precision; }
  const Mat& inverse_cholesky(std::size_t i) const { return factors_[i].inv_chol; }
  const Mat& cov_sqrt(std::size_t i) const { return factors_[i].cov_sqrt; }
  const Mat& cholesky(std::size_t i) const { return factors_[i].chol; }
  double log_det(std::size_t i) const { return factors_[i].log_det; }
  /// log(weight) - (d log 2pi + log det cov) / 2
  double log_coefficient(std::size_t i) const { return factors_[i].log_coef; }

  double log_density(std::span<const double> x) const;
  /// Returns log f(x) and writes grad log f(x) into `score` (size dim).
  double log_density_and_score(std::span<const double> x, std::span<double> score) const;

  /// Merges components whose means and covariances agree to `tol`
  /// (relative to 1 + magnitude). Weights are summed.
  GaussianMixture merged(double tol = 1e-10) const;

 private:
  struct Factor {
    Mat chol;
    Mat inv_chol;
    Mat precision;
    Mat cov_sqrt;
    double log_det = 0.0;
    double log_coef = 0.0;
  };

  int dim_;
  std::vector<GaussianComponent> components_;
  std::vector<Factor> factors_;
};

/// Density sampled on a uniform tensor grid (d = 1 or 2), row-major with
/// axis 0 slowest. Values are renormalized to unit trapezoidal mass on
/// construction; the size of that correction is kept as an error term.
class GridDensity {
 public:
  GridDensity(int dim, std::vector<double> origin, std::vector<double> spacing,
              std::vector<std::size_t> counts, std::vector<double> values);

  int dim() const noexcept { return dim_; }
  const std::vector<double>& origin() const noexcept { return origin_; }
  const std::vector<double>& spacing() const noexcept { return spacing_; }
  const std::vector<std::size_t>& counts() const noexcept { return counts_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  double coord(int axis, std::size_t i) const { return origin_[axis] + spacing_[axis] * double(i); }
  double cell_volume() const;
  /// Trapezoid weight (including cell volume) of flat node index.
  double weight(std::size_t flat) const;

  /// |1 - raw mass| accumulated over construction and any upstream
  /// grid operations.
  double renormalization() const noexcept { return renormalization_; }
  /// Probability mass left outside the grid when it was discretized.
  double truncated_mass() const noexcept { return truncated_mass_; }

  GridDensity with_error_terms(double renormalization, double truncated_mass) const;
  GridDensity translated(std::span<const double> shift) const;

 private:
  int dim_;
  std::vector<double> origin_;
  std::vector<double> spacing_;
  std::vector<std::size_t> counts_;
  std::vector<double> values_;
  double renormalization_ = 0.0;
  double truncated_mass_ = 0.0;
};

/// Empirical law of n points in R^d (rows of `points`).
class SampleCloud {
 public:
  SampleCloud(int dim, Mat points, std::uint64_t seed);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return std::size_t(points_.rows()); }
  const Mat& points() const noexcept { return points_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  int dim_;
  Mat points_;
  std::uint64_t seed_;
};

enum class DensityKind { Mixture, Grid, Samples };

class Density {
 public:
  Density(GaussianMixture m) : law_(std::move(m)) {}
  Density(GridDensity g) : law_(std::move(g)) {}
  Density(SampleCloud s) : law_(std::move(s)) {}

  DensityKind kind() const noexcept { return DensityKind(law_.index()); }
  int dim() const;

  const GaussianMixture* mixture() const noexcept { return std::get_if<GaussianMixture>(&law_); }
  const GridDensity* grid() const noexcept { return std::get_if<GridDensity>(&law_); }
  const SampleCloud* samples() const noexcept { return std::get_if<SampleCloud>(&law_); }
  bool is_gaussian() const noexcept { return mixture() && mixture()->is_gaussian(); }

  const std::variant<GaussianMixture, GridDensity, SampleCloud>& law() const noexcept { return law_; }

 private:
  std::variant<GaussianMixture, GridDensity, SampleCloud> law_;
};

struct Moments {
  Vec mean;
  Mat cov;
  double second_moment() const { return cov.trace() + mean.squaredNorm(); }
};

struct ConvolveOptions {
  std::size_t component_budget = kDefaultComponentBudget;
  /// Grids larger than this per axis are resampled down after convolution.
  std::size_t max_grid_points_1d = std::size_t(1) << 14;
  std::size_t max_grid_points_2d = 1024;
  /// Seed for shuffling sample clouds.
  std::uint64_t seed = 0;
};

Density standard_gaussian(int dim);
Density gaussian(const Vec& mean, const Mat& cov);

Moments moments(const Density& x);

/// Law of s * X.
Density scale(const Density& x, double s);

/// Law of sqrt(theta) X + sqrt(1 - theta) Y for independent X, Y.
Density convolve(const Density& x, const Density& y, double theta, const ConvolveOptions& opts = {});

/// Law of X + Y (unscaled) for independent X, Y.
Density add(const Density& x, const Density& y, const ConvolveOptions& opts = {});

/// Law of X + sqrt(t) G with G standard normal. Mixtures accept negative t
/// as long as every shifted covariance stays positive definite.
Density heat_flow(const Density& x, double t, const ConvolveOptions& opts = {});

GridDensity discretize(const GaussianMixture& x, double halfwidth, std::size_t points_per_axis);

SampleCloud sample(const Density& x, std::size_t n, std::uint64_t seed);

Density center(const Density& x);

/// Fills every row of `out` with an independent draw from x.
void draw_into(const Density& x, std::uint64_t seed, Mat& out);

/// Low-discrepancy draw: digitally shifted Sobol points pushed through the
/// law's inverse transforms. Each row is marginally distributed as x, but
/// the rows are not independent; the empirical measure of the rows sits
/// much closer to x than an iid sample of the same size.
void draw_stratified(const Density& x, std::uint64_t seed, Mat& out);

}  // namespace deficit
