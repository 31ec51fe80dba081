#pragma once

#include "deficitlab/density.hpp"
#include "deficitlab/estimate.hpp"
#include "deficitlab/functionals.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace deficit {

enum class W2Method { GaussianClosedForm, Quantile1d, EntropicOt };

std::string_view to_string(W2Method m);

/// W2(X, G) as a distance (not squared).
struct W2Estimate {
  double value = 0.0;
  double error = 0.0;
  W2Method method = W2Method::GaussianClosedForm;

  Estimate distance() const;
  Estimate squared() const;
};

struct EntropicOtSettings {
  std::size_t points = 512;
  std::size_t repetitions = 8;
  /// Regularization levels as multiples of the median squared distance.
  std::vector<double> eps_factors{0.5, 0.2, 0.1, 0.05};
  /// Sup-norm change of the dual potentials (relative to eps) at which
  /// Sinkhorn stops.
  double tolerance = 1e-4;
  std::size_t max_iterations = 5000;
  std::uint64_t seed = 0;
};

struct TransportSettings {
  EstimatorSettings estimator{};
  EntropicOtSettings ot{};
  /// Absolute tolerance of the 1-d quantile integral.
  double quantile_tol = 1e-9;
};

W2Estimate w2_to_gaussian(const Density& x, const TransportSettings& st = {});

/// Monotone coupling in d = 1: int (x - Phi^{-1}(F(x)))^2 f(x) dx.
W2Estimate w2_quantile_1d(const Density& x, const TransportSettings& st = {});

/// Debiased Sinkhorn divergence between samples of X and of G, extrapolated
/// to eps -> 0 by a least-squares fit a + c eps^2 over the schedule. The
/// error is the spread over independent repetitions, widened to a
/// Student-t bound.
W2Estimate w2_entropic(const Density& x, const EntropicOtSettings& st = {});

/// Sinkhorn divergence S_eps between two point sets (rows), uniform weights.
/// Exposed for testing.
double sinkhorn_divergence(const Mat& x, const Mat& y, double eps, std::size_t max_iterations = 5000,
                           double tolerance = 1e-5);

/// W2^2(X) <= 2 D(X)
DeficitReport talagrand_deficit(const Density& x, const TransportSettings& st = {});
/// D(X) <= sqrt(I(X)) W2(X) - W2^2(X)/2
DeficitReport hwi_deficit(const Density& x, const TransportSettings& st = {});
/// W2^2(sqrt(t) X + sqrt(1-t) Y) <= t W2^2(X) + (1-t) W2^2(Y); inputs centered.
DeficitReport w2_convolution_deficit(const Density& x, const Density& y, double theta,
                                     const TransportSettings& st = {}, const ConvolveOptions& conv = {});

}  // namespace deficit
