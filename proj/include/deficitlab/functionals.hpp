#pragma once

#include "deficitlab/density.hpp"
#include "deficitlab/estimate.hpp"

#include <cstdint>
#include <utility>

namespace deficit {

struct EstimatorSettings {
  enum class Prefer { Auto, Quadrature, MonteCarlo };
  Prefer prefer = Prefer::Auto;
  /// Absolute tolerance for the 1-d adaptive and 2-d tensor rules.
  double abs_tol = 1e-8;
  std::size_t mc_samples = 1'000'000;
  std::uint64_t seed = 0;
  /// Cap on tensor nodes per axis before falling back to Monte Carlo.
  std::size_t tensor_max_points = 4097;
};

struct FunctionalCatalog {
  Estimate entropy;
  Estimate entropy_power;
  Estimate fisher;
  Estimate rel_entropy;
  Estimate rel_fisher;
  Estimate lsi_deficit;
  Estimate stam_defect;
};

/// h(X) = -int f log f
Estimate entropy(const Density& x, const EstimatorSettings& st = {});
/// N(X) = exp(2h/d) / (2 pi e)
Estimate entropy_power(const Density& x, const EstimatorSettings& st = {});
/// J(X) = int f |grad log f|^2
Estimate fisher(const Density& x, const EstimatorSettings& st = {});
/// D(X | G_s) and I(X | G_s) against the centered Gaussian with covariance sI.
Estimate rel_entropy_to(const Density& x, double s, const EstimatorSettings& st = {});
Estimate rel_fisher_to(const Density& x, double s, const EstimatorSettings& st = {});
inline Estimate rel_entropy(const Density& x, const EstimatorSettings& st = {}) { return rel_entropy_to(x, 1.0, st); }
inline Estimate rel_fisher(const Density& x, const EstimatorSettings& st = {}) { return rel_fisher_to(x, 1.0, st); }
/// I/2 - D
Estimate lsi_deficit(const Density& x, const EstimatorSettings& st = {});
/// N J / d
Estimate stam_defect(const Density& x, const EstimatorSettings& st = {});

/// All seven functionals from one evaluation pass. Monte Carlo errors of
/// the composite entries account for the correlation between the parts.
FunctionalCatalog catalog(const Density& x, const EstimatorSettings& st = {});

/// Residuals of
///   h(Z) - (d/2) log(2 pi e s) = -D(Z|G_s) + E|Z|^2/(2s) - d/2
///   J(Z) = I(Z|G_s) + 2d/s - E|Z|^2/s^2
/// with the relative functionals integrated directly (mixtures) so the
/// identities are a genuine cross-check. Each deficit should vanish.
std::pair<DeficitReport, DeficitReport> gaussian_identities(const Density& z, double s,
                                                             const EstimatorSettings& st = {});

}  // namespace deficit
