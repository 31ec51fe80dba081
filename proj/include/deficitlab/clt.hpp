#pragma once

#include "deficitlab/density.hpp"
#include "deficitlab/estimate.hpp"
#include "deficitlab/functionals.hpp"

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace deficit {

struct CltSettings {
  EstimatorSettings estimator{};
  ConvolveOptions convolve{};
  /// Nodes per axis when a mixture has to be discretized (d = 1).
  std::size_t grid_points_1d = std::size_t(1) << 14;
  std::size_t grid_points_2d = 512;
};

/// Law of n^{-1/2} (Z_1 + ... + Z_n), built along the binary expansion of
/// n from U_{a+b} = sqrt(a/(a+b)) U_a + sqrt(b/(a+b)) U_b. Mixtures stay
/// exact (components merged after every step) while each pairwise product
/// fits the component budget; otherwise the law is discretized first.
Density normalized_sum(const Density& z, std::size_t n, const CltSettings& st = {});

struct CltRow {
  std::size_t n = 0;
  Estimate D, I, dlsi;
  Method method = Method::ClosedForm;
  /// D(Z) - (n-1) dLSI(Z) <= D(U_n)
  DeficitReport ent_clt;
  /// I(Z)/2 - n dLSI(Z) + dLSI(U_n) <= I(U_n)/2
  DeficitReport fi_clt;
  /// D(U_2n) <= D(U_n)
  DeficitReport doubling;
};

struct CltTrace {
  Density base;
  std::vector<CltRow> rows;
};

/// Rows n = 1..n_max for the centered base.
CltTrace clt_trace(const Density& z, std::size_t n_max, const CltSettings& st = {});

/// dLSI(U_{m+n}) <= dLSI(U_m) + dLSI(U_n) for each pair.
std::vector<DeficitReport> subadditivity_check(const Density& z,
                                               const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                               const CltSettings& st = {});

}  // namespace deficit
