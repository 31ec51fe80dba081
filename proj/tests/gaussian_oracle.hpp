#pragma once

// Deficits of every inequality for centered Gaussian inputs, from the
// closed forms in oracles.hpp.

#include "oracles.hpp"

#include <algorithm>
#include <vector>

namespace oracle {

struct PairTruth {
  double epi, fii, interpolation, conv_lsi, sandwich_lower, sandwich_upper;
  double reverse_epi, epi_classical, reverse_fii, fii_classical, stam, three_epi;
};

inline GaussianTruth at(const Mat& s) { return gaussian_truth(Vec::Zero(s.rows()), s); }

inline PairTruth pair_truth(const Mat& sx, const Mat& sy, double th, double t, const std::vector<double>& grid) {
  const int d = int(sx.rows());
  const Mat id = Mat::Identity(d, d);
  const GaussianTruth x = at(sx), y = at(sy), z = at(th * sx + (1 - th) * sy), s = at(sx + sy);
  PairTruth p;
  p.epi = th * x.D + (1 - th) * y.D - z.D;
  p.fii = th * x.I + (1 - th) * y.I - z.I;
  p.interpolation = (1 - th) / 2 * x.I + th / 2 * y.I + z.D - x.D - y.D;
  p.conv_lsi = x.dlsi + y.dlsi - z.dlsi;
  auto L = [&](double a) {
    const GaussianTruth za = at(a * sx + (1 - a) * sy);
    return a / 2 * x.I + (1 - a) / 2 * y.I - za.I / 2 + za.dlsi;
  };
  double sup = -1e300;
  for (double a : grid) sup = std::max(sup, L(a));
  p.sandwich_lower = x.dlsi + y.dlsi - sup;
  p.sandwich_upper = 2 * L(0.5) - x.dlsi - y.dlsi;
  p.reverse_epi = y.N * x.p + x.N * y.p - s.N;
  p.epi_classical = s.N - x.N - y.N;
  p.reverse_fii = (1 / x.J + 1 / y.J) * x.p * y.p - 1 / s.J;
  p.fii_classical = 1 / s.J - 1 / x.J - 1 / y.J;
  p.stam = x.p * y.p - s.p;
  p.three_epi = at(sx + t * id).N * at(sy + t * id).N - x.N * y.N - at(sx + sy + t * id).N * t;
  return p;
}

}  // namespace oracle
