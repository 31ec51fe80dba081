#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP version that computes every output element with the same code,
// so the two agree bit for bit at any thread count.

#include "deficitlab/density.hpp"
#include "deficitlab/quadrature.hpp"

#include <span>

namespace deficit::kernels {

/// log f and grad log f at n points (row-major n x d).
struct MixtureEvalArgs {
  const GaussianMixture& mixture;
  std::span<const double> points;
  std::span<double> log_density;
  std::span<double> score;  // n x d, may be empty
};

/// out_i = -eps log sum_j exp(log_b_j + (g_j - |x_i - y_j|^2) / eps)
struct SoftminArgs {
  std::span<const double> x;  // n x d
  std::span<const double> y;  // m x d
  int dim;
  std::span<const double> g;
  std::span<const double> log_b;
  double eps;
  std::span<double> out;  // n
};

/// out_i = sum_k w_k f(e^{-t} x_i + sqrt(1 - e^{-2t}) y_k)
struct MehlerArgs {
  const CubicSpline1d& f;
  std::span<const double> x;
  double t;
  const GaussHermite& rule;
  std::span<double> out;
};

namespace serial {
void mixture_eval(const MixtureEvalArgs& a);
void softmin(const SoftminArgs& a);
void mehler(const MehlerArgs& a);
}  // namespace serial

namespace parallel {
void mixture_eval(const MixtureEvalArgs& a);
void softmin(const SoftminArgs& a);
void mehler(const MehlerArgs& a);
}  // namespace parallel

using parallel::mehler;
using parallel::mixture_eval;
using parallel::softmin;

/// Thread count used by the parallel kernels (0 = OpenMP default).
void set_threads(int n);
int threads();

}  // namespace deficit::kernels
