#include "deficitlab/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace deficit::kernels {

namespace {

inline void mixture_point(const MixtureEvalArgs& a, std::size_t i) {
  const std::size_t d = std::size_t(a.mixture.dim());
  std::span<const double> p = a.points.subspan(i * d, d);
  if (a.score.empty()) {
    a.log_density[i] = a.mixture.log_density(p);
  } else {
    a.log_density[i] = a.mixture.log_density_and_score(p, a.score.subspan(i * d, d));
  }
}

inline void softmin_row(const SoftminArgs& a, std::size_t i, double* buf) {
  const std::size_t m = a.g.size();
  const std::size_t d = std::size_t(a.dim);
  const double* xi = a.x.data() + i * d;
  const double inv = 1.0 / a.eps;
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) {
    const double* yj = a.y.data() + j * d;
    double c = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = xi[k] - yj[k];
      c += diff * diff;
    }
    buf[j] = a.log_b[j] + (a.g[j] - c) * inv;
    mx = std::max(mx, buf[j]);
  }
  const double s = (Eigen::Map<const Eigen::ArrayXd>(buf, long(m)) - mx).exp().sum();
  a.out[i] = -a.eps * (mx + std::log(s));
}

inline void mehler_point(const MehlerArgs& a, std::size_t i) {
  const double decay = std::exp(-a.t);
  const double spread = std::sqrt(-std::expm1(-2.0 * a.t));
  const double base = decay * a.x[i];
  double acc = 0.0;
  for (std::size_t k = 0; k < a.rule.nodes.size(); ++k) acc += a.rule.weights[k] * a.f(base + spread * a.rule.nodes[k]);
  a.out[i] = acc;
}

int g_threads = 0;

}  // namespace

void set_threads(int n) { g_threads = std::max(0, n); }
int threads() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

namespace serial {

void mixture_eval(const MixtureEvalArgs& a) {
  const std::size_t n = a.log_density.size();
  for (std::size_t i = 0; i < n; ++i) mixture_point(a, i);
}

void softmin(const SoftminArgs& a) {
  std::vector<double> buf(a.g.size());
  for (std::size_t i = 0; i < a.out.size(); ++i) softmin_row(a, i, buf.data());
}

void mehler(const MehlerArgs& a) {
  for (std::size_t i = 0; i < a.out.size(); ++i) mehler_point(a, i);
}

}  // namespace serial

namespace parallel {

void mixture_eval(const MixtureEvalArgs& a) {
  const long n = long(a.log_density.size());
#pragma omp parallel for schedule(static) num_threads(threads())
  for (long i = 0; i < n; ++i) mixture_point(a, std::size_t(i));
}

void softmin(const SoftminArgs& a) {
  const long n = long(a.out.size());
#pragma omp parallel num_threads(threads())
  {
    std::vector<double> buf(a.g.size());
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i) softmin_row(a, std::size_t(i), buf.data());
  }
}

void mehler(const MehlerArgs& a) {
  const long n = long(a.out.size());
#pragma omp parallel for schedule(static) num_threads(threads())
  for (long i = 0; i < n; ++i) mehler_point(a, std::size_t(i));
}

}  // namespace parallel

}  // namespace deficit::kernels
