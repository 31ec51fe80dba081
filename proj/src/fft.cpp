#include "fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

namespace deficit::detail {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t next_fast_size(std::size_t n) {
  std::size_t best = 1;
  while (best < n) best <<= 1;
  // allow 3 * 2^k when it is tighter
  for (std::size_t p = 3; p < best; p <<= 1)
    if (p >= n && p < best) best = p;
  return best;
}

// Owns an FFTW real <-> complex pair for a padded shape.
class RealTransform {
 public:
  explicit RealTransform(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    real_size_ = 1;
    for (auto s : shape_) real_size_ *= s;
    complex_size_ = real_size_ / shape_.back() * (shape_.back() / 2 + 1);
    real_ = fftw_alloc_real(real_size_);
    spec_ = fftw_alloc_complex(complex_size_);
    std::lock_guard lock(planner_mutex());
    int rank = int(shape_.size());
    int n[2] = {int(shape_[0]), rank > 1 ? int(shape_[1]) : 0};
    forward_ = fftw_plan_dft_r2c(rank, n, real_, spec_, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r(rank, n, spec_, real_, FFTW_ESTIMATE);
  }
  ~RealTransform() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(real_);
    fftw_free(spec_);
  }
  RealTransform(const RealTransform&) = delete;
  RealTransform& operator=(const RealTransform&) = delete;

  double* real() { return real_; }
  std::complex<double>* spectrum() { return reinterpret_cast<std::complex<double>*>(spec_); }
  std::size_t real_size() const { return real_size_; }
  std::size_t complex_size() const { return complex_size_; }
  const std::vector<std::size_t>& shape() const { return shape_; }
  void forward() { fftw_execute(forward_); }
  void backward() { fftw_execute(backward_); }

  void load(const std::vector<double>& a, const std::vector<std::size_t>& na, const std::vector<std::size_t>& offset) {
    std::fill(real_, real_ + real_size_, 0.0);
    if (shape_.size() == 1) {
      for (std::size_t i = 0; i < na[0]; ++i) real_[i + offset[0]] = a[i];
    } else {
      for (std::size_t i = 0; i < na[0]; ++i)
        for (std::size_t j = 0; j < na[1]; ++j) real_[(i + offset[0]) * shape_[1] + j + offset[1]] = a[i * na[1] + j];
    }
  }

  std::vector<double> extract(const std::vector<std::size_t>& n) const {
    std::vector<double> out;
    const double norm = 1.0 / double(real_size_);
    if (shape_.size() == 1) {
      out.assign(real_, real_ + n[0]);
    } else {
      out.resize(n[0] * n[1]);
      for (std::size_t i = 0; i < n[0]; ++i)
        for (std::size_t j = 0; j < n[1]; ++j) out[i * n[1] + j] = real_[i * shape_[1] + j];
    }
    for (auto& v : out) v *= norm;
    return out;
  }

 private:
  std::vector<std::size_t> shape_;
  std::size_t real_size_ = 0;
  std::size_t complex_size_ = 0;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace

std::vector<double> linear_convolve(const std::vector<double>& a, const std::vector<std::size_t>& na,
                                    const std::vector<double>& b, const std::vector<std::size_t>& nb) {
  std::vector<std::size_t> out_n(na.size()), shape(na.size()), zero(na.size(), 0);
  for (std::size_t k = 0; k < na.size(); ++k) {
    out_n[k] = na[k] + nb[k] - 1;
    shape[k] = next_fast_size(out_n[k]);
  }
  RealTransform ta(shape), tb(shape);
  ta.load(a, na, zero);
  tb.load(b, nb, zero);
  ta.forward();
  tb.forward();
  auto* sa = ta.spectrum();
  const auto* sb = tb.spectrum();
  for (std::size_t i = 0; i < ta.complex_size(); ++i) sa[i] *= sb[i];
  ta.backward();
  return ta.extract(out_n);
}

std::vector<double> gaussian_smooth(const std::vector<double>& a, const std::vector<std::size_t>& na,
                                    const std::vector<double>& spacing, const std::vector<std::size_t>& pad,
                                    double t) {
  const std::size_t rank = na.size();
  std::vector<std::size_t> out_n(rank), shape(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    out_n[k] = na[k] + 2 * pad[k];
    shape[k] = next_fast_size(out_n[k]);
  }
  RealTransform tr(shape);
  tr.load(a, na, pad);
  tr.forward();
  auto* s = tr.spectrum();
  auto omega = [&](std::size_t axis, std::size_t idx) {
    const double n = double(shape[axis]);
    const double k = idx <= shape[axis] / 2 ? double(idx) : double(idx) - n;
    return 2.0 * std::numbers::pi * k / (n * spacing[axis]);
  };
  if (rank == 1) {
    for (std::size_t i = 0; i < shape[0] / 2 + 1; ++i) {
      const double w = omega(0, i);
      s[i] *= std::exp(-0.5 * t * w * w);
    }
  } else {
    const std::size_t nc = shape[1] / 2 + 1;
    for (std::size_t i = 0; i < shape[0]; ++i) {
      const double w0 = omega(0, i);
      for (std::size_t j = 0; j < nc; ++j) {
        const double w1 = omega(1, j);
        s[i * nc + j] *= std::exp(-0.5 * t * (w0 * w0 + w1 * w1));
      }
    }
  }
  tr.backward();
  return tr.extract(out_n);
}

}  // namespace deficit::detail
