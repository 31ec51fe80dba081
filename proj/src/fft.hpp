#pragma once

#include <cstddef>
#include <vector>

namespace deficit::detail {

/// Linear (zero-padded) convolution of two row-major arrays of equal rank
/// (1 or 2). Result extents are na + nb - 1 per axis. Plain sums; callers
/// multiply by the cell volume.
std::vector<double> linear_convolve(const std::vector<double>& a, const std::vector<std::size_t>& na,
                                    const std::vector<double>& b, const std::vector<std::size_t>& nb);

/// Multiplies the spectrum of `a` (padded by `pad` nodes per side) by
/// exp(-t |omega|^2 / 2); i.e. convolves the trigonometric interpolant
/// with N(0, t I). Result extents are na + 2 pad.
std::vector<double> gaussian_smooth(const std::vector<double>& a, const std::vector<std::size_t>& na,
                                    const std::vector<double>& spacing, const std::vector<std::size_t>& pad,
                                    double t);

}  // namespace deficit::detail
