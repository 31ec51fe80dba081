#pragma once

#include "deficitlab/density.hpp"
#include "deficitlab/estimate.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace deficit {

/// Convex hull of a finite point set in R^2 or R^3. Hull, volume and
/// surface measure are computed on construction.
class ConvexBody {
 public:
  /// Throws InvalidBody when the hull is not full dimensional.
  ConvexBody(int dim, std::vector<Vec> points);

  int dim() const noexcept { return dim_; }
  /// Hull vertices: counter-clockwise in 2-d, lexicographic in 3-d.
  const std::vector<Vec>& vertices() const noexcept { return vertices_; }
  /// Triangles of the boundary (3-d only), outward oriented, indexing vertices().
  const std::vector<std::array<std::size_t, 3>>& facets() const noexcept { return facets_; }
  double volume() const noexcept { return volume_; }
  double surface() const noexcept { return surface_; }

  ConvexBody translated(const Vec& shift) const;
  ConvexBody scaled(double s) const;

 private:
  int dim_;
  std::vector<Vec> vertices_;
  std::vector<std::array<std::size_t, 3>> facets_;
  double volume_ = 0.0;
  double surface_ = 0.0;
};

ConvexBody minkowski_sum(const ConvexBody& a, const ConvexBody& b);
/// A + conv(points); points may be a single point.
ConvexBody minkowski_sum(const ConvexBody& a, const std::vector<Vec>& points);

double vol(const ConvexBody& a);
double surface(const ConvexBody& a);

/// Volume of the unit ball in R^d.
double unit_ball_volume(int d);
/// |dA| / |dB_A| with B_A the ball of the same volume.
double iso_ratio(const ConvexBody& a);

struct IsoReport {
  std::string id;
  double volume = 0.0;
  double surface = 0.0;
  double ball_surface = 0.0;
  double ratio = 0.0;
};

IsoReport iso_report(const ConvexBody& a, std::string id = {});

/// Vol(A+B)^{1/d} <= (Vol(A)^{1/d} + Vol(B)^{1/d}) (lambda iso(A) + (1-lambda) iso(B)),
/// lambda = Vol(B)^{1/d} / (Vol(A)^{1/d} + Vol(B)^{1/d}). Conjectured: never asserted.
DeficitReport conjecture1_deficit(const ConvexBody& a, const ConvexBody& b);
/// iso(A+B) <= iso(A) iso(B). Conjectured: never asserted.
DeficitReport conjecture2_deficit(const ConvexBody& a, const ConvexBody& b);
/// Vol(A)^{1/d} + Vol(B)^{1/d} <= Vol(A+B)^{1/d}
DeficitReport brunn_minkowski_deficit(const ConvexBody& a, const ConvexBody& b);
/// 1 <= iso(A)
DeficitReport isoperimetric_deficit(const ConvexBody& a);

// shapes
ConvexBody box(const std::vector<double>& sides);
/// Regular n-gon inscribed in the circle of radius r (2-d).
ConvexBody regular_polygon(std::size_t n, double r = 1.0);
/// Polytope inscribed in the unit sphere scaled by r: an n-gon in 2-d,
/// n Fibonacci-sphere points in 3-d.
ConvexBody ball_polytope(int dim, std::size_t n, double r = 1.0);

enum class BodyGenerator { GaussianCloud, Sphere, Anisotropic };

std::string_view to_string(BodyGenerator g);

/// Hull of k points from the generator; deterministic in seed. Degenerate
/// draws are retried a bounded number of times.
ConvexBody random_body(std::uint64_t seed, int dim, std::size_t k, BodyGenerator gen = BodyGenerator::GaussianCloud);

struct SearchConfig {
  int dim = 2;
  std::size_t pairs = 1000;
  std::size_t k_min = 3;
  std::size_t k_max = 12;
  std::vector<BodyGenerator> generators{BodyGenerator::GaussianCloud, BodyGenerator::Sphere,
                                        BodyGenerator::Anisotropic};
  std::uint64_t seed = 0;
  /// Worst pairs kept per conjecture.
  std::size_t keep = 5;
  /// When set, worst pairs are written here as JSON.
  std::optional<std::filesystem::path> persist_dir;
};

struct SearchRow {
  std::uint64_t seed_a = 0, seed_b = 0;
  int dim = 0;
  double conj1 = 0.0, conj2 = 0.0;
  double brunn_minkowski = 0.0;
  double iso_a = 0.0, iso_b = 0.0;
};

struct SearchReport {
  std::vector<SearchRow> rows;
  /// Indices into rows, most negative deficit first.
  std::vector<std::size_t> worst_conj1, worst_conj2;
  std::size_t negative_conj1 = 0, negative_conj2 = 0;
  /// Sanity oracles: Brunn-Minkowski and isoperimetry beyond 1e-9.
  std::size_t sanity_failures = 0;
  double min_brunn_minkowski = 0.0;
  double min_iso = 0.0;
};

/// Body pair i is drawn from seeds derived from (seed, dim, i); the result
/// does not depend on the thread count.
SearchReport search_counterexamples(const SearchConfig& cfg);

/// Rebuilds the bodies of a search row.
std::pair<ConvexBody, ConvexBody> search_bodies(const SearchConfig& cfg, std::size_t index);

}  // namespace deficit
