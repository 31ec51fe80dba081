#include "deficitlab/geometry.hpp"

#include "deficitlab/error.hpp"
#include "deficitlab/kernels.hpp"
#include "deficitlab/seed.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>

namespace deficit {

namespace {

using V3 = Eigen::Vector3d;

bool lex_less(const Vec& a, const Vec& b) {
  for (long i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

void sort_unique(std::vector<Vec>& pts) {
  std::sort(pts.begin(), pts.end(), lex_less);
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) { return a == b; }), pts.end());
}

double extent(const std::vector<Vec>& pts) {
  double s = 0.0;
  for (const auto& p : pts) s = std::max(s, p.cwiseAbs().maxCoeff());
  return std::max(s, 1e-300);
}

double cross2(const Vec& o, const Vec& a, const Vec& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Andrew's monotone chain on sorted unique points; collinear points dropped.
std::vector<Vec> hull2(const std::vector<Vec>& pts) {
  if (pts.size() < 3) return {};
  std::vector<Vec> h(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(h[k - 2], h[k - 1], p) <= 0.0) --k;
    h[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

struct Face {
  std::array<int, 3> v;
  V3 n;
  double off;
  bool alive;
};

struct Hull3 {
  std::vector<V3> pts;
  std::vector<Face> faces;
};

// Incremental hull; points are processed in their (sorted) order so the
// result depends only on the point set.
Hull3 hull3(const std::vector<Vec>& in) {
  Hull3 h;
  for (const auto& p : in) h.pts.push_back(V3(p[0], p[1], p[2]));
  const auto& P = h.pts;
  const std::size_t n = P.size();
  if (n < 4) throw Error(ErrorKind::InvalidBody, "need at least 4 points in 3-d");
  const double eps = 1e-12 * extent(in);

  // initial tetrahedron
  int i0 = 0, i1 = -1, i2 = -1, i3 = -1;
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (double d = (P[i] - P[i0]).norm(); d > best) best = d, i1 = int(i);
  if (i1 < 0 || best <= eps) throw Error(ErrorKind::InvalidBody, "points coincide");
  best = 0.0;
  const V3 dir = (P[i1] - P[i0]).normalized();
  for (std::size_t i = 0; i < n; ++i) {
    const V3 w = P[i] - P[i0];
    if (double d = (w - w.dot(dir) * dir).norm(); d > best) best = d, i2 = int(i);
  }
  if (i2 < 0 || best <= eps) throw Error(ErrorKind::InvalidBody, "points are collinear");
  best = 0.0;
  const V3 nrm = (P[i1] - P[i0]).cross(P[i2] - P[i0]).normalized();
  for (std::size_t i = 0; i < n; ++i)
    if (double d = std::abs((P[i] - P[i0]).dot(nrm)); d > best) best = d, i3 = int(i);
  if (i3 < 0 || best <= eps) throw Error(ErrorKind::InvalidBody, "points are coplanar");

  const V3 inside = (P[i0] + P[i1] + P[i2] + P[i3]) / 4.0;
  std::map<std::pair<int, int>, int> edge;  // directed edge -> face
  auto add_face = [&](int a, int b, int c) {
    V3 nn = (P[b] - P[a]).cross(P[c] - P[a]);
    if (nn.dot(inside - P[a]) > 0.0) {
      std::swap(b, c);
      nn = -nn;
    }
    nn.normalize();
    const int id = int(h.faces.size());
    h.faces.push_back({{a, b, c}, nn, nn.dot(P[a]), true});
    edge[{a, b}] = id;
    edge[{b, c}] = id;
    edge[{c, a}] = id;
  };
  add_face(i0, i1, i2);
  add_face(i0, i1, i3);
  add_face(i0, i2, i3);
  add_face(i1, i2, i3);

  for (std::size_t pi = 0; pi < n; ++pi) {
    const int p = int(pi);
    if (p == i0 || p == i1 || p == i2 || p == i3) continue;
    std::vector<int> visible;
    for (std::size_t f = 0; f < h.faces.size(); ++f)
      if (h.faces[f].alive && h.faces[f].n.dot(P[pi]) - h.faces[f].off > eps) visible.push_back(int(f));
    if (visible.empty()) continue;
    std::vector<char> is_visible(h.faces.size(), 0);
    for (int f : visible) is_visible[std::size_t(f)] = 1;
    std::vector<std::pair<int, int>> horizon;
    for (int f : visible) {
      const auto& v = h.faces[std::size_t(f)].v;
      for (int e = 0; e < 3; ++e) {
        const int a = v[std::size_t(e)], b = v[std::size_t((e + 1) % 3)];
        const auto it = edge.find({b, a});
        if (it == edge.end() || !is_visible[std::size_t(it->second)]) horizon.push_back({a, b});
      }
    }
    for (int f : visible) {
      auto& face = h.faces[std::size_t(f)];
      face.alive = false;
      for (int e = 0; e < 3; ++e) edge.erase({face.v[std::size_t(e)], face.v[std::size_t((e + 1) % 3)]});
    }
    for (auto [a, b] : horizon) {
      // keep the visible face's orientation: a -> b -> p seen from outside
      V3 nn = (P[b] - P[a]).cross(P[pi] - P[a]);
      nn.normalize();
      const int id = int(h.faces.size());
      h.faces.push_back({{a, b, p}, nn, nn.dot(P[a]), true});
      edge[{a, b}] = id;
      edge[{b, p}] = id;
      edge[{p, a}] = id;
    }
  }
  return h;
}

}  // namespace

ConvexBody::ConvexBody(int dim, std::vector<Vec> points) : dim_(dim) {
  if (dim != 2 && dim != 3) throw Error(ErrorKind::InvalidDimension, "bodies live in d = 2 or 3");
  for (const auto& p : points)
    if (p.size() != dim || !p.allFinite()) throw Error(ErrorKind::InvalidBody, "vertex has wrong dimension or is not finite");
  sort_unique(points);
  const double scale = extent(points);
  if (dim == 2) {
    vertices_ = hull2(points);
    if (vertices_.size() < 3) throw Error(ErrorKind::InvalidBody, "hull is not full dimensional");
    double area = 0.0, perim = 0.0;
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      const Vec& a = vertices_[i];
      const Vec& b = vertices_[(i + 1) % vertices_.size()];
      area += a[0] * b[1] - a[1] * b[0];
      perim += (b - a).norm();
    }
    volume_ = 0.5 * area;
    surface_ = perim;
  } else {
    const Hull3 h = hull3(points);
    std::vector<int> remap(h.pts.size(), -1);
    for (const auto& f : h.faces)
      if (f.alive)
        for (int v : f.v) remap[std::size_t(v)] = 0;
    for (std::size_t i = 0; i < remap.size(); ++i) {
      if (remap[i] < 0) continue;
      remap[i] = int(vertices_.size());
      vertices_.push_back(points[i]);
    }
    Vec c = Vec::Zero(3);
    for (const auto& v : vertices_) c += v;
    c /= double(vertices_.size());
    const V3 cc(c[0], c[1], c[2]);
    for (const auto& f : h.faces) {
      if (!f.alive) continue;
      const V3 &a = h.pts[std::size_t(f.v[0])], &b = h.pts[std::size_t(f.v[1])], &d = h.pts[std::size_t(f.v[2])];
      facets_.push_back({std::size_t(remap[std::size_t(f.v[0])]), std::size_t(remap[std::size_t(f.v[1])]),
                         std::size_t(remap[std::size_t(f.v[2])])});
      volume_ += (a - cc).dot((b - cc).cross(d - cc)) / 6.0;
      surface_ += 0.5 * (b - a).cross(d - a).norm();
    }
  }
  if (!(volume_ > 1e-12 * std::pow(scale, dim))) throw Error(ErrorKind::InvalidBody, "hull has no volume");
}

ConvexBody ConvexBody::translated(const Vec& shift) const {
  std::vector<Vec> v = vertices_;
  for (auto& p : v) p += shift;
  return ConvexBody(dim_, std::move(v));
}

ConvexBody ConvexBody::scaled(double s) const {
  if (!(s > 0.0)) throw Error(ErrorKind::InvalidScale, "scale factor must be positive");
  std::vector<Vec> v = vertices_;
  for (auto& p : v) p *= s;
  return ConvexBody(dim_, std::move(v));
}

ConvexBody minkowski_sum(const ConvexBody& a, const std::vector<Vec>& points) {
  if (points.empty()) throw Error(ErrorKind::InvalidPair, "empty summand");
  std::vector<Vec> sums;
  sums.reserve(a.vertices().size() * points.size());
  for (const auto& u : a.vertices())
    for (const auto& v : points) {
      if (v.size() != a.dim()) throw Error(ErrorKind::InvalidPair, "summands have different dimensions");
      sums.push_back(u + v);
    }
  return ConvexBody(a.dim(), std::move(sums));
}

ConvexBody minkowski_sum(const ConvexBody& a, const ConvexBody& b) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::InvalidPair, "bodies have different dimensions");
  return minkowski_sum(a, b.vertices());
}

double vol(const ConvexBody& a) { return a.volume(); }
double surface(const ConvexBody& a) { return a.surface(); }

double unit_ball_volume(int d) { return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0); }

IsoReport iso_report(const ConvexBody& a, std::string id) {
  const double d = a.dim();
  IsoReport r;
  r.id = std::move(id);
  r.volume = a.volume();
  r.surface = a.surface();
  r.ball_surface = d * std::pow(unit_ball_volume(a.dim()), 1.0 / d) * std::pow(r.volume, (d - 1.0) / d);
  r.ratio = r.surface / r.ball_surface;
  return r;
}

double iso_ratio(const ConvexBody& a) { return iso_report(a).ratio; }

DeficitReport conjecture1_deficit(const ConvexBody& a, const ConvexBody& b) {
  const double d = a.dim();
  const ConvexBody s = minkowski_sum(a, b);
  const double ra = std::pow(a.volume(), 1.0 / d), rb = std::pow(b.volume(), 1.0 / d);
  const double lambda = rb / (ra + rb);
  const double rhs = (ra + rb) * (lambda * iso_ratio(a) + (1.0 - lambda) * iso_ratio(b));
  return make_report("conjecture1", Estimate::closed(std::pow(s.volume(), 1.0 / d)), Estimate::closed(rhs),
                     {{"lambda", lambda}}, false);
}

DeficitReport conjecture2_deficit(const ConvexBody& a, const ConvexBody& b) {
  const ConvexBody s = minkowski_sum(a, b);
  return make_report("conjecture2", Estimate::closed(iso_ratio(s)), Estimate::closed(iso_ratio(a) * iso_ratio(b)), {},
                     false);
}

DeficitReport brunn_minkowski_deficit(const ConvexBody& a, const ConvexBody& b) {
  const double d = a.dim();
  const ConvexBody s = minkowski_sum(a, b);
  return make_report("brunn_minkowski",
                     Estimate::closed(std::pow(a.volume(), 1.0 / d) + std::pow(b.volume(), 1.0 / d)),
                     Estimate::closed(std::pow(s.volume(), 1.0 / d)));
}

DeficitReport isoperimetric_deficit(const ConvexBody& a) {
  return make_report("isoperimetric", Estimate::closed(1.0), Estimate::closed(iso_ratio(a)));
}

ConvexBody box(const std::vector<double>& sides) {
  const int d = int(sides.size());
  std::vector<Vec> v;
  for (int mask = 0; mask < (1 << d); ++mask) {
    Vec p(d);
    for (int j = 0; j < d; ++j) p[j] = (mask >> j) & 1 ? sides[std::size_t(j)] : 0.0;
    v.push_back(p);
  }
  return ConvexBody(d, std::move(v));
}

ConvexBody regular_polygon(std::size_t n, double r) {
  std::vector<Vec> v;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = 2.0 * std::numbers::pi * double(k) / double(n);
    Vec p(2);
    p << r * std::cos(a), r * std::sin(a);
    v.push_back(p);
  }
  return ConvexBody(2, std::move(v));
}

ConvexBody ball_polytope(int dim, std::size_t n, double r) {
  if (dim == 2) return regular_polygon(n, r);
  std::vector<Vec> v;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t k = 0; k < n; ++k) {
    const double z = 1.0 - 2.0 * (double(k) + 0.5) / double(n);
    const double rho = std::sqrt(1.0 - z * z);
    const double a = golden * double(k);
    Vec p(3);
    p << r * rho * std::cos(a), r * rho * std::sin(a), r * z;
    v.push_back(p);
  }
  return ConvexBody(3, std::move(v));
}

std::string_view to_string(BodyGenerator g) {
  switch (g) {
    case BodyGenerator::GaussianCloud: return "gaussian";
    case BodyGenerator::Sphere: return "sphere";
    case BodyGenerator::Anisotropic: return "anisotropic";
  }
  return "unknown";
}

ConvexBody random_body(std::uint64_t seed, int dim, std::size_t k, BodyGenerator gen) {
  if (dim != 2 && dim != 3) throw Error(ErrorKind::InvalidDimension, "bodies live in d = 2 or 3");
  if (k < std::size_t(dim) + 1) throw Error(ErrorKind::InvalidBody, "need k >= dim + 1 points");
  constexpr int kAttempts = 16;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    std::mt19937_64 rng(attempt == 0 ? seed : derive_seed(seed, {std::uint64_t(attempt)}));
    std::normal_distribution<double> normal;
    Mat pts(long(k), dim);
    for (long i = 0; i < pts.rows(); ++i)
      for (int j = 0; j < dim; ++j) pts(i, j) = normal(rng);
    if (gen == BodyGenerator::Sphere) {
      for (long i = 0; i < pts.rows(); ++i) pts.row(i).normalize();
    } else if (gen == BodyGenerator::Anisotropic) {
      Vec stretch(dim);
      for (int j = 0; j < dim; ++j) stretch[j] = std::exp(1.5 * normal(rng));
      Mat g(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = normal(rng);
      const Mat rot = Eigen::HouseholderQR<Mat>(g).householderQ();
      pts = (pts * stretch.asDiagonal()) * rot.transpose();
    }
    std::vector<Vec> v;
    for (long i = 0; i < pts.rows(); ++i) v.push_back(pts.row(i).transpose());
    try {
      return ConvexBody(dim, std::move(v));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InvalidBody) throw;
    }
  }
  throw Error(ErrorKind::InvalidBody, "random body stayed degenerate after retries");
}

namespace {

struct PairPlan {
  std::uint64_t seed_a, seed_b;
  std::size_t k_a, k_b;
  BodyGenerator gen_a, gen_b;
};

PairPlan plan(const SearchConfig& cfg, std::size_t index) {
  if (cfg.generators.empty()) throw Error(ErrorKind::InvalidConfig, "no body generators");
  if (cfg.k_min < std::size_t(cfg.dim) + 1 || cfg.k_max < cfg.k_min)
    throw Error(ErrorKind::InvalidConfig, "need dim + 1 <= k_min <= k_max");
  std::mt19937_64 rng(derive_seed(cfg.seed, {0x67656f6dULL, std::uint64_t(cfg.dim), index}));
  const std::size_t span = cfg.k_max - cfg.k_min + 1;
  PairPlan p;
  p.seed_a = rng();
  p.seed_b = rng();
  p.k_a = cfg.k_min + std::size_t(rng() % span);
  p.k_b = cfg.k_min + std::size_t(rng() % span);
  p.gen_a = cfg.generators[std::size_t(rng() % cfg.generators.size())];
  p.gen_b = cfg.generators[std::size_t(rng() % cfg.generators.size())];
  return p;
}

nlohmann::json body_json(const ConvexBody& b) {
  nlohmann::json v = nlohmann::json::array();
  for (const auto& p : b.vertices()) v.push_back(std::vector<double>(p.data(), p.data() + p.size()));
  return {{"dim", b.dim()}, {"vertices", v}, {"volume", b.volume()}, {"surface", b.surface()}};
}

std::vector<std::size_t> worst(const std::vector<SearchRow>& rows, double SearchRow::*field, std::size_t keep) {
  std::vector<std::size_t> idx(rows.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rows[a].*field < rows[b].*field; });
  if (idx.size() > keep) idx.resize(keep);
  return idx;
}

}  // namespace

std::pair<ConvexBody, ConvexBody> search_bodies(const SearchConfig& cfg, std::size_t index) {
  const PairPlan p = plan(cfg, index);
  return {random_body(p.seed_a, cfg.dim, p.k_a, p.gen_a), random_body(p.seed_b, cfg.dim, p.k_b, p.gen_b)};
}

SearchReport search_counterexamples(const SearchConfig& cfg) {
  if (cfg.dim != 2 && cfg.dim != 3) throw Error(ErrorKind::InvalidConfig, "search dim must be 2 or 3");
  plan(cfg, 0);  // validates
  SearchReport rep;
  rep.rows.resize(cfg.pairs);
  std::exception_ptr failure;
  const long n = long(cfg.pairs);
#pragma omp parallel for schedule(dynamic, 16) num_threads(kernels::threads())
  for (long i = 0; i < n; ++i) {
    try {
      const PairPlan p = plan(cfg, std::size_t(i));
      const auto [a, b] = search_bodies(cfg, std::size_t(i));
      SearchRow& r = rep.rows[std::size_t(i)];
      r.seed_a = p.seed_a;
      r.seed_b = p.seed_b;
      r.dim = cfg.dim;
      r.conj1 = conjecture1_deficit(a, b).deficit;
      r.conj2 = conjecture2_deficit(a, b).deficit;
      r.brunn_minkowski = brunn_minkowski_deficit(a, b).deficit;
      r.iso_a = iso_ratio(a);
      r.iso_b = iso_ratio(b);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  rep.min_brunn_minkowski = std::numeric_limits<double>::infinity();
  rep.min_iso = std::numeric_limits<double>::infinity();
  for (const auto& r : rep.rows) {
    rep.negative_conj1 += r.conj1 < 0.0;
    rep.negative_conj2 += r.conj2 < 0.0;
    rep.min_brunn_minkowski = std::min(rep.min_brunn_minkowski, r.brunn_minkowski);
    rep.min_iso = std::min({rep.min_iso, r.iso_a, r.iso_b});
    if (r.brunn_minkowski < -1e-9 || r.iso_a < 1.0 - 1e-9 || r.iso_b < 1.0 - 1e-9) ++rep.sanity_failures;
  }
  rep.worst_conj1 = worst(rep.rows, &SearchRow::conj1, cfg.keep);
  rep.worst_conj2 = worst(rep.rows, &SearchRow::conj2, cfg.keep);

  if (cfg.persist_dir) {
    std::filesystem::create_directories(*cfg.persist_dir);
    auto persist = [&](const std::vector<std::size_t>& idx, const char* name, double SearchRow::*field) {
      for (std::size_t rank = 0; rank < idx.size(); ++rank) {
        const SearchRow& r = rep.rows[idx[rank]];
        const auto [a, b] = search_bodies(cfg, idx[rank]);
        nlohmann::json j{{"conjecture", name}, {"deficit", r.*field}, {"dim", r.dim}, {"index", idx[rank]},
                         {"seed_a", r.seed_a}, {"seed_b", r.seed_b}, {"A", body_json(a)}, {"B", body_json(b)}};
        std::ofstream out(*cfg.persist_dir / (std::string(name) + "_d" + std::to_string(cfg.dim) + "_rank" +
                                              std::to_string(rank) + ".json"));
        out << j.dump(2) << '\n';
      }
    };
    persist(rep.worst_conj1, "conjecture1", &SearchRow::conj1);
    persist(rep.worst_conj2, "conjecture2", &SearchRow::conj2);
  }
  return rep;
}

}  // namespace deficit
