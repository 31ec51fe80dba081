#include "deficitlab/io.hpp"

#include "deficitlab/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace deficit {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorKind::InvalidConfig, "not a number: " + std::string(s));
  return v;
}

namespace {

Json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Json mat_json(const Mat& m) {
  Json rows = Json::array();
  for (long i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

Vec vec_from(const Json& j, int dim) {
  const auto v = j.get<std::vector<double>>();
  if (int(v.size()) != dim) throw Error(ErrorKind::InvalidDensity, "vector has wrong length");
  return Eigen::Map<const Vec>(v.data(), long(v.size()));
}

Mat mat_from(const Json& j, int dim) {
  if (!j.is_array() || int(j.size()) != dim) throw Error(ErrorKind::InvalidDensity, "matrix has wrong shape");
  Mat m(dim, dim);
  for (int i = 0; i < dim; ++i) m.row(i) = vec_from(j[std::size_t(i)], dim).transpose();
  return m;
}

}  // namespace

Json to_json(const Density& x) {
  if (const auto* m = x.mixture()) {
    Json comps = Json::array();
    for (const auto& c : m->components())
      comps.push_back({{"weight", c.weight}, {"mean", vec_json(c.mean)}, {"cov", mat_json(c.cov)}});
    return {{"kind", "mixture"}, {"dim", m->dim()}, {"components", comps}};
  }
  if (const auto* g = x.grid())
    return {{"kind", "grid"},        {"dim", g->dim()},       {"origin", g->origin()},
            {"spacing", g->spacing()}, {"counts", g->counts()}, {"values", g->values()}};
  const auto* s = x.samples();
  return {{"kind", "samples"}, {"dim", s->dim()}, {"points", mat_json(s->points())}, {"seed", s->seed()}};
}

Density density_from_json(const Json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    const int dim = j.at("dim").get<int>();
    if (dim < 1) throw Error(ErrorKind::InvalidDimension, "dim must be positive");
    if (kind == "mixture") {
      std::vector<GaussianComponent> comps;
      for (const auto& c : j.at("components"))
        comps.push_back({c.at("weight").get<double>(), vec_from(c.at("mean"), dim), mat_from(c.at("cov"), dim)});
      return GaussianMixture(dim, std::move(comps));
    }
    if (kind == "grid")
      return GridDensity(dim, j.at("origin").get<std::vector<double>>(), j.at("spacing").get<std::vector<double>>(),
                         j.at("counts").get<std::vector<std::size_t>>(), j.at("values").get<std::vector<double>>());
    if (kind == "samples") {
      const Json& pts = j.at("points");
      Mat m(long(pts.size()), dim);
      for (std::size_t i = 0; i < pts.size(); ++i) m.row(long(i)) = vec_from(pts[i], dim).transpose();
      return SampleCloud(dim, std::move(m), j.value("seed", std::uint64_t{0}));
    }
    throw Error(ErrorKind::InvalidDensity, "unknown density kind '" + kind + "'");
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::InvalidDensity, std::string("malformed density JSON: ") + e.what());
  }
}

Density load_density(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open " + p.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::InvalidDensity, p.string() + ": " + e.what());
  }
  return density_from_json(j);
}

void save_density(const Density& x, const std::filesystem::path& p) {
  std::ofstream out(p);
  out << to_json(x).dump(2) << '\n';
}

namespace {

Density two_bumps_1d(double a, double s2) {
  Mat c(1, 1);
  c << s2;
  Vec m1(1), m2(1);
  m1 << -a;
  m2 << a;
  return GaussianMixture(1, {{0.5, m1, c}, {0.5, m2, c}});
}

const std::map<std::string, Density (*)()>& presets() {
  static const std::map<std::string, Density (*)()> table{
      {"std-gaussian-1d", [] { return standard_gaussian(1); }},
      {"std-gaussian-2d", [] { return standard_gaussian(2); }},
      {"std-gaussian-3d", [] { return standard_gaussian(3); }},
      {"gaussian-var2-1d", [] { return gaussian(Vec::Zero(1), Mat::Identity(1, 1) * 2.0); }},
      // unit variance: a^2 + s^2 = 1 with s^2 = a^2 / 4
      {"bimodal-1d", [] { return two_bumps_1d(std::sqrt(0.8), 0.2); }},
      {"bimodal-2d",
       [] {
         Vec m1(2), m2(2);
         m1 << -1.0, 0.0;
         m2 << 1.0, 0.0;
         Mat c(2, 2);
         c << 0.25, 0.1, 0.1, 1.0;
         return Density(GaussianMixture(2, {{0.5, m1, c}, {0.5, m2, c}}));
       }},
      {"skewed-1d",
       [] {
         Vec m1(1), m2(1);
         m1 << -0.3;
         m2 << 0.7;
         Mat c1(1, 1), c2(1, 1);
         c1 << 0.5;
         c2 << 1.5;
         return Density(GaussianMixture(1, {{0.7, m1, c1}, {0.3, m2, c2}}));
       }},
  };
  return table;
}

}  // namespace

std::vector<std::string> density_presets() {
  std::vector<std::string> out;
  for (const auto& [k, v] : presets()) out.push_back(k);
  return out;
}

Density resolve_density(const std::string& name_or_path) {
  if (const auto it = presets().find(name_or_path); it != presets().end()) return it->second();
  return load_density(name_or_path);
}

Json to_json(const ConvexBody& b) {
  Json v = Json::array();
  for (const auto& p : b.vertices()) v.push_back(vec_json(p));
  return {{"dim", b.dim()}, {"vertices", v}};
}

ConvexBody body_from_json(const Json& j) {
  try {
    const int dim = j.at("dim").get<int>();
    std::vector<Vec> pts;
    for (const auto& p : j.at("vertices")) {
      const auto v = p.get<std::vector<double>>();
      pts.push_back(Eigen::Map<const Vec>(v.data(), long(v.size())));
    }
    return ConvexBody(dim, std::move(pts));
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::InvalidBody, std::string("malformed body JSON: ") + e.what());
  }
}

}  // namespace deficit
