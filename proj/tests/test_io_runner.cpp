#include "oracles.hpp"

#include "deficitlab/error.hpp"
#include "deficitlab/io.hpp"
#include "deficitlab/kernels.hpp"
#include "deficitlab/runner.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace deficit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("deficitlab_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ErrorKind kind_of(const Json& j) {
  try {
    for (const auto& s : parse_config(j).suites) validate_suite(s);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Unsupported;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("doubles: shortest round trip and non-finite tokens") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(std::isinf(parse_double("-inf")));
    CHECK(std::isnan(parse_double("nan")));
    oracle::Rng r(3);
    for (int i = 0; i < 1000; ++i) {
      const double x = r.normal() * std::pow(10.0, r.integer(-30, 30));
      CHECK(parse_double(format_double(x)) == x);
    }
  }

  TEST_CASE("density JSON round trip") {
    oracle::Rng r(4);
    const Density m = oracle::random_mixture(r, 2, 3);
    const Density back = density_from_json(Json::parse(to_json(m).dump()));
    REQUIRE(back.mixture());
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(back.mixture()->component(k).weight == m.mixture()->component(k).weight);
      CHECK(back.mixture()->component(k).mean == m.mixture()->component(k).mean);
      CHECK(back.mixture()->component(k).cov == m.mixture()->component(k).cov);
    }
    const Density g = discretize(*standard_gaussian(1).mixture(), 8.0, 257);
    const Density gb = density_from_json(to_json(g));
    REQUIRE(gb.grid());
    REQUIRE(gb.grid()->size() == g.grid()->size());
    for (std::size_t i = 0; i < g.grid()->size(); ++i) CHECK(std::abs(gb.grid()->values()[i] - g.grid()->values()[i]) < 1e-15);
    const fs::path dir = scratch("density");
    fs::create_directories(dir);
    save_density(m, dir / "m.json");
    CHECK(load_density(dir / "m.json").mixture()->size() == 3);
    CHECK(resolve_density((dir / "m.json").string()).dim() == 2);
    fs::remove_all(dir);
    for (const auto& name : density_presets()) CHECK_NOTHROW(resolve_density(name));
  }

  TEST_CASE("body JSON round trip") {
    const ConvexBody b = random_body(3, 3, 9);
    const ConvexBody c = body_from_json(to_json(b));
    CHECK(c.volume() == doctest::Approx(b.volume()).epsilon(1e-14));
  }

  TEST_CASE("CSV write and read") {
    Csv c{{"a", "b"}, {}};
    c.add({"1", "x"});
    c.add({"2.5", "y"});
    CHECK(c.str() == "a,b\n1,x\n2.5,y\n");
    const fs::path dir = scratch("csv");
    fs::create_directories(dir);
    c.write(dir / "t.csv");
    const Csv r = Csv::read(dir / "t.csv");
    CHECK(r.header == c.header);
    CHECK(r.rows == c.rows);
    CHECK(r.column("b") == 1);
    CHECK(r.column("zz") == -1);
    fs::remove_all(dir);
  }

  TEST_CASE("report rows") {
    DeficitReport rep = make_report("epi", Estimate::closed(1.0), Estimate::closed(1.5), {{"theta", 0.25}});
    CHECK(report_header() == std::vector<std::string>{"name", "theta", "lambda", "lhs", "rhs", "deficit", "err", "verdict"});
    const auto row = report_row(rep);
    CHECK(row[0] == "epi");
    CHECK(row[1] == "0.25");
    CHECK(row[5] == "0.5");
    CHECK(row[7] == "holds");
  }
}

TEST_SUITE("runner") {
  TEST_CASE("grids") {
    const auto g = parse_grid("0:1:0.1");
    REQUIRE(g.size() == 11);
    CHECK(g[3] == 0.3);
    CHECK(g.back() == 1.0);
    CHECK(parse_grid("0.2,0.5") == std::vector<double>{0.2, 0.5});
    bool raised = false;
    try {
      parse_grid("0:1:-1");
    } catch (const Error& e) {
      raised = e.kind() == ErrorKind::InvalidConfig;
    }
    CHECK(raised);
  }

  TEST_CASE("config validation") {
    const Json base = {{"schema_version", 1}, {"master_seed", 7}, {"suites", Json::array()}};
    CHECK(parse_config(base).suites.empty());
    CHECK(kind_of({{"schema_version", 1}, {"suites", Json::array()}}) == ErrorKind::InvalidConfig);
    CHECK(kind_of({{"schema_version", 2}, {"master_seed", 1}, {"suites", Json::array()}}) == ErrorKind::InvalidConfig);
    auto with = [&](Json suite) {
      Json j = base;
      j["suites"].push_back(std::move(suite));
      return j;
    };
    CHECK(kind_of(with({{"op", "check"}, {"densities", {"std-gaussian-1d"}}, {"sigmas", -1}})) == ErrorKind::InvalidConfig);
    CHECK(kind_of(with({{"op", "check"}, {"densities", {"std-gaussian-1d"}}, {"estimator", {{"abs_tol", -1e-6}}}})) ==
          ErrorKind::InvalidConfig);
    CHECK(kind_of(with({{"op", "frobnicate"}})) == ErrorKind::InvalidConfig);
    CHECK(kind_of(with({{"op", "clt"}, {"bogus", 1}})) == ErrorKind::InvalidConfig);
    CHECK(kind_of(with({{"op", "check"}, {"densities", {"std-gaussian-1d"}}, {"ineq", "nope"}})) == ErrorKind::InvalidConfig);
    Json dup = with({{"op", "clt"}, {"name", "a"}});
    dup["suites"].push_back({{"op", "clt"}, {"name", "a"}});
    CHECK(kind_of(dup) == ErrorKind::InvalidConfig);
  }

  TEST_CASE("empty suite list exits 0 with zero rows") {
    RunConfig cfg = parse_config({{"schema_version", 1}, {"master_seed", 1}, {"suites", Json::array()}});
    cfg.output_dir = scratch("empty");
    const RunResult r = run(cfg);
    CHECK(r.exit_code == 0);
    CHECK(r.summary.at("rows") == 0);
    CHECK(fs::exists(cfg.output_dir / "summary.json"));
    fs::remove_all(cfg.output_dir);
  }

  TEST_CASE("closed-form gaussian suite: no violations") {
    const Json j = {{"schema_version", 1},
                    {"master_seed", 5},
                    {"suites",
                     {{{"op", "check"},
                       {"name", "gauss"},
                       {"pairs", Json::array({Json::array({"std-gaussian-2d", "std-gaussian-2d"}),
                                             Json::array({"std-gaussian-1d", "gaussian-var2-1d"})})}},
                      {{"op", "eval"}, {"densities", {"std-gaussian-3d", "gaussian-var2-1d"}}}}}};
    RunConfig cfg = parse_config(j);
    cfg.output_dir = scratch("gauss");
    const RunResult r = run(cfg);
    CHECK(r.exit_code == 0);
    CHECK(r.summary.at("violated") == 0);
    CHECK(r.summary.at("holds").get<int>() > 0);
    const Csv csv = Csv::read(cfg.output_dir / "gauss.csv");
    CHECK(csv.column("verdict") >= 0);
    CHECK(fs::exists(cfg.output_dir / "gauss_theta.svg"));
    const Json merged = merge_reports({cfg.output_dir / "gauss.csv"});
    CHECK(merged.at("violated") == 0);
    fs::remove_all(cfg.output_dir);
  }

  TEST_CASE("artifacts do not depend on the thread count") {
    const Json j = {{"schema_version", 1},
                    {"master_seed", 11},
                    {"suites",
                     {{{"op", "check"},
                       {"name", "mc"},
                       {"densities", {"bimodal-2d"}},
                       {"ineq", {"epi", "conv_lsi"}},
                       {"theta_grid", "0.25,0.5"},
                       {"estimator", {{"prefer", "monte_carlo"}, {"mc_samples", 20000}}}},
                      {{"op", "geom"}, {"name", "g"}, {"dim", 2}, {"pairs", 200}}}}};
    auto run_with = [&](int threads, const std::string& tag) {
      kernels::set_threads(threads);
      RunConfig cfg = parse_config(j);
      cfg.output_dir = scratch(tag);
      run(cfg);
      kernels::set_threads(0);
      return cfg.output_dir;
    };
    const fs::path a = run_with(1, "t1"), b = run_with(4, "t4");
    for (const char* f : {"mc.csv", "g.csv", "g_worst.csv", "summary.json"}) CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
    CHECK(!slurp(a / "mc.csv").empty());
    fs::remove_all(a);
    fs::remove_all(b);
  }
}
