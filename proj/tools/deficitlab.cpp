#include "deficitlab/error.hpp"
#include "deficitlab/inequalities.hpp"
#include "deficitlab/io.hpp"
#include "deficitlab/kernels.hpp"
#include "deficitlab/runner.hpp"
#include "deficitlab/seed.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>

using namespace deficit;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  std::string out;
};

std::uint64_t resolve_seed(const Globals& g, std::uint64_t fallback) {
  if (g.seed) return *g.seed;
  if (const char* env = std::getenv("DEFICITLAB_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used, 0);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidConfig, std::string("DEFICITLAB_SEED is not an integer: ") + env);
    }
  }
  return fallback;
}

int verdict_code(const SuiteOutput& out) {
  for (const auto& r : out.reports)
    if (r.asserted && r.verdict == Verdict::Violated) return 1;
  return 0;
}

// Single-suite subcommands run exactly like suite 0 of a config file.
SuiteOutput run_single(const std::string& op, Json params, const Globals& g) {
  SuiteSpec spec{op, op, std::move(params)};
  validate_suite(spec);
  const std::uint64_t seed = derive_seed(resolve_seed(g, 0), {0});
  std::optional<std::filesystem::path> dir;
  if (!g.out.empty()) {
    dir = g.out;
    std::filesystem::create_directories(*dir);
  }
  SuiteOutput out = run_suite(spec, seed, dir);
  if (dir) {
    out.csv.write(*dir / (op + ".csv"));
    for (const auto& [suffix, csv] : out.extra) csv.write(*dir / (op + "_" + suffix + ".csv"));
    for (const auto& [suffix, chart] : out.charts) chart.write(*dir / (op + "_" + suffix + ".svg"));
  }
  return out;
}

void print_aligned(const Csv& csv) {
  std::vector<std::size_t> w(csv.header.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = csv.header[i].size();
    for (const auto& r : csv.rows) w[i] = std::max(w[i], r[i].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) std::cout << (i ? "  " : "") << std::left << std::setw(int(w[i])) << cells[i];
    std::cout << '\n';
  };
  line(csv.header);
  for (const auto& r : csv.rows) line(r);
}

Json estimator_json(double abs_tol, std::size_t mc) { return {{"abs_tol", abs_tol}, {"mc_samples", mc}}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deficitlab: numerical deficits of entropy, Fisher information, transport and convex-body inequalities"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "master seed (overrides config and DEFICITLAB_SEED)");
  app.add_option("--jobs", g.jobs, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", g.out, "output directory");
  double abs_tol = 1e-8;
  std::size_t mc_samples = 1'000'000;
  app.add_option("--abs-tol", abs_tol, "quadrature tolerance")->check(CLI::PositiveNumber);
  app.add_option("--mc-samples", mc_samples, "Monte Carlo sample count")->check(CLI::PositiveNumber);

  // eval
  auto* eval = app.add_subcommand("eval", "functional catalog of one or more densities");
  std::vector<std::string> eval_densities;
  std::string format = "csv";
  eval->add_option("--density", eval_densities, "preset name or density JSON file")->required();
  eval->add_option("--format", format, "csv or text")->check(CLI::IsMember({"csv", "text"}));

  // check
  auto* check = app.add_subcommand("check", "inequality deficits for a pair of densities");
  std::string ineq = "all", pair, theta_grid = "0:1:0.1", t_grid = "1";
  check->add_option("--ineq", ineq, "inequality name or 'all'");
  check->add_option("--pair", pair, "x,y: preset names or density JSON files (default std-gaussian-1d twice)");
  check->add_option("--theta-grid", theta_grid, "a:b:step or a comma list");
  check->add_option("--t", t_grid, "heat-flow times for three_epi and concavity");

  // clt
  auto* clt = app.add_subcommand("clt", "normalized-sum trace");
  std::string clt_density = "bimodal-1d";
  std::size_t n_max = 16;
  clt->add_option("--density", clt_density, "preset name or density JSON file");
  clt->add_option("--n-max", n_max, "largest n")->check(CLI::PositiveNumber);

  // hyper
  auto* hyper = app.add_subcommand("hyper", "hypercontractivity rows for a pair of test functions");
  std::string f_spec = R"({"kind":"loglinear","a":[0.5]})", g_spec;
  std::string p_grid = "2", ht_grid = "0.1,0.5,1";
  double theta = 0.5;
  hyper->add_option("--f", f_spec, "test function as JSON");
  hyper->add_option("--g", g_spec, "second test function as JSON (default: f)");
  hyper->add_option("--p", p_grid, "exponents > 1");
  hyper->add_option("--t", ht_grid, "times");
  hyper->add_option("--theta", theta, "weight in [0, 1]");

  // geom
  auto* geom = app.add_subcommand("geom", "random convex-body search");
  int dim = 2;
  std::size_t pairs = 1000;
  geom->add_option("--dim", dim, "2 or 3")->check(CLI::IsMember({2, 3}));
  geom->add_option("--pairs", pairs, "number of body pairs")->check(CLI::PositiveNumber);

  // report
  auto* report = app.add_subcommand("report", "merge report CSVs into one JSON summary");
  std::vector<std::string> report_files;
  report->add_option("files", report_files, "CSV files")->required();

  // run
  auto* run_cmd = app.add_subcommand("run", "execute a run configuration");
  std::string config_path;
  run_cmd->add_option("--config", config_path, "run configuration JSON")->required();
  app.add_option("--config", config_path, "run configuration JSON (same as run --config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  if (seed_opt->count()) g.seed = seed_value;
  kernels::set_threads(g.jobs);

  try {
    const Json est = estimator_json(abs_tol, mc_samples);
    if (eval->parsed()) {
      const SuiteOutput out = run_single("eval", {{"densities", eval_densities}, {"estimator", est}}, g);
      if (format == "text")
        print_aligned(out.csv);
      else
        std::cout << out.csv.str();
      return 0;
    }
    if (check->parsed()) {
      std::vector<std::string> xy{"std-gaussian-1d", "std-gaussian-1d"};
      if (!pair.empty()) {
        const auto comma = pair.find(',');
        xy = comma == std::string::npos ? std::vector<std::string>{pair, pair}
                                        : std::vector<std::string>{pair.substr(0, comma), pair.substr(comma + 1)};
      }
      const SuiteOutput out = run_single(
          "check",
          {{"pairs", Json::array({Json(xy)})}, {"ineq", ineq}, {"theta_grid", theta_grid}, {"t", t_grid}, {"estimator", est}}, g);
      std::cout << reports_csv(out.reports).str();
      return verdict_code(out);
    }
    if (clt->parsed()) {
      const SuiteOutput out =
          run_single("clt", {{"density", clt_density}, {"n_max", n_max}, {"estimator", est}}, g);
      std::cout << out.csv.str();
      return verdict_code(out);
    }
    if (hyper->parsed()) {
      Json f, gj;
      try {
        f = Json::parse(f_spec);
        gj = g_spec.empty() ? f : Json::parse(g_spec);
      } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("test function: ") + e.what());
      }
      const SuiteOutput out = run_single(
          "hyper", {{"f", f}, {"g", gj}, {"p", p_grid}, {"t", ht_grid}, {"theta", theta}, {"estimator", est}}, g);
      std::cout << out.csv.str();
      return verdict_code(out);
    }
    if (geom->parsed()) {
      const SuiteOutput out = run_single("geom", {{"dim", dim}, {"pairs", pairs}}, g);
      std::cout << out.csv.str();
      return verdict_code(out);
    }
    if (report->parsed()) {
      std::vector<std::filesystem::path> paths(report_files.begin(), report_files.end());
      std::cout << merge_reports(paths).dump(2) << '\n';
      return 0;
    }
    if (run_cmd->parsed() || !config_path.empty()) {
      RunConfig cfg = load_config(config_path);
      cfg.master_seed = resolve_seed(g, cfg.master_seed);
      if (!g.out.empty()) cfg.output_dir = g.out;
      const RunResult res = run(cfg);
      std::cout << res.summary.dump(2) << '\n';
      return res.exit_code;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::InvalidConfig ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  std::cerr << app.help();
  return 2;
}
