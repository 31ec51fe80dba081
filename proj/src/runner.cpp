#include "deficitlab/runner.hpp"

#include "deficitlab/clt.hpp"
#include "deficitlab/error.hpp"
#include "deficitlab/geometry.hpp"
#include "deficitlab/hyper.hpp"
#include "deficitlab/inequalities.hpp"
#include "deficitlab/kernels.hpp"
#include "deficitlab/seed.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

namespace deficit {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::InvalidConfig, where + ": " + what);
}

// Typed access to a JSON object that remembers which keys were read, so
// that typos are reported instead of silently ignored.
class Params {
 public:
  Params(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) bad(where_, "expected an object");
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  template <class T>
  T get(const std::string& k, T fallback) {
    seen_.insert(k);
    if (!j_.contains(k)) return fallback;
    try {
      return j_.at(k).get<T>();
    } catch (const Json::exception&) {
      bad(where_, "key '" + k + "' has the wrong type");
    }
  }

  double positive(const std::string& k, double fallback) {
    const double v = get<double>(k, fallback);
    if (!(v > 0.0) || !std::isfinite(v)) bad(where_, "'" + k + "' must be a positive number");
    return v;
  }

  std::size_t count(const std::string& k, std::size_t fallback, std::size_t lo = 1) {
    const long long v = get<long long>(k, (long long)fallback);
    if (v < (long long)lo) bad(where_, "'" + k + "' must be >= " + std::to_string(lo));
    return std::size_t(v);
  }

  const Json& raw(const std::string& k) {
    seen_.insert(k);
    return j_.at(k);
  }

  void done() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) bad(where_, "unknown key '" + k + "'");
  }

  const std::string& where() const { return where_; }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::vector<double> grid_param(Params& p, const std::string& k, std::vector<double> fallback) {
  if (!p.has(k)) {
    p.get<Json>(k, Json());
    return fallback;
  }
  const Json& v = p.raw(k);
  std::vector<double> out;
  try {
    out = v.is_string() ? parse_grid(v.get<std::string>()) : v.get<std::vector<double>>();
  } catch (const Json::exception&) {
    bad(p.where(), "'" + k + "' must be a list of numbers or \"a:b:step\"");
  }
  if (out.empty()) bad(p.where(), "'" + k + "' is empty");
  return out;
}

std::vector<std::string> string_list(Params& p, const std::string& k, std::vector<std::string> fallback) {
  if (!p.has(k)) {
    p.get<Json>(k, Json());
    return fallback;
  }
  const Json& v = p.raw(k);
  if (v.is_string()) return {v.get<std::string>()};
  try {
    return v.get<std::vector<std::string>>();
  } catch (const Json::exception&) {
    bad(p.where(), "'" + k + "' must be a string or a list of strings");
  }
}

struct Common {
  EstimatorSettings estimator;
  EntropicOtSettings ot;
  double sigmas = kDefaultSigmas;
};

Common common(Params& p) {
  Common c;
  c.sigmas = p.positive("sigmas", kDefaultSigmas);
  if (p.has("estimator")) {
    Params e(p.raw("estimator"), p.where() + ".estimator");
    c.estimator.abs_tol = e.positive("abs_tol", c.estimator.abs_tol);
    c.estimator.mc_samples = e.count("mc_samples", c.estimator.mc_samples, 100);
    c.estimator.tensor_max_points = e.count("tensor_max_points", c.estimator.tensor_max_points, 3);
    const std::string prefer = e.get<std::string>("prefer", "auto");
    if (prefer == "auto") c.estimator.prefer = EstimatorSettings::Prefer::Auto;
    else if (prefer == "quadrature") c.estimator.prefer = EstimatorSettings::Prefer::Quadrature;
    else if (prefer == "monte_carlo") c.estimator.prefer = EstimatorSettings::Prefer::MonteCarlo;
    else bad(e.where(), "prefer must be auto, quadrature or monte_carlo");
    e.done();
  }
  if (p.has("ot")) {
    Params o(p.raw("ot"), p.where() + ".ot");
    c.ot.points = o.count("points", c.ot.points, 8);
    c.ot.repetitions = o.count("repetitions", c.ot.repetitions, 2);
    c.ot.tolerance = o.positive("tolerance", c.ot.tolerance);
    o.done();
  }
  return c;
}

void apply_sigmas(std::vector<DeficitReport>& rs, double sigmas) {
  if (sigmas == kDefaultSigmas) return;
  for (auto& r : rs) reassess(r, r.err, sigmas);
}

// ---- eval -----------------------------------------------------------------

struct EvalPlan {
  Common c;
  std::vector<std::string> densities;
};

EvalPlan eval_plan(Params& p) {
  EvalPlan e;
  e.c = common(p);
  e.densities = string_list(p, "densities", {});
  if (e.densities.empty()) bad(p.where(), "'densities' is required");
  p.done();
  return e;
}

SuiteOutput run_eval(const EvalPlan& plan, std::uint64_t seed) {
  SuiteOutput out;
  std::vector<std::string> header{"density"};
  for (auto& h : catalog_header()) header.push_back(h);
  out.csv.header = header;
  for (std::size_t i = 0; i < plan.densities.size(); ++i) {
    EstimatorSettings est = plan.c.estimator;
    est.seed = derive_seed(seed, {i});
    const FunctionalCatalog cat = catalog(resolve_density(plan.densities[i]), est);
    std::vector<std::string> row{plan.densities[i]};
    for (auto& cell : catalog_row(cat)) row.push_back(cell);
    out.csv.add(std::move(row));
  }
  return out;
}

// ---- check ----------------------------------------------------------------

const std::set<std::string> kThetaOps{"epi", "fii", "interpolation", "fii_form", "conv_lsi", "w2_convolution"};
const std::set<std::string> kTimeOps{"three_epi", "concavity"};

struct CheckTask {
  std::size_t pair;
  std::string ineq;
  double theta = 0.5;
  double t = 1.0;
};

struct CheckPlan {
  Common c;
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<std::string> ineqs;
  std::vector<double> thetas;
  std::vector<double> ts;
  bool asserted = true;
  std::vector<CheckTask> tasks;
};

CheckPlan check_plan(Params& p) {
  CheckPlan c;
  c.c = common(p);
  for (const auto& d : string_list(p, "densities", {})) c.pairs.emplace_back(d, d);
  if (p.has("pairs")) {
    try {
      for (const auto& pr : p.raw("pairs").get<std::vector<std::vector<std::string>>>()) {
        if (pr.size() != 2) bad(p.where(), "each pair needs two densities");
        c.pairs.emplace_back(pr[0], pr[1]);
      }
    } catch (const Json::exception&) {
      bad(p.where(), "'pairs' must be a list of [x, y] name pairs");
    }
  }
  if (c.pairs.empty()) bad(p.where(), "'pairs' or 'densities' is required");
  c.ineqs = string_list(p, "ineq", {"all"});
  if (c.ineqs.size() == 1 && c.ineqs[0] == "all") c.ineqs = inequality_names();
  for (const auto& n : c.ineqs)
    if (std::find(inequality_names().begin(), inequality_names().end(), n) == inequality_names().end())
      bad(p.where(), "unknown inequality '" + n + "'");
  c.thetas = grid_param(p, "theta_grid", default_theta_grid());
  for (double th : c.thetas)
    if (!(th >= 0.0 && th <= 1.0)) bad(p.where(), "theta values must lie in [0, 1]");
  c.ts = grid_param(p, "t", {1.0});
  for (double t : c.ts)
    if (!(t > 0.0)) bad(p.where(), "t values must be positive");
  c.asserted = p.get<bool>("asserted", true);
  p.done();
  for (std::size_t i = 0; i < c.pairs.size(); ++i)
    for (const auto& n : c.ineqs) {
      if (kThetaOps.count(n))
        for (double th : c.thetas) c.tasks.push_back({i, n, th, 1.0});
      else if (kTimeOps.count(n))
        for (double t : c.ts) c.tasks.push_back({i, n, 0.5, t});
      else
        c.tasks.push_back({i, n, 0.5, 1.0});
    }
  return c;
}

std::vector<std::string> check_header() {
  std::vector<std::string> h{"x", "y"};
  for (auto& c : report_header()) h.push_back(c);
  h.insert(h.begin() + 5, "t");
  return h;
}

SuiteOutput run_check_suite(const CheckPlan& plan, std::uint64_t seed) {
  SuiteOutput out;
  std::vector<Density> xs, ys;
  for (const auto& [x, y] : plan.pairs) {
    xs.push_back(resolve_density(x));
    ys.push_back(resolve_density(y));
  }
  const long n = long(plan.tasks.size());
  std::vector<std::vector<DeficitReport>> results(plan.tasks.size());
  std::vector<std::string> skipped(plan.tasks.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(kernels::threads())
  for (long i = 0; i < n; ++i) {
    const CheckTask& task = plan.tasks[std::size_t(i)];
    CheckSettings st;
    st.estimator = plan.c.estimator;
    st.estimator.seed = derive_seed(seed, {std::uint64_t(i), 1});
    st.convolve.seed = derive_seed(seed, {std::uint64_t(i), 2});
    st.transport.estimator = st.estimator;
    st.transport.ot = plan.c.ot;
    st.transport.ot.seed = derive_seed(seed, {std::uint64_t(i), 3});
    try {
      auto rs = run_check(task.ineq, xs[task.pair], ys[task.pair], task.theta, st, task.t);
      for (auto& r : rs) r.asserted = r.asserted && plan.asserted;
      results[std::size_t(i)] = std::move(rs);
    } catch (const Error& e) {
      // e.g. an infinite Fisher information: the check does not apply
      if (e.kind() == ErrorKind::PreconditionViolated || e.kind() == ErrorKind::Unsupported) {
        skipped[std::size_t(i)] = e.what();
      } else {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  out.csv.header = check_header();
  Csv skip{{"x", "y", "ineq", "reason"}, {}};
  std::map<std::string, Series> curves;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < plan.tasks.size(); ++i) {
    const CheckTask& task = plan.tasks[i];
    const auto& [xn, yn] = plan.pairs[task.pair];
    if (!skipped[i].empty()) skip.add({xn, yn, task.ineq, skipped[i]});
    apply_sigmas(results[i], plan.c.sigmas);
    for (const auto& r : results[i]) {
      std::vector<std::string> row{xn, yn};
      for (auto& c : report_row(r)) row.push_back(c);
      const auto it = r.params.find("t");
      row.insert(row.begin() + 5, it == r.params.end() ? std::string() : format_double(it->second));
      out.csv.add(std::move(row));
      out.reports.push_back(r);
      if (kThetaOps.count(task.ineq) && plan.thetas.size() > 1) {
        const std::string key = r.name + " " + xn + "|" + yn;
        if (!curves.count(key)) order.push_back(key);
        Series& s = curves[key];
        s.label = key;
        s.x.push_back(task.theta);
        s.y.push_back(r.deficit);
      }
    }
  }
  if (!skip.rows.empty()) out.extra.emplace_back("skipped", std::move(skip));
  if (!curves.empty()) {
    LineChart chart{"deficit against theta", "theta", "deficit", {}};
    for (const auto& k : order) chart.series.push_back(curves[k]);
    out.charts.emplace_back("theta", std::move(chart));
  }
  return out;
}

// ---- clt ------------------------------------------------------------------

struct CltPlan {
  Common c;
  std::string density;
  std::size_t n_max = 16;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t grid_points = std::size_t(1) << 14;
};

CltPlan clt_plan(Params& p) {
  CltPlan c;
  c.c = common(p);
  c.density = p.get<std::string>("density", "bimodal-1d");
  c.n_max = p.count("n_max", 16);
  c.grid_points = p.count("grid_points", c.grid_points, 64);
  if (p.has("pairs")) {
    try {
      for (const auto& pr : p.raw("pairs").get<std::vector<std::vector<std::size_t>>>()) {
        if (pr.size() != 2 || pr[0] == 0 || pr[1] == 0) bad(p.where(), "pairs are [m, n] with m, n >= 1");
        c.pairs.emplace_back(pr[0], pr[1]);
      }
    } catch (const Json::exception&) {
      bad(p.where(), "'pairs' must be a list of [m, n]");
    }
  } else {
    for (std::size_t m = 1; m <= 4; ++m)
      for (std::size_t n = m; m + n <= 8; ++n) c.pairs.emplace_back(m, n);
  }
  p.done();
  return c;
}

SuiteOutput run_clt(const CltPlan& plan, std::uint64_t seed) {
  SuiteOutput out;
  CltSettings st;
  st.estimator = plan.c.estimator;
  st.estimator.seed = derive_seed(seed, {1});
  st.convolve.seed = derive_seed(seed, {2});
  st.grid_points_1d = plan.grid_points;
  const Density z = resolve_density(plan.density);
  const CltTrace trace = clt_trace(z, plan.n_max, st);
  out.csv.header = {"n", "D", "I", "dLSI", "entCLT_deficit", "fiCLT_deficit", "doubling_deficit"};
  Series d{"D(U_n)", {}, {}, false}, lower{"entCLT lower bound", {}, {}, true};
  for (const auto& r : trace.rows) {
    out.csv.add({std::to_string(r.n), format_double(r.D.value), format_double(r.I.value), format_double(r.dlsi.value),
                 format_double(r.ent_clt.deficit), format_double(r.fi_clt.deficit),
                 format_double(r.doubling.deficit)});
    out.reports.push_back(r.ent_clt);
    out.reports.push_back(r.fi_clt);
    out.reports.push_back(r.doubling);
    d.x.push_back(double(r.n));
    d.y.push_back(r.D.value);
    lower.x.push_back(double(r.n));
    lower.y.push_back(r.ent_clt.lhs.value);
  }
  std::vector<DeficitReport> sub;
  if (!plan.pairs.empty()) sub = subadditivity_check(z, plan.pairs, st);
  Csv sub_csv{{"m", "n"}, {}};
  for (auto& h : report_header()) sub_csv.header.push_back(h);
  for (std::size_t i = 0; i < sub.size(); ++i) {
    std::vector<std::string> row{std::to_string(plan.pairs[i].first), std::to_string(plan.pairs[i].second)};
    for (auto& c : report_row(sub[i])) row.push_back(c);
    sub_csv.add(std::move(row));
    out.reports.push_back(sub[i]);
  }
  apply_sigmas(out.reports, plan.c.sigmas);
  out.extra.emplace_back("subadditivity", std::move(sub_csv));
  out.charts.emplace_back("D", LineChart{"relative entropy of normalized sums", "n", "D", {d, lower}});
  return out;
}

// ---- hyper ----------------------------------------------------------------

TestFunction function_from(const Json& j, const std::string& where) {
  Params p(j, where);
  const std::string kind = p.get<std::string>("kind", "loglinear");
  if (kind == "loglinear") {
    const auto a = p.get<std::vector<double>>("a", {0.5});
    const double c = p.positive("c", 1.0);
    p.done();
    if (a.empty()) bad(where, "'a' is empty");
    return TestFunction(LogLinear{Eigen::Map<const Vec>(a.data(), long(a.size())), c});
  }
  const double amp = p.get<double>("amp", 0.5);
  const double freq = p.positive("freq", 1.0);
  const double shift = p.get<double>("shift", 0.0);
  const double lo = p.get<double>("lo", -12.0), hi = p.get<double>("hi", 12.0);
  const std::size_t n = p.count("n", 2049, 16);
  p.done();
  if (!(hi > lo)) bad(where, "need lo < hi");
  if (!(std::abs(amp) < 1.0)) bad(where, "|amp| must be < 1 so that f stays positive");
  if (kind == "sin")
    return TestFunction::sampled([=](double x) { return 1.0 + amp * std::sin(freq * x + shift); }, lo, hi, n);
  if (kind == "tanh")
    return TestFunction::sampled([=](double x) { return 1.0 + amp * std::tanh(freq * (x - shift)); }, lo, hi, n);
  bad(where, "function kind must be loglinear, sin or tanh");
}

struct HyperPlan {
  Common c;
  Json f, g;
  std::vector<double> ps, ts;
  double theta = 0.5;
  HyperSettings hs;
};

HyperPlan hyper_plan(Params& p) {
  HyperPlan h;
  h.c = common(p);
  h.f = p.get<Json>("f", Json{{"kind", "loglinear"}, {"a", {0.5}}});
  h.g = p.get<Json>("g", h.f);
  function_from(h.f, p.where() + ".f");
  function_from(h.g, p.where() + ".g");
  h.ps = grid_param(p, "p", {2.0});
  for (double v : h.ps)
    if (!(v > 1.0)) bad(p.where(), "p values must be > 1");
  h.ts = grid_param(p, "t", {0.1, 0.5, 1.0});
  for (double v : h.ts)
    if (!(v > 0.0)) bad(p.where(), "t values must be positive");
  h.theta = p.get<double>("theta", 0.5);
  if (!(h.theta >= 0.0 && h.theta <= 1.0)) bad(p.where(), "theta must lie in [0, 1]");
  h.hs.hermite_order = p.count("hermite_order", h.hs.hermite_order, 8);
  h.hs.fd_step = p.positive("fd_step", h.hs.fd_step);
  h.hs.derivative_tol = p.positive("derivative_tol", h.hs.derivative_tol);
  h.hs.norm_tol = p.positive("norm_tol", h.hs.norm_tol);
  p.done();
  return h;
}

SuiteOutput run_hyper(const HyperPlan& plan, std::uint64_t seed) {
  SuiteOutput out;
  const TestFunction f = function_from(plan.f, "f"), g = function_from(plan.g, "g");
  out.csv.header = {"p", "q", "t", "theta", "lhs_norm", "rhs_norm", "deficit", "deriv_lhs", "deriv_rhs"};
  LineChart chart{"norm ratio against t", "t", "lhs_norm / rhs_norm", {}};
  for (std::size_t i = 0; i < plan.ps.size(); ++i) {
    const double p = plan.ps[i];
    HyperSettings hs = plan.hs;
    hs.check.estimator = plan.c.estimator;
    hs.check.estimator.seed = derive_seed(seed, {i});
    const ImprovedNelson imp = improved_nelson_check(f, g, p, plan.theta, plan.ts, hs);
    Series s{"p = " + format_double(p), {}, {}, false};
    for (const auto& r : imp.rows) {
      out.csv.add({format_double(r.p), format_double(r.q), format_double(r.t), format_double(r.theta),
                   format_double(r.lhs_norm), format_double(r.rhs_norm), format_double(r.deficit),
                   format_double(r.deriv_lhs), format_double(r.deriv_rhs)});
      s.x.push_back(r.t);
      s.y.push_back(r.lhs_norm / r.rhs_norm);
    }
    chart.series.push_back(std::move(s));
    out.reports.push_back(imp.derivative);
    out.reports.push_back(gross_derivative_check(f, p, hs).sign);
    for (double t : plan.ts) {
      out.reports.push_back(nelson_check(f, p, t, hs));
      out.reports.push_back(nelson_check(g, p, t, hs));
    }
  }
  apply_sigmas(out.reports, plan.c.sigmas);
  out.extra.emplace_back("reports", reports_csv(out.reports));
  out.charts.emplace_back("ratio", std::move(chart));
  return out;
}

// ---- geom -----------------------------------------------------------------

SearchConfig geom_plan(Params& p) {
  SearchConfig c;
  c.dim = p.get<int>("dim", 2);
  if (c.dim != 2 && c.dim != 3) bad(p.where(), "dim must be 2 or 3");
  c.pairs = p.count("pairs", 1000);
  c.k_min = p.count("k_min", std::size_t(c.dim) + 1, std::size_t(c.dim) + 1);
  c.k_max = p.count("k_max", std::max<std::size_t>(12, c.k_min), c.k_min);
  c.keep = p.count("keep", 5, 0);
  const auto gens = string_list(p, "generators", {"gaussian", "sphere", "anisotropic"});
  c.generators.clear();
  for (const auto& gname : gens) {
    if (gname == "gaussian") c.generators.push_back(BodyGenerator::GaussianCloud);
    else if (gname == "sphere") c.generators.push_back(BodyGenerator::Sphere);
    else if (gname == "anisotropic") c.generators.push_back(BodyGenerator::Anisotropic);
    else bad(p.where(), "unknown generator '" + gname + "'");
  }
  if (c.generators.empty()) bad(p.where(), "no generators");
  p.done();
  return c;
}

SuiteOutput run_geom(SearchConfig cfg, std::uint64_t seed, const std::optional<std::filesystem::path>& artifacts) {
  SuiteOutput out;
  cfg.seed = seed;
  if (artifacts) cfg.persist_dir = *artifacts / "counterexamples";
  const SearchReport rep = search_counterexamples(cfg);
  out.csv.header = {"seedA", "seedB", "dim", "conj1_deficit", "conj2_deficit"};
  for (const auto& r : rep.rows) {
    out.csv.add({std::to_string(r.seed_a), std::to_string(r.seed_b), std::to_string(r.dim), format_double(r.conj1),
                 format_double(r.conj2)});
    for (auto [name, v] : {std::pair{"conjecture1", r.conj1}, std::pair{"conjecture2", r.conj2}}) {
      DeficitReport d;
      d.name = name;
      d.deficit = v;
      d.asserted = false;
      d.verdict = v >= 0.0 ? Verdict::Holds : Verdict::Violated;
      out.reports.push_back(d);
    }
  }
  // sanity oracles, absolute tolerance 1e-9
  for (auto [name, v] : {std::pair{"brunn_minkowski_min", rep.min_brunn_minkowski},
                         std::pair{"isoperimetric_min", rep.min_iso - 1.0}}) {
    DeficitReport d = make_report(name, Estimate::closed(0.0), Estimate::closed(v));
    reassess(d, 1e-9 / kDefaultSigmas);
    out.reports.push_back(d);
  }
  Csv worst{{"conjecture", "rank", "seedA", "seedB", "deficit"}, {}};
  for (std::size_t k = 0; k < rep.worst_conj1.size(); ++k) {
    const auto& r = rep.rows[rep.worst_conj1[k]];
    worst.add({"conjecture1", std::to_string(k), std::to_string(r.seed_a), std::to_string(r.seed_b),
               format_double(r.conj1)});
  }
  for (std::size_t k = 0; k < rep.worst_conj2.size(); ++k) {
    const auto& r = rep.rows[rep.worst_conj2[k]];
    worst.add({"conjecture2", std::to_string(k), std::to_string(r.seed_a), std::to_string(r.seed_b),
               format_double(r.conj2)});
  }
  out.extra.emplace_back("worst", std::move(worst));
  return out;
}

struct AnyPlan {
  std::variant<EvalPlan, CheckPlan, CltPlan, HyperPlan, SearchConfig> plan;
};

AnyPlan plan_for(const SuiteSpec& s) {
  Params p(s.params, "suite '" + s.name + "'");
  if (s.op == "eval") return {eval_plan(p)};
  if (s.op == "check") return {check_plan(p)};
  if (s.op == "clt") return {clt_plan(p)};
  if (s.op == "hyper") return {hyper_plan(p)};
  if (s.op == "geom") return {geom_plan(p)};
  bad("suite '" + s.name + "'", "unknown op '" + s.op + "'");
}

}  // namespace

const std::vector<std::string>& suite_ops() {
  static const std::vector<std::string> ops{"eval", "check", "clt", "hyper", "geom"};
  return ops;
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  if (std::count(s.begin(), s.end(), ':') == 2) {
    const auto a = s.find(':'), b = s.find(':', a + 1);
    const double lo = parse_double(s.substr(0, a)), hi = parse_double(s.substr(a + 1, b - a - 1));
    const double step = parse_double(s.substr(b + 1));
    if (!(step > 0.0) || !(hi >= lo)) throw Error(ErrorKind::InvalidConfig, "grid needs lo <= hi and step > 0");
    // count by rounding so that 0:1:0.1 has exactly 11 points
    const auto n = std::size_t(std::floor((hi - lo) / step + 1e-9)) + 1;
    // snap to 12 decimals so that 0:1:0.1 gives 0.3 rather than 0.30000000000000004
    for (std::size_t i = 0; i < n; ++i) out.push_back(std::round((lo + step * double(i)) * 1e12) / 1e12);
    return out;
  }
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(parse_double(item));
  if (out.empty()) throw Error(ErrorKind::InvalidConfig, "empty grid '" + s + "'");
  return out;
}

void validate_suite(const SuiteSpec& s) { plan_for(s); }

RunConfig parse_config(const Json& j) {
  RunConfig cfg;
  Params p(j, "config");
  cfg.schema_version = p.get<int>("schema_version", -1);
  if (cfg.schema_version != kSchemaVersion)
    bad("config", "schema_version must be " + std::to_string(kSchemaVersion));
  if (!j.contains("master_seed")) bad("config", "master_seed is required");
  cfg.master_seed = p.get<std::uint64_t>("master_seed", 0);
  cfg.output_dir = p.get<std::string>("output_dir", "out");
  const Json suites = p.get<Json>("suites", Json::array());
  if (!suites.is_array()) bad("config", "suites must be a list");
  p.done();
  std::set<std::string> names;
  for (std::size_t i = 0; i < suites.size(); ++i) {
    const Json& s = suites[i];
    if (!s.is_object() || !s.contains("op") || !s["op"].is_string())
      bad("suite #" + std::to_string(i), "every suite needs an \"op\"");
    SuiteSpec spec;
    spec.op = s["op"].get<std::string>();
    spec.name = s.value("name", spec.op + "_" + std::to_string(i));
    if (!names.insert(spec.name).second) bad("suite '" + spec.name + "'", "duplicate suite name");
    spec.params = s;
    spec.params.erase("op");
    spec.params.erase("name");
    validate_suite(spec);
    cfg.suites.push_back(std::move(spec));
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open " + p.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, p.string() + ": " + e.what());
  }
  return parse_config(j);
}

SuiteOutput run_suite(const SuiteSpec& s, std::uint64_t seed, const std::optional<std::filesystem::path>& artifacts) {
  const AnyPlan any = plan_for(s);
  SuiteOutput out = std::visit(
      [&](const auto& plan) -> SuiteOutput {
        using T = std::decay_t<decltype(plan)>;
        if constexpr (std::is_same_v<T, EvalPlan>) return run_eval(plan, seed);
        else if constexpr (std::is_same_v<T, CheckPlan>) return run_check_suite(plan, seed);
        else if constexpr (std::is_same_v<T, CltPlan>) return run_clt(plan, seed);
        else if constexpr (std::is_same_v<T, HyperPlan>) return run_hyper(plan, seed);
        else return run_geom(plan, seed, artifacts);
      },
      any.plan);
  out.name = s.name;
  out.op = s.op;
  return out;
}

RunResult run(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  RunResult res;
  Json suites = Json::array();
  std::size_t holds = 0, within = 0, violated = 0, asserted_violations = 0, rows = 0;
  for (std::size_t i = 0; i < cfg.suites.size(); ++i) {
    const SuiteSpec& s = cfg.suites[i];
    const SuiteOutput out = run_suite(s, derive_seed(cfg.master_seed, {i}), cfg.output_dir);
    Json files = Json::array();
    const std::string csv_name = s.name + ".csv";
    out.csv.write(cfg.output_dir / csv_name);
    files.push_back(csv_name);
    for (const auto& [suffix, csv] : out.extra) {
      const std::string name = s.name + "_" + suffix + ".csv";
      csv.write(cfg.output_dir / name);
      files.push_back(name);
    }
    for (const auto& [suffix, chart] : out.charts) {
      const std::string name = s.name + "_" + suffix + ".svg";
      chart.write(cfg.output_dir / name);
      files.push_back(name);
    }
    std::size_t h = 0, w = 0, v = 0, av = 0;
    for (const auto& r : out.reports) {
      switch (r.verdict) {
        case Verdict::Holds: ++h; break;
        case Verdict::HoldsWithinError: ++w; break;
        case Verdict::Violated:
          ++v;
          if (r.asserted) ++av;
          break;
      }
    }
    holds += h;
    within += w;
    violated += v;
    asserted_violations += av;
    rows += out.csv.rows.size();
    suites.push_back({{"name", s.name},
                      {"op", s.op},
                      {"rows", out.csv.rows.size()},
                      {"reports", out.reports.size()},
                      {"holds", h},
                      {"holds_within_error", w},
                      {"violated", v},
                      {"asserted_violations", av},
                      {"files", files}});
  }
  res.exit_code = asserted_violations > 0 ? 1 : 0;
  res.summary = {{"schema_version", kSchemaVersion},
                 {"master_seed", cfg.master_seed},
                 {"suites", suites},
                 {"rows", rows},
                 {"holds", holds},
                 {"holds_within_error", within},
                 {"violated", violated},
                 {"asserted_violations", asserted_violations},
                 {"exit_code", res.exit_code}};
  std::ofstream(cfg.output_dir / "summary.json") << res.summary.dump(2) << '\n';
  return res;
}

}  // namespace deficit
