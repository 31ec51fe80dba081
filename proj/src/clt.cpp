#include "deficitlab/clt.hpp"

#include "deficitlab/error.hpp"
#include "deficitlab/kernels.hpp"
#include "deficitlab/seed.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <optional>

namespace deficit {

namespace {

Density merged(Density d) {
  if (const auto* m = d.mixture()) return m->merged();
  return d;
}

std::size_t components(const Density& d) { return d.mixture() ? d.mixture()->size() : 0; }

Density to_grid(const GaussianMixture& m, const CltSettings& st) {
  if (m.dim() > 2) throw Error(ErrorKind::Unsupported, "component budget exceeded and d > 2: no grid fallback");
  const Vec mu = moments(Density(m)).mean;
  double reach = 0.0;
  for (const auto& c : m.components())
    for (int a = 0; a < m.dim(); ++a)
      reach = std::max(reach, std::abs(c.mean[a] - mu[a]) + 12.0 * std::sqrt(c.cov(a, a)));
  const std::size_t pts = m.dim() == 1 ? st.grid_points_1d : st.grid_points_2d;
  return discretize(m, reach, pts);
}

// sqrt(a/(a+b)) A + sqrt(b/(a+b)) B
Density combine(const Density& a, std::size_t na, const Density& b, std::size_t nb, const CltSettings& st) {
  const double theta = double(na) / double(na + nb);
  if (a.mixture() && b.mixture()) {
    if (components(a) * components(b) <= st.convolve.component_budget)
      return merged(convolve(a, b, theta, st.convolve));
    return convolve(to_grid(*a.mixture(), st), to_grid(*b.mixture(), st), theta, st.convolve);
  }
  const Density ga = a.mixture() ? to_grid(*a.mixture(), st) : a;
  const Density gb = b.mixture() ? to_grid(*b.mixture(), st) : b;
  return convolve(ga, gb, theta, st.convolve);
}

FunctionalCatalog eval(const Density& x, const CltSettings& st, std::size_t n) {
  EstimatorSettings e = st.estimator;
  e.seed = derive_seed(st.estimator.seed, {0x636c74ULL, n});
  return catalog(x, e);
}

// Catalogs of U_n for every requested n, evaluated in parallel. The chain
// of laws itself is built sequentially.
std::map<std::size_t, FunctionalCatalog> catalogs(const Density& z, const std::vector<std::size_t>& ns,
                                                 const CltSettings& st) {
  std::vector<std::size_t> keys = ns;
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  std::vector<Density> laws;
  laws.reserve(keys.size());
  for (std::size_t n : keys) laws.push_back(normalized_sum(z, n, st));
  std::vector<FunctionalCatalog> out(keys.size());
  std::exception_ptr failure;
  const long k = long(keys.size());
#pragma omp parallel for schedule(dynamic) num_threads(kernels::threads())
  for (long i = 0; i < k; ++i) {
    try {
      out[std::size_t(i)] = eval(laws[std::size_t(i)], st, keys[std::size_t(i)]);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  std::map<std::size_t, FunctionalCatalog> m;
  for (std::size_t i = 0; i < keys.size(); ++i) m.emplace(keys[i], out[i]);
  return m;
}

}  // namespace

Density normalized_sum(const Density& z, std::size_t n, const CltSettings& st) {
  if (n == 0) throw Error(ErrorKind::InvalidScale, "n must be >= 1");
  if (z.samples()) throw Error(ErrorKind::Unsupported, "normalized sums need a mixture or a grid");
  if (n == 1) return z;
  // U_{2^k} by doubling, then fold in the set bits of n from the lowest
  Density power = z;
  std::size_t power_n = 1;
  std::optional<Density> acc;
  std::size_t acc_n = 0;
  for (std::size_t rest = n;;) {
    if (rest & 1u) {
      if (!acc) {
        acc = power;
      } else {
        acc = combine(*acc, acc_n, power, power_n, st);
      }
      acc_n += power_n;
    }
    rest >>= 1;
    if (rest == 0) break;
    power = combine(power, power_n, power, power_n, st);
    power_n *= 2;
  }
  return *acc;
}

CltTrace clt_trace(const Density& z, std::size_t n_max, const CltSettings& st) {
  if (n_max == 0) throw Error(ErrorKind::InvalidScale, "n_max must be >= 1");
  const Density base = center(z);
  std::vector<std::size_t> ns;
  for (std::size_t n = 1; n <= n_max; ++n) {
    ns.push_back(n);
    ns.push_back(2 * n);
  }
  const auto cat = catalogs(base, ns, st);
  const FunctionalCatalog& c1 = cat.at(1);
  CltTrace trace{base, {}};
  for (std::size_t n = 1; n <= n_max; ++n) {
    const FunctionalCatalog& c = cat.at(n);
    const double k = double(n);
    CltRow row;
    row.n = n;
    row.D = c.rel_entropy;
    row.I = c.rel_fisher;
    row.dlsi = c.lsi_deficit;
    row.method = c.rel_entropy.method;
    const Estimate ent_lhs = linear({{1.0, c1.rel_entropy}, {-(k - 1.0), c1.lsi_deficit}});
    row.ent_clt = make_report("ent_clt", ent_lhs, c.rel_entropy, {{"n", k}});
    const Estimate fi_lhs = linear({{0.5, c1.rel_fisher}, {-k, c1.lsi_deficit}, {1.0, c.lsi_deficit}});
    row.fi_clt = make_report("fi_clt", fi_lhs, linear({{0.5, c.rel_fisher}}), {{"n", k}});
    if (n > 1) {
      // both sides are sums of D(Z), I(Z), D(U_n), I(U_n) with shared terms
      const double e1 = linear({{k, c1.rel_entropy}, {-(k - 1.0) / 2.0, c1.rel_fisher}, {1.0, c.rel_entropy}}).error;
      reassess(row.ent_clt, e1);
      reassess(row.fi_clt, e1);
    } else {
      // the same estimate on both sides: zero slack by construction
      row.ent_clt = make_report("ent_clt", c1.rel_entropy, c1.rel_entropy, {{"n", 1.0}});
      reassess(row.fi_clt, 0.0);
    }
    row.doubling = make_report("doubling", cat.at(2 * n).rel_entropy, c.rel_entropy, {{"n", k}});
    trace.rows.push_back(row);
  }
  return trace;
}

std::vector<DeficitReport> subadditivity_check(const Density& z,
                                               const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                               const CltSettings& st) {
  const Density base = center(z);
  std::vector<std::size_t> ns;
  for (auto [m, n] : pairs) {
    ns.push_back(m);
    ns.push_back(n);
    ns.push_back(m + n);
  }
  const auto cat = catalogs(base, ns, st);
  std::vector<DeficitReport> out;
  for (auto [m, n] : pairs) {
    const Estimate rhs = m == n ? linear({{2.0, cat.at(m).lsi_deficit}})
                                : linear({{1.0, cat.at(m).lsi_deficit}, {1.0, cat.at(n).lsi_deficit}});
    out.push_back(make_report("subadditivity", cat.at(m + n).lsi_deficit, rhs, {{"m", double(m)}, {"n", double(n)}}));
  }
  return out;
}

}  // namespace deficit
