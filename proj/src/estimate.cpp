#include "deficitlab/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace deficit {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::ClosedForm: return "closed_form";
    case Method::Quadrature: return "quadrature";
    case Method::MonteCarlo: return "monte_carlo";
  }
  return "unknown";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::HoldsWithinError: return "holds_within_error";
    case Verdict::Violated: return "violated";
  }
  return "unknown";
}

Estimate Estimate::closed(double v) {
  if (std::isinf(v) && v > 0) return infinite();
  return {v, 0.0, Method::ClosedForm, true};
}

Estimate Estimate::quadrature(double v, double err) {
  if (std::isinf(v) && v > 0) return infinite(Method::Quadrature);
  const double floor = 1e-15 * std::max(1.0, std::abs(v));
  return {v, std::max(std::abs(err), floor), Method::Quadrature, true};
}

Estimate Estimate::monte_carlo(double v, double se) {
  if (std::isinf(v) && v > 0) return infinite(Method::MonteCarlo);
  return {v, std::max(std::abs(se), 1e-300), Method::MonteCarlo, true};
}

Estimate Estimate::infinite(Method m) {
  return {std::numeric_limits<double>::infinity(), 0.0, m, false};
}

Estimate propagate(const std::function<double(std::span<const double>)>& f, std::initializer_list<Estimate> in) {
  Method method = Method::ClosedForm;
  for (const auto& e : in) {
    method = weakest(method, e.method);
    if (!e.finite) return Estimate::infinite(method);
  }
  std::vector<double> v;
  for (const auto& e : in) v.push_back(e.value);
  Estimate out;
  out.method = method;
  out.value = f(v);
  double var = 0.0;
  std::size_t k = 0;
  for (const auto& e : in) {
    if (e.error > 0.0) {
      const double keep = v[k];
      v[k] = keep + e.error;
      const double up = f(v);
      v[k] = keep - e.error;
      const double down = f(v);
      v[k] = keep;
      const double c = 0.5 * (up - down);
      var += c * c;
    }
    ++k;
  }
  out.error = std::sqrt(var);
  if (method != Method::ClosedForm && out.error == 0.0) out.error = 1e-300;
  out.finite = std::isfinite(out.value);
  return out;
}

Method weakest(Method a, Method b) { return Method(std::max(int(a), int(b))); }

Estimate linear(std::initializer_list<std::pair<double, Estimate>> terms, double constant) {
  Estimate out{constant, 0.0, Method::ClosedForm, true};
  double var = 0.0;
  for (const auto& [c, e] : terms) {
    out.method = weakest(out.method, e.method);
    if (c == 0.0) continue;
    if (!e.finite) {
      out.finite = false;
      out.value = c > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      continue;
    }
    if (out.finite) out.value += c * e.value;
    var += c * c * e.error * e.error;
  }
  out.error = out.finite ? std::sqrt(var) : 0.0;
  if (out.finite && out.method != Method::ClosedForm && out.error == 0.0) out.error = 1e-300;
  return out;
}

Estimate product(const Estimate& a, const Estimate& b) {
  const Method m = weakest(a.method, b.method);
  if (!a.finite || !b.finite) return Estimate::infinite(m);
  Estimate out{a.value * b.value, std::hypot(a.error * b.value, b.error * a.value), m, true};
  if (m != Method::ClosedForm && out.error == 0.0) out.error = 1e-300;
  return out;
}

Estimate quotient(const Estimate& a, const Estimate& b) {
  const Method m = weakest(a.method, b.method);
  if (!a.finite) return Estimate::infinite(m);
  if (!b.finite) return {0.0, 0.0, m, true};
  const double q = a.value / b.value;
  Estimate out{q, std::hypot(a.error / b.value, b.error * q / b.value), m, true};
  if (m != Method::ClosedForm && out.error == 0.0) out.error = 1e-300;
  return out;
}

DeficitReport make_report(std::string name, const Estimate& lhs, const Estimate& rhs,
                          std::map<std::string, double> params, bool asserted, double sigmas) {
  DeficitReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.params = std::move(params);
  r.asserted = asserted;
  if (!rhs.finite && lhs.finite) {
    r.deficit = std::numeric_limits<double>::infinity();
  } else if (!rhs.finite && !lhs.finite) {
    // both sides infinite: the inequality is read as a tautology
    r.deficit = std::numeric_limits<double>::infinity();
  } else if (!lhs.finite) {
    r.deficit = -std::numeric_limits<double>::infinity();
  } else {
    r.deficit = rhs.value - lhs.value;
    const double scale = std::max({1.0, std::abs(lhs.value), std::abs(rhs.value)});
    r.err = std::hypot(lhs.error, rhs.error) + 64.0 * std::numeric_limits<double>::epsilon() * scale;
  }
  reassess(r, r.err, sigmas);
  return r;
}

void reassess(DeficitReport& r, double err, double sigmas) {
  if (std::isfinite(r.deficit)) {
    const double scale = std::max({1.0, std::abs(r.lhs.value), std::abs(r.rhs.value)});
    r.err = std::max(err, 64.0 * std::numeric_limits<double>::epsilon() * scale);
  }
  if (r.deficit >= 0.0) {
    r.verdict = Verdict::Holds;
  } else if (r.deficit >= -sigmas * r.err) {
    r.verdict = Verdict::HoldsWithinError;
  } else {
    r.verdict = Verdict::Violated;
  }
}

}  // namespace deficit
