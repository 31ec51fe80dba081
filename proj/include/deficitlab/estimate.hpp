#pragma once

#include <cmath>
#include <functional>
#include <initializer_list>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace deficit {

enum class Method { ClosedForm, Quadrature, MonteCarlo };

std::string_view to_string(Method m);

/// A scalar functional value with its numerical error. `error` is zero
/// exactly for closed forms; +inf values are flagged non-finite.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
  Method method = Method::ClosedForm;
  bool finite = true;

  static Estimate closed(double v);
  /// Quadrature error is floored at a relative 1e-15 so that only closed
  /// forms carry zero error.
  static Estimate quadrature(double v, double err);
  static Estimate monte_carlo(double v, double stderr_of_mean);
  static Estimate infinite(Method m = Method::ClosedForm);
};

/// sum_k c_k E_k + constant, errors added in quadrature.
Estimate linear(std::initializer_list<std::pair<double, Estimate>> terms, double constant = 0.0);

/// f(E) with first-order error propagation |f'(E)| err.
template <class F, class DF>
Estimate transform(const Estimate& e, F f, DF df) {
  if (!e.finite) return Estimate::infinite(e.method);
  Estimate out = e;
  out.value = f(e.value);
  out.error = e.error == 0.0 ? 0.0 : std::abs(df(e.value)) * e.error;
  if (e.method != Method::ClosedForm && out.error == 0.0) out.error = 1e-300;
  return out;
}

Estimate product(const Estimate& a, const Estimate& b);

/// f(E_1, ..., E_k) for independent inputs. Each input contributes
/// (f(.., v + e, ..) - f(.., v - e, ..)) / 2 to the error, in quadrature.
/// Any infinite input gives an infinite result.
Estimate propagate(const std::function<double(std::span<const double>)>& f, std::initializer_list<Estimate> in);
Estimate quotient(const Estimate& a, const Estimate& b);

Method weakest(Method a, Method b);

enum class Verdict { Holds, HoldsWithinError, Violated };

std::string_view to_string(Verdict v);

inline constexpr double kDefaultSigmas = 3.0;

/// One inequality instance, oriented so that the predicted relation is
/// lhs <= rhs, i.e. deficit = rhs - lhs >= 0.
struct DeficitReport {
  std::string name;
  Estimate lhs;
  Estimate rhs;
  double deficit = 0.0;
  double err = 0.0;
  Verdict verdict = Verdict::Holds;
  std::map<std::string, double> params;
  /// False for conjectured relations; those never fail a run.
  bool asserted = true;

  bool within(double sigmas = kDefaultSigmas) const { return deficit >= -sigmas * err; }
};

/// Builds a report: err combines both sides' errors in quadrature plus a
/// floating-point rounding allowance proportional to the operand scale.
DeficitReport make_report(std::string name, const Estimate& lhs, const Estimate& rhs,
                          std::map<std::string, double> params = {}, bool asserted = true,
                          double sigmas = kDefaultSigmas);

/// Replaces the combined error (used when both sides share Monte Carlo
/// samples) and re-derives the verdict.
void reassess(DeficitReport& r, double err, double sigmas = kDefaultSigmas);

}  // namespace deficit
