#pragma once

#include "deficitlab/density.hpp"
#include "deficitlab/estimate.hpp"
#include "deficitlab/functionals.hpp"
#include "deficitlab/transport.hpp"

#include <string>
#include <utility>
#include <vector>

namespace deficit {

/// {0, 0.1, ..., 1}
std::vector<double> default_theta_grid();

struct CheckSettings {
  EstimatorSettings estimator{};
  ConvolveOptions convolve{};
  TransportSettings transport{};
  /// Grid for the supremum in the sandwich lower bound.
  std::vector<double> theta_grid = default_theta_grid();
  /// Step of the de Bruijn slope difference quotient.
  double slope_step = 1e-3;
  /// Allowed |slope - p(X)| in the de Bruijn check.
  double slope_tolerance = 1e-3;
};

/// Law of sqrt(theta) X + sqrt(1 - theta) Y, with mixture components merged.
Density mix(const Density& x, const Density& y, double theta, const ConvolveOptions& opts = {});

// Every report is oriented as lhs <= rhs. Inputs are centered where the
// inequality needs it.

/// D(conv) <= theta D(X) + (1-theta) D(Y)
DeficitReport epi_deficit(const Density& x, const Density& y, double theta, const CheckSettings& st = {});
/// I(conv) <= theta I(X) + (1-theta) I(Y)
DeficitReport fii_deficit(const Density& x, const Density& y, double theta, const CheckSettings& st = {});
/// D(X) + D(Y) <= (1-theta)/2 I(X) + theta/2 I(Y) + D(conv)
DeficitReport interpolation_deficit(const Density& x, const Density& y, double theta, const CheckSettings& st = {});
/// dLSI(conv) + theta/2 I(X) + (1-theta)/2 I(Y) <= dLSI(X) + dLSI(Y) + I(conv)/2
DeficitReport fii_form_deficit(const Density& x, const Density& y, double theta, const CheckSettings& st = {});
/// dLSI(conv) <= dLSI(X) + dLSI(Y); no centering.
DeficitReport conv_lsi_deficit(const Density& x, const Density& y, double theta, const CheckSettings& st = {});

/// With L(theta) = theta/2 I(X) + (1-theta)/2 I(Y) - I(Z)/2 + dLSI(Z):
///   first:  sup_theta L(theta) <= dLSI(X) + dLSI(Y)   (sup over st.theta_grid)
///   second: dLSI(X) + dLSI(Y) <= 2 L(1/2)
std::pair<DeficitReport, DeficitReport> sandwich_check(const Density& x, const Density& y,
                                                       const CheckSettings& st = {});

/// first:  N(X+Y) <= (N(X) + N(Y)) (lambda p(X) + (1-lambda) p(Y)),
///         lambda = N(Y) / (N(X) + N(Y))
/// second: N(X) + N(Y) <= N(X+Y)
std::pair<DeficitReport, DeficitReport> reverse_epi_deficit(const Density& x, const Density& y,
                                                            const CheckSettings& st = {});
/// first:  1/J(X+Y) <= (1/J(X) + 1/J(Y)) p(X) p(Y)
/// second: 1/J(X) + 1/J(Y) <= 1/J(X+Y)
/// Throws PreconditionViolated when J(X) or J(Y) is infinite.
std::pair<DeficitReport, DeficitReport> reverse_fii_deficit(const Density& x, const Density& y,
                                                            const CheckSettings& st = {});
/// p(X+Y) <= p(X) p(Y)
DeficitReport stam_submult_deficit(const Density& x, const Density& y, const CheckSettings& st = {});
/// N(X) N(Y) + N(X+Y+W) N(W) <= N(X+W) N(Y+W), W = sqrt(t) G
DeficitReport three_epi_deficit(const Density& x, const Density& y, double t, const CheckSettings& st = {});

struct ConcavityResult {
  /// N(X + sqrt(t) G) <= N(X) + t p(X), one per t
  std::vector<DeficitReport> reports;
  /// Difference quotient of t -> N(X + sqrt(t) G) at 0 and p(X).
  Estimate slope;
  Estimate stam;
  bool central = true;
  bool slope_matches = false;
};

ConcavityResult concavity_check(const Density& x, const std::vector<double>& t_grid, const CheckSettings& st = {});

struct StabilityReport {
  double eps_entropy = 0.0;    // 1 - D(Xh)/D(X)
  double eps_transport = 0.0;  // (1 - W(Xh)/W(X))^2
  double eps_fisher = 0.0;     // 1 - I(Xh)/I(X)
  double eps = 0.0;
  std::string binding;  // which of the three gave eps
  bool vacuous = false;
  /// (eps/4) I(X) <= dLSI(X)
  DeficitReport conclusion;
};

/// Xh = (X + X*)/sqrt(2) for an iid copy X*. X is centered first.
StabilityReport hwi_jump_check(const Density& x, const CheckSettings& st = {});

/// Names accepted by run_check / the CLI.
const std::vector<std::string>& inequality_names();

/// Evaluates one named inequality (or its pair) on (x, y) at theta; pair
/// operations return both reports. t is used by three_epi.
std::vector<DeficitReport> run_check(const std::string& name, const Density& x, const Density& y, double theta,
                                     const CheckSettings& st = {}, double t = 1.0);

}  // namespace deficit
