#pragma once

// Analytic lower bounds on the four Bode integrals of a unity-feedback loop,
// closed-form classical oracles, and quadrature of
// (1/2pi) * int log|T(jw)| w(omega) d omega with w = 1 or 1/omega^2.

#include <vector>

#include "bodelim/lti.hpp"
#include "bodelim/report.hpp"

namespace bodelim {

struct BoundReport {
  double sens_bound = 0.0;  // sum of Re p over unstable plant poles
  double comp_bound = 0.0;  // sum of Re(1/z) over nonminimum-phase plant zeros
  IntegralResult plant_log_integral;
  IntegralResult plant_log_integral_weighted;
  IntegralResult load_bound;   // sens_bound + plant_log_integral
  IntegralResult noise_bound;  // comp_bound - plant_log_integral_weighted
  std::vector<Complex> marginal_poles;
  std::vector<Complex> marginal_zeros;
};

BoundReport analytic_bounds(const RationalTF& plant, double tol = kDefaultStabilityTol);

struct QuadratureOptions {
  double panel_abs_tol = 1e-8;
  int panels_per_decade = 10;
  std::size_t max_subdivisions = 1000;  // per breakpoint panel
};

/// Divergence is decided from relative degree and the behavior at omega -> 0,
/// never from the quadrature itself. Plants may have imaginary-axis roots.
IntegralResult plant_log_integral(const RationalTF& plant, Weight weight,
                                  const QuadratureOptions& opts = {});

/// Same integral for a closed-loop map. Imaginary-axis poles, or for the
/// weighted case |T(0)| != 1, give status kSingular.
/// Throws NumericError when adaptive refinement does not converge.
IntegralResult bode_quadrature(const RationalTF& t, Weight weight,
                               const QuadratureOptions& opts = {});

enum class OracleKind { kSensitivity, kComplementary };

/// Classical Bode/Middleton closed forms for a stable loop with gain L:
///   sensitivity:   sum_{UP(L)} Re p - kappa/2,   kappa = lim s L(s) at infinity
///   complementary: sum_{UZ(L)} Re(1/z) - 1/(2 k_v), k_v = lim s L(s) at 0
/// Throws UnstableLoopError or DomainError when the preconditions fail.
double classical_oracle(const RationalTF& loop, OracleKind kind);

/// Preconditions under which the quadrature/bound comparisons are meaningful.
struct LoopPreconditions {
  int loop_relative_degree = 0;
  int loop_type = 0;
  bool sensitivity_side_ok = false;  // relative degree of L >= 2
  bool weighted_side_ok = false;     // loop type >= 2
};

LoopPreconditions loop_preconditions(const RationalTF& plant, const RationalTF& controller);

/// Gang-of-Four quadratures paired with their analytic bounds.
/// Throws UnstableLoopError when the closed loop is not Hurwitz.
LimitReport corollary3_report(const RationalTF& plant, const RationalTF& controller,
                              double slack_rel = 0.02, const QuadratureOptions& opts = {});

}  // namespace bodelim
