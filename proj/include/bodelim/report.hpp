#pragma once

// Result records shared by the analytic and Monte-Carlo checkers.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bodelim {

/// Integrand weight of a log-frequency integral: 1 or 1/omega^2.
enum class Weight { kUnweighted, kInvOmegaSq };

enum class IntegralStatus { kConverged, kDivergentPlus, kDivergentMinus, kSingular };

struct IntegralResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  IntegralStatus status = IntegralStatus::kConverged;
  std::string note;

  bool converged() const noexcept { return status == IntegralStatus::kConverged; }

  static IntegralResult finite(double v, double err = 0.0) {
    return {v, err, IntegralStatus::kConverged, {}};
  }
  static IntegralResult with_status(IntegralStatus s, std::string note = {}) {
    return {s == IntegralStatus::kDivergentPlus    ? HUGE_VAL
            : s == IntegralStatus::kDivergentMinus ? -HUGE_VAL
                                                   : std::nan(""),
            0.0, s, std::move(note)};
  }
};

std::string_view to_string(IntegralStatus s) noexcept;

/// a + b and a - b with divergence propagated. Opposite divergences and
/// singular operands give kSingular.
IntegralResult add(const IntegralResult& a, const IntegralResult& b);
IntegralResult negate(const IntegralResult& a);

enum class Verdict { kHolds, kHoldsWithEquality, kViolated, kSkippedDivergent, kSkippedPrecondition };

std::string_view to_string(Verdict v) noexcept;

/// Ranks verdicts for aggregation; violated is the worst.
int severity(Verdict v) noexcept;

/// slack_rel * (1 + |bound|).
double slack_for(double bound, double slack_rel);

/// value >= bound up to slack. A value below bound - slack is a violation only
/// when value + error still stays below the bound.
Verdict judge(double value, double error, double bound, double slack);

/// judge() lifted to possibly divergent operands.
Verdict judge(const IntegralResult& value, const IntegralResult& bound, double slack_rel,
              double* slack_used);

/// One inequality "lhs >= rhs".
struct InequalityRecord {
  std::string id;
  std::string lhs;  // what is being bounded
  std::string rhs;  // the lower bound
  IntegralResult analytic_bound;
  std::optional<IntegralResult> quadrature_value;
  std::optional<IntegralResult> empirical_integral;
  std::optional<double> mi_rate_difference;
  IntegralResult compared_value;  // the lhs actually judged
  IntegralResult compared_bound;  // the rhs actually judged
  Verdict verdict = Verdict::kSkippedPrecondition;
  double slack_used = 0.0;
  std::string note;
};

/// Equality or tolerance check (pointwise curves, identities, agreement).
struct CheckRecord {
  std::string id;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  bool skipped = false;
  std::string note;
};

/// Estimated sensitivity-like curve next to |T| on a thinned grid. Inverse-loop
/// curves are in the inverted frequency variable.
struct CurveRecord {
  std::string kind;  // uw, yw, yd, ud
  bool inverted = false;
  std::vector<double> omega;
  std::vector<double> estimate;
  std::vector<double> exact;
};

struct LimitReport {
  std::string system_id;
  std::vector<InequalityRecord> inequalities;
  std::vector<CheckRecord> checks;
  std::vector<CurveRecord> curves;
  std::vector<std::string> notes;

  /// Worst inequality verdict; a failed check counts as violated.
  Verdict worst() const noexcept;
};

}  // namespace bodelim
