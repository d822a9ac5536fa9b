#include "bodelim/report.hpp"

#include <algorithm>

namespace bodelim {

std::string_view to_string(IntegralStatus s) noexcept {
  switch (s) {
    case IntegralStatus::kConverged: return "converged";
    case IntegralStatus::kDivergentPlus: return "divergent_plus";
    case IntegralStatus::kDivergentMinus: return "divergent_minus";
    case IntegralStatus::kSingular: return "singular";
  }
  return "unknown";
}

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::kHolds: return "holds";
    case Verdict::kHoldsWithEquality: return "holds_with_equality";
    case Verdict::kViolated: return "violated";
    case Verdict::kSkippedDivergent: return "skipped_divergent";
    case Verdict::kSkippedPrecondition: return "skipped_precondition";
  }
  return "unknown";
}

int severity(Verdict v) noexcept {
  switch (v) {
    case Verdict::kHolds:
    case Verdict::kHoldsWithEquality: return 0;
    case Verdict::kSkippedDivergent:
    case Verdict::kSkippedPrecondition: return 1;
    case Verdict::kViolated: return 2;
  }
  return 2;
}

IntegralResult negate(const IntegralResult& a) {
  IntegralResult r = a;
  r.value = -a.value;
  if (a.status == IntegralStatus::kDivergentPlus) r.status = IntegralStatus::kDivergentMinus;
  else if (a.status == IntegralStatus::kDivergentMinus) r.status = IntegralStatus::kDivergentPlus;
  return r;
}

IntegralResult add(const IntegralResult& a, const IntegralResult& b) {
  if (a.status == IntegralStatus::kSingular || b.status == IntegralStatus::kSingular)
    return IntegralResult::with_status(IntegralStatus::kSingular, "singular operand");
  if (a.converged() && b.converged())
    return IntegralResult::finite(a.value + b.value, a.abs_error_estimate + b.abs_error_estimate);
  if (a.converged()) return b;
  if (b.converged()) return a;
  if (a.status == b.status) return a;
  return IntegralResult::with_status(IntegralStatus::kSingular, "opposite divergences");
}

double slack_for(double bound, double slack_rel) { return slack_rel * (1.0 + std::abs(bound)); }

Verdict judge(double value, double error, double bound, double slack) {
  if (std::abs(value - bound) <= slack) return Verdict::kHoldsWithEquality;
  if (value > bound) return Verdict::kHolds;
  if (value + std::abs(error) >= bound) return Verdict::kHoldsWithEquality;
  return Verdict::kViolated;
}

Verdict judge(const IntegralResult& value, const IntegralResult& bound, double slack_rel,
              double* slack_used) {
  if (slack_used) *slack_used = 0.0;
  if (bound.status == IntegralStatus::kSingular) return Verdict::kSkippedPrecondition;
  if (!bound.converged()) return Verdict::kSkippedDivergent;
  const double slack = slack_for(bound.value, slack_rel);
  if (slack_used) *slack_used = slack;
  switch (value.status) {
    case IntegralStatus::kConverged:
      return judge(value.value, value.abs_error_estimate, bound.value, slack);
    case IntegralStatus::kDivergentPlus: return Verdict::kHolds;
    case IntegralStatus::kDivergentMinus: return Verdict::kViolated;
    case IntegralStatus::kSingular: return Verdict::kSkippedPrecondition;
  }
  return Verdict::kSkippedPrecondition;
}

Verdict LimitReport::worst() const noexcept {
  Verdict w = Verdict::kHolds;
  for (const auto& r : inequalities) {
    if (severity(r.verdict) > severity(w)) w = r.verdict;
  }
  const bool failed = std::any_of(checks.begin(), checks.end(),
                                  [](const CheckRecord& c) { return !c.skipped && !c.passed; });
  return failed ? Verdict::kViolated : w;
}

}  // namespace bodelim
