#include "bodelim/limits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "bodelim/error.hpp"

namespace bodelim {

namespace {

constexpr double kOrigin = 1e-12;
constexpr int kSeriesTerms = 4;

bool on_origin(Complex r) { return std::abs(r) <= kOrigin; }

bool on_imag_axis(Complex r) { return std::abs(r.real()) <= kOrigin * std::max(1.0, std::abs(r)); }

IntegralStatus sign_status(double s) {
  return s > 0.0 ? IntegralStatus::kDivergentPlus : IntegralStatus::kDivergentMinus;
}

enum class Mode { kPlant, kClosedLoop };

struct Integrand {
  const RationalTF* tf;
  double shift;  // subtracted from log|T|
  bool weighted;
};

double integrand(double omega, void* params) {
  const auto* p = static_cast<const Integrand*>(params);
  const double v = p->tf->log_abs_at(omega) - p->shift;
  return p->weighted ? v / (omega * omega) : v;
}

// Real part of sum z^k over zeros minus sum p^k over poles (k may be negative).
double power_sum(const RationalTF& t, int k, bool skip_origin) {
  Complex acc = 0.0;
  for (const Complex& z : t.zeros()) {
    if (skip_origin && on_origin(z)) continue;
    acc += std::pow(z, k);
  }
  for (const Complex& p : t.poles()) {
    if (skip_origin && on_origin(p)) continue;
    acc -= std::pow(p, k);
  }
  return acc.real();
}

class GslWorkspace {
 public:
  explicit GslWorkspace(std::size_t n) : w_(gsl_integration_workspace_alloc(n)), n_(n) {
    if (!w_) throw NumericError("quadrature workspace allocation failed");
  }
  ~GslWorkspace() { gsl_integration_workspace_free(w_); }
  GslWorkspace(const GslWorkspace&) = delete;
  GslWorkspace& operator=(const GslWorkspace&) = delete;
  gsl_integration_workspace* get() const { return w_; }
  std::size_t size() const { return n_; }

 private:
  gsl_integration_workspace* w_;
  std::size_t n_;
};

struct GslHandlerOff {
  GslHandlerOff() : old(gsl_set_error_handler_off()) {}
  ~GslHandlerOff() { gsl_set_error_handler(old); }
  gsl_error_handler_t* old;
};

IntegralResult log_integral(const RationalTF& t, Weight weight, const QuadratureOptions& opts,
                            Mode mode) {
  const bool weighted = weight == Weight::kInvOmegaSq;
  if (t.is_zero()) return IntegralResult::with_status(IntegralStatus::kSingular, "identically zero");
  if (mode == Mode::kClosedLoop) {
    for (const Complex& p : t.poles()) {
      if (on_imag_axis(p))
        return IntegralResult::with_status(IntegralStatus::kSingular, "pole on the imaginary axis");
    }
  }

  int r0 = 0;  // net root multiplicity at the origin
  double rmin = HUGE_VAL, rmax = 0.0;
  double log_t0 = std::log(std::abs(t.gain()));
  for (const Complex& z : t.zeros()) {
    if (on_origin(z)) { ++r0; continue; }
    rmin = std::min(rmin, std::abs(z));
    rmax = std::max(rmax, std::abs(z));
    log_t0 += std::log(std::abs(z));
  }
  for (const Complex& p : t.poles()) {
    if (on_origin(p)) { --r0; continue; }
    rmin = std::min(rmin, std::abs(p));
    rmax = std::max(rmax, std::abs(p));
    log_t0 -= std::log(std::abs(p));
  }
  if (rmax == 0.0) rmin = rmax = 1.0;
  const double log_k = std::log(std::abs(t.gain()));
  const int excess = -t.relative_degree();  // m - n

  double shift = 0.0;
  if (!weighted) {
    if (excess != 0) return IntegralResult::with_status(sign_status(excess), "log|T| grows like (m-n) log w");
    if (std::abs(log_k) > 1e-10)
      return IntegralResult::with_status(sign_status(log_k), "|T(j inf)| != 1");
    shift = log_k;
  } else {
    if (r0 != 0) {
      if (mode == Mode::kClosedLoop)
        return IntegralResult::with_status(IntegralStatus::kSingular, "root at the origin");
      return IntegralResult::with_status(sign_status(r0 > 0 ? -1.0 : 1.0), "root at the origin");
    }
    if (std::abs(log_t0) > 1e-8) {
      if (mode == Mode::kClosedLoop)
        return IntegralResult::with_status(IntegralStatus::kSingular, "|T(0)| != 1");
      return IntegralResult::with_status(sign_status(log_t0), "|T(0)| != 1");
    }
    shift = log_t0;
  }

  const double w0 = 1e-3 * rmin;
  const double wmax = 1e4 * rmax;

  // Below w0: log|T| = log|T^(0)| + r0 log w - sum_q (-1)^q Q_2q w^2q / 2q.
  double low = 0.0, low_err = 0.0;
  for (int q = 1; q <= kSeriesTerms + 1; ++q) {
    const double qm = power_sum(t, -2 * q, true);
    const double sgn = (q % 2 == 0) ? 1.0 : -1.0;
    const double term = weighted
                            ? -sgn * qm * std::pow(w0, 2 * q - 1) / (2.0 * q * (2 * q - 1))
                            : -sgn * qm * std::pow(w0, 2 * q + 1) / (2.0 * q * (2 * q + 1));
    if (q <= kSeriesTerms) low += term;
    else low_err = std::abs(term);
  }
  if (!weighted) low += w0 * (log_t0 - shift) + r0 * w0 * (std::log(w0) - 1.0);

  // Above wmax: log|T| = log|k| + (m-n) log w - sum_q (-1)^q P_2q w^-2q / 2q.
  double tail = 0.0, tail_err = 0.0;
  for (int q = 1; q <= kSeriesTerms + 1; ++q) {
    const double pm = power_sum(t, 2 * q, false);
    const double sgn = (q % 2 == 0) ? 1.0 : -1.0;
    const double term = weighted
                            ? -sgn * pm / (2.0 * q) * std::pow(wmax, -2 * q - 1) / (2 * q + 1)
                            : -sgn * pm / (2.0 * q) * std::pow(wmax, 1 - 2 * q) / (2 * q - 1);
    if (q <= kSeriesTerms) tail += term;
    else tail_err = std::abs(term);
  }
  if (weighted) tail += ((log_k - shift) + excess * (std::log(wmax) + 1.0)) / wmax;

  // Breakpoints: log grid plus root magnitudes and imaginary-axis crossings.
  std::vector<double> pts;
  const double decades = std::log10(wmax / w0);
  const int npanel = std::max(1, static_cast<int>(std::ceil(decades * opts.panels_per_decade)));
  for (int i = 0; i <= npanel; ++i) pts.push_back(w0 * std::pow(wmax / w0, double(i) / npanel));
  std::vector<double> singular_pts;
  auto add_root = [&](Complex r) {
    for (double v : {std::abs(r), std::abs(r.imag())}) {
      if (v > w0 && v < wmax) pts.push_back(v);
    }
    if (on_imag_axis(r) && !on_origin(r)) singular_pts.push_back(std::abs(r.imag()));
  };
  for (const Complex& z : t.zeros()) add_root(z);
  for (const Complex& p : t.poles()) add_root(p);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](double a, double b) { return std::abs(a - b) <= 1e-12 * b; }),
            pts.end());

  GslHandlerOff guard;
  GslWorkspace ws(opts.max_subdivisions);
  Integrand params{&t, shift, weighted};
  gsl_function f{&integrand, &params};
  double mid = 0.0, mid_err = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i], b = pts[i + 1];
    const bool touches_singular = std::any_of(singular_pts.begin(), singular_pts.end(), [&](double s) {
      return std::abs(s - a) <= 1e-12 * s || std::abs(s - b) <= 1e-12 * s;
    });
    double v = 0.0, e = 0.0;
    const int status =
        touches_singular
            ? gsl_integration_qags(&f, a, b, opts.panel_abs_tol, 0.0, ws.size(), ws.get(), &v, &e)
            : gsl_integration_qag(&f, a, b, opts.panel_abs_tol, 0.0, ws.size(), GSL_INTEG_GAUSS15,
                                  ws.get(), &v, &e);
    if (status != GSL_SUCCESS && status != GSL_EROUND) {
      std::ostringstream os;
      os << "adaptive quadrature did not converge on [" << a << ", " << b
         << "]: " << gsl_strerror(status);
      throw NumericError(os.str());
    }
    mid += v;
    mid_err += e;
  }

  const double scale = 1.0 / std::numbers::pi;  // (1/2pi) * 2 by evenness
  return IntegralResult::finite(scale * (low + mid + tail),
                                scale * (low_err + mid_err + tail_err));
}

double sum_unstable_real(const std::vector<Complex>& roots) {
  double s = 0.0;
  for (const Complex& r : roots) s += r.real();
  return s;
}

double sum_unstable_inverse(const std::vector<Complex>& roots) {
  double s = 0.0;
  for (const Complex& r : roots) s += (1.0 / r).real();
  return s;
}

}  // namespace

BoundReport analytic_bounds(const RationalTF& plant, double tol) {
  const PoleZeroClassification c = classify(plant, tol);
  BoundReport b;
  b.sens_bound = sum_unstable_real(c.unstable_poles);
  b.comp_bound = sum_unstable_inverse(c.nonmin_zeros);
  b.marginal_poles = c.marginal_poles;
  b.marginal_zeros = c.marginal_zeros;
  b.plant_log_integral = plant_log_integral(plant, Weight::kUnweighted);
  b.plant_log_integral_weighted = plant_log_integral(plant, Weight::kInvOmegaSq);
  b.load_bound = add(IntegralResult::finite(b.sens_bound), b.plant_log_integral);
  b.noise_bound = add(IntegralResult::finite(b.comp_bound), negate(b.plant_log_integral_weighted));
  return b;
}

IntegralResult plant_log_integral(const RationalTF& plant, Weight weight,
                                  const QuadratureOptions& opts) {
  return log_integral(plant, weight, opts, Mode::kPlant);
}

IntegralResult bode_quadrature(const RationalTF& t, Weight weight, const QuadratureOptions& opts) {
  return log_integral(t, weight, opts, Mode::kClosedLoop);
}

double classical_oracle(const RationalTF& loop, OracleKind kind) {
  const GangOfFour g = gang_of_four(loop, RationalTF::constant(1.0));
  for (const Complex& p : g.closed_loop_poles) {
    if (p.real() >= -kDefaultStabilityTol) throw UnstableLoopError("classical_oracle: closed loop is not stable");
  }
  const PoleZeroClassification c = classify(loop);
  if (kind == OracleKind::kSensitivity) {
    const int rd = loop.relative_degree();
    if (rd < 1) throw DomainError("classical_oracle: sensitivity form needs relative degree >= 1");
    const double kappa = rd == 1 ? loop.gain() : 0.0;
    return sum_unstable_real(c.unstable_poles) - kappa / 2.0;
  }
  const int type = loop.type();
  if (type < 1) throw DomainError("classical_oracle: complementary form needs loop type >= 1");
  double inv_kv = 0.0;
  if (type == 1) {
    Complex kv = loop.gain();
    for (const Complex& z : loop.zeros()) kv *= -z;
    for (const Complex& p : loop.poles()) {
      if (!on_origin(p)) kv /= -p;
    }
    inv_kv = 1.0 / kv.real();
  }
  return sum_unstable_inverse(c.nonmin_zeros) - inv_kv / 2.0;
}

LoopPreconditions loop_preconditions(const RationalTF& plant, const RationalTF& controller) {
  LoopPreconditions p;
  p.loop_relative_degree = plant.relative_degree() + controller.relative_degree();
  p.loop_type = plant.type() + controller.type();
  p.sensitivity_side_ok = p.loop_relative_degree >= 2;
  p.weighted_side_ok = p.loop_type >= 2;
  return p;
}

LimitReport corollary3_report(const RationalTF& plant, const RationalTF& controller,
                              double slack_rel, const QuadratureOptions& opts) {
  const GangOfFour g = gang_of_four(plant, controller);
  for (const Complex& p : g.closed_loop_poles) {
    if (p.real() >= -kDefaultStabilityTol) {
      std::ostringstream os;
      os << "closed loop is not stable (pole " << p << ")";
      throw UnstableLoopError(os.str());
    }
  }
  const BoundReport b = analytic_bounds(plant);
  const LoopPreconditions pre = loop_preconditions(plant, controller);

  LimitReport rep;
  auto quad = [&](const RationalTF& t, Weight w) {
    try {
      return bode_quadrature(t, w, opts);
    } catch (const NumericError& e) {
      return IntegralResult::with_status(IntegralStatus::kSingular, e.what());
    }
  };
  auto record = [&](std::string id, std::string lhs, std::string rhs, const RationalTF& t, Weight w,
                    const IntegralResult& bound, bool pre_ok, std::string pre_note) {
    InequalityRecord r;
    r.id = std::move(id);
    r.lhs = std::move(lhs);
    r.rhs = std::move(rhs);
    r.analytic_bound = bound;
    r.quadrature_value = quad(t, w);
    r.compared_value = *r.quadrature_value;
    r.compared_bound = bound;
    if (!pre_ok) {
      r.verdict = Verdict::kSkippedPrecondition;
      r.note = std::move(pre_note);
    } else {
      r.verdict = judge(r.compared_value, bound, slack_rel, &r.slack_used);
      if (r.verdict == Verdict::kSkippedDivergent) r.note = "bound diverges: " + bound.note;
    }
    rep.inequalities.push_back(std::move(r));
  };

  std::string sens_note;
  {
    std::ostringstream os;
    os << "loop relative degree " << pre.loop_relative_degree << " < 2";
    if (pre.loop_relative_degree == 1) {
      const RationalTF loop = plant * controller;
      os << "; classical value sum Re p - kappa/2 = "
         << classical_oracle(loop, OracleKind::kSensitivity)
         << " may sit below the unstable-pole sum (documented discrepancy)";
    }
    sens_note = os.str();
  }
  std::ostringstream wn;
  wn << "loop type " << pre.loop_type << " < 2";
  const std::string weighted_note = wn.str();

  record("sensitivity_quadrature", "int log|T_uw|", "sum Re p, unstable plant poles", g.t_uw,
         Weight::kUnweighted, IntegralResult::finite(b.sens_bound), pre.sensitivity_side_ok, sens_note);
  record("load_quadrature", "int log|T_yw|", "sum Re p + int log|G|", g.t_yw, Weight::kUnweighted,
         b.load_bound, pre.sensitivity_side_ok, sens_note);
  record("complementary_quadrature", "int log|T_yd| / w^2", "sum Re 1/z, nonminimum-phase plant zeros",
         g.t_yd, Weight::kInvOmegaSq, IntegralResult::finite(b.comp_bound), pre.weighted_side_ok,
         weighted_note);
  record("noise_quadrature", "int log|T_ud| / w^2", "sum Re 1/z - int log|G| / w^2", g.t_ud,
         Weight::kInvOmegaSq, b.noise_bound, pre.weighted_side_ok, weighted_note);

  if (!b.marginal_poles.empty() || !b.marginal_zeros.empty())
    rep.notes.push_back("plant has imaginary-axis roots; they are excluded from the bound sums");
  if (plant.has_unstable_cancellation() || controller.has_unstable_cancellation())
    rep.notes.push_back("unstable pole/zero cancellation inside plant or controller");
  return rep;
}

}  // namespace bodelim
