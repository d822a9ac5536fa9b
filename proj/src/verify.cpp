#include "bodelim/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bodelim/error.hpp"

namespace bodelim {

namespace {

// stream bases of the four simulations of a system
constexpr std::uint64_t kDitheredStreams = std::uint64_t{1} << 32;
constexpr std::uint64_t kMeasurementStreams = std::uint64_t{2} << 32;

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

double mag(const RationalTF& t, double omega) { return std::exp(t.log_abs_at(omega)); }

CheckRecord skipped_check(std::string id, std::string note) {
  CheckRecord c;
  c.id = std::move(id);
  c.skipped = true;
  c.note = std::move(note);
  return c;
}

CheckRecord bound_check(std::string id, double value, double reference, double tolerance) {
  CheckRecord c;
  c.id = std::move(id);
  c.value = value;
  c.reference = reference;
  c.tolerance = tolerance;
  c.passed = std::isfinite(value) && std::abs(value - reference) <= tolerance;
  return c;
}

// |est - exact| / |exact|; an exactly zero side counts as agreement only when both vanish.
double rel_err(Complex est, Complex exact) {
  if (exact == 0.0) return est == 0.0 ? 0.0 : 1.0;
  return std::abs(est - exact) / std::abs(exact);
}

// Runs body; an unstable or ill-posed loop becomes a skipped check.
void guarded_check(LimitReport& rep, const std::string& id, const std::function<void()>& body) {
  try {
    body();
  } catch (const UnstableLoopError& e) {
    rep.checks.push_back(skipped_check(id, e.what()));
  } catch (const DomainError& e) {
    rep.checks.push_back(skipped_check(id, e.what()));
  }
}


struct Chain {
  LimitReport& rep;
  double slack_rel;
  bool pre_ok;
  std::string pre_note;

  InequalityRecord& add(std::string id, std::string lhs, std::string rhs, const IntegralResult& value,
                        const IntegralResult& bound) {
    InequalityRecord r;
    r.id = std::move(id);
    r.lhs = std::move(lhs);
    r.rhs = std::move(rhs);
    r.analytic_bound = bound;
    r.compared_value = value;
    r.compared_bound = bound;
    if (!pre_ok) {
      r.verdict = Verdict::kSkippedPrecondition;
      r.note = pre_note;
    } else {
      r.verdict = judge(value, bound, slack_rel, &r.slack_used);
      if (r.verdict == Verdict::kSkippedDivergent) r.note = "bound diverges";
      else if (r.verdict == Verdict::kSkippedPrecondition) r.note = value.note.empty() ? bound.note : value.note;
    }
    rep.inequalities.push_back(std::move(r));
    return rep.inequalities.back();
  }
};

// (1/pi) int_lo^hi f(omega) on the grid points inside the band, trapezoid.
double exact_band_integral(const std::vector<double>& omega, double lo, double hi,
                           const std::function<double(double)>& f) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < omega.size(); ++k) {
    if (omega[k] < lo || omega[k + 1] > hi) continue;
    acc += 0.5 * (omega[k + 1] - omega[k]) * (f(omega[k]) + f(omega[k + 1]));
  }
  return acc / M_PI;
}

std::string mi_note(const MiRateEstimate& a, const char* name) {
  return a.unreliable ? std::string(name) + " coherence clipped on " + fmt(100 * a.clipped_fraction) + "% of band; "
                      : std::string();
}

double geometric_mean_magnitude(const std::vector<Complex>& poles) {
  if (poles.empty()) return 1.0;
  double acc = 0.0;
  for (const Complex& p : poles) acc += std::log(std::abs(p));
  return std::exp(acc / double(poles.size()));
}

}  // namespace

std::uint64_t system_seed(std::uint64_t master, std::size_t index) {
  // splitmix64 step
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (std::uint64_t(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SimPlan plan_simulation(const RationalTF& plant, const RationalTF& controller, Injection injection,
                        const std::optional<NoiseSpec>& noise, const SimParams& sim) {
  SimPlan plan;
  const bool control = injection == Injection::kControlNoise;
  const RationalTF lp = control ? plant : inverse_plant(plant);
  const RationalTF lc = control ? controller : inverse_plant(controller);
  plan.gang = gang_of_four(lp, lc);
  for (const Complex& p : plan.gang.closed_loop_poles) {
    if (p.real() >= -kDefaultStabilityTol) {
      std::ostringstream os;
      os << (control ? "control-noise" : "inverse") << " loop is not stable (pole " << p << ")";
      throw UnstableLoopError(os.str());
    }
  }
  double intensity = 1.0;
  if (noise) {
    plan.noise_shape = noise->shape;
    intensity = noise->intensity;
  } else {
    plan.noise_shape = ou_shape(geometric_mean_magnitude(plan.gang.closed_loop_poles));
  }
  double bw = 0.0;
  for (const Complex& p : plan.gang.closed_loop_poles) bw = std::max(bw, std::abs(p));
  if (bw == 0.0) {
    for (const Complex& p : plan.noise_shape.poles()) bw = std::max(bw, std::abs(p));
  }
  plan.bandwidth = bw > 0.0 ? bw : 1.0;

  const double corner = sim.dither_corner * plan.bandwidth;
  const RationalTF dither_shape = plan.noise_shape * RationalTF::from_zpk({}, {Complex(-corner, 0.0)}, corner);
  plan.loop = closed_loop_system(plant, controller, injection, plan.noise_shape, intensity, sim.dither,
                                 dither_shape);
  if (!plan.loop.stable) throw UnstableLoopError("augmented loop is not stable");

  const SimTiming timing = sim_timing(plan.loop.ss);
  plan.dt = sim.dt > 0.0 ? sim.dt : M_PI / std::max(20.0 * timing.fastest_rate, 120.0 * plan.bandwidth);
  if (sim.duration > 0.0) {
    plan.duration = sim.duration;
  } else {
    // first Welch bin 2 pi / (nperseg dt) <= bandwidth / 100 with nperseg >= length / 64
    const double span = 64.0 * 2.0 * M_PI * 100.0 / plan.bandwidth;
    plan.duration = std::max({double(sim.samples) * plan.dt, timing.min_duration, span});
  }
  plan.mi_band = {2.0 * M_PI / (plan.duration / 10.0), 0.8 * M_PI / plan.dt};
  return plan;
}

bool looks_stationary(const SignalBundle& bundle, double tol, std::string* note) {
  constexpr std::size_t kBlocks = 16;
  for (const auto& [name, x] : bundle.channels) {
    const std::size_t len = x.size() / kBlocks;
    if (len < 2) continue;
    std::vector<double> ms(kBlocks, 0.0);
    for (std::size_t b = 0; b < kBlocks; ++b) {
      for (std::size_t i = b * len; i < (b + 1) * len; ++i) ms[b] += x[i] * x[i];
      ms[b] /= double(len);
    }
    double a = 0.0, c = 0.0;
    for (std::size_t b = 0; b < kBlocks / 2; ++b) a += ms[b];
    for (std::size_t b = kBlocks / 2; b < kBlocks; ++b) c += ms[b];
    if (a == 0.0 && c == 0.0) continue;
    // block scatter from successive differences, so a trend does not inflate it
    double var = 0.0;
    for (std::size_t b = 1; b < kBlocks; ++b) var += (ms[b] - ms[b - 1]) * (ms[b] - ms[b - 1]);
    var /= 2.0 * double(kBlocks - 1);
    // difference of the half means against its sampling scatter
    const double z = std::abs(a - c) / double(kBlocks / 2) / std::sqrt(2.0 * var / double(kBlocks / 2));
    const double ratio = std::max(a, c) / std::max(std::min(a, c), 1e-300);
    if (ratio - 1.0 > tol && z > 4.0) {
      if (note) *note = "channel " + name + " split-half mean-square ratio " + fmt(ratio) + " (z = " + fmt(z) + ")";
      return false;
    }
  }
  return true;
}

LoopEstimate estimate_loop(const SimPlan& plan, const SimParams& sim, const Tolerances& tol,
                           std::uint64_t stream_base) {
  const std::size_t trials = std::max<std::size_t>(1, sim.trials);
  std::vector<std::optional<SpectralMatrix>> parts(trials);
  std::vector<std::string> notes(trials);
  std::vector<char> ok(trials, 1);
  parallel_for(trials, [&](std::size_t t) {
    const SignalBundle b = simulate(plan.loop, plan.dt, plan.duration, sim.seed, stream_base + t, sim.oversample);
    if (!looks_stationary(b, tol.stationarity, &notes[t])) ok[t] = 0;
    parts[t] = welch_matrix(b, plan.loop.channels);
  });
  std::vector<SpectralMatrix> all;
  for (auto& p : parts) all.push_back(std::move(*p));
  LoopEstimate est{plan, pool_spectra(all), true, {}};
  for (std::size_t t = 0; t < trials; ++t) {
    if (!ok[t]) {
      est.stationary = false;
      est.note = "trial " + std::to_string(t) + ": " + notes[t];
      break;
    }
  }
  return est;
}

LoopPair estimate_loop_pair(const RationalTF& plant, const RationalTF& controller, Injection injection,
                            const std::optional<NoiseSpec>& noise, const SimParams& sim,
                            const Tolerances& tol) {
  const std::uint64_t base = injection == Injection::kControlNoise ? 0 : kMeasurementStreams;
  SimParams clean = sim;
  clean.dither = 0.0;
  clean.oversample = 1;
  return {estimate_loop(plan_simulation(plant, controller, injection, noise, clean), clean, tol, base),
          estimate_loop(plan_simulation(plant, controller, injection, noise, sim), sim, tol,
                        base + kDitheredStreams)};
}

double median_relative_error(const std::vector<double>& omega, const std::vector<double>& estimate,
                             const std::vector<double>& exact, double lo, double hi) {
  std::vector<double> rel;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    if (omega[k] < lo || omega[k] > hi) continue;
    rel.push_back(rel_err(estimate[k], exact[k]));
  }
  return median(std::move(rel));
}

namespace {

// At most about points entries, log-spaced over the grid; masked points dropped.
CurveRecord thin_curve(const SensitivityCurve& c, const std::vector<double>& exact, bool inverted,
                       std::size_t points = 256) {
  CurveRecord r;
  r.kind = c.kind;
  r.inverted = inverted;
  if (c.omega.empty()) return r;
  const double lo = std::log(c.omega.front()), hi = std::log(c.omega.back());
  const double step = (hi - lo) / double(points);
  double next = lo;
  for (std::size_t k = 0; k < c.omega.size(); ++k) {
    if (std::log(c.omega[k]) < next || c.masked[k]) continue;
    r.omega.push_back(c.omega[k]);
    r.estimate.push_back(c.value[k]);
    r.exact.push_back(exact[k]);
    next = std::log(c.omega[k]) + step;
  }
  return r;
}

}  // namespace

void add_lemma1_checks(const LoopEstimate& est, const RationalTF& plant,
                       const RationalTF& controller, const Tolerances& tol, LimitReport& rep) {
  const bool control = est.plan.loop.injection == Injection::kControlNoise;
  struct Item {
    std::string name;
    std::string num, den;
    const RationalTF* t;
  };
  const GangOfFour g = gang_of_four(plant, controller);
  const std::vector<Item> items =
      control ? std::vector<Item>{{"uw", "u", "w", &g.t_uw}, {"yw", "y", "w", &g.t_yw}}
              : std::vector<Item>{{"yd", "y", "d", &g.t_yd}, {"ud", "u", "d", &g.t_ud}};
  const double bw = est.plan.bandwidth;
  for (const Item& it : items) {
    const std::string pid = "lemma1_pointwise_" + it.name;
    const std::string iid = "lemma1_integral_" + it.name;
    if (!est.stationary) {
      rep.checks.push_back(skipped_check(pid, "stationarity check failed: " + est.note));
      rep.checks.push_back(skipped_check(iid, "stationarity check failed: " + est.note));
      continue;
    }
    const SensitivityCurve c =
        sensitivity_like(est.spectra(it.num, it.num), est.spectra(it.den, it.den), it.name, tol.psd_floor_rel);
    std::vector<double> exact(c.omega.size());
    for (std::size_t k = 0; k < c.omega.size(); ++k)
      exact[k] = mag(*it.t, control ? c.omega[k] : 1.0 / c.omega[k]);
    CheckRecord pc = bound_check(pid, median_relative_error(c.omega, c.value, exact, bw / 10, 10 * bw), 0.0,
                                 tol.pointwise);
    pc.note = "median relative error of the estimated curve against |T| on [" + fmt(bw / 10) + ", " +
              fmt(10 * bw) + "]";
    rep.checks.push_back(pc);
    rep.curves.push_back(thin_curve(c, exact, !control));

    const Weight w = control ? Weight::kUnweighted : Weight::kInvOmegaSq;
    IntegralResult q;
    try {
      q = bode_quadrature(*it.t, w);
    } catch (const NumericError& e) {
      q = IntegralResult::with_status(IntegralStatus::kSingular, e.what());
    }
    const IntegralResult emp = bode_like_integral(c, Weight::kUnweighted, {bw});
    if (!q.converged()) {
      rep.checks.push_back(skipped_check(iid, "quadrature " + std::string(to_string(q.status)) + " " + q.note));
    } else if (!emp.converged()) {
      rep.checks.push_back(skipped_check(iid, "empirical integral " + std::string(to_string(emp.status)) +
                                                  ": " + emp.note));
    } else {
      CheckRecord ic = bound_check(iid, emp.value, q.value,
                                   std::max(tol.integral_abs, tol.integral_rel * std::abs(q.value)));
      ic.note = control ? "empirical vs quadrature" : "inverse-loop integral vs weighted quadrature";
      rep.checks.push_back(ic);
    }
  }
}

void add_control_chain(const LoopPair& pair, const RationalTF& plant,
                       const RationalTF& controller, const Tolerances& tol, LimitReport& rep) {
  for (const LoopEstimate* e : {&pair.clean, &pair.dithered}) {
    if (!e->stationary) {
      rep.checks.push_back(skipped_check("control_chain", "stationarity check failed: " + e->note));
      return;
    }
  }
  const LoopEstimate& est = pair.dithered;
  const SpectralMatrix& S = est.spectra;
  const SpectralMatrix& Sc = pair.clean.spectra;
  const MiBand band = est.plan.mi_band;
  const BoundReport b = analytic_bounds(plant);
  const LoopPreconditions pre = loop_preconditions(plant, controller);

  const MiRateEstimate uv = mi_rate_pinsker(S("u", "u"), S("v", "v"), S("u", "v"), band);
  const MiRateEstimate yv = mi_rate_pinsker(S("y", "y"), S("v", "v"), S("y", "v"), band);
  const MiRateEstimate wv = mi_rate_pinsker(S("w", "w"), S("v", "v"), S("w", "v"), band);
  const double du = uv.value - wv.value;
  const double dy = yv.value - wv.value;
  const std::string mi_caveat = mi_note(uv, "(u,v)") + mi_note(yv, "(y,v)") + mi_note(wv, "(w,v)");

  const SensitivityCurve tuw = sensitivity_like(S("u", "u"), S("w", "w"), "uw", tol.psd_floor_rel);
  const SensitivityCurve tyw = sensitivity_like(S("y", "y"), S("w", "w"), "yw", tol.psd_floor_rel);
  const IntegralResult band_uw = band_log_integral(tuw, band.lo, band.hi);
  const IntegralResult band_yw = band_log_integral(tyw, band.lo, band.hi);
  const IntegralResult full_uw =
      bode_like_integral(sensitivity_like(Sc("u", "u"), Sc("w", "w"), "uw", tol.psd_floor_rel),
                         Weight::kUnweighted, {est.plan.bandwidth});
  const IntegralResult full_yw =
      bode_like_integral(sensitivity_like(Sc("y", "y"), Sc("w", "w"), "yw", tol.psd_floor_rel),
                         Weight::kUnweighted, {est.plan.bandwidth});

  std::ostringstream pn;
  pn << "loop relative degree " << pre.loop_relative_degree << " < 2";
  Chain ch{rep, tol.slack_rel, pre.sensitivity_side_ok, pn.str()};
  const IntegralResult up = IntegralResult::finite(b.sens_bound);

  InequalityRecord& r12 = ch.add("sensitivity_integral_ge_mi", "int log T_uw over the MI band",
                                 "I(u;v) - I(w;v)", band_uw, IntegralResult::finite(du));
  r12.empirical_integral = band_uw;
  r12.mi_rate_difference = du;
  if (!mi_caveat.empty()) r12.note += mi_caveat;

  IntegralResult load_rhs = b.plant_log_integral;
  if (load_rhs.converged()) {
    const double g_band = exact_band_integral(tyw.omega, band.lo, band.hi,
                                              [&](double w) { return plant.log_abs_at(w); });
    load_rhs = IntegralResult::finite(dy + g_band);
  }
  InequalityRecord& r13 = ch.add("load_integral_ge_mi", "int log T_yw over the MI band",
                                 "I(y;v) - I(w;v) + int log|G|", band_yw, load_rhs);
  r13.empirical_integral = band_yw;
  r13.mi_rate_difference = dy;

  InequalityRecord& r16 = ch.add("sensitivity_mi_ge_poles", "I(u;v) - I(w;v)",
                                 "sum Re p, unstable plant poles", IntegralResult::finite(du), up);
  r16.mi_rate_difference = du;
  InequalityRecord& r17 = ch.add("load_mi_ge_poles", "I(y;v) - I(w;v)", "sum Re p, unstable plant poles",
                                 IntegralResult::finite(dy), up);
  r17.mi_rate_difference = dy;

  InequalityRecord& r20 = ch.add("sensitivity_empirical_ge_bound", "int log T_uw (Welch)",
                                 "sum Re p, unstable plant poles", full_uw, up);
  r20.empirical_integral = full_uw;
  InequalityRecord& r21 = ch.add("load_empirical_ge_bound", "int log T_yw (Welch)",
                                 "sum Re p + int log|G|", full_yw, b.load_bound);
  r21.empirical_integral = full_yw;

  if (!pre.sensitivity_side_ok) {
    rep.checks.push_back(skipped_check("mi_identity_uv_yv", "MI rates unbounded: " + pn.str()));
    return;
  }
  CheckRecord id = bound_check("mi_identity_uv_yv", uv.value, yv.value, tol.mi_identity);
  id.note = "I(u;v) = I(y;v)";
  rep.checks.push_back(id);
}

void add_measurement_chain(const LoopPair& pair, const RationalTF& plant,
                           const RationalTF& controller, const Tolerances& tol, LimitReport& rep) {
  for (const LoopEstimate* e : {&pair.clean, &pair.dithered}) {
    if (!e->stationary) {
      rep.checks.push_back(skipped_check("measurement_chain", "stationarity check failed: " + e->note));
      return;
    }
  }
  const LoopEstimate& est = pair.dithered;
  const SpectralMatrix& S = est.spectra;
  const SpectralMatrix& Sc = pair.clean.spectra;
  const MiBand band = est.plan.mi_band;
  const BoundReport b = analytic_bounds(plant);
  const LoopPreconditions pre = loop_preconditions(plant, controller);

  const MiRateEstimate ye = mi_rate_pinsker(S("y", "y"), S("e", "e"), S("y", "e"), band);
  const MiRateEstimate ue = mi_rate_pinsker(S("u", "u"), S("e", "e"), S("u", "e"), band);
  const MiRateEstimate de = mi_rate_pinsker(S("d", "d"), S("e", "e"), S("d", "e"), band);
  const double dy = ye.value - de.value;
  const double du = ue.value - de.value;
  const std::string mi_caveat = mi_note(ye, "(y~,e~)") + mi_note(ue, "(u~,e~)") + mi_note(de, "(d~,e~)");

  const SensitivityCurve tyd = sensitivity_like(S("y", "y"), S("d", "d"), "yd", tol.psd_floor_rel);
  const SensitivityCurve tud = sensitivity_like(S("u", "u"), S("d", "d"), "ud", tol.psd_floor_rel);
  const IntegralResult band_yd = band_log_integral(tyd, band.lo, band.hi);
  const IntegralResult band_ud = band_log_integral(tud, band.lo, band.hi);
  const IntegralResult full_yd =
      bode_like_integral(sensitivity_like(Sc("y", "y"), Sc("d", "d"), "yd", tol.psd_floor_rel),
                         Weight::kUnweighted, {est.plan.bandwidth});
  const IntegralResult full_ud =
      bode_like_integral(sensitivity_like(Sc("u", "u"), Sc("d", "d"), "ud", tol.psd_floor_rel),
                         Weight::kUnweighted, {est.plan.bandwidth});

  std::ostringstream pn;
  pn << "loop type " << pre.loop_type << " < 2";
  Chain ch{rep, tol.slack_rel, pre.weighted_side_ok, pn.str()};
  const IntegralResult uz = IntegralResult::finite(b.comp_bound);

  InequalityRecord& r14 = ch.add("complementary_integral_ge_mi", "int log T_yd / w^2 over the MI band",
                                 "I(y~;e~) - I(d~;e~)", band_yd, IntegralResult::finite(dy));
  r14.empirical_integral = band_yd;
  r14.mi_rate_difference = dy;
  if (!mi_caveat.empty()) r14.note += mi_caveat;

  IntegralResult noise_rhs = negate(b.plant_log_integral_weighted);
  if (noise_rhs.converged()) {
    // int log|G(jw)| / w^2 dw = int log|G(j / w~)| dw~
    const double g_band = exact_band_integral(tud.omega, band.lo, band.hi,
                                              [&](double w) { return plant.log_abs_at(1.0 / w); });
    noise_rhs = IntegralResult::finite(du - g_band);
  }
  InequalityRecord& r15 = ch.add("noise_integral_ge_mi", "int log T_ud / w^2 over the MI band",
                                 "I(u~;e~) - I(d~;e~) - int log|G| / w^2", band_ud, noise_rhs);
  r15.empirical_integral = band_ud;
  r15.mi_rate_difference = du;

  InequalityRecord& r18 = ch.add("complementary_mi_ge_zeros", "I(y~;e~) - I(d~;e~)",
                                 "sum Re 1/z, nonminimum-phase plant zeros", IntegralResult::finite(dy), uz);
  r18.mi_rate_difference = dy;
  InequalityRecord& r19 = ch.add("noise_mi_ge_zeros", "I(u~;e~) - I(d~;e~)",
                                 "sum Re 1/z, nonminimum-phase plant zeros", IntegralResult::finite(du), uz);
  r19.mi_rate_difference = du;

  InequalityRecord& r22 = ch.add("complementary_empirical_ge_bound", "int log T_yd / w^2 (inverse loop, Welch)",
                                 "sum Re 1/z, nonminimum-phase plant zeros", full_yd, uz);
  r22.empirical_integral = full_yd;
  InequalityRecord& r23 = ch.add("noise_empirical_ge_bound", "int log T_ud / w^2 (inverse loop, Welch)",
                                 "sum Re 1/z - int log|G| / w^2", full_ud, b.noise_bound);
  r23.empirical_integral = full_ud;

  if (!pre.weighted_side_ok) {
    rep.checks.push_back(skipped_check("mi_identity_ye_ue", "MI rates unbounded: " + pn.str()));
    return;
  }
  CheckRecord id = bound_check("mi_identity_ye_ue", ye.value, ue.value, tol.mi_identity);
  id.note = "I(y~;e~) = I(u~;e~)";
  rep.checks.push_back(id);
}

void add_appendix_checks(const SpectralMatrix& S, double bandwidth, const RationalTF& plant,
                         const RationalTF& controller, const Tolerances& tol, LimitReport& rep) {
  const std::vector<double>& om = S.omega();
  const double lo = bandwidth / 10, hi = 10 * bandwidth;
  std::vector<double> e_w, e_uv, e_vu, e_v, e_y;
  for (std::size_t k = 0; k < om.size(); ++k) {
    if (om[k] < lo || om[k] > hi) continue;
    const Complex s(0.0, om[k]);
    const Complex G = tf_eval(plant, s);
    const Complex L = G * tf_eval(controller, s);
    const double pu = S("u", "u").values[k].real();
    const Complex puv = S("u", "v").values[k], pvu = S("v", "u").values[k];
    const double pv = S("v", "v").values[k].real();
    const double pw = S("w", "w").values[k].real();
    const double py = S("y", "y").values[k].real();
    e_w.push_back(rel_err(pw, pu + puv.real() + pvu.real() + pv));
    e_uv.push_back(rel_err(puv, std::conj(L) * pu));
    e_vu.push_back(rel_err(pvu, L * pu));
    e_v.push_back(rel_err(pv, std::norm(L) * pu));
    e_y.push_back(rel_err(py, std::norm(G) * pu));
  }
  const auto push = [&](const char* id, std::vector<double> err, const char* what) {
    CheckRecord c = bound_check(id, median(std::move(err)), 0.0, tol.appendix);
    c.note = std::string(what) + ", median relative error on [" + fmt(lo) + ", " + fmt(hi) + "]";
    rep.checks.push_back(c);
  };
  push("appendix_w_decomposition", e_w, "phi_w = phi_u + phi_uv + phi_vu + phi_v");
  push("appendix_uv", e_uv, "phi_uv = L(-jw) phi_u");
  push("appendix_vu", e_vu, "phi_vu = L(jw) phi_u");
  push("appendix_v", e_v, "phi_v = L(-jw) L(jw) phi_u");
  push("appendix_y", e_y, "phi_y = G(-jw) G(jw) phi_u");
}

LimitReport check_appendix_identities(const SignalBundle& bundle, const RationalTF& plant,
                                      const RationalTF& controller, const Tolerances& tol) {
  LimitReport rep;
  std::string note;
  if (!looks_stationary(bundle, tol.stationarity, &note)) {
    for (const char* id : {"appendix_w_decomposition", "appendix_uv", "appendix_vu", "appendix_v", "appendix_y"})
      rep.checks.push_back(skipped_check(id, "stationarity check failed: " + note));
    return rep;
  }
  double bw = 0.0;
  for (const Complex& p : gang_of_four(plant, controller).closed_loop_poles) bw = std::max(bw, std::abs(p));
  add_appendix_checks(welch_matrix(bundle, {"u", "v", "w", "y"}), bw > 0.0 ? bw : 1.0, plant, controller,
                      tol, rep);
  return rep;
}

LimitReport check_lemma1(const RationalTF& plant, const RationalTF& controller,
                         const std::optional<NoiseSpec>& noise, const SimParams& sim,
                         const Tolerances& tol) {
  LimitReport rep;
  SimParams clean = sim;
  clean.dither = 0.0;
  clean.oversample = 1;
  guarded_check(rep, "lemma1_control_loop", [&] {
    add_lemma1_checks(
        estimate_loop(plan_simulation(plant, controller, Injection::kControlNoise, noise, clean), clean, tol),
        plant, controller, tol, rep);
  });
  guarded_check(rep, "lemma1_inverse_loop", [&] {
    add_lemma1_checks(
        estimate_loop(plan_simulation(plant, controller, Injection::kMeasurementNoise, noise, clean), clean, tol,
                      kMeasurementStreams),
        plant, controller, tol, rep);
  });
  return rep;
}

LimitReport check_control_noise_chain(const RationalTF& plant, const RationalTF& controller,
                                      const std::optional<NoiseSpec>& noise, const SimParams& sim,
                                      const Tolerances& tol) {
  LimitReport rep;
  guarded_check(rep, "control_chain", [&] {
    add_control_chain(estimate_loop_pair(plant, controller, Injection::kControlNoise, noise, sim, tol), plant,
                      controller, tol, rep);
  });
  return rep;
}

LimitReport check_measurement_noise_chain(const RationalTF& plant, const RationalTF& controller,
                                          const std::optional<NoiseSpec>& noise,
                                          const SimParams& sim, const Tolerances& tol) {
  LimitReport rep;
  guarded_check(rep, "measurement_chain", [&] {
    add_measurement_chain(estimate_loop_pair(plant, controller, Injection::kMeasurementNoise, noise, sim, tol),
                          plant, controller, tol, rep);
  });
  return rep;
}

std::vector<LimitReport> run_full_suite(const SuiteConfig& cfg) {
  std::vector<LimitReport> reports;
  for (std::size_t i = 0; i < cfg.systems.size(); ++i) {
    const SystemSpec& sys = cfg.systems[i];
    LimitReport rep;
    rep.system_id = sys.id;
    const auto skip_all = [&](const std::string& why) {
      InequalityRecord r;
      r.id = "closed_loop_stability";
      r.lhs = "closed loop";
      r.rhs = "mean-square stable";
      r.verdict = Verdict::kSkippedPrecondition;
      r.note = why;
      rep.inequalities.push_back(std::move(r));
    };
    try {
      LimitReport a = corollary3_report(sys.plant, sys.controller, cfg.tol.slack_rel, cfg.quadrature);
      rep.inequalities = std::move(a.inequalities);
      rep.notes = std::move(a.notes);
    } catch (const UnstableLoopError& e) {
      skip_all(e.what());
      reports.push_back(std::move(rep));
      continue;
    } catch (const DomainError& e) {
      skip_all(e.what());
      reports.push_back(std::move(rep));
      continue;
    }

    SimParams sim = cfg.sim;
    sim.seed = system_seed(cfg.sim.seed, i);
    const auto guarded = [&](const char* what, const std::function<void()>& body) {
      try {
        body();
      } catch (const UnstableLoopError& e) {
        rep.notes.push_back(std::string(what) + " skipped: " + e.what());
      } catch (const DomainError& e) {
        rep.notes.push_back(std::string(what) + " skipped: " + e.what());
      }
    };
    const auto loop_checks = [&](Injection inj, bool chain) {
      SimParams clean = sim;
      clean.dither = 0.0;
      clean.oversample = 1;
      const std::uint64_t base = inj == Injection::kControlNoise ? 0 : kMeasurementStreams;
      LoopEstimate est = estimate_loop(plan_simulation(sys.plant, sys.controller, inj, sys.noise, clean),
                                       clean, cfg.tol, base);
      if (cfg.lemma1) add_lemma1_checks(est, sys.plant, sys.controller, cfg.tol, rep);
      if (inj == Injection::kControlNoise && cfg.appendix) {
        if (est.stationary) {
          add_appendix_checks(est.spectra, est.plan.bandwidth, sys.plant, sys.controller, cfg.tol, rep);
        } else {
          rep.checks.push_back(skipped_check("appendix", "stationarity check failed: " + est.note));
        }
      }
      if (!chain) return;
      const LoopPair pair{std::move(est),
                          estimate_loop(plan_simulation(sys.plant, sys.controller, inj, sys.noise, sim), sim,
                                        cfg.tol, base + kDitheredStreams)};
      if (inj == Injection::kControlNoise) add_control_chain(pair, sys.plant, sys.controller, cfg.tol, rep);
      else add_measurement_chain(pair, sys.plant, sys.controller, cfg.tol, rep);
    };
    if (cfg.lemma1 || cfg.control_chain || cfg.appendix)
      guarded("control-noise loop", [&] { loop_checks(Injection::kControlNoise, cfg.control_chain); });
    if (cfg.lemma1 || cfg.measurement_chain)
      guarded("inverse loop", [&] { loop_checks(Injection::kMeasurementNoise, cfg.measurement_chain); });
    reports.push_back(std::move(rep));
  }
  return reports;
}

Verdict worst(const std::vector<LimitReport>& reports) {
  Verdict w = Verdict::kHolds;
  for (const LimitReport& r : reports) {
    const Verdict v = r.worst();
    if (severity(v) > severity(w)) w = v;
  }
  return w;
}

}  // namespace bodelim
