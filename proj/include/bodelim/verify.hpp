#pragma once

// Monte-Carlo checks of the Bode-integral bounds: simulate a loop, estimate
// spectra, and hold the empirical integrals and mutual-information rates
// against the transfer-function quadratures and the analytic bounds.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bodelim/limits.hpp"
#include "bodelim/lti.hpp"
#include "bodelim/report.hpp"
#include "bodelim/spectral.hpp"
#include "bodelim/stochsim.hpp"

namespace bodelim {

struct SimParams {
  double dt = 0.0;        // 0: automatic
  double duration = 0.0;  // 0: automatic
  std::size_t samples = 2000000;  // per trial when dt and duration are automatic
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  // Controller-output noise that makes the MI rates finite: PSD dither times
  // the injected noise PSD, rolled off by a first-order low-pass at
  // dither_corner times the loop bandwidth. It raises the MI differences by
  // about corner (sqrt(1 + dither) - 1) / 2. Only the MI chains see it; the
  // other checks simulate without.
  double dither = 0.1;
  double dither_corner = 0.25;
  // Anti-aliased oversampling factor of the dithered simulations, whose MI
  // integrands reach up to 0.8 pi/dt.
  unsigned oversample = 8;
};

struct Tolerances {
  double slack_rel = 0.02;
  double pointwise = 0.05;      // median relative error of curves, mid-band
  double integral_abs = 0.1;    // empirical vs quadrature: max(abs, rel * |q|)
  double integral_rel = 0.1;
  double mi_identity = 0.05;
  double appendix = 0.10;
  double stationarity = 0.10;   // split-half mean-square ratio (flagged only when also > 4 sigma)
  double psd_floor_rel = 1e-12;
};

/// Simulation design for one loop. For measurement noise every quantity
/// lives in the inverted frequency variable of the inverse loop.
struct SimPlan {
  LoopSystem loop;
  GangOfFour gang;         // of loop.loop_plant and loop.loop_controller
  RationalTF noise_shape;  // unit-variance OU unless given
  double bandwidth = 0.0;  // largest closed-loop pole magnitude
  double dt = 0.0;
  double duration = 0.0;
  MiBand mi_band;
};

/// Default dt: pi/dt = max(20 max|eig A|, 120 bandwidth). Default duration:
/// the longest of samples * dt, 100 slowest time constants, and the span that
/// puts the first Welch bin below bandwidth / 100. Default noise: OU with
/// pole at the geometric mean of the closed-loop pole magnitudes. The loop
/// carries the dither of sim when it is positive.
/// Throws UnstableLoopError for an unstable loop.
SimPlan plan_simulation(const RationalTF& plant, const RationalTF& controller, Injection injection,
                        const std::optional<NoiseSpec>& noise, const SimParams& sim);

struct LoopEstimate {
  SimPlan plan;
  SpectralMatrix spectra;  // pooled over trials
  bool stationary = true;
  std::string note;
};

/// Runs the trials (in parallel, stream = (seed, stream_base + trial)) and
/// pools their spectra.
LoopEstimate estimate_loop(const SimPlan& plan, const SimParams& sim, const Tolerances& tol,
                           std::uint64_t stream_base = 0);

/// Clean and dithered estimates of one loop on independent streams.
struct LoopPair {
  LoopEstimate clean;
  LoopEstimate dithered;
};
LoopPair estimate_loop_pair(const RationalTF& plant, const RationalTF& controller, Injection injection,
                            const std::optional<NoiseSpec>& noise, const SimParams& sim,
                            const Tolerances& tol);

/// Split-half mean-square comparison of every channel: fails when the ratio
/// exceeds 1 + tol and the difference is beyond 4 sigma of the block scatter.
bool looks_stationary(const SignalBundle& bundle, double tol, std::string* note = nullptr);

/// Median of |estimate - exact| / exact over grid points in [lo, hi].
double median_relative_error(const std::vector<double>& omega, const std::vector<double>& estimate,
                             const std::vector<double>& exact, double lo, double hi);

/// Pointwise curves against |T| and empirical integrals against their
/// quadrature twins (control loop: T_uw, T_yw; inverse loop: T_yd, T_ud).
LimitReport check_lemma1(const RationalTF& plant, const RationalTF& controller,
                         const std::optional<NoiseSpec>& noise, const SimParams& sim,
                         const Tolerances& tol = {});
void add_lemma1_checks(const LoopEstimate& est, const RationalTF& plant,
                       const RationalTF& controller, const Tolerances& tol, LimitReport& rep);

/// Sensitivity and load chains: integral >= MI difference >= unstable-pole sum
/// on the dithered loop; full empirical integrals >= bounds on the clean loop.
LimitReport check_control_noise_chain(const RationalTF& plant, const RationalTF& controller,
                                      const std::optional<NoiseSpec>& noise, const SimParams& sim,
                                      const Tolerances& tol = {});
void add_control_chain(const LoopPair& est, const RationalTF& plant,
                       const RationalTF& controller, const Tolerances& tol, LimitReport& rep);

/// Complementary and noise chains on the inverse loop: weighted integral >=
/// MI difference >= sum of 1/z over nonminimum-phase zeros.
LimitReport check_measurement_noise_chain(const RationalTF& plant, const RationalTF& controller,
                                          const std::optional<NoiseSpec>& noise,
                                          const SimParams& sim, const Tolerances& tol = {});
void add_measurement_chain(const LoopPair& est, const RationalTF& plant,
                           const RationalTF& controller, const Tolerances& tol, LimitReport& rep);

/// phi_w = phi_u + phi_uv + phi_vu + phi_v, phi_uv = L(-jw) phi_u,
/// phi_vu = L(jw) phi_u, phi_v = |L|^2 phi_u, phi_y = |G|^2 phi_u.
LimitReport check_appendix_identities(const SignalBundle& bundle, const RationalTF& plant,
                                      const RationalTF& controller, const Tolerances& tol = {});
void add_appendix_checks(const SpectralMatrix& spectra, double bandwidth, const RationalTF& plant,
                         const RationalTF& controller, const Tolerances& tol, LimitReport& rep);

struct SystemSpec {
  std::string id;
  RationalTF plant;
  RationalTF controller;
  std::optional<NoiseSpec> noise;
};

struct SuiteConfig {
  std::vector<SystemSpec> systems;
  SimParams sim;
  Tolerances tol;
  QuadratureOptions quadrature;
  bool lemma1 = true;
  bool control_chain = true;
  bool measurement_chain = true;
  bool appendix = true;
};

/// One report per system, in order. A system whose loop is unstable or
/// ill-posed gets a skipped_precondition record and the suite moves on.
/// NumericError propagates.
std::vector<LimitReport> run_full_suite(const SuiteConfig& config);

/// Worst verdict over all reports (kHolds for an empty list).
Verdict worst(const std::vector<LimitReport>& reports);

/// Seed of system i derived from the master seed.
std::uint64_t system_seed(std::uint64_t master, std::size_t index);

}  // namespace bodelim
