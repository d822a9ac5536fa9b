#include <cmath>
#include <random>

#include "bodelim/error.hpp"
#include "bodelim/verify.hpp"
#include "doctest.h"

using namespace bodelim;

namespace {

RationalTF tf(std::vector<Complex> z, std::vector<Complex> p, double k) {
  return RationalTF::from_zpk(std::move(z), std::move(p), k);
}

const CheckRecord& find_check(const LimitReport& rep, const std::string& id) {
  for (const auto& c : rep.checks)
    if (c.id == id) return c;
  FAIL("missing check " << id);
  throw;
}

const InequalityRecord& find_ineq(const LimitReport& rep, const std::string& id) {
  for (const auto& r : rep.inequalities)
    if (r.id == id) return r;
  FAIL("missing inequality " << id);
  throw;
}

bool no_failures(const LimitReport& rep) {
  for (const auto& c : rep.checks)
    if (!c.skipped && !c.passed) return false;
  for (const auto& r : rep.inequalities)
    if (r.verdict == Verdict::kViolated) return false;
  return true;
}

SimParams params(std::uint64_t seed) {
  SimParams sim;
  sim.seed = seed;
  sim.samples = 500000;
  return sim;
}

SimParams undithered(std::uint64_t seed) {
  SimParams sim = params(seed);
  sim.dither = 0.0;
  return sim;
}

}  // namespace

TEST_CASE("estimated sensitivity curves on the first-order loop") {
  const RationalTF G = tf({}, {-1.0}, 1.0);
  const RationalTF C = RationalTF::constant(1.0);
  const SimParams sim = params(11);
  const Tolerances tol;

  SUBCASE("curves match |(jw+1)/(jw+2)| and |1/(jw+2)|") {
    const LoopEstimate est =
        estimate_loop(plan_simulation(G, C, Injection::kControlNoise, std::nullopt, sim), sim, tol);
    const SensitivityCurve uw = sensitivity_like(est.spectra("u", "u"), est.spectra("w", "w"), "uw");
    const SensitivityCurve yw = sensitivity_like(est.spectra("y", "y"), est.spectra("w", "w"), "yw");
    std::vector<double> a, b;
    for (double w : uw.omega) {
      a.push_back(std::abs(Complex(1.0, w) / Complex(2.0, w)));
      b.push_back(std::abs(1.0 / Complex(2.0, w)));
    }
    CHECK(median_relative_error(uw.omega, uw.value, a, 0.2, 20.0) < 0.05);
    CHECK(median_relative_error(yw.omega, yw.value, b, 0.2, 20.0) < 0.05);
  }

  SUBCASE("report") {
    const LimitReport rep = check_lemma1(G, C, std::nullopt, sim);
    CHECK(find_check(rep, "lemma1_pointwise_uw").passed);
    CHECK(find_check(rep, "lemma1_pointwise_yw").passed);
    CHECK(no_failures(rep));
  }
}

TEST_CASE("open loop: u equals w") {
  const RationalTF G = tf({}, {-1.0}, 1.0);
  const RationalTF C = RationalTF::constant(0.0);
  const SimParams sim = undithered(5);
  const LimitReport rep = check_lemma1(G, C, std::nullopt, sim);
  const CheckRecord& uw = find_check(rep, "lemma1_pointwise_uw");
  CHECK(uw.passed);
  CHECK(uw.value < 1e-9);
  // C = 0 has no inverse loop
  CHECK(find_check(rep, "lemma1_inverse_loop").skipped);

  const SimPlan plan = plan_simulation(G, C, Injection::kControlNoise, std::nullopt, sim);
  const SignalBundle b = simulate(plan.loop, plan.dt, plan.duration, 5);
  const LimitReport app = check_appendix_identities(b, G, C);
  CHECK(find_check(app, "appendix_w_decomposition").value < 1e-9);
  CHECK(no_failures(app));
}

TEST_CASE("cross-spectral identities") {
  const SimParams sim = undithered(3);
  SUBCASE("first-order loop") {
    const RationalTF G = tf({}, {-1.0}, 1.0);
    const RationalTF C = RationalTF::constant(1.0);
    const SimPlan plan = plan_simulation(G, C, Injection::kControlNoise, std::nullopt, sim);
    const LimitReport rep = check_appendix_identities(simulate(plan.loop, plan.dt, plan.duration, 3), G, C);
    REQUIRE(rep.checks.size() == 5);
    for (const auto& c : rep.checks) CHECK_MESSAGE(c.passed, c.id << " " << c.value);
  }
  SUBCASE("random third-order loop") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> pole(0.5, 3.0), gain(0.2, 1.0);
    const RationalTF G = tf({}, {-pole(rng), -pole(rng), -pole(rng)}, 1.0);
    const RationalTF C = RationalTF::constant(gain(rng));
    const SimPlan plan = plan_simulation(G, C, Injection::kControlNoise, std::nullopt, sim);
    const LimitReport rep = check_appendix_identities(simulate(plan.loop, plan.dt, plan.duration, 3), G, C);
    for (const auto& c : rep.checks) CHECK_MESSAGE(c.passed, c.id << " " << c.value);
  }
}

TEST_CASE("noise intensity does not change the verdicts") {
  const RationalTF G = tf({}, {-1.0}, 1.0);
  const RationalTF C = RationalTF::constant(1.0);
  const SimParams sim = params(9);
  const LimitReport a = check_lemma1(G, C, NoiseSpec{ou_shape(2.0), 1.0}, sim);
  const LimitReport b = check_lemma1(G, C, NoiseSpec{ou_shape(2.0), 7.3}, sim);
  REQUIRE(a.checks.size() == b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    CHECK(a.checks[i].passed == b.checks[i].passed);
    CHECK(a.checks[i].skipped == b.checks[i].skipped);
    CHECK(a.checks[i].value == doctest::Approx(b.checks[i].value).epsilon(1e-9));
  }
}

TEST_CASE("control chain on an unstable plant") {
  // G = 1/(s-1), C = 4/(s+2): one unstable pole, relative degree 2
  const RationalTF G = tf({}, {1.0}, 1.0);
  const RationalTF C = tf({}, {-2.0}, 4.0);
  const LimitReport rep = check_control_noise_chain(G, C, std::nullopt, params(7));
  CHECK(no_failures(rep));
  CHECK(find_check(rep, "mi_identity_uv_yv").passed);
  const InequalityRecord& s = find_ineq(rep, "sensitivity_empirical_ge_bound");
  CHECK(s.compared_bound.value == doctest::Approx(1.0));
  CHECK(s.verdict == Verdict::kHoldsWithEquality);
  const InequalityRecord& m = find_ineq(rep, "sensitivity_mi_ge_poles");
  CHECK(m.verdict != Verdict::kViolated);
}

TEST_CASE("measurement chain on a nonminimum-phase plant") {
  // G = -(s-2)/s, C = 0.5(s+1)/s: zero at 2, weighted bound 1/2
  const RationalTF G = tf({2.0}, {0.0}, -1.0);
  const RationalTF C = tf({-1.0}, {0.0}, 0.5);
  const LimitReport rep = check_measurement_noise_chain(G, C, std::nullopt, params(7));
  CHECK(no_failures(rep));
  const InequalityRecord& c = find_ineq(rep, "complementary_empirical_ge_bound");
  CHECK(c.compared_bound.value == doctest::Approx(0.5));
  CHECK(c.verdict == Verdict::kHoldsWithEquality);
}

TEST_CASE("suite") {
  SUBCASE("empty") {
    SuiteConfig cfg;
    const auto reps = run_full_suite(cfg);
    CHECK(reps.empty());
    CHECK(worst(reps) == Verdict::kHolds);
  }

  SuiteConfig cfg;
  cfg.sim = params(21);
  cfg.control_chain = false;
  cfg.measurement_chain = false;
  cfg.systems.push_back({"unstable", tf({}, {1.0}, 1.0), RationalTF::constant(0.5), std::nullopt});
  cfg.systems.push_back({"stable", tf({}, {-1.0}, 1.0), RationalTF::constant(1.0), std::nullopt});

  SUBCASE("an unstable loop is skipped and the rest still runs") {
    const auto reps = run_full_suite(cfg);
    REQUIRE(reps.size() == 2);
    CHECK(reps[0].system_id == "unstable");
    CHECK(reps[0].worst() == Verdict::kSkippedPrecondition);
    CHECK(find_check(reps[1], "lemma1_pointwise_uw").passed);
    CHECK(no_failures(reps[1]));
  }

  SUBCASE("deterministic") {
    cfg.systems.erase(cfg.systems.begin());
    const auto a = run_full_suite(cfg);
    const auto b = run_full_suite(cfg);
    REQUIRE(a[0].checks.size() == b[0].checks.size());
    for (std::size_t i = 0; i < a[0].checks.size(); ++i) CHECK(a[0].checks[i].value == b[0].checks[i].value);
  }
}

TEST_CASE("system seeds are distinct") {
  CHECK(system_seed(1, 0) != system_seed(1, 1));
  CHECK(system_seed(1, 0) != system_seed(2, 0));
  CHECK(system_seed(1, 3) == system_seed(1, 3));
}

TEST_CASE("stationarity test flags a variance ramp") {
  SignalBundle b;
  b.dt = 1.0;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  std::vector<double> flat(100000), ramp(100000);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    flat[i] = n(rng);
    ramp[i] = n(rng) * (1.0 + double(i) / double(ramp.size()));
  }
  b.channels["x"] = flat;
  CHECK(looks_stationary(b, 0.1));
  b.channels["x"] = ramp;
  std::string note;
  CHECK_FALSE(looks_stationary(b, 0.1, &note));
  CHECK_FALSE(note.empty());
}

TEST_CASE("median relative error") {
  const std::vector<double> w{1, 2, 3, 4, 5};
  const std::vector<double> est{1.1, 2, 3, 4, 100};
  const std::vector<double> ex{1, 2, 3, 4, 5};
  CHECK(median_relative_error(w, est, ex, 1, 4) == doctest::Approx(0.0));
  CHECK(std::isnan(median_relative_error(w, est, ex, 10, 20)));
}
