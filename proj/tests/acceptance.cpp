// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "bodelim/config.hpp"
#include "bodelim/error.hpp"
#include "bodelim/io.hpp"
#include "bodelim/limits.hpp"
#include "bodelim/spectral.hpp"
#include "bodelim/verify.hpp"

using namespace bodelim;

namespace {

RationalTF tf(std::vector<Complex> z, std::vector<Complex> p, double k) {
  return RationalTF::from_zpk(std::move(z), std::move(p), k);
}

bool stable_loop(const RationalTF& g, const RationalTF& c) {
  for (const Complex& p : gang_of_four(g, c).closed_loop_poles)
    if (p.real() >= -1e-6) return false;
  return true;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int n, const std::string& title, double limit_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = s < limit_seconds;
  const bool ok = o.pass && in_time;
  if (!ok) ++failures;
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << n << ": " << title << " (" << o.detail << "; "
            << std::setprecision(3) << s << " s of " << limit_seconds << " s)" << std::endl;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

std::string failed_items(const LimitReport& rep) {
  std::string out;
  for (const auto& r : rep.inequalities)
    if (r.verdict == Verdict::kViolated) out += " " + rep.system_id + "/" + r.id;
  for (const auto& c : rep.checks)
    if (!c.skipped && !c.passed) out += " " + rep.system_id + "/" + c.id + "=" + fmt(c.value);
  return out;
}

const std::string kBundled = std::string(BODELIM_SOURCE_DIR) + "/configs/bundled.json";

std::string run_bundled(const std::string& dir, int* code) {
  RunConfig cfg = parse_config(kBundled);
  cfg.output.directory = dir;
  cfg.output.formats = {"json"};
  std::filesystem::remove_all(dir);
  std::ostringstream log;
  *code = dispatch(Command::kVerify, cfg, log);
  return read_file(dir + "/report.json");
}

}  // namespace

int main() {
  criterion(1, "analytic bounds", 1.0, [] {
    const BoundReport a = analytic_bounds(tf({2.0}, {1.0, -3.0}, 1.0));
    const RationalTF pair = RationalTF::from_coeffs(std::vector<double>{1.0}, std::vector<double>{1.0, -2.0, 5.0});
    const BoundReport b = analytic_bounds(pair);
    Complex sum = 0.0;
    for (const Complex& p : classify(pair).unstable_poles) sum += p;
    const bool ok = a.sens_bound == 1.0 && a.comp_bound == 0.5 && b.sens_bound == 2.0 && std::abs(sum.imag()) < 1e-12;
    return Outcome{ok, "sens " + fmt(a.sens_bound) + ", comp " + fmt(a.comp_bound) + ", pair sens " +
                           fmt(b.sens_bound) + ", imaginary residue " + fmt(std::abs(sum.imag()))};
  });

  criterion(2, "quadrature vs classical oracle on randomized loops", 30.0, [] {
    double worst_s = 0.0, worst_c = 0.0;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> pole(-4.0, 1.5), gain(0.5, 30.0), zero(-5.0, -0.2);
    for (int tested = 0; tested < 10;) {
      const RationalTF g = tf({}, {pole(rng), pole(rng)}, 1.0);
      const RationalTF c = tf({zero(rng)}, {-20.0 * std::abs(pole(rng)) - 5.0}, gain(rng) * 10.0);
      if (!stable_loop(g, c)) continue;
      ++tested;
      double bound = 0.0;
      for (const Complex& p : classify(g * c).unstable_poles) bound += p.real();
      const IntegralResult q = bode_quadrature(gang_of_four(g, c).t_uw, Weight::kUnweighted);
      worst_s = std::max(worst_s, std::abs(q.value - bound) / (1.0 + std::abs(bound)));
    }
    std::uniform_real_distribution<double> z(1.0, 10.0), a(0.05, 2.0), k(0.01, 2.0);
    for (int tested = 0; tested < 10;) {
      const RationalTF g = tf({z(rng)}, {0.0, -a(rng) - 0.5}, -1.0);
      const RationalTF c = tf({-a(rng) * 0.2}, {0.0}, k(rng));
      if (!stable_loop(g, c)) continue;
      ++tested;
      double bound = 0.0;
      for (const Complex& zz : classify(g * c).nonmin_zeros) bound += (1.0 / zz).real();
      const IntegralResult q = bode_quadrature(gang_of_four(g, c).t_yd, Weight::kInvOmegaSq);
      worst_c = std::max(worst_c, std::abs(q.value - bound) / (1.0 + std::abs(bound)));
    }
    return Outcome{worst_s <= 1e-3 && worst_c <= 1e-3,
                   "worst scaled error: sensitivity " + fmt(worst_s) + ", complementary " + fmt(worst_c)};
  });

  criterion(3, "all-pass null", 1.0, [] {
    const RationalTF g = tf({}, {1.0}, 2.0);
    const RationalTF c = RationalTF::constant(1.0);
    const double q = bode_quadrature(gang_of_four(g, c).t_uw, Weight::kUnweighted).value;
    const LimitReport rep = corollary3_report(g, c);
    const InequalityRecord& s = rep.inequalities.front();
    const bool ok = std::abs(q) < 1e-6 && s.verdict == Verdict::kSkippedPrecondition &&
                    rep.worst() != Verdict::kViolated;
    return Outcome{ok, "integral " + fmt(q) + ", sensitivity record " + std::string(to_string(s.verdict))};
  });

  criterion(4, "Pinsker formula", 1.0, [] {
    const auto grid = [](std::string x, std::string y, Complex v) {
      SpectralEstimate e;
      e.x = std::move(x);
      e.y = std::move(y);
      for (int k = 1; k <= 4096; ++k) {
        e.omega.push_back(M_PI * k / 4096.0);
        e.values.push_back(v);
      }
      return e;
    };
    const MiRateEstimate r =
        mi_rate_pinsker(grid("x", "x", 1.0), grid("y", "y", 1.0), grid("x", "y", std::sqrt(0.5)));
    const double err = std::abs(r.value - std::log(2.0) / 2.0);
    return Outcome{err < 1e-6, "I = " + fmt(r.value) + ", error " + fmt(err)};
  });

  const RationalTF g1 = tf({}, {-1.0}, 1.0);
  const RationalTF c1 = RationalTF::constant(1.0);
  SimParams sim;
  sim.seed = 20240601;
  sim.samples = 2000000;
  sim.dither = 0.0;

  criterion(5, "PSD-ratio curves and integrals", 120.0, [&] {
    const LimitReport rep = check_lemma1(g1, c1, NoiseSpec{ou_shape(2.0), 1.0}, sim);
    int pointwise = 0, integrals = 0;
    std::string worst;
    for (const auto& c : rep.checks) {
      if (c.id.rfind("lemma1_pointwise_", 0) == 0 && c.passed) ++pointwise;
      if (c.id.rfind("lemma1_integral_", 0) == 0 && c.passed) ++integrals;
      if (!c.skipped) worst += " " + c.id.substr(7) + "=" + fmt(c.value);
    }
    const std::string failed = failed_items(rep);
    return Outcome{failed.empty() && pointwise == 4 && integrals >= 1,
                   std::to_string(pointwise) + "/4 curves, " + std::to_string(integrals) +
                       " convergent integrals;" + worst + (failed.empty() ? "" : "; failed:" + failed)};
  });

  criterion(7, "cross-spectral identities", 120.0, [&] {
    const SimPlan plan = plan_simulation(g1, c1, Injection::kControlNoise, NoiseSpec{ou_shape(2.0), 1.0}, sim);
    const SignalBundle b = simulate(plan.loop, plan.dt, plan.duration, sim.seed);
    const LimitReport rep = check_appendix_identities(b, g1, c1);
    std::string detail = std::to_string(b.samples()) + " samples;";
    int passed = 0;
    for (const auto& c : rep.checks) {
      passed += c.passed;
      detail += " " + c.id.substr(9) + "=" + fmt(c.value);
    }
    return Outcome{passed == 5, detail};
  });

  const std::string tmp = std::filesystem::temp_directory_path().string();
  std::string first;
  criterion(6, "inequality chains on the bundled systems", 300.0, [&] {
    int code = -1;
    first = run_bundled(tmp + "/bodelim_acceptance_a", &code);
    const std::vector<LimitReport> reps = reports_from_json(Json::parse(first).at("reports"));
    int holds = 0, equality = 0, skipped = 0, identities = 0;
    std::string failed;
    for (const auto& rep : reps) {
      failed += failed_items(rep);
      for (const auto& r : rep.inequalities) {
        holds += r.verdict == Verdict::kHolds;
        equality += r.verdict == Verdict::kHoldsWithEquality;
        skipped += r.verdict == Verdict::kSkippedDivergent || r.verdict == Verdict::kSkippedPrecondition;
      }
      for (const auto& c : rep.checks)
        if (c.id.rfind("mi_identity", 0) == 0 && c.passed) ++identities;
    }
    const bool ok = code == kExitHolds && failed.empty() && reps.size() == 4 && identities >= 2;
    return Outcome{ok, std::to_string(holds) + " holds, " + std::to_string(equality) + " with equality, " +
                           std::to_string(skipped) + " skipped, " + std::to_string(identities) +
                           " MI identities within 0.05, exit " + std::to_string(code) +
                           (failed.empty() ? "" : "; failed:" + failed)};
  });

  criterion(8, "deterministic reports", 300.0, [&] {
    int code = -1;
    const std::string second = run_bundled(tmp + "/bodelim_acceptance_b", &code);
    return Outcome{!first.empty() && first == second,
                   std::to_string(first.size()) + " bytes, " + (first == second ? "identical" : "different")};
  });

  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
  return failures == 0 ? 0 : 1;
}
