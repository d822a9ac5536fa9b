#include <cmath>
#include <random>

#include "bodelim/error.hpp"
#include "bodelim/lti.hpp"
#include "doctest.h"

using namespace bodelim;

namespace {

RationalTF tf(std::vector<Complex> z, std::vector<Complex> p, double k) {
  return RationalTF::from_zpk(std::move(z), std::move(p), k);
}

}  // namespace

TEST_CASE("zpk canonicalization cancels common roots") {
  const RationalTF t = tf({-1.0, 2.0}, {-1.0, -3.0, 2.0}, 4.0);
  CHECK(t.zeros().empty());
  REQUIRE(t.poles().size() == 1);
  CHECK(t.poles()[0] == Complex(-3.0));
  CHECK(t.cancellations().size() == 2);
  CHECK(t.has_unstable_cancellation());
}

TEST_CASE("coefficient and zpk constructions agree") {
  const std::vector<double> num = {1.0, -2.0};
  const std::vector<double> den = {1.0, 1.0, 2.0};
  const RationalTF a = RationalTF::from_coeffs(num, den);
  const RationalTF b = tf({2.0}, {Complex(-0.5, std::sqrt(7.0) / 2), Complex(-0.5, -std::sqrt(7.0) / 2)}, 1.0);
  for (double w : {0.01, 0.3, 1.0, 7.0, 100.0}) {
    const Complex s(0.0, w);
    CHECK(std::abs(a(s) - b(s)) < 1e-12 * std::abs(b(s)) + 1e-15);
    CHECK(a.log_abs_at(w) == doctest::Approx(std::log(std::abs(b(s)))));
  }
}

TEST_CASE("improper transfer functions are rejected unless allowed") {
  CHECK_THROWS_AS(tf({1.0, 2.0}, {-1.0}, 1.0), DomainError);
  CHECK_NOTHROW(RationalTF::from_zpk({1.0, 2.0}, {-1.0}, 1.0, Properness::kImproperAllowed));
}

TEST_CASE("evaluation at a pole throws") {
  const RationalTF t = tf({}, {Complex(0.0, 1.0), Complex(0.0, -1.0)}, 1.0);
  CHECK_THROWS_AS(t(Complex(0.0, 1.0)), PoleProximityError);
}

TEST_CASE("type and relative degree") {
  const RationalTF c = tf({-0.25}, {0.0, 0.0}, 1.0);
  CHECK(c.type() == 2);
  CHECK(c.relative_degree() == 1);
}

TEST_CASE("gang of four satisfies the algebraic identities") {
  const RationalTF g = tf({5.0}, {1.0, -2.0}, -1.0);
  const RationalTF c = tf({-0.8, -0.4, -0.7}, {0.0, 0.0, -11.6, -7.7}, 46.5);
  const GangOfFour gof = gang_of_four(g, c);
  for (double w : {0.05, 0.5, 2.0, 20.0}) {
    const Complex s(0.0, w);
    const Complex l = g(s) * c(s);
    CHECK(std::abs(gof.t_uw(s) - 1.0 / (1.0 + l)) < 1e-9);
    CHECK(std::abs(gof.t_yw(s) - g(s) / (1.0 + l)) < 1e-9);
    CHECK(std::abs(gof.t_ud(s) - c(s) / (1.0 + l)) < 1e-9 * std::abs(c(s)));
    CHECK(std::abs(gof.t_uw(s) + gof.t_yd(s) - 1.0) < 1e-9);
  }
  for (const Complex& p : gof.closed_loop_poles) CHECK(p.real() < 0.0);
}

TEST_CASE("algebraic loop singularity is detected") {
  CHECK_THROWS_AS(gang_of_four(RationalTF::constant(1.0), RationalTF::constant(-1.0)), DomainError);
}

TEST_CASE("frequency inversion") {
  const RationalTF g = tf({5.0}, {1.0, -2.0}, -1.0);
  const RationalTF gi = frequency_invert(g);
  for (double w : {0.1, 1.0, 3.0}) {
    const Complex st(0.0, w);
    CHECK(std::abs(gi(st) - g(1.0 / st)) < 1e-12);
  }
  // poles of G~^-1 are 1/z plus n-m at the origin
  const RationalTF inv = inverse_plant(g);
  REQUIRE(inv.poles().size() == 2);
  CHECK(std::abs(inv.poles()[0]) < 1e-14);
  CHECK(inv.poles()[1].real() == doctest::Approx(0.2));
  CHECK_FALSE(inv.is_improper());
}

TEST_CASE("frequency inversion of an integrator-type controller") {
  const RationalTF c = tf({-1.0}, {0.0, 0.0}, 0.5);
  const RationalTF ci = inverse_plant(c);
  CHECK(ci.relative_degree() == 2);
  for (double w : {0.2, 2.0}) {
    const Complex st(0.0, w);
    CHECK(std::abs(ci(st) - 1.0 / c(1.0 / st)) < 1e-12);
  }
}

TEST_CASE("realization reproduces the transfer function") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Complex> p, z;
    for (int i = 0; i < 3; ++i) p.emplace_back(-std::abs(u(rng)) - 0.1, 0.0);
    for (int i = 0; i < trial % 4; ++i) z.emplace_back(u(rng), 0.0);
    const RationalTF t = tf(z, p, u(rng));
    const StateSpace ss = realize(t);
    for (double w : {0.1, 1.0, 10.0}) {
      const Complex s(0.0, w);
      CHECK(std::abs(ss.transfer(s)(0, 0) - t(s)) < 1e-10 * (1.0 + std::abs(t(s))));
    }
  }
}

TEST_CASE("classify") {
  const RationalTF t = tf({2.0, 0.0, -1.0}, {1.0, Complex(0.0, 1.0), Complex(0.0, -1.0), -3.0}, 1.0);
  const auto c = classify(t);
  CHECK(c.unstable_poles.size() == 1);
  CHECK(c.marginal_poles.size() == 2);
  CHECK(c.stable_poles.size() == 1);
  CHECK(c.nonmin_zeros.size() == 1);
  CHECK(c.marginal_zeros.size() == 1);
  CHECK(c.stable_zeros.size() == 1);
}

TEST_CASE("closed-loop system for control noise") {
  const RationalTF g = tf({}, {-1.0}, 1.0);
  const RationalTF c = RationalTF::constant(1.0);
  const LoopSystem sys = closed_loop_system(g, c, Injection::kControlNoise, ou_shape(1.0));
  CHECK(sys.ss.states() == 2);
  CHECK(sys.stable);
  const LoopSystem dith = closed_loop_system(g, c, Injection::kControlNoise, ou_shape(1.0), 1.0, 1e-4);
  CHECK(dith.ss.states() == 3);
  CHECK(dith.ss.inputs() == 2);

  // the shaped input to u map is F(s) / (1 + L(s))
  const GangOfFour gof = gang_of_four(g, c);
  const RationalTF f = ou_shape(1.0);
  for (double w : {0.3, 3.0}) {
    const Complex s(0.0, w);
    const auto h = sys.ss.transfer(s);
    CHECK(std::abs(h(0, 0) - f(s) * gof.t_uw(s)) < 1e-12);
    CHECK(std::abs(h(3, 0) - f(s) * gof.t_yw(s)) < 1e-12);
    CHECK(std::abs(h(2, 0) - f(s)) < 1e-12);
    CHECK(std::abs(h(0, 0) + h(1, 0) - h(2, 0)) < 1e-12);
  }

  // dither enters v with its own shape: v = C y + n, u = w - v
  const RationalTF lp = tf({}, {-2.0}, 2.0);
  const LoopSystem shaped =
      closed_loop_system(g, c, Injection::kControlNoise, ou_shape(1.0), 1.0, 0.25, ou_shape(1.0) * lp);
  CHECK(shaped.ss.states() == 4);
  for (double w : {0.3, 3.0}) {
    const Complex s(0.0, w);
    const auto h = shaped.ss.transfer(s);
    const Complex n = 0.5 * f(s) * lp(s);
    CHECK(std::abs(h(1, 1) - n * gof.t_uw(s)) < 1e-12);
    CHECK(std::abs(h(0, 1) + n * gof.t_uw(s)) < 1e-12);
  }
  CHECK_THROWS_AS(closed_loop_system(g, c, Injection::kControlNoise, ou_shape(1.0), 1.0, 0.1,
                                     RationalTF::constant(1.0)),
                  DomainError);
}

TEST_CASE("closed-loop system for measurement noise lives in inverted frequency") {
  const RationalTF g = tf({2.0}, {0.0}, -1.0);
  const RationalTF c = tf({-1.0}, {0.0}, 0.5);
  const RationalTF f = ou_shape(1.0);
  const LoopSystem sys = closed_loop_system(g, c, Injection::kMeasurementNoise, f);
  CHECK(sys.stable);
  const GangOfFour gof = gang_of_four(g, c);
  for (double wt : {0.2, 1.0, 5.0}) {
    const Complex st(0.0, wt);
    const auto h = sys.ss.transfer(st);
    // |T_y~d~(j w~)| = |T_yd(j / w~)|
    CHECK(std::abs(h(1, 0) / f(st)) == doctest::Approx(std::abs(gof.t_yd(Complex(0.0, 1.0 / wt)))));
    CHECK(std::abs(h(3, 0) / f(st)) == doctest::Approx(std::abs(gof.t_ud(Complex(0.0, 1.0 / wt)))));
  }
}

TEST_CASE("unstable closed loop is flagged") {
  const RationalTF g = tf({}, {1.0}, 1.0);
  const LoopSystem sys = closed_loop_system(g, RationalTF::constant(0.5), Injection::kControlNoise, ou_shape(1.0));
  CHECK_FALSE(sys.stable);
}
