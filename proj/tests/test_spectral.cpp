#include <algorithm>
#include <cmath>
#include <numeric>

#include "bodelim/error.hpp"
#include "bodelim/limits.hpp"
#include "bodelim/spectral.hpp"
#include "doctest.h"

using namespace bodelim;

namespace {

StateSpace ou_pair() {
  StateSpace ss;
  ss.A = Eigen::Vector2d(-1.0, -3.0).asDiagonal();
  ss.B = Eigen::Vector2d(std::sqrt(2.0), std::sqrt(6.0)).asDiagonal();
  ss.C = Eigen::MatrixXd::Identity(2, 2);
  ss.D = Eigen::MatrixXd::Zero(2, 2);
  return ss;
}

const SignalBundle& ou_bundle() {
  static const SignalBundle b = simulate(ou_pair(), {"x", "z"}, 0.05, 0.05 * 2e6, 3);
  return b;
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

SpectralEstimate synthetic(std::size_t n, double top, const std::function<Complex(double)>& f,
                           std::string x, std::string y) {
  SpectralEstimate e;
  e.x = std::move(x);
  e.y = std::move(y);
  for (std::size_t k = 1; k <= n; ++k) {
    const double w = top * double(k) / double(n);
    e.omega.push_back(w);
    e.values.push_back(f(w));
  }
  return e;
}

SensitivityCurve exact_curve(const RationalTF& t, double top, std::size_t n) {
  SensitivityCurve c;
  c.kind = "exact";
  for (std::size_t k = 1; k <= n; ++k) {
    const double w = top * double(k) / double(n);
    c.omega.push_back(w);
    c.value.push_back(std::exp(t.log_abs_at(w)));
  }
  c.masked.assign(n, 0);
  return c;
}

}  // namespace

TEST_CASE("OU spectrum in the two-sided rad/s convention") {
  // The default segment length leaves ~9% scatter per bin; shorter segments average more.
  WelchOptions opts;
  opts.nperseg = 4096;
  const SpectralEstimate s = welch_spectra(ou_bundle(), "x", "x", opts);
  std::vector<double> rel;
  for (std::size_t k = 0; k < s.omega.size(); ++k) {
    const double w = s.omega[k];
    CHECK(s.values[k].imag() == 0.0);
    CHECK(s.values[k].real() >= 0.0);
    // r(tau) = exp(-|tau|)  ->  2 / (1 + w^2)
    if (w >= 0.1 && w <= 10.0) rel.push_back(std::abs(s.values[k].real() / (2.0 / (1.0 + w * w)) - 1.0));
  }
  REQUIRE(rel.size() > 100);
  CHECK(median(rel) < 0.05);
  CHECK(s.omega.back() == doctest::Approx(M_PI / 0.05));
  CHECK(s.segments_used == (ou_bundle().samples() - 4096) / 2048 + 1);
}

TEST_CASE("Parseval: the spectrum integrates to the sample variance") {
  const SpectralEstimate s = welch_spectra(ou_bundle(), "z", "z");
  double acc = 0.0;
  for (std::size_t k = 0; k < s.omega.size(); ++k) {
    const double h = s.omega[1] - s.omega[0];
    acc += s.values[k].real() * (k + 1 == s.omega.size() ? 0.5 * h : h);
  }
  const auto& z = ou_bundle().channel("z");
  const double m = std::accumulate(z.begin(), z.end(), 0.0) / double(z.size());
  double var = 0.0;
  for (double v : z) var += (v - m) * (v - m);
  var /= double(z.size());
  CHECK(acc / M_PI == doctest::Approx(var).epsilon(0.03));
}

TEST_CASE("cross spectra are Hermitian and independent channels are incoherent") {
  const SpectralMatrix sm = welch_matrix(ou_bundle(), {"x", "z"});
  const SpectralEstimate& xz = sm("x", "z");
  const SpectralEstimate& zx = sm("z", "x");
  std::vector<double> coh;
  for (std::size_t k = 0; k < xz.omega.size(); ++k) {
    CHECK(xz.values[k] == std::conj(zx.values[k]));
    if (xz.omega[k] >= 0.1 && xz.omega[k] <= 10.0) {
      coh.push_back(std::norm(xz.values[k]) / (sm("x", "x").values[k].real() * sm("z", "z").values[k].real()));
    }
  }
  CHECK(median(coh) < 0.05);
  CHECK(std::accumulate(coh.begin(), coh.end(), 0.0) / double(coh.size()) < 0.05);

  const MiRateEstimate mi = mi_rate_pinsker(sm("x", "x"), sm("z", "z"), xz);
  CHECK(mi.value < 0.01);
  CHECK_FALSE(mi.unreliable);
  const MiRateEstimate back = mi_rate_pinsker(sm("z", "z"), sm("x", "x"), zx);
  CHECK(back.value == mi.value);
}

TEST_CASE("welch preconditions") {
  CHECK_THROWS_AS(welch_spectra(ou_bundle(), "x", "q"), DomainError);
  WelchOptions big;
  big.nperseg = ou_bundle().samples() / 2;
  CHECK_THROWS_AS(welch_spectra(ou_bundle(), "x", "x", big), DomainError);
  WelchOptions lap;
  lap.overlap = 0.95;
  CHECK_THROWS_AS(welch_spectra(ou_bundle(), "x", "x", lap), DomainError);
  CHECK(default_nperseg(2000000) == 32768);
  CHECK(default_nperseg(64 * 1024) == 1024);
}

TEST_CASE("Pinsker rate closed forms") {
  SUBCASE("constant coherence 1/2 on |w| <= pi") {
    const auto one = [](double) { return Complex(1.0, 0.0); };
    const auto half = [](double) { return Complex(std::sqrt(0.5), 0.0); };
    const SpectralEstimate xx = synthetic(4096, M_PI, one, "x", "x");
    const SpectralEstimate yy = synthetic(4096, M_PI, one, "y", "y");
    const SpectralEstimate xy = synthetic(4096, M_PI, half, "x", "y");
    const MiRateEstimate r = mi_rate_pinsker(xx, yy, xy);
    CHECK(std::abs(r.value - std::log(2.0) / 2.0) < 1e-6);
    CHECK(r.clipped_fraction == 0.0);
    CHECK(r.bias_correction == 0.0);
  }
  SUBCASE("identical channels hit the clip ceiling") {
    const auto f = [](double w) { return Complex(1.0 / (1.0 + w * w), 0.0); };
    const SpectralEstimate xx = synthetic(1000, 10.0, f, "x", "x");
    const MiRateEstimate r = mi_rate_pinsker(xx, xx, xx);
    CHECK(r.unreliable);
    CHECK(r.clipped_fraction == 1.0);
    CHECK(r.value == doctest::Approx(-std::log(1e-6) * 10.0 / (2.0 * M_PI)).epsilon(1e-6));
  }
  SUBCASE("band restriction") {
    const auto one = [](double) { return Complex(1.0, 0.0); };
    const auto half = [](double) { return Complex(std::sqrt(0.5), 0.0); };
    const SpectralEstimate xx = synthetic(1000, 10.0, one, "x", "x");
    const SpectralEstimate xy = synthetic(1000, 10.0, half, "x", "y");
    const MiRateEstimate r = mi_rate_pinsker(xx, xx, xy, {2.0, 6.0});
    CHECK(r.value == doctest::Approx(std::log(2.0) * 4.0 / (2.0 * M_PI)));
    CHECK(r.band_lo == 2.0);
    CHECK(r.band_hi == 6.0);
  }
  SUBCASE("grid mismatch") {
    const auto one = [](double) { return Complex(1.0, 0.0); };
    CHECK_THROWS_AS(mi_rate_pinsker(synthetic(10, 1.0, one, "x", "x"), synthetic(11, 1.0, one, "y", "y"),
                                    synthetic(10, 1.0, one, "x", "y")),
                    DomainError);
  }
}

TEST_CASE("sensitivity-like curves") {
  const SpectralEstimate s = welch_spectra(ou_bundle(), "x", "x");
  const SensitivityCurve c = sensitivity_like(s, s, "xx");
  CHECK(c.masked_count() == 0);
  for (double v : c.value) CHECK(v == 1.0);
  const IntegralResult r = bode_like_integral(c, Weight::kUnweighted);
  CHECK(r.value == 0.0);
  CHECK(bode_like_integral(c, Weight::kInvOmegaSq).value == 0.0);

  SpectralEstimate holed = s;
  for (std::size_t k = 10; k < 20; ++k) holed.values[k] = 0.0;
  const SensitivityCurve m = sensitivity_like(s, holed, "holed");
  CHECK(m.masked_count() == 10);
  CHECK(std::isnan(m.value[15]));
  CHECK(bode_like_integral(m, Weight::kUnweighted).status == IntegralStatus::kSingular);

  SpectralEstimate other = s;
  other.omega.pop_back();
  other.values.pop_back();
  CHECK_THROWS_AS(sensitivity_like(s, other, "bad"), DomainError);
}

TEST_CASE("Bode-like integral of exact curves matches the quadrature") {
  const auto tf = [](std::vector<Complex> z, std::vector<Complex> p, double k) {
    return RationalTF::from_zpk(std::move(z), std::move(p), k);
  };
  SUBCASE("sensitivity of L = 4/((s-1)(s+2))") {
    const GangOfFour g = gang_of_four(tf({}, {1.0}, 1.0), tf({}, {-2.0}, 4.0));
    const SensitivityCurve c = exact_curve(g.t_uw, 200.0, 40000);
    BodeLikeOptions opts;
    opts.bandwidth = std::sqrt(2.0);
    const IntegralResult r = bode_like_integral(c, Weight::kUnweighted, opts);
    REQUIRE(r.converged());
    CHECK(r.value == doctest::Approx(bode_quadrature(g.t_uw, Weight::kUnweighted).value).epsilon(2e-3));
  }
  SUBCASE("sensitivity of a double-integrator loop: log|S| ~ 2 log w near zero") {
    const GangOfFour g = gang_of_four(tf({5.0}, {1.0, -2.0}, -1.0),
                                      tf({-0.8, -0.4, -0.7}, {0.0, 0.0, -11.6, -7.7}, 46.5));
    const SensitivityCurve c = exact_curve(g.t_uw, 2095.0, 16384);
    BodeLikeOptions opts;
    opts.bandwidth = 17.46;
    const IntegralResult r = bode_like_integral(c, Weight::kUnweighted, opts);
    REQUIRE(r.converged());
    CHECK(r.value == doctest::Approx(1.0).epsilon(0.02));
  }
  SUBCASE("complementary sensitivity of a type-2 loop, weighted") {
    const RationalTF t = tf({2.0, -1.0}, {Complex(-0.5, std::sqrt(7.0) / 2), Complex(-0.5, -std::sqrt(7.0) / 2)}, -1.0);
    const SensitivityCurve c = exact_curve(t, 200.0, 40000);
    const IntegralResult r = bode_like_integral(c, Weight::kInvOmegaSq);
    REQUIRE(r.converged());
    CHECK(r.value == doctest::Approx(0.5).epsilon(2e-3));
  }
  SUBCASE("band coverage precondition") {
    const GangOfFour g = gang_of_four(tf({}, {1.0}, 1.0), tf({}, {-2.0}, 4.0));
    BodeLikeOptions opts;
    opts.bandwidth = 10.0;
    CHECK(bode_like_integral(exact_curve(g.t_uw, 200.0, 400), Weight::kUnweighted, opts).status ==
          IntegralStatus::kSingular);
  }
}
