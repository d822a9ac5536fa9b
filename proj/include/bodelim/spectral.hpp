#pragma once

// Welch spectra in the continuous-time two-sided convention
//   phi_xy(omega) = int r_xy(tau) exp(-j omega tau) dtau,  r_xy(tau) = E x(t+tau) y(t),
// so that var x = (1/2pi) int phi_x(omega) domega over the whole line.

#include <cstddef>
#include <string>
#include <vector>

#include "bodelim/lti.hpp"
#include "bodelim/report.hpp"
#include "bodelim/stochsim.hpp"

namespace bodelim {

struct SpectralEstimate {
  std::string x, y;           // channel names; auto-spectrum when x == y
  std::vector<double> omega;  // ascending, (0, pi/dt]
  std::vector<Complex> values;
  std::size_t nperseg = 0;
  double overlap = 0.0;
  std::string window_id = "hann";
  std::size_t segments_used = 0;

  bool is_auto() const { return x == y; }
  /// Equivalent number of independent segments (Welch's overlap correction).
  double effective_segments() const;
};

struct WelchOptions {
  std::size_t nperseg = 0;  // 0: 2^ceil(log2(length / 64))
  double overlap = 0.5;
};

std::size_t default_nperseg(std::size_t length);

/// Throws DomainError for a missing channel, nperseg > length / 4, or an
/// overlap outside [0, 0.9].
SpectralEstimate welch_spectra(const SignalBundle& bundle, const std::string& x,
                               const std::string& y, const WelchOptions& opts = {});

/// All auto- and cross-spectra of the listed channels from one pass over the data.
class SpectralMatrix {
 public:
  SpectralMatrix(std::vector<std::string> channels, std::vector<SpectralEstimate> entries);

  const std::vector<std::string>& channels() const noexcept { return channels_; }
  const std::vector<double>& omega() const { return entries_.front().omega; }
  /// Throws DomainError for an unknown channel.
  const SpectralEstimate& operator()(const std::string& x, const std::string& y) const;

 private:
  std::vector<std::string> channels_;
  std::vector<SpectralEstimate> entries_;  // row-major
};

SpectralMatrix welch_matrix(const SignalBundle& bundle, const std::vector<std::string>& channels,
                            const WelchOptions& opts = {});

/// Segment-weighted average of matrices estimated on the same grid (independent trials).
SpectralMatrix pool_spectra(const std::vector<SpectralMatrix>& parts);

struct SensitivityCurve {
  std::string kind;  // uw, yw, ud, yd or any "num/den" label
  std::vector<double> omega;
  std::vector<double> value;
  std::vector<char> masked;
  double segments = 0.0;  // effective Welch segments behind each point
  std::size_t masked_count() const;
};

/// sqrt(phi_num / phi_den). Points where phi_den falls below floor_rel times
/// the median of phi_den are masked. Throws DomainError on grid mismatch.
SensitivityCurve sensitivity_like(const SpectralEstimate& num, const SpectralEstimate& den,
                                  const std::string& kind, double floor_rel = 1e-12);

struct BodeLikeOptions {
  /// Loop bandwidth; when positive the curve must span [0.01, 100] times it.
  double bandwidth = 0.0;
};

/// (1/2pi) int log T(omega) w(omega) domega over the real line. Trapezoid on the
/// grid; c/omega^2 tail above the grid; below the grid an even fit of log T
/// (degree 2 unweighted, c2 omega^2 + c4 omega^4 over the lowest two decades
/// when weighted). A masked point or short band gives kSingular.
IntegralResult bode_like_integral(const SensitivityCurve& curve, Weight weight,
                                  const BodeLikeOptions& opts = {});

/// (1/pi) int_lo^hi log T(omega) domega by the trapezoid rule on the grid
/// points inside [lo, hi], without tails. Masked points give kSingular.
IntegralResult band_log_integral(const SensitivityCurve& curve, double lo, double hi);

struct MiRateEstimate {
  double value = 0.0;  // nats per second
  std::vector<double> omega;
  std::vector<double> coherence;  // clipped
  double band_lo = 0.0;
  double band_hi = 0.0;
  double clipped_fraction = 0.0;
  double bias_correction = 0.0;  // subtracted from the raw integral
  bool unreliable = false;       // more than 10% of the band clipped
};

struct MiBand {
  double lo = 0.0;
  double hi = HUGE_VAL;
};

/// -(1/4pi) int log(1 - gamma^2) domega with gamma^2 clipped to [0, 1 - 1e-6],
/// restricted to |omega| in the band. When the band reaches below the first
/// grid point the integrand is held constant down to zero. For Welch inputs
/// the finite-segment bias 1/(K_eff - 1) of -log(1 - gamma^2) is removed
/// (value floored at zero).
MiRateEstimate mi_rate_pinsker(const SpectralEstimate& x_auto, const SpectralEstimate& y_auto,
                               const SpectralEstimate& cross, const MiBand& band = {});

}  // namespace bodelim
