#pragma once

// Exact-discretization simulation of linear systems driven by continuous-time
// white noise: the sampled chain has exactly the second-order statistics of
// the continuous process at the sample instants, for any step size.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bodelim/lti.hpp"

namespace bodelim {

struct NoiseSpec {
  RationalTF shape;  // strictly proper, Hurwitz
  double intensity = 1.0;
};

struct DiscreteSystem {
  double dt = 0.0;
  Eigen::MatrixXd Ad;
  Eigen::MatrixXd Bd;            // zero-order hold on deterministic inputs
  Eigen::MatrixXd Qd;            // covariance of the integrated white-noise increment
  Eigen::MatrixXd noise_factor;  // F with F F^T = Qd
  Eigen::MatrixXd Cd;
  Eigen::MatrixXd Dd;
};

/// Ad = exp(A dt); Qd = int_0^dt exp(A s) B B^T exp(A^T s) ds via the Van Loan
/// block exponential. Throws NumericError when the exponential is not finite.
DiscreteSystem exact_discretize(const StateSpace& ss, double dt);

/// P solving A P + P A^T + B B^T = 0. Throws UnstableLoopError for non-Hurwitz A.
Eigen::MatrixXd stationary_covariance(const StateSpace& ss);

/// C P C^T.
Eigen::MatrixXd output_covariance(const StateSpace& ss);

/// Factor F F^T = Q for positive semidefinite Q (pivoted LDL^T, tiny negative
/// pivots clipped to zero). F scales exactly with Q.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& Q);

struct SignalBundle {
  double dt = 0.0;
  std::map<std::string, std::vector<double>> channels;
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
  std::size_t burn_in_samples = 0;

  std::size_t samples() const;
  bool has(const std::string& name) const { return channels.count(name) != 0; }
  /// Throws DomainError for an unknown channel.
  const std::vector<double>& channel(const std::string& name) const;
};

struct SimTiming {
  double slowest_time_constant = 0.0;  // 1 / min |Re lambda|
  double fastest_rate = 0.0;           // max |lambda|
  double max_dt = 0.0;                 // Nyquist limit pi / max |lambda|
  double min_duration = 0.0;           // 100 slowest time constants
};

/// Throws UnstableLoopError when A is not Hurwitz.
SimTiming sim_timing(const StateSpace& ss);

/// Samples the stationary process. Outputs are named by channel_names (one
/// per row of C). The initial state is drawn from the stationary law; the
/// first burn_in_samples (5 slowest time constants, at most half the run)
/// are kept but marked. The random stream depends only on (seed, trial).
///
/// Throws UnstableLoopError, or DomainError for nonpositive dt/duration, a
/// dt beyond the Nyquist guard, a run shorter than 100 slowest time
/// constants, or nonzero feedthrough from the white-noise inputs.
///
/// oversample > 1 steps at dt / oversample and decimates through
/// decimation_filter, which removes the content that would fold into
/// (0, pi/dt). Every channel sees the same filter, so coherences and spectral
/// ratios are unchanged.
SignalBundle simulate(const StateSpace& ss, const std::vector<std::string>& channel_names,
                      double dt, double duration, std::uint64_t seed, std::uint64_t trial = 0,
                      unsigned oversample = 1);

SignalBundle simulate(const LoopSystem& loop, double dt, double duration, std::uint64_t seed,
                      std::uint64_t trial = 0, unsigned oversample = 1);

/// Blackman-windowed sinc low-pass with cutoff pi / factor (rad per sample),
/// 32 * factor + 1 taps, unit DC gain.
std::vector<double> decimation_filter(std::size_t factor);

/// Worker count: BODE_LIMITS_THREADS when set and positive, otherwise the
/// hardware concurrency.
std::size_t worker_threads();

/// Runs job(i) for i in [0, n) on up to worker_threads() threads. Jobs must
/// write only to their own slot; the first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& job);

}  // namespace bodelim
