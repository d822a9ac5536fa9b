#pragma once

// Rational transfer functions in zero/pole/gain form, the Gang of Four,
// frequency inversion s -> 1/s, and state-space realizations of single loops.

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bodelim {

using Complex = std::complex<double>;

enum class Properness { kProper, kImproperAllowed };

/// A zero/pole pair removed during canonicalization.
struct Cancellation {
  Complex root;
  bool unstable = false;  // Re(root) >= 0: hides a non-decaying mode
};

/// c * prod(s - z_i) / prod(s - p_i) with real coefficients.
///
/// Values are canonical after construction: roots sorted, conjugate pairs
/// exact, common zero/pole pairs removed (and listed in cancellations()).
/// The identically zero function has gain 0 and no roots.
class RationalTF {
 public:
  /// Unity gain.
  RationalTF() = default;

  static RationalTF from_zpk(std::vector<Complex> zeros, std::vector<Complex> poles,
                             double gain, Properness properness = Properness::kProper);

  /// Coefficients in descending powers of s.
  static RationalTF from_coeffs(std::span<const double> num, std::span<const double> den,
                                Properness properness = Properness::kProper);

  static RationalTF constant(double k);

  const std::vector<Complex>& zeros() const noexcept { return zeros_; }
  const std::vector<Complex>& poles() const noexcept { return poles_; }
  double gain() const noexcept { return gain_; }
  const std::vector<Cancellation>& cancellations() const noexcept { return cancellations_; }
  bool has_unstable_cancellation() const noexcept;

  bool is_zero() const noexcept { return gain_ == 0.0; }
  bool is_improper() const noexcept { return zeros_.size() > poles_.size(); }
  /// n - m; negative for improper functions.
  int relative_degree() const noexcept {
    return static_cast<int>(poles_.size()) - static_cast<int>(zeros_.size());
  }
  /// Number of poles at the origin minus number of zeros there.
  int type() const noexcept;

  /// Monic denominator and gain-scaled numerator, descending powers.
  std::vector<double> numerator() const;
  std::vector<double> denominator() const;

  /// Evaluated in log-magnitude/phase form. Throws PoleProximityError at a pole.
  Complex operator()(Complex s) const;
  /// log|T(j omega)| without forming T, stable for high orders.
  double log_abs_at(double omega) const;

  RationalTF reciprocal(Properness properness = Properness::kImproperAllowed) const;

  friend RationalTF operator*(const RationalTF& a, const RationalTF& b);

 private:
  RationalTF(std::vector<Complex> zeros, std::vector<Complex> poles, double gain);
  void canonicalize(Properness properness);

  std::vector<Complex> zeros_;
  std::vector<Complex> poles_;
  double gain_ = 1.0;
  std::vector<Cancellation> cancellations_;
};

Complex tf_eval(const RationalTF& tf, Complex s);

/// Closed-loop maps of a unity-feedback loop with plant G and controller C:
/// t_uw = 1/(1+GC), t_yw = G/(1+GC), t_ud = C/(1+GC), t_yd = GC/(1+GC).
struct GangOfFour {
  RationalTF t_uw;
  RationalTF t_yw;
  RationalTF t_ud;
  RationalTF t_yd;
  std::vector<double> characteristic;   // den(G)den(C) + num(G)num(C)
  std::vector<Complex> closed_loop_poles;
};

GangOfFour gang_of_four(const RationalTF& plant, const RationalTF& controller);

/// Substitutes s = 1/s~: c * s~^(n-m) * prod(1 - s~ z_i) / prod(1 - s~ p_i).
RationalTF frequency_invert(const RationalTF& tf);

/// Reciprocal of the frequency-inverted plant. Proper in s~; its poles sit at
/// 1/z_i and at the origin with multiplicity n - m.
RationalTF inverse_plant(const RationalTF& plant);

struct StateSpace {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  Eigen::MatrixXd D;

  Eigen::Index states() const { return A.rows(); }
  Eigen::Index inputs() const { return B.cols(); }
  Eigen::Index outputs() const { return C.rows(); }

  /// Throws DomainError on inconsistent dimensions.
  void validate() const;
  /// C (sI - A)^-1 B + D.
  Eigen::MatrixXcd transfer(Complex s) const;
};

/// Controllable canonical form. Throws DomainError for improper input.
StateSpace realize(const RationalTF& tf);

struct PoleZeroClassification {
  std::vector<Complex> unstable_poles;
  std::vector<Complex> nonmin_zeros;
  std::vector<Complex> marginal_poles;
  std::vector<Complex> marginal_zeros;
  std::vector<Complex> stable_poles;
  std::vector<Complex> stable_zeros;
};

inline constexpr double kDefaultStabilityTol = 1e-9;

PoleZeroClassification classify(const RationalTF& tf, double tol = kDefaultStabilityTol);

/// Hurwitz test on A: every eigenvalue has Re < -tol.
bool is_mean_square_stable(const StateSpace& ss, double tol = kDefaultStabilityTol);

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& A);

enum class Injection { kControlNoise, kMeasurementNoise };

/// Closed loop driven by unit-intensity white noise through a shaping filter.
///
/// Control noise: w = u + v, y = G u, v = C y (+ dither).
/// Outputs are ordered u, v, w, y.
///
/// Measurement noise: the inverse system with d~ = y~ + e~,
/// u~ = G~^-1 y~, e~ = C~^-1 u~ (+ dither). Outputs are ordered e, y, d, u
/// and live in the inverted frequency variable.
///
/// A nonzero dither adds independent noise at the controller output with
/// PSD dither * |dither_shape|^2 (the injected noise shape when none is given).
struct LoopSystem {
  StateSpace ss;  // inputs: column 0 primary noise, column 1 dither (if any)
  std::vector<std::string> channels;
  Injection injection = Injection::kControlNoise;
  RationalTF loop_plant;
  RationalTF loop_controller;
  bool stable = false;
};

LoopSystem closed_loop_system(const RationalTF& plant, const RationalTF& controller,
                              Injection injection, const RationalTF& noise_shape,
                              double intensity = 1.0, double dither = 0.0,
                              const std::optional<RationalTF>& dither_shape = std::nullopt);

/// Unit-variance Ornstein-Uhlenbeck shaping filter sqrt(2a)/(s+a).
RationalTF ou_shape(double a);

}  // namespace bodelim
