#include "bodelim/lti.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "bodelim/error.hpp"
#include "bodelim/polynomial.hpp"

namespace bodelim {

namespace {

constexpr double kCancelTol = 1e-8;
constexpr double kOriginTol = 1e-12;

bool at_origin(Complex z) { return std::abs(z) <= kOriginTol; }

}  // namespace

RationalTF::RationalTF(std::vector<Complex> zeros, std::vector<Complex> poles, double gain)
    : zeros_(std::move(zeros)), poles_(std::move(poles)), gain_(gain) {}

RationalTF RationalTF::from_zpk(std::vector<Complex> zeros, std::vector<Complex> poles,
                                double gain, Properness properness) {
  RationalTF tf(std::move(zeros), std::move(poles), gain);
  tf.canonicalize(properness);
  return tf;
}

RationalTF RationalTF::from_coeffs(std::span<const double> num, std::span<const double> den,
                                   Properness properness) {
  if (num.empty() || den.empty()) throw DomainError("tf_from_coeffs: empty coefficient list");
  const std::vector<double> d = poly::trim(den);
  if (d.empty()) throw DomainError("tf_from_coeffs: zero denominator");
  if (den.front() == 0.0) throw DomainError("tf_from_coeffs: leading denominator coefficient is zero");
  const std::vector<double> n = poly::trim(num);
  if (n.empty()) return RationalTF({}, {}, 0.0);
  RationalTF tf(poly::roots(n), poly::roots(d), n.front() / d.front());
  tf.canonicalize(properness);
  return tf;
}

RationalTF RationalTF::constant(double k) { return RationalTF({}, {}, k); }

void RationalTF::canonicalize(Properness properness) {
  if (!std::isfinite(gain_)) throw DomainError("transfer function gain is not finite");
  for (const auto* set : {&zeros_, &poles_}) {
    for (Complex z : *set) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw DomainError("transfer function root is not finite");
    }
  }
  if (gain_ == 0.0) {
    zeros_.clear();
    poles_.clear();
    return;
  }
  poly::make_conjugate_symmetric(zeros_, 1e-12, 1e-9);
  poly::make_conjugate_symmetric(poles_, 1e-12, 1e-9);

  std::vector<Complex> kept_zeros;
  std::vector<bool> pole_used(poles_.size(), false);
  for (const Complex& z : zeros_) {
    std::size_t match = poles_.size();
    double best = kCancelTol * std::max(1.0, std::abs(z));
    for (std::size_t j = 0; j < poles_.size(); ++j) {
      if (pole_used[j]) continue;
      const double d = std::abs(poles_[j] - z);
      if (d <= best) {
        best = d;
        match = j;
      }
    }
    if (match == poles_.size()) {
      kept_zeros.push_back(z);
    } else {
      pole_used[match] = true;
      cancellations_.push_back({poles_[match], poles_[match].real() >= 0.0});
    }
  }
  std::vector<Complex> kept_poles;
  for (std::size_t j = 0; j < poles_.size(); ++j) {
    if (!pole_used[j]) kept_poles.push_back(poles_[j]);
  }
  zeros_ = std::move(kept_zeros);
  poles_ = std::move(kept_poles);
  poly::sort_roots(zeros_);
  poly::sort_roots(poles_);

  if (properness == Properness::kProper && zeros_.size() > poles_.size()) {
    std::ostringstream os;
    os << "improper transfer function: " << zeros_.size() << " zeros, " << poles_.size()
       << " poles";
    throw DomainError(os.str());
  }
}

bool RationalTF::has_unstable_cancellation() const noexcept {
  return std::any_of(cancellations_.begin(), cancellations_.end(),
                     [](const Cancellation& c) { return c.unstable; });
}

int RationalTF::type() const noexcept {
  const auto p = std::count_if(poles_.begin(), poles_.end(), at_origin);
  const auto z = std::count_if(zeros_.begin(), zeros_.end(), at_origin);
  return static_cast<int>(p - z);
}

std::vector<double> RationalTF::numerator() const {
  if (is_zero()) return {0.0};
  return poly::scale(poly::from_roots(zeros_), gain_);
}

std::vector<double> RationalTF::denominator() const { return poly::from_roots(poles_); }

Complex RationalTF::operator()(Complex s) const {
  if (is_zero()) return 0.0;
  for (const Complex& p : poles_) {
    const double dist = std::abs(s - p);
    if (dist <= 1e-13 * std::max(1.0, std::abs(p))) {
      std::ostringstream os;
      os << "evaluation at pole " << p << " (distance " << dist << ")";
      throw PoleProximityError(os.str(), dist);
    }
  }
  Complex acc = std::log(Complex(gain_, 0.0));
  for (const Complex& z : zeros_) acc += std::log(s - z);
  for (const Complex& p : poles_) acc -= std::log(s - p);
  return std::exp(acc);
}

double RationalTF::log_abs_at(double omega) const {
  double acc = std::log(std::abs(gain_));
  for (const Complex& z : zeros_) acc += std::log(std::hypot(z.real(), omega - z.imag()));
  for (const Complex& p : poles_) acc -= std::log(std::hypot(p.real(), omega - p.imag()));
  return acc;
}

RationalTF RationalTF::reciprocal(Properness properness) const {
  if (is_zero()) throw DomainError("reciprocal of the zero transfer function");
  return from_zpk(poles_, zeros_, 1.0 / gain_, properness);
}

RationalTF operator*(const RationalTF& a, const RationalTF& b) {
  if (a.is_zero() || b.is_zero()) return RationalTF::constant(0.0);
  std::vector<Complex> z = a.zeros_;
  z.insert(z.end(), b.zeros_.begin(), b.zeros_.end());
  std::vector<Complex> p = a.poles_;
  p.insert(p.end(), b.poles_.begin(), b.poles_.end());
  return RationalTF::from_zpk(std::move(z), std::move(p), a.gain_ * b.gain_,
                              Properness::kImproperAllowed);
}

Complex tf_eval(const RationalTF& tf, Complex s) { return tf(s); }

GangOfFour gang_of_four(const RationalTF& plant, const RationalTF& controller) {
  const std::vector<double> dg = plant.denominator();
  const std::vector<double> dc = controller.denominator();
  const std::vector<double> ng = poly::from_roots(plant.zeros());
  const std::vector<double> nc = poly::from_roots(controller.zeros());
  const double kg = plant.gain();
  const double kc = controller.gain();

  GangOfFour g;
  const std::vector<double> open = poly::multiply(dg, dc);
  g.characteristic = poly::add(open, poly::scale(poly::multiply(ng, nc), kg * kc));
  const std::vector<double> chr = poly::trim(g.characteristic);
  if (chr.empty()) throw DomainError("algebraic loop singularity: 1 + GC is identically zero");
  const double scale = std::max(1.0, std::abs(kg * kc));
  if (chr.size() < open.size() || std::abs(chr.front()) <= 1e-12 * scale) {
    throw DomainError("algebraic loop singularity: 1 + G(inf)C(inf) = 0");
  }
  const double lead = chr.front();

  std::vector<Complex> pg(plant.poles());
  std::vector<Complex> pc(controller.poles());
  if (kg == 0.0 || kc == 0.0) {
    g.closed_loop_poles = pg;
    g.closed_loop_poles.insert(g.closed_loop_poles.end(), pc.begin(), pc.end());
    poly::sort_roots(g.closed_loop_poles);
  } else {
    g.closed_loop_poles = poly::roots(chr);
  }

  auto join = [](std::vector<Complex> a, const std::vector<Complex>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  const auto& cl = g.closed_loop_poles;
  g.t_uw = RationalTF::from_zpk(join(pg, pc), cl, 1.0 / lead);
  g.t_yw = kg == 0.0 ? RationalTF::constant(0.0)
                     : RationalTF::from_zpk(join(plant.zeros(), pc), cl, kg / lead);
  g.t_ud = kc == 0.0 ? RationalTF::constant(0.0)
                     : RationalTF::from_zpk(join(controller.zeros(), pg), cl, kc / lead);
  g.t_yd = kg * kc == 0.0
               ? RationalTF::constant(0.0)
               : RationalTF::from_zpk(join(plant.zeros(), controller.zeros()), cl,
                                      kg * kc / lead);
  return g;
}

RationalTF frequency_invert(const RationalTF& tf) {
  if (tf.is_zero()) return tf;
  Complex gain = tf.gain();
  std::vector<Complex> zeros;
  std::vector<Complex> poles;
  for (const Complex& z : tf.zeros()) {
    if (at_origin(z)) continue;  // (1 - s~ * 0) = 1
    zeros.push_back(1.0 / z);
    gain *= -z;
  }
  for (const Complex& p : tf.poles()) {
    if (at_origin(p)) continue;
    poles.push_back(1.0 / p);
    gain /= -p;
  }
  const int excess = tf.relative_degree();
  for (int i = 0; i < excess; ++i) zeros.emplace_back(0.0);
  for (int i = 0; i < -excess; ++i) poles.emplace_back(0.0);
  return RationalTF::from_zpk(std::move(zeros), std::move(poles), gain.real(),
                              Properness::kImproperAllowed);
}

RationalTF inverse_plant(const RationalTF& plant) {
  if (plant.is_zero()) throw DomainError("inverse_plant: plant is identically zero");
  return frequency_invert(plant).reciprocal(Properness::kImproperAllowed);
}

void StateSpace::validate() const {
  if (A.rows() != A.cols()) throw DomainError("state space: A is not square");
  if (B.rows() != A.rows()) throw DomainError("state space: B row count mismatch");
  if (C.cols() != A.rows()) throw DomainError("state space: C column count mismatch");
  if (D.rows() != C.rows() || D.cols() != B.cols())
    throw DomainError("state space: D dimension mismatch");
}

Eigen::MatrixXcd StateSpace::transfer(Complex s) const {
  const Eigen::Index n = states();
  Eigen::MatrixXcd out = D.cast<Complex>();
  if (n == 0) return out;
  Eigen::MatrixXcd M = -A.cast<Complex>();
  M.diagonal().array() += s;
  Eigen::MatrixXcd X = M.partialPivLu().solve(B.cast<Complex>());
  out += C.cast<Complex>() * X;
  return out;
}

StateSpace realize(const RationalTF& tf) {
  if (tf.is_improper()) throw DomainError("realize: improper transfer function");
  const std::size_t n = tf.poles().size();
  StateSpace ss;
  ss.A = Eigen::MatrixXd::Zero(n, n);
  ss.B = Eigen::MatrixXd::Zero(n, 1);
  ss.C = Eigen::MatrixXd::Zero(1, n);
  ss.D = Eigen::MatrixXd::Zero(1, 1);
  if (tf.is_zero()) {
    ss.A.resize(0, 0);
    ss.B.resize(0, 1);
    ss.C.resize(1, 0);
    return ss;
  }
  const std::vector<double> den = tf.denominator();
  std::vector<double> num = tf.numerator();
  num.insert(num.begin(), n + 1 - num.size(), 0.0);

  const double d = num[0];
  ss.D(0, 0) = d;
  if (n == 0) return ss;
  for (std::size_t i = 0; i + 1 < n; ++i) ss.A(i, i + 1) = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    // den[n - j] multiplies s^j
    ss.A(n - 1, j) = -den[n - j];
    ss.C(0, j) = num[n - j] - d * den[n - j];
  }
  ss.B(n - 1, 0) = 1.0;
  return ss;
}

PoleZeroClassification classify(const RationalTF& tf, double tol) {
  if (tol < 0.0) throw DomainError("classify: negative tolerance");
  PoleZeroClassification c;
  for (const Complex& p : tf.poles()) {
    if (std::abs(p.real()) <= tol) c.marginal_poles.push_back(p);
    else if (p.real() > 0.0) c.unstable_poles.push_back(p);
    else c.stable_poles.push_back(p);
  }
  for (const Complex& z : tf.zeros()) {
    if (std::abs(z.real()) <= tol) c.marginal_zeros.push_back(z);
    else if (z.real() > 0.0) c.nonmin_zeros.push_back(z);
    else c.stable_zeros.push_back(z);
  }
  return c;
}

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& A) {
  if (A.rows() == 0) return {};
  Eigen::EigenSolver<Eigen::MatrixXd> solver(A, false);
  if (solver.info() != Eigen::Success) throw NumericError("eigenvalue solver failed");
  return solver.eigenvalues();
}

bool is_mean_square_stable(const StateSpace& ss, double tol) {
  if (ss.A.rows() != ss.A.cols()) throw DomainError("is_mean_square_stable: A is not square");
  const Eigen::VectorXcd ev = eigenvalues(ss.A);
  return (ev.real().array() < -tol).all();
}

RationalTF ou_shape(double a) {
  if (!(a > 0.0)) throw DomainError("ou_shape: rate must be positive");
  return RationalTF::from_zpk({}, {Complex(-a, 0.0)}, std::sqrt(2.0 * a));
}

LoopSystem closed_loop_system(const RationalTF& plant, const RationalTF& controller,
                              Injection injection, const RationalTF& noise_shape,
                              double intensity, double dither,
                              const std::optional<RationalTF>& dither_shape) {
  if (intensity < 0.0) throw DomainError("closed_loop_system: negative intensity");
  if (dither < 0.0) throw DomainError("closed_loop_system: negative dither");
  if (noise_shape.relative_degree() < 1 && !noise_shape.is_zero())
    throw DomainError("closed_loop_system: noise shape must be strictly proper");
  if (dither_shape && dither_shape->relative_degree() < 1 && !dither_shape->is_zero())
    throw DomainError("closed_loop_system: dither shape must be strictly proper");

  LoopSystem sys;
  sys.injection = injection;
  if (injection == Injection::kControlNoise) {
    sys.loop_plant = plant;
    sys.loop_controller = controller;
  } else {
    sys.loop_plant = inverse_plant(plant);
    sys.loop_controller = inverse_plant(controller);
  }
  const StateSpace P = realize(sys.loop_plant);
  const StateSpace K = realize(sys.loop_controller);
  const StateSpace F = realize(noise_shape);
  const StateSpace N = dither_shape ? realize(*dither_shape) : F;
  const bool with_dither = dither > 0.0;

  const Eigen::Index nf = F.states();
  const Eigen::Index nn = with_dither ? N.states() : 0;
  const Eigen::Index np = P.states();
  const Eigen::Index nk = K.states();
  const Eigen::Index of = 0, on = nf, op = on + nn, ok = op + np;
  const Eigen::Index n = ok + nk;

  const double dp = P.D(0, 0);
  const double dk = K.D(0, 0);
  const double wellposed = 1.0 + dk * dp;
  if (std::abs(wellposed) < 1e-12) throw DomainError("closed_loop_system: ill-posed loop");

  using Row = Eigen::RowVectorXd;
  Row r_row = Row::Zero(n), n_row = Row::Zero(n), cp = Row::Zero(n), ck = Row::Zero(n);
  r_row.segment(of, nf) = intensity * F.C;
  if (with_dither) n_row.segment(on, nn) = std::sqrt(dither) * intensity * N.C;
  cp.segment(op, np) = P.C;
  ck.segment(ok, nk) = K.C;

  const Row a_row = (r_row - n_row - ck - dk * cp) / wellposed;  // plant input
  const Row c_row = cp + dp * a_row;                             // plant output
  const Row b_row = ck + dk * c_row + n_row;                     // controller output

  StateSpace& ss = sys.ss;
  ss.A = Eigen::MatrixXd::Zero(n, n);
  ss.B = Eigen::MatrixXd::Zero(n, with_dither ? 2 : 1);
  ss.A.block(of, of, nf, nf) = F.A;
  ss.B.block(of, 0, nf, 1) = F.B;
  if (with_dither) {
    ss.A.block(on, on, nn, nn) = N.A;
    ss.B.block(on, 1, nn, 1) = N.B;
  }
  ss.A.block(op, op, np, np) += P.A;
  ss.A.middleRows(op, np) += P.B * a_row;
  ss.A.block(ok, ok, nk, nk) += K.A;
  ss.A.middleRows(ok, nk) += K.B * c_row;

  ss.C = Eigen::MatrixXd::Zero(4, n);
  if (injection == Injection::kControlNoise) {
    sys.channels = {"u", "v", "w", "y"};
    ss.C.row(0) = a_row;
    ss.C.row(1) = b_row;
    ss.C.row(2) = r_row;
    ss.C.row(3) = c_row;
  } else {
    sys.channels = {"e", "y", "d", "u"};
    ss.C.row(0) = b_row;
    ss.C.row(1) = a_row;
    ss.C.row(2) = r_row;
    ss.C.row(3) = c_row;
  }
  ss.D = Eigen::MatrixXd::Zero(4, ss.B.cols());
  ss.validate();
  sys.stable = is_mean_square_stable(ss);
  return sys;
}

}  // namespace bodelim
