#include "bodelim/stochsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "bodelim/error.hpp"

namespace bodelim {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string(what) + ": matrix exponential is not finite");
}

}  // namespace

DiscreteSystem exact_discretize(const StateSpace& ss, double dt) {
  if (!(dt > 0.0)) throw DomainError("exact_discretize: dt must be positive");
  ss.validate();
  const Eigen::Index n = ss.states();
  const Eigen::Index q = ss.inputs();
  DiscreteSystem d;
  d.dt = dt;
  d.Cd = ss.C;
  d.Dd = ss.D;

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = -ss.A;
  M.topRightCorner(n, n) = ss.B * ss.B.transpose();
  M.bottomRightCorner(n, n) = ss.A.transpose();
  const Eigen::MatrixXd E = (M * dt).exp();
  require_finite(E, "exact_discretize");
  d.Ad = E.bottomRightCorner(n, n).transpose();
  Eigen::MatrixXd Q = d.Ad * E.topRightCorner(n, n);
  d.Qd = 0.5 * (Q + Q.transpose());

  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n + q, n + q);
  Z.topLeftCorner(n, n) = ss.A;
  Z.topRightCorner(n, q) = ss.B;
  const Eigen::MatrixXd Ez = (Z * dt).exp();
  require_finite(Ez, "exact_discretize");
  d.Bd = Ez.topRightCorner(n, q);

  d.noise_factor = psd_factor(d.Qd);
  return d;
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& Q) {
  if (Q.rows() == 0) return Q;
  // Pivoted LDL^T: scaling Q by c^2 scales the factor by c exactly.
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(Q);
  if (ldlt.info() != Eigen::Success) throw NumericError("psd_factor: LDL^T factorization failed");
  const Eigen::VectorXd s = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd L = ldlt.matrixL();
  return ldlt.transpositionsP().transpose() * (L * s.asDiagonal());
}

Eigen::MatrixXd stationary_covariance(const StateSpace& ss) {
  ss.validate();
  if (!is_mean_square_stable(ss)) throw UnstableLoopError("stationary_covariance: A is not Hurwitz");
  const Eigen::Index n = ss.states();
  if (n == 0) return Eigen::MatrixXd(0, 0);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  // (I (x) A + A (x) I) vec(P) = -vec(B B^T)
  const Eigen::MatrixXd K = Eigen::kroneckerProduct(I, ss.A) + Eigen::kroneckerProduct(ss.A, I);
  const Eigen::MatrixXd BBt = ss.B * ss.B.transpose();
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(BBt.data(), n * n);
  const Eigen::VectorXd vecP = K.fullPivLu().solve(rhs);
  Eigen::MatrixXd P = Eigen::Map<const Eigen::MatrixXd>(vecP.data(), n, n);
  return 0.5 * (P + P.transpose());
}

Eigen::MatrixXd output_covariance(const StateSpace& ss) {
  const Eigen::MatrixXd P = stationary_covariance(ss);
  return ss.C * P * ss.C.transpose();
}

std::size_t SignalBundle::samples() const {
  return channels.empty() ? 0 : channels.begin()->second.size();
}

const std::vector<double>& SignalBundle::channel(const std::string& name) const {
  const auto it = channels.find(name);
  if (it == channels.end()) throw DomainError("signal bundle has no channel '" + name + "'");
  return it->second;
}

SimTiming sim_timing(const StateSpace& ss) {
  if (!is_mean_square_stable(ss)) throw UnstableLoopError("simulate: closed loop is not Hurwitz");
  SimTiming t;
  const Eigen::VectorXcd ev = eigenvalues(ss.A);
  if (ev.size() == 0) throw DomainError("simulate: system has no states");
  const double slowest = ev.real().cwiseAbs().minCoeff();
  t.slowest_time_constant = 1.0 / slowest;
  t.fastest_rate = ev.cwiseAbs().maxCoeff();
  t.max_dt = M_PI / t.fastest_rate;
  t.min_duration = 100.0 * t.slowest_time_constant;
  return t;
}

SignalBundle simulate(const StateSpace& ss, const std::vector<std::string>& channel_names,
                      double dt, double duration, std::uint64_t seed, std::uint64_t trial,
                      unsigned oversample) {
  ss.validate();
  if (!(dt > 0.0)) throw DomainError("simulate: dt must be positive");
  if (!(duration > 0.0)) throw DomainError("simulate: duration must be positive");
  if (static_cast<Eigen::Index>(channel_names.size()) != ss.outputs())
    throw DomainError("simulate: one channel name per output required");
  if (ss.D.cwiseAbs().maxCoeff() != 0.0)
    throw DomainError("simulate: white-noise inputs cannot feed through to outputs");
  const SimTiming timing = sim_timing(ss);
  if (dt > timing.max_dt * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "simulate: dt = " << dt << " exceeds the Nyquist guard " << timing.max_dt;
    throw DomainError(os.str());
  }
  if (duration < timing.min_duration * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "simulate: duration " << duration << " is shorter than 100 slowest time constants ("
       << timing.min_duration << ")";
    throw DomainError(os.str());
  }

  const std::size_t q = std::max(1u, oversample);
  const DiscreteSystem d = exact_discretize(ss, dt / double(q));
  const Eigen::MatrixXd P = stationary_covariance(ss);
  const Eigen::MatrixXd P0 = psd_factor(P);
  const int n = static_cast<int>(ss.states());
  const int p = static_cast<int>(ss.outputs());
  const std::size_t N = static_cast<std::size_t>(std::llround(duration / dt));
  const std::vector<double> h = q > 1 ? decimation_filter(q) : std::vector<double>{1.0};
  const std::size_t L = h.size();

  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;

  // Row-major copies for the inner loop.
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMat Ad = d.Ad, F = d.noise_factor, C = ss.C;
  std::vector<double> x(n), xn(n), xi(n);
  for (int i = 0; i < n; ++i) xi[i] = normal(rng);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += P0(i, j) * xi[j];
    x[i] = acc;
  }

  // Fine-rate outputs in a ring of L samples per channel, stored twice so the
  // newest L samples are contiguous. hr is h reversed.
  const std::vector<double> hr(h.rbegin(), h.rend());
  std::vector<std::vector<double>> ring(p, std::vector<double>(2 * L));
  std::vector<std::vector<double>> out(p, std::vector<double>(N));
  const std::size_t fine_steps = (L - 1) + (N - 1) * q + 1;
  std::size_t k = 0;
  for (std::size_t f = 0; f < fine_steps; ++f) {
    const std::size_t slot = f % L;
    for (int c = 0; c < p; ++c) {
      const double* row = C.data() + static_cast<std::ptrdiff_t>(c) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += row[j] * x[j];
      ring[c][slot] = acc;
      ring[c][slot + L] = acc;
    }
    if (f + 1 >= L && (f + 1 - L) % q == 0) {
      // window oldest..newest = ring[slot + 1 .. slot + L]
      for (int c = 0; c < p; ++c) {
        const double* w = ring[c].data() + slot + 1;
        double acc = 0.0;
        for (std::size_t j = 0; j < L; ++j) acc += hr[j] * w[j];
        out[c][k] = acc;
      }
      ++k;
    }
    if (f + 1 == fine_steps) break;
    for (int i = 0; i < n; ++i) xi[i] = normal(rng);
    for (int i = 0; i < n; ++i) {
      const double* a = Ad.data() + static_cast<std::ptrdiff_t>(i) * n;
      const double* fr = F.data() + static_cast<std::ptrdiff_t>(i) * n;
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += a[j] * x[j] + fr[j] * xi[j];
      xn[i] = acc;
    }
    x.swap(xn);
  }

  SignalBundle b;
  b.dt = dt;
  b.seed = seed;
  b.trial = trial;
  b.burn_in_samples = std::min<std::size_t>(
      static_cast<std::size_t>(std::ceil(5.0 * timing.slowest_time_constant / dt)), N / 2);
  for (int c = 0; c < p; ++c) b.channels.emplace(channel_names[c], std::move(out[c]));
  return b;
}

SignalBundle simulate(const LoopSystem& loop, double dt, double duration, std::uint64_t seed,
                      std::uint64_t trial, unsigned oversample) {
  return simulate(loop.ss, loop.channels, dt, duration, seed, trial, oversample);
}

std::vector<double> decimation_filter(std::size_t factor) {
  if (factor < 2) throw DomainError("decimation_filter: factor must be at least 2");
  const std::size_t L = 32 * factor + 1;
  const double M = 0.5 * double(L - 1);
  std::vector<double> h(L);
  double sum = 0.0;
  for (std::size_t j = 0; j < L; ++j) {
    const double t = (double(j) - M) / double(factor);
    const double sinc = t == 0.0 ? 1.0 : std::sin(M_PI * t) / (M_PI * t);
    const double a = 2.0 * M_PI * double(j) / double(L - 1);
    h[j] = sinc * (0.42 - 0.5 * std::cos(a) + 0.08 * std::cos(2.0 * a));
    sum += h[j];
  }
  for (double& v : h) v /= sum;
  return h;
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("BODE_LIMITS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& job) {
  const std::size_t workers = std::min(n, worker_threads());
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::mutex m;
  std::size_t next = 0;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(m);
        if (next >= n || error) return;
        i = next++;
      }
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace bodelim
