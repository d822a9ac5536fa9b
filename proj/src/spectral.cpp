#include "bodelim/spectral.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <mutex>
#include <sstream>

#include <fftw3.h>

#include <Eigen/QR>

#include "bodelim/error.hpp"

namespace bodelim {

namespace {

// FFTW planning is not thread safe; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * double(i) / double(n)));
  return w;
}

std::size_t segment_step(std::size_t nperseg, double overlap) {
  const auto noverlap = static_cast<std::size_t>(std::floor(overlap * double(nperseg)));
  return std::max<std::size_t>(1, nperseg - noverlap);
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
    if (!plan_) throw NumericError("welch: FFTW planning failed");
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  Complex bin(std::size_t k) const { return {out_[k][0], out_[k][1]}; }
  void run() { fftw_execute(plan_); }

 private:
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

void check_grids(const SpectralEstimate& a, const SpectralEstimate& b, const char* what) {
  if (a.omega != b.omega) throw DomainError(std::string(what) + ": frequency grids differ");
}

// Variance of the trapezoid sum of wt * log T over the intervals [k0, k1).
// The scatter of log T comes from first differences in blocks of 32 bins;
// neighbouring bins are correlated (factor 2).
double scatter_variance(const std::vector<double>& om, const std::vector<double>& lg, std::size_t k0,
                        std::size_t k1, const std::function<double(std::size_t)>& wt) {
  constexpr std::size_t kBlock = 32;
  double var = 0.0;
  for (std::size_t b0 = k0; b0 < k1; b0 += kBlock) {
    const std::size_t b1 = std::min(k1, b0 + kBlock);
    double d2 = 0.0;
    for (std::size_t k = b0; k < b1; ++k) d2 += (lg[k + 1] - lg[k]) * (lg[k + 1] - lg[k]);
    const double v_bin = 0.5 * d2 / double(b1 - b0);
    for (std::size_t k = b0; k < b1; ++k) {
      const double e = (om[k + 1] - om[k]) * wt(k);
      var += 2.0 * e * e * v_bin;
    }
  }
  return var;
}

}  // namespace

double SpectralEstimate::effective_segments() const {
  if (segments_used < 2 || nperseg == 0) return double(segments_used);
  const std::vector<double> w = hann(nperseg);
  double w2 = 0.0;
  for (double v : w) w2 += v * v;
  const std::size_t step = segment_step(nperseg, overlap);
  const double k = double(segments_used);
  double acc = 0.0;
  for (std::size_t l = 1; l < segments_used && l * step < nperseg; ++l) {
    double c = 0.0;
    for (std::size_t i = 0; i + l * step < nperseg; ++i) c += w[i] * w[i + l * step];
    const double rho = c / w2;
    acc += (1.0 - double(l) / k) * rho * rho;
  }
  return k / (1.0 + 2.0 * acc);
}

std::size_t default_nperseg(std::size_t length) {
  const double target = std::max(1.0, double(length) / 64.0);
  return std::size_t{1} << static_cast<unsigned>(std::ceil(std::log2(target)));
}

SpectralMatrix::SpectralMatrix(std::vector<std::string> channels,
                               std::vector<SpectralEstimate> entries)
    : channels_(std::move(channels)), entries_(std::move(entries)) {
  if (channels_.empty() || entries_.size() != channels_.size() * channels_.size())
    throw DomainError("SpectralMatrix: one entry per channel pair required");
}

const SpectralEstimate& SpectralMatrix::operator()(const std::string& x,
                                                   const std::string& y) const {
  const auto find = [&](const std::string& name) {
    const auto it = std::find(channels_.begin(), channels_.end(), name);
    if (it == channels_.end()) throw DomainError("spectral matrix has no channel '" + name + "'");
    return static_cast<std::size_t>(it - channels_.begin());
  };
  return entries_[find(x) * channels_.size() + find(y)];
}

SpectralMatrix welch_matrix(const SignalBundle& bundle, const std::vector<std::string>& channels,
                            const WelchOptions& opts) {
  if (channels.empty()) throw DomainError("welch: no channels requested");
  std::vector<const std::vector<double>*> data;
  for (const std::string& c : channels) data.push_back(&bundle.channel(c));
  const std::size_t len = bundle.samples();
  const std::size_t nper = opts.nperseg ? opts.nperseg : default_nperseg(len);
  if (!(opts.overlap >= 0.0 && opts.overlap <= 0.9))
    throw DomainError("welch: overlap must lie in [0, 0.9]");
  if (nper < 4 || nper > len / 4) {
    std::ostringstream os;
    os << "welch: signal of " << len << " samples is too short for segments of " << nper;
    throw DomainError(os.str());
  }
  if (!(bundle.dt > 0.0)) throw DomainError("welch: bundle has no sample interval");

  const std::vector<double> w = hann(nper);
  double w2 = 0.0;
  for (double v : w) w2 += v * v;
  const std::size_t step = segment_step(nper, opts.overlap);
  const std::size_t nseg = (len - nper) / step + 1;
  const std::size_t nbins = nper / 2;  // DC dropped
  const std::size_t m = channels.size();

  std::vector<std::vector<Complex>> acc(m * m, std::vector<Complex>(nbins));
  std::vector<std::vector<Complex>> spec(m, std::vector<Complex>(nbins));
  RealFft fft(nper);
  for (std::size_t s = 0; s < nseg; ++s) {
    const std::size_t off = s * step;
    for (std::size_t c = 0; c < m; ++c) {
      const double* x = data[c]->data() + off;
      double* in = fft.input();
      for (std::size_t i = 0; i < nper; ++i) in[i] = w[i] * x[i];
      fft.run();
      for (std::size_t k = 0; k < nbins; ++k) spec[c][k] = fft.bin(k + 1);
    }
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a; b < m; ++b) {
        auto& dst = acc[a * m + b];
        for (std::size_t k = 0; k < nbins; ++k) dst[k] += spec[a][k] * std::conj(spec[b][k]);
      }
    }
  }

  const double scale = bundle.dt / (w2 * double(nseg));
  std::vector<double> omega(nbins);
  for (std::size_t k = 0; k < nbins; ++k) omega[k] = 2.0 * M_PI * double(k + 1) / (double(nper) * bundle.dt);

  std::vector<SpectralEstimate> entries(m * m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      SpectralEstimate& e = entries[a * m + b];
      e.x = channels[a];
      e.y = channels[b];
      e.omega = omega;
      e.nperseg = nper;
      e.overlap = opts.overlap;
      e.segments_used = nseg;
      e.values.resize(nbins);
      const auto& src = acc[std::min(a, b) * m + std::max(a, b)];
      for (std::size_t k = 0; k < nbins; ++k) {
        const Complex v = src[k] * scale;
        if (a == b) e.values[k] = Complex(std::max(0.0, v.real()), 0.0);
        else e.values[k] = a < b ? v : std::conj(v);
      }
    }
  }
  return SpectralMatrix(channels, std::move(entries));
}

SpectralEstimate welch_spectra(const SignalBundle& bundle, const std::string& x,
                               const std::string& y, const WelchOptions& opts) {
  if (x == y) return welch_matrix(bundle, {x}, opts)(x, x);
  return welch_matrix(bundle, {x, y}, opts)(x, y);
}

SpectralMatrix pool_spectra(const std::vector<SpectralMatrix>& parts) {
  if (parts.empty()) throw DomainError("pool_spectra: nothing to pool");
  const std::vector<std::string>& ch = parts.front().channels();
  std::vector<SpectralEstimate> entries;
  for (const std::string& x : ch) {
    for (const std::string& y : ch) {
      SpectralEstimate e = parts.front()(x, y);
      double total = double(e.segments_used);
      for (Complex& v : e.values) v *= total;
      for (std::size_t i = 1; i < parts.size(); ++i) {
        const SpectralEstimate& o = parts[i](x, y);
        check_grids(e, o, "pool_spectra");
        const double k = double(o.segments_used);
        for (std::size_t j = 0; j < e.values.size(); ++j) e.values[j] += k * o.values[j];
        total += k;
        e.segments_used += o.segments_used;
      }
      for (Complex& v : e.values) v /= total;
      entries.push_back(std::move(e));
    }
  }
  return SpectralMatrix(ch, std::move(entries));
}

std::size_t SensitivityCurve::masked_count() const {
  return static_cast<std::size_t>(std::count(masked.begin(), masked.end(), char{1}));
}

SensitivityCurve sensitivity_like(const SpectralEstimate& num, const SpectralEstimate& den,
                                  const std::string& kind, double floor_rel) {
  check_grids(num, den, "sensitivity_like");
  SensitivityCurve c;
  c.kind = kind;
  c.omega = den.omega;
  c.value.resize(den.omega.size());
  c.masked.assign(den.omega.size(), 0);
  c.segments = den.effective_segments();
  std::vector<double> d(den.values.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = den.values[k].real();
  const double floor = floor_rel * median(d);
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (!(d[k] > floor)) {
      c.masked[k] = 1;
      c.value[k] = std::nan("");
      continue;
    }
    c.value[k] = std::sqrt(std::abs(num.values[k].real()) / d[k]);
  }
  return c;
}

IntegralResult bode_like_integral(const SensitivityCurve& curve, Weight weight,
                                  const BodeLikeOptions& opts) {
  const std::vector<double>& om = curve.omega;
  const std::size_t n = om.size();
  if (n < 8) return IntegralResult::with_status(IntegralStatus::kSingular, "curve has fewer than 8 points");
  if (curve.masked_count() > 0) {
    return IntegralResult::with_status(IntegralStatus::kSingular,
                                       std::to_string(curve.masked_count()) + " masked points in band");
  }
  if (opts.bandwidth > 0.0 && (om.front() > 0.01 * opts.bandwidth * (1 + 1e-9) ||
                               om.back() < 100.0 * opts.bandwidth * (1 - 1e-9))) {
    std::ostringstream os;
    os << "band [" << om.front() << ", " << om.back() << "] does not cover [0.01, 100] x bandwidth "
       << opts.bandwidth;
    return IntegralResult::with_status(IntegralStatus::kSingular, os.str());
  }
  std::vector<double> lg(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(curve.value[k] > 0.0))
      return IntegralResult::with_status(IntegralStatus::kSingular, "curve vanishes on the grid");
    lg[k] = std::log(curve.value[k]);
  }
  const bool weighted = weight == Weight::kInvOmegaSq;
  const auto wt = [&](std::size_t k) { return weighted ? 1.0 / (om[k] * om[k]) : 1.0; };

  // Lowest points replaced by a fit: c0 + c1 log w + c2 w^2 over one decade
  // (unweighted; the log term follows |T| ~ w^k of integrating loops), or
  // c2 w^2 + c4 w^4 over two decades (weighted).
  const double fit_top = om.front() * (weighted ? 100.0 : 10.0);
  std::size_t nfit = 0;
  while (nfit < n && om[nfit] <= fit_top * (1 + 1e-12)) ++nfit;
  nfit = std::max<std::size_t>(nfit, 4);
  Eigen::MatrixXd X(nfit, weighted ? 2 : 3);
  Eigen::VectorXd yv(nfit);
  for (std::size_t k = 0; k < nfit; ++k) {
    const double w2 = om[k] * om[k];
    if (weighted) {
      X(k, 0) = w2;
      X(k, 1) = w2 * w2;
    } else {
      X(k, 0) = 1.0;
      X(k, 1) = std::log(om[k]);
      X(k, 2) = w2;
    }
    yv(k) = lg[k];
  }
  const Eigen::VectorXd c = X.colPivHouseholderQr().solve(yv);
  const std::size_t start = weighted ? nfit - 1 : 0;
  const double a = om[start];
  // int_0^a (c2 w^2 + c4 w^4) / w^2 = c2 a + c4 a^3 / 3
  const double low = weighted ? c(0) * a + c(1) * a * a * a / 3.0
                              : c(0) * a + c(1) * a * (std::log(a) - 1.0) + c(2) * a * a * a / 3.0;

  double body = 0.0, var = 0.0;
  for (std::size_t k = start; k + 1 < n; ++k) {
    const double h = om[k + 1] - om[k];
    body += 0.5 * h * (lg[k] * wt(k) + lg[k + 1] * wt(k + 1));
  }

  // Tail above the grid, fitted on the last decade.
  const double top = om.back();
  std::size_t first = n - 1;
  while (first > 0 && om[first - 1] >= top / 10.0) --first;
  double high;
  if (weighted) {
    // log T ~ alpha + beta log w;  int_W^inf (alpha + beta log w) / w^2 = (alpha + beta (log W + 1)) / W
    const std::size_t m = n - first;
    Eigen::MatrixXd Xh(m, 2);
    Eigen::VectorXd yh(m);
    for (std::size_t k = 0; k < m; ++k) {
      Xh(k, 0) = 1.0;
      Xh(k, 1) = std::log(om[first + k]);
      yh(k) = lg[first + k];
    }
    const Eigen::Vector2d ab = Xh.colPivHouseholderQr().solve(yh);
    high = (ab(0) + ab(1) * (std::log(top) + 1.0)) / top;
  } else {
    // log T ~ kappa / w^2
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = first; k < n; ++k) {
      const double x = 1.0 / (om[k] * om[k]);
      sxy += x * lg[k];
      sxx += x * x;
    }
    high = (sxy / sxx) / top;
  }

  var = scatter_variance(om, lg, start, n - 1, wt);
  const double stat = std::sqrt(var) / M_PI;
  const double trunc = 0.25 * (std::abs(low) + std::abs(high)) / M_PI;
  return IntegralResult::finite((low + body + high) / M_PI, std::hypot(stat, trunc));
}

IntegralResult band_log_integral(const SensitivityCurve& curve, double lo, double hi) {
  const std::vector<double>& om = curve.omega;
  std::size_t k0 = 0;
  while (k0 < om.size() && om[k0] < lo) ++k0;
  std::size_t k1 = k0;
  while (k1 + 1 < om.size() && om[k1 + 1] <= hi) ++k1;
  if (k1 <= k0 || k0 >= om.size())
    return IntegralResult::with_status(IntegralStatus::kSingular, "band holds no grid interval");
  std::vector<double> lg(om.size(), 0.0);
  for (std::size_t k = k0; k <= k1; ++k) {
    if (curve.masked[k] || !(curve.value[k] > 0.0))
      return IntegralResult::with_status(IntegralStatus::kSingular, "masked point in band");
    lg[k] = std::log(curve.value[k]);
  }
  double acc = 0.0;
  for (std::size_t k = k0; k < k1; ++k) acc += 0.5 * (om[k + 1] - om[k]) * (lg[k] + lg[k + 1]);
  const double var = scatter_variance(om, lg, k0, k1, [](std::size_t) { return 1.0; });
  return IntegralResult::finite(acc / M_PI, std::sqrt(var) / M_PI);
}

MiRateEstimate mi_rate_pinsker(const SpectralEstimate& x_auto, const SpectralEstimate& y_auto,
                               const SpectralEstimate& cross, const MiBand& band) {
  check_grids(x_auto, y_auto, "mi_rate_pinsker");
  check_grids(x_auto, cross, "mi_rate_pinsker");
  constexpr double kClip = 1.0 - 1e-6;
  MiRateEstimate r;
  r.band_lo = std::max(0.0, band.lo);
  r.band_hi = band.hi;
  const std::vector<double>& om = x_auto.omega;
  std::vector<double> f;
  std::size_t clipped = 0;
  for (std::size_t k = 0; k < om.size(); ++k) {
    if (om[k] < r.band_lo || om[k] > r.band_hi) continue;
    const double px = x_auto.values[k].real(), py = y_auto.values[k].real();
    double g = (px > 0.0 && py > 0.0) ? std::norm(cross.values[k]) / (px * py) : 0.0;
    if (!std::isfinite(g)) g = 0.0;
    if (g >= kClip) {
      g = kClip;
      ++clipped;
    }
    g = std::max(0.0, g);
    r.omega.push_back(om[k]);
    r.coherence.push_back(g);
    f.push_back(-std::log1p(-g));
  }
  if (r.omega.empty()) throw DomainError("mi_rate_pinsker: band contains no grid points");
  r.band_hi = std::min(r.band_hi, r.omega.back());
  double acc = 0.0;
  // Hold the integrand constant below the first point when the band starts lower.
  if (r.band_lo < r.omega.front() && r.omega.front() == om.front()) {
    acc += (r.omega.front() - r.band_lo) * f.front();
  } else {
    r.band_lo = r.omega.front();
  }
  for (std::size_t k = 0; k + 1 < f.size(); ++k) acc += 0.5 * (r.omega[k + 1] - r.omega[k]) * (f[k] + f[k + 1]);
  // -(1/4pi) * 2 * int_0^inf log(1 - gamma^2)
  double value = acc / (2.0 * M_PI);
  const double keff = cross.effective_segments();
  if (cross.segments_used >= 2 && keff > 1.0) {
    r.bias_correction = (r.band_hi - r.band_lo) / (keff - 1.0) / (2.0 * M_PI);
    value -= r.bias_correction;
  }
  r.value = std::max(0.0, value);
  r.clipped_fraction = double(clipped) / double(r.omega.size());
  r.unreliable = r.clipped_fraction > 0.1;
  return r;
}

}  // namespace bodelim
