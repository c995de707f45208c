#include "rfic/canceller.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rfic/channel.h"
#include "rfic/error.h"
#include "rfic/fft.h"

namespace rfic {
namespace {

constexpr double kPi = std::numbers::pi;

void CheckCompatible(const BasebandWaveform& a, const BasebandWaveform& b) {
  a.Validate();
  b.Validate();
  if (a.sample_rate != b.sample_rate) {
    throw Error(ErrorCode::kRateMismatch, "sample rates differ");
  }
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidLength, "waveform lengths differ");
  }
}

struct Window {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

Window CommonValid(const BasebandWaveform& a, const BasebandWaveform& b) {
  Window w;
  w.begin = std::max(a.valid_begin, b.valid_begin);
  w.end = std::max(w.begin, std::min(a.valid_end, b.valid_end));
  return w;
}

// Copy of [begin, begin + len) as a standalone, fully valid waveform.
BasebandWaveform Slice(const BasebandWaveform& w, std::size_t begin,
                       std::size_t len) {
  std::vector<cplx> s(w.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                      w.samples.begin() +
                          static_cast<std::ptrdiff_t>(begin + len));
  return BasebandWaveform(std::move(s), w.sample_rate, w.center_freq);
}

double Energy(std::span<const cplx> x) {
  double e = 0.0;
  for (const cplx& v : x) e += std::norm(v);
  return e;
}

cplx InnerProduct(std::span<const cplx> a, std::span<const cplx> b) {
  cplx acc{};
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * std::conj(b[i]);
  return acc;
}

cplx LeastSquaresGain(const BasebandWaveform& r_l,
                      const BasebandWaveform& aligned) {
  const Window w = CommonValid(r_l, aligned);
  const auto a = std::span<const cplx>(r_l.samples).subspan(w.begin, w.size());
  const auto b =
      std::span<const cplx>(aligned.samples).subspan(w.begin, w.size());
  const double e = Energy(b);
  if (!(e > 0.0)) {
    throw Error(ErrorCode::kDegenerateReference,
                "reference has zero energy in the common valid window");
  }
  return InnerProduct(a, b) / e;
}

// Overwrites the aligned reference with r_L - gain * aligned, zero outside
// the common valid window.
BasebandWaveform Subtract(const BasebandWaveform& r_l, BasebandWaveform aligned,
                          cplx gain) {
  const Window w = CommonValid(r_l, aligned);
  std::vector<cplx>& y = aligned.samples;
  std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(w.begin), cplx{});
  for (std::size_t i = w.begin; i < w.end; ++i) {
    y[i] = r_l.samples[i] - gain * y[i];
  }
  std::fill(y.begin() + static_cast<std::ptrdiff_t>(w.end), y.end(), cplx{});
  aligned.sample_rate = r_l.sample_rate;
  aligned.center_freq = r_l.center_freq;
  aligned.valid_begin = w.begin;
  aligned.valid_end = w.end;
  return aligned;
}

BasebandWaveform Align(const BasebandWaveform& r_h, double delay) {
  return delay == 0.0 ? r_h : FractionalDelay(r_h, delay);
}

double ExcessKurtosis(std::span<const cplx> y) {
  double m2 = 0.0;
  double m4 = 0.0;
  for (const cplx& v : y) {
    const double p = std::norm(v);
    m2 += p;
    m4 += p * p;
  }
  const double n = static_cast<double>(y.size());
  m2 /= n;
  m4 /= n;
  return m4 / (m2 * m2) - 2.0;
}

// The parabola through |xcorr| is biased by up to a few hundredths of a
// sample. The cross-spectrum X conj(Y) has phase arg(g) - 2 pi f d, so a
// magnitude-weighted line fit to its phase, after removing the coarse
// estimate, gives the remaining fraction without that bias. Bins more than
// 60 dB below the strongest carry no usable phase and are skipped.
double PhaseSlopeDelay(const std::vector<cplx>& cross, double coarse) {
  const std::size_t m = cross.size();
  if (m < 4) return coarse;
  const double step = 2.0 * std::numbers::pi * coarse / static_cast<double>(m);
  const cplx rotate_step = std::polar(1.0, step);
  const std::size_t half = (m + 1) / 2;
  std::vector<cplx> rot(m);
  cplx sum{};
  double peak = 0.0;
  cplx phasor;
  for (std::size_t i = 0; i < m; ++i) {
    // Restart the recurrence at each half and every 1024 bins to bound
    // rounding drift.
    if (i % 1024 == 0 || i == half) {
      const double k = i < half ? static_cast<double>(i)
                                : static_cast<double>(i) - static_cast<double>(m);
      phasor = std::polar(1.0, step * k);
    }
    rot[i] = cross[i] * phasor;
    sum += rot[i];
    peak = std::max(peak, std::norm(rot[i]));
    phasor *= rotate_step;
  }
  const cplx unrotate = std::polar(1.0, -std::arg(sum));
  const double floor = 1e-6 * peak;
  double sw = 0.0, sf = 0.0, sp = 0.0, sff = 0.0, sfp = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double p = std::norm(rot[i]);
    if (p <= floor) continue;
    const double w = std::sqrt(p);
    const double f = BinFrequency(i, m, 1.0);
    const double phi = std::arg(rot[i] * unrotate);
    sw += w;
    sf += w * f;
    sp += w * phi;
    sff += w * f * f;
    sfp += w * f * phi;
  }
  if (!(sw > 0.0)) return coarse;
  const double var = sff - sf * sf / sw;
  if (!(var > 0.0)) return coarse;
  const double slope = (sfp - sf * sp / sw) / var;
  return coarse - slope / (2.0 * std::numbers::pi);
}

// Second training pass. The LS residual holds the SOI and receiver noise,
// which are far from white, so each FFT bin is weighted by the inverse of
// the locally smoothed residual PSD. The model is first order in a delay
// correction d (samples): A = g B - j 2 pi f (g d) B, solved jointly for g
// and g d, with B re-delayed by the running correction on each pass.
struct SpectralFit {
  cplx gain;
  double delay = 0.0;  // samples, to add to the coarse estimate
};

SpectralFit SpectralRefine(std::span<const cplx> a, std::span<const cplx> b,
                           cplx gain) {
  // Truncate rather than zero-pad: padding breaks the circular-shift model
  // for the delay term.
  const std::size_t n = PrevFastSize(a.size());
  std::vector<cplx> fa(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<cplx> fb(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(n));
  FftInPlace(fa, false);
  FftInPlace(fb, false);
  std::vector<double> f(n);
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    f[k] = BinFrequency(k, n, 1.0);
    mean += std::norm(fa[k]);
  }
  const double floor = 1e-12 * mean / static_cast<double>(n) + 1e-300;
  const std::size_t half = std::max<std::size_t>(8, n / 1024);

  SpectralFit fit{gain, 0.0};
  std::vector<double> e(n), psd(n);
  std::vector<cplx> shifted(n);
  for (int pass = 0; pass < 2; ++pass) {
    if (pass == 0) {
      shifted = fb;
    } else {
      // e^{-j 2 pi f d} by recurrence; f runs 0..1/2 then -1/2..0.
      const cplx step = std::polar(1.0, -2.0 * kPi * fit.delay / static_cast<double>(n));
      cplx rot = std::polar(1.0, -2.0 * kPi * f[(n + 1) / 2] * fit.delay);
      cplx pos(1.0, 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        if (k == (n + 1) / 2) pos = rot;
        shifted[k] = fb[k] * pos;
        pos *= step;
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      e[k] = std::norm(fa[k] - fit.gain * shifted[k]);
    }
    // Circular moving average over 2 * half + 1 bins.
    double acc = 0.0;
    for (std::size_t j = n - half; j < n; ++j) acc += e[j % n];
    for (std::size_t j = 0; j <= half; ++j) acc += e[j % n];
    for (std::size_t k = 0; k < n; ++k) {
      psd[k] = acc / static_cast<double>(2 * half + 1);
      acc += e[(k + half + 1) % n] - e[(k + n - half) % n];
    }
    // Normal equations for x = [g, g d] with regressors [B, -j 2 pi f B].
    double r11 = 0.0, r22 = 0.0;
    cplx r12{}, y1{}, y2{};
    for (std::size_t k = 0; k < n; ++k) {
      const double wt = 1.0 / (psd[k] + floor);
      const cplx x1 = shifted[k];
      const cplx x2 = cplx(0.0, -2.0 * kPi * f[k]) * shifted[k];
      r11 += wt * std::norm(x1);
      r22 += wt * std::norm(x2);
      r12 += wt * std::conj(x1) * x2;
      y1 += wt * std::conj(x1) * fa[k];
      y2 += wt * std::conj(x2) * fa[k];
    }
    const cplx det = r11 * r22 - std::norm(r12);
    if (!(std::abs(det) > 0.0)) break;
    const cplx g = (r22 * y1 - r12 * y2) / det;
    const cplx u = (r11 * y2 - std::conj(r12) * y1) / det;
    if (!(std::abs(g) > 0.0)) break;
    const double d = (u / g).real();
    // A correction beyond half a sample means the fit found no coherent
    // reference; keep the coarse estimate.
    if (!std::isfinite(d) || std::abs(fit.delay + d) > 0.5) break;
    fit.gain = g;
    fit.delay += d;
  }
  return fit;
}
}  // namespace

double NormalizedCorrelation(const BasebandWaveform& a,
                             const BasebandWaveform& b) {
  CheckCompatible(a, b);
  const Window w = CommonValid(a, b);
  const auto x = std::span<const cplx>(a.samples).subspan(w.begin, w.size());
  const auto y = std::span<const cplx>(b.samples).subspan(w.begin, w.size());
  const double denom = std::sqrt(Energy(x) * Energy(y));
  if (!(denom > 0.0)) return 0.0;
  return std::abs(InnerProduct(x, y)) / denom;
}

DelayEstimate EstimateDelayDetailed(const BasebandWaveform& r_l,
                                    const BasebandWaveform& r_h,
                                    double max_lag, double min_coherence) {
  CheckCompatible(r_l, r_h);
  if (!(max_lag >= 0.0) || max_lag >= r_l.duration() / 4.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "max_lag must be in [0, duration / 4)");
  }
  const Window win = CommonValid(r_l, r_h);
  const std::size_t len = win.size();
  const auto k_max =
      static_cast<long>(std::floor(max_lag * r_l.sample_rate + 1e-9));
  const std::size_t m = NextFastSize(len + static_cast<std::size_t>(k_max) + 1);

  std::vector<cplx> x(m);
  std::vector<cplx> y(m);
  std::copy_n(r_l.samples.begin() + static_cast<std::ptrdiff_t>(win.begin), len,
              x.begin());
  std::copy_n(r_h.samples.begin() + static_cast<std::ptrdiff_t>(win.begin), len,
              y.begin());
  const double norm = std::sqrt(Energy(x) * Energy(y));

  FftInPlace(x, false);
  FftInPlace(y, false);
  for (std::size_t i = 0; i < m; ++i) x[i] *= std::conj(y[i]);
  const std::vector<cplx> cross = x;
  FftInPlace(x, true);  // x[k] = sum_n r_l[n] conj(r_h[n - k])

  auto at = [&](long k) {
    const std::size_t idx =
        k >= 0 ? static_cast<std::size_t>(k)
               : m - static_cast<std::size_t>(-k);
    return std::abs(x[idx]);
  };

  long best = 0;
  double best_mag = -1.0;
  for (long k = -k_max; k <= k_max; ++k) {
    const double mag = at(k);
    if (mag > best_mag) {
      best_mag = mag;
      best = k;
    }
  }

  DelayEstimate est;
  est.integer_lag = best;
  est.coherence = norm > 0.0 ? best_mag / norm : 0.0;
  if (!(est.coherence >= min_coherence)) {
    throw Error(ErrorCode::kNoCoherentReference,
                "peak normalised correlation " + std::to_string(est.coherence) +
                    " below " + std::to_string(min_coherence));
  }

  double offset = 0.0;
  if (best > -k_max && best < k_max) {
    const double ym = at(best - 1);
    const double y0 = best_mag;
    const double yp = at(best + 1);
    const double denom = ym - 2.0 * y0 + yp;
    if (denom < 0.0) offset = 0.5 * (ym - yp) / denom;
  }
  const double coarse = static_cast<double>(best) + offset;
  const double fine = PhaseSlopeDelay(cross, coarse);
  est.delay = (std::abs(fine - coarse) < 1.0 ? fine : coarse) / r_l.sample_rate;
  return est;
}

double EstimateDelay(const BasebandWaveform& r_l, const BasebandWaveform& r_h,
                     double max_lag, double min_coherence) {
  return EstimateDelayDetailed(r_l, r_h, max_lag, min_coherence).delay;
}

cplx EstimateGain(const BasebandWaveform& r_l, const BasebandWaveform& r_h,
                  double delay) {
  CheckCompatible(r_l, r_h);
  return LeastSquaresGain(r_l, Align(r_h, delay));
}

BasebandWaveform Cancel(const BasebandWaveform& r_l,
                        const BasebandWaveform& r_h,
                        const CancellerTaps& taps) {
  CheckCompatible(r_l, r_h);
  if (!std::isfinite(taps.delay) || !std::isfinite(taps.gain.real()) ||
      !std::isfinite(taps.gain.imag())) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite canceller taps");
  }
  return Subtract(r_l, Align(r_h, taps.delay), taps.gain);
}

cplx RefineGainNlms(const BasebandWaveform& r_l,
                    const BasebandWaveform& aligned_reference, cplx initial,
                    double step) {
  CheckCompatible(r_l, aligned_reference);
  const Window win = CommonValid(r_l, aligned_reference);
  // Regulariser relative to the mean reference power keeps quiet samples
  // from producing huge updates.
  const double eps =
      1e-3 * MeanPower(std::span<const cplx>(aligned_reference.samples)
                           .subspan(win.begin, win.size()));
  cplx w = initial;
  for (std::size_t i = win.begin; i < win.end; ++i) {
    const cplx x = aligned_reference.samples[i];
    const cplx e = r_l.samples[i] - w * x;
    w += step * e * std::conj(x) / (std::norm(x) + eps);
  }
  return w;
}

namespace {

// Trains on the first `training_window` samples of the common valid window.
// When that covers the whole record the training residual is the cancelled
// output, and is handed back instead of being recomputed.
CancellerTaps Train(const BasebandWaveform& r_l, const BasebandWaveform& r_h,
                    const CancelOptions& options,
                    BasebandWaveform* residual_full) {
  CheckCompatible(r_l, r_h);
  const Window win = CommonValid(r_l, r_h);
  std::size_t len = win.size();
  if (options.training_window > 0) len = std::min(len, options.training_window);
  if (len == 0) {
    throw Error(ErrorCode::kDegenerateReference, "empty training window");
  }
  // Downstream steps all work on the common valid window, so only a
  // shortened training window needs slicing.
  const bool whole = len == win.size();
  BasebandWaveform l_slice;
  BasebandWaveform h_slice;
  if (!whole) {
    l_slice = Slice(r_l, win.begin, len);
    h_slice = Slice(r_h, win.begin, len);
  }
  const BasebandWaveform& l = whole ? r_l : l_slice;
  const BasebandWaveform& h = whole ? r_h : h_slice;

  CancellerTaps taps;
  // Delay and gain are estimated on the delay window when one is set, the
  // whole training window otherwise.
  const bool windowed = options.delay_window > 0 && options.delay_window < len;
  BasebandWaveform l_est;
  BasebandWaveform h_est;
  if (windowed) {
    const std::size_t first = whole ? win.begin : 0;
    l_est = Slice(l, first, options.delay_window);
    h_est = Slice(h, first, options.delay_window);
  }
  const BasebandWaveform& le = windowed ? l_est : l;
  const BasebandWaveform& he = windowed ? h_est : h;
  taps.delay = EstimateDelay(le, he, options.max_lag, options.min_coherence);
  {
    const BasebandWaveform aligned_est = Align(he, taps.delay);
    const Window ew = CommonValid(le, aligned_est);
    const SpectralFit fit = SpectralRefine(
        std::span<const cplx>(le.samples).subspan(ew.begin, ew.size()),
        std::span<const cplx>(aligned_est.samples).subspan(ew.begin, ew.size()),
        LeastSquaresGain(le, aligned_est));
    taps.gain = fit.gain;
    taps.delay += fit.delay / r_l.sample_rate;
  }
  BasebandWaveform aligned = Align(h, taps.delay);
  if (options.nlms) {
    taps.gain = RefineGainNlms(l, aligned, taps.gain, options.nlms_step);
  }
  BasebandWaveform residual = Subtract(l, std::move(aligned), taps.gain);
  const double before = MeanPower(std::span<const cplx>(l.samples).subspan(
      residual.valid_begin, residual.valid_end - residual.valid_begin));
  const double after = MeanPower(residual.valid());
  taps.residual_power_db =
      (before > 0.0 && after > 0.0) ? 10.0 * std::log10(after / before) : 0.0;
  if (whole && residual_full) *residual_full = std::move(residual);
  return taps;
}

}  // namespace

CancellerTaps TrainTaps(const BasebandWaveform& r_l,
                        const BasebandWaveform& r_h,
                        const CancelOptions& options) {
  return Train(r_l, r_h, options, nullptr);
}

CancelResult CancelAuto(const BasebandWaveform& r_l,
                        const BasebandWaveform& r_h,
                        const CancelOptions& options) {
  CancelResult result;
  BasebandWaveform residual;
  result.taps = Train(r_l, r_h, options, &residual);
  result.output = residual.samples.empty() ? Cancel(r_l, r_h, result.taps)
                                           : std::move(residual);
  result.free_parameters = 2;
  return result;
}

SeparationResult BssSeparate(const BasebandWaveform& x1,
                             const BasebandWaveform& x2,
                             const IcaSettings& settings) {
  CheckCompatible(x1, x2);
  const Window win = CommonValid(x1, x2);
  std::size_t len = win.size();
  if (settings.training_window > 0) len = std::min(len, settings.training_window);
  if (len < 16) {
    throw Error(ErrorCode::kInvalidLength, "too few samples for separation");
  }
  const cplx* p1 = x1.samples.data() + win.begin;
  const cplx* p2 = x2.samples.data() + win.begin;
  const double n = static_cast<double>(len);

  // PCA: whitening from the eigendecomposition of the sample covariance.
  Eigen::Matrix2cd cov = Eigen::Matrix2cd::Zero();
  for (std::size_t i = 0; i < len; ++i) {
    cov(0, 0) += std::norm(p1[i]);
    cov(1, 1) += std::norm(p2[i]);
    cov(0, 1) += p1[i] * std::conj(p2[i]);
  }
  cov(1, 0) = std::conj(cov(0, 1));
  cov /= n;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> eig(cov);
  const Eigen::Vector2d lambda = eig.eigenvalues();
  if (!(lambda(0) > 1e-12 * lambda(1))) {
    throw Error(ErrorCode::kInvalidArgument,
                "mixture covariance is rank deficient");
  }
  const Eigen::Matrix2cd whiten =
      lambda.cwiseSqrt().cwiseInverse().asDiagonal() *
      eig.eigenvectors().adjoint();

  std::vector<cplx> z1(len);
  std::vector<cplx> z2(len);
  for (std::size_t i = 0; i < len; ++i) {
    z1[i] = whiten(0, 0) * p1[i] + whiten(0, 1) * p2[i];
    z2[i] = whiten(1, 0) * p1[i] + whiten(1, 1) * p2[i];
  }

  // ICA: fixed point of E{z conj(y) |y|^2} - 2 w, y = w^H z.
  SeparationResult result;
  result.free_parameters = 4;
  Eigen::Vector2cd w(1.0, 0.5);
  w.normalize();
  for (int it = 1; it <= settings.max_iterations; ++it) {
    const cplx w0c = std::conj(w(0));
    const cplx w1c = std::conj(w(1));
    cplx g0{};
    cplx g1{};
    for (std::size_t i = 0; i < len; ++i) {
      const cplx y = w0c * z1[i] + w1c * z2[i];
      const cplx f = std::conj(y) * std::norm(y);
      g0 += z1[i] * f;
      g1 += z2[i] * f;
    }
    Eigen::Vector2cd next(g0 / n - 2.0 * w(0), g1 / n - 2.0 * w(1));
    next.normalize();
    const double change = std::abs(1.0 - std::abs(next.dot(w)));
    w = next;
    result.iterations = it;
    if (change < settings.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.not_converged = !result.converged;

  const Eigen::Vector2cd w2(-std::conj(w(1)), std::conj(w(0)));
  Eigen::Matrix2cd unmix;
  unmix.row(0) = w.adjoint();
  unmix.row(1) = w2.adjoint();
  result.demix = unmix * whiten;

  for (int r = 0; r < 2; ++r) {
    BasebandWaveform out = x1;
    out.valid_begin = win.begin;
    out.valid_end = win.end;
    std::fill(out.samples.begin(), out.samples.end(), cplx{});
    for (std::size_t i = win.begin; i < win.end; ++i) {
      out.samples[i] = result.demix(r, 0) * x1.samples[i] +
                       result.demix(r, 1) * x2.samples[i];
    }
    result.excess_kurtosis.push_back(ExcessKurtosis(
        std::span<const cplx>(out.samples).subspan(win.begin, len)));
    result.outputs.push_back(std::move(out));
  }
  result.unseparable = std::abs(result.excess_kurtosis[0]) < 0.1 &&
                       std::abs(result.excess_kurtosis[1]) < 0.1;
  return result;
}

SeparationResult ResolvePermutation(SeparationResult result,
                                    const BasebandWaveform& reference) {
  if (result.outputs.size() != 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "permutation needs a two-output separation");
  }
  const double c0 = NormalizedCorrelation(result.outputs[0], reference);
  const double c1 = NormalizedCorrelation(result.outputs[1], reference);
  if (c0 < 0.2 && c1 < 0.2) {
    throw Error(ErrorCode::kAmbiguousLabeling,
                "reference correlates with neither output (" +
                    std::to_string(c0) + ", " + std::to_string(c1) + ")");
  }
  if (c0 > c1) {
    std::swap(result.outputs[0], result.outputs[1]);
    result.demix.row(0).swap(result.demix.row(1));
    if (result.excess_kurtosis.size() == 2) {
      std::swap(result.excess_kurtosis[0], result.excess_kurtosis[1]);
    }
  }
  BasebandWaveform& soi = result.outputs[0];
  const double p = MeanPower(soi.valid());
  if (p > 0.0) {
    const double g = 1.0 / std::sqrt(p);
    for (cplx& v : soi.samples) v *= g;
    result.demix.row(0) *= g;
  }
  result.labelled = true;
  return result;
}

}  // namespace rfic
