#include "rfic/channel.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <string>

#include "rfic/error.h"
#include "rfic/fft.h"
#include "rfic/random.h"

namespace rfic {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kHalfTaps = kInterpolatorTaps / 2;  // taps span m = -31..32

void ZeroOutsideValid(BasebandWaveform& w) {
  std::fill(w.samples.begin(), w.samples.begin() + w.valid_begin, cplx{});
  std::fill(w.samples.begin() + w.valid_end, w.samples.end(), cplx{});
}

std::size_t ClampIndex(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  return std::min(static_cast<std::size_t>(i), n);
}

// Register-tiled FIR over interleaved re/im doubles: each tile of outputs
// stays in registers while all taps are accumulated. Cloned for AVX2 with
// runtime dispatch. src points at x[-shift + 31], so taps[j] for output
// sample i reads src[2 (i - j)].
__attribute__((target_clones("avx2", "default")))
void InterpolateBlocks(const double* taps, const double* src, double* y,
                       std::size_t begin, std::size_t end) {
  using V4 = double __attribute__((vector_size(32)));
  constexpr std::size_t kTile = 16;  // doubles, i.e. 8 complex samples
  std::size_t k = 2 * begin;
  const std::size_t k_end = 2 * end;
  for (; k + kTile <= k_end; k += kTile) {
    V4 a0 = {}, a1 = {}, a2 = {}, a3 = {};
    const double* xk = src + static_cast<std::ptrdiff_t>(k);
    for (int j = 0; j < kInterpolatorTaps; ++j) {
      const double h = taps[j];
      V4 x0, x1, x2, x3;
      std::memcpy(&x0, xk - 2 * j, sizeof(V4));
      std::memcpy(&x1, xk - 2 * j + 4, sizeof(V4));
      std::memcpy(&x2, xk - 2 * j + 8, sizeof(V4));
      std::memcpy(&x3, xk - 2 * j + 12, sizeof(V4));
      a0 += h * x0;
      a1 += h * x1;
      a2 += h * x2;
      a3 += h * x3;
    }
    std::memcpy(y + k, &a0, sizeof(a0));
    std::memcpy(y + k + 4, &a1, sizeof(a1));
    std::memcpy(y + k + 8, &a2, sizeof(a2));
    std::memcpy(y + k + 12, &a3, sizeof(a3));
  }
  for (; k < k_end; ++k) {
    double acc = 0.0;
    for (int j = 0; j < kInterpolatorTaps; ++j) {
      acc += taps[j] * src[static_cast<std::ptrdiff_t>(k) - 2 * j];
    }
    y[k] = acc;
  }
}

}  // namespace

cplx ModulatorResponse::Evaluate(double rf_hz) const {
  if (kind == Kind::kFlat) return {1.0, 0.0};
  // H(s) = prod(-p_k) / prod(s - p_k), poles on the unit circle in the left
  // half plane, s normalised to the 3 dB frequency.
  const cplx s(0.0, rf_hz / f3db);
  cplx num(1.0, 0.0);
  cplx den(1.0, 0.0);
  for (int k = 1; k <= order; ++k) {
    const cplx pole =
        std::polar(1.0, kPi * (2.0 * k + order - 1.0) / (2.0 * order));
    num *= -pole;
    den *= (s - pole);
  }
  return num / den;
}

void ModulatorResponse::Validate() const {
  if (kind == Kind::kFlat) return;
  if (!(f3db > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "response f3db must be > 0");
  }
  if (order < 1) {
    throw Error(ErrorCode::kInvalidArgument, "response order must be >= 1");
  }
}

void PathModel::Validate() const {
  if (!(delay >= 0.0) || !std::isfinite(delay)) {
    throw Error(ErrorCode::kInvalidArgument, "path delay must be >= 0");
  }
  if (!(noise_psd >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "noise_psd must be >= 0");
  }
  if (!std::isfinite(gain.real()) || !std::isfinite(gain.imag())) {
    throw Error(ErrorCode::kInvalidArgument, "path gain must be finite");
  }
  response.Validate();
}

void MixingScenario::Validate() const {
  a11.Validate();
  a12.Validate();
  a21.Validate();
  a22.Validate();
  if (reference_mode && a21.gain != cplx(0.0, 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "reference mode requires a21 gain == 0");
  }
}

std::vector<double> FractionalDelayTaps(double frac) {
  std::vector<double> taps(kInterpolatorTaps);
  const double i0_beta = std::cyl_bessel_i(0.0, kInterpolatorKaiserBeta);
  // Standard N-point Kaiser window over the tap span, not shifted with frac.
  const double half_width = 0.5 * (kInterpolatorTaps - 1);
  double sum = 0.0;
  for (int i = 0; i < kInterpolatorTaps; ++i) {
    const int m = i - (kHalfTaps - 1);
    const double t = m - frac;
    const double sinc =
        std::abs(t) < 1e-12 ? 1.0 : std::sin(kPi * t) / (kPi * t);
    const double r = (i - half_width) / half_width;
    const double window =
        std::cyl_bessel_i(0.0, kInterpolatorKaiserBeta *
                                   std::sqrt(std::max(0.0, 1.0 - r * r))) /
        i0_beta;
    taps[static_cast<std::size_t>(i)] = sinc * window;
    sum += taps[static_cast<std::size_t>(i)];
  }
  for (double& h : taps) h /= sum;
  return taps;
}

BasebandWaveform FractionalDelay(const BasebandWaveform& w, double tau) {
  w.Validate();
  if (!std::isfinite(tau) || std::abs(tau) >= w.duration()) {
    throw Error(ErrorCode::kDelayTooLarge,
                "delay " + std::to_string(tau) + " s exceeds record duration");
  }
  const std::size_t n = w.size();
  const double d = tau * w.sample_rate;
  auto shift = static_cast<std::ptrdiff_t>(std::floor(d));
  double frac = d - static_cast<double>(shift);
  // Snap delays within rounding noise of an integer to a pure shift.
  if (frac < 1e-9) {
    frac = 0.0;
  } else if (frac > 1.0 - 1e-9) {
    frac = 0.0;
    ++shift;
  }

  BasebandWaveform out;
  out.sample_rate = w.sample_rate;
  out.center_freq = w.center_freq;
  out.samples.assign(n, cplx{});

  const auto vb = static_cast<std::ptrdiff_t>(w.valid_begin);
  const auto ve = static_cast<std::ptrdiff_t>(w.valid_end);
  if (frac == 0.0) {
    out.valid_begin = ClampIndex(vb + shift, n);
    out.valid_end = std::max(out.valid_begin, ClampIndex(ve + shift, n));
    for (std::size_t i = out.valid_begin; i < out.valid_end; ++i) {
      out.samples[i] = w.samples[static_cast<std::size_t>(
          static_cast<std::ptrdiff_t>(i) - shift)];
    }
    return out;
  }

  // y[i] needs x[i - shift - m] for m = -31..32.
  out.valid_begin = ClampIndex(vb + shift + kHalfTaps, n);
  out.valid_end =
      std::max(out.valid_begin, ClampIndex(ve + shift - (kHalfTaps - 1), n));
  const auto taps = FractionalDelayTaps(frac);
  // y[i] = sum_j taps[j] x[i - shift + 31 - j] over interleaved re/im doubles.
  const double* x = reinterpret_cast<const double*>(w.samples.data());
  double* y = reinterpret_cast<double*>(out.samples.data());
  InterpolateBlocks(taps.data(), x + 2 * (kHalfTaps - 1 - shift),
                    y, out.valid_begin, out.valid_end);
  return out;
}

BasebandWaveform ApplyResponse(const BasebandWaveform& w,
                               const ModulatorResponse& response) {
  if (response.kind == ModulatorResponse::Kind::kFlat) return w;
  response.Validate();
  BasebandWaveform out = w;
  std::vector<cplx>& x = out.samples;
  FftInPlace(x, false);
  const std::size_t n = x.size();
  for (std::size_t k = 0; k < n; ++k) {
    x[k] *= response.Evaluate(w.center_freq + BinFrequency(k, n, w.sample_rate));
  }
  FftInPlace(x, true);
  ZeroOutsideValid(out);
  return out;
}

BasebandWaveform ApplyPathNoiseless(const BasebandWaveform& w,
                                    const PathModel& p) {
  p.Validate();
  if (p.delay >= w.duration()) {
    throw Error(ErrorCode::kDelayTooLarge,
                "path delay exceeds waveform duration");
  }
  BasebandWaveform out = p.delay > 0.0 ? FractionalDelay(w, p.delay) : w;
  out = ApplyResponse(out, p.response);
  for (cplx& v : out.samples) v *= p.gain;
  return out;
}

BasebandWaveform PathNoise(const BasebandWaveform& like, double noise_psd,
                           std::uint64_t seed) {
  BasebandWaveform out = like;
  std::fill(out.samples.begin(), out.samples.end(), cplx{});
  if (noise_psd <= 0.0) return out;
  Rng rng(seed);
  std::normal_distribution<double> gauss(
      0.0, std::sqrt(noise_psd * like.sample_rate / 2.0));
  for (cplx& v : out.samples) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    v = cplx(re, im);
  }
  return out;
}

BasebandWaveform ApplyPath(const BasebandWaveform& w, const PathModel& p,
                           std::uint64_t noise_seed) {
  BasebandWaveform out = ApplyPathNoiseless(w, p);
  if (p.noise_psd > 0.0) out = Add(out, PathNoise(out, p.noise_psd, noise_seed));
  return out;
}

BasebandWaveform Add(const BasebandWaveform& a, const BasebandWaveform& b) {
  if (a.sample_rate != b.sample_rate) {
    throw Error(ErrorCode::kRateMismatch, "cannot add waveforms at " +
                                              std::to_string(a.sample_rate) +
                                              " and " +
                                              std::to_string(b.sample_rate) +
                                              " Hz");
  }
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInvalidLength, "cannot add waveforms of length " +
                                               std::to_string(a.size()) +
                                               " and " +
                                               std::to_string(b.size()));
  }
  BasebandWaveform out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += b.samples[i];
  BasebandWaveform bb = b;
  IntersectValid(out, bb);
  return out;
}

MixComponents MixDetailed(const BasebandWaveform& soi,
                          const BasebandWaveform& interference,
                          const MixingScenario& scenario) {
  soi.Validate();
  interference.Validate();
  scenario.Validate();
  if (soi.sample_rate != interference.sample_rate) {
    throw Error(ErrorCode::kRateMismatch,
                "soi and interference sample rates differ");
  }
  if (soi.size() != interference.size()) {
    throw Error(ErrorCode::kInvalidLength,
                "soi and interference lengths differ");
  }
  MixComponents c;
  c.soi_l = ApplyPathNoiseless(soi, scenario.a11);
  c.int_l = ApplyPathNoiseless(interference, scenario.a12);
  c.int_h = ApplyPathNoiseless(interference, scenario.a22);
  if (scenario.reference_mode) {
    // r_H carries no SOI at all, not merely a zero-gain copy.
    c.soi_h = soi;
    std::fill(c.soi_h.samples.begin(), c.soi_h.samples.end(), cplx{});
  } else {
    c.soi_h = ApplyPathNoiseless(soi, scenario.a21);
  }
  // Each path draws its noise from its own sub-seed.
  c.noise_l = Add(PathNoise(soi, scenario.a11.noise_psd, DeriveSeed(scenario.seed, 11)),
                  PathNoise(soi, scenario.a12.noise_psd, DeriveSeed(scenario.seed, 12)));
  c.noise_h = Add(PathNoise(soi, scenario.a21.noise_psd, DeriveSeed(scenario.seed, 21)),
                  PathNoise(soi, scenario.a22.noise_psd, DeriveSeed(scenario.seed, 22)));
  return c;
}

MixOutput Sum(const MixComponents& c) {
  return {Add(Add(c.soi_l, c.int_l), c.noise_l),
          Add(Add(c.soi_h, c.int_h), c.noise_h)};
}

MixOutput Mix(const BasebandWaveform& soi,
              const BasebandWaveform& interference,
              const MixingScenario& scenario) {
  return Sum(MixDetailed(soi, interference, scenario));
}

}  // namespace rfic
