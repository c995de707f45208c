#include "rfic/demod.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rfic/channel.h"
#include "rfic/error.h"

namespace rfic {
namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

std::size_t DemodSymbolCount(std::size_t n_samples, const PulseShape& pulse) {
  const auto span = static_cast<std::size_t>(pulse.span_symbols * pulse.sps);
  if (n_samples <= span) return 0;
  return (n_samples - span) / static_cast<std::size_t>(pulse.sps);
}

SymbolStream Demodulate(const BasebandWaveform& w, const DemodConfig& cfg) {
  cfg.pulse.Validate();
  w.Validate();
  const std::size_t count = DemodSymbolCount(w.size(), cfg.pulse);
  if (count == 0) {
    throw Error(ErrorCode::kTooShort,
                "waveform of " + std::to_string(w.size()) +
                    " samples is shorter than the matched filter span");
  }
  // Remove the fractional part of the timing offset by interpolation so the
  // matched filter can run on integer sample instants.
  const double whole = std::floor(cfg.timing_offset);
  const double frac = cfg.timing_offset - whole;
  const BasebandWaveform src =
      frac > 1e-9 ? FractionalDelay(w, -frac / w.sample_rate) : w;

  const auto taps =
      RrcTaps(cfg.pulse.sps, cfg.pulse.rolloff, cfg.pulse.span_symbols);
  const long half = static_cast<long>(taps.size() / 2);
  const long n = static_cast<long>(src.size());
  SymbolStream out;
  out.format = cfg.format;
  out.symbol_rate = cfg.symbol_rate;
  out.symbols.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    const long center = static_cast<long>(whole) + half +
                        static_cast<long>(k) * cfg.pulse.sps;
    const long first = center - half;
    const long j0 = std::max(0L, -first);
    const long j1 = std::min(static_cast<long>(taps.size()), n - first);
    double re = 0.0;
    double im = 0.0;
    for (long j = j0; j < j1; ++j) {
      const cplx& x = src.samples[static_cast<std::size_t>(first + j)];
      re += taps[static_cast<std::size_t>(j)] * x.real();
      im += taps[static_cast<std::size_t>(j)] * x.imag();
    }
    out.symbols[k] = cplx(re, im);
  }
  return out;
}

std::pair<std::size_t, std::size_t> ValidSymbolRange(const BasebandWaveform& w,
                                                     const DemodConfig& cfg) {
  const std::size_t count = DemodSymbolCount(w.size(), cfg.pulse);
  const long sps = cfg.pulse.sps;
  const long span = static_cast<long>(cfg.pulse.span_symbols) * sps;
  // Fractional timing correction consumes 32 more samples on each side.
  const long guard =
      (cfg.timing_offset - std::floor(cfg.timing_offset)) > 1e-9 ? 32 : 0;
  const long offset = static_cast<long>(std::floor(cfg.timing_offset));
  std::size_t first = count;
  std::size_t last = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const long lo = offset + static_cast<long>(k) * sps - guard;
    const long hi = lo + span + 2 * guard;  // inclusive
    if (lo >= static_cast<long>(w.valid_begin) &&
        hi < static_cast<long>(w.valid_end)) {
      first = std::min(first, k);
      last = k + 1;
    }
  }
  if (first >= last) return {0, 0};
  return {first, last};
}

SymbolStream CorrectFrequencyOffset(const SymbolStream& rx,
                                    const SymbolStream& tx,
                                    double* estimated_hz) {
  if (rx.symbols.size() != tx.symbols.size() || rx.symbols.size() < 2) {
    throw Error(ErrorCode::kInvalidLength,
                "frequency fit needs equal streams of >= 2 symbols");
  }
  const std::size_t n = rx.symbols.size();
  std::vector<cplx> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = rx.symbols[i] * std::conj(tx.symbols[i]);
  }
  cplx lag1{};
  for (std::size_t i = 1; i < n; ++i) lag1 += z[i] * std::conj(z[i - 1]);
  const double coarse = std::arg(lag1);  // rad / symbol

  // Least-squares slope of the residual phase after the coarse derotation.
  double sum_t = 0.0, sum_p = 0.0, sum_tt = 0.0, sum_tp = 0.0;
  double prev = 0.0;
  double unwrap = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    const double ph =
        std::arg(z[i] * std::polar(1.0, -coarse * t));
    if (i > 0) {
      double d = ph - prev;
      d = std::remainder(d, kTwoPi);
      unwrap += d;
    } else {
      unwrap = ph;
    }
    prev = ph;
    sum_t += t;
    sum_p += unwrap;
    sum_tt += t * t;
    sum_tp += t * unwrap;
  }
  const double nn = static_cast<double>(n);
  const double slope =
      (nn * sum_tp - sum_t * sum_p) / (nn * sum_tt - sum_t * sum_t);
  const double rad_per_symbol = coarse + slope;

  SymbolStream out = rx;
  for (std::size_t i = 0; i < n; ++i) {
    out.symbols[i] *= std::polar(1.0, -rad_per_symbol * static_cast<double>(i));
  }
  if (estimated_hz) *estimated_hz = rad_per_symbol * rx.symbol_rate / kTwoPi;
  return out;
}

BasebandWaveform ApplyFrequencyOffset(const BasebandWaveform& w,
                                      double offset_hz) {
  BasebandWaveform out = w;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double cycles =
        std::remainder(offset_hz * static_cast<double>(i) / w.sample_rate, 1.0);
    out.samples[i] *= std::polar(1.0, kTwoPi * cycles);
  }
  return out;
}

}  // namespace rfic
