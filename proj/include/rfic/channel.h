#ifndef RFIC_CHANNEL_H_
#define RFIC_CHANNEL_H_

#include <cstdint>
#include <vector>

#include "rfic/waveform.h"

namespace rfic {

// Front-end frequency response, evaluated at absolute RF frequency
// (center_freq + baseband offset).
struct ModulatorResponse {
  enum class Kind { kFlat, kButterworthLowpass };

  Kind kind = Kind::kFlat;
  double f3db = 0.0;
  int order = 0;

  static ModulatorResponse Flat() { return {}; }
  static ModulatorResponse Butterworth(double f3db, int order) {
    return {Kind::kButterworthLowpass, f3db, order};
  }

  // Analog Butterworth H(j 2 pi f), normalised so H(0) = 1.
  cplx Evaluate(double rf_hz) const;
  void Validate() const;
};

struct PathModel {
  cplx gain{1.0, 0.0};
  double delay = 0.0;       // seconds, acts on the envelope only
  ModulatorResponse response;
  double noise_psd = 0.0;   // complex AWGN power per Hz

  void Validate() const;
};

// r_L = a11 * soi + a12 * interference; r_H = a21 * soi + a22 * interference.
// In reference mode a21 must have exactly zero gain.
struct MixingScenario {
  PathModel a11;
  PathModel a12;
  PathModel a21;
  PathModel a22;
  bool reference_mode = true;
  std::uint64_t seed = 0;

  void Validate() const;
};

inline constexpr int kInterpolatorTaps = 64;
inline constexpr double kInterpolatorKaiserBeta = 8.0;

// Taps for a delay of `frac` in [0, 1) samples, applied as
// y[n] = sum_m taps[m + 31] * x[n - m], m = -31..32. Unit DC gain.
std::vector<double> FractionalDelayTaps(double frac);

// Delays the envelope by tau seconds (negative advances). Integer part is a
// sample shift; the fractional part uses the 64-tap Kaiser windowed sinc.
// Samples the filter cannot fully support are zeroed and removed from the
// valid window. Throws kDelayTooLarge when |tau| >= duration.
BasebandWaveform FractionalDelay(const BasebandWaveform& w, double tau);

// Applies the response as a circular frequency-domain filter.
BasebandWaveform ApplyResponse(const BasebandWaveform& w,
                               const ModulatorResponse& response);

// gain * response(fractional_delay(w, delay)), without noise.
BasebandWaveform ApplyPathNoiseless(const BasebandWaveform& w,
                                    const PathModel& p);

// Complex AWGN with variance noise_psd * sample_rate; empty (all zero) when
// noise_psd == 0. Valid window matches `like`.
BasebandWaveform PathNoise(const BasebandWaveform& like, double noise_psd,
                           std::uint64_t seed);

BasebandWaveform ApplyPath(const BasebandWaveform& w, const PathModel& p,
                           std::uint64_t noise_seed);

// Per-path contributions, kept separate so experiments can push each one
// through a fixed separator and measure residuals exactly.
struct MixComponents {
  BasebandWaveform soi_l, int_l, noise_l;
  BasebandWaveform soi_h, int_h, noise_h;
};

struct MixOutput {
  BasebandWaveform r_l;
  BasebandWaveform r_h;
};

MixComponents MixDetailed(const BasebandWaveform& soi,
                          const BasebandWaveform& interference,
                          const MixingScenario& scenario);
MixOutput Sum(const MixComponents& c);

MixOutput Mix(const BasebandWaveform& soi,
              const BasebandWaveform& interference,
              const MixingScenario& scenario);

// Element-wise a + b (+ c); valid window is the intersection.
BasebandWaveform Add(const BasebandWaveform& a, const BasebandWaveform& b);

}  // namespace rfic

#endif  // RFIC_CHANNEL_H_
