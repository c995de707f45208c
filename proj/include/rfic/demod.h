#ifndef RFIC_DEMOD_H_
#define RFIC_DEMOD_H_

#include <cstddef>
#include <utility>

#include "rfic/sigsynth.h"
#include "rfic/waveform.h"

namespace rfic {

struct DemodConfig {
  PulseShape pulse;          // must mirror the transmitter
  double symbol_rate = 5e6;
  Constellation format = Constellation::kQpsk;
  // Extra delay (samples) of the received SOI relative to the transmitted
  // waveform; ground truth from the scenario.
  double timing_offset = 0.0;
};

// Number of symbols Demodulate returns for an input of `n_samples`:
// floor((n_samples - span * sps) / sps).
std::size_t DemodSymbolCount(std::size_t n_samples, const PulseShape& pulse);

// RRC matched filter evaluated at the symbol instants
// timing_offset + span * sps / 2 + k * sps. Symbols are not normalised.
// Throws kTooShort when no whole symbol fits.
SymbolStream Demodulate(const BasebandWaveform& w, const DemodConfig& cfg);

// Symbols [first, last) whose matched-filter support lies entirely inside
// the waveform's valid window.
std::pair<std::size_t, std::size_t> ValidSymbolRange(const BasebandWaveform& w,
                                                     const DemodConfig& cfg);

// Data-aided carrier-frequency correction: coarse estimate from the lag-one
// product of rx * conj(tx), refined by a least-squares line fit to the
// unwrapped residual phase. Returns the corrected stream; the estimate in Hz
// is written to `estimated_hz` when non-null.
SymbolStream CorrectFrequencyOffset(const SymbolStream& rx,
                                    const SymbolStream& tx,
                                    double* estimated_hz = nullptr);

// Multiplies the envelope by exp(j 2 pi f t).
BasebandWaveform ApplyFrequencyOffset(const BasebandWaveform& w,
                                      double offset_hz);

}  // namespace rfic

#endif  // RFIC_DEMOD_H_
