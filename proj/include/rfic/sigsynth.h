#ifndef RFIC_SIGSYNTH_H_
#define RFIC_SIGSYNTH_H_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "rfic/waveform.h"

namespace rfic {

enum class Constellation { kQpsk, kQam16, kQam64, kQam256 };

int BitsPerSymbol(Constellation format);
std::string_view ConstellationName(Constellation format);
// Accepts "qpsk", "qam16"/"16qam", ... (case-insensitive).
Constellation ParseConstellation(std::string_view name);

// Points indexed by their bit label (first bit = MSB). Square QAM with the
// first half of the label Gray-coding the in-phase level and the second half
// the quadrature level; PAM level = (L - 1) - 2 * gray_decode(bits), so an
// all-zero label is the upper-right corner. Unit mean power.
const std::vector<cplx>& ConstellationPoints(Constellation format);

// Index of the nearest constellation point (hard decision).
std::size_t Slice(cplx point, Constellation format);

struct SymbolStream {
  std::vector<cplx> symbols;
  Constellation format = Constellation::kQpsk;
  double symbol_rate = 0.0;
};

// Throws kInvalidLength when bits.size() is not a multiple of BitsPerSymbol.
SymbolStream MapSymbols(std::span<const std::uint8_t> bits,
                        Constellation format, double symbol_rate);

std::vector<std::uint8_t> RandomBits(std::size_t n, std::uint64_t seed);
SymbolStream RandomSymbols(std::size_t n_symbols, Constellation format,
                           double symbol_rate, std::uint64_t seed);

struct PulseShape {
  int sps = 40;
  double rolloff = 0.2;
  int span_symbols = 64;

  void Validate() const;
};

// Root-raised-cosine taps, span_symbols * sps + 1 long, unit energy.
std::vector<double> RrcTaps(int sps, double rolloff, int span_symbols);

// RRC pulse-shaped waveform of length (n_symbols + span) * sps, scaled to
// unit mean power. Symbol k peaks at sample k * sps + span * sps / 2.
BasebandWaveform GenerateSoi(const SymbolStream& stream,
                             const PulseShape& pulse,
                             double center_freq = 0.0);

struct FmNoiseSpec {
  double deviation_pp = 80e6;   // Hz, peak-to-peak of the instantaneous freq
  double mod_noise_bw = 10e6;   // Hz, bandwidth of the Gaussian modulating process
  double power = 1.0;           // mean |s|^2
  std::uint64_t seed = 0;

  void Validate() const;
};

// Constant-envelope FM of lowpass Gaussian noise. The modulating process is
// scaled so its realised peak-to-peak over the record equals deviation_pp.
BasebandWaveform GenerateFmInterference(const FmNoiseSpec& spec,
                                        std::size_t n_samples,
                                        double sample_rate,
                                        double center_freq = 0.0);

// exp(j 2 pi f n / fs) scaled to the given power.
BasebandWaveform GenerateTone(double offset_hz, double power,
                              std::size_t n_samples, double sample_rate,
                              double center_freq = 0.0);

// Circular complex white Gaussian noise of the given mean power.
BasebandWaveform GenerateGaussianNoise(double power, std::size_t n_samples,
                                       double sample_rate, std::uint64_t seed,
                                       double center_freq = 0.0);

// Kaiser-windowed sinc lowpass, `n_taps` long, cutoff as a fraction of fs,
// unit DC gain.
std::vector<double> LowpassTaps(double cutoff_fraction, int n_taps,
                                double kaiser_beta);

}  // namespace rfic

#endif  // RFIC_SIGSYNTH_H_
