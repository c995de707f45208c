#include "rfic/sigsynth.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rfic/error.h"
#include "rfic/random.h"

namespace rfic {
namespace {

constexpr double kPi = std::numbers::pi;

int GrayDecode(int g) {
  int b = 0;
  for (; g; g >>= 1) b ^= g;
  return b;
}

std::vector<cplx> BuildSquareQam(int bits_per_symbol) {
  const int half = bits_per_symbol / 2;
  const int levels = 1 << half;
  const double scale =
      std::sqrt(2.0 * (static_cast<double>(levels) * levels - 1.0) / 3.0);
  std::vector<cplx> points(std::size_t{1} << bits_per_symbol);
  for (std::size_t label = 0; label < points.size(); ++label) {
    const int i_bits = static_cast<int>(label) >> half;
    const int q_bits = static_cast<int>(label) & (levels - 1);
    const double i_level = (levels - 1) - 2.0 * GrayDecode(i_bits);
    const double q_level = (levels - 1) - 2.0 * GrayDecode(q_bits);
    points[label] = cplx(i_level, q_level) / scale;
  }
  return points;
}

double Sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

}  // namespace

int BitsPerSymbol(Constellation format) {
  switch (format) {
    case Constellation::kQpsk:
      return 2;
    case Constellation::kQam16:
      return 4;
    case Constellation::kQam64:
      return 6;
    case Constellation::kQam256:
      return 8;
  }
  return 0;
}

std::string_view ConstellationName(Constellation format) {
  switch (format) {
    case Constellation::kQpsk:
      return "qpsk";
    case Constellation::kQam16:
      return "qam16";
    case Constellation::kQam64:
      return "qam64";
    case Constellation::kQam256:
      return "qam256";
  }
  return "unknown";
}

Constellation ParseConstellation(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s == "qpsk" || s == "4qam" || s == "qam4") return Constellation::kQpsk;
  if (s == "qam16" || s == "16qam") return Constellation::kQam16;
  if (s == "qam64" || s == "64qam") return Constellation::kQam64;
  if (s == "qam256" || s == "256qam") return Constellation::kQam256;
  throw Error(ErrorCode::kConfigError,
              "unknown constellation '" + std::string(name) + "'");
}

const std::vector<cplx>& ConstellationPoints(Constellation format) {
  static const std::vector<cplx> qpsk = BuildSquareQam(2);
  static const std::vector<cplx> qam16 = BuildSquareQam(4);
  static const std::vector<cplx> qam64 = BuildSquareQam(6);
  static const std::vector<cplx> qam256 = BuildSquareQam(8);
  switch (format) {
    case Constellation::kQpsk:
      return qpsk;
    case Constellation::kQam16:
      return qam16;
    case Constellation::kQam64:
      return qam64;
    case Constellation::kQam256:
      return qam256;
  }
  return qpsk;
}

std::size_t Slice(cplx point, Constellation format) {
  const auto& points = ConstellationPoints(format);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = std::norm(point - points[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

SymbolStream MapSymbols(std::span<const std::uint8_t> bits,
                        Constellation format, double symbol_rate) {
  const auto k = static_cast<std::size_t>(BitsPerSymbol(format));
  if (bits.size() % k != 0) {
    throw Error(ErrorCode::kInvalidLength,
                std::to_string(bits.size()) + " bits is not a multiple of " +
                    std::to_string(k));
  }
  const auto& points = ConstellationPoints(format);
  SymbolStream out;
  out.format = format;
  out.symbol_rate = symbol_rate;
  out.symbols.reserve(bits.size() / k);
  for (std::size_t i = 0; i < bits.size(); i += k) {
    std::size_t label = 0;
    for (std::size_t j = 0; j < k; ++j) label = (label << 1) | (bits[i + j] & 1u);
    out.symbols.push_back(points[label]);
  }
  return out;
}

std::vector<std::uint8_t> RandomBits(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> bits(n);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 64 == 0) word = rng();
    bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
  }
  return bits;
}

SymbolStream RandomSymbols(std::size_t n_symbols, Constellation format,
                           double symbol_rate, std::uint64_t seed) {
  const auto bits = RandomBits(
      n_symbols * static_cast<std::size_t>(BitsPerSymbol(format)), seed);
  return MapSymbols(bits, format, symbol_rate);
}

void PulseShape::Validate() const {
  if (sps < 2) {
    throw Error(ErrorCode::kAliasedConfig,
                "samples per symbol must be >= 2, got " + std::to_string(sps));
  }
  if (!(rolloff > 0.0 && rolloff <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rolloff must be in (0, 1]");
  }
  if (span_symbols < 4 || span_symbols % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "span_symbols must be even and >= 4");
  }
}

std::vector<double> RrcTaps(int sps, double rolloff, int span_symbols) {
  const int half = span_symbols * sps / 2;
  std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
  const double b = rolloff;
  for (int i = -half; i <= half; ++i) {
    const double t = static_cast<double>(i) / sps;
    double h;
    if (i == 0) {
      h = 1.0 - b + 4.0 * b / kPi;
    } else if (std::abs(std::abs(4.0 * b * t) - 1.0) < 1e-9) {
      h = b / std::sqrt(2.0) *
          ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * b)) +
           (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * b)));
    } else {
      h = (std::sin(kPi * t * (1.0 - b)) +
           4.0 * b * t * std::cos(kPi * t * (1.0 + b))) /
          (kPi * t * (1.0 - (4.0 * b * t) * (4.0 * b * t)));
    }
    taps[static_cast<std::size_t>(i + half)] = h;
  }
  double energy = 0.0;
  for (double h : taps) energy += h * h;
  const double norm = 1.0 / std::sqrt(energy);
  for (double& h : taps) h *= norm;
  return taps;
}

BasebandWaveform GenerateSoi(const SymbolStream& stream,
                             const PulseShape& pulse, double center_freq) {
  pulse.Validate();
  if (stream.symbols.empty()) {
    throw Error(ErrorCode::kInvalidLength, "empty symbol stream");
  }
  if (!(stream.symbol_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "symbol_rate must be positive");
  }
  const auto taps = RrcTaps(pulse.sps, pulse.rolloff, pulse.span_symbols);
  const std::size_t sps = static_cast<std::size_t>(pulse.sps);
  const std::size_t n_out =
      (stream.symbols.size() + static_cast<std::size_t>(pulse.span_symbols)) *
      sps;
  std::vector<cplx> out(n_out);
  for (std::size_t k = 0; k < stream.symbols.size(); ++k) {
    const cplx s = stream.symbols[k];
    cplx* dst = out.data() + k * sps;
    for (std::size_t j = 0; j < taps.size(); ++j) dst[j] += s * taps[j];
  }
  const double p = MeanPower(out);
  if (p > 0.0) {
    const double g = 1.0 / std::sqrt(p);
    for (cplx& v : out) v *= g;
  }
  return BasebandWaveform(std::move(out), stream.symbol_rate * pulse.sps,
                          center_freq);
}

void FmNoiseSpec::Validate() const {
  if (!(deviation_pp >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "deviation_pp must be >= 0");
  }
  if (!(mod_noise_bw > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mod_noise_bw must be > 0");
  }
  if (!(power > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "power must be > 0");
  }
}

std::vector<double> LowpassTaps(double cutoff_fraction, int n_taps,
                                double kaiser_beta) {
  std::vector<double> taps(static_cast<std::size_t>(n_taps));
  const double center = 0.5 * (n_taps - 1);
  const double i0_beta = std::cyl_bessel_i(0.0, kaiser_beta);
  double sum = 0.0;
  for (int i = 0; i < n_taps; ++i) {
    const double t = i - center;
    const double r = center > 0 ? t / center : 0.0;
    const double w =
        std::cyl_bessel_i(0.0, kaiser_beta * std::sqrt(std::max(0.0, 1 - r * r))) /
        i0_beta;
    const double h = 2.0 * cutoff_fraction * Sinc(2.0 * cutoff_fraction * t) * w;
    taps[static_cast<std::size_t>(i)] = h;
    sum += h;
  }
  for (double& h : taps) h /= sum;
  return taps;
}

BasebandWaveform GenerateFmInterference(const FmNoiseSpec& spec,
                                        std::size_t n_samples,
                                        double sample_rate,
                                        double center_freq) {
  spec.Validate();
  if (n_samples == 0) {
    throw Error(ErrorCode::kInvalidLength, "n_samples must be positive");
  }
  if (!(sample_rate > 2.0 * (spec.deviation_pp + spec.mod_noise_bw))) {
    throw Error(ErrorCode::kAliasedConfig,
                "sample_rate must exceed 2 * (deviation_pp + mod_noise_bw)");
  }

  // Lowpass the white Gaussian process to mod_noise_bw; the filter needs
  // about eight cutoff periods to settle.
  const double cutoff = spec.mod_noise_bw / sample_rate;
  int n_taps = static_cast<int>(std::ceil(8.0 / cutoff)) | 1;
  n_taps = std::min(n_taps, 4097);
  const auto taps = LowpassTaps(cutoff, n_taps, 8.0);

  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> white(n_samples + taps.size() - 1);
  for (double& v : white) v = gauss(rng);

  std::vector<double> freq(n_samples);
  for (std::size_t n = 0; n < n_samples; ++n) {
    double acc = 0.0;
    const double* x = white.data() + n;
    for (std::size_t j = 0; j < taps.size(); ++j) acc += taps[j] * x[j];
    freq[n] = acc;
  }
  const auto [lo, hi] = std::minmax_element(freq.begin(), freq.end());
  const double pp = *hi - *lo;
  const double scale = (pp > 0.0) ? spec.deviation_pp / pp : 0.0;

  const double amp = std::sqrt(spec.power);
  const double two_pi = 2.0 * kPi;
  std::vector<cplx> out(n_samples);
  double phase = 0.0;
  for (std::size_t n = 0; n < n_samples; ++n) {
    phase += two_pi * freq[n] * scale / sample_rate;
    phase = std::remainder(phase, two_pi);
    out[n] = std::polar(amp, phase);
  }
  return BasebandWaveform(std::move(out), sample_rate, center_freq);
}

BasebandWaveform GenerateTone(double offset_hz, double power,
                              std::size_t n_samples, double sample_rate,
                              double center_freq) {
  if (n_samples == 0 || !(sample_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad tone parameters");
  }
  const double amp = std::sqrt(power);
  std::vector<cplx> out(n_samples);
  for (std::size_t n = 0; n < n_samples; ++n) {
    const double cycles = std::remainder(
        offset_hz * static_cast<double>(n) / sample_rate, 1.0);
    out[n] = std::polar(amp, 2.0 * kPi * cycles);
  }
  return BasebandWaveform(std::move(out), sample_rate, center_freq);
}

BasebandWaveform GenerateGaussianNoise(double power, std::size_t n_samples,
                                       double sample_rate, std::uint64_t seed,
                                       double center_freq) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(power / 2.0));
  std::vector<cplx> out(n_samples);
  for (cplx& v : out) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    v = cplx(re, im);
  }
  return BasebandWaveform(std::move(out), sample_rate, center_freq);
}

}  // namespace rfic
