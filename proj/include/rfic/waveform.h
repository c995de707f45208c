#ifndef RFIC_WAVEFORM_H_
#define RFIC_WAVEFORM_H_

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace rfic {

using cplx = std::complex<double>;

// Uniformly sampled complex envelope. `center_freq` is the RF carrier the
// envelope is referenced to; only the channel's frequency-response model
// reads it.
//
// Operations that cannot produce a trustworthy value near the record edges
// (fractional delay) zero those samples and shrink [valid_begin, valid_end).
// Every metric measures only the valid window.
struct BasebandWaveform {
  std::vector<cplx> samples;
  double sample_rate = 0.0;
  double center_freq = 0.0;
  std::size_t valid_begin = 0;
  std::size_t valid_end = 0;

  BasebandWaveform() = default;
  BasebandWaveform(std::vector<cplx> s, double fs, double fc = 0.0)
      : samples(std::move(s)),
        sample_rate(fs),
        center_freq(fc),
        valid_begin(0),
        valid_end(samples.size()) {}

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(size()) / sample_rate; }

  std::span<const cplx> valid() const {
    return std::span<const cplx>(samples).subspan(valid_begin,
                                                  valid_end - valid_begin);
  }
  std::size_t valid_size() const { return valid_end - valid_begin; }

  // Throws kInvalidArgument on non-positive rate, empty record, non-finite
  // samples or an inconsistent valid window.
  void Validate() const;
};

double MeanPower(std::span<const cplx> x);

// Restricts both waveforms' valid windows to their intersection.
void IntersectValid(BasebandWaveform& a, BasebandWaveform& b);

// Binary format: "RCWV", u32 version, f64 sample_rate, f64 center_freq,
// u64 n_samples, then little-endian float32 (re, im) pairs.
inline constexpr std::uint32_t kWaveformFileVersion = 1;

void WriteWaveform(const std::filesystem::path& path,
                   const BasebandWaveform& w);
BasebandWaveform ReadWaveform(const std::filesystem::path& path);

// CSV with header "index,re,im"; values printed round-trip exact.
void WriteWaveformCsv(const std::filesystem::path& path,
                      const BasebandWaveform& w);
std::vector<cplx> ReadComplexCsv(const std::filesystem::path& path);

}  // namespace rfic

#endif  // RFIC_WAVEFORM_H_
