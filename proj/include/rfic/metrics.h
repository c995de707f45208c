#ifndef RFIC_METRICS_H_
#define RFIC_METRICS_H_

#include <cstddef>
#include <filesystem>
#include <vector>

#include "rfic/sigsynth.h"
#include "rfic/waveform.h"

namespace rfic {

inline constexpr std::size_t kDefaultPsdSegment = 4096;
inline constexpr double kDefaultPsdOverlap = 0.5;
// Depth reported when the residual is exactly zero in band.
inline constexpr double kDepthFloorDb = 300.0;

// Two-sided PSD, bins ascending from -fs/2; freqs are baseband offsets.
struct PsdEstimate {
  std::vector<double> freqs;  // Hz
  std::vector<double> psd;    // power / Hz
  double resolution_bw = 0.0; // equivalent noise bandwidth of the window, Hz
  double bin_spacing = 0.0;   // Hz
  double center_freq = 0.0;
  std::size_t segments = 0;

  // Sum(psd) * bin_spacing.
  double TotalPower() const;
  std::size_t NearestBin(double offset_hz) const;
};

// Hann-windowed Welch average over the valid window. Throws kInvalidSegment
// when seg_len exceeds the valid length, kInvalidArgument on overlap outside
// [0, 1).
PsdEstimate WelchPsd(const BasebandWaveform& w,
                     std::size_t seg_len = kDefaultPsdSegment,
                     double overlap = kDefaultPsdOverlap);

// 10 log10(int / soi) at the bin nearest `offset_hz`. +inf when the SOI bin
// is zero. Throws kOutOfBand when offset_hz lies outside either estimate.
double IsrAt(const PsdEstimate& soi_psd, const PsdEstimate& int_psd,
             double offset_hz);

struct Band {
  double lo = 0.0;  // Hz offsets, inclusive
  double hi = 0.0;
};

struct DepthReport {
  double depth_db = 0.0;
  Band band;
  bool saturated = false;
  std::vector<double> freqs;     // per-bin curve over the band
  std::vector<double> depth_curve_db;
};

// 10 log10(P_before / P_after) from band-integrated Welch PSDs, plus the
// bin-wise curve.
DepthReport CancellationDepth(const BasebandWaveform& before,
                              const BasebandWaveform& after, Band band,
                              std::size_t seg_len = kDefaultPsdSegment);

struct EvmReport {
  double evm_rms_pct = 0.0;
  std::vector<cplx> per_symbol_errors;  // g * rx - tx
  std::size_t n_symbols = 0;
  cplx alignment_gain{1.0, 0.0};        // g minimising |g rx - tx|^2
};

// Data-aided EVM against the known transmitted symbols, normalised to the
// RMS of the ideal (unit-power) constellation.
EvmReport Evm(const SymbolStream& rx, const SymbolStream& tx);

// Ratio of the wanted component's power to everything else in `y`, with the
// wanted component's complex gain fitted by least squares.
double SeparationSirDb(const BasebandWaveform& y,
                       const BasebandWaveform& wanted);

// CSV writers: "freq_hz,psd_db_hz", "symbol_idx,err_re,err_im",
// "freq_hz,depth_db", "symbol_idx,re,im".
void WritePsdCsv(const std::filesystem::path& path, const PsdEstimate& psd);
void WriteEvmCsv(const std::filesystem::path& path, const EvmReport& report);
void WriteDepthCsv(const std::filesystem::path& path, const DepthReport& d);
void WriteSymbolsCsv(const std::filesystem::path& path,
                     std::span<const cplx> symbols);

}  // namespace rfic

#endif  // RFIC_METRICS_H_
