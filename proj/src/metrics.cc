#include "rfic/metrics.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>

#include "rfic/error.h"
#include "rfic/fft.h"

namespace rfic {
namespace {

std::string Num(double v) {
  std::array<char, 32> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::ofstream OpenCsv(const std::filesystem::path& path, const char* header) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  os << header << '\n';
  return os;
}

double BandPower(const PsdEstimate& p, const Band& band) {
  double acc = 0.0;
  for (std::size_t k = 0; k < p.freqs.size(); ++k) {
    if (p.freqs[k] >= band.lo && p.freqs[k] <= band.hi) acc += p.psd[k];
  }
  return acc * p.bin_spacing;
}

}  // namespace

double PsdEstimate::TotalPower() const {
  double acc = 0.0;
  for (double v : psd) acc += v;
  return acc * bin_spacing;
}

std::size_t PsdEstimate::NearestBin(double offset_hz) const {
  const double idx = (offset_hz - freqs.front()) / bin_spacing;
  const auto k = static_cast<long>(std::lround(idx));
  return static_cast<std::size_t>(
      std::clamp<long>(k, 0, static_cast<long>(freqs.size()) - 1));
}

PsdEstimate WelchPsd(const BasebandWaveform& w, std::size_t seg_len,
                     double overlap) {
  w.Validate();
  if (!(overlap >= 0.0 && overlap < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "overlap must be in [0, 1)");
  }
  const auto x = w.valid();
  if (seg_len == 0 || seg_len > x.size()) {
    throw Error(ErrorCode::kInvalidSegment,
                "segment length " + std::to_string(seg_len) +
                    " exceeds valid length " + std::to_string(x.size()));
  }
  const std::size_t hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(seg_len * (1.0 - overlap))));
  const std::size_t segments = (x.size() - seg_len) / hop + 1;

  // Periodic Hann.
  std::vector<double> window(seg_len);
  double wsum = 0.0;
  double wsq = 0.0;
  for (std::size_t i = 0; i < seg_len; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / seg_len);
    wsum += window[i];
    wsq += window[i] * window[i];
  }

  std::vector<double> acc(seg_len, 0.0);
  std::vector<cplx> buf(seg_len);
  for (std::size_t s = 0; s < segments; ++s) {
    const cplx* src = x.data() + s * hop;
    for (std::size_t i = 0; i < seg_len; ++i) buf[i] = src[i] * window[i];
    FftInPlace(buf, false);
    for (std::size_t k = 0; k < seg_len; ++k) acc[k] += std::norm(buf[k]);
  }

  PsdEstimate out;
  out.center_freq = w.center_freq;
  out.segments = segments;
  out.bin_spacing = w.sample_rate / static_cast<double>(seg_len);
  out.resolution_bw = w.sample_rate * wsq / (wsum * wsum);
  out.freqs.resize(seg_len);
  out.psd.resize(seg_len);
  const double scale = 1.0 / (static_cast<double>(segments) * w.sample_rate * wsq);
  // fftshift: output bin j holds FFT bin (j + seg_len/2) mod seg_len.
  const std::size_t half = seg_len / 2;
  for (std::size_t j = 0; j < seg_len; ++j) {
    const std::size_t k = (j + half) % seg_len;
    out.freqs[j] = BinFrequency(k, seg_len, w.sample_rate);
    out.psd[j] = acc[k] * scale;
  }
  return out;
}

double IsrAt(const PsdEstimate& soi_psd, const PsdEstimate& int_psd,
             double offset_hz) {
  for (const PsdEstimate* p : {&soi_psd, &int_psd}) {
    if (p->freqs.empty() || offset_hz < p->freqs.front() - p->bin_spacing / 2 ||
        offset_hz > p->freqs.back() + p->bin_spacing / 2) {
      throw Error(ErrorCode::kOutOfBand,
                  "frequency offset " + std::to_string(offset_hz) +
                      " Hz outside the estimate");
    }
  }
  const double s = soi_psd.psd[soi_psd.NearestBin(offset_hz)];
  const double i = int_psd.psd[int_psd.NearestBin(offset_hz)];
  if (s <= 0.0) return std::numeric_limits<double>::infinity();
  if (i <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(i / s);
}

DepthReport CancellationDepth(const BasebandWaveform& before,
                              const BasebandWaveform& after, Band band,
                              std::size_t seg_len) {
  if (before.sample_rate != after.sample_rate) {
    throw Error(ErrorCode::kRateMismatch, "depth needs equal sample rates");
  }
  const double nyq = before.sample_rate / 2.0;
  if (band.lo > band.hi || band.lo < -nyq || band.hi > nyq) {
    throw Error(ErrorCode::kOutOfBand, "band outside Nyquist range");
  }
  BasebandWaveform b = before;
  BasebandWaveform a = after;
  if (b.size() == a.size()) IntersectValid(b, a);
  const std::size_t len = std::min(b.valid_size(), a.valid_size());
  seg_len = std::min(seg_len, len);
  const PsdEstimate pb = WelchPsd(b, seg_len);
  const PsdEstimate pa = WelchPsd(a, seg_len);

  DepthReport r;
  r.band = band;
  const double p_before = BandPower(pb, band);
  const double p_after = BandPower(pa, band);
  if (p_after <= 0.0) {
    r.saturated = true;
    r.depth_db = kDepthFloorDb;
  } else if (p_before <= 0.0) {
    r.saturated = true;
    r.depth_db = -kDepthFloorDb;
  } else {
    r.depth_db = 10.0 * std::log10(p_before / p_after);
  }
  for (std::size_t k = 0; k < pb.freqs.size(); ++k) {
    if (pb.freqs[k] < band.lo || pb.freqs[k] > band.hi) continue;
    r.freqs.push_back(pb.freqs[k]);
    double d;
    if (pa.psd[k] <= 0.0) {
      d = kDepthFloorDb;
    } else if (pb.psd[k] <= 0.0) {
      d = -kDepthFloorDb;
    } else {
      d = 10.0 * std::log10(pb.psd[k] / pa.psd[k]);
    }
    r.depth_curve_db.push_back(d);
  }
  return r;
}

EvmReport Evm(const SymbolStream& rx, const SymbolStream& tx) {
  if (rx.symbols.size() != tx.symbols.size() || rx.symbols.empty()) {
    throw Error(ErrorCode::kInvalidLength,
                "EVM needs equal, non-zero symbol counts (rx " +
                    std::to_string(rx.symbols.size()) + ", tx " +
                    std::to_string(tx.symbols.size()) + ")");
  }
  if (rx.format != tx.format) {
    throw Error(ErrorCode::kInvalidArgument, "EVM needs matching formats");
  }
  cplx cross{};
  double rx_energy = 0.0;
  for (std::size_t i = 0; i < rx.symbols.size(); ++i) {
    cross += tx.symbols[i] * std::conj(rx.symbols[i]);
    rx_energy += std::norm(rx.symbols[i]);
  }
  EvmReport r;
  r.n_symbols = rx.symbols.size();
  r.alignment_gain = rx_energy > 0.0 ? cross / rx_energy : cplx{};
  r.per_symbol_errors.resize(r.n_symbols);
  double err = 0.0;
  for (std::size_t i = 0; i < r.n_symbols; ++i) {
    r.per_symbol_errors[i] = r.alignment_gain * rx.symbols[i] - tx.symbols[i];
    err += std::norm(r.per_symbol_errors[i]);
  }
  // Ideal constellations are unit power, so the reference RMS is 1.
  const double ref_power = MeanPower(ConstellationPoints(tx.format));
  r.evm_rms_pct =
      100.0 * std::sqrt(err / static_cast<double>(r.n_symbols) / ref_power);
  return r;
}

double SeparationSirDb(const BasebandWaveform& y,
                       const BasebandWaveform& wanted) {
  if (y.size() != wanted.size()) {
    throw Error(ErrorCode::kInvalidLength, "SIR needs equal lengths");
  }
  BasebandWaveform a = y;
  BasebandWaveform b = wanted;
  IntersectValid(a, b);
  const auto ys = a.valid();
  const auto ws = b.valid();
  cplx cross{};
  double ww = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    cross += ys[i] * std::conj(ws[i]);
    ww += std::norm(ws[i]);
  }
  if (!(ww > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "wanted source has no energy");
  }
  const cplx alpha = cross / ww;
  double resid = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    resid += std::norm(ys[i] - alpha * ws[i]);
  }
  const double signal = std::norm(alpha) * ww;
  if (resid <= 0.0) return kDepthFloorDb;
  return 10.0 * std::log10(signal / resid);
}

void WritePsdCsv(const std::filesystem::path& path, const PsdEstimate& psd) {
  auto os = OpenCsv(path, "freq_hz,psd_db_hz");
  for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
    const double db = psd.psd[k] > 0.0 ? 10.0 * std::log10(psd.psd[k])
                                       : -kDepthFloorDb;
    os << Num(psd.center_freq + psd.freqs[k]) << ',' << Num(db) << '\n';
  }
}

void WriteEvmCsv(const std::filesystem::path& path, const EvmReport& report) {
  auto os = OpenCsv(path, "symbol_idx,err_re,err_im");
  for (std::size_t i = 0; i < report.per_symbol_errors.size(); ++i) {
    os << i << ',' << Num(report.per_symbol_errors[i].real()) << ','
       << Num(report.per_symbol_errors[i].imag()) << '\n';
  }
}

void WriteDepthCsv(const std::filesystem::path& path, const DepthReport& d) {
  auto os = OpenCsv(path, "freq_hz,depth_db");
  for (std::size_t i = 0; i < d.freqs.size(); ++i) {
    os << Num(d.freqs[i]) << ',' << Num(d.depth_curve_db[i]) << '\n';
  }
}

void WriteSymbolsCsv(const std::filesystem::path& path,
                     std::span<const cplx> symbols) {
  auto os = OpenCsv(path, "symbol_idx,re,im");
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    os << i << ',' << Num(symbols[i].real()) << ',' << Num(symbols[i].imag())
       << '\n';
  }
}

}  // namespace rfic
