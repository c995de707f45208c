#include "rfic/waveform.h"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "rfic/error.h"

namespace rfic {

static_assert(std::endian::native == std::endian::little,
              "waveform I/O assumes a little-endian host");

void BasebandWaveform::Validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw Error(ErrorCode::kInvalidArgument, "sample_rate must be positive");
  }
  if (samples.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "waveform has no samples");
  }
  if (valid_begin > valid_end || valid_end > samples.size()) {
    throw Error(ErrorCode::kInvalidArgument, "inconsistent valid window");
  }
  // x - x is NaN exactly when x is not finite, and NaN survives the sum.
  using V4 = double __attribute__((vector_size(32)));
  const std::size_t n = 2 * samples.size();
  const auto* raw = reinterpret_cast<const unsigned char*>(samples.data());
  V4 acc = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    V4 v;
    std::memcpy(&v, raw + 8 * i, sizeof(v));
    acc += v - v;
  }
  double sum = acc[0] + acc[1] + acc[2] + acc[3];
  for (; i < n; ++i) {
    double v;
    std::memcpy(&v, raw + 8 * i, sizeof(v));
    sum += v - v;
  }
  const bool bad = std::isnan(sum);
  if (bad) throw Error(ErrorCode::kInvalidArgument, "non-finite sample");
}

double MeanPower(std::span<const cplx> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (const cplx& s : x) acc += std::norm(s);
  return acc / static_cast<double>(x.size());
}

void IntersectValid(BasebandWaveform& a, BasebandWaveform& b) {
  const std::size_t begin = std::max(a.valid_begin, b.valid_begin);
  const std::size_t end = std::max(begin, std::min(a.valid_end, b.valid_end));
  a.valid_begin = b.valid_begin = begin;
  a.valid_end = b.valid_end = end;
}

namespace {

template <typename T>
void PutLe(std::ostream& os, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  os.write(bytes.data(), bytes.size());
}

template <typename T>
T GetLe(std::istream& is) {
  std::array<char, sizeof(T)> bytes;
  if (!is.read(bytes.data(), bytes.size())) {
    throw Error(ErrorCode::kIoError, "truncated waveform file");
  }
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

std::string FormatDouble(double v) {
  std::array<char, 32> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

void WriteWaveform(const std::filesystem::path& path,
                   const BasebandWaveform& w) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  os.write("RCWV", 4);
  PutLe<std::uint32_t>(os, kWaveformFileVersion);
  PutLe<double>(os, w.sample_rate);
  PutLe<double>(os, w.center_freq);
  PutLe<std::uint64_t>(os, w.samples.size());
  for (const cplx& s : w.samples) {
    PutLe<float>(os, static_cast<float>(s.real()));
    PutLe<float>(os, static_cast<float>(s.imag()));
  }
  if (!os) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

BasebandWaveform ReadWaveform(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::array<char, 4> magic;
  if (!is.read(magic.data(), 4) || std::memcmp(magic.data(), "RCWV", 4) != 0) {
    throw Error(ErrorCode::kIoError, "bad magic in " + path.string());
  }
  const auto version = GetLe<std::uint32_t>(is);
  if (version != kWaveformFileVersion) {
    throw Error(ErrorCode::kIoError,
                "unsupported waveform version " + std::to_string(version));
  }
  const double fs = GetLe<double>(is);
  const double fc = GetLe<double>(is);
  const auto n = GetLe<std::uint64_t>(is);
  std::vector<cplx> samples;
  samples.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const float re = GetLe<float>(is);
    const float im = GetLe<float>(is);
    samples.emplace_back(re, im);
  }
  return BasebandWaveform(std::move(samples), fs, fc);
}

void WriteWaveformCsv(const std::filesystem::path& path,
                      const BasebandWaveform& w) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  os << "index,re,im\n";
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    os << i << ',' << FormatDouble(w.samples[i].real()) << ','
       << FormatDouble(w.samples[i].imag()) << '\n';
  }
}

std::vector<cplx> ReadComplexCsv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::string line;
  std::getline(is, line);  // header
  std::vector<cplx> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::array<double, 3> fields{};
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (double& f : fields) {
      auto [next, ec] = std::from_chars(p, end, f);
      if (ec != std::errc()) {
        throw Error(ErrorCode::kIoError, "malformed CSV row: " + line);
      }
      p = (next < end && *next == ',') ? next + 1 : next;
    }
    out.emplace_back(fields[1], fields[2]);
  }
  return out;
}

}  // namespace rfic
