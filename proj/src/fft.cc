#include "rfic/fft.h"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <utility>

namespace rfic {
namespace {

// fftw_plan_* and fftw_destroy_plan are not thread-safe; execution with the
// new-array interface is. Plans are cached per (length, direction) and made
// with FFTW_UNALIGNED so any std::vector buffer can be passed in.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan Get(std::size_t n, bool inverse) {
    std::lock_guard<std::mutex> lock(mu_);
    const auto key = std::make_pair(n, inverse);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    fftw_complex* buf = fftw_alloc_complex(n);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf,
                                      inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mu_;
  std::map<std::pair<std::size_t, bool>, fftw_plan> plans_;
};

PlanCache& Plans() {
  static PlanCache cache;
  return cache;
}

}  // namespace

void FftInPlace(std::vector<cplx>& x, bool inverse) {
  if (x.empty()) return;
  fftw_plan plan = Plans().Get(x.size(), inverse);
  auto* data = reinterpret_cast<fftw_complex*>(x.data());
  fftw_execute_dft(plan, data, data);
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(x.size());
    for (cplx& v : x) v *= scale;
  }
}

std::vector<cplx> Fft(std::span<const cplx> x) {
  std::vector<cplx> out(x.begin(), x.end());
  FftInPlace(out, false);
  return out;
}

std::vector<cplx> InverseFft(std::span<const cplx> x) {
  std::vector<cplx> out(x.begin(), x.end());
  FftInPlace(out, true);
  return out;
}

std::size_t NextPow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

namespace {

bool IsFastSize(std::size_t m) {
  for (std::size_t p : {2, 3, 5, 7}) {
    while (m % p == 0) m /= p;
  }
  return m == 1;
}

}  // namespace

std::size_t NextFastSize(std::size_t n) {
  std::size_t m = std::max<std::size_t>(n, 1);
  while (!IsFastSize(m)) ++m;
  return m;
}

std::size_t PrevFastSize(std::size_t n) {
  std::size_t m = std::max<std::size_t>(n, 1);
  while (!IsFastSize(m)) --m;
  return m;
}

double BinFrequency(std::size_t k, std::size_t n, double fs) {
  const double df = fs / static_cast<double>(n);
  auto kk = static_cast<std::ptrdiff_t>(k);
  if (k >= (n + 1) / 2) kk -= static_cast<std::ptrdiff_t>(n);
  return static_cast<double>(kk) * df;
}

}  // namespace rfic
