// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oracles.h"
#include "rfic/canceller.h"
#include "rfic/channel.h"
#include "rfic/demod.h"
#include "rfic/error.h"
#include "rfic/experiment.h"
#include "rfic/metrics.h"
#include "rfic/scenario_config.h"
#include "rfic/sigsynth.h"

namespace rfic {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
constexpr double kPi = std::numbers::pi;

const fs::path kConfigs = RFIC_CONFIG_DIR;

// Collects failed sub-checks for one criterion.
class Check {
 public:
  void Expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  bool ok() const { return failures_.empty(); }
  std::string Summary() const {
    std::string s;
    for (const auto& f : failures_) s += (s.empty() ? "" : "; ") + f;
    return s;
  }

 private:
  std::vector<std::string> failures_;
};

std::string Fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string Fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string Fmt(const char* f, double a, double b, double c) {
  char buf[192];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::vector<SweepRow> Mode(const std::vector<SweepRow>& rows, CancellerMode m) {
  std::vector<SweepRow> out;
  for (const auto& r : rows) {
    if (r.mode == m) out.push_back(r);
  }
  return out;
}

// The ISR sweep is shared by criteria 1 and 2.
struct IsrSweep {
  std::vector<SweepRow> rows;
  double seconds = 0.0;
};

const IsrSweep& RunIsrSweep() {
  static const IsrSweep sweep = [] {
    const auto c = LoadScenarioConfig(kConfigs / "isr_sweep.yaml");
    const auto t0 = Clock::now();
    IsrSweep s;
    s.rows = SweepIsr(c, c.sweep.isr_db);
    s.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return s;
  }();
  return sweep;
}

std::string Criterion1(Check& chk) {
  const auto& s = RunIsrSweep();
  const auto ref = Mode(s.rows, CancellerMode::kReference);
  chk.Expect(ref.size() == 11, "expected 11 reference rows");
  double worst_evm = 0.0, min_depth = 1e9;
  for (const auto& r : ref) {
    if (!r.ok) {
      chk.Expect(false, r.label + ": " + r.error);
      continue;
    }
    worst_evm = std::max(worst_evm, *r.report.evm_pct);
    min_depth = std::min(min_depth, r.report.depth_db);
    chk.Expect(*r.report.evm_pct < 15.0, r.label + Fmt(" EVM %.2f%%", *r.report.evm_pct));
    chk.Expect(r.report.depth_db >= 30.0, r.label + Fmt(" depth %.1f dB", r.report.depth_db));
  }
  chk.Expect(s.seconds < 60.0, Fmt("sweep took %.1f s", s.seconds));
  return Fmt("max EVM %.2f%%, min depth %.1f dB, sweep %.1f s", worst_evm, min_depth,
             s.seconds);
}

std::string Criterion2(Check& chk) {
  const auto off = Mode(RunIsrSweep().rows, CancellerMode::kOff);
  chk.Expect(off.size() == 11, "expected 11 off rows");
  std::string curve;
  double prev = -1.0;
  for (const auto& r : off) {
    if (!r.ok) {
      chk.Expect(false, r.label + ": " + r.error);
      continue;
    }
    const double e = *r.report.evm_pct;
    curve += (curve.empty() ? "" : " ") + Fmt("%.1f", e);
    chk.Expect(e >= prev, r.label + " EVM decreased");
    prev = e;
  }
  if (off.size() == 11 && off.front().ok && off.back().ok) {
    chk.Expect(*off.front().report.evm_pct < 10.0, "EVM at -25 dB not below 10%");
    chk.Expect(*off.back().report.evm_pct > 60.0, "EVM at 18 dB not above 60%");
  }
  return "off EVM % = [" + curve + "]";
}

std::string Criterion3(Check& chk) {
  const auto c = LoadScenarioConfig(kConfigs / "taps_error.yaml");
  const auto r = Simulate(c);
  chk.Expect(r.depth_db >= 30.0, Fmt("taps-error depth %.1f dB", r.depth_db));

  // Perfect taps on a flat channel: only the interpolator remains.
  const double fs = c.sim.sample_rate;
  const auto s12 = c.channel.a12.ToModel();
  const auto s22 = c.channel.a22.ToModel();
  const auto intf = GenerateFmInterference(FmNoiseSpec{80e6, 10e6, 1.0, 11}, 1 << 18, fs);
  PathModel p12{s12.gain, s12.delay, ModulatorResponse::Flat(), 0.0};
  PathModel p22{s22.gain, s22.delay, ModulatorResponse::Flat(), 0.0};
  const auto l = ApplyPathNoiseless(intf, p12);
  const auto h = ApplyPathNoiseless(intf, p22);
  const double delta = s12.delay - s22.delay;
  const CancellerTaps taps{delta, s12.gain / s22.gain, 0.0};
  const auto out = Cancel(l, h, taps);
  const double half_bw = 0.5 * (1.0 + c.soi.rolloff) * c.soi.symbol_rate;
  const Band band{-half_bw, half_bw};
  const double floor_db = CancellationDepth(l, out, band).depth_db;
  const double oracle_db =
      oracle::BandDepthDb(WelchPsd(intf), band, [&](double f) {
        const double fn = f / fs;
        return oracle::InterpolatorResponse(s12.delay * fs, fn) -
               oracle::InterpolatorResponse(delta * fs, fn) *
                   oracle::InterpolatorResponse(s22.delay * fs, fn);
      });
  chk.Expect(floor_db >= 60.0, Fmt("perfect-taps depth %.1f dB", floor_db));
  chk.Expect(std::abs(floor_db - oracle_db) <= 0.5,
             Fmt("floor %.2f dB vs oracle %.2f dB", floor_db, oracle_db));
  return Fmt("taps-error depth %.1f dB; interpolator floor %.2f dB (oracle %.2f dB)",
             r.depth_db, floor_db, oracle_db);
}

std::string Criterion4(Check& chk) {
  const auto c = LoadScenarioConfig(kConfigs / "spectral_response.yaml");
  const auto rows = SweepFrequency(c, c.sweep.carriers);
  chk.Expect(rows.size() == c.sweep.carriers.size(), "row count");
  const auto m12 = c.channel.a12.ToModel();
  const auto m22 = c.channel.a22.ToModel();
  const double f0 = c.interference.tone_offset;
  double worst_dev = 0.0;
  std::string curve;
  for (const auto& row : rows) {
    if (!row.ok || !row.report.taps) {
      chk.Expect(false, row.label + ": " + row.error);
      continue;
    }
    const double fc = row.value;
    const auto& t = *row.report.taps;
    const cplx l = m12.gain *
                   oracle::Butterworth(fc + f0, m12.response.f3db, m12.response.order) *
                   std::polar(1.0, -2.0 * kPi * f0 * m12.delay);
    const cplx h = m22.gain *
                   oracle::Butterworth(fc + f0, m22.response.f3db, m22.response.order) *
                   std::polar(1.0, -2.0 * kPi * f0 * (m22.delay + t.delay));
    const double oracle_db = -20.0 * std::log10(std::abs(1.0 - t.gain * h / l));
    const double d = row.report.depth_db;
    worst_dev = std::max(worst_dev, std::abs(d - oracle_db));
    curve += (curve.empty() ? "" : " ") + Fmt("%.1f", d);
    const double need = fc <= 4e9 ? 30.0 : 20.0;
    chk.Expect(d >= need, row.label + Fmt(" depth %.1f dB < %.0f", d, need));
    chk.Expect(std::abs(d - oracle_db) <= 0.5,
               row.label + Fmt(" depth %.2f vs oracle %.2f", d, oracle_db));
  }
  return "depth dB = [" + curve + "]" + Fmt(", max oracle deviation %.3f dB", worst_dev);
}

std::string Criterion5(Check& chk) {
  const auto c = LoadScenarioConfig(kConfigs / "format_sweep.yaml");
  const auto rows = SweepFormat(c, c.sweep.formats);
  std::string text;
  for (const auto& row : rows) {
    if (!row.ok) {
      chk.Expect(false, row.label + ": " + row.error);
      continue;
    }
    const auto fmt = ParseConstellation(row.label);
    const double thr = oracle::SerThresholdEvmPct(fmt);
    const double e = *row.report.evm_pct;
    const std::string tag = row.label + "/" + std::string(CancellerModeName(row.mode));
    text += (text.empty() ? "" : ", ") + Fmt("%.2f", e) + "% " + tag +
            Fmt(" (thr %.2f%%)", thr);
    if (row.mode == CancellerMode::kReference) {
      chk.Expect(e < thr, tag + " above threshold");
    } else if (fmt == Constellation::kQam256) {
      chk.Expect(e > thr, tag + " not above threshold");
    }
  }
  chk.Expect(rows.size() == 6, "row count");
  return text;
}

std::string Criterion6(Check& chk) {
  const auto c = LoadScenarioConfig(kConfigs / "separator_comparison.yaml");
  const auto rows = CompareSeparators(c);
  if (rows.size() != 2 || !rows[0].ok || !rows[1].ok) {
    chk.Expect(false, "comparison did not complete");
    return "";
  }
  const auto& ref = rows[0].report;
  const auto& bss = rows[1].report;
  chk.Expect(ref.free_parameters == 2, "reference free parameters");
  chk.Expect(bss.free_parameters == 4, "BSS free parameters");
  chk.Expect(ref.separation_ms < bss.separation_ms, "reference not faster");
  chk.Expect(ref.sir_db >= 30.0, Fmt("reference SIR %.1f dB", ref.sir_db));
  chk.Expect(bss.sir_db >= 30.0, Fmt("BSS SIR %.1f dB", bss.sir_db));
  return Fmt("reference %.2f ms / %.1f dB SIR, ", ref.separation_ms, ref.sir_db) +
         Fmt("BSS %.2f ms / %.1f dB SIR", bss.separation_ms, bss.sir_db);
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string Criterion7(Check& chk) {
  constexpr double fs = 200e6;
  // Round trip.
  double worst_rt = 0.0;
  for (auto fmt : {Constellation::kQpsk, Constellation::kQam16, Constellation::kQam64,
                   Constellation::kQam256}) {
    const auto tx = RandomSymbols(4000, fmt, 5e6, 31);
    DemodConfig dc;
    dc.format = fmt;
    worst_rt = std::max(worst_rt, Evm(Demodulate(GenerateSoi(tx, dc.pulse), dc), tx)
                                      .evm_rms_pct);
  }
  chk.Expect(worst_rt < 0.1, Fmt("round trip EVM %.3g%%", worst_rt));

  // Parseval.
  double worst_parseval = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto fm = GenerateFmInterference(FmNoiseSpec{80e6, 10e6, 1.7, seed}, 1 << 18, fs);
    const auto soi = GenerateSoi(RandomSymbols(30000, Constellation::kQam64, 5e6, seed),
                                 PulseShape{});
    for (const auto* w : {&fm, &soi}) {
      const double p = MeanPower(w->valid());
      worst_parseval = std::max(worst_parseval, std::abs(WelchPsd(*w).TotalPower() / p - 1.0));
    }
  }
  chk.Expect(worst_parseval < 0.01, Fmt("Parseval error %.3g", worst_parseval));

  // Delay at 20 dB SNR.
  double worst_delay = 0.0;
  for (double d : {0.3, 4.71, 12.25, 17.9}) {
    const auto h = GenerateFmInterference(FmNoiseSpec{80e6, 10e6, 1.0, 40}, 1 << 16, fs);
    auto l = FractionalDelay(h, d / fs);
    l = Add(l, BasebandWaveform(oracle::GaussianNoise(l.size(), 0.01, 41), fs));
    worst_delay = std::max(worst_delay, std::abs(EstimateDelay(l, h, 1e-6) * fs - d));
  }
  chk.Expect(worst_delay <= 0.05, Fmt("delay error %.3g samples", worst_delay));

  // Gain at 1e6 samples, unit ISR.
  const cplx g{0.5, 0.7};
  const BasebandWaveform h(oracle::GaussianNoise(1000000, 1.0, 50), fs);
  BasebandWaveform l(oracle::GaussianNoise(1000000, std::norm(g), 51), fs);
  for (std::size_t i = 0; i < l.size(); ++i) l.samples[i] += g * h.samples[i];
  const double gain_err = std::abs(EstimateGain(l, h, 0.0) - g) / std::abs(g);
  chk.Expect(gain_err < 0.01, Fmt("gain error %.3g", gain_err));

  // EVM against in-band residual ratio.
  double worst_link = 0.0;
  const PulseShape pulse;
  for (double rho_db : {-30.0, -20.0, -10.0}) {
    const double rho = std::pow(10.0, rho_db / 10.0);
    const auto tx = RandomSymbols(5000, Constellation::kQpsk, 5e6, 60);
    const auto rx = Add(GenerateSoi(tx, pulse),
                        BasebandWaveform(oracle::GaussianNoise(
                                             (5000 + 64) * 40, rho * pulse.sps, 61),
                                         fs));
    const double evm = Evm(Demodulate(rx, DemodConfig{}), tx).evm_rms_pct;
    worst_link = std::max(worst_link, std::abs(evm / (100.0 * std::sqrt(rho)) - 1.0));
  }
  chk.Expect(worst_link <= 0.1, Fmt("EVM/rho link error %.3g", worst_link));

  // Determinism: rerun the demo scenario into two directories.
  auto cfg = LoadScenarioConfig(kConfigs / "interference_demo.yaml");
  cfg.outputs.waveforms = true;
  const fs::path a = fs::temp_directory_path() / "rfic_accept_a";
  const fs::path b = fs::temp_directory_path() / "rfic_accept_b";
  fs::remove_all(a);
  fs::remove_all(b);
  Run(cfg, a);
  Run(cfg, b);
  int differing = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const auto name = e.path().filename();
    if (name == kReportFile) {
      auto ja = nlohmann::json::parse(Slurp(e.path()));
      auto jb = nlohmann::json::parse(Slurp(b / name));
      for (auto* j : {&ja, &jb}) {
        j->erase("runtime_ms");
        j->erase("separation_ms");
      }
      differing += ja != jb;
    } else {
      differing += Slurp(e.path()) != Slurp(b / name);
    }
  }
  fs::remove_all(a);
  fs::remove_all(b);
  chk.Expect(differing == 0, Fmt("%.0f artifacts differ", differing));

  return Fmt("round trip %.2g%%, Parseval %.2g, delay %.3f smp", worst_rt, worst_parseval,
             worst_delay) +
         Fmt(", gain %.2g, EVM link %.3f", gain_err, worst_link) +
         ", reruns identical";
}

}  // namespace
}  // namespace rfic

int main() {
  using Fn = std::function<std::string(rfic::Check&)>;
  const std::vector<std::pair<int, Fn>> criteria = {
      {1, rfic::Criterion1}, {2, rfic::Criterion2}, {3, rfic::Criterion3},
      {4, rfic::Criterion4}, {5, rfic::Criterion5}, {6, rfic::Criterion6},
      {7, rfic::Criterion7},
  };
  int failed = 0;
  for (const auto& [n, fn] : criteria) {
    rfic::Check chk;
    std::string detail;
    try {
      detail = fn(chk);
    } catch (const std::exception& e) {
      chk.Expect(false, std::string("exception: ") + e.what());
    }
    if (chk.ok()) {
      std::printf("PASS criterion %d: %s\n", n, detail.c_str());
    } else {
      ++failed;
      std::printf("FAIL criterion %d: %s | %s\n", n, chk.Summary().c_str(), detail.c_str());
    }
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
