#include "rfic/experiment.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <thread>
#include <utility>

#include <nlohmann/json.hpp>

#include "rfic/demod.h"
#include "rfic/error.h"
#include "rfic/random.h"

namespace rfic {
namespace {

using Clock = std::chrono::steady_clock;

double Ms(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

// Fastest of `repeats` executions of `fn`, in milliseconds.
template <typename Fn>
double Timed(int repeats, Fn&& fn) {
  double best = 0.0;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = Clock::now();
    fn();
    const double ms = Ms(t0, Clock::now());
    if (i == 0 || ms < best) best = ms;
  }
  return best;
}

// Runs `fn`, re-throwing library errors with the stage that raised them.
template <typename Fn>
auto Stage(const char* module, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(module) + ": " + e.detail());
  }
}

void Scale(BasebandWaveform& w, cplx k) {
  for (cplx& v : w.samples) v *= k;
}

// a * x + b * y over the intersection of the valid windows.
BasebandWaveform Combine(cplx a, const BasebandWaveform& x, cplx b,
                         const BasebandWaveform& y) {
  BasebandWaveform out = x;
  BasebandWaveform yy = y;
  IntersectValid(out, yy);
  std::fill(out.samples.begin(), out.samples.end(), cplx{});
  for (std::size_t i = out.valid_begin; i < out.valid_end; ++i) {
    out.samples[i] = a * x.samples[i] + b * y.samples[i];
  }
  return out;
}

// Least-squares gain of `ref` inside `y` over y's valid window.
cplx ProjectionGain(const BasebandWaveform& y, const BasebandWaveform& ref) {
  cplx cross{};
  double e = 0.0;
  for (std::size_t i = y.valid_begin; i < y.valid_end; ++i) {
    cross += y.samples[i] * std::conj(ref.samples[i]);
    e += std::norm(ref.samples[i]);
  }
  return e > 0.0 ? cross / e : cplx(1.0, 0.0);
}

BasebandWaveform MakeInterference(const ScenarioConfig& c, std::size_t n,
                                  std::uint64_t seed) {
  const double fs = c.sim.sample_rate;
  const double offset = c.interference.carrier - c.soi.carrier;
  switch (c.interference.kind) {
    case InterferenceConfig::Kind::kFmNoise: {
      FmNoiseSpec spec;
      spec.deviation_pp = c.interference.deviation_pp;
      spec.mod_noise_bw = c.interference.mod_noise_bw;
      spec.power = 1.0;
      spec.seed = seed;
      BasebandWaveform w = GenerateFmInterference(spec, n, fs, c.soi.carrier);
      return offset == 0.0 ? w : ApplyFrequencyOffset(w, offset);
    }
    case InterferenceConfig::Kind::kTone:
      return GenerateTone(offset + c.interference.tone_offset, 1.0, n, fs,
                          c.soi.carrier);
    case InterferenceConfig::Kind::kGaussian:
      return GenerateGaussianNoise(1.0, n, fs, seed, c.soi.carrier);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown interference kind");
}

CancelOptions ToCancelOptions(const CancellerConfig& c) {
  CancelOptions o;
  o.max_lag = c.max_lag;
  o.min_coherence = c.min_coherence;
  o.training_window = c.training_window;
  o.delay_window = c.delay_window;
  o.nlms = c.nlms;
  o.nlms_step = c.nlms_step;
  return o;
}

void PerturbTaps(const CancellerConfig& c, CancellerTaps& taps) {
  taps.gain *= (1.0 + c.tap_gain_error) *
               std::polar(1.0, c.tap_phase_error_deg * std::numbers::pi / 180.0);
  taps.delay += c.tap_delay_error;
}

// Taps trained on a wideband record at the calibration carrier, passed
// through the same interference paths without SOI or noise.
CancellerTaps CalibrationTaps(const ScenarioConfig& c, std::size_t n,
                              std::uint64_t seed) {
  FmNoiseSpec spec;
  spec.deviation_pp = c.interference.deviation_pp;
  spec.mod_noise_bw = c.interference.mod_noise_bw;
  spec.seed = DeriveSeed(seed, 4);
  const BasebandWaveform cal = GenerateFmInterference(
      spec, n, c.sim.sample_rate, c.canceller.calibration_carrier);
  const MixingScenario s = c.channel.ToScenario(seed);
  const BasebandWaveform l = ApplyPathNoiseless(cal, s.a12);
  const BasebandWaveform h = ApplyPathNoiseless(cal, s.a22);
  return TrainTaps(l, h, ToCancelOptions(c.canceller));
}

nlohmann::json NumberOrNull(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::json ComplexJson(cplx v) { return {v.real(), v.imag()}; }

std::string Shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string FlagsString(const std::vector<std::string>& flags) {
  std::string s;
  for (const auto& f : flags) {
    if (!s.empty()) s += '|';
    s += f;
  }
  return s;
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  os << text;
  if (!os) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

BasebandWaveform ValidOnly(const BasebandWaveform& w) {
  std::vector<cplx> s(w.valid().begin(), w.valid().end());
  return BasebandWaveform(std::move(s), w.sample_rate, w.center_freq);
}

void WriteArtifacts(const ScenarioConfig& c, const RunReport& report,
                    const RunTrace& t, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  WriteText(dir / kReportFile, report.ToJson());
  if (c.outputs.csv) {
    if (!t.tx.symbols.empty()) {
      WriteSymbolsCsv(dir / kTxSymbolsFile, t.tx.symbols);
      WriteSymbolsCsv(dir / kRxSymbolsFile, t.rx.symbols);
      WriteEvmCsv(dir / kEvmFile, t.evm);
    }
    WritePsdCsv(dir / kPsdBeforeFile, WelchPsd(t.r_l));
    WritePsdCsv(dir / kPsdAfterFile, WelchPsd(t.output));
    WriteDepthCsv(dir / kDepthFile, t.depth);
  }
  if (c.outputs.waveforms) {
    // Restricted to the common window so the depth recomputes exactly.
    BasebandWaveform before = t.mix.int_l;
    BasebandWaveform after = t.interference_out;
    IntersectValid(before, after);
    WriteWaveformCsv(dir / kInterferenceBeforeFile, ValidOnly(before));
    WriteWaveformCsv(dir / kInterferenceAfterFile, ValidOnly(after));
    WriteWaveform(dir / "r_l.rcwv", t.r_l);
    WriteWaveform(dir / "r_h.rcwv", t.r_h);
    WriteWaveform(dir / "output.rcwv", t.output);
  }
}

std::string ModeDirName(CancellerMode mode) {
  return std::string(CancellerModeName(mode));
}

// Runs every job, `workers` at a time. Each job owns its row, so the result
// order never depends on scheduling.
void RunJobs(std::vector<std::function<void()>>& jobs, int workers) {
  const std::size_t n_threads = static_cast<std::size_t>(
      std::clamp<int>(workers, 1, static_cast<int>(std::max<std::size_t>(jobs.size(), 1))));
  if (n_threads <= 1) {
    for (auto& job : jobs) job();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) jobs[i]();
    });
  }
  for (auto& th : pool) th.join();
}

SweepRow RunRow(const ScenarioConfig& config, std::string label, double value,
                const SweepOptions& options) {
  SweepRow row;
  row.label = std::move(label);
  row.value = value;
  row.mode = config.canceller.mode;
  try {
    if (options.out_dir.empty()) {
      row.report = Simulate(config);
    } else {
      row.report = Run(config, options.out_dir /
                                   (row.label + "_" + ModeDirName(row.mode)));
    }
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

struct Job {
  ScenarioConfig config;
  std::string label;
  double value;
};

std::vector<SweepRow> RunAll(const std::vector<Job>& specs,
                             const SweepOptions& options) {
  std::vector<SweepRow> rows(specs.size());
  std::vector<std::function<void()>> jobs;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    jobs.emplace_back([&, i] {
      rows[i] = RunRow(specs[i].config, specs[i].label, specs[i].value, options);
    });
  }
  RunJobs(jobs, options.workers);
  return rows;
}

// The swept mode set: cancellation off, then the base mode when it differs.
std::vector<CancellerMode> OffAndBase(const ScenarioConfig& base) {
  std::vector<CancellerMode> modes = {CancellerMode::kOff};
  if (base.canceller.mode != CancellerMode::kOff) {
    modes.push_back(base.canceller.mode);
  }
  return modes;
}

}  // namespace

std::string RunReport::ToJson() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["mode"] = std::string(CancellerModeName(mode));
  j["seed"] = seed;
  j["evm_pct"] = evm_pct ? NumberOrNull(*evm_pct) : nlohmann::json(nullptr);
  j["evm_symbols"] = evm_symbols;
  j["depth_db"] = NumberOrNull(depth_db);
  j["depth_saturated"] = depth_saturated;
  j["depth_band_hz"] = {depth_band.lo, depth_band.hi};
  j["isr_db_target"] =
      isr_db_target ? NumberOrNull(*isr_db_target) : nlohmann::json(nullptr);
  j["isr_db_measured"] = NumberOrNull(isr_db_measured);
  j["sir_db"] = NumberOrNull(sir_db);
  if (taps) {
    j["taps"] = {{"delay_s", taps->delay},
                 {"gain", ComplexJson(taps->gain)},
                 {"residual_power_db", NumberOrNull(taps->residual_power_db)}};
  } else {
    j["taps"] = nullptr;
  }
  if (demix) {
    nlohmann::json m = nlohmann::json::array();
    for (int r = 0; r < 2; ++r) {
      m.push_back({ComplexJson((*demix)(r, 0)), ComplexJson((*demix)(r, 1))});
    }
    j["demix"] = m;
  } else {
    j["demix"] = nullptr;
  }
  j["iterations"] = iterations;
  j["converged"] = converged;
  j["free_parameters"] = free_parameters;
  j["flags"] = flags;
  j["cfo_estimate_hz"] =
      cfo_estimate_hz ? NumberOrNull(*cfo_estimate_hz) : nlohmann::json(nullptr);
  j["runtime_ms"] = runtime_ms;
  j["separation_ms"] = separation_ms;
  return j.dump(2) + "\n";
}

RunReport Simulate(const ScenarioConfig& c, RunTrace* trace) {
  const auto t_start = Clock::now();
  RequireValid(c);
  RunTrace local;
  RunTrace& t = trace ? *trace : local;

  RunReport r;
  r.name = c.name;
  r.mode = c.canceller.mode;
  r.seed = *c.sim.seed;
  const std::uint64_t seed = r.seed;
  const double fs = c.sim.sample_rate;
  PulseShape pulse;
  pulse.sps = c.Sps();
  pulse.rolloff = c.soi.rolloff;
  pulse.span_symbols = c.soi.span_symbols;
  const std::size_t n_samples =
      (c.sim.n_symbols + static_cast<std::size_t>(pulse.span_symbols)) *
      static_cast<std::size_t>(pulse.sps);
  const bool has_symbols = c.soi.kind == SoiConfig::Kind::kSymbols;

  // Synthesis.
  BasebandWaveform soi;
  BasebandWaveform intf;
  Stage("sigsynth", [&] {
    if (has_symbols) {
      t.tx = RandomSymbols(c.sim.n_symbols, c.soi.format, c.soi.symbol_rate,
                           DeriveSeed(seed, 1));
      soi = GenerateSoi(t.tx, pulse, c.soi.carrier);
      Scale(soi, std::sqrt(c.soi.power));
    } else {
      soi = GenerateGaussianNoise(c.soi.power, n_samples, fs,
                                  DeriveSeed(seed, 1), c.soi.carrier);
    }
    intf = MakeInterference(c, n_samples, DeriveSeed(seed, 2));
    return 0;
  });

  // Channel.
  const MixingScenario scenario = c.channel.ToScenario(DeriveSeed(seed, 3));
  t.mix = Stage("channel", [&] { return MixDetailed(soi, intf, scenario); });
  Stage("metrics", [&] {
    auto isr_now = [&] {
      return IsrAt(WelchPsd(t.mix.soi_l), WelchPsd(t.mix.int_l), 0.0);
    };
    if (c.interference.isr_db) {
      r.isr_db_target = c.interference.isr_db;
      const double measured = isr_now();
      if (std::isfinite(measured)) {
        const double k = std::pow(10.0, (*c.interference.isr_db - measured) / 20.0);
        Scale(t.mix.int_l, k);
        Scale(t.mix.int_h, k);
      }
    }
    r.isr_db_measured = isr_now();
    return 0;
  });
  if (c.channel.cfo_hz != 0.0) {
    t.mix.soi_l = ApplyFrequencyOffset(t.mix.soi_l, c.channel.cfo_hz);
  }
  {
    MixOutput m = Stage("channel", [&] { return Sum(t.mix); });
    t.r_l = std::move(m.r_l);
    t.r_h = std::move(m.r_h);
  }

  // Separation. Only the separator itself is timed.
  BasebandWaveform noise_out;
  switch (c.canceller.mode) {
    case CancellerMode::kOff:
      t.output = t.r_l;
      t.soi_out = t.mix.soi_l;
      t.interference_out = t.mix.int_l;
      r.free_parameters = 0;
      break;
    case CancellerMode::kReference: {
      CancellerTaps taps;
      const bool perturbed = c.canceller.tap_gain_error != 0.0 ||
                             c.canceller.tap_phase_error_deg != 0.0 ||
                             c.canceller.tap_delay_error != 0.0;
      const bool calibrated =
          c.canceller.training == CancellerConfig::Training::kCalibration;
      if (calibrated) {
        taps = Stage("canceller", [&] { return CalibrationTaps(c, n_samples, seed); });
        PerturbTaps(c.canceller, taps);
      }
      r.separation_ms = Timed(c.sim.timing_repeats, [&] {
        Stage("canceller", [&] {
          if (calibrated) {
            t.output = Cancel(t.r_l, t.r_h, taps);
          } else if (perturbed) {
            taps = TrainTaps(t.r_l, t.r_h, ToCancelOptions(c.canceller));
            PerturbTaps(c.canceller, taps);
            t.output = Cancel(t.r_l, t.r_h, taps);
          } else {
            CancelResult res = CancelAuto(t.r_l, t.r_h, ToCancelOptions(c.canceller));
            taps = res.taps;
            t.output = std::move(res.output);
          }
          return 0;
        });
      });
      Stage("canceller", [&] {
        t.soi_out = Cancel(t.mix.soi_l, t.mix.soi_h, taps);
        t.interference_out = Cancel(t.mix.int_l, t.mix.int_h, taps);
        return 0;
      });
      r.taps = taps;
      r.free_parameters = 2;
      break;
    }
    case CancellerMode::kBss: {
      IcaSettings s;
      s.max_iterations = c.canceller.ica_max_iterations;
      s.tolerance = c.canceller.ica_tolerance;
      s.training_window = c.canceller.training_window;
      SeparationResult sep;
      r.separation_ms = Timed(c.sim.timing_repeats, [&] {
        sep = Stage("canceller", [&] {
          return ResolvePermutation(BssSeparate(t.r_l, t.r_h, s), t.r_h);
        });
      });
      const cplx d0 = sep.demix(0, 0);
      const cplx d1 = sep.demix(0, 1);
      t.output = std::move(sep.outputs[0]);
      t.soi_out = Combine(d0, t.mix.soi_l, d1, t.mix.soi_h);
      t.interference_out = Combine(d0, t.mix.int_l, d1, t.mix.int_h);
      r.demix = sep.demix;
      r.iterations = sep.iterations;
      r.converged = sep.converged;
      r.free_parameters = sep.free_parameters;
      if (sep.not_converged) r.flags.push_back("NotConverged");
      if (sep.unseparable) r.flags.push_back("UnseparableWarning");
      break;
    }
  }

  // Measurement. Residual interference is referred back to the SOI level
  // so the depth is independent of the separator's output scaling.
  Stage("metrics", [&] {
    t.soi_gain = ProjectionGain(t.soi_out, t.mix.soi_l);
    if (std::abs(t.soi_gain) > 0.0) Scale(t.interference_out, 1.0 / t.soi_gain);
    const double half_bw = 0.5 * (1.0 + c.soi.rolloff) * c.soi.symbol_rate;
    t.depth = CancellationDepth(t.mix.int_l, t.interference_out,
                                Band{-half_bw, half_bw});
    r.depth_band = t.depth.band;
    if (c.canceller.mode == CancellerMode::kOff) {
      r.depth_db = 0.0;
    } else {
      r.depth_db = t.depth.depth_db;
      r.depth_saturated = t.depth.saturated;
    }
    r.sir_db = SeparationSirDb(t.output, t.mix.soi_l);
    return 0;
  });

  if (has_symbols) {
    DemodConfig dc;
    dc.pulse = pulse;
    dc.symbol_rate = c.soi.symbol_rate;
    dc.format = c.soi.format;
    dc.timing_offset = c.channel.a11.delay * fs;
    Stage("demod", [&] {
      const SymbolStream all = Demodulate(t.output, dc);
      const auto [first, last] = ValidSymbolRange(t.output, dc);
      if (last <= first) {
        throw Error(ErrorCode::kTooShort, "no symbol inside the valid window");
      }
      t.first_symbol = first;
      SymbolStream tx = t.tx;
      tx.symbols.assign(t.tx.symbols.begin() + static_cast<std::ptrdiff_t>(first),
                        t.tx.symbols.begin() + static_cast<std::ptrdiff_t>(last));
      t.rx = all;
      t.rx.symbols.assign(all.symbols.begin() + static_cast<std::ptrdiff_t>(first),
                          all.symbols.begin() + static_cast<std::ptrdiff_t>(last));
      if (c.channel.cfo_hz != 0.0) {
        double hz = 0.0;
        t.rx = CorrectFrequencyOffset(t.rx, tx, &hz);
        r.cfo_estimate_hz = hz;
      }
      t.tx = std::move(tx);
      return 0;
    });
    t.evm = Stage("metrics", [&] { return Evm(t.rx, t.tx); });
    r.evm_pct = t.evm.evm_rms_pct;
    r.evm_symbols = t.evm.n_symbols;
  }

  r.runtime_ms = Ms(t_start, Clock::now());
  return r;
}

RunReport Run(const ScenarioConfig& config, const std::filesystem::path& dir,
              RunTrace* trace) {
  namespace fs = std::filesystem;
  RunTrace local;
  RunTrace& t = trace ? *trace : local;
  RunReport report = Simulate(config, &t);

  const fs::path target = fs::absolute(dir).lexically_normal();
  const fs::path staging =
      target.parent_path() / ("." + target.filename().string() + ".staging");
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  fs::remove_all(staging, ec);
  if (!fs::create_directories(staging, ec) && ec) {
    throw Error(ErrorCode::kIoError, "expcli: cannot create " + staging.string());
  }
  Stage("expcli", [&] {
    WriteArtifacts(config, report, t, staging);
    return 0;
  });
  fs::remove_all(target, ec);
  fs::rename(staging, target, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError, "expcli: cannot publish " + target.string() +
                                         ": " + ec.message());
  }
  return report;
}

std::vector<SweepRow> SweepIsr(const ScenarioConfig& base,
                               const std::vector<double>& isr_db,
                               const SweepOptions& options) {
  std::vector<Job> specs;
  for (double isr : isr_db) {
    for (CancellerMode mode : OffAndBase(base)) {
      ScenarioConfig c = base;
      c.interference.isr_db = isr;
      c.canceller.mode = mode;
      specs.push_back({c, "isr" + Shortest(isr), isr});
    }
  }
  return RunAll(specs, options);
}

std::vector<SweepRow> SweepFrequency(const ScenarioConfig& base,
                                     const std::vector<double>& carriers,
                                     const SweepOptions& options) {
  std::vector<Job> specs;
  for (double f : carriers) {
    ScenarioConfig c = base;
    c.soi.carrier = f;
    c.interference.carrier = f;
    c.interference.kind = InterferenceConfig::Kind::kTone;
    specs.push_back({c, "f" + Shortest(f), f});
  }
  return RunAll(specs, options);
}

std::vector<SweepRow> SweepFormat(const ScenarioConfig& base,
                                  const std::vector<Constellation>& formats,
                                  const SweepOptions& options) {
  std::vector<Job> specs;
  for (Constellation f : formats) {
    for (CancellerMode mode : OffAndBase(base)) {
      ScenarioConfig c = base;
      c.soi.format = f;
      c.canceller.mode = mode;
      specs.push_back({c, std::string(ConstellationName(f)),
                       static_cast<double>(BitsPerSymbol(f))});
    }
  }
  return RunAll(specs, options);
}

std::vector<SweepRow> CompareSeparators(const ScenarioConfig& base,
                                        const SweepOptions& options) {
  std::vector<Job> specs;
  for (CancellerMode mode : {CancellerMode::kReference, CancellerMode::kBss}) {
    ScenarioConfig c = base;
    c.canceller.mode = mode;
    specs.push_back({c, "compare", 0.0});
  }
  // Serial on purpose: the two separators are timed against each other.
  SweepOptions serial = options;
  serial.workers = 1;
  return RunAll(specs, serial);
}

void WriteSweepCsv(const std::filesystem::path& path,
                   const std::string& value_column,
                   const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "label," << value_column
     << ",mode,ok,evm_pct,depth_db,isr_db_measured,sir_db,iterations,"
        "converged,free_parameters,separation_ms,flags,error\n";
  for (const SweepRow& row : rows) {
    const RunReport& r = row.report;
    std::string err = row.error;
    for (char& ch : err) {
      if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
    }
    os << row.label << ',' << Shortest(row.value) << ','
       << CancellerModeName(row.mode) << ',' << (row.ok ? 1 : 0) << ',';
    if (row.ok) {
      os << (r.evm_pct ? Shortest(*r.evm_pct) : "") << ','
         << Shortest(r.depth_db) << ',' << Shortest(r.isr_db_measured) << ','
         << Shortest(r.sir_db) << ',' << r.iterations << ','
         << (r.converged ? 1 : 0) << ',' << r.free_parameters << ','
         << Shortest(r.separation_ms) << ',' << FlagsString(r.flags) << ',';
    } else {
      os << ",,,,,,,,,";
    }
    os << err << '\n';
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  WriteText(tmp, os.str());
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot publish " + path.string());
}

}  // namespace rfic
