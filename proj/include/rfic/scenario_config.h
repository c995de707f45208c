#ifndef RFIC_SCENARIO_CONFIG_H_
#define RFIC_SCENARIO_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rfic/channel.h"
#include "rfic/sigsynth.h"

namespace rfic {

inline constexpr int kScenarioSchemaVersion = 1;

struct SoiConfig {
  enum class Kind { kSymbols, kGaussian };
  Kind kind = Kind::kSymbols;
  Constellation format = Constellation::kQpsk;
  double symbol_rate = 5e6;
  double carrier = 2.4e9;
  double power = 1.0;
  double rolloff = 0.2;
  int span_symbols = 64;
};

struct InterferenceConfig {
  enum class Kind { kFmNoise, kTone, kGaussian };
  Kind kind = Kind::kFmNoise;
  double deviation_pp = 80e6;
  double mod_noise_bw = 10e6;
  double carrier = 2.4e9;
  // Interference-to-SOI PSD ratio at the SOI carrier; unset leaves the
  // interference at unit power.
  std::optional<double> isr_db = 18.0;
  double tone_offset = 0.0;  // Hz, tone kind only
};

struct PathConfig {
  bool enabled = true;  // disabled paths have exactly zero gain
  double gain_db = 0.0;
  double phase_deg = 0.0;
  double delay = 0.0;  // seconds
  ModulatorResponse response;
  double noise_psd = 0.0;

  PathModel ToModel() const;
  static PathConfig Disabled() {
    PathConfig p;
    p.enabled = false;
    return p;
  }
};

struct ChannelConfig {
  bool reference_mode = true;
  PathConfig a11;
  PathConfig a12;
  PathConfig a21 = PathConfig::Disabled();  // must stay disabled in reference mode
  PathConfig a22;
  double cfo_hz = 0.0;  // carrier offset injected on the antenna branch

  MixingScenario ToScenario(std::uint64_t seed) const;
};

enum class CancellerMode { kOff, kReference, kBss };
std::string_view CancellerModeName(CancellerMode mode);

struct CancellerConfig {
  enum class Training { kRecord, kCalibration };

  CancellerMode mode = CancellerMode::kReference;
  Training training = Training::kRecord;
  double calibration_carrier = 50e6;
  std::size_t training_window = 0;
  std::size_t delay_window = 0;
  double max_lag = 1e-6;
  double min_coherence = 0.2;
  bool nlms = false;
  double nlms_step = 0.05;
  int ica_max_iterations = 200;
  double ica_tolerance = 1e-6;
  // Tap-error model: imperfect analog matching applied after training.
  double tap_gain_error = 0.0;       // relative magnitude error
  double tap_phase_error_deg = 0.0;
  double tap_delay_error = 0.0;      // seconds
};

struct SimConfig {
  double sample_rate = 200e6;
  std::size_t n_symbols = 6553;
  std::optional<std::uint64_t> seed;
  // The separator is run this many times and the fastest is reported;
  // results are identical across repeats.
  int timing_repeats = 1;
};

struct OutputConfig {
  std::string directory = "out";
  bool waveforms = false;  // .rcwv binaries for r_L, r_H and the output
  bool csv = true;         // PSD, depth, constellation and EVM CSVs
};

struct SweepConfig {
  std::vector<double> isr_db;
  std::vector<double> carriers;
  std::vector<Constellation> formats;
};

struct ScenarioConfig {
  int schema_version = kScenarioSchemaVersion;
  std::string name;
  SoiConfig soi;
  InterferenceConfig interference;
  ChannelConfig channel;
  CancellerConfig canceller;
  SimConfig sim;
  OutputConfig outputs;
  SweepConfig sweep;

  int Sps() const;
};

// Parses YAML text. Unknown keys, wrong types and semantic violations are
// all collected; the thrown kConfigError lists every offending field.
// A seed override is applied before validation, so it also satisfies a file
// without sim.seed.
ScenarioConfig ParseScenarioConfig(
    std::string_view yaml_text,
    std::optional<std::uint64_t> seed_override = std::nullopt);
ScenarioConfig LoadScenarioConfig(
    const std::filesystem::path& path,
    std::optional<std::uint64_t> seed_override = std::nullopt);

// Semantic checks only; empty when valid.
std::vector<std::string> ValidateScenarioConfig(const ScenarioConfig& config);

// Throws kConfigError listing every issue from ValidateScenarioConfig.
void RequireValid(const ScenarioConfig& config);

}  // namespace rfic

#endif  // RFIC_SCENARIO_CONFIG_H_
