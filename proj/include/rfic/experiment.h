#ifndef RFIC_EXPERIMENT_H_
#define RFIC_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rfic/canceller.h"
#include "rfic/channel.h"
#include "rfic/metrics.h"
#include "rfic/scenario_config.h"
#include "rfic/sigsynth.h"

namespace rfic {

struct RunReport {
  std::string name;
  CancellerMode mode = CancellerMode::kOff;
  std::uint64_t seed = 0;

  std::optional<double> evm_pct;  // unset for Gaussian SOI
  std::size_t evm_symbols = 0;
  double depth_db = 0.0;          // 0 in off mode
  bool depth_saturated = false;
  Band depth_band;
  std::optional<double> isr_db_target;
  double isr_db_measured = 0.0;
  double sir_db = 0.0;            // SOI vs everything else in the output

  std::optional<CancellerTaps> taps;
  std::optional<Eigen::Matrix2cd> demix;
  int iterations = 0;
  bool converged = true;
  int free_parameters = 0;
  std::vector<std::string> flags;  // NotConverged, UnseparableWarning
  std::optional<double> cfo_estimate_hz;

  // Wall clock; the only fields that differ between identical runs.
  double runtime_ms = 0.0;
  double separation_ms = 0.0;

  std::string ToJson() const;
};

// In-memory byproducts of a run, for tests and offline checks.
struct RunTrace {
  SymbolStream tx;
  SymbolStream rx;  // demodulated symbols over the valid range
  std::size_t first_symbol = 0;
  MixComponents mix;
  BasebandWaveform r_l;
  BasebandWaveform r_h;
  BasebandWaveform output;            // SOI estimate
  BasebandWaveform soi_out;           // SOI content of `output`
  BasebandWaveform interference_out;  // residual interference, SOI-gain scaled
  cplx soi_gain{1.0, 0.0};            // SOI content of output / soi_l
  EvmReport evm;
  DepthReport depth;
};

// synthesise -> mix -> separate -> demodulate -> measure. Pure function of
// the config; artifacts are not written.
RunReport Simulate(const ScenarioConfig& config, RunTrace* trace = nullptr);

// Simulate, then write the requested artifacts into `dir` atomically
// (staged next to it and renamed into place).
RunReport Run(const ScenarioConfig& config, const std::filesystem::path& dir,
              RunTrace* trace = nullptr);

// Artifact names.
inline constexpr const char* kReportFile = "report.json";
inline constexpr const char* kTxSymbolsFile = "tx_symbols.csv";
inline constexpr const char* kRxSymbolsFile = "rx_symbols.csv";
inline constexpr const char* kEvmFile = "evm.csv";
inline constexpr const char* kPsdBeforeFile = "psd_before.csv";
inline constexpr const char* kPsdAfterFile = "psd_after.csv";
inline constexpr const char* kDepthFile = "depth.csv";
inline constexpr const char* kInterferenceBeforeFile = "interference_before.csv";
inline constexpr const char* kInterferenceAfterFile = "interference_after.csv";

struct SweepRow {
  std::string label;  // swept value as written in the table
  double value = 0.0;
  CancellerMode mode = CancellerMode::kOff;
  bool ok = false;
  std::string error;
  RunReport report;
};

struct SweepOptions {
  std::filesystem::path out_dir;  // empty: no artifacts
  int workers = 1;                // scenarios run concurrently
};

// One run per ISR with cancellation off and with the base mode.
std::vector<SweepRow> SweepIsr(const ScenarioConfig& base,
                               const std::vector<double>& isr_db,
                               const SweepOptions& options = {});

// Tone probe at each carrier (SOI and interference carriers both moved).
std::vector<SweepRow> SweepFrequency(const ScenarioConfig& base,
                                     const std::vector<double>& carriers,
                                     const SweepOptions& options = {});

// One run per format with cancellation off and with the base mode.
std::vector<SweepRow> SweepFormat(const ScenarioConfig& base,
                                  const std::vector<Constellation>& formats,
                                  const SweepOptions& options = {});

// Reference and BSS separation of the same mixed record.
std::vector<SweepRow> CompareSeparators(const ScenarioConfig& base,
                                        const SweepOptions& options = {});

// Columns: label,mode,ok,evm_pct,depth_db,isr_db_measured,sir_db,
// iterations,converged,free_parameters,separation_ms,flags,error
void WriteSweepCsv(const std::filesystem::path& path,
                   const std::string& value_column,
                   const std::vector<SweepRow>& rows);

}  // namespace rfic

#endif  // RFIC_EXPERIMENT_H_
