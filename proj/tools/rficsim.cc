// rficsim: scenario runner for the interference-cancellation simulator.
//
//   rficsim run --config configs/interference_demo.yaml --out out/demo
//   rficsim sweep-isr --config configs/isr_sweep.yaml
//
// Exit status: 0 success, 1 config error, 2 runtime error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rfic/error.h"
#include "rfic/experiment.h"
#include "rfic/scenario_config.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
  int workers = 1;
};

void AddCommonFlags(CLI::App* cmd, CommonFlags& f, bool needs_out) {
  cmd->add_option("--config", f.config, "Scenario YAML file")
      ->required()
      ->check(CLI::ExistingFile);
  if (needs_out) {
    cmd->add_option("--out", f.out, "Output directory (overrides outputs.directory)");
    cmd->add_option("--seed", f.seed, "Seed override");
    cmd->add_option("--format", f.format, "Table format")
        ->check(CLI::IsMember({"csv"}));
  }
}

rfic::ScenarioConfig Load(const CommonFlags& f) {
  return rfic::LoadScenarioConfig(f.config, f.seed);
}

std::filesystem::path OutDir(const CommonFlags& f, const rfic::ScenarioConfig& c) {
  return f.out.empty() ? std::filesystem::path(c.outputs.directory)
                       : std::filesystem::path(f.out);
}

void PrintRows(const std::vector<rfic::SweepRow>& rows) {
  for (const auto& row : rows) {
    std::cout << row.label << " " << rfic::CancellerModeName(row.mode) << ": ";
    if (!row.ok) {
      std::cout << "FAILED " << row.error << "\n";
      continue;
    }
    const auto& r = row.report;
    if (r.evm_pct) std::cout << "evm=" << *r.evm_pct << "% ";
    std::cout << "depth=" << r.depth_db << "dB sir=" << r.sir_db << "dB";
    if (r.mode == rfic::CancellerMode::kBss) {
      std::cout << " iterations=" << r.iterations;
    }
    std::cout << " params=" << r.free_parameters
              << " separation_ms=" << r.separation_ms << "\n";
  }
}

int Sweep(const CommonFlags& f, const std::string& table,
          const std::string& value_column,
          std::vector<rfic::SweepRow> (*fn)(const rfic::ScenarioConfig&,
                                            const rfic::SweepOptions&)) {
  const rfic::ScenarioConfig c = Load(f);
  rfic::SweepOptions opt;
  opt.out_dir = OutDir(f, c);
  opt.workers = f.workers;
  const auto rows = fn(c, opt);
  std::filesystem::create_directories(opt.out_dir);
  const auto path = opt.out_dir / table;
  rfic::WriteSweepCsv(path, value_column, rows);
  PrintRows(rows);
  std::cout << "table: " << path.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RF interference cancellation simulator"};
  app.require_subcommand(1);

  CommonFlags f;
  auto* run = app.add_subcommand("run", "Single scenario run");
  AddCommonFlags(run, f, true);
  auto* isr = app.add_subcommand("sweep-isr", "EVM versus ISR, with and without cancellation");
  AddCommonFlags(isr, f, true);
  auto* freq = app.add_subcommand("sweep-freq", "Tone-probe depth versus carrier");
  AddCommonFlags(freq, f, true);
  auto* fmt = app.add_subcommand("sweep-format", "EVM versus modulation format");
  AddCommonFlags(fmt, f, true);
  auto* cmp = app.add_subcommand("compare-bss", "Reference versus blind separation");
  AddCommonFlags(cmp, f, true);
  auto* val = app.add_subcommand("validate-config", "Check a scenario file");
  AddCommonFlags(val, f, false);
  for (auto* sub : {isr, freq, fmt}) {
    sub->add_option("--workers", f.workers, "Scenarios run concurrently")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*val) {
      const auto c = rfic::LoadScenarioConfig(f.config);
      std::cout << "ok: " << (c.name.empty() ? f.config : c.name) << "\n";
      return kExitOk;
    }
    if (*run) {
      const rfic::ScenarioConfig c = Load(f);
      const auto dir = OutDir(f, c);
      const rfic::RunReport r = rfic::Run(c, dir);
      std::cout << r.ToJson();
      return kExitOk;
    }
    if (*isr) {
      return Sweep(f, "isr_sweep.csv", "isr_db",
                   [](const rfic::ScenarioConfig& c, const rfic::SweepOptions& o) {
                     return rfic::SweepIsr(c, c.sweep.isr_db, o);
                   });
    }
    if (*freq) {
      return Sweep(f, "frequency_sweep.csv", "carrier_hz",
                   [](const rfic::ScenarioConfig& c, const rfic::SweepOptions& o) {
                     return rfic::SweepFrequency(c, c.sweep.carriers, o);
                   });
    }
    if (*fmt) {
      return Sweep(f, "format_sweep.csv", "bits_per_symbol",
                   [](const rfic::ScenarioConfig& c, const rfic::SweepOptions& o) {
                     return rfic::SweepFormat(c, c.sweep.formats, o);
                   });
    }
    if (*cmp) {
      return Sweep(f, "separator_comparison.csv", "value",
                   [](const rfic::ScenarioConfig& c, const rfic::SweepOptions& o) {
                     return rfic::CompareSeparators(c, o);
                   });
    }
  } catch (const rfic::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == rfic::ErrorCode::kConfigError ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
