#include "rfic/scenario_config.h"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "rfic/error.h"

namespace rfic {
namespace {

// Walks a YAML tree, recording every problem instead of stopping at the
// first, so a broken config reports all offending fields at once.
class Reader {
 public:
  std::vector<std::string>& errors() { return errors_; }

  void AllowOnly(const YAML::Node& map, const std::string& where,
                 std::initializer_list<const char*> keys) {
    if (!map || map.IsNull()) return;
    if (!map.IsMap()) {
      errors_.push_back(where + ": expected a mapping");
      return;
    }
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) {
        errors_.push_back(Join(where, key) + ": unknown field");
      }
    }
  }

  template <typename T>
  void Read(const YAML::Node& map, const std::string& where, const char* key,
            T& out) {
    if (!map || !map.IsMap()) return;
    const YAML::Node node = map[key];
    if (!node) return;
    try {
      out = node.as<T>();
    } catch (const YAML::Exception&) {
      errors_.push_back(Join(where, key) + ": wrong type ('" +
                        Scalar(node) + "')");
    }
  }

  void ReadOptionalDouble(const YAML::Node& map, const std::string& where,
                          const char* key, std::optional<double>& out) {
    if (!map || !map.IsMap()) return;
    const YAML::Node node = map[key];
    if (!node) return;
    if (node.IsNull()) {
      out.reset();
      return;
    }
    double v = 0.0;
    Read(map, where, key, v);
    out = v;
  }

  static std::string Join(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
  }

 private:
  static std::string Scalar(const YAML::Node& n) {
    if (n.IsScalar()) return n.Scalar();
    if (n.IsSequence()) return "<sequence>";
    if (n.IsMap()) return "<mapping>";
    return "<null>";
  }

  std::vector<std::string> errors_;
};

void ReadResponse(Reader& r, const YAML::Node& node, const std::string& where,
                  ModulatorResponse& out) {
  if (!node) return;
  r.AllowOnly(node, where, {"kind", "f3db", "order"});
  std::string kind = "flat";
  r.Read(node, where, "kind", kind);
  if (kind == "flat") {
    out = ModulatorResponse::Flat();
  } else if (kind == "butterworth" || kind == "butterworth_lowpass") {
    out.kind = ModulatorResponse::Kind::kButterworthLowpass;
    out.f3db = 0.0;
    out.order = 0;
    r.Read(node, where, "f3db", out.f3db);
    r.Read(node, where, "order", out.order);
  } else {
    r.errors().push_back(where + ".kind: unknown response '" + kind + "'");
  }
}

void ReadPath(Reader& r, const YAML::Node& node, const std::string& where,
              PathConfig& out) {
  if (!node) return;
  r.AllowOnly(node, where, {"enabled", "gain_db", "phase_deg", "delay",
                            "noise_psd", "response"});
  out.enabled = true;
  r.Read(node, where, "enabled", out.enabled);
  r.Read(node, where, "gain_db", out.gain_db);
  r.Read(node, where, "phase_deg", out.phase_deg);
  r.Read(node, where, "delay", out.delay);
  r.Read(node, where, "noise_psd", out.noise_psd);
  if (node.IsMap()) ReadResponse(r, node["response"], where + ".response", out.response);
}

template <typename Enum>
void ReadEnum(Reader& r, const YAML::Node& map, const std::string& where,
              const char* key,
              std::initializer_list<std::pair<const char*, Enum>> names,
              Enum& out) {
  if (!map || !map.IsMap() || !map[key]) return;
  std::string value;
  r.Read(map, where, key, value);
  for (const auto& [name, e] : names) {
    if (value == name) {
      out = e;
      return;
    }
  }
  r.errors().push_back(Reader::Join(where, key) + ": unknown value '" + value +
                       "'");
}

std::string Join(const std::vector<std::string>& items) {
  std::ostringstream os;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) os << "; ";
    os << items[i];
  }
  return os.str();
}

}  // namespace

std::string_view CancellerModeName(CancellerMode mode) {
  switch (mode) {
    case CancellerMode::kOff:
      return "off";
    case CancellerMode::kReference:
      return "reference";
    case CancellerMode::kBss:
      return "bss";
  }
  return "unknown";
}

PathModel PathConfig::ToModel() const {
  PathModel p;
  p.gain = enabled ? std::polar(std::pow(10.0, gain_db / 20.0),
                                phase_deg * std::numbers::pi / 180.0)
                   : cplx(0.0, 0.0);
  p.delay = delay;
  p.response = response;
  p.noise_psd = noise_psd;
  return p;
}

MixingScenario ChannelConfig::ToScenario(std::uint64_t seed) const {
  MixingScenario s;
  s.a11 = a11.ToModel();
  s.a12 = a12.ToModel();
  s.a21 = a21.ToModel();
  s.a22 = a22.ToModel();
  s.reference_mode = reference_mode;
  if (reference_mode) s.a21.gain = cplx(0.0, 0.0);
  s.seed = seed;
  return s;
}

int ScenarioConfig::Sps() const {
  return static_cast<int>(std::lround(sim.sample_rate / soi.symbol_rate));
}

ScenarioConfig ParseScenarioConfig(std::string_view yaml_text,
                                   std::optional<std::uint64_t> seed_override) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("YAML syntax: ") + e.what());
  }
  if (!root.IsMap()) {
    throw Error(ErrorCode::kConfigError, "top level must be a mapping");
  }

  Reader r;
  ScenarioConfig c;
  r.AllowOnly(root, "", {"schema_version", "name", "soi", "interference",
                         "channel", "canceller", "sim", "outputs", "sweep"});
  if (!root["schema_version"]) {
    r.errors().push_back("schema_version: required");
  }
  r.Read(root, "", "schema_version", c.schema_version);
  r.Read(root, "", "name", c.name);

  const YAML::Node soi = root["soi"];
  r.AllowOnly(soi, "soi", {"kind", "format", "symbol_rate", "carrier", "power",
                           "rolloff", "span_symbols"});
  ReadEnum<SoiConfig::Kind>(r, soi, "soi", "kind",
                            {{"symbols", SoiConfig::Kind::kSymbols},
                             {"gaussian", SoiConfig::Kind::kGaussian}},
                            c.soi.kind);
  if (soi && soi.IsMap() && soi["format"]) {
    std::string f;
    r.Read(soi, "soi", "format", f);
    try {
      c.soi.format = ParseConstellation(f);
    } catch (const Error&) {
      r.errors().push_back("soi.format: unknown constellation '" + f + "'");
    }
  }
  r.Read(soi, "soi", "symbol_rate", c.soi.symbol_rate);
  r.Read(soi, "soi", "carrier", c.soi.carrier);
  r.Read(soi, "soi", "power", c.soi.power);
  r.Read(soi, "soi", "rolloff", c.soi.rolloff);
  r.Read(soi, "soi", "span_symbols", c.soi.span_symbols);

  const YAML::Node intf = root["interference"];
  r.AllowOnly(intf, "interference", {"kind", "deviation_pp", "mod_noise_bw",
                                     "carrier", "isr_db", "tone_offset"});
  ReadEnum<InterferenceConfig::Kind>(
      r, intf, "interference", "kind",
      {{"fm_noise", InterferenceConfig::Kind::kFmNoise},
       {"tone", InterferenceConfig::Kind::kTone},
       {"gaussian", InterferenceConfig::Kind::kGaussian}},
      c.interference.kind);
  r.Read(intf, "interference", "deviation_pp", c.interference.deviation_pp);
  r.Read(intf, "interference", "mod_noise_bw", c.interference.mod_noise_bw);
  r.Read(intf, "interference", "carrier", c.interference.carrier);
  r.ReadOptionalDouble(intf, "interference", "isr_db", c.interference.isr_db);
  r.Read(intf, "interference", "tone_offset", c.interference.tone_offset);

  const YAML::Node ch = root["channel"];
  r.AllowOnly(ch, "channel",
              {"reference_mode", "cfo_hz", "a11", "a12", "a21", "a22"});
  r.Read(ch, "channel", "reference_mode", c.channel.reference_mode);
  r.Read(ch, "channel", "cfo_hz", c.channel.cfo_hz);
  if (ch && ch.IsMap()) {
    ReadPath(r, ch["a11"], "channel.a11", c.channel.a11);
    ReadPath(r, ch["a12"], "channel.a12", c.channel.a12);
    ReadPath(r, ch["a21"], "channel.a21", c.channel.a21);
    ReadPath(r, ch["a22"], "channel.a22", c.channel.a22);
  }

  const YAML::Node can = root["canceller"];
  r.AllowOnly(can, "canceller",
              {"mode", "training", "calibration_carrier", "training_window", "delay_window",
               "max_lag", "min_coherence", "nlms", "nlms_step", "ica",
               "tap_error"});
  ReadEnum<CancellerMode>(r, can, "canceller", "mode",
                          {{"off", CancellerMode::kOff},
                           {"reference", CancellerMode::kReference},
                           {"bss", CancellerMode::kBss}},
                          c.canceller.mode);
  ReadEnum<CancellerConfig::Training>(
      r, can, "canceller", "training",
      {{"record", CancellerConfig::Training::kRecord},
       {"calibration", CancellerConfig::Training::kCalibration}},
      c.canceller.training);
  r.Read(can, "canceller", "calibration_carrier",
         c.canceller.calibration_carrier);
  r.Read(can, "canceller", "training_window", c.canceller.training_window);
  r.Read(can, "canceller", "delay_window", c.canceller.delay_window);
  r.Read(can, "canceller", "max_lag", c.canceller.max_lag);
  r.Read(can, "canceller", "min_coherence", c.canceller.min_coherence);
  r.Read(can, "canceller", "nlms", c.canceller.nlms);
  r.Read(can, "canceller", "nlms_step", c.canceller.nlms_step);
  if (can && can.IsMap()) {
    const YAML::Node ica = can["ica"];
    r.AllowOnly(ica, "canceller.ica", {"max_iterations", "tolerance"});
    r.Read(ica, "canceller.ica", "max_iterations",
           c.canceller.ica_max_iterations);
    r.Read(ica, "canceller.ica", "tolerance", c.canceller.ica_tolerance);
    const YAML::Node te = can["tap_error"];
    r.AllowOnly(te, "canceller.tap_error", {"gain", "phase_deg", "delay"});
    r.Read(te, "canceller.tap_error", "gain", c.canceller.tap_gain_error);
    r.Read(te, "canceller.tap_error", "phase_deg",
           c.canceller.tap_phase_error_deg);
    r.Read(te, "canceller.tap_error", "delay", c.canceller.tap_delay_error);
  }

  const YAML::Node sim = root["sim"];
  r.AllowOnly(sim, "sim", {"sample_rate", "n_symbols", "seed", "timing_repeats"});
  r.Read(sim, "sim", "timing_repeats", c.sim.timing_repeats);
  r.Read(sim, "sim", "sample_rate", c.sim.sample_rate);
  r.Read(sim, "sim", "n_symbols", c.sim.n_symbols);
  if (sim && sim.IsMap() && sim["seed"]) {
    std::uint64_t seed = 0;
    const std::size_t before = r.errors().size();
    r.Read(sim, "sim", "seed", seed);
    if (r.errors().size() == before) c.sim.seed = seed;
  }

  const YAML::Node out = root["outputs"];
  r.AllowOnly(out, "outputs", {"directory", "waveforms", "csv"});
  r.Read(out, "outputs", "directory", c.outputs.directory);
  r.Read(out, "outputs", "waveforms", c.outputs.waveforms);
  r.Read(out, "outputs", "csv", c.outputs.csv);

  const YAML::Node sw = root["sweep"];
  r.AllowOnly(sw, "sweep", {"isr_db", "carriers", "formats"});
  r.Read(sw, "sweep", "isr_db", c.sweep.isr_db);
  r.Read(sw, "sweep", "carriers", c.sweep.carriers);
  if (sw && sw.IsMap() && sw["formats"]) {
    std::vector<std::string> names;
    r.Read(sw, "sweep", "formats", names);
    for (const auto& n : names) {
      try {
        c.sweep.formats.push_back(ParseConstellation(n));
      } catch (const Error&) {
        r.errors().push_back("sweep.formats: unknown constellation '" + n + "'");
      }
    }
  }

  if (seed_override) c.sim.seed = seed_override;
  auto errors = r.errors();
  for (auto& e : ValidateScenarioConfig(c)) errors.push_back(std::move(e));
  if (!errors.empty()) throw Error(ErrorCode::kConfigError, Join(errors));
  return c;
}

ScenarioConfig LoadScenarioConfig(const std::filesystem::path& path,
                                  std::optional<std::uint64_t> seed_override) {
  std::ifstream is(path);
  if (!is) {
    throw Error(ErrorCode::kConfigError, "cannot open " + path.string());
  }
  std::stringstream ss;
  ss << is.rdbuf();
  return ParseScenarioConfig(ss.str(), seed_override);
}

std::vector<std::string> ValidateScenarioConfig(const ScenarioConfig& c) {
  std::vector<std::string> e;
  if (c.schema_version != kScenarioSchemaVersion) {
    e.push_back("schema_version: expected " +
                std::to_string(kScenarioSchemaVersion) + ", got " +
                std::to_string(c.schema_version));
  }
  if (!c.sim.seed) e.push_back("sim.seed: required (no implicit entropy)");
  if (!(c.sim.sample_rate > 0.0)) e.push_back("sim.sample_rate: must be > 0");
  if (c.sim.n_symbols < 16) e.push_back("sim.n_symbols: must be >= 16");
  if (c.sim.timing_repeats < 1) e.push_back("sim.timing_repeats: must be >= 1");
  if (!(c.soi.symbol_rate > 0.0)) e.push_back("soi.symbol_rate: must be > 0");
  if (!(c.soi.power > 0.0)) e.push_back("soi.power: must be > 0");
  if (!(c.soi.rolloff > 0.0 && c.soi.rolloff <= 1.0)) {
    e.push_back("soi.rolloff: must be in (0, 1]");
  }
  if (c.soi.span_symbols < 4 || c.soi.span_symbols % 2) {
    e.push_back("soi.span_symbols: must be even and >= 4");
  }
  if (c.sim.sample_rate > 0.0 && c.soi.symbol_rate > 0.0) {
    const double ratio = c.sim.sample_rate / c.soi.symbol_rate;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
      e.push_back("sim.sample_rate: must be an integer multiple of soi.symbol_rate");
    } else if (ratio < 2.0) {
      e.push_back("sim.sample_rate: needs >= 2 samples per symbol");
    }
  }
  if (!(c.soi.carrier >= 0.0)) e.push_back("soi.carrier: must be >= 0");
  if (!(c.interference.carrier >= 0.0)) {
    e.push_back("interference.carrier: must be >= 0");
  }

  // Occupied bandwidth of the composite envelope around the SOI carrier.
  const double soi_half = 0.5 * (1.0 + c.soi.rolloff) * c.soi.symbol_rate;
  const double offset = c.interference.carrier - c.soi.carrier;
  double int_half = 0.0;
  switch (c.interference.kind) {
    case InterferenceConfig::Kind::kFmNoise:
      if (!(c.interference.deviation_pp >= 0.0)) {
        e.push_back("interference.deviation_pp: must be >= 0");
      }
      if (!(c.interference.mod_noise_bw > 0.0)) {
        e.push_back("interference.mod_noise_bw: must be > 0");
      }
      int_half = c.interference.deviation_pp + c.interference.mod_noise_bw;
      break;
    case InterferenceConfig::Kind::kTone:
      int_half = std::abs(c.interference.tone_offset);
      break;
    case InterferenceConfig::Kind::kGaussian:
      int_half = 0.0;
      break;
  }
  const double occupied = 2.0 * std::max(soi_half, std::abs(offset) + int_half);
  if (c.sim.sample_rate > 0.0 && !(c.sim.sample_rate > occupied)) {
    e.push_back("sim.sample_rate: must exceed the occupied bandwidth (" +
                std::to_string(occupied) + " Hz)");
  }

  auto check_path = [&](const PathConfig& p, const char* name) {
    const std::string where = std::string("channel.") + name;
    if (!(p.delay >= 0.0)) e.push_back(where + ".delay: must be >= 0");
    if (!(p.noise_psd >= 0.0)) e.push_back(where + ".noise_psd: must be >= 0");
    if (p.response.kind == ModulatorResponse::Kind::kButterworthLowpass) {
      if (!(p.response.f3db > 0.0)) {
        e.push_back(where + ".response.f3db: must be > 0");
      }
      if (p.response.order < 1) {
        e.push_back(where + ".response.order: must be >= 1");
      }
    }
  };
  check_path(c.channel.a11, "a11");
  check_path(c.channel.a12, "a12");
  check_path(c.channel.a21, "a21");
  check_path(c.channel.a22, "a22");
  if (c.channel.reference_mode && c.channel.a21.enabled) {
    e.push_back("channel.a21: must be disabled in reference mode");
  }

  if (!(c.canceller.max_lag >= 0.0)) e.push_back("canceller.max_lag: must be >= 0");
  if (!(c.canceller.min_coherence >= 0.0 && c.canceller.min_coherence <= 1.0)) {
    e.push_back("canceller.min_coherence: must be in [0, 1]");
  }
  if (c.canceller.ica_max_iterations < 1) {
    e.push_back("canceller.ica.max_iterations: must be >= 1");
  }
  if (!(c.canceller.ica_tolerance > 0.0)) {
    e.push_back("canceller.ica.tolerance: must be > 0");
  }
  if (!(c.canceller.nlms_step > 0.0 && c.canceller.nlms_step < 2.0)) {
    e.push_back("canceller.nlms_step: must be in (0, 2)");
  }
  if (!(c.canceller.calibration_carrier >= 0.0)) {
    e.push_back("canceller.calibration_carrier: must be >= 0");
  }
  for (double f : c.sweep.carriers) {
    if (!(f >= 0.0)) e.push_back("sweep.carriers: carriers must be >= 0");
  }
  if (c.outputs.directory.empty()) e.push_back("outputs.directory: must not be empty");
  return e;
}

void RequireValid(const ScenarioConfig& config) {
  const auto errors = ValidateScenarioConfig(config);
  if (!errors.empty()) throw Error(ErrorCode::kConfigError, Join(errors));
}

}  // namespace rfic
