#include "optomag/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "optomag/errors.hpp"

namespace optomag {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(std::string_view text, int line, const std::string& key) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, key + ": expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view text, int line, const std::string& key) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, key + ": expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return v;
}

int parse_int(std::string_view text, int line, const std::string& key) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, key + ": expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

using RealSetter = std::function<void(ProtocolConfig&, double)>;

const std::vector<SweepField>& real_fields() {
  static const std::vector<SweepField> fields{
      {"pulse.mean_photons", [](ProtocolConfig& c, double v) { c.pulse_mean_photons = v; }},
      {"stokes.probability",
       [](ProtocolConfig& c, double v) { c.stokes_probability_a = c.stokes_probability_b = v; }},
      {"stokes.probability_a", [](ProtocolConfig& c, double v) { c.stokes_probability_a = v; }},
      {"stokes.probability_b", [](ProtocolConfig& c, double v) { c.stokes_probability_b = v; }},
      {"magnon.frequency_hz", [](ProtocolConfig& c, double v) { c.magnon_frequency_hz = v; }},
      {"magnon.temperature_k", [](ProtocolConfig& c, double v) { c.temperature_k = v; }},
      {"magnon.thermal_occupation",
       [](ProtocolConfig& c, double v) { c.thermal_occupation_override = v; }},
      {"magnon.thermal_ratio",
       [](ProtocolConfig& c, double v) {
         if (!(v >= 0.0 && v < 1.0)) throw DomainError("magnon.thermal_ratio: must lie in [0,1)");
         c.thermal_occupation_override = v / (1.0 - v);
       }},
      {"magnon.transmissivity", [](ProtocolConfig& c, double v) { c.magnon_transmissivity = v; }},
      {"optics.transmissivity",
       [](ProtocolConfig& c, double v) { c.transmissivity_a = c.transmissivity_b = v; }},
      {"optics.transmissivity_a", [](ProtocolConfig& c, double v) { c.transmissivity_a = v; }},
      {"optics.transmissivity_b", [](ProtocolConfig& c, double v) { c.transmissivity_b = v; }},
      {"detector.efficiency", [](ProtocolConfig& c, double v) { c.detector.efficiency = v; }},
      {"detector.dark_click_probability",
       [](ProtocolConfig& c, double v) { c.detector.dark_click_probability = v; }},
      {"read.phase_rad", [](ProtocolConfig& c, double v) { c.read_phase_rad = v; }},
      {"read.swap_angle_rad", [](ProtocolConfig& c, double v) { c.read_swap_angle_rad = v; }},
      {"numerics.truncation_bound", [](ProtocolConfig& c, double v) { c.truncation_bound = v; }},
      {"numerics.herald_floor", [](ProtocolConfig& c, double v) { c.herald_probability_floor = v; }},
      {"numerics.divergence_epsilon",
       [](ProtocolConfig& c, double v) { c.divergence_epsilon = v; }},
      {"numerics.hermiticity_tolerance",
       [](ProtocolConfig& c, double v) { c.tolerances.hermiticity = v; }},
      {"numerics.trace_tolerance", [](ProtocolConfig& c, double v) { c.tolerances.trace = v; }},
      {"numerics.norm_tolerance", [](ProtocolConfig& c, double v) { c.tolerances.norm = v; }},
      {"couplings.single_photon_hz",
       [](ProtocolConfig& c, double v) { c.couplings.single_photon_coupling_hz = v; }},
      {"couplings.antistokes_hz",
       [](ProtocolConfig& c, double v) { c.couplings.antistokes_coupling_hz = v; }},
      {"couplings.stokes_hz",
       [](ProtocolConfig& c, double v) { c.couplings.stokes_coupling_hz = v; }},
      {"couplings.te_photons", [](ProtocolConfig& c, double v) { c.couplings.te_photons = v; }},
      {"couplings.tm_photons", [](ProtocolConfig& c, double v) { c.couplings.tm_photons = v; }},
      {"couplings.te_frequency_hz",
       [](ProtocolConfig& c, double v) { c.couplings.te_frequency_hz = v; }},
      {"couplings.tm_frequency_hz",
       [](ProtocolConfig& c, double v) { c.couplings.tm_frequency_hz = v; }},
  };
  return fields;
}

// Short names accepted on the command line and in config files.
const std::map<std::string, std::string, std::less<>>& aliases() {
  static const std::map<std::string, std::string, std::less<>> a{
      {"temperature", "magnon.temperature_k"},
      {"temperature_k", "magnon.temperature_k"},
      {"T", "magnon.temperature_k"},
      {"S", "magnon.thermal_ratio"},
      {"thermal_ratio", "magnon.thermal_ratio"},
      {"n_bar", "magnon.thermal_occupation"},
      {"p", "pulse.mean_photons"},
      {"P", "stokes.probability"},
      {"eta", "optics.transmissivity"},
      {"delta_phi", "read.phase_rad"},
      {"magnon_frequency_hz", "magnon.frequency_hz"},
  };
  return a;
}

std::string canonical(std::string_view name) {
  const auto it = aliases().find(name);
  return it == aliases().end() ? std::string(name) : it->second;
}

}  // namespace

const SweepField& sweep_field(std::string_view name) {
  const std::string key = canonical(name);
  for (const auto& f : real_fields()) {
    if (f.name == key) return f;
  }
  throw DomainError("sweep: '" + std::string(name) + "' is not a real-valued config field");
}

std::vector<std::string> sweep_field_names() {
  std::vector<std::string> names;
  for (const auto& f : real_fields()) names.push_back(f.name);
  return names;
}

LoadedConfig parse_config(std::string_view text) {
  LoadedConfig out;
  ProtocolConfig& c = out.protocol;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view body = raw;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError(line, "expected 'key = value'");
    const std::string key = canonical(trim(body.substr(0, eq)));
    const std::string_view value = trim(body.substr(eq + 1));
    if (key.empty()) throw ParseError(line, "missing key");
    if (value.empty()) throw ParseError(line, key + ": missing value");
    if (!seen.insert(key).second) throw ParseError(line, key + ": duplicate key");

    if (key == "herald.detector") {
      c.herald_detector = parse_int(value, line, key);
    } else if (key == "numerics.optical_cutoff") {
      c.optical_cutoff = parse_int(value, line, key);
    } else if (key == "numerics.magnon_cutoff") {
      c.magnon_cutoff = parse_int(value, line, key);
    } else if (key == "rng.seed") {
      c.rng_seed = parse_unsigned(value, line, key);
    } else if (key == "mc.trials") {
      out.run.mc_trials = parse_unsigned(value, line, key);
    } else if (key == "mc.workers") {
      out.run.mc_workers = static_cast<unsigned>(parse_unsigned(value, line, key));
    } else if (key == "witness.phase_start_rad") {
      out.run.witness_phase_start_rad = parse_real(value, line, key);
    } else if (key == "witness.phase_stop_rad") {
      out.run.witness_phase_stop_rad = parse_real(value, line, key);
    } else if (key == "baseline.thermal_occupation") {
      out.run.baseline_occupation = parse_real(value, line, key);
      if (!(*out.run.baseline_occupation >= 0.0) || !std::isfinite(*out.run.baseline_occupation)) {
        throw DomainError("baseline.thermal_occupation: must be a finite value >= 0");
      }
    } else if (key == "witness.phase_count") {
      out.run.witness_phase_count = parse_unsigned(value, line, key);
    } else {
      const SweepField* field = nullptr;
      for (const auto& f : real_fields()) {
        if (f.name == key) field = &f;
      }
      if (field == nullptr) throw ParseError(line, "unknown key '" + key + "'");
      field->set(c, parse_real(value, line, key));
    }
  }

  if (seen.contains("stokes.probability") &&
      (seen.contains("stokes.probability_a") || seen.contains("stokes.probability_b"))) {
    throw DomainError("stokes.probability: cannot be combined with per-arm stokes.probability_a/b");
  }
  if (seen.contains("magnon.thermal_occupation") && seen.contains("magnon.thermal_ratio")) {
    throw DomainError("magnon.thermal_ratio: cannot be combined with magnon.thermal_occupation");
  }
  if (c.thermal_occupation_override) {
    out.notices.push_back("thermal occupation set directly; magnon.temperature_k is ignored");
  }
  if (out.run.witness_phase_count == 0) throw DomainError("witness.phase_count: must be >= 1");
  if (!std::isfinite(out.run.witness_phase_start_rad) || !std::isfinite(out.run.witness_phase_stop_rad)) {
    throw DomainError("witness.phase_start_rad: grid bounds must be finite");
  }
  c.validate();
  for (auto& w : c.warnings()) out.notices.push_back(std::move(w));
  return out;
}

LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace optomag
