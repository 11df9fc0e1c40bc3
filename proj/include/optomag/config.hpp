#pragma once

// Flat key-value config files.
//
//   # comment
//   magnon.temperature_k = 0.1
//   stokes.probability   = 0.01   # sets both arms
//
// Keys are dotted section names; unknown keys are parse errors. Units are
// SI and carried in the key suffix. See README.md for the full key list.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "optomag/protocol.hpp"

namespace optomag {

inline constexpr std::uint64_t kDefaultTrials = 100000;

// Settings that belong to a run rather than to the physics.
struct RunSettings {
  // Unset: mc-run and oracle-compare use kDefaultTrials, witness-sweep
  // omits its Monte Carlo columns.
  std::optional<std::uint64_t> mc_trials;
  unsigned mc_workers = 0;  // 0 = hardware concurrency
  double witness_phase_start_rad = 0.0;
  double witness_phase_stop_rad = 6.283185307179586;
  std::size_t witness_phase_count = 33;
  // Product thermal baseline occupation; unset = the config's n̄.
  std::optional<double> baseline_occupation;
};

struct LoadedConfig {
  ProtocolConfig protocol;
  RunSettings run;
  std::vector<std::string> notices;
};

// Parses and validates. Throws ParseError (with line) or DomainError.
LoadedConfig parse_config(std::string_view text);
LoadedConfig load_config(const std::string& path);

// Real-valued fields addressable by --sweep. Besides the config keys this
// includes the pseudo-field magnon.thermal_ratio (S), which sets the
// occupation override n̄ = S / (1 − S).
struct SweepField {
  std::string name;
  std::function<void(ProtocolConfig&, double)> set;
};

// Accepts canonical dotted names and aliases. Throws DomainError.
const SweepField& sweep_field(std::string_view name);
std::vector<std::string> sweep_field_names();

}  // namespace optomag
