#pragma once

// Named experiments behind the command-line tool. Each returns a table of
// plot-ready columns; rendering to CSV or JSON is byte-deterministic.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "optomag/config.hpp"

namespace optomag {

enum class Command { kFidelitySweep, kWitnessSweep, kMcRun, kOracleCompare, kBaseline };
enum class OutputFormat { kCsv, kJson };

Command parse_command(std::string_view name);
std::string to_string(Command command);
OutputFormat parse_format(std::string_view name);

struct SweepSpec {
  std::string field;  // canonical name
  double start = 0.0;
  double stop = 0.0;
  std::size_t count = 1;
};

// "field:start:stop:count". Throws DomainError.
SweepSpec parse_sweep(std::string_view text);

struct ExperimentSpec {
  Command command = Command::kFidelitySweep;
  ProtocolConfig config;
  RunSettings run;
  std::optional<SweepSpec> sweep;
  std::string output_path;  // empty = stdout
  OutputFormat output_format = OutputFormat::kCsv;
};

// Empty cell (monostate) renders as an empty CSV field and JSON null.
using Cell = std::variant<std::monostate, double, std::int64_t, bool, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct ExperimentResult {
  Table table;
  bool passed = true;  // only oracle-compare can fail
  std::vector<std::string> notices;
};

// Default grid when no --sweep is given.
inline constexpr std::string_view kDefaultFidelitySweep = "magnon.temperature_k:0.01:0.2:20";

// Columns: <sweep field>, n_bar, s, f_closed_form, f_pipeline.
ExperimentResult run_fidelity_sweep(const ExperimentSpec& spec);

// Columns: delta_phi, j, g2_a1sj, g2_a2sj, r_m, divergent; plus Monte Carlo
// companions (click-based) when mc trials are set.
ExperimentResult run_witness_sweep(const ExperimentSpec& spec);

// Columns: state, delta_phi, j, g2_a1sj, g2_a2sj, r_m, divergent.
ExperimentResult run_baseline(const ExperimentSpec& spec);

// Columns: trial_index, stokes_click, antistokes_click.
ExperimentResult run_mc(const ExperimentSpec& spec);

// Columns: observable, exact, mc_estimate, sigma, pass. sigma is the
// standard error predicted at the exact outcome distribution; a row passes
// when |mc_estimate − exact| ≤ 4 sigma.
ExperimentResult run_oracle_compare(const ExperimentSpec& spec);

ExperimentResult run_experiment(const ExperimentSpec& spec);

std::string render_csv(const Table& table);
std::string render_json(const Table& table);
std::string render(const Table& table, OutputFormat format);

// Shortest round-trip decimal form; "inf"/"-inf"/"nan" for non-finite.
std::string format_double(double value);

}  // namespace optomag
