#include "optomag/experiments.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "optomag/errors.hpp"
#include "optomag/montecarlo.hpp"
#include "optomag/parallel.hpp"

namespace optomag {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kOracleSigmas = 4.0;

unsigned workers_for(const RunSettings& run) {
  return run.mc_workers == 0 ? default_worker_count() : run.mc_workers;
}

std::vector<double> grid_for(const SweepSpec& sweep) {
  return phase_grid(sweep.start, sweep.stop, sweep.count);
}

std::vector<double> witness_phases(const ExperimentSpec& spec) {
  if (spec.sweep) {
    if (spec.sweep->field != "read.phase_rad") {
      throw DomainError("sweep: " + to_string(spec.command) + " sweeps read.phase_rad only");
    }
    return grid_for(*spec.sweep);
  }
  return phase_grid(spec.run.witness_phase_start_rad, spec.run.witness_phase_stop_rad,
                    spec.run.witness_phase_count);
}

void append_point(Table& table, const WitnessPoint& p) {
  table.rows.push_back({p.phase, static_cast<std::int64_t>(p.stokes_detector), p.g2_a1, p.g2_a2,
                        p.r_m, p.divergent});
}

Cell estimate_cell(const std::optional<double>& v) {
  return v ? Cell(*v) : Cell(std::monostate{});
}

}  // namespace

Command parse_command(std::string_view name) {
  if (name == "fidelity-sweep") return Command::kFidelitySweep;
  if (name == "witness-sweep") return Command::kWitnessSweep;
  if (name == "mc-run") return Command::kMcRun;
  if (name == "oracle-compare") return Command::kOracleCompare;
  if (name == "baseline") return Command::kBaseline;
  throw DomainError("command: unknown '" + std::string(name) + "'");
}

std::string to_string(Command command) {
  switch (command) {
    case Command::kFidelitySweep:
      return "fidelity-sweep";
    case Command::kWitnessSweep:
      return "witness-sweep";
    case Command::kMcRun:
      return "mc-run";
    case Command::kOracleCompare:
      return "oracle-compare";
    case Command::kBaseline:
      return "baseline";
  }
  return "unknown";
}

OutputFormat parse_format(std::string_view name) {
  if (name == "csv") return OutputFormat::kCsv;
  if (name == "json") return OutputFormat::kJson;
  throw DomainError("format: must be csv or json, got '" + std::string(name) + "'");
}

SweepSpec parse_sweep(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t begin = 0;
  while (true) {
    const auto colon = text.find(':', begin);
    parts.push_back(text.substr(begin, colon == std::string_view::npos ? colon : colon - begin));
    if (colon == std::string_view::npos) break;
    begin = colon + 1;
  }
  if (parts.size() != 4) throw DomainError("sweep: expected field:start:stop:count");
  SweepSpec spec;
  spec.field = sweep_field(parts[0]).name;
  auto real = [](std::string_view s, const char* what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw DomainError(std::string("sweep: bad ") + what + " '" + std::string(s) + "'");
    }
    return v;
  };
  spec.start = real(parts[1], "start");
  spec.stop = real(parts[2], "stop");
  std::size_t count = 0;
  const auto [ptr, ec] = std::from_chars(parts[3].data(), parts[3].data() + parts[3].size(), count);
  if (ec != std::errc() || ptr != parts[3].data() + parts[3].size() || count < 1) {
    throw DomainError("sweep: count must be an integer >= 1");
  }
  spec.count = count;
  return spec;
}

ExperimentResult run_fidelity_sweep(const ExperimentSpec& spec) {
  const SweepSpec sweep = spec.sweep ? *spec.sweep : parse_sweep(kDefaultFidelitySweep);
  const SweepField& field = sweep_field(sweep.field);
  const std::vector<double> grid = grid_for(sweep);

  ExperimentResult result;
  result.table.columns = {field.name, "n_bar", "s", "f_closed_form", "f_pipeline"};
  if (spec.config.thermal_occupation_override && field.name == "magnon.temperature_k") {
    result.notices.push_back("thermal occupation set directly; the temperature sweep has no effect");
  }

  // Validate every point before doing any work.
  std::vector<ProtocolConfig> configs(grid.size(), spec.config);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    field.set(configs[k], grid[k]);
    configs[k].validate();
  }

  std::vector<std::vector<Cell>> rows(grid.size());
  parallel_for(grid.size(), workers_for(spec.run), [&](std::size_t k) {
    const ProtocolConfig& cfg = configs[k];
    const double nbar = effective_occupation(cfg);
    const double s = thermal_ratio(nbar);
    const HeraldSign sign = sign_for_detector(cfg.herald_detector);
    const MultiModeState target = ideal_target_state(sign, cfg.magnon_cutoff);
    const double f_closed =
        fidelity_with_pure(thermal_final_state(s, sign, cfg.magnon_cutoff), target);
    const double f_pipeline = fidelity_with_pure(entangle_stage(cfg).rho_magnons, target);
    rows[k] = {grid[k], nbar, s, f_closed, f_pipeline};
  });
  result.table.rows = std::move(rows);
  return result;
}

ExperimentResult run_witness_sweep(const ExperimentSpec& spec) {
  const std::vector<double> phases = witness_phases(spec);
  ExperimentResult result;
  Table& t = result.table;
  t.columns = {"delta_phi", "j", "g2_a1sj", "g2_a2sj", "r_m", "divergent"};
  const bool with_mc = spec.run.mc_trials && *spec.run.mc_trials > 0;
  if (with_mc) {
    for (const char* c : {"mc_g2_a1sj", "mc_g2_a1sj_sigma", "mc_g2_a2sj", "mc_g2_a2sj_sigma",
                          "mc_r_m", "mc_r_m_sigma", "mc_divergent"}) {
      t.columns.emplace_back(c);
    }
  }

  // Click records are shared between j = 1 and j = 2 at each phase.
  std::vector<std::vector<ClickRecord>> records;
  if (with_mc) {
    records.resize(phases.size());
    for (std::size_t k = 0; k < phases.size(); ++k) {
      ProtocolConfig cfg = spec.config;
      cfg.read_phase_rad = phases[k];
      records[k] = sample_trials(cfg, *spec.run.mc_trials, splitmix64(cfg.rng_seed + k),
                                 workers_for(spec.run));
    }
  }

  for (int j : {1, 2}) {
    const auto points = witness_exact(spec.config, phases, j);
    for (std::size_t k = 0; k < points.size(); ++k) {
      append_point(t, points[k]);
      if (!with_mc) continue;
      auto& row = t.rows.back();
      try {
        const PhaseGroup group{phases[k], records[k]};
        const WitnessEstimate est = estimate_witness(std::span(&group, 1), j).front();
        row.insert(row.end(), {est.g2_a1.value, est.g2_a1.standard_error, est.g2_a2.value,
                               est.g2_a2.standard_error, est.r_m.value, est.r_m.standard_error,
                               est.divergent});
      } catch (const ConditioningError&) {
        row.insert(row.end(), 7, Cell(std::monostate{}));
      }
    }
  }
  if (with_mc) {
    result.notices.push_back(
        "Monte Carlo columns use click coincidences; exact columns use intensity moments");
  }
  return result;
}

ExperimentResult run_baseline(const ExperimentSpec& spec) {
  const std::vector<double> phases = witness_phases(spec);
  ExperimentResult result;
  Table& t = result.table;
  t.columns = {"state", "delta_phi", "j", "g2_a1sj", "g2_a2sj", "r_m", "divergent"};
  for (const BaselineCurve& curve :
       separable_baseline(spec.config, phases, spec.run.baseline_occupation)) {
    for (const WitnessPoint& p : curve.points) {
      t.rows.push_back({to_string(curve.kind), p.phase, static_cast<std::int64_t>(p.stokes_detector),
                        p.g2_a1, p.g2_a2, p.r_m, p.divergent});
    }
  }
  return result;
}

ExperimentResult run_mc(const ExperimentSpec& spec) {
  if (spec.sweep) throw DomainError("sweep: mc-run does not take a sweep");
  const std::uint64_t n = spec.run.mc_trials.value_or(kDefaultTrials);
  const auto records = sample_trials(spec.config, n, spec.config.rng_seed, workers_for(spec.run));
  ExperimentResult result;
  result.table.columns = {"trial_index", "stokes_click", "antistokes_click"};
  result.table.rows.reserve(records.size());
  for (const auto& r : records) {
    result.table.rows.push_back({static_cast<std::int64_t>(r.trial_index), to_string(r.stokes_click),
                                 to_string(r.antistokes_click)});
  }
  return result;
}

ExperimentResult run_oracle_compare(const ExperimentSpec& spec) {
  if (spec.sweep) throw DomainError("sweep: oracle-compare does not take a sweep");
  const std::uint64_t n = spec.run.mc_trials.value_or(kDefaultTrials);
  if (n == 0) throw DomainError("mc.trials: must be >= 1");
  const ProtocolConfig& cfg = spec.config;
  const int j = cfg.herald_detector;
  const OutcomeDistribution exact = outcome_distribution(cfg);
  const auto records = sample_from(exact, n, cfg.rng_seed, workers_for(spec.run));

  ExperimentResult result;
  if (n < 1000) {
    result.notices.push_back("fewer than 1000 trials: the 4-sigma comparison is only indicative");
  }
  Table& t = result.table;
  t.columns = {"observable", "exact", "mc_estimate", "sigma", "pass"};

  auto add = [&](std::string name, double exact_value, std::optional<double> mc, double sigma) {
    bool pass = false;
    if (mc) {
      if (std::isinf(exact_value) || std::isinf(*mc)) {
        pass = std::isinf(exact_value) && std::isinf(*mc);
      } else {
        pass = std::abs(*mc - exact_value) <= kOracleSigmas * sigma;
      }
    }
    result.passed = result.passed && pass;
    t.rows.push_back({std::move(name), exact_value, estimate_cell(mc), sigma, pass});
  };

  add("herald_probability", exact.herald_probability(j),
      estimate_stokes_rate(records, j == 1 ? Click::kDetector1 : Click::kDetector2).value,
      predicted_rate_error(exact.herald_probability(j), n));
  for (Click c : {Click::kDetector1, Click::kDetector2, Click::kBoth}) {
    const double p = exact.stokes_rate(c);
    add("stokes_rate_" + to_string(c), p, estimate_stokes_rate(records, c).value,
        predicted_rate_error(p, n));
  }
  for (Click c : {Click::kDetector1, Click::kDetector2, Click::kBoth}) {
    const double p = exact.antistokes_rate(c);
    add("antistokes_rate_" + to_string(c), p, estimate_antistokes_rate(records, c).value,
        predicted_rate_error(p, n));
  }

  const std::string sj = "s" + std::to_string(j);
  for (int i : {1, 2}) {
    const std::string name = "g2_a" + std::to_string(i) + sj;
    double exact_g2 = 0.0, sigma = kInf;
    try {
      exact_g2 = exact.g2(i, j);
      sigma = predicted_g2_error(exact, i, j, n);
    } catch (const ConditioningError&) {
      throw ConditioningError(name + ": exact marginal click probability is zero");
    }
    std::optional<double> mc;
    try {
      mc = estimate_g2(records, i, j).value;
    } catch (const ConditioningError&) {
    }
    add(name, exact_g2, mc, sigma);
  }

  const WitnessPoint exact_w = exact.witness(cfg.read_phase_rad, j, cfg.divergence_epsilon);
  std::optional<double> mc_r;
  try {
    const PhaseGroup group{cfg.read_phase_rad, records};
    mc_r = estimate_witness(std::span(&group, 1), j).front().r_m.value;
  } catch (const ConditioningError&) {
  }
  add("r_m_" + sj, exact_w.r_m, mc_r,
      exact_w.divergent ? kInf : predicted_r_m_error(exact, j, n));
  return result;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.config.validate();
  ExperimentResult result;
  switch (spec.command) {
    case Command::kFidelitySweep:
      result = run_fidelity_sweep(spec);
      break;
    case Command::kWitnessSweep:
      result = run_witness_sweep(spec);
      break;
    case Command::kMcRun:
      result = run_mc(spec);
      break;
    case Command::kOracleCompare:
      result = run_oracle_compare(spec);
      break;
    case Command::kBaseline:
      result = run_baseline(spec);
      break;
  }
  return result;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string render_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              out += format_double(v);
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
              out += std::to_string(v);
            } else if constexpr (std::is_same_v<T, bool>) {
              out += v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::string>) {
              out += v;
            }
          },
          row[c]);
    }
    out += '\n';
  }
  return out;
}

std::string render_json(const Table& table) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string& key = table.columns[c];
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
              obj[key] = nullptr;
            } else if constexpr (std::is_same_v<T, double>) {
              // JSON has no infinity; divergent values become null.
              if (std::isfinite(v)) {
                obj[key] = v;
              } else {
                obj[key] = nullptr;
              }
            } else {
              obj[key] = v;
            }
          },
          row[c]);
    }
    rows.push_back(std::move(obj));
  }
  return rows.dump(2) + "\n";
}

std::string render(const Table& table, OutputFormat format) {
  return format == OutputFormat::kCsv ? render_csv(table) : render_json(table);
}

}  // namespace optomag
