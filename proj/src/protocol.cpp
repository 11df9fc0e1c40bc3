#include "optomag/protocol.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "optomag/errors.hpp"
#include "optomag/parallel.hpp"

#include <unsupported/Eigen/KroneckerProduct>

namespace optomag {

namespace {

// CODATA 2018 exact values.
constexpr double kPlanck = 6.62607015e-34;       // J s
constexpr double kBoltzmann = 1.380649e-23;      // J / K

const std::vector<std::string>& magnon_labels() {
  static const std::vector<std::string> l{labels::kMagnonA, labels::kMagnonB};
  return l;
}

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw DomainError(field + ": " + why);
}

bool is_probability(double v) { return v >= 0.0 && v <= 1.0; }

MultiModeState magnon_superposition(const ModeRegistry& reg, std::array<int, 2> first,
                                    std::array<int, 2> second, HeraldSign sign) {
  const double s = sign == HeraldSign::kPlus ? 1.0 : -1.0;
  CVector amps = MultiModeState::basis_state(reg, first).amplitudes() +
                 s * MultiModeState::basis_state(reg, second).amplitudes();
  return MultiModeState(reg, amps / std::sqrt(2.0));
}

// Magnon decay between the write and read pulses.
DensityOperator store(const DensityOperator& magnons, const ProtocolConfig& config) {
  DensityOperator out = loss_channel(magnons, labels::kMagnonA, config.magnon_transmissivity);
  return loss_channel(out, labels::kMagnonB, config.magnon_transmissivity);
}

double intensity(const DensityOperator& rho, const std::string& mode) {
  return expectation(rho, number_operator(rho.registry(), mode)).real();
}

}  // namespace

void ProtocolConfig::validate() const {
  require(std::isfinite(pulse_mean_photons) && pulse_mean_photons >= 0.0, "pulse.mean_photons",
          "must be a finite value >= 0");
  require(stokes_probability_a >= 0.0 && stokes_probability_a < 1.0, "stokes.probability_a",
          "must lie in [0,1)");
  require(stokes_probability_b >= 0.0 && stokes_probability_b < 1.0, "stokes.probability_b",
          "must lie in [0,1)");
  require(std::isfinite(magnon_frequency_hz) && magnon_frequency_hz > 0.0, "magnon.frequency_hz",
          "must be > 0");
  require(std::isfinite(temperature_k) && temperature_k >= 0.0, "magnon.temperature_k",
          "must be >= 0");
  if (thermal_occupation_override) {
    require(std::isfinite(*thermal_occupation_override) && *thermal_occupation_override >= 0.0,
            "magnon.thermal_occupation", "must be a finite value >= 0");
  }
  require(is_probability(transmissivity_a), "optics.transmissivity_a", "must lie in [0,1]");
  require(is_probability(transmissivity_b), "optics.transmissivity_b", "must lie in [0,1]");
  require(is_probability(magnon_transmissivity), "magnon.transmissivity", "must lie in [0,1]");
  require(is_probability(detector.efficiency), "detector.efficiency", "must lie in [0,1]");
  require(is_probability(detector.dark_click_probability), "detector.dark_click_probability",
          "must lie in [0,1]");
  require(std::isfinite(read_phase_rad), "read.phase_rad", "must be finite");
  require(read_swap_angle_rad >= 0.0 && read_swap_angle_rad <= std::numbers::pi / 2 + 1e-12,
          "read.swap_angle_rad", "must lie in [0, pi/2]");
  require(herald_detector == 1 || herald_detector == 2, "herald.detector", "must be 1 or 2");
  require(optical_cutoff >= 1, "numerics.optical_cutoff", "must be >= 1");
  require(magnon_cutoff >= 1, "numerics.magnon_cutoff", "must be >= 1");
  require(truncation_bound > 0.0, "numerics.truncation_bound", "must be > 0");
  require(herald_probability_floor >= 0.0, "numerics.herald_floor", "must be >= 0");
  require(divergence_epsilon >= 0.0, "numerics.divergence_epsilon", "must be >= 0");
}

std::vector<std::string> ProtocolConfig::warnings() const {
  std::vector<std::string> out;
  if (pulse_mean_photons > 0.1) {
    out.push_back("pulse.mean_photons = " + std::to_string(pulse_mean_photons) +
                  " > 0.1: multi-photon pulse components are no longer negligible");
  }
  if (stokes_probability_a > 0.1 || stokes_probability_b > 0.1) {
    out.push_back("stokes probability > 0.1: multi-pair Stokes scattering is no longer negligible");
  }
  return out;
}

double mean_thermal_occupation(double frequency_hz, double temperature_k) {
  if (!(frequency_hz > 0.0)) throw DomainError("magnon frequency must be > 0");
  if (!(temperature_k > 0.0)) throw DomainError("temperature must be > 0");
  const double x = kPlanck * frequency_hz / (kBoltzmann * temperature_k);
  return 1.0 / std::expm1(x);
}

double effective_occupation(const ProtocolConfig& config) {
  if (config.thermal_occupation_override) return *config.thermal_occupation_override;
  if (config.temperature_k == 0.0) return 0.0;
  return mean_thermal_occupation(config.magnon_frequency_hz, config.temperature_k);
}

HeraldSign sign_for_detector(int detector) {
  if (detector == 1) return HeraldSign::kMinus;
  if (detector == 2) return HeraldSign::kPlus;
  throw DomainError("detector index must be 1 or 2");
}

ModeRegistry magnon_registry(int cutoff) {
  return ModeRegistry({{labels::kMagnonA, cutoff}, {labels::kMagnonB, cutoff}});
}

MultiModeState ideal_target_state(HeraldSign sign, int cutoff) {
  return magnon_superposition(magnon_registry(cutoff), {0, 1}, {1, 0}, sign);
}

Eigen::VectorXd single_click_weights(int cutoff_1, int cutoff_2, const DetectorSpec& detector,
                                     int clicking_detector) {
  if (clicking_detector != 1 && clicking_detector != 2) {
    throw DomainError("detector index must be 1 or 2");
  }
  const Eigen::VectorXd q1 = no_click_weights(cutoff_1, detector);
  const Eigen::VectorXd q2 = no_click_weights(cutoff_2, detector);
  Eigen::VectorXd w(q1.size() * q2.size());
  for (Eigen::Index n1 = 0; n1 < q1.size(); ++n1) {
    for (Eigen::Index n2 = 0; n2 < q2.size(); ++n2) {
      w(n1 * q2.size() + n2) = clicking_detector == 1 ? (1.0 - q1(n1)) * q2(n2)
                                                      : q1(n1) * (1.0 - q2(n2));
    }
  }
  return w;
}

EntanglingState prepare_entangling_state(const ProtocolConfig& config) {
  config.validate();
  double truncation = 0.0;

  // Write pulse on the first beamsplitter; its arm amplitudes set the
  // classical pump of each Stokes squeezer.
  const ModeRegistry pulse_reg({{labels::kPulseA, config.optical_cutoff},
                                {labels::kPulseB, config.optical_cutoff}});
  const auto pulse = coherent_state(labels::kPulseA, std::sqrt(config.pulse_mean_photons),
                                    config.optical_cutoff, config.truncation_bound);
  truncation += pulse.truncation_weight;
  const MultiModeState pulse_in = pulse.state.tensor(
      MultiModeState::vacuum(ModeRegistry({{labels::kPulseB, config.optical_cutoff}})));
  const MultiModeState arms =
      apply_unitary(pulse_in, beamsplitter_unitary({labels::kPulseA, labels::kPulseB}, pulse_reg));
  const Complex alpha_a = expectation(arms, annihilation(pulse_reg, labels::kPulseA));
  const Complex alpha_b = expectation(arms, annihilation(pulse_reg, labels::kPulseB));

  const double nbar = effective_occupation(config);
  const auto thermal = thermal_state(labels::kMagnonA, nbar, config.magnon_cutoff);
  truncation += 2.0 * thermal.truncation_weight;
  const DensityOperator thermal_b(ModeRegistry({{labels::kMagnonB, config.magnon_cutoff}}),
                                  thermal.rho.matrix());
  const Mode stokes_modes[] = {{labels::kStokesA, config.optical_cutoff},
                               {labels::kStokesB, config.optical_cutoff}};
  DensityOperator rho = thermal.rho.tensor(thermal_b).with_vacuum(stokes_modes);
  const ModeRegistry& reg = rho.registry();

  const auto squeeze = [&](const std::string& stokes, const std::string& magnon, Complex alpha,
                           double probability) {
    const double r = std::abs(alpha) * squeeze_parameter_for_probability(probability);
    if (r == 0.0) return;
    truncation += squeezer_truncation_error(r, std::min(config.optical_cutoff, config.magnon_cutoff));
    rho = apply_unitary(rho, two_mode_squeezer_unitary({stokes, magnon, r, std::arg(alpha)}, reg,
                                                       config.truncation_bound));
  };
  squeeze(labels::kStokesA, labels::kMagnonA, alpha_a, config.stokes_probability_a);
  squeeze(labels::kStokesB, labels::kMagnonB, alpha_b, config.stokes_probability_b);

  rho = loss_channel(rho, labels::kStokesA, config.transmissivity_a);
  rho = loss_channel(rho, labels::kStokesB, config.transmissivity_b);
  rho = apply_unitary(rho, beamsplitter_unitary({labels::kStokesA, labels::kStokesB}, reg));
  return {std::move(rho), truncation};
}

HeraldedState entangle_stage(const ProtocolConfig& config) {
  const EntanglingState ent = prepare_entangling_state(config);
  const Eigen::VectorXd weights = single_click_weights(
      config.optical_cutoff, config.optical_cutoff, config.detector, config.herald_detector);
  const DensityOperator conditioned = partial_trace_weighted(ent.rho, magnon_labels(), weights);
  const double p = conditioned.trace();
  if (!(p > config.herald_probability_floor)) {
    throw ConditioningError("herald probability " + std::to_string(p) +
                            " is below the floor; nothing to condition on (p = 0 or P = 0?)");
  }
  return {store(conditioned.normalized(), config), p, sign_for_detector(config.herald_detector),
          ent.truncation_error};
}

DensityOperator thermal_final_state(double thermal_ratio, HeraldSign sign, int cutoff) {
  if (!(thermal_ratio >= 0.0 && thermal_ratio < 1.0)) {
    throw DomainError("thermal ratio S must lie in [0,1)");
  }
  if (cutoff < 2) throw DomainError("thermal_final_state needs magnon cutoff >= 2");
  const ModeRegistry reg = magnon_registry(cutoff);
  const double s = thermal_ratio;
  const auto proj = [&](std::array<int, 2> a, std::array<int, 2> b) {
    return DensityOperator::from_pure(magnon_superposition(reg, a, b, sign)).matrix();
  };
  const CMatrix m = proj({0, 1}, {1, 0}) + s * (proj({0, 2}, {1, 1}) + proj({1, 1}, {2, 0})) +
                    s * s * proj({1, 2}, {2, 1});
  return DensityOperator(reg, m / ((1.0 + s) * (1.0 + s)));
}

ThermalConsistencyReport consistency_check_thermal(const ProtocolConfig& config) {
  ThermalConsistencyReport report;
  const double s = thermal_ratio(effective_occupation(config));
  report.thermal_ratio = s;
  const HeraldSign sign = sign_for_detector(config.herald_detector);
  const int cutoff = std::max(config.magnon_cutoff, 2);
  const DensityOperator closed = thermal_final_state(s, sign, cutoff);
  report.fidelity_closed_form = fidelity_with_pure(closed, ideal_target_state(sign, cutoff));
  const double p_max = std::max(config.stokes_probability_a, config.stokes_probability_b);
  report.bound = kThermalConsistencyConstant * std::max({config.pulse_mean_photons, p_max, s * s});

  HeraldedState heralded{DensityOperator::vacuum(magnon_registry(config.magnon_cutoff))};
  try {
    heralded = entangle_stage(config);
  } catch (const ConditioningError&) {
    report.herald_possible = false;
    return report;
  }
  report.herald_probability = heralded.herald_probability;
  report.fidelity_pipeline =
      fidelity_with_pure(heralded.rho_magnons, ideal_target_state(sign, config.magnon_cutoff));
  if (config.magnon_cutoff == cutoff) {
    report.trace_distance = trace_distance(heralded.rho_magnons, closed);
  } else {
    report.trace_distance = std::numeric_limits<double>::infinity();
  }
  report.within_bound = report.trace_distance <= report.bound;
  return report;
}

DensityOperator read_out(const DensityOperator& magnons, const ProtocolConfig& config) {
  if (magnons.registry().size() != 2 || magnons.registry()[0].label != labels::kMagnonA ||
      magnons.registry()[1].label != labels::kMagnonB) {
    throw DomainError("read_out expects a density over {magnon_A, magnon_B}");
  }
  const Mode antistokes[] = {{labels::kAntiStokesA, config.optical_cutoff},
                             {labels::kAntiStokesB, config.optical_cutoff}};
  DensityOperator rho = magnons.with_vacuum(antistokes);
  const ModeRegistry& reg = rho.registry();
  const double theta = config.read_swap_angle_rad;
  if (theta != 0.0) {
    rho = apply_unitary(rho, swap_coupler_unitary({labels::kAntiStokesA, labels::kMagnonA, theta}, reg));
    rho = apply_unitary(rho, swap_coupler_unitary({labels::kAntiStokesB, labels::kMagnonB, theta}, reg));
  }
  rho = apply_unitary(rho, phase_shift_unitary(labels::kAntiStokesA, config.read_phase_rad, reg));
  rho = loss_channel(rho, labels::kAntiStokesA, config.transmissivity_a);
  rho = loss_channel(rho, labels::kAntiStokesB, config.transmissivity_b);
  rho = apply_unitary(rho, beamsplitter_unitary({labels::kAntiStokesA, labels::kAntiStokesB}, reg));
  const std::vector<std::string> keep{labels::kAntiStokesA, labels::kAntiStokesB};
  return partial_trace(rho, keep);
}

DensityOperator read_stage(const HeraldedState& heralded, const ProtocolConfig& config) {
  config.validate();
  return read_out(heralded.rho_magnons, config);
}

WitnessPoint make_witness_point(double phase, int stokes_detector, double g2_a1, double g2_a2,
                                double epsilon) {
  WitnessPoint point{phase, stokes_detector, g2_a1, g2_a2, 0.0, false};
  const double diff = g2_a1 - g2_a2;
  if (std::abs(diff) < epsilon || diff == 0.0) {
    point.divergent = true;
    point.r_m = std::numeric_limits<double>::infinity();
  } else {
    point.r_m = 4.0 * (g2_a1 + g2_a2 - 1.0) / (diff * diff);
  }
  return point;
}

std::vector<double> phase_grid(double start, double stop, std::size_t count) {
  if (count == 0) throw DomainError("grid count must be >= 1");
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = count == 1 ? start
                         : start + (stop - start) * static_cast<double>(i) /
                                       static_cast<double>(count - 1);
  }
  return grid;
}

namespace {

struct WitnessInputs {
  DensityOperator unconditioned;
  DensityOperator subtracted;  // Tr_S[S_j ρ S_j†]
  double stokes_intensity;
};

WitnessInputs witness_inputs(const ProtocolConfig& config, int stokes_detector) {
  if (stokes_detector != 1 && stokes_detector != 2) {
    throw DomainError("Stokes detector index must be 1 or 2");
  }
  const EntanglingState ent = prepare_entangling_state(config);
  const std::string& stokes = stokes_detector == 1 ? labels::kStokesA : labels::kStokesB;
  const ModeOperator s = annihilation(ent.rho.registry(), stokes);
  const double n_s = expectation(ent.rho, s.adjoint() * s).real();
  if (!(n_s > 0.0)) {
    throw ConditioningError("zero Stokes intensity at detector " + std::to_string(stokes_detector) +
                            " (p = 0 or P = 0?)");
  }
  return {store(partial_trace(ent.rho, magnon_labels()), config),
          store(partial_trace(conjugate(ent.rho, s), magnon_labels()), config), n_s};
}

std::vector<WitnessPoint> witness_from_states(const ProtocolConfig& config,
                                              const DensityOperator& unconditioned,
                                              const DensityOperator& conditional,
                                              const std::vector<double>& phases,
                                              int stokes_detector) {
  std::vector<WitnessPoint> out(phases.size());
  parallel_for(phases.size(), default_worker_count(), [&](std::size_t k) {
    ProtocolConfig cfg = config;
    cfg.read_phase_rad = phases[k];
    const DensityOperator ref = read_out(unconditioned, cfg);
    const DensityOperator cond = read_out(conditional, cfg);
    double g[2];
    for (int i = 0; i < 2; ++i) {
      const std::string& mode = i == 0 ? labels::kAntiStokesA : labels::kAntiStokesB;
      const double background = intensity(ref, mode);
      if (!(background > 0.0)) {
        throw ConditioningError("zero unconditioned anti-Stokes intensity at detector " +
                                std::to_string(i + 1));
      }
      g[i] = intensity(cond, mode) / background;
    }
    out[k] = make_witness_point(phases[k], stokes_detector, g[0], g[1], config.divergence_epsilon);
  });
  return out;
}

}  // namespace

std::vector<WitnessPoint> witness_exact(const ProtocolConfig& config,
                                        const std::vector<double>& phases, int stokes_detector) {
  const WitnessInputs in = witness_inputs(config, stokes_detector);
  // ⟨A†S†AS⟩ / ⟨S†S⟩ is the anti-Stokes intensity of the photon-subtracted
  // magnon state normalized by the Stokes intensity.
  return witness_from_states(config, in.unconditioned, in.subtracted * (1.0 / in.stokes_intensity),
                             phases, stokes_detector);
}

std::string to_string(SeparableKind kind) {
  switch (kind) {
    case SeparableKind::kProductThermal:
      return "product_thermal";
    case SeparableKind::kClassicalMixture:
      return "classical_mixture";
  }
  return "unknown";
}

DensityOperator separable_state(SeparableKind kind, double mean_occupation, int cutoff) {
  const ModeRegistry reg = magnon_registry(cutoff);
  switch (kind) {
    case SeparableKind::kProductThermal: {
      const auto t = thermal_state(labels::kMagnonA, mean_occupation, cutoff);
      return DensityOperator(reg, Eigen::kroneckerProduct(t.rho.matrix(), t.rho.matrix()).eval());
    }
    case SeparableKind::kClassicalMixture: {
      const int one_zero[] = {1, 0};
      const int zero_one[] = {0, 1};
      return DensityOperator::from_pure(MultiModeState::basis_state(reg, one_zero)) * 0.5 +
             DensityOperator::from_pure(MultiModeState::basis_state(reg, zero_one)) * 0.5;
    }
  }
  throw DomainError("unknown separable state kind");
}

std::vector<WitnessPoint> witness_with_conditional_state(const ProtocolConfig& config,
                                                         const DensityOperator& conditional,
                                                         const std::vector<double>& phases,
                                                         int stokes_detector) {
  config.validate();
  const DensityOperator cond = conditional.normalized();
  // The conditional state must carry anti-Stokes intensity, otherwise every
  // correlation is zero and the witness says nothing.
  ProtocolConfig full_read = config;
  full_read.read_swap_angle_rad = std::numbers::pi / 2;
  const DensityOperator probe = read_out(cond, full_read);
  if (!(intensity(probe, labels::kAntiStokesA) + intensity(probe, labels::kAntiStokesB) > 0.0)) {
    throw ConditioningError("conditional magnon state has no excitation: no anti-Stokes intensity");
  }
  if (stokes_detector != 1 && stokes_detector != 2) {
    throw DomainError("Stokes detector index must be 1 or 2");
  }
  const EntanglingState ent = prepare_entangling_state(config);
  const DensityOperator unconditioned = store(partial_trace(ent.rho, magnon_labels()), config);
  return witness_from_states(config, unconditioned, store(cond, config), phases, stokes_detector);
}

std::vector<BaselineCurve> separable_baseline(const ProtocolConfig& config,
                                              const std::vector<double>& phases,
                                              std::optional<double> product_occupation) {
  double nbar = product_occupation.value_or(effective_occupation(config));
  if (!product_occupation && nbar == 0.0) nbar = kBaselineFallbackOccupation;
  std::vector<BaselineCurve> curves;
  for (SeparableKind kind : {SeparableKind::kProductThermal, SeparableKind::kClassicalMixture}) {
    const DensityOperator state = separable_state(kind, nbar, config.magnon_cutoff);
    BaselineCurve curve{kind, {}};
    for (int j : {1, 2}) {
      auto pts = witness_with_conditional_state(config, state, phases, j);
      curve.points.insert(curve.points.end(), pts.begin(), pts.end());
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

}  // namespace optomag
