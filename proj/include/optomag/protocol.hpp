#pragma once

// Exact pipelines for the heralded two-magnon entangling stage, the
// anti-Stokes read-out stage and the second-order-coherence witness.
//
// Mode labels
//   pulse_A, pulse_B          write pulse in the two interferometer arms
//   stokes_A, stokes_B        Stokes (TE) cavity modes; after the second
//                             beamsplitter they denote the outputs towards
//                             detectors 1 and 2
//   magnon_A, magnon_B        magnon modes
//   antistokes_A, antistokes_B  anti-Stokes (TM) modes; after the read
//                             beamsplitter they denote detectors 1 and 2
//
// Pump model. The write pulse is a weak coherent state split on a 50/50
// beamsplitter. Each arm's pump is treated classically (linearized
// coupling G₂ = G₀ α), so the arm's squeeze parameter is
// r_X = |α_X| · atanh(√P) with phase arg(α_X): P is the Stokes scattering
// probability per pump photon and the arm's pair probability is
// tanh² r_X ≈ P |α_X|² = P p / 2.
//
// Herald sign. With the symmetric beamsplitter convention a click on
// detector 1 projects onto (|01⟩ − |10⟩)/√2 and detector 2 onto
// (|01⟩ + |10⟩)/√2 (basis order |m_A m_B⟩), up to a global phase.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "optomag/channels.hpp"
#include "optomag/fock.hpp"

namespace optomag {

namespace labels {
inline const std::string kPulseA = "pulse_A";
inline const std::string kPulseB = "pulse_B";
inline const std::string kStokesA = "stokes_A";
inline const std::string kStokesB = "stokes_B";
inline const std::string kMagnonA = "magnon_A";
inline const std::string kMagnonB = "magnon_B";
inline const std::string kAntiStokesA = "antistokes_A";
inline const std::string kAntiStokesB = "antistokes_B";
}  // namespace labels

// Device parameters that document the physical setup. They do not enter any
// computation: the linearized channels are parameterized by P and θ_r.
struct PhysicalCouplings {
  double single_photon_coupling_hz = 0.0;  // G₀
  double antistokes_coupling_hz = 0.0;     // G₁ = G₀ √N₁
  double stokes_coupling_hz = 0.0;         // G₂ = G₀ √N₂
  double te_photons = 0.0;                 // N₁
  double tm_photons = 0.0;                 // N₂
  double te_frequency_hz = 0.0;            // ω₁
  double tm_frequency_hz = 0.0;            // ω₂
};

enum class HeraldSign { kPlus, kMinus };

struct ProtocolConfig {
  double pulse_mean_photons = 0.01;  // p
  double stokes_probability_a = 0.01;
  double stokes_probability_b = 0.01;
  double magnon_frequency_hz = 7e9;
  double temperature_k = 0.1;
  std::optional<double> thermal_occupation_override;
  double transmissivity_a = 1.0;
  double transmissivity_b = 1.0;
  // Magnon survival between the write and read pulses (1 = no decay).
  double magnon_transmissivity = 1.0;
  DetectorSpec detector;
  double read_phase_rad = 0.0;
  double read_swap_angle_rad = 0.25;
  int herald_detector = 1;
  int optical_cutoff = 3;
  int magnon_cutoff = 3;
  std::uint64_t rng_seed = 1;

  // Numerics.
  double truncation_bound = 1e-3;
  double herald_probability_floor = 1e-15;
  double divergence_epsilon = 1e-9;
  Tolerances tolerances;

  PhysicalCouplings couplings;

  // Throws DomainError naming the first offending field.
  void validate() const;
  // Regime notices (p or P above 0.1, ...). Empty when all is well.
  std::vector<std::string> warnings() const;
};

// Bose–Einstein occupation [exp(ħω/k_B T) − 1]⁻¹ with CODATA constants.
double mean_thermal_occupation(double frequency_hz, double temperature_k);

// n̄ used by the config: the override when set, else mean_thermal_occupation.
double effective_occupation(const ProtocolConfig& config);

HeraldSign sign_for_detector(int detector);

ModeRegistry magnon_registry(int cutoff);

// (|01⟩ ± |10⟩)/√2 over {magnon_A, magnon_B}.
MultiModeState ideal_target_state(HeraldSign sign, int cutoff = 3);

struct HeraldedState {
  DensityOperator rho_magnons;
  double herald_probability = 0.0;
  HeraldSign herald_sign = HeraldSign::kPlus;
  double truncation_error = 0.0;
};

// Unconditioned state right before the herald detectors: registry
// {magnon_A, magnon_B, stokes_A, stokes_B}, Stokes modes already mixed on
// the second beamsplitter.
struct EntanglingState {
  DensityOperator rho;
  double truncation_error = 0.0;
};

EntanglingState prepare_entangling_state(const ProtocolConfig& config);

// Diagonal POVM weights over the joint (stokes_A, stokes_B) basis for
// "exactly the given detector clicks" (detector ∈ {1, 2}).
Eigen::VectorXd single_click_weights(int cutoff_1, int cutoff_2, const DetectorSpec& detector,
                                     int clicking_detector);

HeraldedState entangle_stage(const ProtocolConfig& config);

// (|φ₀₀⟩⟨φ₀₀| + S(|φ₀₁⟩⟨φ₀₁| + |φ₁₀⟩⟨φ₁₀|) + S²|φ₁₁⟩⟨φ₁₁|) / (1 + S)².
DensityOperator thermal_final_state(double thermal_ratio, HeraldSign sign, int cutoff = 3);

struct ThermalConsistencyReport {
  double thermal_ratio = 0.0;
  double trace_distance = 0.0;
  double fidelity_pipeline = 0.0;
  double fidelity_closed_form = 0.0;
  double herald_probability = 0.0;
  double bound = 0.0;
  bool within_bound = false;
  bool herald_possible = true;
};

// Multiplier C of the documented bound trace_distance ≤ C · max(p, P, S²).
inline constexpr double kThermalConsistencyConstant = 10.0;

ThermalConsistencyReport consistency_check_thermal(const ProtocolConfig& config);

// Read-out of a (possibly unnormalized) two-magnon density: swap couplers,
// phase Δφ on arm A, per-arm loss, read beamsplitter. Returns the density
// over {antistokes_A, antistokes_B} (detectors 1, 2) with trace preserved.
DensityOperator read_out(const DensityOperator& magnons, const ProtocolConfig& config);

DensityOperator read_stage(const HeraldedState& heralded, const ProtocolConfig& config);

struct WitnessPoint {
  double phase = 0.0;
  int stokes_detector = 1;
  double g2_a1 = 0.0;
  double g2_a2 = 0.0;
  // +infinity when divergent.
  double r_m = 0.0;
  bool divergent = false;
};

// R = 4 (g1 + g2 − 1) / (g1 − g2)²; divergent when |g1 − g2| < epsilon.
WitnessPoint make_witness_point(double phase, int stokes_detector, double g2_a1, double g2_a2,
                                double epsilon);

std::vector<double> phase_grid(double start, double stop, std::size_t count);

// Intensity correlations g²_{Ai,Sj} = ⟨A_i†S_j†A_iS_j⟩ / (⟨A_i†A_i⟩⟨S_j†S_j⟩)
// over unconditioned runs, for each read phase in `phases`.
std::vector<WitnessPoint> witness_exact(const ProtocolConfig& config,
                                        const std::vector<double>& phases, int stokes_detector);

enum class SeparableKind { kProductThermal, kClassicalMixture };

std::string to_string(SeparableKind kind);

// Separable two-magnon states used as witness baselines.
DensityOperator separable_state(SeparableKind kind, double mean_occupation, int cutoff);

// Evaluates the witness with the Stokes-conditioned magnon state replaced
// by `conditional` while the unconditioned reference stays that of the
// configured protocol run.
std::vector<WitnessPoint> witness_with_conditional_state(const ProtocolConfig& config,
                                                         const DensityOperator& conditional,
                                                         const std::vector<double>& phases,
                                                         int stokes_detector);

struct BaselineCurve {
  SeparableKind kind;
  std::vector<WitnessPoint> points;
};

// Occupation of the product thermal baseline when none is given and the
// config's own n̄ is zero (a vacuum product carries no anti-Stokes signal).
inline constexpr double kBaselineFallbackOccupation = 0.05;

// Product thermal baseline uses `product_occupation`, defaulting to the
// config's n̄.
std::vector<BaselineCurve> separable_baseline(const ProtocolConfig& config,
                                              const std::vector<double>& phases,
                                              std::optional<double> product_occupation = {});

}  // namespace optomag
