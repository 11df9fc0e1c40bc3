#pragma once

// Optical and magnonic building blocks as unitaries and CPTP maps.
//
// Phase conventions
//   Beamsplitter:  U = exp[θ (e^{iφ} a†b − e^{−iφ} a b†)]. The default
//                  φ = π/2 is the symmetric convention: U|1,0⟩ =
//                  cos θ |1,0⟩ + i sin θ |0,1⟩ (the reflected amplitude
//                  picks up i).
//   Squeezer:      U = exp[ξ a†m† − ξ* a m], ξ = r e^{iϕ}; on vacuum it gives
//                  (1/cosh r) Σ_n (e^{iϕ} tanh r)^n |n,n⟩.
//   Swap coupler:  U = exp[−iθ_r (a m† + a† m)]; θ_r = π/2 maps
//                  |0⟩_a|1⟩_m → −i |1⟩_a|0⟩_m.
//   Phase shift:   U = exp[i Δφ a†a].
//
// All unitaries are exponentials of the truncated (anti-Hermitian)
// generator, so they are exactly unitary on the truncated space. States
// that populate the top cutoff level are not represented faithfully.

#include <numbers>
#include <optional>
#include <string>

#include "optomag/fock.hpp"

namespace optomag {

struct BeamsplitterSpec {
  std::string mode_a;
  std::string mode_b;
  double mixing_angle = std::numbers::pi / 4;
  double relative_phase = std::numbers::pi / 2;
};

struct SqueezerSpec {
  std::string optical_mode;
  std::string magnon_mode;
  // Negative values give the inverse squeezer.
  double squeeze_parameter = 0.0;
  double phase = 0.0;
};

struct SwapSpec {
  std::string optical_mode;
  std::string magnon_mode;
  double swap_angle = 0.0;
};

struct DetectorSpec {
  double efficiency = 1.0;
  double dark_click_probability = 0.0;
};

// Exponential of an anti-Hermitian matrix.
CMatrix exp_anti_hermitian(const CMatrix& generator);

ModeOperator beamsplitter_unitary(const BeamsplitterSpec& spec, const ModeRegistry& registry);

// Weight of the two-mode squeezed vacuum beyond `cutoff`: tanh(r)^{2(cutoff+1)}.
double squeezer_truncation_error(double squeeze_parameter, int cutoff);

// Scattering probability P ↔ squeeze parameter r via tanh² r = P.
double squeeze_parameter_for_probability(double probability);

// Throws TruncationError when squeezer_truncation_error for the smaller of
// the two cutoffs exceeds `truncation_bound`.
ModeOperator two_mode_squeezer_unitary(const SqueezerSpec& spec, const ModeRegistry& registry,
                                       double truncation_bound = 1e-3);

ModeOperator swap_coupler_unitary(const SwapSpec& spec, const ModeRegistry& registry);

ModeOperator phase_shift_unitary(const std::string& mode, double phase,
                                 const ModeRegistry& registry);

// Kraus operators of the pure-loss channel on a single mode with the given
// cutoff, obtained as K_k = ⟨k|_env U_bs |0⟩_env with cos² θ = η.
std::vector<CMatrix> loss_kraus_operators(int cutoff, double transmissivity);

DensityOperator loss_channel(const DensityOperator& rho, const std::string& mode,
                             double transmissivity);

struct PreparedDensity {
  DensityOperator rho;
  double truncation_weight = 0.0;
};

struct PreparedState {
  MultiModeState state;
  double truncation_weight = 0.0;
};

// S = n̄ / (n̄ + 1)
double thermal_ratio(double mean_occupation);
double occupation_from_ratio(double ratio);

// Diagonal (1 − S) S^n over n ≤ cutoff, renormalized; truncation_weight = S^{cutoff+1}.
PreparedDensity thermal_state(const std::string& label, double mean_occupation, int cutoff);

// e^{−|α|²/2} α^n / √n! over n ≤ cutoff, renormalized. Throws
// TruncationError when the discarded weight exceeds `truncation_bound`.
PreparedState coherent_state(const std::string& label, Complex alpha, int cutoff,
                             double truncation_bound = 1e-3);

// Diagonal of the no-click POVM element (1 − dark)(1 − η)^n, n ≤ cutoff.
Eigen::VectorXd no_click_weights(int cutoff, const DetectorSpec& detector);

void validate(const DetectorSpec& detector);

class ClickOutcome {
 public:
  ClickOutcome(double p_click, std::optional<DensityOperator> click,
               std::optional<DensityOperator> no_click)
      : p_click_(p_click), click_(std::move(click)), no_click_(std::move(no_click)) {}

  double p_click() const { return p_click_; }
  bool has_click_state() const { return click_.has_value(); }
  bool has_no_click_state() const { return no_click_.has_value(); }
  // Throws ConditioningError when the branch has zero probability.
  const DensityOperator& click_state() const;
  const DensityOperator& no_click_state() const;

 private:
  double p_click_;
  std::optional<DensityOperator> click_;
  std::optional<DensityOperator> no_click_;
};

// Photon-number non-resolving click detection on `mode`; the measured mode
// is traced out of both post-measurement states.
ClickOutcome click_measurement(const DensityOperator& rho, const std::string& mode,
                               const DetectorSpec& detector);

}  // namespace optomag
