#pragma once

// Click-record sampler and coincidence estimators.
//
// Every trial of a given config prepares the same pre-detection state, so
// the joint outcome distribution of the Stokes and anti-Stokes detector
// pairs is computed once by the exact engine and then sampled. The sampler
// is therefore a pure statistics validator of the estimators below.
//
// Random streams. Trials are grouped into fixed blocks of kTrialsPerBlock.
// Block b draws from std::mt19937_64 seeded with
// splitmix64(seed ^ splitmix64(b)), and each trial consumes exactly one
// 64-bit draw. Blocks are distributed over workers, so the record list is
// identical for any worker count.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "optomag/protocol.hpp"

namespace optomag {

enum class Click : std::uint8_t { kNone = 0, kDetector1 = 1, kDetector2 = 2, kBoth = 3 };

std::string to_string(Click click);
// Throws ParseError(line) on an unknown token.
Click parse_click(std::string_view token, int line = 0);

struct ClickRecord {
  std::uint64_t trial_index = 0;
  Click stokes_click = Click::kNone;
  Click antistokes_click = Click::kNone;

  bool operator==(const ClickRecord&) const = default;
};

struct EstimateWithError {
  double value = 0.0;
  double standard_error = 0.0;
  std::uint64_t n_trials = 0;
};

inline constexpr std::uint64_t kTrialsPerBlock = 1u << 14;

std::uint64_t splitmix64(std::uint64_t x);

// Joint probabilities P(stokes outcome, anti-Stokes outcome), indexed
// [stokes * 4 + antistokes] with the Click encoding.
class OutcomeDistribution {
 public:
  explicit OutcomeDistribution(std::array<double, 16> probabilities);

  double probability(Click stokes, Click antistokes) const {
    return probabilities_[static_cast<std::size_t>(stokes) * 4 + static_cast<std::size_t>(antistokes)];
  }
  const std::array<double, 16>& probabilities() const { return probabilities_; }

  double stokes_rate(Click stokes) const;
  double antistokes_rate(Click antistokes) const;
  // P(exactly Stokes detector j clicks), i.e. the herald probability.
  double herald_probability(int detector) const;
  // Click-coincidence analogue of g²_{Ai,Sj}, with "both" outcomes
  // excluded from numerator and marginals.
  double g2(int antistokes_detector, int stokes_detector) const;
  WitnessPoint witness(double phase, int stokes_detector, double epsilon) const;

 private:
  std::array<double, 16> probabilities_;
};

// Exact outcome distribution for the configured read phase.
OutcomeDistribution outcome_distribution(const ProtocolConfig& config);

// Diagonal POVM weights over a detector pair's joint basis for one outcome.
Eigen::VectorXd outcome_weights(int cutoff_1, int cutoff_2, const DetectorSpec& detector,
                                Click outcome);

std::vector<ClickRecord> sample_from(const OutcomeDistribution& distribution,
                                     std::uint64_t n_trials, std::uint64_t seed,
                                     unsigned workers = 1);

std::vector<ClickRecord> sample_trials(const ProtocolConfig& config, std::uint64_t n_trials,
                                       std::uint64_t seed, unsigned workers = 1);

// Fraction of trials matching the predicate, with binomial standard error.
EstimateWithError estimate_stokes_rate(std::span<const ClickRecord> records, Click outcome);
EstimateWithError estimate_antistokes_rate(std::span<const ClickRecord> records, Click outcome);

// N_coinc N / (N_Ai N_Sj) with a multinomial delta-method standard error.
// Throws ConditioningError when a marginal count is zero.
EstimateWithError estimate_g2(std::span<const ClickRecord> records, int antistokes_detector,
                              int stokes_detector);

struct PhaseGroup {
  double phase = 0.0;
  std::vector<ClickRecord> records;
};

struct WitnessEstimate {
  double phase = 0.0;
  int stokes_detector = 1;
  EstimateWithError g2_a1;
  EstimateWithError g2_a2;
  // value and standard_error are +infinity when divergent.
  EstimateWithError r_m;
  bool divergent = false;
};

// Divergent when |g2_a1 − g2_a2| is within two standard errors of zero.
std::vector<WitnessEstimate> estimate_witness(std::span<const PhaseGroup> groups,
                                              int stokes_detector);

// Standard errors the estimators above would carry at n trials if the
// observed cell frequencies equalled `distribution` exactly. Unlike the
// sampled errors these are defined for any n, including n = 1.
double predicted_rate_error(double probability, std::uint64_t n_trials);
double predicted_g2_error(const OutcomeDistribution& distribution, int antistokes_detector,
                          int stokes_detector, std::uint64_t n_trials);
double predicted_r_m_error(const OutcomeDistribution& distribution, int stokes_detector,
                           std::uint64_t n_trials);

// Columnar text: header "trial_index,stokes_click,antistokes_click", then
// one trial per line.
std::string records_to_csv(std::span<const ClickRecord> records);
std::vector<ClickRecord> records_from_csv(const std::string& text);

}  // namespace optomag
