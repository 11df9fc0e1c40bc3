#include "optomag/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "optomag/errors.hpp"
#include "optomag/parallel.hpp"

namespace optomag {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using CellCounts = std::array<std::uint64_t, 16>;

std::size_t cell(Click stokes, Click antistokes) {
  return static_cast<std::size_t>(stokes) * 4 + static_cast<std::size_t>(antistokes);
}

Click detector_click(int detector) {
  if (detector == 1) return Click::kDetector1;
  if (detector == 2) return Click::kDetector2;
  throw DomainError("detector index must be 1 or 2");
}

CellCounts count_cells(std::span<const ClickRecord> records) {
  CellCounts counts{};
  for (const auto& r : records) ++counts[cell(r.stokes_click, r.antistokes_click)];
  return counts;
}

// Linear functional of the cell frequencies: value and gradient.
struct Linearized {
  double value = 0.0;
  std::array<double, 16> gradient{};
};

// Multinomial delta method: Var ≈ (Σ_k g_k² f_k − (Σ_k g_k f_k)²) / N.
double delta_method_error(const std::array<double, 16>& gradient,
                          const std::array<double, 16>& freq, double n) {
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < 16; ++k) {
    m1 += gradient[k] * freq[k];
    m2 += gradient[k] * gradient[k] * freq[k];
  }
  return std::sqrt(std::max(0.0, m2 - m1 * m1) / n);
}

Linearized g2_linearized(const std::array<double, 16>& freq, Click a, Click s) {
  double f_c = freq[cell(s, a)];
  double f_a = 0.0, f_s = 0.0;
  for (int k = 0; k < 4; ++k) {
    f_a += freq[cell(static_cast<Click>(k), a)];
    f_s += freq[cell(s, static_cast<Click>(k))];
  }
  Linearized out;
  out.value = f_c / (f_a * f_s);
  for (std::size_t k = 0; k < 16; ++k) {
    const Click ks = static_cast<Click>(k / 4);
    const Click ka = static_cast<Click>(k % 4);
    double g = 0.0;
    if (ks == s && ka == a) g += 1.0 / (f_a * f_s);
    if (ka == a) g -= out.value / f_a;
    if (ks == s) g -= out.value / f_s;
    out.gradient[k] = g;
  }
  return out;
}

struct WitnessLinearized {
  Linearized difference;  // g1 − g2
  Linearized r;           // only meaningful when difference.value != 0
};

WitnessLinearized witness_linearized(const std::array<double, 16>& freq, Click s) {
  const Linearized l1 = g2_linearized(freq, Click::kDetector1, s);
  const Linearized l2 = g2_linearized(freq, Click::kDetector2, s);
  WitnessLinearized w;
  const double d = l1.value - l2.value;
  w.difference.value = d;
  for (std::size_t k = 0; k < 16; ++k) w.difference.gradient[k] = l1.gradient[k] - l2.gradient[k];
  if (d != 0.0) {
    const double u = l1.value + l2.value - 1.0;
    w.r.value = 4.0 * u / (d * d);
    const double dr_dg1 = 4.0 / (d * d) - 8.0 * u / (d * d * d);
    const double dr_dg2 = 4.0 / (d * d) + 8.0 * u / (d * d * d);
    for (std::size_t k = 0; k < 16; ++k) {
      w.r.gradient[k] = dr_dg1 * l1.gradient[k] + dr_dg2 * l2.gradient[k];
    }
  }
  return w;
}

std::array<double, 16> frequencies(const CellCounts& counts, double n) {
  std::array<double, 16> f{};
  for (std::size_t k = 0; k < 16; ++k) f[k] = static_cast<double>(counts[k]) / n;
  return f;
}

std::uint64_t marginal_antistokes(const CellCounts& counts, Click a) {
  std::uint64_t total = 0;
  for (int k = 0; k < 4; ++k) total += counts[cell(static_cast<Click>(k), a)];
  return total;
}

std::uint64_t marginal_stokes(const CellCounts& counts, Click s) {
  std::uint64_t total = 0;
  for (int k = 0; k < 4; ++k) total += counts[cell(s, static_cast<Click>(k))];
  return total;
}

EstimateWithError rate(std::span<const ClickRecord> records, bool stokes, Click outcome) {
  if (records.empty()) throw ConditioningError("no trials");
  const auto counts = count_cells(records);
  const double n = static_cast<double>(records.size());
  const double k = static_cast<double>(stokes ? marginal_stokes(counts, outcome)
                                              : marginal_antistokes(counts, outcome));
  const double p = k / n;
  return {p, std::sqrt(p * (1.0 - p) / n), records.size()};
}

}  // namespace

std::string to_string(Click click) {
  switch (click) {
    case Click::kNone:
      return "none";
    case Click::kDetector1:
      return "detector1";
    case Click::kDetector2:
      return "detector2";
    case Click::kBoth:
      return "both";
  }
  return "none";
}

Click parse_click(std::string_view token, int line) {
  if (token == "none") return Click::kNone;
  if (token == "detector1") return Click::kDetector1;
  if (token == "detector2") return Click::kDetector2;
  if (token == "both") return Click::kBoth;
  throw ParseError(line, "unknown click outcome '" + std::string(token) + "'");
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

OutcomeDistribution::OutcomeDistribution(std::array<double, 16> probabilities)
    : probabilities_(probabilities) {
  double total = 0.0;
  for (auto& p : probabilities_) {
    if (!(p >= -1e-12)) throw DomainError("outcome probability is negative or NaN");
    p = std::max(p, 0.0);
    total += p;
  }
  if (!(total > 0.0)) throw DomainError("outcome distribution has zero total weight");
  for (auto& p : probabilities_) p /= total;
}

double OutcomeDistribution::stokes_rate(Click stokes) const {
  double total = 0.0;
  for (int a = 0; a < 4; ++a) total += probability(stokes, static_cast<Click>(a));
  return total;
}

double OutcomeDistribution::antistokes_rate(Click antistokes) const {
  double total = 0.0;
  for (int s = 0; s < 4; ++s) total += probability(static_cast<Click>(s), antistokes);
  return total;
}

double OutcomeDistribution::herald_probability(int detector) const {
  return stokes_rate(detector_click(detector));
}

double OutcomeDistribution::g2(int antistokes_detector, int stokes_detector) const {
  const Click a = detector_click(antistokes_detector);
  const Click s = detector_click(stokes_detector);
  const double denom = antistokes_rate(a) * stokes_rate(s);
  if (!(denom > 0.0)) throw ConditioningError("zero marginal click probability");
  return probability(s, a) / denom;
}

WitnessPoint OutcomeDistribution::witness(double phase, int stokes_detector, double epsilon) const {
  return make_witness_point(phase, stokes_detector, g2(1, stokes_detector), g2(2, stokes_detector),
                            epsilon);
}

Eigen::VectorXd outcome_weights(int cutoff_1, int cutoff_2, const DetectorSpec& detector,
                                Click outcome) {
  const Eigen::VectorXd q1 = no_click_weights(cutoff_1, detector);
  const Eigen::VectorXd q2 = no_click_weights(cutoff_2, detector);
  const bool click1 = outcome == Click::kDetector1 || outcome == Click::kBoth;
  const bool click2 = outcome == Click::kDetector2 || outcome == Click::kBoth;
  Eigen::VectorXd w(q1.size() * q2.size());
  for (Eigen::Index n1 = 0; n1 < q1.size(); ++n1) {
    for (Eigen::Index n2 = 0; n2 < q2.size(); ++n2) {
      w(n1 * q2.size() + n2) = (click1 ? 1.0 - q1(n1) : q1(n1)) * (click2 ? 1.0 - q2(n2) : q2(n2));
    }
  }
  return w;
}

OutcomeDistribution outcome_distribution(const ProtocolConfig& config) {
  const EntanglingState ent = prepare_entangling_state(config);
  const std::vector<std::string> magnons{labels::kMagnonA, labels::kMagnonB};
  std::array<double, 16> probs{};
  for (int s = 0; s < 4; ++s) {
    const Eigen::VectorXd ws = outcome_weights(config.optical_cutoff, config.optical_cutoff,
                                               config.detector, static_cast<Click>(s));
    DensityOperator branch = partial_trace_weighted(ent.rho, magnons, ws);
    branch = loss_channel(branch, labels::kMagnonA, config.magnon_transmissivity);
    branch = loss_channel(branch, labels::kMagnonB, config.magnon_transmissivity);
    const Eigen::VectorXd pops = read_out(branch, config).populations();
    for (int a = 0; a < 4; ++a) {
      const Eigen::VectorXd wa = outcome_weights(config.optical_cutoff, config.optical_cutoff,
                                                 config.detector, static_cast<Click>(a));
      probs[static_cast<std::size_t>(s * 4 + a)] = pops.dot(wa);
    }
  }
  return OutcomeDistribution(probs);
}

std::vector<ClickRecord> sample_from(const OutcomeDistribution& distribution,
                                     std::uint64_t n_trials, std::uint64_t seed,
                                     unsigned workers) {
  if (n_trials == 0) throw DomainError("n_trials must be >= 1");
  std::array<double, 16> cumulative{};
  double acc = 0.0;
  for (std::size_t k = 0; k < 16; ++k) {
    acc += distribution.probabilities()[k];
    cumulative[k] = acc;
  }
  cumulative[15] = std::numeric_limits<double>::max();

  std::vector<ClickRecord> records(n_trials);
  const std::uint64_t blocks = (n_trials + kTrialsPerBlock - 1) / kTrialsPerBlock;
  parallel_for(blocks, workers, [&](std::size_t b) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(b)));
    const std::uint64_t begin = b * kTrialsPerBlock;
    const std::uint64_t end = std::min(n_trials, begin + kTrialsPerBlock);
    for (std::uint64_t t = begin; t < end; ++t) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      const auto k = static_cast<std::size_t>(
          std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
      const std::size_t idx = std::min<std::size_t>(k, 15);
      records[t] = {t, static_cast<Click>(idx / 4), static_cast<Click>(idx % 4)};
    }
  });
  return records;
}

std::vector<ClickRecord> sample_trials(const ProtocolConfig& config, std::uint64_t n_trials,
                                       std::uint64_t seed, unsigned workers) {
  return sample_from(outcome_distribution(config), n_trials, seed, workers);
}

EstimateWithError estimate_stokes_rate(std::span<const ClickRecord> records, Click outcome) {
  return rate(records, true, outcome);
}

EstimateWithError estimate_antistokes_rate(std::span<const ClickRecord> records, Click outcome) {
  return rate(records, false, outcome);
}

EstimateWithError estimate_g2(std::span<const ClickRecord> records, int antistokes_detector,
                              int stokes_detector) {
  const Click a = detector_click(antistokes_detector);
  const Click s = detector_click(stokes_detector);
  if (records.empty()) throw ConditioningError("no trials");
  const auto counts = count_cells(records);
  if (marginal_antistokes(counts, a) == 0) {
    throw ConditioningError("zero anti-Stokes counts at detector " + std::to_string(antistokes_detector));
  }
  if (marginal_stokes(counts, s) == 0) {
    throw ConditioningError("zero Stokes counts at detector " + std::to_string(stokes_detector));
  }
  const double n = static_cast<double>(records.size());
  const auto freq = frequencies(counts, n);
  const Linearized g = g2_linearized(freq, a, s);
  return {g.value, delta_method_error(g.gradient, freq, n), records.size()};
}

std::vector<WitnessEstimate> estimate_witness(std::span<const PhaseGroup> groups,
                                              int stokes_detector) {
  const Click s = detector_click(stokes_detector);
  std::vector<WitnessEstimate> out;
  out.reserve(groups.size());
  for (const auto& group : groups) {
    const EstimateWithError g1 = estimate_g2(group.records, 1, stokes_detector);
    const EstimateWithError g2 = estimate_g2(group.records, 2, stokes_detector);
    const double n = static_cast<double>(group.records.size());
    const auto freq = frequencies(count_cells(group.records), n);
    const WitnessLinearized w = witness_linearized(freq, s);

    WitnessEstimate est{group.phase, stokes_detector, g1, g2, {kInf, kInf, group.records.size()}, false};
    const double d_err = delta_method_error(w.difference.gradient, freq, n);
    if (w.difference.value == 0.0 || std::abs(w.difference.value) < 2.0 * d_err) {
      est.divergent = true;
    } else {
      est.r_m = {w.r.value, delta_method_error(w.r.gradient, freq, n), group.records.size()};
    }
    out.push_back(est);
  }
  return out;
}

double predicted_rate_error(double probability, std::uint64_t n_trials) {
  if (n_trials == 0) throw DomainError("n_trials must be >= 1");
  return std::sqrt(probability * (1.0 - probability) / static_cast<double>(n_trials));
}

double predicted_g2_error(const OutcomeDistribution& distribution, int antistokes_detector,
                          int stokes_detector, std::uint64_t n_trials) {
  if (n_trials == 0) throw DomainError("n_trials must be >= 1");
  distribution.g2(antistokes_detector, stokes_detector);  // throws on zero marginals
  const auto& freq = distribution.probabilities();
  const Linearized g =
      g2_linearized(freq, detector_click(antistokes_detector), detector_click(stokes_detector));
  return delta_method_error(g.gradient, freq, static_cast<double>(n_trials));
}

double predicted_r_m_error(const OutcomeDistribution& distribution, int stokes_detector,
                           std::uint64_t n_trials) {
  if (n_trials == 0) throw DomainError("n_trials must be >= 1");
  distribution.g2(1, stokes_detector);
  distribution.g2(2, stokes_detector);
  const auto& freq = distribution.probabilities();
  const WitnessLinearized w = witness_linearized(freq, detector_click(stokes_detector));
  if (w.difference.value == 0.0) return kInf;
  return delta_method_error(w.r.gradient, freq, static_cast<double>(n_trials));
}

std::string records_to_csv(std::span<const ClickRecord> records) {
  std::string out = "trial_index,stokes_click,antistokes_click\n";
  out.reserve(out.size() + records.size() * 28);
  for (const auto& r : records) {
    out += std::to_string(r.trial_index);
    out += ',';
    out += to_string(r.stokes_click);
    out += ',';
    out += to_string(r.antistokes_click);
    out += '\n';
  }
  return out;
}

std::vector<ClickRecord> records_from_csv(const std::string& text) {
  std::vector<ClickRecord> records;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("trial_index", 0) == 0) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) throw ParseError(line_no, "expected three comma-separated fields");
    ClickRecord r;
    try {
      r.trial_index = std::stoull(line.substr(0, c1));
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad trial index");
    }
    r.stokes_click = parse_click(std::string_view(line).substr(c1 + 1, c2 - c1 - 1), line_no);
    r.antistokes_click = parse_click(std::string_view(line).substr(c2 + 1), line_no);
    records.push_back(r);
  }
  return records;
}

}  // namespace optomag
