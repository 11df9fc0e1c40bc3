#include "optomag/channels.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "optomag/errors.hpp"

namespace optomag {

namespace {

constexpr Complex kI{0.0, 1.0};

void require_distinct(const std::string& a, const std::string& b, const char* what) {
  if (a == b) throw DomainError(std::string(what) + ": the two modes must differ");
}

void require_probability(double value, const std::string& name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw DomainError(name + " = " + std::to_string(value) + " outside [0,1]");
  }
}

// Two-mode local ladder operators in Kronecker order (first, second).
std::pair<CMatrix, CMatrix> two_mode_ladders(int cutoff_a, int cutoff_b) {
  const CMatrix a = local_annihilation(cutoff_a);
  const CMatrix b = local_annihilation(cutoff_b);
  const CMatrix ia = CMatrix::Identity(cutoff_a + 1, cutoff_a + 1);
  const CMatrix ib = CMatrix::Identity(cutoff_b + 1, cutoff_b + 1);
  return {Eigen::kroneckerProduct(a, ib).eval(), Eigen::kroneckerProduct(ia, b).eval()};
}

ModeOperator two_mode_unitary(const ModeRegistry& registry, const std::string& first,
                              const std::string& second, const CMatrix& generator) {
  const std::string labels[] = {first, second};
  return embed(registry, labels, exp_anti_hermitian(generator));
}

}  // namespace

CMatrix exp_anti_hermitian(const CMatrix& generator) {
  // G = −iH with H Hermitian, so exp(G) = V exp(−iΛ) V†.
  const CMatrix h = kI * generator;
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(0.5 * (h + h.adjoint()));
  const Eigen::VectorXd lambda = solver.eigenvalues();
  CVector phases(lambda.size());
  for (Eigen::Index k = 0; k < lambda.size(); ++k) phases(k) = std::exp(-kI * lambda(k));
  return solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
}

ModeOperator beamsplitter_unitary(const BeamsplitterSpec& spec, const ModeRegistry& registry) {
  require_distinct(spec.mode_a, spec.mode_b, "beamsplitter");
  const auto [a, b] = two_mode_ladders(registry.mode(spec.mode_a).cutoff,
                                       registry.mode(spec.mode_b).cutoff);
  const Complex e = std::exp(kI * spec.relative_phase);
  const CMatrix gen = spec.mixing_angle * (e * a.adjoint() * b - std::conj(e) * a * b.adjoint());
  return two_mode_unitary(registry, spec.mode_a, spec.mode_b, gen);
}

double squeezer_truncation_error(double squeeze_parameter, int cutoff) {
  const double lambda2 = std::pow(std::tanh(squeeze_parameter), 2);
  return std::pow(lambda2, cutoff + 1);
}

double squeeze_parameter_for_probability(double probability) {
  if (!(probability >= 0.0 && probability < 1.0)) {
    throw DomainError("scattering probability must lie in [0,1)");
  }
  return std::atanh(std::sqrt(probability));
}

ModeOperator two_mode_squeezer_unitary(const SqueezerSpec& spec, const ModeRegistry& registry,
                                       double truncation_bound) {
  require_distinct(spec.optical_mode, spec.magnon_mode, "squeezer");
  const int ca = registry.mode(spec.optical_mode).cutoff;
  const int cm = registry.mode(spec.magnon_mode).cutoff;
  const double err = squeezer_truncation_error(spec.squeeze_parameter, std::min(ca, cm));
  if (err > truncation_bound) {
    throw TruncationError("squeezer truncation error " + std::to_string(err) +
                          " exceeds bound " + std::to_string(truncation_bound) +
                          "; raise cutoffs or lower the squeeze parameter");
  }
  const auto [a, m] = two_mode_ladders(ca, cm);
  const Complex xi = std::polar(spec.squeeze_parameter, spec.phase);
  const CMatrix gen = xi * a.adjoint() * m.adjoint() - std::conj(xi) * a * m;
  return two_mode_unitary(registry, spec.optical_mode, spec.magnon_mode, gen);
}

ModeOperator swap_coupler_unitary(const SwapSpec& spec, const ModeRegistry& registry) {
  require_distinct(spec.optical_mode, spec.magnon_mode, "swap coupler");
  const auto [a, m] = two_mode_ladders(registry.mode(spec.optical_mode).cutoff,
                                       registry.mode(spec.magnon_mode).cutoff);
  const CMatrix gen = -kI * spec.swap_angle * (a * m.adjoint() + a.adjoint() * m);
  return two_mode_unitary(registry, spec.optical_mode, spec.magnon_mode, gen);
}

ModeOperator phase_shift_unitary(const std::string& mode, double phase,
                                 const ModeRegistry& registry) {
  const int cutoff = registry.mode(mode).cutoff;
  CMatrix diag = CMatrix::Zero(cutoff + 1, cutoff + 1);
  for (int n = 0; n <= cutoff; ++n) diag(n, n) = std::exp(kI * (phase * n));
  return embed(registry, std::span(&mode, 1), diag);
}

std::vector<CMatrix> loss_kraus_operators(int cutoff, double transmissivity) {
  require_probability(transmissivity, "transmissivity");
  const ModeRegistry local({{"system", cutoff}, {"environment", cutoff}});
  const BeamsplitterSpec bs{"system", "environment", std::acos(std::sqrt(transmissivity)), 0.0};
  const CMatrix u = CMatrix(beamsplitter_unitary(bs, local).matrix());
  const BasisIndexer basis(local);
  const auto levels = static_cast<Eigen::Index>(cutoff + 1);

  std::vector<CMatrix> kraus;
  for (int k = 0; k <= cutoff; ++k) {
    CMatrix op = CMatrix::Zero(levels, levels);
    for (int out = 0; out <= cutoff; ++out) {
      for (int in = 0; in <= cutoff; ++in) {
        const int row_occ[] = {out, k};
        const int col_occ[] = {in, 0};
        op(out, in) = u(static_cast<Eigen::Index>(basis.index_of(row_occ)),
                        static_cast<Eigen::Index>(basis.index_of(col_occ)));
      }
    }
    kraus.push_back(std::move(op));
  }
  return kraus;
}

DensityOperator loss_channel(const DensityOperator& rho, const std::string& mode,
                             double transmissivity) {
  require_probability(transmissivity, "transmissivity");
  if (transmissivity == 1.0) return rho;
  const int cutoff = rho.registry().mode(mode).cutoff;
  std::vector<ModeOperator> kraus;
  for (const auto& k : loss_kraus_operators(cutoff, transmissivity)) {
    kraus.push_back(embed(rho.registry(), std::span(&mode, 1), k));
  }
  return apply_kraus(rho, kraus);
}

double thermal_ratio(double mean_occupation) {
  if (!(mean_occupation >= 0.0) || !std::isfinite(mean_occupation)) {
    throw DomainError("mean occupation must be a finite value >= 0");
  }
  return mean_occupation / (mean_occupation + 1.0);
}

double occupation_from_ratio(double ratio) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw DomainError("thermal ratio S must lie in [0,1)");
  return ratio / (1.0 - ratio);
}

PreparedDensity thermal_state(const std::string& label, double mean_occupation, int cutoff) {
  const double s = thermal_ratio(mean_occupation);
  const ModeRegistry reg({{label, cutoff}});
  CMatrix m = CMatrix::Zero(cutoff + 1, cutoff + 1);
  double total = 0.0;
  for (int n = 0; n <= cutoff; ++n) {
    const double w = (1.0 - s) * std::pow(s, n);
    m(n, n) = w;
    total += w;
  }
  return {DensityOperator(reg, m / total), std::pow(s, cutoff + 1)};
}

PreparedState coherent_state(const std::string& label, Complex alpha, int cutoff,
                             double truncation_bound) {
  const ModeRegistry reg({{label, cutoff}});
  CVector amps(cutoff + 1);
  const double mean = std::norm(alpha);
  Complex term = std::exp(-0.5 * mean);
  double kept = 0.0;
  for (int n = 0; n <= cutoff; ++n) {
    if (n > 0) term *= alpha / std::sqrt(static_cast<double>(n));
    amps(n) = term;
    kept += std::norm(term);
  }
  const double lost = std::max(0.0, 1.0 - kept);
  if (lost > truncation_bound) {
    throw TruncationError("coherent state truncation weight " + std::to_string(lost) +
                          " exceeds bound " + std::to_string(truncation_bound));
  }
  return {MultiModeState(reg, amps).normalized(), lost};
}

void validate(const DetectorSpec& detector) {
  require_probability(detector.efficiency, "detector efficiency");
  require_probability(detector.dark_click_probability, "dark click probability");
}

Eigen::VectorXd no_click_weights(int cutoff, const DetectorSpec& detector) {
  validate(detector);
  Eigen::VectorXd w(cutoff + 1);
  for (int n = 0; n <= cutoff; ++n) {
    w(n) = (1.0 - detector.dark_click_probability) * std::pow(1.0 - detector.efficiency, n);
  }
  return w;
}

const DensityOperator& ClickOutcome::click_state() const {
  if (!click_) throw ConditioningError("click branch unavailable: click probability is zero");
  return *click_;
}

const DensityOperator& ClickOutcome::no_click_state() const {
  if (!no_click_) throw ConditioningError("no-click branch unavailable: probability is zero");
  return *no_click_;
}

ClickOutcome click_measurement(const DensityOperator& rho, const std::string& mode,
                               const DetectorSpec& detector) {
  const ModeRegistry& reg = rho.registry();
  const Eigen::VectorXd none = no_click_weights(reg.mode(mode).cutoff, detector);
  const Eigen::VectorXd click = Eigen::VectorXd::Ones(none.size()) - none;

  const double total = rho.trace();
  if (reg.size() == 1) {
    const double p_none = rho.populations().dot(none) / total;
    return ClickOutcome(std::clamp(1.0 - p_none, 0.0, 1.0), std::nullopt, std::nullopt);
  }

  const std::vector<std::string> keep = reg.complement(std::span(&mode, 1)).labels();
  DensityOperator rho_click = partial_trace_weighted(rho, keep, click);
  DensityOperator rho_none = partial_trace_weighted(rho, keep, none);
  const double p_click = std::clamp(rho_click.trace() / total, 0.0, 1.0);

  std::optional<DensityOperator> click_state;
  std::optional<DensityOperator> none_state;
  if (rho_click.trace() > 0.0) click_state = rho_click.normalized();
  if (rho_none.trace() > 0.0) none_state = rho_none.normalized();
  return ClickOutcome(p_click, std::move(click_state), std::move(none_state));
}

}  // namespace optomag
