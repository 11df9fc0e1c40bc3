#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "optomag/channels.hpp"
#include "optomag/errors.hpp"

using namespace optomag;

namespace {

// Plain Taylor series, used as an independent oracle for exp_anti_hermitian.
CMatrix taylor_exp(const CMatrix& x) {
  CMatrix out = CMatrix::Identity(x.rows(), x.cols());
  CMatrix term = out;
  for (int k = 1; k < 60; ++k) {
    term = term * x / double(k);
    out += term;
  }
  return out;
}

double binomial(int n, int k) {
  return std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0));
}

}  // namespace

TEST_CASE("beamsplitter convention and unitarity") {
  const ModeRegistry reg({{"a", 2}, {"b", 2}});
  const double theta = 0.3;
  const auto u = beamsplitter_unitary({"a", "b", theta}, reg);
  CHECK(u.unitarity_defect() < 1e-12);
  const int in[] = {1, 0};
  const auto out = apply(u, MultiModeState::basis_state(reg, in));
  const int o10[] = {1, 0};
  const int o01[] = {0, 1};
  CHECK(std::abs(out.amplitude(o10) - Complex(std::cos(theta))) < 1e-12);
  CHECK(std::abs(out.amplitude(o01) - Complex(0, std::sin(theta))) < 1e-12);
}

TEST_CASE("Hong-Ou-Mandel dip on a 50/50 beamsplitter") {
  const ModeRegistry reg({{"a", 2}, {"b", 2}});
  const auto u = beamsplitter_unitary({"a", "b"}, reg);
  const int in[] = {1, 1};
  const auto out = apply(u, MultiModeState::basis_state(reg, in));
  CHECK(std::abs(out.amplitude(in)) < 1e-12);
  const int o20[] = {2, 0};
  CHECK(std::norm(out.amplitude(o20)) == doctest::Approx(0.5));
}

TEST_CASE("squeezed vacuum matches the analytic series") {
  const int cutoff = 14;
  const ModeRegistry reg({{"s", cutoff}, {"m", cutoff}});
  const double r = 0.4;
  const double phase = 0.7;
  const auto u = two_mode_squeezer_unitary({"s", "m", r, phase}, reg, 1e-6);
  const auto psi = apply(u, MultiModeState::vacuum(reg));
  for (int n = 0; n <= 5; ++n) {
    const int occ[] = {n, n};
    const Complex expect = std::polar(std::pow(std::tanh(r), n) / std::cosh(r), n * phase);
    CHECK(std::abs(psi.amplitude(occ) - expect) < 1e-9);
  }
  const int off[] = {1, 0};
  CHECK(std::abs(psi.amplitude(off)) < 1e-14);
}

TEST_CASE("squeezer truncation bound") {
  const double r = squeeze_parameter_for_probability(0.03);
  CHECK(std::tanh(r) * std::tanh(r) == doctest::Approx(0.03).epsilon(1e-14));
  CHECK(squeezer_truncation_error(r, 3) == doctest::Approx(std::pow(0.03, 4)));
  const ModeRegistry reg({{"s", 1}, {"m", 1}});
  CHECK_THROWS_AS(two_mode_squeezer_unitary({"s", "m", 1.0}, reg, 1e-3), TruncationError);
  CHECK_THROWS_AS(squeeze_parameter_for_probability(1.0), DomainError);
}

TEST_CASE("swap coupler: full swap and Taylor oracle at pi/4") {
  const ModeRegistry reg({{"a", 2}, {"m", 2}});
  const auto full = swap_coupler_unitary({"a", "m", std::numbers::pi / 2}, reg);
  const int in[] = {0, 1};
  const int out_occ[] = {1, 0};
  CHECK(std::abs(apply(full, MultiModeState::basis_state(reg, in)).amplitude(out_occ) -
                 Complex(0, -1)) < 1e-12);

  const ModeOperator a = annihilation(reg, "a");
  const ModeOperator m = annihilation(reg, "m");
  const CMatrix gen = CMatrix((a * m.adjoint() + a.adjoint() * m).matrix()) *
                      Complex(0, -std::numbers::pi / 4);
  const auto quarter = swap_coupler_unitary({"a", "m", std::numbers::pi / 4}, reg);
  CHECK((CMatrix(quarter.matrix()) - taylor_exp(gen)).norm() < 1e-12);
  CHECK((exp_anti_hermitian(gen) - taylor_exp(gen)).norm() < 1e-12);
}

TEST_CASE("phase shifter multiplies |n⟩ by e^{i n φ}") {
  const ModeRegistry reg({{"a", 3}});
  const auto u = phase_shift_unitary("a", 0.5, reg);
  const auto out = apply(u, MultiModeState::basis_state(reg, std::vector<int>{3}));
  CHECK(std::abs(out.amplitudes()(3) - std::polar(1.0, 1.5)) < 1e-12);
}

TEST_CASE("loss Kraus operators: completeness and binomial oracle") {
  const int cutoff = 5;
  for (double eta : {0.0, 0.3, 0.8, 1.0}) {
    const auto kraus = loss_kraus_operators(cutoff, eta);
    CMatrix sum = CMatrix::Zero(cutoff + 1, cutoff + 1);
    for (const auto& k : kraus) sum += k.adjoint() * k;
    CHECK((sum - CMatrix::Identity(cutoff + 1, cutoff + 1)).norm() < 1e-12);
  }
  const ModeRegistry reg({{"a", cutoff}});
  const double eta = 0.35;
  const int n = 4;
  const auto rho = DensityOperator::from_pure(MultiModeState::basis_state(reg, std::vector<int>{n}));
  const auto out = loss_channel(rho, "a", eta);
  for (int k = 0; k <= n; ++k) {
    const double expect = binomial(n, k) * std::pow(eta, k) * std::pow(1 - eta, n - k);
    CHECK(out.populations()(k) == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK_THROWS_AS(loss_kraus_operators(3, 1.2), DomainError);
}

TEST_CASE("loss reduces a coherent amplitude by √η") {
  const ModeRegistry reg({{"a", 12}});
  const auto coh = coherent_state("a", Complex(0.8, 0.2), 12, 1e-9);
  const auto out = loss_channel(DensityOperator::from_pure(coh.state), "a", 0.5);
  const Complex mean = expectation(out, annihilation(reg, "a"));
  CHECK(std::abs(mean - Complex(0.8, 0.2) * std::sqrt(0.5)) < 1e-8);
}

TEST_CASE("thermal state") {
  const double nbar = 0.036;
  const auto t = thermal_state("m", nbar, 3);
  const double s = thermal_ratio(nbar);
  CHECK(s == doctest::Approx(nbar / (1 + nbar)));
  CHECK(occupation_from_ratio(s) == doctest::Approx(nbar));
  CHECK(t.truncation_weight == doctest::Approx(std::pow(s, 4)));
  const double z = (1 - std::pow(s, 4)) / (1 - s);
  for (int k = 0; k <= 3; ++k) CHECK(t.rho.populations()(k) == doctest::Approx(std::pow(s, k) / z));
  CHECK(std::abs(t.rho.trace() - 1.0) < 1e-14);
  CHECK_THROWS_AS(thermal_state("m", -1.0, 3), DomainError);
}

TEST_CASE("coherent state amplitudes and truncation") {
  const Complex alpha(0.1, 0.05);
  const auto c = coherent_state("a", alpha, 3);
  const double norm0 = std::exp(-std::norm(alpha) / 2);
  CHECK(std::abs(c.state.amplitudes()(0) * std::sqrt(1 - c.truncation_weight) - norm0) < 1e-12);
  CHECK(std::abs(c.state.amplitudes()(1) / c.state.amplitudes()(0) - alpha) < 1e-12);
  CHECK_THROWS_AS(coherent_state("a", Complex(2.0), 3), TruncationError);
}

TEST_CASE("click POVM examples") {
  const ModeRegistry reg({{"d", 3}});
  auto fock = [&](int n) {
    return DensityOperator::from_pure(MultiModeState::basis_state(reg, std::vector<int>{n}));
  };
  CHECK(click_measurement(fock(1), "d", {}).p_click() == doctest::Approx(1.0));
  CHECK(click_measurement(fock(0), "d", {}).p_click() == doctest::Approx(0.0));
  CHECK(click_measurement(fock(2), "d", {0.5, 0.0}).p_click() == doctest::Approx(0.75));
  CHECK(click_measurement(fock(0), "d", {1.0, 0.1}).p_click() == doctest::Approx(0.1));
  const auto q = no_click_weights(3, {0.4, 0.02});
  for (int n = 0; n <= 3; ++n) CHECK(q(n) == doctest::Approx(0.98 * std::pow(0.6, n)));
  CHECK_THROWS_AS(validate(DetectorSpec{1.5, 0.0}), DomainError);
}

TEST_CASE("click conditioning on a two-mode state") {
  const ModeRegistry reg({{"d", 2}, {"m", 2}});
  // (|0,1⟩ + |1,0⟩)/√2: a click on d leaves m in |0⟩, no click leaves |1⟩.
  CVector v = CVector::Zero(9);
  v(BasisIndexer(reg).index_of(std::vector<int>{0, 1})) = 1 / std::sqrt(2.0);
  v(BasisIndexer(reg).index_of(std::vector<int>{1, 0})) = 1 / std::sqrt(2.0);
  const auto outcome = click_measurement(DensityOperator::from_pure(MultiModeState(reg, v)), "d", {});
  CHECK(outcome.p_click() == doctest::Approx(0.5));
  CHECK(outcome.click_state().populations()(0) == doctest::Approx(1.0));
  CHECK(outcome.no_click_state().populations()(1) == doctest::Approx(1.0));

  const auto vac = click_measurement(DensityOperator::vacuum(reg), "d", {});
  CHECK_THROWS_AS(vac.click_state(), ConditioningError);
}
