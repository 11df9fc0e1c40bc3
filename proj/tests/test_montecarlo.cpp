#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "optomag/errors.hpp"
#include "optomag/montecarlo.hpp"

using namespace optomag;

namespace {

ProtocolConfig ideal() {
  ProtocolConfig c;
  c.temperature_k = 0.0;
  return c;
}

// Brighter source with a full-swap read, so that 10³ trials already see
// coincidences.
ProtocolConfig bright() {
  ProtocolConfig c = ideal();
  c.pulse_mean_photons = 0.3;
  c.stokes_probability_a = c.stokes_probability_b = 0.2;
  c.read_swap_angle_rad = std::numbers::pi / 2;
  c.read_phase_rad = std::numbers::pi / 4;
  return c;
}

}  // namespace

TEST_CASE("outcome distribution is normalized and consistent with entangle_stage") {
  const ProtocolConfig c = ideal();
  const auto d = outcome_distribution(c);
  const auto& p = d.probabilities();
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
  CHECK(d.herald_probability(1) == doctest::Approx(entangle_stage(c).herald_probability).epsilon(1e-9));
}

TEST_CASE("outcome weights form a partition of unity") {
  const DetectorSpec det{0.7, 0.01};
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(16);
  for (int k = 0; k < 4; ++k) sum += outcome_weights(3, 3, det, static_cast<Click>(k));
  CHECK((sum.array() - 1.0).abs().maxCoeff() < 1e-15);
  CHECK((outcome_weights(3, 3, det, Click::kDetector1) -
         single_click_weights(3, 3, det, 1)).norm() < 1e-15);
}

TEST_CASE("sampling is deterministic and independent of worker count") {
  const auto d = outcome_distribution(bright());
  const std::uint64_t n = 3 * kTrialsPerBlock + 17;
  const auto a = sample_from(d, n, 42, 1);
  CHECK(a == sample_from(d, n, 42, 1));
  CHECK(a == sample_from(d, n, 42, 4));
  CHECK(a == sample_from(d, n, 42, 7));
  CHECK_FALSE(a == sample_from(d, n, 43, 1));
  for (std::uint64_t t = 0; t < n; ++t) CHECK(a[t].trial_index == t);
}

TEST_CASE("no pulse, no Stokes clicks") {
  ProtocolConfig c = ideal();
  c.pulse_mean_photons = 0.0;
  const auto records = sample_trials(c, 5000, 1);
  for (const auto& r : records) CHECK(r.stokes_click == Click::kNone);
  CHECK_THROWS_AS(estimate_g2(records, 1, 1), ConditioningError);
}

TEST_CASE("herald rate at ideal parameters within 4 sigma at 1e5") {
  const ProtocolConfig c = ideal();
  const auto d = outcome_distribution(c);
  const auto records = sample_from(d, 100000, 7, 2);
  const auto est = estimate_stokes_rate(records, Click::kDetector1);
  const double sigma = predicted_rate_error(d.herald_probability(1), 100000);
  CHECK(std::abs(est.value - d.herald_probability(1)) <= 4 * sigma);
}

TEST_CASE("g2 at the fringe maximum within 4 sigma") {
  const ProtocolConfig c = bright();
  const auto d = outcome_distribution(c);
  const auto records = sample_from(d, 100000, 11, 2);
  // A2 is the bright port for detector-1 heralds at Δφ = π/4.
  const auto est = estimate_g2(records, 2, 1);
  CHECK(d.g2(2, 1) > 10.0);
  CHECK(std::abs(est.value - d.g2(2, 1)) <= 4 * est.standard_error);
}

TEST_CASE("delta-method errors match the replicate spread") {
  const auto d = outcome_distribution(bright());
  const std::uint64_t n = 20000;
  const int reps = 200;
  std::vector<double> g, r;
  for (int k = 0; k < reps; ++k) {
    const auto rec = sample_from(d, n, 1000 + k, 1);
    g.push_back(estimate_g2(rec, 1, 1).value);
    const PhaseGroup group{0.0, rec};
    r.push_back(estimate_witness(std::span(&group, 1), 1).front().r_m.value);
  }
  auto spread = [](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (v.size() - 1));
  };
  CHECK(spread(g) == doctest::Approx(predicted_g2_error(d, 1, 1, n)).epsilon(0.2));
  CHECK(spread(r) == doctest::Approx(predicted_r_m_error(d, 1, n)).epsilon(0.2));
}

TEST_CASE("ideal config at 1e6 trials: R below 1 with the exact value inside 3 sigma") {
  ProtocolConfig c = ideal();
  c.read_phase_rad = std::numbers::pi / 2;
  const auto d = outcome_distribution(c);
  const auto exact = d.witness(c.read_phase_rad, 1, 1e-9);
  REQUIRE_FALSE(exact.divergent);
  const PhaseGroup group{c.read_phase_rad, sample_from(d, 1000000, 5, 4)};
  const auto est = estimate_witness(std::span(&group, 1), 1).front();
  REQUIRE_FALSE(est.divergent);
  CHECK(est.r_m.value < 1.0);
  CHECK(std::abs(est.r_m.value - exact.r_m) <= 3 * est.r_m.standard_error);
}

TEST_CASE("divergence flag when the two g2 are statistically equal") {
  ProtocolConfig c = bright();
  c.read_phase_rad = 0.0;  // symmetric point: g2_a1 = g2_a2 exactly
  const PhaseGroup group{0.0, sample_trials(c, 20000, 3)};
  const auto est = estimate_witness(std::span(&group, 1), 1).front();
  CHECK(est.divergent);
  CHECK(std::isinf(est.r_m.value));
}

TEST_CASE("record CSV round trip") {
  const auto records = sample_trials(bright(), 500, 9);
  const std::string text = records_to_csv(records);
  CHECK(text.rfind("trial_index,stokes_click,antistokes_click\n", 0) == 0);
  CHECK(records_from_csv(text) == records);
  CHECK_THROWS_AS(records_from_csv("trial_index,stokes_click,antistokes_click\n0,left,none\n"),
                  ParseError);
  try {
    records_from_csv("trial_index,stokes_click,antistokes_click\n0,none,none\n1,none\n");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("splitmix64 reference values") {
  // First outputs of the reference generator seeded with 0.
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFull);
  CHECK(splitmix64(0x9E3779B97F4A7C15ull) == 0x6E789E6AA1B965F4ull);
}
