#include <doctest.h>

#include <vector>

#include "fogrl/errors.hpp"
#include "fogrl/features.hpp"
#include "fogrl/rng.hpp"

using namespace fogrl;

namespace {

std::vector<TiValue> window_of(const std::vector<double>& tis, std::int64_t dt_ms = 1000,
                               std::int64_t t0_ms = 0) {
  std::vector<TiValue> w;
  for (std::size_t i = 0; i < tis.size(); ++i)
    w.push_back({t0_ms + static_cast<std::int64_t>(i) * dt_ms, tis[i], 0.0, 0.0});
  return w;
}

}  // namespace

TEST_CASE("hand-computed feature oracle") {
  const auto w = window_of({2.0, 4.0, 6.0});
  // now at the window end (t = 2s), onset 8s later.
  const StateFeatures f = extract_state(w, 10000, 2000);
  CHECK(f.tau_s == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(f.mean == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(f.stddev == doctest::Approx(1.632993161855452).epsilon(1e-9));
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(f.spike == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.zscore == doctest::Approx(1.224744871391589).epsilon(1e-9));
}

TEST_CASE("constant window degenerates cleanly") {
  const StateFeatures f = extract_state(window_of({5.0, 5.0, 5.0}), 5000, 2000);
  CHECK(f.stddev == 0.0);
  CHECK(f.spike == 0.0);
  CHECK(f.zscore == 0.0);  // sigma floor keeps the division finite
  CHECK(f.slope == 0.0);
}

TEST_CASE("remaining time reaches zero at the onset") {
  const StateFeatures f = extract_state(window_of({1.0, 2.0}), 1000, 1000);
  CHECK(f.tau_s == 0.0);
  CHECK_THROWS_AS(extract_state(window_of({1.0}), 1000, 2000), ContractError);
}

TEST_CASE("empty and single-sample windows") {
  CHECK_THROWS_AS(extract_state({}, 1000, 0), ContractError);
  const StateFeatures f = extract_state(window_of({3.0}), 5000, 0);
  CHECK(f.stddev == 0.0);
  CHECK(f.slope == 0.0);
  CHECK(f.mean == 3.0);
}

TEST_CASE("raw-window mode min-max scales the last taps") {
  FeatureConfig cfg;
  cfg.raw_taps = 6;
  const auto v = extract_state_ablated(window_of({1, 2, 3, 4, 5, 6}), cfg);
  REQUIRE(v.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK(v[static_cast<std::size_t>(i)] == doctest::Approx(0.2 * i));

  // Constant windows map to the midpoint.
  for (double x : extract_state_ablated(window_of({7, 7, 7, 7, 7, 7}), cfg)) CHECK(x == 0.5);

  // Dimensionality is always raw_taps; scaling uses the whole window.
  const auto wide = extract_state_ablated(window_of({0, 10, 5, 5, 5, 5, 5, 5, 5, 5}), cfg);
  REQUIRE(wide.size() == 6);
  for (double x : wide) CHECK(x == doctest::Approx(0.5));

  // Short windows keep the dimension by repeating the earliest sample.
  const auto padded = extract_state_ablated(window_of({0, 10}), cfg);
  REQUIRE(padded.size() == 6);
  CHECK(padded[4] == doctest::Approx(0.0));
  CHECK(padded[5] == doctest::Approx(1.0));

  CHECK_THROWS_AS(extract_state_ablated({}, cfg), ContractError);
}

TEST_CASE("shift invariance and slope signs") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> tis;
    for (int i = 0; i < 12; ++i) tis.push_back(rng.uniform(0.0, 10.0));
    const double c = rng.uniform(-50.0, 50.0);
    std::vector<double> shifted = tis;
    for (double& x : shifted) x += c;

    const StateFeatures a = extract_state(window_of(tis), 60000, 11000);
    const StateFeatures b = extract_state(window_of(shifted), 60000, 11000);
    CHECK(b.mean == doctest::Approx(a.mean + c).epsilon(1e-9));
    CHECK(b.stddev == doctest::Approx(a.stddev).epsilon(1e-9));
    CHECK(b.slope == doctest::Approx(a.slope).epsilon(1e-9));
    CHECK(b.spike == doctest::Approx(a.spike).epsilon(1e-9));
    CHECK(b.zscore == doctest::Approx(a.zscore).epsilon(1e-6));

    // The spike score's absolute value is redundant: max >= mean always.
    CHECK(a.spike >= 0.0);
    // And the z-score is exactly spike / sigma when sigma clears the floor.
    if (a.stddev >= 1e-8) CHECK(a.zscore == a.spike / a.stddev);
  }

  CHECK(extract_state(window_of({1, 2, 3, 4}), 60000, 3000).slope > 0.0);
  CHECK(extract_state(window_of({4, 3, 2, 1}), 60000, 3000).slope < 0.0);
}

TEST_CASE("trial-level sigma option") {
  FeatureConfig cfg;
  cfg.zscore_sigma = ZscoreSigma::Trial;
  cfg.trial_sigma = 4.0;
  const StateFeatures f = extract_state(window_of({2.0, 4.0, 6.0}), 10000, 2000, cfg);
  CHECK(f.zscore == doctest::Approx(0.5).epsilon(1e-12));  // (6-4)/4
}

TEST_CASE("running normalizer freezes after warm-up") {
  StateNormalizer norm(StateNormMode::Running, 3, /*tau_index=*/0, /*horizon_s=*/15.0,
                       /*warmup=*/10);
  Rng rng(9);
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd v(3);
    v << rng.uniform(0.0, 15.0), rng.gaussian(5.0, 2.0), rng.gaussian(-1.0, 0.5);
    norm.observe(v);
  }
  CHECK(norm.frozen());

  Eigen::VectorXd probe(3);
  probe << 7.5, 5.0, -1.0;
  const Eigen::VectorXd before = norm.apply(probe);
  CHECK(before(0) == doctest::Approx(0.5));  // tau scaled by the horizon
  // Frozen: further observations change nothing.
  Eigen::VectorXd wild(3);
  wild << 1.0, 1e6, -1e6;
  for (int i = 0; i < 100; ++i) norm.observe(wild);
  const Eigen::VectorXd after = norm.apply(probe);
  CHECK(after == before);

  // None mode is the identity.
  StateNormalizer off(StateNormMode::None, 3, 0, 15.0, 10);
  CHECK(off.apply(probe) == probe);
}
