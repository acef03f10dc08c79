#include <doctest.h>

#include <cmath>
#include <vector>

#include "fogrl/env.hpp"
#include "fogrl/errors.hpp"

using namespace fogrl;

namespace {

// Flat synthetic signal series covering [stride, total_s] at a fixed stride.
TiSeries flat_series(double total_s, double stride_s = 0.25, double level = 5.0) {
  TiSeries s;
  const auto stride_ms = static_cast<std::int64_t>(stride_s * 1000.0);
  for (std::int64_t t = stride_ms; t <= static_cast<std::int64_t>(total_s * 1000.0);
       t += stride_ms)
    s.push_back({t, level + 0.01 * static_cast<double>(t % 7), 0.0, 0.0});
  return s;
}

FogEpisode episode_at(double onset_s, double end_s, double history_start_s = 0.0) {
  FogEpisode ep;
  ep.subject_id = 1;
  ep.run_id = 1;
  ep.onset_ms = static_cast<std::int64_t>(onset_s * 1000.0);
  ep.end_ms = static_cast<std::int64_t>(end_s * 1000.0);
  ep.pre_window_start_ms = static_cast<std::int64_t>(history_start_s * 1000.0);
  return ep;
}

}  // namespace

TEST_CASE("reward table reproduces both schemes at the boundaries") {
  const EnvConfig shaped = EnvConfig::for_scheme(RewardScheme::Shaped);
  CHECK(place_reward(0.1, shaped) == -60.0);
  CHECK(place_reward(5.999, shaped) == -60.0);
  CHECK(place_reward(6.0, shaped) == 150.0);
  CHECK(place_reward(10.0, shaped) == 150.0);
  CHECK(place_reward(15.0, shaped) == 150.0);
  CHECK(place_reward(15.001, shaped) == -40.0);
  CHECK(shaped.rewards.wait_bonus == 0.1);
  CHECK(shaped.rewards.failure == -200.0);

  const EnvConfig simple = EnvConfig::for_scheme(RewardScheme::SimpleAppendixB);
  CHECK(place_reward(0.1, simple) == -60.0);
  CHECK(place_reward(5.999, simple) == -60.0);
  CHECK(place_reward(6.0, simple) == 100.0);
  CHECK(place_reward(10.0, simple) == 100.0);
  CHECK(place_reward(15.0, simple) == 100.0);
  CHECK(place_reward(15.001, simple) == -40.0);
  CHECK(simple.rewards.wait_bonus == 0.0);
  CHECK(simple.rewards.failure == -200.0);
}

TEST_CASE("graded accurate band peaks at the optimal target") {
  EnvConfig cfg = EnvConfig::for_scheme(RewardScheme::Shaped);
  cfg.reward_grade = RewardGrade::Linear;
  CHECK(place_reward(6.0, cfg) == doctest::Approx(150.0));
  CHECK(place_reward(10.5, cfg) == doctest::Approx(75.0));
  CHECK(place_reward(15.0, cfg) == doctest::Approx(0.0));
  CHECK(place_reward(5.9, cfg) == -60.0);
  CHECK(place_reward(15.1, cfg) == -40.0);
}

TEST_CASE("reset draws the start offset from the configured band") {
  const TiSeries series = flat_series(60.0);
  const FogEpisode ep = episode_at(40.0, 45.0);
  const EnvConfig cfg = EnvConfig::for_scheme(RewardScheme::Shaped);

  FogEnv env(&series, ep, cfg);
  CHECK_FALSE(env.short_history());

  // The environment consumes exactly one uniform draw from [lo, horizon].
  Rng expect(123);
  const double offset = expect.uniform(6.0, 15.0);
  Rng rng(123);
  REQUIRE(env.reset(rng).has_value());
  CHECK(env.tau_s() == doctest::Approx(offset).epsilon(1e-3));
  CHECK(env.tau_s() >= 6.0);
  CHECK(env.tau_s() <= 15.0);
}

TEST_CASE("short-history episodes start at their maximum offset") {
  const TiSeries series = flat_series(60.0);
  // Usable history starts 7 s before the onset.
  const FogEpisode ep = episode_at(40.0, 45.0, 33.0);
  FogEnv env(&series, ep, EnvConfig::for_scheme(RewardScheme::Shaped));
  CHECK(env.short_history());
  CHECK(env.max_start_offset_s() == doctest::Approx(7.0));
  Rng rng(5);
  REQUIRE(env.reset(rng).has_value());
  CHECK(env.tau_s() == doctest::Approx(7.0));
}

TEST_CASE("reset sequences are seed-deterministic") {
  const TiSeries series = flat_series(60.0);
  const FogEpisode ep = episode_at(40.0, 45.0);
  std::vector<double> taus_a, taus_b;
  for (auto* taus : {&taus_a, &taus_b}) {
    Rng rng(77);
    for (int i = 0; i < 10; ++i) {
      FogEnv env(&series, ep, EnvConfig::for_scheme(RewardScheme::Shaped));
      REQUIRE(env.reset(rng).has_value());
      taus->push_back(env.tau_s());
    }
  }
  CHECK(taus_a == taus_b);
}

TEST_CASE("episodes without usable history signal a skip") {
  const TiSeries series = flat_series(60.0);
  // Onset before the first signal sample.
  const FogEpisode ep = episode_at(0.1, 5.0);
  FogEnv env(&series, ep, EnvConfig::for_scheme(RewardScheme::Shaped));
  Rng rng(1);
  CHECK_FALSE(env.reset(rng).has_value());
}

TEST_CASE("wait advances the clock and pays the bonus") {
  const TiSeries series = flat_series(60.0);
  const FogEpisode ep = episode_at(40.0, 45.0, 28.0);  // starts at tau = 12
  FogEnv env(&series, ep, EnvConfig::for_scheme(RewardScheme::Shaped));
  Rng rng(2);
  REQUIRE(env.reset(rng).has_value());
  const double tau0 = env.tau_s();
  const StepOutcome out = env.step(Action::Wait);
  CHECK(out.reward == 0.1);
  CHECK_FALSE(out.done);
  CHECK(out.tau_at_action_s == doctest::Approx(tau0));
  CHECK(env.tau_s() == doctest::Approx(tau0 - 0.25));
  CHECK(out.next_state.size() == 6);
}

TEST_CASE("waiting to the onset fails the episode and done is absorbing") {
  const TiSeries series = flat_series(60.0);
  const FogEpisode ep = episode_at(40.0, 45.0, 32.0);  // tau starts at 8
  FogEnv env(&series, ep, EnvConfig::for_scheme(RewardScheme::Shaped));
  Rng rng(3);
  REQUIRE(env.reset(rng).has_value());

  std::vector<double> rewards;
  StepOutcome out;
  int guard = 0;
  do {
    out = env.step(Action::Wait);
    rewards.push_back(out.reward);
    REQUIRE(++guard < 100);
  } while (!out.done);

  CHECK(out.terminal == TerminalKind::ReachedOnset);
  CHECK(out.reward == -200.0);
  CHECK(rewards.size() == 32);  // 8 s / 0.25 s
  CHECK(episode_return(rewards) == doctest::Approx(-200.0 + 0.1 * 31).epsilon(1e-9));
  CHECK_THROWS_AS(env.step(Action::Wait), ContractError);
}

TEST_CASE("placement rewards follow the remaining time") {
  const TiSeries series = flat_series(60.0);
  const EnvConfig cfg = EnvConfig::for_scheme(RewardScheme::Shaped);

  SUBCASE("accurate band") {
    FogEnv env(&series, episode_at(40.0, 45.0, 30.0), cfg);  // tau = 10
    Rng rng(4);
    REQUIRE(env.reset(rng).has_value());
    const StepOutcome out = env.step(Action::Place);
    CHECK(out.done);
    CHECK(out.terminal == TerminalKind::Placed);
    CHECK(out.reward == 150.0);
    CHECK(out.tau_at_action_s == doctest::Approx(10.0));
  }
  SUBCASE("late region after waiting past the band") {
    FogEnv env(&series, episode_at(40.0, 45.0, 33.0), cfg);  // tau = 7
    Rng rng(4);
    REQUIRE(env.reset(rng).has_value());
    for (int i = 0; i < 8; ++i) env.step(Action::Wait);  // tau = 5
    const StepOutcome out = env.step(Action::Place);
    CHECK(out.reward == -60.0);
  }
  SUBCASE("early region with an extended horizon") {
    EnvConfig wide = cfg;
    wide.horizon_s = 20.0;
    FogEnv env(&series, episode_at(40.0, 45.0, 22.0), wide);  // tau = 18 > hi
    Rng rng(4);
    REQUIRE(env.reset(rng).has_value());
    const StepOutcome out = env.step(Action::Place);
    CHECK(out.reward == -40.0);
  }
}

TEST_CASE("episode return arithmetic") {
  std::vector<double> waits_then_place(10, 0.1);
  waits_then_place.push_back(150.0);
  CHECK(episode_return(waits_then_place) == doctest::Approx(151.0).epsilon(1e-9));
  CHECK(episode_return(std::vector<double>{}) == 0.0);
}

TEST_CASE("maximum achievable return matches brute-force policy enumeration") {
  const TiSeries series = flat_series(60.0);
  const EnvConfig cfg = EnvConfig::for_scheme(RewardScheme::Shaped);
  const FogEpisode ep = episode_at(40.0, 45.0, 32.0);  // deterministic tau0 = 8

  // Policies: wait k ticks then place, or wait forever.
  double best = -1e9;
  int best_k = -1;
  const int max_ticks = 40;
  for (int k = 0; k <= max_ticks; ++k) {
    FogEnv env(&series, ep, cfg);
    Rng rng(1);
    REQUIRE(env.reset(rng).has_value());
    double ret = 0.0;
    bool done = false;
    for (int i = 0; i < k && !done; ++i) {
      const StepOutcome out = env.step(Action::Wait);
      ret += out.reward;
      done = out.done;
    }
    if (!done) ret += env.step(Action::Place).reward;
    if (ret > best) {
      best = ret;
      best_k = k;
    }
  }
  // tau0 = 8: the band floor allows 8 waits (tau = 6.0 still accurate).
  CHECK(best_k == 8);
  CHECK(best == doctest::Approx(150.0 + 0.1 * 8).epsilon(1e-9));
}

TEST_CASE("evaluation extension runs past the onset") {
  const TiSeries series = flat_series(60.0);
  EnvConfig cfg = EnvConfig::for_scheme(RewardScheme::Shaped);
  cfg.allow_past_onset = true;
  const FogEpisode ep = episode_at(40.0, 42.0, 32.0);  // tau0 = 8, freeze 2 s

  SUBCASE("waiting runs to the freeze end and counts as undecided") {
    FogEnv env(&series, ep, cfg);
    Rng rng(6);
    REQUIRE(env.reset(rng).has_value());
    StepOutcome out;
    int steps = 0;
    do {
      out = env.step(Action::Wait);
      ++steps;
      REQUIRE(steps < 200);
    } while (!out.done);
    CHECK(out.terminal == TerminalKind::ReachedOnset);
    CHECK(out.reward == -200.0);
    CHECK(steps == 40);  // 8 s to onset + 2 s of freeze at 0.25 s ticks
  }
  SUBCASE("placing inside the freeze is a misplaced failure") {
    FogEnv env(&series, ep, cfg);
    Rng rng(6);
    REQUIRE(env.reset(rng).has_value());
    for (int i = 0; i < 33; ++i) env.step(Action::Wait);  // tau now negative
    CHECK(env.tau_s() < 0.0);
    const StepOutcome out = env.step(Action::Place);
    CHECK(out.done);
    CHECK(out.terminal == TerminalKind::Placed);
    CHECK(out.tau_at_action_s <= 0.0);
    CHECK(out.reward == -200.0);
  }
}

TEST_CASE("config validation") {
  EnvConfig cfg = EnvConfig::for_scheme(RewardScheme::Shaped);
  cfg.accurate_lo_s = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = EnvConfig::for_scheme(RewardScheme::Shaped);
  cfg.horizon_s = 10.0;  // below the accurate band top
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg = EnvConfig::for_scheme(RewardScheme::Shaped);
  cfg.step_s = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
}
