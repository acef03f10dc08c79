#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fogrl/daphnet.hpp"
#include "fogrl/dmd.hpp"
#include "fogrl/features.hpp"
#include "fogrl/replay.hpp"
#include "fogrl/rng.hpp"

namespace fogrl {

enum class RewardScheme { Shaped, SimpleAppendixB };
enum class RewardGrade { Flat, Linear };

struct RewardTable {
  double accurate = 150.0;
  double early = -40.0;    // placed with more than accurate_hi_s remaining
  double late = -60.0;     // placed with less than accurate_lo_s remaining
  double failure = -200.0; // onset reached without a placement
  double wait_bonus = 0.1; // per wait action
};

struct EnvConfig {
  double horizon_s = 15.0;       // episode start offset before onset
  double accurate_lo_s = 6.0;
  double accurate_hi_s = 15.0;
  RewardTable rewards;
  RewardScheme scheme = RewardScheme::Shaped;
  RewardGrade reward_grade = RewardGrade::Flat;
  double step_s = 0.25;          // decision tick; matches the signal stride
  bool allow_past_onset = false; // evaluation extension: run into the episode

  // Scheme defaults: the simple variant pays +100 for accurate placements and
  // no wait bonus; penalties are unchanged.
  static EnvConfig for_scheme(RewardScheme scheme);

  void validate() const;
};

// Reward for placing the flag with tau_s seconds left to onset. Pure in
// (tau, config); both accurate-band boundaries are inclusive.
double place_reward(double tau_s, const EnvConfig& cfg);

enum class TerminalKind { None, Placed, ReachedOnset };

struct StepOutcome {
  Eigen::VectorXd next_state;
  double reward = 0.0;
  bool done = false;
  double tau_at_action_s = 0.0;
  TerminalKind terminal = TerminalKind::None;
};

// One pre-FOG segment as an episodic decision process. The agent observes
// the feature vector of the trailing signal window and either waits (the
// clock advances one tick) or places the prediction flag (terminal).
// Reaching the onset without a placement is the failure terminal.
//
// With allow_past_onset the episode instead ends at the freeze end, waits
// keep accruing, and placements at or after the onset are misplaced; this is
// how evaluation observes misplaced and undecided outcomes.
class FogEnv {
public:
  FogEnv(const TiSeries* series, FogEpisode episode, EnvConfig cfg,
         FeatureMode mode = FeatureMode::Stats, FeatureConfig fcfg = {});

  // Start offset is uniform in [accurate_lo, horizon]; episodes with less
  // available history than the horizon start at their maximum offset instead.
  // Returns nullopt when the episode has no usable pre-onset history.
  std::optional<Eigen::VectorXd> reset(Rng& rng);

  StepOutcome step(Action action);

  bool done() const { return done_; }
  bool active() const { return active_; }
  double tau_s() const;
  std::int64_t now_ms() const { return now_ms_; }
  const FogEpisode& episode() const { return episode_; }
  const EnvConfig& config() const { return cfg_; }

  // Largest usable start offset for this episode, bounded by signal coverage.
  double max_start_offset_s() const;
  bool short_history() const { return max_start_offset_s() < cfg_.horizon_s; }

  Eigen::VectorXd state_at(std::int64_t t_ms) const;

private:
  const TiSeries* series_;
  FogEpisode episode_;
  EnvConfig cfg_;
  FeatureMode mode_;
  FeatureConfig fcfg_;
  std::int64_t now_ms_ = 0;
  bool done_ = true;
  bool active_ = false;
};

double episode_return(std::span<const double> rewards);
double episode_return(std::span<const StepOutcome> trace);

}  // namespace fogrl
