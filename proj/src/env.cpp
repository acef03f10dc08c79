#include "fogrl/env.hpp"

#include <algorithm>
#include <cmath>

#include "fogrl/errors.hpp"

namespace fogrl {

EnvConfig EnvConfig::for_scheme(RewardScheme scheme) {
  EnvConfig cfg;
  cfg.scheme = scheme;
  if (scheme == RewardScheme::SimpleAppendixB) {
    cfg.rewards.accurate = 100.0;
    cfg.rewards.wait_bonus = 0.0;
  }
  return cfg;
}

void EnvConfig::validate() const {
  if (!(accurate_lo_s > 0.0 && accurate_lo_s < accurate_hi_s))
    throw ContractError("env: need 0 < accurate_lo < accurate_hi");
  if (scheme == RewardScheme::Shaped && accurate_hi_s > horizon_s)
    throw ContractError("env: accurate_hi must not exceed the horizon");
  if (horizon_s < accurate_lo_s)
    throw ContractError("env: horizon must be at least accurate_lo");
  if (step_s <= 0.0) throw ContractError("env: step must be positive");
}

double place_reward(double tau_s, const EnvConfig& cfg) {
  if (tau_s > cfg.accurate_hi_s) return cfg.rewards.early;
  if (tau_s < cfg.accurate_lo_s) return cfg.rewards.late;
  if (cfg.reward_grade == RewardGrade::Linear) {
    // Full bonus at the lower edge (the optimal target), zero at the top.
    const double span = cfg.accurate_hi_s - cfg.accurate_lo_s;
    return cfg.rewards.accurate * (cfg.accurate_hi_s - tau_s) / span;
  }
  return cfg.rewards.accurate;
}

FogEnv::FogEnv(const TiSeries* series, FogEpisode episode, EnvConfig cfg, FeatureMode mode,
               FeatureConfig fcfg)
    : series_(series), episode_(episode), cfg_(cfg), mode_(mode), fcfg_(fcfg) {
  if (!series_) throw ContractError("env: null signal series");
  cfg_.validate();
}

namespace {
// Window of series values with t in (now - window, now].
std::span<const TiValue> window_ending_at(const TiSeries& series, std::int64_t now_ms,
                                          double window_s) {
  const std::int64_t lo = now_ms - static_cast<std::int64_t>(std::llround(window_s * 1000.0));
  auto begin = std::upper_bound(series.begin(), series.end(), lo,
                                [](std::int64_t t, const TiValue& v) { return t < v.t_ms; });
  auto end = std::upper_bound(series.begin(), series.end(), now_ms,
                              [](std::int64_t t, const TiValue& v) { return t < v.t_ms; });
  if (begin >= end) return {};
  return {&*begin, static_cast<std::size_t>(end - begin)};
}
}  // namespace

Eigen::VectorXd FogEnv::state_at(std::int64_t t_ms) const {
  const auto window = window_ending_at(*series_, t_ms, fcfg_.window_s);
  if (window.empty()) throw ContractError("env: no signal coverage at requested time");
  if (mode_ == FeatureMode::Stats) {
    // Past-onset extraction only happens in the evaluation extension; the
    // remaining-time feature is clamped at zero there.
    const std::int64_t now = std::min(t_ms, episode_.onset_ms);
    return extract_state(window, episode_.onset_ms, now, fcfg_).as_vector();
  }
  const auto raw = extract_state_ablated(window, fcfg_);
  Eigen::VectorXd v(static_cast<Eigen::Index>(raw.size()));
  for (std::size_t i = 0; i < raw.size(); ++i) v(static_cast<Eigen::Index>(i)) = raw[i];
  return v;
}

double FogEnv::max_start_offset_s() const {
  // Earliest usable tick: the first series sample inside the episode's
  // contiguous pre-onset history.
  auto it = std::lower_bound(series_->begin(), series_->end(), episode_.pre_window_start_ms,
                             [](const TiValue& v, std::int64_t t) { return v.t_ms < t; });
  if (it == series_->end() || it->t_ms > episode_.onset_ms) return 0.0;
  return static_cast<double>(episode_.onset_ms - it->t_ms) / 1000.0;
}

std::optional<Eigen::VectorXd> FogEnv::reset(Rng& rng) {
  const double max_offset = max_start_offset_s();
  if (max_offset <= 0.0) {
    done_ = true;
    active_ = false;
    return std::nullopt;
  }
  const double offset = max_offset < cfg_.horizon_s
                            ? max_offset
                            : rng.uniform(cfg_.accurate_lo_s, cfg_.horizon_s);
  now_ms_ = episode_.onset_ms - static_cast<std::int64_t>(std::llround(offset * 1000.0));
  done_ = false;
  active_ = true;
  return state_at(now_ms_);
}

double FogEnv::tau_s() const {
  return static_cast<double>(episode_.onset_ms - now_ms_) / 1000.0;
}

StepOutcome FogEnv::step(Action action) {
  if (!active_ || done_) throw ContractError("env: step after episode end");

  StepOutcome out;
  out.tau_at_action_s = tau_s();

  if (action == Action::Place) {
    done_ = true;
    out.done = true;
    out.terminal = TerminalKind::Placed;
    // At or past the onset (reachable only with allow_past_onset) the
    // placement is misplaced and scores as a failure.
    out.reward = out.tau_at_action_s <= 0.0 ? cfg_.rewards.failure
                                            : place_reward(out.tau_at_action_s, cfg_);
    out.next_state = state_at(now_ms_);
    return out;
  }

  const std::int64_t step_ms = static_cast<std::int64_t>(std::llround(cfg_.step_s * 1000.0));
  const std::int64_t next = now_ms_ + step_ms;
  const std::int64_t terminal_edge = cfg_.allow_past_onset ? episode_.end_ms : episode_.onset_ms;

  if (next >= terminal_edge) {
    now_ms_ = std::min(next, terminal_edge);
    done_ = true;
    out.done = true;
    out.terminal = TerminalKind::ReachedOnset;
    out.reward = cfg_.rewards.failure;
    out.next_state = state_at(now_ms_);
    return out;
  }

  now_ms_ = next;
  out.reward = cfg_.rewards.wait_bonus;
  out.done = false;
  out.terminal = TerminalKind::None;
  out.next_state = state_at(now_ms_);
  return out;
}

double episode_return(std::span<const double> rewards) {
  double sum = 0.0;
  for (double r : rewards) sum += r;
  return sum;
}

double episode_return(std::span<const StepOutcome> trace) {
  double sum = 0.0;
  for (const StepOutcome& o : trace) sum += o.reward;
  return sum;
}

}  // namespace fogrl
