#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "fogrl/env.hpp"
#include "fogrl/features.hpp"
#include "fogrl/qnet.hpp"
#include "fogrl/replay.hpp"
#include "fogrl/rng.hpp"

namespace fogrl {

enum class EpisodeStrategy { Uniform, Balanced };

struct EpsilonConfig {
  double start = 1.0;
  double min = 0.01;
  double decay = 0.9995;  // multiplicative, per episode
};

struct TrainConfig {
  long long total_episodes = 9000;
  double gamma = 0.99;
  std::size_t batch_size = 1024;
  EpsilonConfig epsilon;
  long long target_sync_period = 1000;  // environment steps between hard syncs
  std::uint64_t seed = 0;
  EpisodeStrategy episode_strategy = EpisodeStrategy::Uniform;

  MlpConfig network;
  AdamConfig optimizer;
  PerConfig replay;
  EnvConfig env;
  FeatureMode feature_mode = FeatureMode::Stats;
  FeatureConfig features;
  StateNormMode state_norm = StateNormMode::Running;
  int norm_warmup = 1000;

  void validate() const;
  // Network input dimension implied by the feature mode.
  int state_dim() const { return feature_dim(feature_mode, features); }
};

struct CurvePoint {
  long long episode = 0;  // 1-based, contiguous
  double total_return = 0.0;
  double epsilon = 0.0;   // value after this episode's decay
  double mean_abs_td = 0.0;
  double best_avg_return = 0.0;  // best trailing-100 mean so far; non-decreasing
};

using LearningCurve = std::vector<CurvePoint>;

// One trainable pre-FOG segment: the episode plus the signal series it lives in.
struct EpisodeRef {
  int id = 0;
  const TiSeries* series = nullptr;
  FogEpisode episode;
};

struct TrainResult {
  MlpParams params;
  LearningCurve curve;
  std::vector<long long> coverage;  // training visits per pool entry
  StateNormalizer normalizer;
  long long total_steps = 0;
};

// Hook for tests and diagnostics; called once per environment step.
struct TrainStepEvent {
  long long n_steps = 0;
  bool learned = false;
  bool synced = false;
  const MlpParams* online = nullptr;
  const MlpParams* target = nullptr;
  const Eigen::VectorXd* td_errors = nullptr;          // when learned
  const std::vector<std::size_t>* sampled_slots = nullptr;
  const PrioritizedReplay* buffer = nullptr;
};
using StepCallback = std::function<void(const TrainStepEvent&)>;

// Epsilon-greedy over the normalized state; ties break toward Wait.
Action select_action(const MlpParams& params, const Eigen::VectorXd& state, double epsilon,
                     Rng& rng);

// Uniform: every pool entry equally likely. Balanced: inverse-visit-count
// weights 1/(1+visits), the remedy for the uneven per-segment training
// coverage; off by default.
std::size_t sample_episode_index(const std::vector<long long>& visits,
                                 EpisodeStrategy strategy, Rng& rng);

// The training loop: epsilon-greedy interaction, prioritized replay, DDQN
// updates with importance-sampling weights, periodic hard target syncs, and
// per-episode epsilon decay. Deterministic for a fixed seed and pool order.
TrainResult run_training(const TrainConfig& cfg, const std::vector<EpisodeRef>& pool,
                         const StepCallback& on_step = {});

std::string write_learning_curve_csv(const LearningCurve& curve);
std::string write_coverage_csv(const std::vector<EpisodeRef>& pool,
                               const std::vector<long long>& coverage);

}  // namespace fogrl
