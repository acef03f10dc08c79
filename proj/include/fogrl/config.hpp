#pragma once

#include <filesystem>
#include <string>

#include "fogrl/dmd.hpp"
#include "fogrl/eval.hpp"
#include "fogrl/synthetic.hpp"
#include "fogrl/trainer.hpp"

namespace fogrl {

inline constexpr int kConfigVersion = 1;
// Environment override prefix; FOGRL_TRAIN__BATCH_SIZE=64 sets train.batch_size.
inline constexpr const char* kEnvPrefix = "FOGRL_";

enum class EvalMode { Loso, Dependent, Both };

// One document that configures the whole pipeline. Serialized as JSON with a
// schema version; unknown keys are rejected.
struct PipelineConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 42;

  std::string data_dir;  // raw recordings (ingest input)
  std::string out_dir = "out";

  bool synthetic_enabled = false;
  SyntheticSpec synth;

  TiConfig transform;

  FeatureMode feature_mode = FeatureMode::Stats;
  FeatureConfig features;
  StateNormMode state_norm = StateNormMode::Running;
  int norm_warmup = 1000;

  EnvConfig env;
  bool env_rewards_explicit = false;  // rewards key present in the source JSON

  PerConfig replay;
  int hidden_layers = 4;
  int hidden_units = 256;
  AdamConfig optimizer;

  long long total_episodes = 9000;
  double gamma = 0.99;
  std::size_t batch_size = 1024;
  EpsilonConfig epsilon;
  long long target_sync_period = 1000;
  EpisodeStrategy episode_strategy = EpisodeStrategy::Uniform;

  EvalMode eval_mode = EvalMode::Loso;
  double split_fraction = 0.8;

  // The TrainConfig this document implies.
  TrainConfig train_config() const;

  std::string to_json() const;                      // round-trips through parse
  static PipelineConfig from_json(const std::string& text);
  static PipelineConfig load(const std::filesystem::path& path, bool apply_env = true);

  // Apply FOGRL_SECTION__KEY environment overrides.
  void apply_env_overrides();
};

std::string to_string(EvalMode mode);
EvalMode eval_mode_from_string(const std::string& s);

}  // namespace fogrl
