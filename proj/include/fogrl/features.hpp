#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "fogrl/dmd.hpp"

namespace fogrl {

// The six-parameter agent observation computed from a 10-second signal window
// plus the time left to the episode onset.
struct StateFeatures {
  double tau_s = 0.0;    // remaining time to onset
  double mean = 0.0;
  double stddev = 0.0;   // population standard deviation
  double slope = 0.0;    // least-squares trend, signal units per second
  double spike = 0.0;    // |max - mean|
  double zscore = 0.0;   // (max - mean) / sigma_f

  Eigen::VectorXd as_vector() const;
};

enum class ZscoreSigma { Window, Trial };

struct FeatureConfig {
  double window_s = 10.0;
  ZscoreSigma zscore_sigma = ZscoreSigma::Window;
  double trial_sigma = 0.0;  // used when zscore_sigma == Trial
  int raw_taps = 6;          // sample count in raw-window (ablated) mode
};

// sigma floor for the z-score denominator.
inline constexpr double kSigmaFloor = 1e-8;

// Statistics over a signal window ending at now_ms, with the remaining time
// to onset. Throws ContractError on an empty window or now past onset;
// a single-sample window degenerates to sigma = 0, slope = 0.
StateFeatures extract_state(std::span<const TiValue> window, std::int64_t onset_ms,
                            std::int64_t now_ms, const FeatureConfig& cfg = {});

// Raw-window variant: the last `raw_taps` samples of the window, min-max
// scaled over the whole window (constant windows map to 0.5). Remaining time
// is deliberately excluded. Windows shorter than raw_taps left-pad with the
// earliest sample's scaled value.
std::vector<double> extract_state_ablated(std::span<const TiValue> window,
                                          const FeatureConfig& cfg = {});

enum class FeatureMode { Stats, RawWindow };

inline int feature_dim(FeatureMode mode, const FeatureConfig& cfg) {
  return mode == FeatureMode::Stats ? 6 : cfg.raw_taps;
}

enum class StateNormMode { None, Running };

// Input scaling in front of the network: the remaining-time component is
// divided by the environment horizon, the rest go through a running
// z-normalizer that freezes after a warm-up period. Owned by the trainer and
// updated single-threaded.
class StateNormalizer {
public:
  StateNormalizer() = default;
  StateNormalizer(StateNormMode mode, int dim, int tau_index, double horizon_s,
                  int warmup_observations = 1000);

  // Feed a raw state; ignored once frozen.
  void observe(const Eigen::VectorXd& raw);
  Eigen::VectorXd apply(const Eigen::VectorXd& raw) const;

  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }

private:
  StateNormMode mode_ = StateNormMode::None;
  int tau_index_ = -1;
  double horizon_s_ = 1.0;
  int warmup_ = 0;
  long long count_ = 0;
  bool frozen_ = false;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;  // Welford sum of squared deviations
};

double population_stddev(std::span<const double> values);
double population_variance(std::span<const double> values);

}  // namespace fogrl
