#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "fogrl/rng.hpp"

namespace fogrl {

struct MlpConfig {
  int input_dim = 6;
  std::vector<int> hidden = {256, 256, 256, 256};
  int output_dim = 2;  // Q(s, wait), Q(s, place)
};

// Dense parameters of one network (online or target). Weights are out x in.
struct MlpParams {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  int input_dim() const { return static_cast<int>(weights.front().cols()); }
  int output_dim() const { return static_cast<int>(weights.back().rows()); }
  bool all_finite() const;
  bool same_shape(const MlpParams& other) const;
  bool equals(const MlpParams& other) const;
};

// He-uniform weights (ReLU fan-in), zero biases.
MlpParams init_params(const MlpConfig& cfg, Rng& rng);

// Affine + ReLU stack, linear output layer.
Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& state);
// Column-per-sample batch variant.
Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& states);

// Argmax over Q with ties broken toward Wait (index 0).
int greedy_action(const Eigen::VectorXd& q);

struct QBatch {
  Eigen::MatrixXd states;       // input_dim x B
  std::vector<int> actions;     // taken action per sample
  Eigen::VectorXd rewards;
  Eigen::MatrixXd next_states;  // input_dim x B
  std::vector<char> done;

  Eigen::Index size() const { return states.cols(); }
};

// Double-DQN bootstrap targets: the online network selects the next action,
// the target network evaluates it; terminal entries are the bare reward.
Eigen::VectorXd ddqn_targets(const QBatch& batch, const MlpParams& online,
                             const MlpParams& target, double gamma);

struct GradientSet {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  double global_norm() const;
  void scale(double s);
};

struct LossResult {
  double loss = 0.0;
  Eigen::VectorXd td_errors;  // signed, y - Q(s, a)
  GradientSet grads;
};

// IS-weighted MSE over the selected-action outputs:
//   loss = (1/B) sum_j w_j * (y_j - Q(s_j, a_j))^2
// Non-selected outputs receive zero gradient.
LossResult weighted_td_loss(const MlpParams& params, const Eigen::MatrixXd& states,
                            const std::vector<int>& actions, const Eigen::VectorXd& targets,
                            const Eigen::VectorXd& is_weights);
// Loss-only path for finite-difference checks.
double weighted_td_loss_value(const MlpParams& params, const Eigen::MatrixXd& states,
                              const std::vector<int>& actions, const Eigen::VectorXd& targets,
                              const Eigen::VectorXd& is_weights);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double grad_clip_norm = 10.0;  // global-norm clip; <= 0 disables
};

class AdamOptimizer {
public:
  AdamOptimizer(const MlpParams& shape, const AdamConfig& cfg);
  // Clips, then applies one Adam update in place.
  void step(MlpParams& params, GradientSet grads);
  long long steps_taken() const { return t_; }

private:
  AdamConfig cfg_;
  long long t_ = 0;
  GradientSet m_;
  GradientSet v_;
};

// One optimization step on a batch; returns the signed TD errors for the
// replay priority refresh. Throws NonFiniteLossError (leaving the parameters
// untouched) if the loss or any gradient is non-finite.
Eigen::VectorXd train_step(MlpParams& online, AdamOptimizer& adam, const QBatch& batch,
                           const Eigen::VectorXd& targets, const Eigen::VectorXd& is_weights);

inline void sync_target(const MlpParams& online, MlpParams& target) { target = online; }

// Checkpoint: versioned header, layer shapes, parameters as little-endian
// 64-bit reals. Loading validates shapes against the stored header and, when
// given, against an expected architecture.
void save_checkpoint(const MlpParams& params, const std::filesystem::path& path);
MlpParams load_checkpoint(const std::filesystem::path& path,
                          const MlpConfig* expected = nullptr);

}  // namespace fogrl
