#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "fogrl/rng.hpp"

namespace fogrl {

enum class Action : int { Wait = 0, Place = 1 };

struct Transition {
  Eigen::VectorXd state;
  Action action = Action::Wait;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool done = false;
};

// Binary-indexed sum/max tree over a power-of-two leaf count. The sum layer
// drives proportional sampling, the max layer keeps the "new transitions get
// the current max priority" rule O(log n) even across evictions.
class SumTree {
public:
  explicit SumTree(std::size_t min_leaves);

  std::size_t leaf_count() const { return leaves_; }
  double total() const { return sum_[1]; }
  double max_leaf() const { return max_[1]; }
  double leaf(std::size_t i) const { return sum_[leaves_ + i]; }

  void set(std::size_t leaf_index, double value);

  // Leaf whose cumulative-sum interval contains `mass` (in [0, total())).
  std::size_t find_prefix(double mass) const;

private:
  std::size_t leaves_;
  std::vector<double> sum_;  // 1-based heap layout, nodes [1, 2*leaves)
  std::vector<double> max_;
};

struct PerConfig {
  std::size_t capacity = 50000;
  double alpha = 0.6;
  double beta0 = 0.4;
  double beta_increment = 1e-5;
  double epsilon_priority = 0.01;
};

struct SampleBatch {
  std::vector<const Transition*> transitions;
  std::vector<std::size_t> tree_indices;  // slot indices for update_priorities
  std::vector<double> is_weights;         // max-normalized, in (0, 1]
};

// Proportional prioritized replay over a ring buffer. The priority exponent
// alpha is applied when priorities are written, so the tree stores p^alpha
// and sampling reads raw mass.
class PrioritizedReplay {
public:
  explicit PrioritizedReplay(const PerConfig& cfg);

  const PerConfig& config() const { return cfg_; }
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return cfg_.capacity; }

  // New transitions enter at the current max leaf priority (1.0 when empty);
  // at capacity the oldest slot is overwritten.
  void add(Transition t);

  // Stratified proportional sampling: total mass is split into `batch` equal
  // segments with one uniform draw each. IS weights are (N*P(i))^-beta
  // normalized by the batch max.
  SampleBatch sample(std::size_t batch, double beta, Rng& rng) const;

  // priority <- (|td_error| + epsilon_priority)^alpha
  void update_priorities(const std::vector<std::size_t>& indices,
                         const std::vector<double>& td_errors);

  double beta_schedule(long long n_steps) const;

  const Transition& transition(std::size_t slot) const { return storage_[slot]; }

  // Versioned little-endian snapshot for training resumption.
  void save_snapshot(const std::filesystem::path& path) const;
  static PrioritizedReplay load_snapshot(const std::filesystem::path& path);

private:
  PerConfig cfg_;
  SumTree tree_;
  std::vector<Transition> storage_;
  std::size_t next_slot_ = 0;
  std::size_t size_ = 0;
};

}  // namespace fogrl
