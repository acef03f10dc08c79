#include "fogrl/replay.hpp"

#include <algorithm>
#include <cmath>

#include "fogrl/errors.hpp"
#include "fogrl/io_util.hpp"

namespace fogrl {

namespace {
constexpr std::string_view kSnapshotMagic = "FOGRLRB1";
constexpr std::uint64_t kSnapshotVersion = 1;
}  // namespace

SumTree::SumTree(std::size_t min_leaves) {
  leaves_ = 1;
  while (leaves_ < min_leaves) leaves_ *= 2;
  sum_.assign(2 * leaves_, 0.0);
  max_.assign(2 * leaves_, 0.0);
}

void SumTree::set(std::size_t leaf_index, double value) {
  if (leaf_index >= leaves_) throw ContractError("sum tree: leaf index out of range");
  if (!(value >= 0.0)) throw ContractError("sum tree: priorities must be non-negative");
  std::size_t i = leaves_ + leaf_index;
  sum_[i] = value;
  max_[i] = value;
  for (i /= 2; i >= 1; i /= 2) {
    sum_[i] = sum_[2 * i] + sum_[2 * i + 1];
    max_[i] = std::max(max_[2 * i], max_[2 * i + 1]);
    if (i == 1) break;
  }
}

std::size_t SumTree::find_prefix(double mass) const {
  std::size_t i = 1;
  while (i < leaves_) {
    const double left = sum_[2 * i];
    if (mass < left) {
      i = 2 * i;
    } else {
      mass -= left;
      i = 2 * i + 1;
    }
  }
  return i - leaves_;
}

PrioritizedReplay::PrioritizedReplay(const PerConfig& cfg)
    : cfg_(cfg), tree_(cfg.capacity) {
  if (cfg.capacity == 0) throw ContractError("replay: capacity must be positive");
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0) throw ContractError("replay: alpha must be in [0,1]");
  if (!(cfg.beta0 > 0.0 && cfg.beta0 <= 1.0))
    throw ContractError("replay: beta0 must be in (0,1]");
  if (cfg.epsilon_priority <= 0.0)
    throw ContractError("replay: priority floor must be positive");
  storage_.resize(cfg.capacity);
}

void PrioritizedReplay::add(Transition t) {
  const double priority = size_ == 0 ? 1.0 : tree_.max_leaf();
  storage_[next_slot_] = std::move(t);
  tree_.set(next_slot_, priority);
  next_slot_ = (next_slot_ + 1) % cfg_.capacity;
  size_ = std::min(size_ + 1, cfg_.capacity);
}

SampleBatch PrioritizedReplay::sample(std::size_t batch, double beta, Rng& rng) const {
  if (size_ < batch)
    throw ContractError("replay: insufficient samples (" + std::to_string(size_) + " < " +
                        std::to_string(batch) + ")");
  const double total = tree_.total();
  if (!(total > 0.0)) throw ContractError("replay: zero total priority mass");

  SampleBatch out;
  out.transitions.reserve(batch);
  out.tree_indices.reserve(batch);
  out.is_weights.reserve(batch);

  const double segment = total / static_cast<double>(batch);
  const double n = static_cast<double>(size_);
  double max_weight = 0.0;
  for (std::size_t j = 0; j < batch; ++j) {
    const double mass = (static_cast<double>(j) + rng.uniform()) * segment;
    std::size_t slot = tree_.find_prefix(std::min(mass, std::nextafter(total, 0.0)));
    const double p = tree_.leaf(slot) / total;
    const double w = std::pow(n * p, -beta);
    out.transitions.push_back(&storage_[slot]);
    out.tree_indices.push_back(slot);
    out.is_weights.push_back(w);
    max_weight = std::max(max_weight, w);
  }
  for (double& w : out.is_weights) w /= max_weight;
  return out;
}

void PrioritizedReplay::update_priorities(const std::vector<std::size_t>& indices,
                                          const std::vector<double>& td_errors) {
  if (indices.size() != td_errors.size())
    throw ContractError("replay: index/error count mismatch");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size_) throw ContractError("replay: priority index out of range");
    const double p = std::pow(std::abs(td_errors[i]) + cfg_.epsilon_priority, cfg_.alpha);
    tree_.set(indices[i], p);
  }
}

double PrioritizedReplay::beta_schedule(long long n_steps) const {
  return std::min(1.0, cfg_.beta0 + cfg_.beta_increment * static_cast<double>(n_steps));
}

void PrioritizedReplay::save_snapshot(const std::filesystem::path& path) const {
  std::string out(kSnapshotMagic);
  put_u64_le(out, kSnapshotVersion);
  put_f64_le(out, cfg_.alpha);
  put_f64_le(out, cfg_.beta0);
  put_f64_le(out, cfg_.beta_increment);
  put_f64_le(out, cfg_.epsilon_priority);
  put_u64_le(out, cfg_.capacity);
  put_u64_le(out, size_);
  put_u64_le(out, next_slot_);
  const std::uint64_t dim = size_ ? static_cast<std::uint64_t>(storage_[0].state.size()) : 0;
  put_u64_le(out, dim);
  for (std::size_t i = 0; i < size_; ++i) {
    const Transition& t = storage_[i];
    for (Eigen::Index k = 0; k < t.state.size(); ++k) put_f64_le(out, t.state(k));
    put_u64_le(out, static_cast<std::uint64_t>(t.action));
    put_f64_le(out, t.reward);
    for (Eigen::Index k = 0; k < t.next_state.size(); ++k) put_f64_le(out, t.next_state(k));
    put_u64_le(out, t.done ? 1 : 0);
    put_f64_le(out, tree_.leaf(i));
  }
  write_text_file(path, out);
}

PrioritizedReplay PrioritizedReplay::load_snapshot(const std::filesystem::path& path) {
  const std::string data = read_text_file(path);
  ByteReader r(data);
  r.expect_magic(kSnapshotMagic);
  const std::uint64_t version = r.get_u64_le();
  if (version != kSnapshotVersion)
    throw ParseError("replay snapshot: unsupported version " + std::to_string(version));
  PerConfig cfg;
  cfg.alpha = r.get_f64_le();
  cfg.beta0 = r.get_f64_le();
  cfg.beta_increment = r.get_f64_le();
  cfg.epsilon_priority = r.get_f64_le();
  cfg.capacity = r.get_u64_le();
  PrioritizedReplay buf(cfg);
  const std::uint64_t size = r.get_u64_le();
  const std::uint64_t next_slot = r.get_u64_le();
  const std::uint64_t dim = r.get_u64_le();
  for (std::uint64_t i = 0; i < size; ++i) {
    Transition t;
    t.state.resize(static_cast<Eigen::Index>(dim));
    for (std::uint64_t k = 0; k < dim; ++k) t.state(static_cast<Eigen::Index>(k)) = r.get_f64_le();
    t.action = static_cast<Action>(r.get_u64_le());
    t.reward = r.get_f64_le();
    t.next_state.resize(static_cast<Eigen::Index>(dim));
    for (std::uint64_t k = 0; k < dim; ++k)
      t.next_state(static_cast<Eigen::Index>(k)) = r.get_f64_le();
    t.done = r.get_u64_le() != 0;
    const double priority = r.get_f64_le();
    buf.storage_[i] = std::move(t);
    buf.tree_.set(i, priority);
  }
  buf.size_ = size;
  buf.next_slot_ = next_slot % cfg.capacity;
  return buf;
}

}  // namespace fogrl
