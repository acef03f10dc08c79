#include "fogrl/qnet.hpp"

#include <cmath>

#include "fogrl/errors.hpp"
#include "fogrl/io_util.hpp"

namespace fogrl {

namespace {
constexpr std::string_view kCheckpointMagic = "FOGRLQN1";
constexpr std::uint64_t kCheckpointVersion = 1;

std::vector<int> layer_dims(const MlpConfig& cfg) {
  std::vector<int> dims;
  dims.push_back(cfg.input_dim);
  for (int h : cfg.hidden) dims.push_back(h);
  dims.push_back(cfg.output_dim);
  return dims;
}
}  // namespace

bool MlpParams::all_finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

bool MlpParams::same_shape(const MlpParams& other) const {
  if (weights.size() != other.weights.size()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != other.weights[l].rows()) return false;
    if (weights[l].cols() != other.weights[l].cols()) return false;
  }
  return true;
}

bool MlpParams::equals(const MlpParams& other) const {
  if (!same_shape(other)) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l] != other.weights[l]) return false;
    if (biases[l] != other.biases[l]) return false;
  }
  return true;
}

MlpParams init_params(const MlpConfig& cfg, Rng& rng) {
  if (cfg.input_dim < 1 || cfg.output_dim < 1)
    throw ContractError("network: dimensions must be positive");
  const auto dims = layer_dims(cfg);
  MlpParams p;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return p;
}

Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& states) {
  if (states.rows() != params.input_dim())
    throw ContractError("forward: state dimension " + std::to_string(states.rows()) +
                        " does not match input layer " + std::to_string(params.input_dim()));
  Eigen::MatrixXd a = states;
  const std::size_t last = params.weights.size() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    Eigen::MatrixXd z = (params.weights[l] * a).colwise() + params.biases[l];
    a = (l == last) ? z : z.cwiseMax(0.0);
  }
  return a;
}

Eigen::VectorXd forward(const MlpParams& params, const Eigen::VectorXd& state) {
  return forward_batch(params, state);
}

int greedy_action(const Eigen::VectorXd& q) {
  int best = 0;
  for (Eigen::Index i = 1; i < q.size(); ++i)
    if (q(i) > q(best)) best = static_cast<int>(i);
  return best;
}

Eigen::VectorXd ddqn_targets(const QBatch& batch, const MlpParams& online,
                             const MlpParams& target, double gamma) {
  const Eigen::Index n = batch.size();
  if (n == 0) throw ContractError("ddqn_targets: empty batch");

  const Eigen::MatrixXd q_online_next = forward_batch(online, batch.next_states);
  const Eigen::MatrixXd q_target_next = forward_batch(target, batch.next_states);

  Eigen::VectorXd y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (batch.done[static_cast<std::size_t>(j)]) {
      y(j) = batch.rewards(j);
      continue;
    }
    const int a_star = greedy_action(q_online_next.col(j));
    y(j) = batch.rewards(j) + gamma * q_target_next(a_star, j);
  }
  return y;
}

double GradientSet::global_norm() const {
  double sq = 0.0;
  for (const auto& w : weights) sq += w.squaredNorm();
  for (const auto& b : biases) sq += b.squaredNorm();
  return std::sqrt(sq);
}

void GradientSet::scale(double s) {
  for (auto& w : weights) w *= s;
  for (auto& b : biases) b *= s;
}

LossResult weighted_td_loss(const MlpParams& params, const Eigen::MatrixXd& states,
                            const std::vector<int>& actions, const Eigen::VectorXd& targets,
                            const Eigen::VectorXd& is_weights) {
  const Eigen::Index n = states.cols();
  if (static_cast<Eigen::Index>(actions.size()) != n || targets.size() != n ||
      is_weights.size() != n)
    throw ContractError("weighted_td_loss: batch size mismatch");

  // Forward pass keeping activations for backprop.
  const std::size_t layers = params.weights.size();
  std::vector<Eigen::MatrixXd> act(layers + 1);
  act[0] = states;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = (params.weights[l] * act[l]).colwise() + params.biases[l];
    act[l + 1] = (l + 1 == layers) ? z : z.cwiseMax(0.0);
  }
  const Eigen::MatrixXd& q = act[layers];

  LossResult result;
  result.td_errors.resize(n);
  double loss = 0.0;
  Eigen::MatrixXd delta_out = Eigen::MatrixXd::Zero(q.rows(), n);
  const double inv_b = 1.0 / static_cast<double>(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const int a = actions[static_cast<std::size_t>(j)];
    if (a < 0 || a >= q.rows()) throw ContractError("weighted_td_loss: action out of range");
    const double d = targets(j) - q(a, j);
    result.td_errors(j) = d;
    loss += is_weights(j) * d * d;
    // dLoss/dQ(s_j, a_j); all other outputs untouched.
    delta_out(a, j) = -2.0 * inv_b * is_weights(j) * d;
  }
  result.loss = loss * inv_b;

  result.grads.weights.resize(layers);
  result.grads.biases.resize(layers);
  Eigen::MatrixXd grad = std::move(delta_out);
  for (std::size_t l = layers; l-- > 0;) {
    result.grads.weights[l] = grad * act[l].transpose();
    result.grads.biases[l] = grad.rowwise().sum();
    if (l > 0) {
      // ReLU mask: act[l] is the post-activation of layer l (hidden).
      grad = (params.weights[l].transpose() * grad)
                 .cwiseProduct((act[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return result;
}

double weighted_td_loss_value(const MlpParams& params, const Eigen::MatrixXd& states,
                              const std::vector<int>& actions, const Eigen::VectorXd& targets,
                              const Eigen::VectorXd& is_weights) {
  const Eigen::MatrixXd q = forward_batch(params, states);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < states.cols(); ++j) {
    const double d = targets(j) - q(actions[static_cast<std::size_t>(j)], j);
    loss += is_weights(j) * d * d;
  }
  return loss / static_cast<double>(states.cols());
}

AdamOptimizer::AdamOptimizer(const MlpParams& shape, const AdamConfig& cfg) : cfg_(cfg) {
  for (const auto& w : shape.weights) {
    m_.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    v_.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : shape.biases) {
    m_.biases.push_back(Eigen::VectorXd::Zero(b.size()));
    v_.biases.push_back(Eigen::VectorXd::Zero(b.size()));
  }
}

void AdamOptimizer::step(MlpParams& params, GradientSet grads) {
  if (cfg_.grad_clip_norm > 0.0) {
    const double norm = grads.global_norm();
    if (norm > cfg_.grad_clip_norm) grads.scale(cfg_.grad_clip_norm / norm);
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  auto update = [&](auto& theta, auto& m, auto& v, const auto& g) {
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    theta.array() -=
        cfg_.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.epsilon);
  };
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    update(params.weights[l], m_.weights[l], v_.weights[l], grads.weights[l]);
    update(params.biases[l], m_.biases[l], v_.biases[l], grads.biases[l]);
  }
}

Eigen::VectorXd train_step(MlpParams& online, AdamOptimizer& adam, const QBatch& batch,
                           const Eigen::VectorXd& targets, const Eigen::VectorXd& is_weights) {
  LossResult res = weighted_td_loss(online, batch.states, batch.actions, targets, is_weights);
  if (!std::isfinite(res.loss))
    throw NonFiniteLossError("train_step: non-finite loss " + std::to_string(res.loss) +
                             " (batch size " + std::to_string(batch.size()) + ")");
  for (const auto& w : res.grads.weights)
    if (!w.allFinite()) throw NonFiniteLossError("train_step: non-finite weight gradient");
  for (const auto& b : res.grads.biases)
    if (!b.allFinite()) throw NonFiniteLossError("train_step: non-finite bias gradient");
  adam.step(online, std::move(res.grads));
  return res.td_errors;
}

void save_checkpoint(const MlpParams& params, const std::filesystem::path& path) {
  std::string out(kCheckpointMagic);
  put_u64_le(out, kCheckpointVersion);
  put_u64_le(out, params.weights.size());
  for (const auto& w : params.weights) {
    put_u64_le(out, static_cast<std::uint64_t>(w.rows()));
    put_u64_le(out, static_cast<std::uint64_t>(w.cols()));
  }
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    const auto& w = params.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) put_f64_le(out, w(i, j));
    for (Eigen::Index i = 0; i < params.biases[l].size(); ++i)
      put_f64_le(out, params.biases[l](i));
  }
  write_text_file(path, out);
}

MlpParams load_checkpoint(const std::filesystem::path& path, const MlpConfig* expected) {
  const std::string data = read_text_file(path);
  ByteReader r(data);
  r.expect_magic(kCheckpointMagic);
  const std::uint64_t version = r.get_u64_le();
  if (version != kCheckpointVersion)
    throw ParseError("checkpoint: unsupported version " + std::to_string(version));
  const std::uint64_t layers = r.get_u64_le();
  std::vector<std::pair<std::uint64_t, std::uint64_t>> shapes;
  for (std::uint64_t l = 0; l < layers; ++l) {
    const std::uint64_t rows = r.get_u64_le();
    const std::uint64_t cols = r.get_u64_le();
    if (rows == 0 || cols == 0) throw ParseError("checkpoint: zero-sized layer");
    shapes.emplace_back(rows, cols);
    if (l > 0 && shapes[l].second != shapes[l - 1].first)
      throw ParseError("checkpoint: inconsistent layer shapes");
  }
  if (expected) {
    const auto dims = layer_dims(*expected);
    if (dims.size() != layers + 1)
      throw ParseError("checkpoint: layer count does not match expected architecture");
    for (std::uint64_t l = 0; l < layers; ++l) {
      if (shapes[l].second != static_cast<std::uint64_t>(dims[l]) ||
          shapes[l].first != static_cast<std::uint64_t>(dims[l + 1]))
        throw ParseError("checkpoint: shape mismatch at layer " + std::to_string(l));
    }
  }
  MlpParams p;
  for (auto [rows, cols] : shapes) {
    Eigen::MatrixXd w(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = r.get_f64_le();
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows));
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = r.get_f64_le();
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  if (!r.at_end()) throw ParseError("checkpoint: trailing bytes");
  return p;
}

}  // namespace fogrl
