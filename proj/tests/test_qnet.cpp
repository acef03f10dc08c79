#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "fogrl/errors.hpp"
#include "fogrl/io_util.hpp"
#include "fogrl/qnet.hpp"
#include "test_util.hpp"

using namespace fogrl;

namespace {

MlpParams zero_net(int input_dim, const std::vector<int>& hidden,
                   const Eigen::Vector2d& out_bias) {
  MlpConfig cfg;
  cfg.input_dim = input_dim;
  cfg.hidden = hidden;
  Rng rng(0);
  MlpParams p = init_params(cfg, rng);
  for (auto& w : p.weights) w.setZero();
  for (auto& b : p.biases) b.setZero();
  p.biases.back() = out_bias;
  return p;
}

QBatch single_batch(const Eigen::VectorXd& state, int action, double reward, bool done,
                    const Eigen::VectorXd& next_state) {
  QBatch b;
  b.states = state;
  b.actions = {action};
  b.rewards = Eigen::VectorXd::Constant(1, reward);
  b.next_states = next_state;
  b.done = {static_cast<char>(done)};
  return b;
}

}  // namespace

TEST_CASE("zero network passes output biases through") {
  const MlpParams p = zero_net(6, {8}, {0.3, -0.2});
  const Eigen::VectorXd q = forward(p, Eigen::VectorXd::Random(6));
  CHECK(q(0) == 0.3);
  CHECK(q(1) == -0.2);
}

TEST_CASE("relu gates the hidden contribution") {
  MlpConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden = {5};
  Rng rng(1);
  MlpParams p = init_params(cfg, rng);
  p.biases.back() << 0.7, -0.1;

  Eigen::VectorXd input(3);
  input << 1.0, 2.0, 3.0;
  // Force every first-layer pre-activation positive, then negate the layer:
  // all units die and only the output bias remains.
  p.weights[0] = p.weights[0].cwiseAbs();
  p.biases[0].setConstant(0.1);
  const Eigen::VectorXd active = forward(p, input);
  CHECK((active - p.biases.back()).norm() > 0.0);

  p.weights[0] *= -1.0;
  p.biases[0] *= -1.0;
  const Eigen::VectorXd gated = forward(p, input);
  CHECK(gated(0) == 0.7);
  CHECK(gated(1) == -0.1);
}

TEST_CASE("seeded init and forward are bit-deterministic") {
  MlpConfig cfg;
  Rng r1(99), r2(99);
  const MlpParams a = init_params(cfg, r1);
  const MlpParams b = init_params(cfg, r2);
  CHECK(a.equals(b));
  Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(6, -1.0, 1.0);
  const Eigen::VectorXd q1 = forward(a, s);
  const Eigen::VectorXd q2 = forward(b, s);
  CHECK(q1(0) == q2(0));
  CHECK(q1(1) == q2(1));

  CHECK_THROWS_AS(forward(a, Eigen::VectorXd::Zero(5)), ContractError);
}

TEST_CASE("double-DQN target arithmetic") {
  // Online prefers Place (bias 1 > 0); target values Place at 2.
  const MlpParams online = zero_net(6, {4}, {0.0, 1.0});
  const MlpParams target = zero_net(6, {4}, {5.0, 2.0});
  const Eigen::VectorXd s = Eigen::VectorXd::Zero(6);

  const QBatch live = single_batch(s, 1, 1.0, false, s);
  const Eigen::VectorXd y = ddqn_targets(live, online, target, 0.99);
  CHECK(y(0) == doctest::Approx(2.98).epsilon(1e-12));

  const QBatch terminal = single_batch(s, 0, -200.0, true, s);
  CHECK(ddqn_targets(terminal, online, target, 0.99)(0) == -200.0);
}

TEST_CASE("target network is evaluated at the online argmax") {
  // Hand-built two-state table. Online argmax differs from target argmax in
  // both states; y must read the target's value at the online pick.
  //   state A (positive input): online -> Place, target(A) = (5, 2) -> y uses 2
  //   state B (zero input):     online -> Wait,  target(B) = (5, 2) -> y uses 5
  MlpConfig cfg;
  cfg.input_dim = 1;
  cfg.hidden = {2};
  Rng rng(2);
  MlpParams online = init_params(cfg, rng);
  // One hidden unit passes the input through; output Place = x, Wait = 0.
  online.weights[0] << 1.0, 0.0;
  online.biases[0].setZero();
  online.weights[1] << 0.0, 0.0, 1.0, 0.0;
  online.biases[1].setZero();
  const MlpParams target = zero_net(1, {2}, {5.0, 2.0});

  QBatch batch;
  batch.states = Eigen::MatrixXd::Zero(1, 2);
  batch.next_states.resize(1, 2);
  batch.next_states << 3.0, 0.0;  // A: online q = (0,3) -> Place; B: (0,0) tie -> Wait
  batch.actions = {0, 0};
  batch.rewards = Eigen::VectorXd::Zero(2);
  batch.done = {0, 0};

  const Eigen::VectorXd y = ddqn_targets(batch, online, target, 1.0);
  CHECK(y(0) == doctest::Approx(2.0));  // target's Place value
  CHECK(y(1) == doctest::Approx(5.0));  // tie broke toward Wait
}

TEST_CASE("ddqn with identical networks reduces to the max-based target") {
  MlpConfig cfg;
  cfg.input_dim = 4;
  cfg.hidden = {8, 8};
  Rng rng(3);
  const MlpParams net = init_params(cfg, rng);

  QBatch batch;
  const int n = 16;
  batch.states = Eigen::MatrixXd::Random(4, n);
  batch.next_states = Eigen::MatrixXd::Random(4, n);
  batch.rewards = Eigen::VectorXd::Random(n);
  for (int j = 0; j < n; ++j) {
    batch.actions.push_back(j % 2);
    batch.done.push_back(j % 5 == 0);
  }
  const Eigen::VectorXd y = ddqn_targets(batch, net, net, 0.9);
  const Eigen::MatrixXd q_next = forward_batch(net, batch.next_states);
  for (int j = 0; j < n; ++j) {
    const double expect = batch.done[static_cast<std::size_t>(j)]
                              ? batch.rewards(j)
                              : batch.rewards(j) + 0.9 * q_next.col(j).maxCoeff();
    CHECK(y(j) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradients match central differences") {
  MlpConfig cfg;
  cfg.input_dim = 6;
  cfg.hidden = {8};
  Rng rng(4);
  MlpParams p = init_params(cfg, rng);

  const int n = 5;
  Eigen::MatrixXd states = Eigen::MatrixXd::Random(6, n);
  std::vector<int> actions;
  for (int j = 0; j < n; ++j) actions.push_back(j % 2);
  Eigen::VectorXd targets = 3.0 * Eigen::VectorXd::Random(n);
  Eigen::VectorXd weights(n);
  weights << 1.0, 0.25, 0.5, 1.0, 0.75;

  const LossResult res = weighted_td_loss(p, states, actions, targets, weights);

  const double h = 1e-5;
  double max_rel = 0.0;
  auto check_block = [&](Eigen::MatrixXd& theta, const Eigen::MatrixXd& grad) {
    for (Eigen::Index i = 0; i < theta.rows(); ++i) {
      for (Eigen::Index j = 0; j < theta.cols(); ++j) {
        const double save = theta(i, j);
        theta(i, j) = save + h;
        const double up = weighted_td_loss_value(p, states, actions, targets, weights);
        theta(i, j) = save - h;
        const double down = weighted_td_loss_value(p, states, actions, targets, weights);
        theta(i, j) = save;
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max({1e-8, std::abs(fd), std::abs(grad(i, j))});
        max_rel = std::max(max_rel, std::abs(fd - grad(i, j)) / denom);
      }
    }
  };
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    check_block(p.weights[l], res.grads.weights[l]);
    Eigen::MatrixXd bias = p.biases[l], bias_grad = res.grads.biases[l];
    check_block(bias, bias_grad);
    p.biases[l] = bias;
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("zero-weight elements contribute no gradient") {
  MlpConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden = {6};
  Rng rng(5);
  const MlpParams p = init_params(cfg, rng);

  Eigen::MatrixXd states(3, 2);
  states.col(0) << 0.1, -0.2, 0.3;
  states.col(1) << 5.0, 5.0, 5.0;
  Eigen::MatrixXd states_altered = states;
  states_altered.col(1) << -9.0, 4.0, 0.5;

  const std::vector<int> actions{0, 1};
  Eigen::VectorXd targets(2);
  targets << 1.0, -7.0;
  Eigen::VectorXd weights(2);
  weights << 0.8, 0.0;

  const LossResult a = weighted_td_loss(p, states, actions, targets, weights);
  const LossResult b = weighted_td_loss(p, states_altered, actions, targets, weights);
  for (std::size_t l = 0; l < a.grads.weights.size(); ++l) {
    CHECK(a.grads.weights[l] == b.grads.weights[l]);
    CHECK(a.grads.biases[l] == b.grads.biases[l]);
  }
}

TEST_CASE("uniform weights reduce to plain mse") {
  MlpConfig cfg;
  cfg.input_dim = 4;
  cfg.hidden = {8};
  Rng rng(6);
  const MlpParams p = init_params(cfg, rng);
  const int n = 7;
  Eigen::MatrixXd states = Eigen::MatrixXd::Random(4, n);
  std::vector<int> actions(n, 1);
  Eigen::VectorXd targets = Eigen::VectorXd::Random(n);

  const double loss =
      weighted_td_loss_value(p, states, actions, targets, Eigen::VectorXd::Ones(n));
  const Eigen::MatrixXd q = forward_batch(p, states);
  double mse = 0.0;
  for (int j = 0; j < n; ++j) mse += std::pow(targets(j) - q(1, j), 2);
  mse /= n;
  CHECK(loss == doctest::Approx(mse).epsilon(1e-12));
}

TEST_CASE("repeated steps on one transition drive the error down") {
  MlpConfig cfg;
  cfg.input_dim = 6;
  cfg.hidden = {16, 16};
  Rng rng(7);
  MlpParams p = init_params(cfg, rng);
  AdamConfig adam_cfg;
  AdamOptimizer adam(p, adam_cfg);

  Eigen::MatrixXd state = Eigen::VectorXd::LinSpaced(6, -0.5, 0.5);
  QBatch batch = single_batch(state, 1, 0.0, true, state);
  const Eigen::VectorXd target = Eigen::VectorXd::Constant(1, 12.0);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(1);

  std::vector<double> abs_td;
  for (int step = 0; step < 600; ++step) {
    const Eigen::VectorXd td = train_step(p, adam, batch, target, w);
    abs_td.push_back(std::abs(td(0)));
    CHECK(p.all_finite());
  }
  // Window means decrease monotonically after burn-in, down to near zero
  // (the optimizer may dither at tiny amplitude once converged).
  std::vector<double> window_means;
  for (std::size_t start = 100; start + 25 <= abs_td.size(); start += 25) {
    double acc = 0.0;
    for (std::size_t i = start; i < start + 25; ++i) acc += abs_td[i];
    window_means.push_back(acc / 25.0);
  }
  double best = window_means.front();
  for (std::size_t k = 1; k < window_means.size(); ++k) {
    if (window_means[k - 1] >= 0.05) CHECK(window_means[k] < window_means[k - 1]);
    best = std::min(best, window_means[k]);
  }
  CHECK(best < 0.05);
}

TEST_CASE("non-finite targets abort without touching parameters") {
  MlpConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden = {4};
  Rng rng(8);
  MlpParams p = init_params(cfg, rng);
  const MlpParams before = p;
  AdamOptimizer adam(p, {});

  Eigen::MatrixXd state = Eigen::VectorXd::Ones(3);
  QBatch batch = single_batch(state, 0, 0.0, true, state);
  const Eigen::VectorXd bad =
      Eigen::VectorXd::Constant(1, std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(train_step(p, adam, batch, bad, Eigen::VectorXd::Ones(1)),
                  NonFiniteLossError);
  CHECK(p.equals(before));
}

TEST_CASE("gradient clipping bounds the global norm") {
  GradientSet g;
  g.weights.push_back(Eigen::MatrixXd::Constant(3, 3, 100.0));
  g.biases.push_back(Eigen::VectorXd::Constant(3, 100.0));
  const double norm = g.global_norm();
  CHECK(norm == doctest::Approx(std::sqrt(12.0 * 100.0 * 100.0)));
  g.scale(10.0 / norm);
  CHECK(g.global_norm() == doctest::Approx(10.0));
}

TEST_CASE("target sync copies bitwise and is idempotent") {
  MlpConfig cfg;
  Rng r1(10), r2(11);
  MlpParams online = init_params(cfg, r1);
  MlpParams target = init_params(cfg, r2);
  CHECK_FALSE(online.equals(target));  // random init differs

  sync_target(online, target);
  CHECK(online.equals(target));
  const Eigen::VectorXd s = Eigen::VectorXd::Random(6);
  CHECK(forward(online, s) == forward(target, s));

  sync_target(online, target);
  CHECK(online.equals(target));
}

TEST_CASE("checkpoints round-trip and reject shape mismatches") {
  MlpConfig cfg;
  cfg.input_dim = 5;
  cfg.hidden = {7, 3};
  Rng rng(12);
  const MlpParams p = init_params(cfg, rng);

  const auto dir = test_dir("qnet_checkpoint");
  save_checkpoint(p, dir / "model.bin");
  const MlpParams back = load_checkpoint(dir / "model.bin", &cfg);
  CHECK(back.equals(p));

  MlpConfig wrong = cfg;
  wrong.hidden = {7, 4};
  CHECK_THROWS_AS(load_checkpoint(dir / "model.bin", &wrong), ParseError);
  MlpConfig fewer = cfg;
  fewer.hidden = {7};
  CHECK_THROWS_AS(load_checkpoint(dir / "model.bin", &fewer), ParseError);

  write_text_file(dir / "junk.bin", "NOTACKPT");
  CHECK_THROWS_AS(load_checkpoint(dir / "junk.bin"), ParseError);
}
