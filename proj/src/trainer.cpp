#include "fogrl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "fogrl/errors.hpp"
#include "fogrl/io_util.hpp"

namespace fogrl {

void TrainConfig::validate() const {
  if (total_episodes < 1) throw ContractError("train: total_episodes must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ContractError("train: gamma must be in (0,1]");
  if (batch_size < 1) throw ContractError("train: batch_size must be positive");
  if (!(epsilon.min >= 0.0 && epsilon.min <= epsilon.start && epsilon.start <= 1.0))
    throw ContractError("train: need 0 <= epsilon_min <= epsilon_start <= 1");
  if (target_sync_period < 1) throw ContractError("train: sync period must be positive");
  if (batch_size > replay.capacity)
    throw ContractError("train: batch_size exceeds replay capacity");
  env.validate();
}

Action select_action(const MlpParams& params, const Eigen::VectorXd& state, double epsilon,
                     Rng& rng) {
  if (rng.uniform() < epsilon)
    return static_cast<Action>(rng.uniform_index(2));
  return static_cast<Action>(greedy_action(forward(params, state)));
}

std::size_t sample_episode_index(const std::vector<long long>& visits,
                                 EpisodeStrategy strategy, Rng& rng) {
  if (visits.empty()) throw ContractError("episode sampler: empty pool");
  if (strategy == EpisodeStrategy::Uniform)
    return static_cast<std::size_t>(rng.uniform_index(visits.size()));

  double total = 0.0;
  for (long long v : visits) total += 1.0 / (1.0 + static_cast<double>(v));
  double mass = rng.uniform() * total;
  for (std::size_t i = 0; i < visits.size(); ++i) {
    const double w = 1.0 / (1.0 + static_cast<double>(visits[i]));
    if (mass < w) return i;
    mass -= w;
  }
  return visits.size() - 1;
}

TrainResult run_training(const TrainConfig& cfg, const std::vector<EpisodeRef>& pool,
                         const StepCallback& on_step) {
  cfg.validate();
  if (pool.empty()) throw ContractError("run_training: empty episode pool");
  if (cfg.network.input_dim != cfg.state_dim())
    throw ContractError("run_training: network input dim does not match feature mode");

  // Keep only episodes with usable pre-onset history so every reset succeeds.
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    FogEnv probe(pool[i].series, pool[i].episode, cfg.env, cfg.feature_mode, cfg.features);
    if (probe.max_start_offset_s() > 0.0) usable.push_back(i);
  }
  if (usable.empty()) throw ContractError("run_training: no episode has usable history");

  Rng rng(cfg.seed);
  MlpParams online = init_params(cfg.network, rng);
  MlpParams target = online;
  AdamOptimizer adam(online, cfg.optimizer);
  PrioritizedReplay buffer(cfg.replay);

  const int tau_index = cfg.feature_mode == FeatureMode::Stats ? 0 : -1;
  StateNormalizer normalizer(cfg.state_norm, cfg.state_dim(), tau_index, cfg.env.horizon_s,
                             cfg.norm_warmup);

  TrainResult result;
  result.coverage.assign(pool.size(), 0);
  result.curve.reserve(static_cast<std::size_t>(cfg.total_episodes));

  std::deque<double> trailing;  // last 100 returns, for the best-average series
  double trailing_sum = 0.0;
  double best_avg = -std::numeric_limits<double>::infinity();
  double epsilon = cfg.epsilon.start;
  long long n_steps = 0;

  for (long long episode = 1; episode <= cfg.total_episodes; ++episode) {
    std::vector<long long> usable_visits(usable.size());
    for (std::size_t k = 0; k < usable.size(); ++k)
      usable_visits[k] = result.coverage[usable[k]];
    const std::size_t pick = usable[sample_episode_index(usable_visits, cfg.episode_strategy, rng)];
    ++result.coverage[pick];

    FogEnv env(pool[pick].series, pool[pick].episode, cfg.env, cfg.feature_mode, cfg.features);
    auto maybe_state = env.reset(rng);
    if (!maybe_state) throw ContractError("run_training: reset failed on a vetted episode");
    Eigen::VectorXd raw_state = std::move(*maybe_state);
    normalizer.observe(raw_state);

    double ep_return = 0.0;
    double abs_td_sum = 0.0;
    long long td_count = 0;
    bool done = false;

    while (!done) {
      const Action action = select_action(online, normalizer.apply(raw_state), epsilon, rng);
      StepOutcome out = env.step(action);
      ep_return += out.reward;
      normalizer.observe(out.next_state);

      Transition t;
      t.state = raw_state;
      t.action = action;
      t.reward = out.reward;
      t.next_state = out.next_state;
      t.done = out.done;
      buffer.add(std::move(t));

      TrainStepEvent event;
      event.n_steps = n_steps;
      event.online = &online;
      event.target = &target;
      event.buffer = &buffer;

      Eigen::VectorXd td;
      std::vector<std::size_t> slots;
      if (buffer.size() >= cfg.batch_size) {
        const double beta = buffer.beta_schedule(n_steps);
        SampleBatch batch = buffer.sample(cfg.batch_size, beta, rng);

        QBatch qb;
        const Eigen::Index b = static_cast<Eigen::Index>(cfg.batch_size);
        const Eigen::Index dim = raw_state.size();
        qb.states.resize(dim, b);
        qb.next_states.resize(dim, b);
        qb.rewards.resize(b);
        qb.actions.resize(cfg.batch_size);
        qb.done.resize(cfg.batch_size);
        Eigen::VectorXd weights(b);
        for (Eigen::Index j = 0; j < b; ++j) {
          const Transition& tr = *batch.transitions[static_cast<std::size_t>(j)];
          qb.states.col(j) = normalizer.apply(tr.state);
          qb.next_states.col(j) = normalizer.apply(tr.next_state);
          qb.rewards(j) = tr.reward;
          qb.actions[static_cast<std::size_t>(j)] = static_cast<int>(tr.action);
          qb.done[static_cast<std::size_t>(j)] = tr.done ? 1 : 0;
          weights(j) = batch.is_weights[static_cast<std::size_t>(j)];
        }

        const Eigen::VectorXd y = ddqn_targets(qb, online, target, cfg.gamma);
        td = train_step(online, adam, qb, y, weights);
        slots = std::move(batch.tree_indices);
        buffer.update_priorities(slots, {td.data(), td.data() + td.size()});

        abs_td_sum += td.cwiseAbs().sum();
        td_count += td.size();
        event.learned = true;
        event.td_errors = &td;
        event.sampled_slots = &slots;
      }

      if (n_steps % cfg.target_sync_period == 0) {
        sync_target(online, target);
        event.synced = true;
      }

      if (on_step) on_step(event);

      raw_state = std::move(out.next_state);
      done = out.done;
      ++n_steps;
    }

    epsilon = std::max(cfg.epsilon.min, epsilon * cfg.epsilon.decay);

    trailing.push_back(ep_return);
    trailing_sum += ep_return;
    if (trailing.size() > 100) {
      trailing_sum -= trailing.front();
      trailing.pop_front();
    }
    best_avg = std::max(best_avg, trailing_sum / static_cast<double>(trailing.size()));

    CurvePoint point;
    point.episode = episode;
    point.total_return = ep_return;
    point.epsilon = epsilon;
    point.mean_abs_td = td_count > 0 ? abs_td_sum / static_cast<double>(td_count) : 0.0;
    point.best_avg_return = best_avg;
    result.curve.push_back(point);
  }

  result.params = std::move(online);
  result.normalizer = normalizer;
  result.total_steps = n_steps;
  return result;
}

std::string write_learning_curve_csv(const LearningCurve& curve) {
  std::string out = "episode,return,epsilon,mean_abs_td,best_avg_return\n";
  for (const CurvePoint& p : curve) {
    out += std::to_string(p.episode);
    out += ',';
    out += format_double(p.total_return);
    out += ',';
    out += format_double(p.epsilon);
    out += ',';
    out += format_double(p.mean_abs_td);
    out += ',';
    out += format_double(p.best_avg_return);
    out += '\n';
  }
  return out;
}

std::string write_coverage_csv(const std::vector<EpisodeRef>& pool,
                               const std::vector<long long>& coverage) {
  std::string out = "episode_id,subject,run,onset_ms,visits\n";
  for (std::size_t i = 0; i < pool.size(); ++i) {
    out += std::to_string(pool[i].id);
    out += ',';
    out += std::to_string(pool[i].episode.subject_id);
    out += ',';
    out += std::to_string(pool[i].episode.run_id);
    out += ',';
    out += std::to_string(pool[i].episode.onset_ms);
    out += ',';
    out += std::to_string(i < coverage.size() ? coverage[i] : 0);
    out += '\n';
  }
  return out;
}

}  // namespace fogrl
