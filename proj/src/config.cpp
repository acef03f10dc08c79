#include "fogrl/config.hpp"

#include <cctype>
#include <cstdlib>
#include <json.hpp>
#include <set>

#include "fogrl/errors.hpp"
#include "fogrl/io_util.hpp"

extern char** environ;

namespace fogrl {

using nlohmann::json;

namespace {

// Reject silently-ignored keys; typos in configs should fail loudly.
void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ParseError("config: unknown key '" + where + it.key() + "'");
  }
}

template <typename T>
void get_to(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) obj.at(key).get_to(out);
}

std::string scheme_str(RewardScheme s) {
  return s == RewardScheme::Shaped ? "shaped" : "simple";
}
RewardScheme scheme_from(const std::string& s) {
  if (s == "shaped") return RewardScheme::Shaped;
  if (s == "simple") return RewardScheme::SimpleAppendixB;
  throw ParseError("config: scheme must be 'shaped' or 'simple', got '" + s + "'");
}

std::string grade_str(RewardGrade g) { return g == RewardGrade::Flat ? "flat" : "linear"; }
RewardGrade grade_from(const std::string& s) {
  if (s == "flat") return RewardGrade::Flat;
  if (s == "linear") return RewardGrade::Linear;
  throw ParseError("config: reward_grade must be 'flat' or 'linear', got '" + s + "'");
}

std::string fmode_str(FeatureMode m) { return m == FeatureMode::Stats ? "stats" : "raw_window"; }
FeatureMode fmode_from(const std::string& s) {
  if (s == "stats") return FeatureMode::Stats;
  if (s == "raw_window") return FeatureMode::RawWindow;
  throw ParseError("config: feature mode must be 'stats' or 'raw_window', got '" + s + "'");
}

std::string zsigma_str(ZscoreSigma z) { return z == ZscoreSigma::Window ? "window" : "trial"; }
ZscoreSigma zsigma_from(const std::string& s) {
  if (s == "window") return ZscoreSigma::Window;
  if (s == "trial") return ZscoreSigma::Trial;
  throw ParseError("config: zscore_sigma must be 'window' or 'trial', got '" + s + "'");
}

std::string norm_str(StateNormMode m) { return m == StateNormMode::None ? "none" : "running"; }
StateNormMode norm_from(const std::string& s) {
  if (s == "none") return StateNormMode::None;
  if (s == "running") return StateNormMode::Running;
  throw ParseError("config: state_norm must be 'none' or 'running', got '" + s + "'");
}

std::string strategy_str(EpisodeStrategy s) {
  return s == EpisodeStrategy::Uniform ? "uniform" : "balanced";
}
EpisodeStrategy strategy_from(const std::string& s) {
  if (s == "uniform") return EpisodeStrategy::Uniform;
  if (s == "balanced") return EpisodeStrategy::Balanced;
  throw ParseError("config: episode_strategy must be 'uniform' or 'balanced', got '" + s + "'");
}

}  // namespace

std::string to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::Loso: return "loso";
    case EvalMode::Dependent: return "dependent";
    case EvalMode::Both: return "both";
  }
  return "loso";
}

EvalMode eval_mode_from_string(const std::string& s) {
  if (s == "loso") return EvalMode::Loso;
  if (s == "dependent") return EvalMode::Dependent;
  if (s == "both") return EvalMode::Both;
  throw ParseError("config: eval mode must be 'loso', 'dependent' or 'both', got '" + s + "'");
}

TrainConfig PipelineConfig::train_config() const {
  TrainConfig cfg;
  cfg.total_episodes = total_episodes;
  cfg.gamma = gamma;
  cfg.batch_size = batch_size;
  cfg.epsilon = epsilon;
  cfg.target_sync_period = target_sync_period;
  cfg.seed = seed;
  cfg.episode_strategy = episode_strategy;
  cfg.network.input_dim = feature_dim(feature_mode, features);
  cfg.network.hidden.assign(static_cast<std::size_t>(hidden_layers), hidden_units);
  cfg.network.output_dim = 2;
  cfg.optimizer = optimizer;
  cfg.replay = replay;
  cfg.env = env;
  cfg.feature_mode = feature_mode;
  cfg.features = features;
  cfg.state_norm = state_norm;
  cfg.norm_warmup = norm_warmup;
  return cfg;
}

std::string PipelineConfig::to_json() const {
  json j;
  j["version"] = version;
  j["seed"] = seed;
  j["paths"] = {{"data_dir", data_dir}, {"out_dir", out_dir}};
  j["synthetic"] = {{"enabled", synthetic_enabled},
                    {"subjects", synth.subjects},
                    {"episodes_per_subject", synth.episodes_per_subject},
                    {"stride_s", synth.stride_s},
                    {"baseline_ti", synth.baseline_ti},
                    {"noise_sigma", synth.noise_sigma},
                    {"ramp_lead_s", synth.ramp_lead_s},
                    {"ramp_drop", synth.ramp_drop},
                    {"onset_spacing_s", synth.onset_spacing_s},
                    {"first_onset_s", synth.first_onset_s},
                    {"freeze_duration_s", synth.freeze_duration_s}};
  j["transform"] = {{"window_s", transform.window_s},
                    {"stride_s", transform.stride_s},
                    {"delay", transform.delay},
                    {"channels", transform.channels},
                    {"energy_threshold", transform.energy_threshold}};
  j["features"] = {{"mode", fmode_str(feature_mode)},
                   {"window_s", features.window_s},
                   {"raw_taps", features.raw_taps},
                   {"zscore_sigma", zsigma_str(features.zscore_sigma)},
                   {"state_norm", norm_str(state_norm)},
                   {"norm_warmup", norm_warmup}};
  j["env"] = {{"scheme", scheme_str(env.scheme)},
              {"horizon_s", env.horizon_s},
              {"accurate_lo_s", env.accurate_lo_s},
              {"accurate_hi_s", env.accurate_hi_s},
              {"step_s", env.step_s},
              {"reward_grade", grade_str(env.reward_grade)},
              {"rewards",
               {{"accurate", env.rewards.accurate},
                {"early", env.rewards.early},
                {"late", env.rewards.late},
                {"failure", env.rewards.failure},
                {"wait_bonus", env.rewards.wait_bonus}}}};
  j["replay"] = {{"capacity", replay.capacity},
                 {"alpha", replay.alpha},
                 {"beta0", replay.beta0},
                 {"beta_increment", replay.beta_increment},
                 {"epsilon_priority", replay.epsilon_priority}};
  j["network"] = {{"hidden_layers", hidden_layers}, {"hidden_units", hidden_units}};
  j["optimizer"] = {{"learning_rate", optimizer.learning_rate},
                    {"beta1", optimizer.beta1},
                    {"beta2", optimizer.beta2},
                    {"epsilon", optimizer.epsilon},
                    {"grad_clip_norm", optimizer.grad_clip_norm}};
  j["train"] = {{"total_episodes", total_episodes},
                {"gamma", gamma},
                {"batch_size", batch_size},
                {"epsilon_start", epsilon.start},
                {"epsilon_min", epsilon.min},
                {"epsilon_decay", epsilon.decay},
                {"target_sync_period", target_sync_period},
                {"episode_strategy", strategy_str(episode_strategy)}};
  j["eval"] = {{"mode", to_string(eval_mode)}, {"split_fraction", split_fraction}};
  return j.dump(2) + "\n";
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: invalid JSON: ") + e.what());
  }

  PipelineConfig cfg;
  check_keys(j, {"version", "seed", "paths", "synthetic", "transform", "features", "env",
                 "replay", "network", "optimizer", "train", "eval"},
             "");
  if (!j.contains("version")) throw ParseError("config: missing 'version'");
  j.at("version").get_to(cfg.version);
  if (cfg.version != kConfigVersion)
    throw ParseError("config: unsupported version " + std::to_string(cfg.version));
  get_to(j, "seed", cfg.seed);

  if (j.contains("paths")) {
    const json& p = j["paths"];
    check_keys(p, {"data_dir", "out_dir"}, "paths.");
    get_to(p, "data_dir", cfg.data_dir);
    get_to(p, "out_dir", cfg.out_dir);
  }
  if (j.contains("synthetic")) {
    const json& s = j["synthetic"];
    check_keys(s,
               {"enabled", "subjects", "episodes_per_subject", "stride_s", "baseline_ti",
                "noise_sigma", "ramp_lead_s", "ramp_drop", "onset_spacing_s", "first_onset_s",
                "freeze_duration_s"},
               "synthetic.");
    get_to(s, "enabled", cfg.synthetic_enabled);
    get_to(s, "subjects", cfg.synth.subjects);
    get_to(s, "episodes_per_subject", cfg.synth.episodes_per_subject);
    get_to(s, "stride_s", cfg.synth.stride_s);
    get_to(s, "baseline_ti", cfg.synth.baseline_ti);
    get_to(s, "noise_sigma", cfg.synth.noise_sigma);
    get_to(s, "ramp_lead_s", cfg.synth.ramp_lead_s);
    get_to(s, "ramp_drop", cfg.synth.ramp_drop);
    get_to(s, "onset_spacing_s", cfg.synth.onset_spacing_s);
    get_to(s, "first_onset_s", cfg.synth.first_onset_s);
    get_to(s, "freeze_duration_s", cfg.synth.freeze_duration_s);
  }
  if (j.contains("transform")) {
    const json& t = j["transform"];
    check_keys(t, {"window_s", "stride_s", "delay", "channels", "energy_threshold"},
               "transform.");
    get_to(t, "window_s", cfg.transform.window_s);
    get_to(t, "stride_s", cfg.transform.stride_s);
    get_to(t, "delay", cfg.transform.delay);
    get_to(t, "channels", cfg.transform.channels);
    get_to(t, "energy_threshold", cfg.transform.energy_threshold);
  }
  if (j.contains("features")) {
    const json& f = j["features"];
    check_keys(f, {"mode", "window_s", "raw_taps", "zscore_sigma", "state_norm", "norm_warmup"},
               "features.");
    if (f.contains("mode")) cfg.feature_mode = fmode_from(f["mode"].get<std::string>());
    get_to(f, "window_s", cfg.features.window_s);
    get_to(f, "raw_taps", cfg.features.raw_taps);
    if (f.contains("zscore_sigma"))
      cfg.features.zscore_sigma = zsigma_from(f["zscore_sigma"].get<std::string>());
    if (f.contains("state_norm")) cfg.state_norm = norm_from(f["state_norm"].get<std::string>());
    get_to(f, "norm_warmup", cfg.norm_warmup);
  }
  if (j.contains("env")) {
    const json& e = j["env"];
    check_keys(e,
               {"scheme", "horizon_s", "accurate_lo_s", "accurate_hi_s", "step_s", "reward_grade",
                "rewards"},
               "env.");
    if (e.contains("scheme")) {
      // The scheme picks the reward-table defaults; explicit values override.
      cfg.env = EnvConfig::for_scheme(scheme_from(e["scheme"].get<std::string>()));
    }
    get_to(e, "horizon_s", cfg.env.horizon_s);
    get_to(e, "accurate_lo_s", cfg.env.accurate_lo_s);
    get_to(e, "accurate_hi_s", cfg.env.accurate_hi_s);
    get_to(e, "step_s", cfg.env.step_s);
    if (e.contains("reward_grade"))
      cfg.env.reward_grade = grade_from(e["reward_grade"].get<std::string>());
    if (e.contains("rewards")) {
      const json& r = e["rewards"];
      check_keys(r, {"accurate", "early", "late", "failure", "wait_bonus"}, "env.rewards.");
      get_to(r, "accurate", cfg.env.rewards.accurate);
      get_to(r, "early", cfg.env.rewards.early);
      get_to(r, "late", cfg.env.rewards.late);
      get_to(r, "failure", cfg.env.rewards.failure);
      get_to(r, "wait_bonus", cfg.env.rewards.wait_bonus);
      cfg.env_rewards_explicit = true;
    }
  }
  if (j.contains("replay")) {
    const json& r = j["replay"];
    check_keys(r, {"capacity", "alpha", "beta0", "beta_increment", "epsilon_priority"},
               "replay.");
    get_to(r, "capacity", cfg.replay.capacity);
    get_to(r, "alpha", cfg.replay.alpha);
    get_to(r, "beta0", cfg.replay.beta0);
    get_to(r, "beta_increment", cfg.replay.beta_increment);
    get_to(r, "epsilon_priority", cfg.replay.epsilon_priority);
  }
  if (j.contains("network")) {
    const json& n = j["network"];
    check_keys(n, {"hidden_layers", "hidden_units"}, "network.");
    get_to(n, "hidden_layers", cfg.hidden_layers);
    get_to(n, "hidden_units", cfg.hidden_units);
  }
  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    check_keys(o, {"learning_rate", "beta1", "beta2", "epsilon", "grad_clip_norm"}, "optimizer.");
    get_to(o, "learning_rate", cfg.optimizer.learning_rate);
    get_to(o, "beta1", cfg.optimizer.beta1);
    get_to(o, "beta2", cfg.optimizer.beta2);
    get_to(o, "epsilon", cfg.optimizer.epsilon);
    get_to(o, "grad_clip_norm", cfg.optimizer.grad_clip_norm);
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    check_keys(t,
               {"total_episodes", "gamma", "batch_size", "epsilon_start", "epsilon_min",
                "epsilon_decay", "target_sync_period", "episode_strategy"},
               "train.");
    get_to(t, "total_episodes", cfg.total_episodes);
    get_to(t, "gamma", cfg.gamma);
    get_to(t, "batch_size", cfg.batch_size);
    get_to(t, "epsilon_start", cfg.epsilon.start);
    get_to(t, "epsilon_min", cfg.epsilon.min);
    get_to(t, "epsilon_decay", cfg.epsilon.decay);
    get_to(t, "target_sync_period", cfg.target_sync_period);
    if (t.contains("episode_strategy"))
      cfg.episode_strategy = strategy_from(t["episode_strategy"].get<std::string>());
  }
  if (j.contains("eval")) {
    const json& e = j["eval"];
    check_keys(e, {"mode", "split_fraction"}, "eval.");
    if (e.contains("mode")) cfg.eval_mode = eval_mode_from_string(e["mode"].get<std::string>());
    get_to(e, "split_fraction", cfg.split_fraction);
  }
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path, bool apply_env) {
  PipelineConfig cfg = from_json(read_text_file(path));
  if (apply_env) cfg.apply_env_overrides();
  return cfg;
}

void PipelineConfig::apply_env_overrides() {
  json j = json::parse(to_json());
  bool changed = false;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry(*e);
    if (entry.rfind(kEnvPrefix, 0) != 0) continue;
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string key = entry.substr(std::string(kEnvPrefix).size(), eq - std::string(kEnvPrefix).size());
    const std::string value = entry.substr(eq + 1);

    // FOGRL_TRAIN__BATCH_SIZE -> train.batch_size
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      const std::size_t sep = key.find("__", start);
      if (sep == std::string::npos) {
        parts.push_back(key.substr(start));
        break;
      }
      parts.push_back(key.substr(start, sep - start));
      start = sep + 2;
    }
    json* node = &j;
    bool ok = true;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      std::string part = parts[i];
      for (char& c : part) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (!node->contains(part)) {
        ok = false;
        break;
      }
      node = &(*node)[part];
      if (i + 1 < parts.size() && !node->is_object()) {
        ok = false;
        break;
      }
    }
    if (!ok) throw ParseError("config: environment override names unknown key: " + entry.substr(0, eq));
    try {
      *node = json::parse(value);
    } catch (const json::parse_error&) {
      *node = value;  // bare strings are allowed unquoted
    }
    changed = true;
  }
  if (changed) *this = from_json(j.dump());
}

}  // namespace fogrl
