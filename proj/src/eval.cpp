#include "fogrl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fogrl/errors.hpp"
#include "fogrl/io_util.hpp"

namespace fogrl {

namespace {

// Distinct, stable seed per (base seed, subject); fold results must depend on
// the subject, not on iteration order.
std::uint64_t fold_seed(std::uint64_t base, int subject_id, std::uint64_t salt) {
  std::uint64_t x = base ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(subject_id + 1)) ^
                    salt;
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

std::vector<EpisodeRef> sorted_episodes(std::vector<EpisodeRef> eps) {
  std::sort(eps.begin(), eps.end(), [](const EpisodeRef& a, const EpisodeRef& b) {
    if (a.episode.subject_id != b.episode.subject_id)
      return a.episode.subject_id < b.episode.subject_id;
    if (a.episode.run_id != b.episode.run_id) return a.episode.run_id < b.episode.run_id;
    return a.episode.onset_ms < b.episode.onset_ms;
  });
  return eps;
}

std::string opt_str(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

std::string fixed2(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *v);
  return buf;
}

}  // namespace

EvalReport compute_metrics(std::span<const PredictionRecord> records, int subject_id,
                           const std::string& mode) {
  EvalReport rep;
  rep.subject_id = subject_id;
  rep.mode = mode;
  rep.evaluated_count = static_cast<int>(records.size());

  std::vector<double> taus;
  double reward_sum = 0.0;
  for (const PredictionRecord& r : records) {
    reward_sum += r.reward;
    if (r.placed) {
      ++rep.placed_count;
      if (r.misplaced) {
        ++rep.misplaced_count;
      } else {
        taus.push_back(r.tau_at_place_s.value());
      }
    } else {
      ++rep.undecided_count;
    }
  }
  rep.mean_reward = records.empty() ? 0.0 : reward_sum / static_cast<double>(records.size());

  if (!taus.empty()) {
    double mean = 0.0;
    for (double t : taus) mean += t;
    mean /= static_cast<double>(taus.size());
    double sq = 0.0;
    for (double t : taus) sq += (t - mean) * (t - mean);
    rep.mean_prediction_point_s = mean;
    rep.std_prediction_point_s = std::sqrt(sq / static_cast<double>(taus.size()));
    rep.longest_horizon_s = *std::max_element(taus.begin(), taus.end());
    rep.shortest_horizon_s = *std::min_element(taus.begin(), taus.end());
  }
  return rep;
}

std::string write_trace_csv(std::span<const TraceRow> rows) {
  std::string out = "t_ms,tau_s,action,reward,done\n";
  for (const TraceRow& r : rows) {
    out += std::to_string(r.t_ms);
    out += ',';
    out += format_double(r.tau_s);
    out += ',';
    out += std::to_string(r.action);
    out += ',';
    out += format_double(r.reward);
    out += ',';
    out += r.done ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string write_states_csv(std::span<const TraceRow> rows) {
  std::string out = "t_ms";
  const Eigen::Index dim = rows.empty() ? 0 : rows.front().state.size();
  for (Eigen::Index i = 0; i < dim; ++i) out += ",s" + std::to_string(i);
  out += '\n';
  for (const TraceRow& r : rows) {
    out += std::to_string(r.t_ms);
    for (Eigen::Index i = 0; i < r.state.size(); ++i) {
      out += ',';
      out += format_double(r.state(i));
    }
    out += '\n';
  }
  return out;
}

std::optional<PredictionRecord> greedy_rollout(const EpisodeRef& ref, const TrainConfig& cfg,
                                               const MlpParams& params,
                                               const StateNormalizer& normalizer, Rng& rng,
                                               std::vector<TraceRow>* trace) {
  EnvConfig env_cfg = cfg.env;
  env_cfg.allow_past_onset = true;
  FogEnv env(ref.series, ref.episode, env_cfg, cfg.feature_mode, cfg.features);
  auto state = env.reset(rng);
  if (!state) return std::nullopt;

  PredictionRecord rec;
  rec.episode_id = ref.id;
  double total = 0.0;
  while (true) {
    const Eigen::VectorXd net_input = normalizer.apply(*state);
    const std::int64_t t_before = env.now_ms();
    const int a = greedy_action(forward(params, net_input));
    StepOutcome out = env.step(static_cast<Action>(a));
    total += out.reward;
    if (trace)
      trace->push_back({t_before, out.tau_at_action_s, a, out.reward, out.done, net_input});
    if (out.done) {
      if (out.terminal == TerminalKind::Placed) {
        rec.placed = true;
        rec.misplaced = out.tau_at_action_s <= 0.0;
        if (!rec.misplaced) rec.tau_at_place_s = out.tau_at_action_s;
      }
      break;
    }
    *state = std::move(out.next_state);
  }
  rec.reward = total;
  return rec;
}

namespace {

EvalReport run_fold(const std::vector<EpisodeRef>& train_pool,
                    const std::vector<EpisodeRef>& test_pool, int subject_id,
                    const std::string& mode, const TrainConfig& base_cfg, std::uint64_t seed,
                    const EvalDebug* debug) {
  TrainConfig cfg = base_cfg;
  cfg.seed = seed;
  TrainResult trained = run_training(cfg, train_pool);

  Rng eval_rng(fold_seed(seed, subject_id, /*salt=*/0xE7A1));
  std::vector<PredictionRecord> records;
  for (const EpisodeRef& ref : test_pool) {
    std::vector<TraceRow> trace;
    auto rec = greedy_rollout(ref, cfg, trained.params, trained.normalizer, eval_rng,
                              debug ? &trace : nullptr);
    if (!rec) continue;
    records.push_back(*rec);
    if (debug && !debug->trace_dir.empty()) {
      const std::string tag =
          mode + "_s" + std::to_string(subject_id) + "_ep" + std::to_string(ref.id);
      write_text_file(debug->trace_dir / ("trace_" + tag + ".csv"), write_trace_csv(trace));
      if (debug->dump_states)
        write_text_file(debug->trace_dir / ("states_" + tag + ".csv"), write_states_csv(trace));
    }
  }
  EvalReport rep = compute_metrics(records, subject_id, mode);
  rep.fold_seed = seed;
  return rep;
}

}  // namespace

std::optional<EvalReport> eval_subject_dependent(const SubjectEval& subject,
                                                 const TrainConfig& base_cfg,
                                                 double split_fraction, const EvalDebug* debug) {
  if (subject.episodes.size() < 2) return std::nullopt;

  std::vector<EpisodeRef> eps = sorted_episodes(subject.episodes);
  const std::uint64_t seed = fold_seed(base_cfg.seed, subject.subject_id, /*salt=*/0xDE9);
  Rng shuffle_rng(seed);
  shuffle_rng.shuffle(eps);

  // floor(0.8*n) train episodes; always at least one test episode.
  const std::size_t n_train =
      std::min(eps.size() - 1,
               static_cast<std::size_t>(std::floor(split_fraction * static_cast<double>(eps.size()))));
  std::vector<EpisodeRef> train_pool(eps.begin(), eps.begin() + static_cast<long>(n_train));
  std::vector<EpisodeRef> test_pool(eps.begin() + static_cast<long>(n_train), eps.end());

  return run_fold(train_pool, test_pool, subject.subject_id, "dependent", base_cfg, seed, debug);
}

std::vector<EvalReport> eval_loso(const std::vector<SubjectEval>& subjects,
                                  const TrainConfig& base_cfg, const EvalDebug* debug) {
  std::vector<const SubjectEval*> order;
  for (const auto& s : subjects) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const SubjectEval* a, const SubjectEval* b) { return a->subject_id < b->subject_id; });

  std::vector<EvalReport> reports;
  for (const SubjectEval* held_out : order) {
    std::vector<EpisodeRef> train_pool;
    for (const SubjectEval* other : order) {
      if (other == held_out) continue;
      for (const EpisodeRef& e : other->episodes) train_pool.push_back(e);
    }
    train_pool = sorted_episodes(std::move(train_pool));
    const std::vector<EpisodeRef> test_pool = sorted_episodes(held_out->episodes);
    const std::uint64_t seed = fold_seed(base_cfg.seed, held_out->subject_id, /*salt=*/0x1050);
    reports.push_back(
        run_fold(train_pool, test_pool, held_out->subject_id, "loso", base_cfg, seed, debug));
  }
  return reports;
}

std::vector<EvalReport> eval_all_dependent(const std::vector<SubjectEval>& subjects,
                                           const TrainConfig& base_cfg, double split_fraction,
                                           const EvalDebug* debug) {
  std::vector<const SubjectEval*> order;
  for (const auto& s : subjects) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const SubjectEval* a, const SubjectEval* b) { return a->subject_id < b->subject_id; });
  std::vector<EvalReport> reports;
  for (const SubjectEval* s : order) {
    auto rep = eval_subject_dependent(*s, base_cfg, split_fraction, debug);
    if (rep) reports.push_back(*rep);
  }
  return reports;
}

// --- statistics ---

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw DegenerateInputError("correlation undefined for constant input");
  return sxy / std::sqrt(sxx * syy);
}

// Continued-fraction evaluation (Lentz) of the regularized incomplete beta.
double ibeta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;

  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * ibeta_cf(a, b, x) / a;
  return 1.0 - front * ibeta_cf(b, a, 1.0 - x) / b;
}

SpearmanResult spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError("spearman: length mismatch");
  if (x.size() < 3) throw ContractError("spearman: need at least 3 pairs");

  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  SpearmanResult res;
  res.rho = pearson(rx, ry);

  const double n = static_cast<double>(x.size());
  const double df = n - 2.0;
  if (std::abs(res.rho) >= 1.0 - 1e-15) {
    res.rho = res.rho > 0 ? 1.0 : -1.0;
    res.p_value = 0.0;
    return res;
  }
  const double t = res.rho * std::sqrt(df / (1.0 - res.rho * res.rho));
  // Two-sided Student-t tail probability.
  res.p_value = incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
  return res;
}

std::optional<double> coefficient_of_variation(std::span<const double> taus) {
  if (taus.empty()) throw ContractError("coefficient_of_variation: empty input");
  double mean = 0.0;
  for (double t : taus) mean += t;
  mean /= static_cast<double>(taus.size());
  if (mean == 0.0) return std::nullopt;
  double sq = 0.0;
  for (double t : taus) sq += (t - mean) * (t - mean);
  return std::sqrt(sq / static_cast<double>(taus.size())) / mean;
}

double ti_variance(std::span<const TiSeries* const> series) {
  std::vector<double> values;
  for (const TiSeries* s : series)
    for (const TiValue& v : *s) values.push_back(v.ti);
  if (values.empty()) throw ContractError("ti_variance: no signal values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return sq / static_cast<double>(values.size());
}

std::vector<CorrelationRow> misplacement_correlations(
    const std::vector<SubjectEval>& subjects, const std::vector<EvalReport>& reports) {
  std::vector<CorrelationRow> rows;
  std::vector<std::string> modes;
  for (const auto& r : reports)
    if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) modes.push_back(r.mode);
  std::sort(modes.begin(), modes.end());

  for (const std::string& mode : modes) {
    std::vector<double> density, variance, ratio;
    for (const auto& r : reports) {
      if (r.mode != mode) continue;
      const SubjectEval* subject = nullptr;
      for (const auto& s : subjects)
        if (s.subject_id == r.subject_id) subject = &s;
      if (!subject) continue;
      density.push_back(subject->fog_density);
      variance.push_back(subject->series.empty() ? 0.0 : ti_variance(subject->series));
      ratio.push_back(r.placed_count > 0
                          ? static_cast<double>(r.misplaced_count) / r.placed_count
                          : 0.0);
    }
    if (ratio.size() < 3) continue;
    for (const auto& [name, x] :
         {std::pair<std::string, const std::vector<double>*>{"fog_density", &density},
          {"ti_variance", &variance}}) {
      CorrelationRow row;
      row.mode = mode;
      row.x_name = name;
      row.n = static_cast<int>(ratio.size());
      try {
        const SpearmanResult sp = spearman_rho(*x, ratio);
        row.rho = sp.rho;
        row.p_value = sp.p_value;
      } catch (const DegenerateInputError&) {
        row.rho = 0.0;
        row.p_value = 1.0;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

// --- report files ---

std::string write_report_csv(const std::vector<EvalReport>& reports) {
  std::string out =
      "mode,subject,mean_reward,mean_prediction_point_s,std_prediction_point_s,"
      "longest_horizon_s,shortest_horizon_s,misplaced,placed,undecided,evaluated\n";
  for (const EvalReport& r : reports) {
    out += r.mode;
    out += ',';
    out += std::to_string(r.subject_id);
    out += ',';
    out += format_double(r.mean_reward);
    out += ',';
    out += opt_str(r.mean_prediction_point_s);
    out += ',';
    out += opt_str(r.std_prediction_point_s);
    out += ',';
    out += opt_str(r.longest_horizon_s);
    out += ',';
    out += opt_str(r.shortest_horizon_s);
    out += ',';
    out += std::to_string(r.misplaced_count);
    out += ',';
    out += std::to_string(r.placed_count);
    out += ',';
    out += std::to_string(r.undecided_count);
    out += ',';
    out += std::to_string(r.evaluated_count);
    out += '\n';
  }
  return out;
}

std::vector<EvalReport> parse_report_csv(const std::string& text) {
  std::vector<EvalReport> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto opt_field = [](std::string_view f, int ln) -> std::optional<double> {
    if (f.empty()) return std::nullopt;
    return parse_double(f, ln);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const auto f = split_char(line, ',');
    if (f.size() != 11)
      throw ParseError("report row needs 11 fields (line " + std::to_string(line_no) + ")",
                       line_no);
    EvalReport r;
    r.mode = std::string(f[0]);
    r.subject_id = static_cast<int>(parse_i64(f[1], line_no));
    r.mean_reward = parse_double(f[2], line_no);
    r.mean_prediction_point_s = opt_field(f[3], line_no);
    r.std_prediction_point_s = opt_field(f[4], line_no);
    r.longest_horizon_s = opt_field(f[5], line_no);
    r.shortest_horizon_s = opt_field(f[6], line_no);
    r.misplaced_count = static_cast<int>(parse_i64(f[7], line_no));
    r.placed_count = static_cast<int>(parse_i64(f[8], line_no));
    r.undecided_count = static_cast<int>(parse_i64(f[9], line_no));
    r.evaluated_count = static_cast<int>(parse_i64(f[10], line_no));
    out.push_back(r);
  }
  return out;
}

std::string write_report_md(const std::vector<EvalReport>& reports) {
  std::string out = "# Prediction evaluation\n\n";
  for (const std::string mode : {std::string("dependent"), std::string("loso")}) {
    bool any = false;
    for (const auto& r : reports) any = any || r.mode == mode;
    if (!any) continue;
    out += mode == "dependent" ? "## Subject dependent (80:20)\n\n"
                               : "## Subject independent (LOSO)\n\n";
    out +=
        "| Subject | Mean reward | Mean prediction point (s) | Std dev (s) | Longest (s) | "
        "Shortest (s) | Misplaced ratio | Undecided |\n";
    out += "|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : reports) {
      if (r.mode != mode) continue;
      out += "| " + std::to_string(r.subject_id) + " | " + fixed2(r.mean_reward) + " | " +
             fixed2(r.mean_prediction_point_s) + " | " + fixed2(r.std_prediction_point_s) +
             " | " + fixed2(r.longest_horizon_s) + " | " + fixed2(r.shortest_horizon_s) + " | " +
             std::to_string(r.misplaced_count) + ":" + std::to_string(r.placed_count) + " | " +
             std::to_string(r.undecided_count) + " |\n";
    }
    out += "\n";
  }
  out +=
      "## Published reference values\n\n"
      "Side-by-side context only; training is stochastic and these runs are "
      "not expected to reproduce them exactly.\n\n"
      "| Quantity | Reference |\n|---|---|\n"
      "| Max horizon, subject independent (s) | 8.72 |\n"
      "| Max horizon, subject dependent (s) | 7.89 |\n"
      "| Mean horizon, subject independent (s) | 5.16 |\n"
      "| Mean horizon, subject dependent (s) | 3.98 |\n";
  return out;
}

std::string write_correlations_csv(const std::vector<CorrelationRow>& rows) {
  std::string out = "mode,x,n,rho,p_value\n";
  for (const CorrelationRow& r : rows) {
    out += r.mode;
    out += ',';
    out += r.x_name;
    out += ',';
    out += std::to_string(r.n);
    out += ',';
    out += format_double(r.rho);
    out += ',';
    out += format_double(r.p_value);
    out += '\n';
  }
  return out;
}

}  // namespace fogrl
