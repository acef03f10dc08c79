#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fogrl/trainer.hpp"

namespace fogrl {

// Outcome of one greedy evaluation rollout.
struct PredictionRecord {
  int episode_id = 0;
  bool placed = false;
  std::optional<double> tau_at_place_s;  // present iff placed and not misplaced
  bool misplaced = false;                // placed at or after the onset
  double reward = 0.0;                   // episode return

  bool undecided() const { return !placed; }
};

struct EvalReport {
  int subject_id = 0;
  std::string mode;  // "dependent" | "loso"
  double mean_reward = 0.0;
  std::optional<double> mean_prediction_point_s;  // over placed, not misplaced
  std::optional<double> std_prediction_point_s;   // population
  std::optional<double> longest_horizon_s;
  std::optional<double> shortest_horizon_s;
  int misplaced_count = 0;
  int placed_count = 0;  // ratio denominator: episodes with a place action
  int undecided_count = 0;
  int evaluated_count = 0;
  std::uint64_t fold_seed = 0;
};

// Everything evaluation needs to know about one subject.
struct SubjectEval {
  int subject_id = 0;
  std::vector<EpisodeRef> episodes;
  std::vector<const TiSeries*> series;  // all of the subject's trials
  double fog_density = 0.0;             // episodes per in-experiment minute
};

// Metric block over a record set. Horizon statistics cover only placed,
// non-misplaced records; the mean reward covers every record.
EvalReport compute_metrics(std::span<const PredictionRecord> records, int subject_id,
                           const std::string& mode);

// Per-step rollout log for the --trace / --dump-states debug outputs.
struct TraceRow {
  std::int64_t t_ms = 0;
  double tau_s = 0.0;
  int action = 0;
  double reward = 0.0;
  bool done = false;
  Eigen::VectorXd state;  // normalized network input
};

std::string write_trace_csv(std::span<const TraceRow> rows);
std::string write_states_csv(std::span<const TraceRow> rows);

// One greedy (epsilon = 0) rollout through the evaluation environment, which
// runs past the onset up to the freeze end so misplaced and undecided
// outcomes are observable. Returns nullopt when the episode has no usable
// history.
std::optional<PredictionRecord> greedy_rollout(const EpisodeRef& ref, const TrainConfig& cfg,
                                               const MlpParams& params,
                                               const StateNormalizer& normalizer, Rng& rng,
                                               std::vector<TraceRow>* trace = nullptr);

// Optional debug sinks shared by the evaluation protocols. trace_dir, when
// set, receives one trace CSV per rollout; dump_states adds the normalized
// state rows alongside.
struct EvalDebug {
  std::filesystem::path trace_dir;
  bool dump_states = false;
};

// Same-subject 80:20 protocol: episodes are shuffled with the fold seed,
// the first floor(0.8*n) train the agent and the rest are rolled out
// greedily once each. Subjects with fewer than two episodes are skipped
// (nullopt).
std::optional<EvalReport> eval_subject_dependent(const SubjectEval& subject,
                                                 const TrainConfig& base_cfg,
                                                 double split_fraction = 0.8,
                                                 const EvalDebug* debug = nullptr);

// Leave-one-subject-out: each fold trains on every other subject's episodes
// and evaluates on all of the held-out subject's episodes.
std::vector<EvalReport> eval_loso(const std::vector<SubjectEval>& subjects,
                                  const TrainConfig& base_cfg,
                                  const EvalDebug* debug = nullptr);

std::vector<EvalReport> eval_all_dependent(const std::vector<SubjectEval>& subjects,
                                           const TrainConfig& base_cfg,
                                           double split_fraction = 0.8,
                                           const EvalDebug* debug = nullptr);

// Spearman rank correlation with average ranks for ties; two-sided p-value
// via the t approximation.
struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
};
SpearmanResult spearman_rho(std::span<const double> x, std::span<const double> y);

// std/mean of the included prediction points; absent when the mean is zero.
std::optional<double> coefficient_of_variation(std::span<const double> taus);

// Population variance of every signal value the subject produced.
double ti_variance(std::span<const TiSeries* const> series);

// Regularized incomplete beta I_x(a, b); exposed for the statistics tests.
double incomplete_beta(double a, double b, double x);

struct CorrelationRow {
  std::string mode;
  std::string x_name;  // "fog_density" | "ti_variance"
  double rho = 0.0;
  double p_value = 1.0;
  int n = 0;
};

std::vector<CorrelationRow> misplacement_correlations(
    const std::vector<SubjectEval>& subjects, const std::vector<EvalReport>& reports);

// Table-style CSV, one row per (mode, subject).
std::string write_report_csv(const std::vector<EvalReport>& reports);
std::vector<EvalReport> parse_report_csv(const std::string& text);
// Rendered markdown with published reference values alongside.
std::string write_report_md(const std::vector<EvalReport>& reports);
std::string write_correlations_csv(const std::vector<CorrelationRow>& rows);

}  // namespace fogrl
