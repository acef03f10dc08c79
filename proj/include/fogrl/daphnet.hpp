#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fogrl {

// Annotation codes used by the Daphnet recordings.
enum class Annotation : int { OutOfExperiment = 0, NoFreeze = 1, Freeze = 2 };

struct Sample {
  std::int64_t t_ms = 0;
  std::array<double, 9> channels{};  // ankle xyz, thigh xyz, trunk xyz (milli-g)
  int annotation = 0;
};

struct RawTrial {
  int subject_id = 0;
  int run_id = 0;
  double sample_rate_hz = 64.0;  // Daphnet nominal rate
  std::vector<Sample> samples;

  std::string name() const;  // e.g. "S01R01"
};

// One maximal run of Freeze-annotated samples.
struct FogEpisode {
  int subject_id = 0;
  int run_id = 0;
  std::int64_t onset_ms = 0;             // first Freeze sample
  std::int64_t end_ms = 0;               // last contiguous Freeze sample
  std::int64_t pre_window_start_ms = 0;  // start of contiguous in-experiment history

  double pre_history_s() const {
    return static_cast<double>(onset_ms - pre_window_start_ms) / 1000.0;
  }
  // Short relative to a given environment horizon; the environment decides the
  // treatment of such episodes.
  bool short_history(double horizon_s) const { return pre_history_s() < horizon_s; }
};

enum class Gender { Male, Female };
enum class MedicationState { On, Off };

struct SubjectMeta {
  int id = 0;
  Gender gender = Gender::Male;
  int age_years = 0;
  int disease_duration_years = 0;
  double hoehn_yahr = 0.0;
  MedicationState tested_in = MedicationState::Off;
};

// The eight study subjects, with demographics. This table is also shipped as
// data/daphnet_subjects.csv; the two must agree.
const std::vector<SubjectMeta>& subject_metadata();
std::optional<SubjectMeta> subject_metadata(int id);
std::vector<SubjectMeta> load_subject_metadata(const std::filesystem::path& csv_path);

// True for the subject ids the study uses (1,2,3,5,6,7,8,9).
bool is_study_subject(int id);

// Parse one raw Daphnet recording: 11 whitespace-separated numeric fields per
// line (time_ms, 9 channels, annotation). Subject/run ids come from the
// file name (SxxRyy). Throws ParseError with the line number on bad input,
// and on empty files.
RawTrial parse_trial(const std::filesystem::path& path);

// Canonical intermediate format: header "t_ms,ch1,...,ch9,ann", one sample
// per row, shortest round-trip numerals. parse/write round-trip bit-exactly.
std::string write_trial_csv(const RawTrial& trial);
RawTrial parse_trial_csv(const std::filesystem::path& path);

// One FogEpisode per maximal run of Freeze samples. Runs separated by at
// least one non-Freeze sample (including out-of-experiment gaps) are distinct.
std::vector<FogEpisode> extract_episodes(const RawTrial& trial);

// Episodes per minute of in-experiment (annotation != 0) recording.
// Throws DegenerateInputError when the in-experiment duration is zero.
double fog_density(const std::vector<RawTrial>& subject_trials);

double in_experiment_minutes(const std::vector<RawTrial>& subject_trials);

// Load every SxxRyy file under data_dir, restricted to the study subjects.
std::vector<RawTrial> load_corpus(const std::filesystem::path& data_dir);

}  // namespace fogrl
