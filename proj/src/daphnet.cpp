#include "fogrl/daphnet.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "fogrl/errors.hpp"
#include "fogrl/io_util.hpp"

namespace fogrl {

namespace {

// Subject/run from file names like "S01R02.txt" or "s01r02.csv".
bool ids_from_filename(const std::string& stem, int* subject, int* run) {
  if (stem.size() < 6) return false;
  if (std::toupper(stem[0]) != 'S') return false;
  std::size_t rpos = stem.find_first_of("Rr", 1);
  if (rpos == std::string::npos || rpos == 1) return false;
  try {
    *subject = std::stoi(stem.substr(1, rpos - 1));
    std::size_t digits = 0;
    while (rpos + 1 + digits < stem.size() && std::isdigit(static_cast<unsigned char>(stem[rpos + 1 + digits])))
      ++digits;
    if (digits == 0) return false;
    *run = std::stoi(stem.substr(rpos + 1, digits));
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

Sample parse_sample_fields(const std::vector<std::string_view>& fields, int line_no) {
  if (fields.size() != 11) {
    throw ParseError("expected 11 fields, got " + std::to_string(fields.size()) +
                         " (line " + std::to_string(line_no) + ")",
                     line_no);
  }
  Sample s;
  s.t_ms = parse_i64(fields[0], line_no);
  for (int c = 0; c < 9; ++c) {
    const double v = parse_double(fields[1 + c], line_no);
    if (!std::isfinite(v))
      throw ParseError("non-finite channel value (line " + std::to_string(line_no) + ")", line_no);
    s.channels[static_cast<std::size_t>(c)] = v;
  }
  const std::int64_t ann = parse_i64(fields[10], line_no);
  if (ann < 0 || ann > 2)
    throw ParseError("annotation out of range {0,1,2} (line " + std::to_string(line_no) + ")",
                     line_no);
  s.annotation = static_cast<int>(ann);
  return s;
}

void check_monotone(const RawTrial& trial, const std::string& origin) {
  for (std::size_t i = 1; i < trial.samples.size(); ++i) {
    if (trial.samples[i].t_ms <= trial.samples[i - 1].t_ms)
      throw ParseError(origin + ": timestamps not strictly increasing at row " +
                       std::to_string(i + 1));
  }
}

}  // namespace

std::string RawTrial::name() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "S%02dR%02d", subject_id, run_id);
  return buf;
}

const std::vector<SubjectMeta>& subject_metadata() {
  static const std::vector<SubjectMeta> table = {
      {1, Gender::Male, 66, 16, 3.0, MedicationState::Off},
      {2, Gender::Male, 67, 7, 2.0, MedicationState::On},
      {3, Gender::Male, 59, 30, 2.5, MedicationState::Off},
      {5, Gender::Male, 75, 6, 2.0, MedicationState::Off},
      {6, Gender::Female, 63, 22, 2.0, MedicationState::Off},
      {7, Gender::Male, 66, 2, 2.5, MedicationState::Off},
      {8, Gender::Female, 68, 18, 4.0, MedicationState::On},
      {9, Gender::Male, 73, 9, 2.0, MedicationState::Off},
  };
  return table;
}

std::optional<SubjectMeta> subject_metadata(int id) {
  for (const auto& m : subject_metadata())
    if (m.id == id) return m;
  return std::nullopt;
}

std::vector<SubjectMeta> load_subject_metadata(const std::filesystem::path& csv_path) {
  const std::string text = read_text_file(csv_path);
  std::vector<SubjectMeta> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) continue;  // header
    if (line.empty()) continue;
    const auto f = split_char(line, ',');
    if (f.size() != 6)
      throw ParseError("metadata: expected 6 columns (line " + std::to_string(line_no) + ")",
                       line_no);
    SubjectMeta m;
    m.id = static_cast<int>(parse_i64(f[0], line_no));
    if (f[1] == "M")
      m.gender = Gender::Male;
    else if (f[1] == "F")
      m.gender = Gender::Female;
    else
      throw ParseError("metadata: gender must be M or F (line " + std::to_string(line_no) + ")",
                       line_no);
    m.age_years = static_cast<int>(parse_i64(f[2], line_no));
    m.disease_duration_years = static_cast<int>(parse_i64(f[3], line_no));
    m.hoehn_yahr = parse_double(f[4], line_no);
    if (f[5] == "ON")
      m.tested_in = MedicationState::On;
    else if (f[5] == "OFF")
      m.tested_in = MedicationState::Off;
    else
      throw ParseError("metadata: tested_in must be ON or OFF (line " + std::to_string(line_no) +
                           ")",
                       line_no);
    out.push_back(m);
  }
  return out;
}

bool is_study_subject(int id) {
  return subject_metadata(id).has_value();
}

RawTrial parse_trial(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  RawTrial trial;
  if (!ids_from_filename(path.stem().string(), &trial.subject_id, &trial.run_id))
    throw ParseError("file name does not identify subject/run (want SxxRyy): " + path.string());

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    trial.samples.push_back(parse_sample_fields(fields, line_no));
  }
  if (trial.samples.empty()) throw ParseError("empty trial file: " + path.string());
  check_monotone(trial, path.string());
  return trial;
}

std::string write_trial_csv(const RawTrial& trial) {
  std::string out = "t_ms,ch1,ch2,ch3,ch4,ch5,ch6,ch7,ch8,ch9,ann\n";
  for (const Sample& s : trial.samples) {
    out += std::to_string(s.t_ms);
    for (double c : s.channels) {
      out += ',';
      out += format_double(c);
    }
    out += ',';
    out += std::to_string(s.annotation);
    out += '\n';
  }
  return out;
}

RawTrial parse_trial_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  RawTrial trial;
  if (!ids_from_filename(path.stem().string(), &trial.subject_id, &trial.run_id))
    throw ParseError("file name does not identify subject/run (want SxxRyy): " + path.string());

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line.rfind("t_ms,", 0) != 0)
        throw ParseError("missing canonical trial header: " + path.string(), 1);
      continue;
    }
    if (line.empty()) continue;
    const auto fields = split_char(line, ',');
    trial.samples.push_back(parse_sample_fields(fields, line_no));
  }
  if (trial.samples.empty()) throw ParseError("empty trial file: " + path.string());
  check_monotone(trial, path.string());
  return trial;
}

std::vector<FogEpisode> extract_episodes(const RawTrial& trial) {
  std::vector<FogEpisode> episodes;
  const auto& s = trial.samples;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i].annotation != static_cast<int>(Annotation::Freeze)) {
      ++i;
      continue;
    }
    // Maximal Freeze run; any non-Freeze sample (including annotation 0) ends it.
    std::size_t j = i;
    while (j + 1 < s.size() && s[j + 1].annotation == static_cast<int>(Annotation::Freeze)) ++j;

    FogEpisode ep;
    ep.subject_id = trial.subject_id;
    ep.run_id = trial.run_id;
    ep.onset_ms = s[i].t_ms;
    ep.end_ms = s[j].t_ms;

    // Contiguous in-experiment history: walk back over NoFreeze samples only,
    // so the previous freeze or an out-of-experiment gap bounds the segment.
    std::size_t h = i;
    while (h > 0 && s[h - 1].annotation == static_cast<int>(Annotation::NoFreeze)) --h;
    ep.pre_window_start_ms = s[h].t_ms;

    episodes.push_back(ep);
    i = j + 1;
  }
  return episodes;
}

double in_experiment_minutes(const std::vector<RawTrial>& subject_trials) {
  double seconds = 0.0;
  for (const RawTrial& t : subject_trials) {
    if (t.sample_rate_hz <= 0.0) throw ContractError("sample rate must be positive");
    std::size_t n = 0;
    for (const Sample& s : t.samples)
      if (s.annotation != static_cast<int>(Annotation::OutOfExperiment)) ++n;
    seconds += static_cast<double>(n) / t.sample_rate_hz;
  }
  return seconds / 60.0;
}

double fog_density(const std::vector<RawTrial>& subject_trials) {
  const double minutes = in_experiment_minutes(subject_trials);
  if (minutes <= 0.0)
    throw DegenerateInputError("fog_density undefined: zero in-experiment duration");
  std::size_t count = 0;
  for (const RawTrial& t : subject_trials) count += extract_episodes(t).size();
  return static_cast<double>(count) / minutes;
}

std::vector<RawTrial> load_corpus(const std::filesystem::path& data_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(data_dir)) throw Error("not a directory: " + data_dir.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(data_dir)) {
    if (!entry.is_regular_file()) continue;
    int subject = 0, run = 0;
    if (!ids_from_filename(entry.path().stem().string(), &subject, &run)) continue;
    if (!is_study_subject(subject)) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<RawTrial> trials;
  trials.reserve(files.size());
  for (const auto& p : files) {
    if (p.extension() == ".csv")
      trials.push_back(parse_trial_csv(p));
    else
      trials.push_back(parse_trial(p));
  }
  return trials;
}

}  // namespace fogrl
