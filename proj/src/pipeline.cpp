#include "fogrl/pipeline.hpp"

#include <algorithm>
#include <json.hpp>
#include <map>
#include <ostream>
#include <sstream>

#include "fogrl/errors.hpp"
#include "fogrl/io_util.hpp"
#include "fogrl/plots.hpp"

namespace fogrl {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<FogEpisode> Corpus::episode_list() const {
  std::vector<FogEpisode> out;
  out.reserve(episodes.size());
  for (const EpisodeRef& e : episodes) out.push_back(e.episode);
  return out;
}

std::string write_episodes_csv(const std::vector<FogEpisode>& episodes,
                               const std::vector<double>&) {
  std::string out = "episode_id,subject,run,onset_ms,end_ms,pre_window_start_ms\n";
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const FogEpisode& e = episodes[i];
    out += std::to_string(i);
    out += ',';
    out += std::to_string(e.subject_id);
    out += ',';
    out += std::to_string(e.run_id);
    out += ',';
    out += std::to_string(e.onset_ms);
    out += ',';
    out += std::to_string(e.end_ms);
    out += ',';
    out += std::to_string(e.pre_window_start_ms);
    out += '\n';
  }
  return out;
}

std::vector<FogEpisode> parse_episodes_csv(const fs::path& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<FogEpisode> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const auto f = split_char(line, ',');
    if (f.size() != 6)
      throw ParseError("episodes row needs 6 fields (line " + std::to_string(line_no) + ")",
                       line_no);
    FogEpisode e;
    e.subject_id = static_cast<int>(parse_i64(f[1], line_no));
    e.run_id = static_cast<int>(parse_i64(f[2], line_no));
    e.onset_ms = parse_i64(f[3], line_no);
    e.end_ms = parse_i64(f[4], line_no);
    e.pre_window_start_ms = parse_i64(f[5], line_no);
    out.push_back(e);
  }
  return out;
}

namespace {

std::string write_density_csv(const std::map<int, double>& density) {
  std::string out = "subject,fog_density_per_min\n";
  for (const auto& [subject, d] : density) {
    out += std::to_string(subject);
    out += ',';
    out += format_double(d);
    out += '\n';
  }
  return out;
}

std::map<int, double> parse_density_csv(const fs::path& path) {
  std::map<int, double> out;
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const auto f = split_char(line, ',');
    if (f.size() != 2)
      throw ParseError("density row needs 2 fields (line " + std::to_string(line_no) + ")",
                       line_no);
    out[static_cast<int>(parse_i64(f[0], line_no))] = parse_double(f[1], line_no);
  }
  return out;
}

}  // namespace

void ingest_directory(const fs::path& data_dir, const fs::path& out_root, std::ostream& log) {
  if (data_dir.empty())
    throw Error("ingest: no data_dir configured (set paths.data_dir or use synthetic mode)");
  fs::create_directories(out_root / "trials");

  const std::vector<RawTrial> trials = load_corpus(data_dir);
  if (trials.empty()) throw Error("ingest: no SxxRyy recordings under " + data_dir.string());

  std::vector<FogEpisode> episodes;
  std::map<int, std::vector<RawTrial>> per_subject;
  for (const RawTrial& t : trials) {
    write_text_file(out_root / "trials" / (t.name() + ".csv"), write_trial_csv(t));
    for (const FogEpisode& e : extract_episodes(t)) episodes.push_back(e);
    per_subject[t.subject_id].push_back(t);
  }
  std::map<int, double> density;
  for (const auto& [subject, ts] : per_subject) density[subject] = fog_density(ts);

  write_text_file(out_root / "episodes.csv", write_episodes_csv(episodes));
  write_text_file(out_root / "density.csv", write_density_csv(density));
  log << "ingest: " << trials.size() << " trials, " << episodes.size() << " episodes\n";
}

void transform_directory(const fs::path& trials_dir, const fs::path& ti_dir, const TiConfig& cfg,
                         std::ostream& log) {
  if (!fs::is_directory(trials_dir))
    throw Error("transform: missing " + trials_dir.string() + " (run ingest first)");
  fs::create_directories(ti_dir);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(trials_dir))
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::size_t n_values = 0;
  for (const fs::path& p : files) {
    const RawTrial trial = parse_trial_csv(p);
    const TiSeries series = ti_series(trial, cfg);
    n_values += series.size();
    write_text_file(ti_dir / p.filename(), write_ti_csv(series));
  }
  log << "transform: " << files.size() << " trials, " << n_values << " signal values\n";
}

void stage_ingest(const PipelineConfig& cfg, std::ostream& log) {
  ingest_directory(cfg.data_dir, cfg.out_dir, log);
}

void stage_transform(const PipelineConfig& cfg, std::ostream& log) {
  const fs::path out(cfg.out_dir);
  transform_directory(out / "trials", out / "ti", cfg.transform, log);
}

void stage_synth(const PipelineConfig& cfg, std::ostream& log) {
  const fs::path out(cfg.out_dir);
  fs::create_directories(out / "ti");

  const auto trials = generate_synthetic(cfg.synth, cfg.seed);
  std::vector<FogEpisode> episodes;
  std::map<int, double> density;
  std::map<int, double> minutes;
  for (const SyntheticTrial& t : trials) {
    char name[16];
    std::snprintf(name, sizeof(name), "S%02dR%02d.csv", t.subject_id, t.run_id);
    write_text_file(out / "ti" / name, write_ti_csv(t.series));
    for (const FogEpisode& e : t.episodes) episodes.push_back(e);
    minutes[t.subject_id] +=
        static_cast<double>(t.series.back().t_ms - t.series.front().t_ms) / 60000.0;
    density[t.subject_id] += static_cast<double>(t.episodes.size());
  }
  for (auto& [subject, count] : density) count /= minutes[subject];

  write_text_file(out / "episodes.csv", write_episodes_csv(episodes));
  write_text_file(out / "density.csv", write_density_csv(density));
  log << "synth: " << trials.size() << " subjects, " << episodes.size() << " episodes\n";
}

Corpus load_corpus_from_outputs(const PipelineConfig& cfg) {
  const fs::path out(cfg.out_dir);
  const fs::path ti_dir = out / "ti";
  if (!fs::is_directory(ti_dir))
    throw Error("missing " + ti_dir.string() + " (run transform or synth first)");

  Corpus corpus;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(ti_dir))
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const fs::path& p : files) {
    Corpus::Trial trial;
    const std::string stem = p.stem().string();  // SxxRyy
    if (stem.size() < 6 || stem[0] != 'S')
      throw ParseError("unrecognized signal file name: " + p.string());
    trial.subject_id = std::stoi(stem.substr(1, stem.find('R') - 1));
    trial.run_id = std::stoi(stem.substr(stem.find('R') + 1));
    trial.series = parse_ti_csv(p);
    corpus.trials.push_back(std::move(trial));
  }

  const auto episodes = parse_episodes_csv(out / "episodes.csv");
  std::map<int, double> density;
  if (fs::exists(out / "density.csv")) density = parse_density_csv(out / "density.csv");

  auto series_for = [&](int subject, int run) -> const TiSeries* {
    for (const auto& t : corpus.trials)
      if (t.subject_id == subject && t.run_id == run) return &t.series;
    return nullptr;
  };

  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const TiSeries* series = series_for(episodes[i].subject_id, episodes[i].run_id);
    if (!series)
      throw Error("episodes.csv references S" + std::to_string(episodes[i].subject_id) + "R" +
                  std::to_string(episodes[i].run_id) + " with no signal file");
    corpus.episodes.push_back({static_cast<int>(i), series, episodes[i]});
  }

  std::map<int, SubjectEval> by_subject;
  for (const auto& t : corpus.trials) {
    SubjectEval& s = by_subject[t.subject_id];
    s.subject_id = t.subject_id;
    s.series.push_back(&t.series);
    if (density.count(t.subject_id)) s.fog_density = density[t.subject_id];
  }
  for (const EpisodeRef& e : corpus.episodes)
    by_subject[e.episode.subject_id].episodes.push_back(e);
  for (auto& [id, s] : by_subject) corpus.subjects.push_back(std::move(s));
  return corpus;
}

void stage_train(const PipelineConfig& cfg, std::ostream& log) {
  const fs::path out(cfg.out_dir);
  fs::create_directories(out / "train");
  const Corpus corpus = load_corpus_from_outputs(cfg);
  if (corpus.episodes.empty()) throw Error("train: corpus has no episodes");

  const TrainResult result = run_training(cfg.train_config(), corpus.episodes);
  save_checkpoint(result.params, out / "train" / "checkpoint.bin");
  write_text_file(out / "train" / "learning_curve.csv", write_learning_curve_csv(result.curve));
  write_text_file(out / "train" / "coverage.csv",
                  write_coverage_csv(corpus.episodes, result.coverage));
  log << "train: " << result.curve.size() << " episodes, " << result.total_steps
      << " environment steps\n";
}

void stage_evaluate(const PipelineConfig& cfg, std::ostream& log) {
  const fs::path out(cfg.out_dir);
  fs::create_directories(out / "eval");
  const Corpus corpus = load_corpus_from_outputs(cfg);
  const TrainConfig train_cfg = cfg.train_config();

  std::vector<EvalReport> reports;
  if (cfg.eval_mode == EvalMode::Dependent || cfg.eval_mode == EvalMode::Both) {
    for (EvalReport& r : eval_all_dependent(corpus.subjects, train_cfg, cfg.split_fraction))
      reports.push_back(std::move(r));
  }
  if (cfg.eval_mode == EvalMode::Loso || cfg.eval_mode == EvalMode::Both) {
    for (EvalReport& r : eval_loso(corpus.subjects, train_cfg)) reports.push_back(std::move(r));
  }

  write_text_file(out / "eval" / "report.csv", write_report_csv(reports));
  write_text_file(out / "eval" / "report.md", write_report_md(reports));
  write_text_file(out / "eval" / "correlations.csv",
                  write_correlations_csv(misplacement_correlations(corpus.subjects, reports)));
  log << "evaluate: " << reports.size() << " subject reports\n";
}

void stage_report(const PipelineConfig& cfg, std::ostream& log) {
  const fs::path out(cfg.out_dir);
  fs::create_directories(out / "report");

  LearningCurve curve;
  const fs::path curve_path = out / "train" / "learning_curve.csv";
  if (fs::exists(curve_path)) {
    const std::string text = read_text_file(curve_path);
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line_no == 1 || line.empty()) continue;
      const auto f = split_char(line, ',');
      if (f.size() != 5) throw ParseError("learning_curve.csv: bad row", line_no);
      CurvePoint p;
      p.episode = parse_i64(f[0], line_no);
      p.total_return = parse_double(f[1], line_no);
      p.epsilon = parse_double(f[2], line_no);
      p.mean_abs_td = parse_double(f[3], line_no);
      p.best_avg_return = parse_double(f[4], line_no);
      curve.push_back(p);
    }
  }
  write_text_file(out / "report" / "learning_curve.svg", learning_curve_svg(curve));

  std::vector<double> dep, ind;
  const fs::path report_path = out / "eval" / "report.csv";
  if (fs::exists(report_path)) {
    for (const EvalReport& r : parse_report_csv(read_text_file(report_path))) {
      if (!r.longest_horizon_s) continue;
      (r.mode == "dependent" ? dep : ind).push_back(*r.longest_horizon_s);
    }
  }
  write_text_file(out / "report" / "horizons.svg", horizon_boxplot_svg(dep, ind));
  log << "report: wrote learning_curve.svg, horizons.svg\n";
}

// --- pipeline driver ---

namespace {

struct Stage {
  const char* name;
  void (*run)(const PipelineConfig&, std::ostream&);
};

std::vector<fs::path> stage_outputs(const std::string& stage, const PipelineConfig& cfg) {
  const fs::path out(cfg.out_dir);
  std::vector<fs::path> files;
  auto add_dir = [&](const fs::path& dir) {
    if (!fs::is_directory(dir)) return;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
  };
  if (stage == "ingest") {
    add_dir(out / "trials");
    files.push_back(out / "episodes.csv");
    files.push_back(out / "density.csv");
  } else if (stage == "synth") {
    add_dir(out / "ti");
    files.push_back(out / "episodes.csv");
    files.push_back(out / "density.csv");
  } else if (stage == "transform") {
    add_dir(out / "ti");
  } else if (stage == "train") {
    files.push_back(out / "train" / "checkpoint.bin");
    files.push_back(out / "train" / "learning_curve.csv");
    files.push_back(out / "train" / "coverage.csv");
  } else if (stage == "evaluate") {
    files.push_back(out / "eval" / "report.csv");
    files.push_back(out / "eval" / "report.md");
    files.push_back(out / "eval" / "correlations.csv");
  } else if (stage == "report") {
    files.push_back(out / "report" / "learning_curve.svg");
    files.push_back(out / "report" / "horizons.svg");
  }
  return files;
}

std::string hash_hex(const fs::path& p) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(read_text_file(p))));
  return buf;
}

}  // namespace

void run_pipeline(const PipelineConfig& cfg, bool force, std::ostream& log) {
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  const fs::path manifest_path = out / "manifest.json";

  json manifest;
  if (fs::exists(manifest_path)) {
    try {
      manifest = json::parse(read_text_file(manifest_path));
    } catch (const json::parse_error&) {
      throw Error("corrupted manifest.json; remove it or rerun with --force");
    }
    if (!force && manifest.contains("config") &&
        manifest["config"] != json::parse(cfg.to_json()))
      throw Error("configuration changed since the recorded run; rerun with --force");
  }
  if (force) manifest = json();
  manifest["version"] = 1;
  manifest["config"] = json::parse(cfg.to_json());
  if (!manifest.contains("stages")) manifest["stages"] = json::object();

  std::vector<Stage> chain;
  if (cfg.synthetic_enabled) {
    chain = {{"synth", stage_synth}};
  } else {
    chain = {{"ingest", stage_ingest}, {"transform", stage_transform}};
  }
  chain.push_back({"train", stage_train});
  chain.push_back({"evaluate", stage_evaluate});
  chain.push_back({"report", stage_report});

  for (const Stage& stage : chain) {
    bool skip = false;
    if (!force && manifest["stages"].contains(stage.name)) {
      const json& recorded = manifest["stages"][stage.name]["files"];
      skip = !recorded.empty();
      for (auto it = recorded.begin(); it != recorded.end() && skip; ++it) {
        const fs::path p = out / fs::path(it.key());
        if (!fs::exists(p)) {
          skip = false;
        } else if (hash_hex(p) != it.value().get<std::string>()) {
          throw Error(std::string("stage '") + stage.name + "' output " + p.string() +
                      " does not match the recorded hash; intermediate is corrupted "
                      "(rerun with --force to rebuild)");
        }
      }
    }
    if (skip) {
      log << stage.name << ": outputs up to date, skipping\n";
      continue;
    }
    stage.run(cfg, log);
    json files = json::object();
    for (const fs::path& p : stage_outputs(stage.name, cfg))
      files[fs::relative(p, out).generic_string()] = hash_hex(p);
    manifest["stages"][stage.name] = {{"files", files}};
    write_text_file(manifest_path, manifest.dump(2) + "\n");
  }
}

}  // namespace fogrl
