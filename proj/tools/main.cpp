#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "fogrl/config.hpp"
#include "fogrl/errors.hpp"
#include "fogrl/io_util.hpp"
#include "fogrl/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUserError = 1;
constexpr int kExitInternal = 2;

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> data_dir;
  std::optional<std::string> in_dir;
  std::optional<double> window_s;
  std::optional<double> stride_s;
  std::optional<std::string> mode;
  std::optional<std::string> trace_dir;
  bool dump_states = false;
  bool force = false;
  bool synthetic = false;
  bool print_config = false;
};

fogrl::PipelineConfig effective_config(const CliOptions& opt) {
  fogrl::PipelineConfig cfg;
  if (!opt.config_path.empty()) cfg = fogrl::PipelineConfig::load(opt.config_path);
  else cfg.apply_env_overrides();
  // CLI flags win over file and environment; each maps to one config key.
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.out_dir) cfg.out_dir = *opt.out_dir;
  if (opt.data_dir) cfg.data_dir = *opt.data_dir;
  if (opt.window_s) cfg.transform.window_s = *opt.window_s;
  if (opt.stride_s) cfg.transform.stride_s = *opt.stride_s;
  if (opt.mode) cfg.eval_mode = fogrl::eval_mode_from_string(*opt.mode);
  if (opt.synthetic) cfg.synthetic_enabled = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pre-onset gait-freeze warning pipeline"};
  app.require_subcommand(0, 1);

  CliOptions opt;
  app.add_option("--config", opt.config_path, "Pipeline config JSON");
  app.add_option("--seed", opt.seed, "Override the run seed");
  app.add_flag("--print-config", opt.print_config, "Print the effective config and exit");

  auto* ingest = app.add_subcommand("ingest", "Parse raw recordings into canonical trial files");
  ingest->add_option("--data-dir", opt.data_dir, "Directory of raw SxxRyy recordings")
      ->required();
  ingest->add_option("--out", opt.out_dir, "Output root (trials/ lands beneath)")->required();

  auto* transform = app.add_subcommand("transform", "Turn canonical trials into signal series");
  transform->add_option("--in", opt.in_dir, "Directory of canonical trial files")->required();
  transform->add_option("--out", opt.out_dir, "Directory for the series files")->required();
  transform->add_option("--window", opt.window_s, "Decomposition window, seconds");
  transform->add_option("--stride", opt.stride_s, "Window stride, seconds");

  auto* train = app.add_subcommand("train", "Train the wait/place agent on the whole corpus");
  train->add_option("--config", opt.config_path, "Pipeline config JSON");
  train->add_option("--out", opt.out_dir, "Pipeline root holding ti/ and episodes.csv");

  auto* evaluate = app.add_subcommand("evaluate", "Run the evaluation protocols");
  evaluate->add_option("--config", opt.config_path, "Pipeline config JSON");
  evaluate->add_option("--out", opt.out_dir, "Pipeline root");
  evaluate->add_option("--mode", opt.mode, "loso | dependent | both");
  evaluate->add_option("--trace", opt.trace_dir, "Directory for per-rollout trace CSVs");
  evaluate->add_flag("--dump-states", opt.dump_states, "Also dump normalized state rows");

  auto* report = app.add_subcommand("report", "Emit SVG plots from recorded outputs");
  report->add_option("--out", opt.out_dir, "Pipeline root");
  report->add_option("--config", opt.config_path, "Pipeline config JSON");

  auto* synth = app.add_subcommand("synth", "Generate the synthetic verification corpus");
  synth->add_option("--out", opt.out_dir, "Pipeline root");
  synth->add_option("--config", opt.config_path, "Pipeline config JSON");

  auto* all = app.add_subcommand("all", "Run every stage in order");
  all->add_option("--config", opt.config_path, "Pipeline config JSON");
  all->add_option("--out", opt.out_dir, "Pipeline root");
  all->add_option("--mode", opt.mode, "loso | dependent | both");
  all->add_flag("--force", opt.force, "Rerun stages even when outputs are up to date");
  all->add_flag("--synthetic", opt.synthetic, "Use the synthetic corpus instead of ingest");

  CLI11_PARSE(app, argc, argv);

  try {
    fogrl::PipelineConfig cfg = effective_config(opt);

    if (opt.print_config) {
      std::cout << cfg.to_json();
      return kExitOk;
    }

    if (ingest->parsed()) {
      fogrl::ingest_directory(cfg.data_dir, cfg.out_dir, std::cout);
    } else if (transform->parsed()) {
      fogrl::transform_directory(*opt.in_dir, cfg.out_dir, cfg.transform, std::cout);
    } else if (train->parsed()) {
      fogrl::stage_train(cfg, std::cout);
    } else if (evaluate->parsed()) {
      if (opt.trace_dir) {
        fogrl::EvalDebug debug;
        debug.trace_dir = *opt.trace_dir;
        debug.dump_states = opt.dump_states;
        fs::create_directories(debug.trace_dir);
        const fogrl::Corpus corpus = fogrl::load_corpus_from_outputs(cfg);
        const fogrl::TrainConfig train_cfg = cfg.train_config();
        std::vector<fogrl::EvalReport> reports;
        if (cfg.eval_mode != fogrl::EvalMode::Loso)
          for (auto& r : fogrl::eval_all_dependent(corpus.subjects, train_cfg,
                                                   cfg.split_fraction, &debug))
            reports.push_back(std::move(r));
        if (cfg.eval_mode != fogrl::EvalMode::Dependent)
          for (auto& r : fogrl::eval_loso(corpus.subjects, train_cfg, &debug))
            reports.push_back(std::move(r));
        fs::create_directories(fs::path(cfg.out_dir) / "eval");
        fogrl::write_text_file(fs::path(cfg.out_dir) / "eval" / "report.csv",
                               fogrl::write_report_csv(reports));
        fogrl::write_text_file(fs::path(cfg.out_dir) / "eval" / "report.md",
                               fogrl::write_report_md(reports));
        fogrl::write_text_file(
            fs::path(cfg.out_dir) / "eval" / "correlations.csv",
            fogrl::write_correlations_csv(
                fogrl::misplacement_correlations(corpus.subjects, reports)));
      } else {
        fogrl::stage_evaluate(cfg, std::cout);
      }
    } else if (report->parsed()) {
      fogrl::stage_report(cfg, std::cout);
    } else if (synth->parsed()) {
      fogrl::stage_synth(cfg, std::cout);
    } else if (all->parsed()) {
      fogrl::run_pipeline(cfg, opt.force, std::cout);
    } else {
      std::cerr << app.help();
      return kExitUserError;
    }
    return kExitOk;
  } catch (const fogrl::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const fogrl::ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const fogrl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
