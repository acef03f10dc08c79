#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fogrl/config.hpp"

namespace fogrl {

// In-memory view of the working corpus a pipeline run operates on: per-trial
// signal series plus the episode pool, grouped per subject for evaluation.
struct Corpus {
  struct Trial {
    int subject_id = 0;
    int run_id = 0;
    TiSeries series;
  };
  std::vector<Trial> trials;            // stable storage for series pointers
  std::vector<EpisodeRef> episodes;     // across all subjects
  std::vector<SubjectEval> subjects;

  std::vector<FogEpisode> episode_list() const;
};

std::string write_episodes_csv(const std::vector<FogEpisode>& episodes,
                               const std::vector<double>& subject_density = {});
std::vector<FogEpisode> parse_episodes_csv(const std::filesystem::path& path);

// Parse every raw recording under data_dir and write the canonical trial
// files plus episodes.csv and density.csv under out_root.
void ingest_directory(const std::filesystem::path& data_dir,
                      const std::filesystem::path& out_root, std::ostream& log);

// Transform every canonical trial file in trials_dir into a signal series
// file of the same name in ti_dir.
void transform_directory(const std::filesystem::path& trials_dir,
                         const std::filesystem::path& ti_dir, const TiConfig& cfg,
                         std::ostream& log);

// Individual stages. Each reads its inputs from and writes its outputs under
// cfg.out_dir; see README for the directory layout.
void stage_ingest(const PipelineConfig& cfg, std::ostream& log);
void stage_transform(const PipelineConfig& cfg, std::ostream& log);
void stage_synth(const PipelineConfig& cfg, std::ostream& log);
void stage_train(const PipelineConfig& cfg, std::ostream& log);
void stage_evaluate(const PipelineConfig& cfg, std::ostream& log);
void stage_report(const PipelineConfig& cfg, std::ostream& log);

// Load the working corpus from the out_dir intermediates (signal series +
// episode file) with fog densities attached when the ingest stage wrote them.
Corpus load_corpus_from_outputs(const PipelineConfig& cfg);

// Run the stage chain in order, skipping stages whose recorded outputs are
// intact unless force is set; refuses to proceed over corrupted
// intermediates. Writes a manifest of config and output hashes.
void run_pipeline(const PipelineConfig& cfg, bool force, std::ostream& log);

}  // namespace fogrl
