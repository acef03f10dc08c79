#pragma once

#include <cstdint>
#include <vector>

#include "fogrl/daphnet.hpp"
#include "fogrl/dmd.hpp"

namespace fogrl {

// Desk-scale verification corpus: stationary signal with additive noise that
// switches to a deterministic downward ramp a fixed lead before each onset,
// imitating the stability-to-instability transition the live transform shows.
struct SyntheticSpec {
  int subjects = 2;
  int episodes_per_subject = 10;
  double stride_s = 0.25;        // sample spacing of the generated series
  double baseline_ti = 10.0;
  double noise_sigma = 0.3;
  double ramp_lead_s = 10.0;     // ramp starts this long before the onset
  double ramp_drop = 8.0;        // total drop across the ramp
  double onset_spacing_s = 40.0;
  double first_onset_s = 20.0;
  double freeze_duration_s = 5.0;

  void validate() const;  // throws ContractError on infeasible spacing
};

struct SyntheticTrial {
  int subject_id = 0;
  int run_id = 1;
  TiSeries series;
  std::vector<FogEpisode> episodes;
};

// Noise-free value of the generator at time t for a given onset schedule;
// the noisy series adds N(0, sigma) and clamps at zero.
double synthetic_formula(double t_s, const SyntheticSpec& spec,
                         const std::vector<double>& onsets_s);

std::vector<SyntheticTrial> generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace fogrl
