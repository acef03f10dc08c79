#include "fogrl/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "fogrl/errors.hpp"
#include "fogrl/rng.hpp"

namespace fogrl {

void SyntheticSpec::validate() const {
  if (subjects < 1 || episodes_per_subject < 1)
    throw ContractError("synthetic: counts must be positive");
  if (stride_s <= 0.0) throw ContractError("synthetic: stride must be positive");
  if (ramp_lead_s <= 0.0 || ramp_drop <= 0.0)
    throw ContractError("synthetic: ramp must have positive lead and drop");
  if (freeze_duration_s <= 0.0) throw ContractError("synthetic: freeze duration must be positive");
  if (first_onset_s < ramp_lead_s)
    throw ContractError("synthetic: infeasible spacing, first onset precedes the ramp lead");
  if (onset_spacing_s <= freeze_duration_s + ramp_lead_s)
    throw ContractError("synthetic: infeasible spacing, onsets closer than freeze + ramp lead");
  if (ramp_drop > baseline_ti)
    throw ContractError("synthetic: ramp would drive the signal negative");
}

double synthetic_formula(double t_s, const SyntheticSpec& spec,
                         const std::vector<double>& onsets_s) {
  for (double onset : onsets_s) {
    const double ramp_start = onset - spec.ramp_lead_s;
    if (t_s >= ramp_start && t_s < onset) {
      return spec.baseline_ti - spec.ramp_drop * (t_s - ramp_start) / spec.ramp_lead_s;
    }
    if (t_s >= onset && t_s <= onset + spec.freeze_duration_s) {
      return spec.baseline_ti - spec.ramp_drop;
    }
  }
  return spec.baseline_ti;
}

std::vector<SyntheticTrial> generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);

  std::vector<SyntheticTrial> trials;
  for (int s = 0; s < spec.subjects; ++s) {
    SyntheticTrial trial;
    // Synthetic subjects live above the real-subject id range.
    trial.subject_id = 101 + s;
    trial.run_id = 1;

    std::vector<double> onsets_s;
    for (int e = 0; e < spec.episodes_per_subject; ++e)
      onsets_s.push_back(spec.first_onset_s + spec.onset_spacing_s * e);
    const double total_s = onsets_s.back() + spec.freeze_duration_s + spec.onset_spacing_s / 2.0;

    const auto stride_ms = static_cast<std::int64_t>(std::llround(spec.stride_s * 1000.0));
    for (std::int64_t t_ms = stride_ms; t_ms <= static_cast<std::int64_t>(total_s * 1000.0);
         t_ms += stride_ms) {
      const double t_s = static_cast<double>(t_ms) / 1000.0;
      TiValue v;
      v.t_ms = t_ms;
      const double noise = spec.noise_sigma > 0.0 ? rng.gaussian(0.0, spec.noise_sigma) : 0.0;
      v.ti = std::max(0.0, synthetic_formula(t_s, spec, onsets_s) + noise);
      trial.series.push_back(v);
    }

    std::int64_t prev_end_ms = 0;
    for (double onset : onsets_s) {
      FogEpisode ep;
      ep.subject_id = trial.subject_id;
      ep.run_id = trial.run_id;
      ep.onset_ms = static_cast<std::int64_t>(std::llround(onset * 1000.0));
      ep.end_ms =
          static_cast<std::int64_t>(std::llround((onset + spec.freeze_duration_s) * 1000.0));
      ep.pre_window_start_ms = prev_end_ms == 0 ? trial.series.front().t_ms
                                                : prev_end_ms + stride_ms;
      prev_end_ms = ep.end_ms;
      trial.episodes.push_back(ep);
    }
    trials.push_back(std::move(trial));
  }
  return trials;
}

}  // namespace fogrl
