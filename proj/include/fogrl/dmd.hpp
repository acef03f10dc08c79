#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "fogrl/daphnet.hpp"

namespace fogrl {

// Columns are delay-embedded state vectors x_k; at least two are required
// for the decomposition.
using SnapshotMatrix = Eigen::MatrixXd;

struct DmdResult {
  Eigen::VectorXcd eigenvalues;  // per retained mode
  Eigen::MatrixXcd modes;        // one column per retained mode
  Eigen::VectorXcd amplitudes;   // least-squares fit against the first snapshot
  int rank = 0;
};

struct TiValue {
  std::int64_t t_ms = 0;  // window-end timestamp
  double ti = 0.0;
  double max_amplitude = 0.0;  // a
  double mean_mode_norm = 0.0; // m
};

using TiSeries = std::vector<TiValue>;

struct TiConfig {
  double window_s = 2.0;
  double stride_s = 0.25;
  int delay = 10;
  std::vector<int> channels;  // empty = all 9
  double energy_threshold = 0.99;
};

// Exact DMD of a snapshot matrix. Splits into X (columns 1..m-1) and
// X' (columns 2..m), takes the thin SVD of X, truncates at the smallest rank
// whose cumulative squared singular-value energy reaches the threshold, and
// eigendecomposes the projected operator. Modes are left unnormalized and the
// amplitudes are fit against them, so the product m*a is insensitive to how
// norm is split between the two factors.
// Throws DegenerateInputError when the snapshots carry no energy at all.
DmdResult compute_dmd(const SnapshotMatrix& snapshots, double energy_threshold);

// a = max_k |alpha_k|, m = mean_k ||phi_k||, ti = m * a.
TiValue triple_index(const DmdResult& dmd);

// Delay-embed a window of channel data: one column per admissible step,
// rows are [ch_0 lag 0..d-1, ch_1 lag 0..d-1, ...].
SnapshotMatrix delay_embed(const Eigen::MatrixXd& window_channels, int delay);

// Slide a window over the trial and compute one TiValue per position,
// stamped at the window end. Windows containing any out-of-experiment sample
// are skipped; windows with no signal energy produce ti = 0.
TiSeries ti_series(const RawTrial& trial, const TiConfig& cfg);

// Columnar text format "t_ms,ti"; parse/write round-trip exactly.
std::string write_ti_csv(const TiSeries& series);
TiSeries parse_ti_csv(const std::filesystem::path& path);

// Ordinary least-squares slope of (t_s, y) pairs. Zero for fewer than two
// points or zero time spread. Shared by the feature extractor and tests.
double ols_slope(const std::vector<double>& t_s, const std::vector<double>& y);

}  // namespace fogrl
