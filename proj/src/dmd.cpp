#include "fogrl/dmd.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

#include "fogrl/errors.hpp"
#include "fogrl/io_util.hpp"

namespace fogrl {

DmdResult compute_dmd(const SnapshotMatrix& snapshots, double energy_threshold) {
  if (snapshots.cols() < 2)
    throw ContractError("compute_dmd: need at least two snapshot columns");
  if (!(energy_threshold > 0.0 && energy_threshold <= 1.0))
    throw ContractError("compute_dmd: energy threshold must be in (0, 1]");
  if (!snapshots.allFinite())
    throw ContractError("compute_dmd: snapshots contain non-finite values");

  const Eigen::Index m = snapshots.cols();
  const SnapshotMatrix x = snapshots.leftCols(m - 1);
  const SnapshotMatrix x_next = snapshots.rightCols(m - 1);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();

  const double total_energy = sigma.squaredNorm();
  if (total_energy <= 0.0)
    throw DegenerateInputError("compute_dmd: zero-energy snapshots (rank 0)");

  // Smallest rank reaching the energy threshold; exactly-zero tail values
  // never count even when the threshold is 1.
  int rank = 0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) <= sigma(0) * 1e-14) break;
    acc += sigma(i) * sigma(i);
    rank = static_cast<int>(i) + 1;
    if (acc >= energy_threshold * total_energy) break;
  }

  const Eigen::MatrixXd u_r = svd.matrixU().leftCols(rank);
  const Eigen::MatrixXd v_r = svd.matrixV().leftCols(rank);
  const Eigen::VectorXd sigma_inv = sigma.head(rank).cwiseInverse();

  const Eigen::MatrixXd a_tilde =
      u_r.transpose() * x_next * v_r * sigma_inv.asDiagonal();

  Eigen::EigenSolver<Eigen::MatrixXd> eig(a_tilde);
  if (eig.info() != Eigen::Success)
    throw DegenerateInputError("compute_dmd: eigendecomposition failed");

  DmdResult result;
  result.rank = rank;
  result.eigenvalues = eig.eigenvalues();
  result.modes = (x_next * v_r * sigma_inv.asDiagonal()).cast<std::complex<double>>() *
                 eig.eigenvectors();

  // Amplitudes: least-squares fit of the modes to the first snapshot.
  const Eigen::VectorXcd x1 = snapshots.col(0).cast<std::complex<double>>();
  result.amplitudes = result.modes.colPivHouseholderQr().solve(x1);

  return result;
}

TiValue triple_index(const DmdResult& dmd) {
  if (dmd.rank < 1) throw ContractError("triple_index: need at least one mode");
  double max_amp = 0.0;
  double norm_sum = 0.0;
  for (int k = 0; k < dmd.rank; ++k) {
    max_amp = std::max(max_amp, std::abs(dmd.amplitudes(k)));
    norm_sum += dmd.modes.col(k).norm();
  }
  TiValue v;
  v.max_amplitude = max_amp;
  v.mean_mode_norm = norm_sum / static_cast<double>(dmd.rank);
  v.ti = v.mean_mode_norm * v.max_amplitude;
  return v;
}

SnapshotMatrix delay_embed(const Eigen::MatrixXd& window_channels, int delay) {
  if (delay < 1) throw ContractError("delay_embed: delay must be >= 1");
  const Eigen::Index n = window_channels.rows();      // samples in window
  const Eigen::Index c = window_channels.cols();      // channels
  const Eigen::Index cols = n - delay + 1;
  if (cols < 2)
    throw ContractError("delay_embed: window too short for the delay depth");

  SnapshotMatrix snap(static_cast<Eigen::Index>(delay) * c, cols);
  for (Eigen::Index k = 0; k < cols; ++k) {
    Eigen::Index row = 0;
    for (Eigen::Index ch = 0; ch < c; ++ch) {
      for (int j = 0; j < delay; ++j) {
        snap(row++, k) = window_channels(k + delay - 1 - j, ch);
      }
    }
  }
  return snap;
}

TiSeries ti_series(const RawTrial& trial, const TiConfig& cfg) {
  if (cfg.stride_s <= 0.0) throw ContractError("ti_series: stride must be positive");
  if (trial.sample_rate_hz <= 0.0) throw ContractError("ti_series: bad sample rate");

  std::vector<int> channels = cfg.channels;
  if (channels.empty()) {
    channels.resize(9);
    for (int i = 0; i < 9; ++i) channels[static_cast<std::size_t>(i)] = i;
  }
  for (int ch : channels)
    if (ch < 0 || ch >= 9) throw ContractError("ti_series: channel index out of range");

  const auto n_window =
      static_cast<std::size_t>(std::lround(cfg.window_s * trial.sample_rate_hz));
  const auto n_stride =
      static_cast<std::size_t>(std::lround(cfg.stride_s * trial.sample_rate_hz));
  if (n_stride == 0) throw ContractError("ti_series: stride shorter than one sample");
  if (n_window < static_cast<std::size_t>(cfg.delay) + 1)
    throw ContractError("ti_series: window too short for the delay embedding");

  TiSeries series;
  const auto& samples = trial.samples;
  if (samples.size() < n_window) return series;  // shorter than one window

  for (std::size_t start = 0; start + n_window <= samples.size(); start += n_stride) {
    bool in_experiment = true;
    for (std::size_t i = start; i < start + n_window; ++i) {
      if (samples[i].annotation == static_cast<int>(Annotation::OutOfExperiment)) {
        in_experiment = false;
        break;
      }
    }
    if (!in_experiment) continue;

    Eigen::MatrixXd window(static_cast<Eigen::Index>(n_window),
                           static_cast<Eigen::Index>(channels.size()));
    for (std::size_t i = 0; i < n_window; ++i)
      for (std::size_t ch = 0; ch < channels.size(); ++ch)
        window(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(ch)) =
            samples[start + i].channels[static_cast<std::size_t>(channels[ch])];

    TiValue value;
    value.t_ms = samples[start + n_window - 1].t_ms;
    try {
      value = triple_index(compute_dmd(delay_embed(window, cfg.delay), cfg.energy_threshold));
      value.t_ms = samples[start + n_window - 1].t_ms;
    } catch (const DegenerateInputError&) {
      // Zero-energy window: ti = 0 by convention.
      value.ti = 0.0;
      value.max_amplitude = 0.0;
      value.mean_mode_norm = 0.0;
    }
    series.push_back(value);
  }
  return series;
}

std::string write_ti_csv(const TiSeries& series) {
  std::string out = "t_ms,ti\n";
  for (const TiValue& v : series) {
    out += std::to_string(v.t_ms);
    out += ',';
    out += format_double(v.ti);
    out += '\n';
  }
  return out;
}

TiSeries parse_ti_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  TiSeries series;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line.rfind("t_ms,ti", 0) != 0)
        throw ParseError("missing ti header: " + path.string(), 1);
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_char(line, ',');
    if (f.size() < 2)
      throw ParseError("ti row needs t_ms,ti (line " + std::to_string(line_no) + ")", line_no);
    TiValue v;
    v.t_ms = parse_i64(f[0], line_no);
    v.ti = parse_double(f[1], line_no);
    series.push_back(v);
  }
  return series;
}

double ols_slope(const std::vector<double>& t_s, const std::vector<double>& y) {
  const std::size_t n = t_s.size();
  if (n != y.size()) throw ContractError("ols_slope: length mismatch");
  if (n < 2) return 0.0;
  double mean_t = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_t += t_s[i];
    mean_y += y[i];
  }
  mean_t /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double cov = 0.0, var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (t_s[i] - mean_t) * (y[i] - mean_y);
    var += (t_s[i] - mean_t) * (t_s[i] - mean_t);
  }
  if (var == 0.0) return 0.0;
  return cov / var;
}

}  // namespace fogrl
