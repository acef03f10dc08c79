#include "fogrl/features.hpp"

#include <algorithm>
#include <cmath>

#include "fogrl/errors.hpp"

namespace fogrl {

Eigen::VectorXd StateFeatures::as_vector() const {
  Eigen::VectorXd v(6);
  v << tau_s, mean, stddev, slope, spike, zscore;
  return v;
}

double population_variance(std::span<const double> values) {
  if (values.empty()) throw ContractError("variance of empty set");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(values.size());
}

double population_stddev(std::span<const double> values) {
  return std::sqrt(population_variance(values));
}

StateFeatures extract_state(std::span<const TiValue> window, std::int64_t onset_ms,
                            std::int64_t now_ms, const FeatureConfig& cfg) {
  if (window.empty()) throw ContractError("extract_state: empty window");
  if (now_ms > onset_ms) throw ContractError("extract_state: now is past the onset");

  StateFeatures f;
  f.tau_s = static_cast<double>(onset_ms - now_ms) / 1000.0;

  const std::size_t n = window.size();
  double sum = 0.0, max_v = window[0].ti;
  for (const TiValue& v : window) {
    sum += v.ti;
    max_v = std::max(max_v, v.ti);
  }
  f.mean = sum / static_cast<double>(n);

  double sq = 0.0;
  for (const TiValue& v : window) sq += (v.ti - f.mean) * (v.ti - f.mean);
  f.stddev = std::sqrt(sq / static_cast<double>(n));

  std::vector<double> t_s(n), y(n);
  const std::int64_t t0 = window[0].t_ms;
  for (std::size_t i = 0; i < n; ++i) {
    t_s[i] = static_cast<double>(window[i].t_ms - t0) / 1000.0;
    y[i] = window[i].ti;
  }
  f.slope = ols_slope(t_s, y);

  f.spike = std::abs(max_v - f.mean);
  const double sigma_f =
      cfg.zscore_sigma == ZscoreSigma::Trial ? std::max(cfg.trial_sigma, kSigmaFloor)
                                             : std::max(f.stddev, kSigmaFloor);
  f.zscore = (max_v - f.mean) / sigma_f;
  return f;
}

std::vector<double> extract_state_ablated(std::span<const TiValue> window,
                                          const FeatureConfig& cfg) {
  if (window.empty()) throw ContractError("extract_state_ablated: empty window");
  if (cfg.raw_taps < 1) throw ContractError("extract_state_ablated: raw_taps must be >= 1");

  double lo = window[0].ti, hi = window[0].ti;
  for (const TiValue& v : window) {
    lo = std::min(lo, v.ti);
    hi = std::max(hi, v.ti);
  }
  const double range = hi - lo;
  auto scale = [&](double x) { return range > 0.0 ? (x - lo) / range : 0.5; };

  const std::size_t taps = static_cast<std::size_t>(cfg.raw_taps);
  std::vector<double> out(taps);
  for (std::size_t i = 0; i < taps; ++i) {
    // i = 0 is the oldest tap; short windows repeat their earliest sample.
    const std::size_t back = taps - 1 - i;
    const std::size_t idx = back < window.size() ? window.size() - 1 - back : 0;
    out[i] = scale(window[idx].ti);
  }
  return out;
}

StateNormalizer::StateNormalizer(StateNormMode mode, int dim, int tau_index,
                                 double horizon_s, int warmup_observations)
    : mode_(mode),
      tau_index_(tau_index),
      horizon_s_(horizon_s > 0.0 ? horizon_s : 1.0),
      warmup_(warmup_observations),
      mean_(Eigen::VectorXd::Zero(dim)),
      m2_(Eigen::VectorXd::Zero(dim)) {}

void StateNormalizer::observe(const Eigen::VectorXd& raw) {
  if (mode_ != StateNormMode::Running || frozen_) return;
  if (raw.size() != mean_.size()) throw ContractError("normalizer: dimension mismatch");
  ++count_;
  const Eigen::VectorXd delta = raw - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta.cwiseProduct(raw - mean_);
  if (count_ >= warmup_) frozen_ = true;
}

Eigen::VectorXd StateNormalizer::apply(const Eigen::VectorXd& raw) const {
  if (mode_ == StateNormMode::None) return raw;
  if (raw.size() != mean_.size()) throw ContractError("normalizer: dimension mismatch");
  Eigen::VectorXd out(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    if (i == tau_index_) {
      out(i) = raw(i) / horizon_s_;
      continue;
    }
    if (count_ < 2) {
      out(i) = raw(i);
      continue;
    }
    const double var = m2_(i) / static_cast<double>(count_);
    const double sd = std::sqrt(std::max(var, 0.0));
    out(i) = (raw(i) - mean_(i)) / std::max(sd, kSigmaFloor);
  }
  return out;
}

}  // namespace fogrl
