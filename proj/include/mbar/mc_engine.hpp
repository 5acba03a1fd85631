#pragma once

#include "mbar/core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mbar {

/// Monte-Carlo settings. `bins == 0` selects ceil(sqrt(trials)) capped at 512.
/// `threads == 0` uses the hardware concurrency; results never depend on it.
struct MCConfig {
  std::size_t trials = 100000;
  std::size_t bins = 0;
  std::uint64_t master_seed = 20170101;
  unsigned threads = 0;
  /// Clip each draw to [low, high] before evaluating the metric. Off by
  /// default: the Gaussian rating model lives on the whole real line.
  std::optional<std::pair<double, double>> clip;

  /// Throws std::invalid_argument when trials < 1 or bins == 1.
  void validate() const;
  std::size_t resolved_bins() const;
};

/// Equal-width histogram normalized to a density: sum(height * width) == 1.
struct Histogram {
  std::vector<double> edges;
  std::vector<double> heights;

  std::size_t bins() const noexcept { return heights.size(); }
};

/// Equal-width bins over [min, max] of the values. A constant sample gets a
/// unit-wide range around the value.
Histogram make_histogram(std::span<const double> values, std::size_t bins);

/// Sample mean (compensated) and unbiased sample variance; variance 0 for a
/// single value.
Gaussian summarize(std::span<const double> values);

/// tau Monte-Carlo realizations of a metric, in trial order.
struct MetricSample {
  std::vector<double> values;
  Gaussian summary;
  Histogram histogram;

  /// Standard error of the sample mean.
  double standard_error() const;
};

MetricSample make_metric_sample(std::vector<double> values, std::size_t bins);

/// Optimal predictor per pair: the mean for RMSE, the median for MAE. Both
/// coincide with the Gaussian mean.
PredictorVector optimal_predictors(std::span<const RatingDistribution> dists, MetricKind metric);

/// Metric of one realization: sqrt(mean((x - pi)^2)) or mean(|x - pi|).
template <typename DrawDerived, typename PredDerived>
typename DrawDerived::Scalar evaluate_metric(const Eigen::MatrixBase<DrawDerived>& draws,
                                             const Eigen::MatrixBase<PredDerived>& predictions, MetricKind metric) {
  using Scalar = typename DrawDerived::Scalar;
  if (draws.size() != predictions.size()) {
    throw std::invalid_argument("evaluate_metric: draws and predictions differ in length");
  }
  const auto n = static_cast<Scalar>(draws.size());
  if (metric == MetricKind::RMSE) return std::sqrt((draws - predictions).squaredNorm() / n);
  return (draws - predictions).cwiseAbs().sum() / n;
}

/// Throws std::invalid_argument on length or key mismatch.
double evaluate_metric_once(std::span<const RatingDistribution> dists, const PredictorVector& predictors,
                            MetricKind metric, std::span<const double> draws);

/// Per-trial metric values for several systems evaluated on shared draws:
/// trial k draws every x_nu once (from the stream seeded by (master_seed, k))
/// and scores each system on the same realization. Result is [system][trial].
std::vector<std::vector<double>> simulate_systems(std::span<const RatingDistribution> dists,
                                                  std::span<const PredictorVector> systems, MetricKind metric,
                                                  const MCConfig& cfg);

MetricSample simulate_metric(std::span<const RatingDistribution> dists, const PredictorVector& predictors,
                             MetricKind metric, const MCConfig& cfg);

/// simulate_metric with the optimal predictors.
MetricSample simulate_magic_barrier(std::span<const RatingDistribution> dists, MetricKind metric,
                                    const MCConfig& cfg);

/// tau draws straight from a Gaussian, with the same per-trial seeding.
MetricSample sample_gaussian(const Gaussian& g, const MCConfig& cfg);

}  // namespace mbar
