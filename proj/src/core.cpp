#include "mbar/core.hpp"

#include "mbar/error.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <functional>
#include <stdexcept>

namespace mbar {

void ScaleSpec::validate() const {
  if (min_category >= max_category) {
    throw std::invalid_argument("scale: min_category must be below max_category");
  }
  if (num_trials < 1) throw std::invalid_argument("scale: num_trials must be at least 1");
}

const char* to_string(MetricKind kind) noexcept {
  return kind == MetricKind::RMSE ? "rmse" : "mae";
}

MetricKind parse_metric(const std::string& name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "rmse") return MetricKind::RMSE;
  if (lower == "mae") return MetricKind::MAE;
  throw std::invalid_argument("unknown metric '" + name + "' (expected rmse or mae)");
}

VarianceBounds variance_bounds(const ScaleSpec& scale) {
  scale.validate();
  if (scale.num_trials < 2) throw DataError("no nonzero variance attainable");

  // Population variance of a multiset is (t*sum(x^2) - sum(x)^2) / t^2; the
  // numerator is an exact integer, so comparisons happen on it.
  const std::int64_t t = scale.num_trials;
  std::int64_t best_min = 0;
  std::int64_t best_max = 0;

  std::function<void(int, int, std::int64_t, std::int64_t)> visit =
      [&](int remaining, int lowest, std::int64_t sum, std::int64_t sum_sq) {
        if (remaining == 0) {
          const std::int64_t numerator = t * sum_sq - sum * sum;
          if (numerator > 0 && (best_min == 0 || numerator < best_min)) best_min = numerator;
          best_max = std::max(best_max, numerator);
          return;
        }
        for (int v = lowest; v <= scale.max_category; ++v) {
          visit(remaining - 1, v, sum + v, sum_sq + std::int64_t{v} * v);
        }
      };
  visit(scale.num_trials, scale.min_category, 0, 0);

  const double denom = static_cast<double>(t * t);
  return {static_cast<double>(best_min) / denom, static_cast<double>(best_max) / denom};
}

double population_variance(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double n = static_cast<double>(values.size());
  const double mean = compensated_sum(values) / n;
  Eigen::VectorXd sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[static_cast<Eigen::Index>(i)] = (values[i] - mean) * (values[i] - mean);
  return compensated_sum(sq) / n;
}

Eigen::VectorXd means_of(std::span<const RatingDistribution> dists) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(dists.size()));
  for (std::size_t i = 0; i < dists.size(); ++i) out[static_cast<Eigen::Index>(i)] = dists[i].mean;
  return out;
}

Eigen::VectorXd variances_of(std::span<const RatingDistribution> dists) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(dists.size()));
  for (std::size_t i = 0; i < dists.size(); ++i) out[static_cast<Eigen::Index>(i)] = dists[i].variance;
  return out;
}

std::vector<PairKey> keys_of(std::span<const RatingDistribution> dists) {
  std::vector<PairKey> keys;
  keys.reserve(dists.size());
  for (const auto& d : dists) keys.emplace_back(d.user_id, d.item_id);
  return keys;
}

void check_aligned(std::span<const RatingDistribution> dists, const PredictorVector& predictors) {
  if (predictors.keys.size() != dists.size() ||
      static_cast<std::size_t>(predictors.predictions.size()) != dists.size()) {
    throw std::invalid_argument("predictor vector length " + std::to_string(predictors.keys.size()) +
                                " does not match " + std::to_string(dists.size()) + " rating distributions");
  }
  for (std::size_t i = 0; i < dists.size(); ++i) {
    if (predictors.keys[i].first != dists[i].user_id || predictors.keys[i].second != dists[i].item_id) {
      throw std::invalid_argument("predictor key mismatch at index " + std::to_string(i) + ": (" +
                                  predictors.keys[i].first + "," + predictors.keys[i].second + ") vs (" +
                                  dists[i].user_id + "," + dists[i].item_id + ")");
    }
  }
}

}  // namespace mbar
