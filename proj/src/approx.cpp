#include "mbar/approx.hpp"

namespace mbar {
namespace {

Eigen::VectorXd offsets_of(std::span<const RatingDistribution> dists, const PredictorVector& predictors) {
  check_aligned(dists, predictors);
  return means_of(dists) - predictors.predictions;
}

}  // namespace

Gaussian rmse_distribution(std::span<const RatingDistribution> dists, const PredictorVector& predictors) {
  return rmse_distribution(variances_of(dists), offsets_of(dists, predictors));
}

Gaussian mae_distribution(std::span<const RatingDistribution> dists, const PredictorVector& predictors) {
  return mae_distribution(variances_of(dists), offsets_of(dists, predictors));
}

Gaussian metric_distribution(std::span<const RatingDistribution> dists, const PredictorVector& predictors,
                             MetricKind metric) {
  return metric == MetricKind::RMSE ? rmse_distribution(dists, predictors) : mae_distribution(dists, predictors);
}

}  // namespace mbar
