#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mbar {

/// Discrete rating scale plus the number of repeated ratings per user-item pair.
struct ScaleSpec {
  int min_category = 1;
  int max_category = 5;
  int num_trials = 5;

  /// Throws std::invalid_argument when min >= max or num_trials < 1.
  void validate() const;

  bool contains(int rating) const noexcept {
    return rating >= min_category && rating <= max_category;
  }
};

/// Latent rating of one user-item pair, X ~ N(mean, variance).
struct RatingDistribution {
  std::string user_id;
  std::string item_id;
  double mean = 0.0;
  double variance = 0.0;

  friend bool operator==(const RatingDistribution&, const RatingDistribution&) = default;
};

using PairKey = std::pair<std::string, std::string>;

/// One recommender system: a real-valued prediction per user-item pair, in the
/// same key order as the rating distributions it is evaluated against.
struct PredictorVector {
  std::vector<PairKey> keys;
  Eigen::VectorXd predictions;

  std::size_t size() const noexcept { return keys.size(); }
};

enum class MetricKind { RMSE, MAE };

const char* to_string(MetricKind kind) noexcept;
/// Accepts "rmse"/"mae" in any case. Throws std::invalid_argument otherwise.
MetricKind parse_metric(const std::string& name);

/// Mean/variance of a metric-level distribution, treated as a Gaussian.
template <typename Scalar>
struct GaussianSummary {
  Scalar mean{0};
  Scalar variance{0};

  Scalar stddev() const { return std::sqrt(variance); }

  /// Density. A zero-variance summary is a point mass: returns +inf at the
  /// mean and 0 elsewhere.
  Scalar pdf(Scalar x) const {
    if (variance <= Scalar(0)) {
      return x == mean ? std::numeric_limits<Scalar>::infinity() : Scalar(0);
    }
    const Scalar z = (x - mean) / stddev();
    return std::exp(Scalar(-0.5) * z * z) / (stddev() * std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>));
  }

  /// Distribution function; a step at the mean when variance is zero.
  Scalar cdf(Scalar x) const {
    if (variance <= Scalar(0)) return x < mean ? Scalar(0) : Scalar(1);
    return Scalar(0.5) * std::erfc(-(x - mean) / (stddev() * std::numbers::sqrt2_v<Scalar>));
  }

  friend bool operator==(const GaussianSummary&, const GaussianSummary&) = default;
};

using Gaussian = GaussianSummary<double>;

template <typename Scalar>
Scalar gaussian_cdf(const GaussianSummary<Scalar>& g, Scalar x) {
  return g.cdf(x);
}

template <typename Scalar>
Scalar gaussian_pdf(const GaussianSummary<Scalar>& g, Scalar x) {
  return g.pdf(x);
}

/// Standard normal distribution function.
template <typename Scalar>
Scalar standard_normal_cdf(Scalar z) {
  return Scalar(0.5) * std::erfc(-z / std::numbers::sqrt2_v<Scalar>);
}

/// Smallest nonzero and largest population variance attainable by
/// `num_trials` integer ratings on the scale.
struct VarianceBounds {
  double min_nonzero = 0.0;
  double max = 0.0;
};

/// Exhaustive enumeration over multisets of size num_trials. Throws DataError
/// ("no nonzero variance attainable") when num_trials < 2.
VarianceBounds variance_bounds(const ScaleSpec& scale);

/// Population variance (divide by n) of integer or real values.
double population_variance(std::span<const double> values);

/// Neumaier-compensated sum; result does not depend on how the input was
/// produced or partitioned beyond rounding of the final value.
template <typename Derived>
typename Derived::Scalar compensated_sum(const Eigen::DenseBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  Scalar sum{0};
  Scalar carry{0};
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const Scalar v = values.derived().coeff(i);
    const Scalar t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

inline double compensated_sum(std::span<const double> values) {
  return compensated_sum(Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
}

Eigen::VectorXd means_of(std::span<const RatingDistribution> dists);
Eigen::VectorXd variances_of(std::span<const RatingDistribution> dists);
std::vector<PairKey> keys_of(std::span<const RatingDistribution> dists);

/// Throws std::invalid_argument when the predictor keys do not match the
/// distributions index-for-index.
void check_aligned(std::span<const RatingDistribution> dists, const PredictorVector& predictors);

}  // namespace mbar
