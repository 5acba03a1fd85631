#pragma once

#include "mbar/approx.hpp"
#include "mbar/core.hpp"
#include "mbar/mc_engine.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace mbar {

/// Probability masses over shared bin edges.
struct DiscreteDensity {
  std::vector<double> edges;
  Eigen::VectorXd masses;

  /// Throws std::invalid_argument unless edges.size() == masses.size() + 1,
  /// masses >= 0 and masses sum to 1 within 1e-9.
  void validate() const;

  static DiscreteDensity from_histogram(const Histogram& h);
  /// CDF differences of `g` over the edges, renormalized to the covered range.
  static DiscreteDensity from_gaussian(const Gaussian& g, std::vector<double> edges);
  /// Redistributes mass onto new edges assuming uniform density inside each
  /// source bin. Mass outside the new range is dropped before renormalizing.
  DiscreteDensity rebinned(std::vector<double> new_edges) const;
};

/// sum p_i log2(p_i / q_i) over p_i > 0; +inf when q_i = 0 < p_i.
double kl_divergence(const DiscreteDensity& p, const DiscreteDensity& q);

/// Jensen-Shannon divergence in bits (base 2, so at most 1) divided by
/// `normalizer`.
double jsd(const DiscreteDensity& p, const DiscreteDensity& q, double normalizer = 1.0);

/// Normalized JSD of a simulated sample against a Gaussian approximation,
/// both binned on the sample's histogram edges.
double sample_vs_gaussian_jsd(const MetricSample& sample, const Gaussian& approx, double normalizer = 1.0);

/// P(A > B) for independent Gaussians: Phi((a.mean - b.mean)/sqrt(a.var + b.var)).
/// Two point masses give 1, 0 or 0.5 (tie) by comparing means.
template <typename Scalar>
Scalar interference_probability(const GaussianSummary<Scalar>& a, const GaussianSummary<Scalar>& b) {
  const Scalar total = a.variance + b.variance;
  if (!(total > Scalar(0))) {
    if (a.mean > b.mean) return Scalar(1);
    if (a.mean < b.mean) return Scalar(0);
    return Scalar(0.5);
  }
  return standard_normal_cdf((a.mean - b.mean) / std::sqrt(total));
}

/// The same probability by numeric quadrature of int f_B(x) (1 - F_A(x)) dx
/// (or its integrated-by-parts twin int f_A(x) F_B(x) dx, whichever variable
/// is narrower), composite Simpson over +-12 standard deviations.
double interference_probability_quadrature(const Gaussian& a, const Gaussian& b);

struct ProbabilityEstimate {
  double probability = 0.0;
  double standard_error = 0.0;
};

/// Trial-wise estimator: fraction of trials with a_k > b_k. Samples must come
/// from the same trial sequence (shared draws) or be independent.
ProbabilityEstimate interference_probability(const MetricSample& a, const MetricSample& b);

struct CriterionResult {
  /// 99% intervals overlap: mb.mean + 3 sd_mb > rmse.mean - 3 sd_rmse.
  bool differentiated_analysis_needed = false;
  /// (rmse.mean - 3 sd_rmse) - (mb.mean + 3 sd_mb); negative when needed.
  double margin = 0.0;
  /// Simplified rule assuming equal variances: rmse.mean - mb.mean < 6 sd_mb.
  bool simplified_needed = false;
  double mean_gap = 0.0;
  double simplified_threshold = 0.0;
};

CriterionResult improvement_criterion(const Gaussian& mb, const Gaussian& rmse);

enum class SweepAxis { NumRatings, Variance };

struct SensitivityRow {
  double axis_value = 0.0;
  Gaussian barrier;
  /// Barrier at the smallest / largest nonzero variance the scale allows.
  Gaussian lower;
  Gaussian upper;
};

/// Barrier over homogeneous inputs along one axis. For NumRatings the grid
/// holds N values and `fixed` is the shared variance; for Variance the grid
/// holds variances and `fixed` is N.
std::vector<SensitivityRow> sensitivity_sweep(SweepAxis axis, std::span<const double> grid, double fixed,
                                              const ScaleSpec& scale);

struct NoiseSweepConfig {
  std::vector<double> relative_differences;
  std::vector<double> offsets;
  Eigen::VectorXd base_variances;
  double noise_scale = 1.0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on negative deltas, decreasing offsets,
  /// empty grids or an empty variance list.
  void validate() const;
};

/// Predictor offsets of magnitude level * noise_scale, sign alternating by pair.
Eigen::VectorXd noise_offsets(Eigen::Index n, double level, double noise_scale);

struct RankingErrorRow {
  double delta = 0.0;
  double offset = 0.0;
  double error_probability = 0.5;
};

/// For each (delta, offset): system 1 carries noise `offset`, system 2 carries
/// `offset + delta`; the point-paradigm error is P(RMSE_2 < RMSE_1) from the
/// closed-form RMSE distributions. Rows ordered delta-major.
std::vector<RankingErrorRow> ranking_error_curves(const NoiseSweepConfig& cfg);

/// Same table estimated by independent Monte-Carlo runs of both systems per
/// grid point (seeds derived from cfg.seed).
std::vector<RankingErrorRow> ranking_error_curves_simulated(const NoiseSweepConfig& cfg, const MCConfig& mc);

/// Tally of observed rankings (system indices, best first) over shared-draw
/// trials.
struct RankDistribution {
  std::map<std::vector<std::size_t>, std::size_t> counts;
  std::size_t trials = 0;

  double probability(const std::vector<std::size_t>& ordering) const;
  std::map<std::vector<std::size_t>, double> probabilities() const;
};

RankDistribution rank_distribution(std::span<const PredictorVector> systems,
                                   std::span<const RatingDistribution> dists, MetricKind metric,
                                   const MCConfig& cfg);

}  // namespace mbar
