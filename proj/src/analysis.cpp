#include "mbar/analysis.hpp"

#include "mbar/error.hpp"
#include "mbar/random.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mbar {
namespace {

void require_same_edges(const DiscreteDensity& p, const DiscreteDensity& q) {
  if (p.edges.size() != q.edges.size() || p.masses.size() != q.masses.size()) {
    throw std::invalid_argument("densities have different bin edges");
  }
  for (std::size_t i = 0; i < p.edges.size(); ++i) {
    const double scale = std::max({1.0, std::abs(p.edges[i]), std::abs(q.edges[i])});
    if (std::abs(p.edges[i] - q.edges[i]) > 1e-12 * scale) {
      throw std::invalid_argument("densities have different bin edges");
    }
  }
}

void require_edges(const std::vector<double>& edges) {
  if (edges.size() < 2) throw std::invalid_argument("need at least two bin edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw std::invalid_argument("bin edges must increase");
  }
}

// Composite Simpson of phi(t) * h(t) over t in [-12, 12].
template <typename F>
double simpson_against_normal(F h) {
  constexpr int intervals = 4800;
  constexpr double lo = -12.0;
  constexpr double hi = 12.0;
  const double step = (hi - lo) / intervals;
  const Gaussian standard{0.0, 1.0};
  double sum = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double t = lo + step * i;
    const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += w * standard.pdf(t) * h(t);
  }
  return sum * step / 3.0;
}

}  // namespace

void DiscreteDensity::validate() const {
  require_edges(edges);
  if (edges.size() != static_cast<std::size_t>(masses.size()) + 1) {
    throw std::invalid_argument("density needs one more edge than masses");
  }
  if ((masses.array() < 0.0).any()) throw std::invalid_argument("density has negative mass");
  if (std::abs(compensated_sum(masses) - 1.0) > 1e-9) throw std::invalid_argument("density masses do not sum to 1");
}

DiscreteDensity DiscreteDensity::from_histogram(const Histogram& h) {
  DiscreteDensity d;
  d.edges = h.edges;
  d.masses.resize(static_cast<Eigen::Index>(h.heights.size()));
  for (std::size_t i = 0; i < h.heights.size(); ++i) {
    d.masses[static_cast<Eigen::Index>(i)] = h.heights[i] * (h.edges[i + 1] - h.edges[i]);
  }
  d.masses /= compensated_sum(d.masses);
  return d;
}

DiscreteDensity DiscreteDensity::from_gaussian(const Gaussian& g, std::vector<double> edges) {
  require_edges(edges);
  DiscreteDensity d;
  d.masses.resize(static_cast<Eigen::Index>(edges.size() - 1));
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    d.masses[static_cast<Eigen::Index>(i)] = std::max(0.0, g.cdf(edges[i + 1]) - g.cdf(edges[i]));
  }
  const double total = compensated_sum(d.masses);
  if (!(total > 0.0)) throw DegenerateError("Gaussian puts no mass on the given bins");
  d.masses /= total;
  d.edges = std::move(edges);
  return d;
}

DiscreteDensity DiscreteDensity::rebinned(std::vector<double> new_edges) const {
  require_edges(new_edges);
  DiscreteDensity out;
  out.masses = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(new_edges.size() - 1));
  for (Eigen::Index i = 0; i < masses.size(); ++i) {
    const double lo = edges[static_cast<std::size_t>(i)];
    const double hi = edges[static_cast<std::size_t>(i) + 1];
    for (std::size_t j = 0; j + 1 < new_edges.size(); ++j) {
      const double overlap = std::min(hi, new_edges[j + 1]) - std::max(lo, new_edges[j]);
      if (overlap > 0.0) out.masses[static_cast<Eigen::Index>(j)] += masses[i] * overlap / (hi - lo);
    }
  }
  const double total = compensated_sum(out.masses);
  if (!(total > 0.0)) throw DegenerateError("no mass inside the new bin range");
  out.masses /= total;
  out.edges = std::move(new_edges);
  return out;
}

double kl_divergence(const DiscreteDensity& p, const DiscreteDensity& q) {
  require_same_edges(p, q);
  Eigen::VectorXd terms = Eigen::VectorXd::Zero(p.masses.size());
  for (Eigen::Index i = 0; i < p.masses.size(); ++i) {
    if (p.masses[i] <= 0.0) continue;
    if (q.masses[i] <= 0.0) return std::numeric_limits<double>::infinity();
    terms[i] = p.masses[i] * std::log2(p.masses[i] / q.masses[i]);
  }
  return compensated_sum(terms);
}

double jsd(const DiscreteDensity& p, const DiscreteDensity& q, double normalizer) {
  require_same_edges(p, q);
  if (!(normalizer > 0.0)) throw std::invalid_argument("jsd: normalizer must be positive");
  DiscreteDensity m{p.edges, 0.5 * (p.masses + q.masses)};
  const double value = 0.5 * kl_divergence(p, m) + 0.5 * kl_divergence(q, m);
  return std::max(0.0, value) / normalizer;
}

double sample_vs_gaussian_jsd(const MetricSample& sample, const Gaussian& approx, double normalizer) {
  const auto simulated = DiscreteDensity::from_histogram(sample.histogram);
  const auto approximated = DiscreteDensity::from_gaussian(approx, sample.histogram.edges);
  return jsd(simulated, approximated, normalizer);
}

double interference_probability_quadrature(const Gaussian& a, const Gaussian& b) {
  if (!(a.variance + b.variance > 0.0)) return interference_probability(a, b);
  if (b.variance <= a.variance) {
    if (b.variance <= 0.0) return 1.0 - a.cdf(b.mean);
    const double sd = b.stddev();
    return simpson_against_normal([&](double t) { return 1.0 - a.cdf(b.mean + sd * t); });
  }
  if (a.variance <= 0.0) return b.cdf(a.mean);
  const double sd = a.stddev();
  return simpson_against_normal([&](double t) { return b.cdf(a.mean + sd * t); });
}

ProbabilityEstimate interference_probability(const MetricSample& a, const MetricSample& b) {
  if (a.values.size() != b.values.size() || a.values.empty()) {
    throw std::invalid_argument("interference_probability: samples must have equal, nonzero length");
  }
  std::size_t wins = 0;
  for (std::size_t k = 0; k < a.values.size(); ++k) wins += a.values[k] > b.values[k] ? 1 : 0;
  const double n = static_cast<double>(a.values.size());
  const double p = static_cast<double>(wins) / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

CriterionResult improvement_criterion(const Gaussian& mb, const Gaussian& rmse) {
  CriterionResult r;
  const double mb_upper = mb.mean + 3.0 * mb.stddev();
  const double rmse_lower = rmse.mean - 3.0 * rmse.stddev();
  r.differentiated_analysis_needed = mb_upper > rmse_lower;
  r.margin = rmse_lower - mb_upper;
  r.mean_gap = rmse.mean - mb.mean;
  r.simplified_threshold = 6.0 * mb.stddev();
  r.simplified_needed = r.mean_gap < r.simplified_threshold;
  return r;
}

std::vector<SensitivityRow> sensitivity_sweep(SweepAxis axis, std::span<const double> grid, double fixed,
                                              const ScaleSpec& scale) {
  if (grid.empty()) throw std::invalid_argument("sensitivity_sweep: empty grid");
  const VarianceBounds bounds = variance_bounds(scale);

  auto homogeneous = [](double n, double variance) {
    if (!(n >= 1.0) || n != std::floor(n)) throw std::invalid_argument("sensitivity_sweep: N must be a positive integer");
    if (!(variance > 0.0)) throw std::invalid_argument("sensitivity_sweep: variance must be positive");
    return magic_barrier_rmse(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), variance));
  };

  std::vector<SensitivityRow> rows;
  rows.reserve(grid.size());
  for (double value : grid) {
    const double n = axis == SweepAxis::NumRatings ? value : fixed;
    const double variance = axis == SweepAxis::NumRatings ? fixed : value;
    rows.push_back({value, homogeneous(n, variance), homogeneous(n, bounds.min_nonzero), homogeneous(n, bounds.max)});
  }
  return rows;
}

void NoiseSweepConfig::validate() const {
  if (relative_differences.empty() || offsets.empty()) throw std::invalid_argument("noise sweep: empty grid");
  if (base_variances.size() == 0) throw std::invalid_argument("noise sweep: no base variances");
  for (double d : relative_differences) {
    if (!(d >= 0.0)) throw std::invalid_argument("noise sweep: relative differences must be >= 0");
  }
  if (!std::is_sorted(offsets.begin(), offsets.end())) {
    throw std::invalid_argument("noise sweep: offsets must be nondecreasing");
  }
  if (!(noise_scale > 0.0)) throw std::invalid_argument("noise sweep: noise_scale must be positive");
}

Eigen::VectorXd noise_offsets(Eigen::Index n, double level, double noise_scale) {
  Eigen::VectorXd d(n);
  const double magnitude = level * noise_scale;
  for (Eigen::Index i = 0; i < n; ++i) d[i] = (i % 2 == 0) ? magnitude : -magnitude;
  return d;
}

std::vector<RankingErrorRow> ranking_error_curves(const NoiseSweepConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = cfg.base_variances.size();
  std::vector<RankingErrorRow> rows;
  for (double delta : cfg.relative_differences) {
    for (double offset : cfg.offsets) {
      const Gaussian first = rmse_distribution(cfg.base_variances, noise_offsets(n, offset, cfg.noise_scale));
      const Gaussian second = rmse_distribution(cfg.base_variances, noise_offsets(n, offset + delta, cfg.noise_scale));
      rows.push_back({delta, offset, interference_probability(first, second)});
    }
  }
  return rows;
}

std::vector<RankingErrorRow> ranking_error_curves_simulated(const NoiseSweepConfig& cfg, const MCConfig& mc) {
  cfg.validate();
  const Eigen::Index n = cfg.base_variances.size();
  std::vector<RatingDistribution> dists(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    dists[static_cast<std::size_t>(i)] = {"u" + std::to_string(i), "i", 0.0, cfg.base_variances[i]};
  }
  const auto keys = keys_of(dists);

  std::vector<RankingErrorRow> rows;
  std::uint64_t point = 0;
  for (double delta : cfg.relative_differences) {
    for (double offset : cfg.offsets) {
      MCConfig first_cfg = mc;
      MCConfig second_cfg = mc;
      first_cfg.master_seed = stream_seed(cfg.seed, 2 * point);
      second_cfg.master_seed = stream_seed(cfg.seed, 2 * point + 1);
      // Predictor pi = mu - d, so the residual offset mu - pi equals d.
      const PredictorVector first{keys, -noise_offsets(n, offset, cfg.noise_scale)};
      const PredictorVector second{keys, -noise_offsets(n, offset + delta, cfg.noise_scale)};
      const auto a = simulate_metric(dists, first, MetricKind::RMSE, first_cfg);
      const auto b = simulate_metric(dists, second, MetricKind::RMSE, second_cfg);
      rows.push_back({delta, offset, interference_probability(a, b).probability});
      ++point;
    }
  }
  return rows;
}

double RankDistribution::probability(const std::vector<std::size_t>& ordering) const {
  const auto it = counts.find(ordering);
  return it == counts.end() || trials == 0 ? 0.0 : static_cast<double>(it->second) / static_cast<double>(trials);
}

std::map<std::vector<std::size_t>, double> RankDistribution::probabilities() const {
  std::map<std::vector<std::size_t>, double> out;
  for (const auto& [ordering, count] : counts) out[ordering] = static_cast<double>(count) / static_cast<double>(trials);
  return out;
}

RankDistribution rank_distribution(std::span<const PredictorVector> systems,
                                   std::span<const RatingDistribution> dists, MetricKind metric,
                                   const MCConfig& cfg) {
  if (systems.empty()) throw std::invalid_argument("rank_distribution: no systems");
  const auto values = simulate_systems(dists, systems, metric, cfg);

  RankDistribution result;
  result.trials = cfg.trials;
  std::vector<std::size_t> order(systems.size());
  for (std::size_t k = 0; k < cfg.trials; ++k) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return values[x][k] < values[y][k]; });
    ++result.counts[order];
  }
  return result;
}

}  // namespace mbar
