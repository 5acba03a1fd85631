#include "mbar/mc_engine.hpp"

#include "mbar/random.hpp"

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace mbar {
namespace {

unsigned resolve_threads(unsigned requested, std::size_t work_items) {
  unsigned n = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(work_items, 1)));
}

// Runs body(begin, end) over contiguous slices of [0, count).
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body body) {
  const unsigned n = resolve_threads(threads, count);
  if (n <= 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(n);
  const std::size_t step = (count + n - 1) / n;
  for (unsigned t = 0; t < n; ++t) {
    const std::size_t begin = std::min(count, t * step);
    const std::size_t end = std::min(count, begin + step);
    if (begin < end) workers.emplace_back([=] { body(begin, end); });
  }
}

}  // namespace

void MCConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("MCConfig: trials must be at least 1");
  if (bins == 1) throw std::invalid_argument("MCConfig: bins must be at least 2");
  if (clip && !(clip->first < clip->second)) throw std::invalid_argument("MCConfig: clip needs low < high");
}

std::size_t MCConfig::resolved_bins() const {
  if (bins != 0) return bins;
  const auto b = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(trials))));
  return std::clamp<std::size_t>(b, 2, 512);
}

Histogram make_histogram(std::span<const double> values, std::size_t bins) {
  if (bins < 2) throw std::invalid_argument("make_histogram: bins must be at least 2");
  if (values.empty()) throw std::invalid_argument("make_histogram: no values");
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bins);

  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  h.edges.back() = hi;

  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    auto idx = static_cast<std::size_t>((v - lo) / width);
    counts[std::min(idx, bins - 1)] += 1;
  }
  h.heights.resize(bins);
  const double total = static_cast<double>(values.size());
  for (std::size_t i = 0; i < bins; ++i) {
    h.heights[i] = static_cast<double>(counts[i]) / (total * (h.edges[i + 1] - h.edges[i]));
  }
  return h;
}

Gaussian summarize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  const double n = static_cast<double>(values.size());
  const double mean = compensated_sum(values) / n;
  if (values.size() < 2) return {mean, 0.0};
  Eigen::VectorXd sq(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    sq[static_cast<Eigen::Index>(i)] = (values[i] - mean) * (values[i] - mean);
  }
  return {mean, compensated_sum(sq) / (n - 1.0)};
}

double MetricSample::standard_error() const {
  return values.empty() ? 0.0 : std::sqrt(summary.variance / static_cast<double>(values.size()));
}

MetricSample make_metric_sample(std::vector<double> values, std::size_t bins) {
  MetricSample s;
  s.summary = summarize(values);
  s.histogram = make_histogram(values, bins);
  s.values = std::move(values);
  return s;
}

PredictorVector optimal_predictors(std::span<const RatingDistribution> dists, MetricKind /*metric*/) {
  if (dists.empty()) throw std::invalid_argument("optimal_predictors: no rating distributions");
  // Gaussian ratings are symmetric, so mean (RMSE) and median (MAE) agree.
  return {keys_of(dists), means_of(dists)};
}

double evaluate_metric_once(std::span<const RatingDistribution> dists, const PredictorVector& predictors,
                            MetricKind metric, std::span<const double> draws) {
  check_aligned(dists, predictors);
  if (draws.size() != dists.size()) throw std::invalid_argument("evaluate_metric_once: draw count mismatch");
  const Eigen::Map<const Eigen::VectorXd> x(draws.data(), static_cast<Eigen::Index>(draws.size()));
  return evaluate_metric(x, predictors.predictions, metric);
}

std::vector<std::vector<double>> simulate_systems(std::span<const RatingDistribution> dists,
                                                  std::span<const PredictorVector> systems, MetricKind metric,
                                                  const MCConfig& cfg) {
  cfg.validate();
  if (systems.empty()) throw std::invalid_argument("simulate_systems: no systems");
  for (const auto& s : systems) check_aligned(dists, s);
  for (const auto& d : dists) {
    if (!(d.variance >= 0.0)) throw std::invalid_argument("simulate_systems: negative variance");
  }

  const Eigen::VectorXd mu = means_of(dists);
  const Eigen::VectorXd sigma = variances_of(dists).cwiseSqrt();
  const Eigen::Index n = mu.size();
  const std::size_t num_systems = systems.size();

  std::vector<std::vector<double>> values(num_systems, std::vector<double>(cfg.trials));
  parallel_for(cfg.trials, cfg.threads, [&](std::size_t begin, std::size_t end) {
    Eigen::VectorXd x(n);
    for (std::size_t k = begin; k < end; ++k) {
      StreamEngine engine(cfg.master_seed, k);
      boost::random::normal_distribution<double> normal;
      for (Eigen::Index i = 0; i < n; ++i) x[i] = mu[i] + sigma[i] * normal(engine);
      if (cfg.clip) x = x.cwiseMax(cfg.clip->first).cwiseMin(cfg.clip->second);
      for (std::size_t s = 0; s < num_systems; ++s) {
        values[s][k] = n == 0 ? 0.0 : evaluate_metric(x, systems[s].predictions, metric);
      }
    }
  });
  return values;
}

MetricSample simulate_metric(std::span<const RatingDistribution> dists, const PredictorVector& predictors,
                             MetricKind metric, const MCConfig& cfg) {
  auto values = simulate_systems(dists, std::span(&predictors, 1), metric, cfg);
  return make_metric_sample(std::move(values.front()), cfg.resolved_bins());
}

MetricSample simulate_magic_barrier(std::span<const RatingDistribution> dists, MetricKind metric,
                                    const MCConfig& cfg) {
  return simulate_metric(dists, optimal_predictors(dists, metric), metric, cfg);
}

MetricSample sample_gaussian(const Gaussian& g, const MCConfig& cfg) {
  cfg.validate();
  if (!(g.variance >= 0.0)) throw std::invalid_argument("sample_gaussian: negative variance");
  std::vector<double> values(cfg.trials);
  const double sd = g.stddev();
  parallel_for(cfg.trials, cfg.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      StreamEngine engine(cfg.master_seed, k);
      boost::random::normal_distribution<double> normal;
      values[k] = g.mean + sd * normal(engine);
    }
  });
  return make_metric_sample(std::move(values), cfg.resolved_bins());
}

}  // namespace mbar
