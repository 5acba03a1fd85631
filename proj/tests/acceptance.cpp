// Acceptance suite: one line per criterion, nonzero exit on any failure.

#include "mbar/analysis.hpp"
#include "mbar/approx.hpp"
#include "mbar/ingest.hpp"
#include "mbar/mc_engine.hpp"
#include "mbar/random.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

using namespace mbar;

namespace {

enum class Status { Pass, Fail, Skip, Info };

int failures = 0;

void report(Status s, const std::string& id, const std::string& detail) {
  const char* tag = s == Status::Pass ? "PASS" : s == Status::Fail ? "FAIL" : s == Status::Skip ? "SKIP" : "INFO";
  if (s == Status::Fail) ++failures;
  std::cout << '[' << tag << "] " << id << ": " << detail << std::endl;
}

Status verdict(bool ok) { return ok ? Status::Pass : Status::Fail; }

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

std::vector<RatingDistribution> make_pairs(std::span<const double> means, std::span<const double> variances) {
  std::vector<RatingDistribution> d;
  for (std::size_t i = 0; i < means.size(); ++i) d.push_back({"u" + std::to_string(i), "i", means[i], variances[i]});
  return d;
}

// ---------------------------------------------------------------------------

void experimental_record() {
  const char* path = std::getenv("MBAR_EXPERIMENT_CSV");

  // The pipeline itself on a synthetic 67 x 5 x 5 tensor: it must parse,
  // fit, filter and estimate without error and keep the record count.
  std::ostringstream csv;
  csv << "user,item,trial,rating\n";
  StreamEngine eng(17);
  std::uniform_int_distribution<int> base(1, 5), jitter(-1, 1);
  for (int u = 0; u < 67; ++u)
    for (int i = 0; i < 5; ++i) {
      const int b = base(eng);
      for (int t = 1; t <= 5; ++t) csv << 'u' << u << ",i" << i << ',' << t << ',' << std::clamp(b + jitter(eng), 1, 5) << '\n';
    }
  std::istringstream in(csv.str());
  const auto tensor = parse_tensor(in, ScaleSpec{});
  const auto kept = filter_nonvanishing(fit_pair_gaussians(tensor));
  const auto vars = variances_of(kept);
  const auto barrier = magic_barrier_rmse(vars);
  const auto fit = fit_exponential(std::span<const double>(vars.data(), static_cast<std::size_t>(vars.size())));
  const bool synthetic_ok = tensor.size() == 1675 && !kept.empty() && barrier.mean > 0.0 && fit.rate > 0.0;

  if (!path) {
    report(synthetic_ok ? Status::Skip : Status::Fail, "C1 experimental record",
           fmt("MBAR_EXPERIMENT_CSV not set; synthetic pipeline %s (1675 records, %zu non-vanishing pairs, "
               "barrier N(%.4f, %.5f), rate %.3f)",
               synthetic_ok ? "ok" : "BROKEN", kept.size(), barrier.mean, barrier.variance, fit.rate));
    return;
  }
  std::ifstream file(path);
  if (!file) {
    report(Status::Fail, "C1 experimental record", std::string("cannot open ") + path);
    return;
  }
  const auto real = parse_tensor(file, ScaleSpec{});
  const auto pairs = filter_nonvanishing(fit_pair_gaussians(real));
  const auto v = variances_of(pairs);
  const auto mb = magic_barrier_rmse(v);
  const auto rate = fit_exponential(std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))).rate;
  const bool ok = pairs.size() == 213 && std::abs(mb.mean - 0.733) <= 0.005 && std::abs(mb.variance - 0.003) <= 0.0005 &&
                  std::abs(rate - 2.11) <= 0.02;
  report(verdict(ok), "C1 experimental record",
         fmt("pairs=%zu (213), barrier mean=%.4f (0.733+-0.005), variance=%.5f (0.003+-0.0005), rate=%.3f (2.11+-0.02)",
             pairs.size(), mb.mean, mb.variance, rate));
}

// ---------------------------------------------------------------------------

struct ConfigResult {
  std::size_t n;
  Gaussian approx;
  Gaussian simulated;
  double jsd;
};

constexpr int kConfigsPerSize = 200;

std::vector<ConfigResult> agreement_runs() {
  std::vector<ConfigResult> out;
  const std::size_t sizes[] = {50, 100, 150, 200, 500, 1000};
  MCConfig mc;
  mc.trials = 100000;
  std::uint64_t index = 0;
  for (std::size_t n : sizes) {
    for (int rep = 0; rep < kConfigsPerSize; ++rep, ++index) {
      StreamEngine eng(2017, index);
      std::uniform_real_distribution<double> mean(1.0, 5.0), var(0.16, 3.84);
      std::vector<double> means(n), variances(n);
      for (std::size_t i = 0; i < n; ++i) {
        means[i] = mean(eng);
        variances[i] = var(eng);
      }
      const auto dists = make_pairs(means, variances);
      mc.master_seed = stream_seed(99, index);
      const auto sample = simulate_magic_barrier(dists, MetricKind::RMSE, mc);
      const auto approx = magic_barrier_rmse(std::span<const double>(variances));
      out.push_back({n, approx, sample.summary, sample_vs_gaussian_jsd(sample, approx)});
    }
  }
  return out;
}

void approximation_agreement(const std::vector<ConfigResult>& runs, double seconds) {
  std::vector<double> xe, ye, xv, yv;
  std::vector<double> first_xe, first_ye;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    if (k % kConfigsPerSize < 10) {
      first_xe.push_back(runs[k].approx.mean);
      first_ye.push_back(runs[k].simulated.mean);
    }
  }
  const auto minimal = oracle::least_squares(first_xe, first_ye);
  report(Status::Info, "C2 minimal subset",
         fmt("first 10 configs per size (60): expectation slope=%.4f intercept=%.4f R2=%.4f", minimal.slope,
             minimal.intercept, minimal.r2));
  for (const auto& r : runs) {
    xe.push_back(r.approx.mean);
    ye.push_back(r.simulated.mean);
    xv.push_back(r.approx.variance);
    yv.push_back(r.simulated.variance);
  }
  const auto e = oracle::least_squares(xe, ye);
  const auto v = oracle::least_squares(xv, yv);
  const bool ok = e.slope >= 0.99 && e.slope <= 1.01 && std::abs(e.intercept) <= 0.01 && e.r2 >= 0.98 &&
                  v.slope >= 0.95 && v.slope <= 1.03 && v.r2 >= 0.97;
  report(verdict(ok), "C2 approximation vs simulation",
         fmt("%zu configs, tau=1e5, %.0f s; expectation slope=%.4f intercept=%.4f R2=%.4f; "
             "variance slope=%.4f R2=%.4f",
             runs.size(), seconds, e.slope, e.intercept, e.r2, v.slope, v.r2));
}

void jsd_goodness(const std::vector<ConfigResult>& runs) {
  double worst_large = 0.0, worst_small = 0.0;
  std::size_t above_small = 0;
  for (const auto& r : runs) {
    if (r.n >= 200) worst_large = std::max(worst_large, r.jsd);
    if (r.n == 50) {
      worst_small = std::max(worst_small, r.jsd);
      above_small += r.jsd > 0.10 ? 1 : 0;
    }
  }
  report(verdict(worst_large <= 0.10), "C3 JSD goodness",
         fmt("max JSD for N>=200: %.5f (<=0.10); N=50 max %.5f, %zu above 0.10 (permitted)", worst_large, worst_small,
             above_small));
}

// ---------------------------------------------------------------------------

void large_record_transfer() {
  const auto variances = sample_variances({2.11, 0}, 2'800'000, std::nullopt, 20170101);
  const auto start = std::chrono::steady_clock::now();
  const auto mb = magic_barrier_rmse(variances);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const double threshold = 6.0 * std::sqrt(7e-4);
  const auto own = improvement_criterion(mb, Gaussian{0.8567, mb.variance});
  const auto printed = improvement_criterion(Gaussian{0.6687, 7e-4}, Gaussian{0.8567, 7e-4});
  const bool ok = mb.mean >= 0.66 && mb.mean <= 0.70 && std::abs(threshold - 0.1587) <= 0.02 &&
                  !own.differentiated_analysis_needed && !own.simplified_needed && !printed.simplified_needed &&
                  printed.mean_gap > printed.simplified_threshold && seconds <= 1.0;
  report(verdict(ok), "C4 large-record transfer",
         fmt("barrier N(%.4f, %.3g) in [0.66,0.70]; 6*sqrt(7e-4)=%.4f vs 0.1587; gap %.4f > %.4f -> improvable; "
             "closed form %.1f ms (<=1 s)",
             mb.mean, mb.variance, threshold, printed.mean_gap, printed.simplified_threshold, seconds * 1e3));
}

// ---------------------------------------------------------------------------

void interference_equivalence() {
  StreamEngine eng(5, 5);
  std::uniform_real_distribution<double> mean(0.5, 1.5), logvar(std::log(1e-4), std::log(0.5));
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Gaussian a{mean(eng), std::exp(logvar(eng))}, b{mean(eng), std::exp(logvar(eng))};
    worst = std::max(worst, std::abs(interference_probability(a, b) - interference_probability_quadrature(a, b)));
  }

  MCConfig mc;
  mc.trials = 100000;
  std::uniform_real_distribution<double> gap(-0.08, 0.08), var(2e-4, 3e-3);
  double worst_z = 0.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const Gaussian a{0.8 + gap(eng), var(eng)}, b{0.8, var(eng)};
    mc.master_seed = stream_seed(1000, 2 * i);
    const auto sa = sample_gaussian(a, mc);
    mc.master_seed = stream_seed(1000, 2 * i + 1);
    const auto sb = sample_gaussian(b, mc);
    const double p = interference_probability(a, b);
    const double se = std::sqrt(p * (1 - p) / static_cast<double>(mc.trials));
    worst_z = std::max(worst_z, std::abs(interference_probability(sa, sb).probability - p) / se);
  }
  report(verdict(worst <= 1e-6 && worst_z <= 3.0), "C5 interference oracles",
         fmt("quadrature max |diff| %.2e over 100 pairs (<=1e-6); MC max |z| %.2f over 10 pairs (<=3)", worst, worst_z));
}

// ---------------------------------------------------------------------------

void convolution_oracle() {
  const std::vector<double> means{3.0, 2.0}, variances{0.8, 2.5};
  const auto dists = make_pairs(means, variances);
  PredictorVector p = optimal_predictors(dists, MetricKind::RMSE);
  p.predictions[0] += 0.4;  // a biased first pair exercises the noncentral case
  MCConfig mc;
  mc.trials = 1'000'000;
  const auto sample = simulate_metric(dists, p, MetricKind::RMSE, mc);
  const auto observed = DiscreteDensity::from_histogram(sample.histogram);
  const auto expected = oracle::rmse2_bin_masses(sample.histogram.edges, means[0] - p.predictions[0],
                                                 std::sqrt(variances[0]), means[1] - p.predictions[1],
                                                 std::sqrt(variances[1]));
  std::vector<double> obs(observed.masses.data(), observed.masses.data() + observed.masses.size());
  const double d = oracle::jsd_bits(obs, expected);
  report(verdict(d <= 0.02), "C6 N=2 convolution oracle",
         fmt("tau=1e6, %zu bins, JSD %.2e (<=0.02)", sample.histogram.bins(), d));
}

// ---------------------------------------------------------------------------

void property_suite() {
  std::vector<std::string> broken;

  std::vector<double> means(64), variances(64);
  for (int i = 0; i < 64; ++i) {
    means[i] = 1.0 + (i % 5);
    variances[i] = 0.16 + 0.05 * i;
  }
  const auto dists = make_pairs(means, variances);
  MCConfig mc;
  mc.trials = 30011;
  std::vector<double> reference;
  for (unsigned threads : {1u, 2u, 3u, 8u}) {
    mc.threads = threads;
    const auto values = simulate_magic_barrier(dists, MetricKind::RMSE, mc).values;
    if (reference.empty()) reference = values;
    if (values != reference) broken.push_back("thread determinism");
  }

  const Eigen::Map<const Eigen::VectorXd> v(variances.data(), 64);
  const auto base = magic_barrier_rmse(v);
  for (double c : {0.1, 0.5, 2.0, 7.0}) {
    const auto scaled = magic_barrier_rmse((c * c * v).eval());
    if (std::abs(scaled.mean - c * base.mean) > 1e-12 * c * base.mean ||
        std::abs(scaled.variance - c * c * base.variance) > 1e-12 * c * c * base.variance)
      broken.push_back("barrier scaling");
  }

  StreamEngine eng(8);
  std::uniform_real_distribution<double> u(0.01, 2.0);
  for (int i = 0; i < 200; ++i) {
    const Gaussian a{u(eng), u(eng)}, b{u(eng), u(eng)};
    if (std::abs(interference_probability(a, b) + interference_probability(b, a) - 1.0) > 1e-14)
      broken.push_back("interference complementarity");
  }

  std::vector<PredictorVector> systems(3, optimal_predictors(dists, MetricKind::RMSE));
  systems[1].predictions = systems[0].predictions + noise_offsets(64, 0.3, 1.0);
  systems[2].predictions = systems[0].predictions + noise_offsets(64, 0.6, 1.0);
  mc.trials = 20000;
  const auto rank = rank_distribution(systems, dists, MetricKind::RMSE, mc);
  std::size_t tally = 0;
  for (const auto& [ordering, count] : rank.counts) tally += count;
  if (tally != rank.trials) broken.push_back("rank tally");
  if (rank_distribution(systems, dists, MetricKind::RMSE, mc).counts != rank.counts) broken.push_back("rank reproducibility");

  NoiseSweepConfig sweep;
  sweep.relative_differences = {0.0, 0.01, 0.03, 0.1, 0.3};
  sweep.offsets = {0.0, 0.2, 0.5};
  sweep.base_variances = v;
  const auto rows = ranking_error_curves(sweep);
  for (std::size_t oi = 0; oi < sweep.offsets.size(); ++oi) {
    if (rows[oi].error_probability != 0.5) broken.push_back("curves at zero difference");
    for (std::size_t di = 1; di < sweep.relative_differences.size(); ++di) {
      const auto& here = rows[di * sweep.offsets.size() + oi];
      const auto& before = rows[(di - 1) * sweep.offsets.size() + oi];
      if (!(here.error_probability < before.error_probability) || !(here.error_probability > 0.0))
        broken.push_back("curves monotone in difference");
    }
  }

  const auto bounds = variance_bounds({1, 5, 5});
  const auto brute = oracle::brute_force_variance_bounds(1, 5, 5);
  if (std::abs(bounds.min_nonzero - 0.16) > 1e-12 || std::abs(bounds.max - 3.84) > 1e-12 ||
      std::abs(brute.min_nonzero - 0.16) > 1e-12 || std::abs(brute.max - 3.84) > 1e-12)
    broken.push_back("variance bounds");

  std::string detail = "determinism, scaling, complementarity, rank tally, curve monotonicity, variance bounds";
  if (!broken.empty()) {
    detail = "broken:";
    for (const auto& b : broken) detail += " " + b + ";";
  }
  report(verdict(broken.empty()), "C7 property suite", detail);
}

// ---------------------------------------------------------------------------

void qualitative_only() {
  NoiseSweepConfig sweep;
  sweep.relative_differences = {0.05, 0.10, 0.15};
  sweep.offsets = {0.0, 0.25, 0.5, 1.0};
  sweep.base_variances = sample_variances({2.11, 0}, 213, std::nullopt, 3);
  const auto rows = ranking_error_curves(sweep);
  bool decreasing = true;
  for (std::size_t di = 0; di < 3; ++di)
    for (std::size_t oi = 1; oi < 4; ++oi)
      decreasing = decreasing && rows[di * 4 + oi].error_probability < rows[di * 4 + oi - 1].error_probability;
  report(Status::Info, "C8 ranking-error curves",
         fmt("not a regression target; curves %s in distance from the barrier, P(err) at 10%% / small offset = %.3f",
             decreasing ? "decrease" : "do NOT decrease", rows[4].error_probability));
  report(Status::Info, "C8 recommender interference value",
         "not a regression target; the system's RMSE parameters are unpublished");
  const auto mb = magic_barrier_rmse(sample_variances({2.11, 0}, 2'800'000, std::nullopt, 20170101));
  report(Status::Info, "C8 large-record barrier mean",
         fmt("not a regression target; %.4f vs printed 0.6687 (|diff| %.4f, loose band 0.03)", mb.mean,
             std::abs(mb.mean - 0.6687)));
}

}  // namespace

int main() {
  auto guard = [](const char* id, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(Status::Fail, id, std::string("threw: ") + e.what());
    }
  };

  guard("C1 experimental record", experimental_record);

  std::vector<ConfigResult> runs;
  double seconds = 0.0;
  guard("C2 approximation vs simulation", [&] {
    const auto start = std::chrono::steady_clock::now();
    runs = agreement_runs();
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    approximation_agreement(runs, seconds);
  });
  if (!runs.empty()) guard("C3 JSD goodness", [&] { jsd_goodness(runs); });

  guard("C4 large-record transfer", large_record_transfer);
  guard("C5 interference oracles", interference_equivalence);
  guard("C6 N=2 convolution oracle", convolution_oracle);
  guard("C7 property suite", property_suite);
  guard("C8 qualitative", qualitative_only);

  std::cout << (failures ? "acceptance: FAILED (" + std::to_string(failures) + ")" : std::string("acceptance: all criteria met"))
            << std::endl;
  return failures ? 1 : 0;
}
