#pragma once

#include "mbar/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mbar {

struct RatingRecord {
  std::string user_id;
  std::string item_id;
  int trial = 1;  // 1-based
  int rating = 0;

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

/// Re-rating records R[u,i,t] on a discrete scale.
///
/// Construction validates: unique (user, item, trial) triples, trial index in
/// [1, num_trials], rating on the scale. Violations throw DataError naming the
/// offending triple or value.
class RatingTensor {
 public:
  RatingTensor() = default;
  RatingTensor(ScaleSpec scale, std::vector<RatingRecord> records);

  const ScaleSpec& scale() const noexcept { return scale_; }
  const std::vector<RatingRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  /// Ratings per (user, item) pair, pairs in order of first appearance and
  /// ratings ordered by trial index.
  std::vector<std::pair<PairKey, std::vector<int>>> slices() const;

 private:
  ScaleSpec scale_;
  std::vector<RatingRecord> records_;
};

/// Reads the `user,item,trial,rating` CSV. LF and CRLF line endings accepted;
/// blank lines ignored. Malformed lines throw DataError with the 1-based line
/// number.
RatingTensor parse_tensor(std::istream& in, const ScaleSpec& scale);
void write_tensor(std::ostream& out, const RatingTensor& tensor);

/// One ML Gaussian per slice: sample mean and population variance.
std::vector<RatingDistribution> fit_pair_gaussians(const RatingTensor& tensor);

/// Keeps the distributions with variance > 0, preserving order.
std::vector<RatingDistribution> filter_nonvanishing(std::span<const RatingDistribution> dists);

/// Fraction of pairs with nonzero variance, per item id.
std::map<std::string, double> item_nonzero_fractions(std::span<const RatingDistribution> dists);

struct KSResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool rejected = false;
};

/// Survival function of the asymptotic Kolmogorov distribution, P(K > x).
double kolmogorov_survival(double x);

/// One-sample Kolmogorov-Smirnov test of `sample` against N(mu, sigma^2).
/// The p-value uses (sqrt(n) + 0.12 + 0.11/sqrt(n)) * D in the Kolmogorov tail.
KSResult ks_normality_test(std::span<const double> sample, double mu, double sigma, double alpha = 0.05);

struct KSSummary {
  std::size_t tested = 0;
  std::size_t rejected = 0;
  double alpha = 0.05;
};

/// KS test of every non-constant slice against its own fitted Gaussian.
KSSummary ks_summary(const RatingTensor& tensor, double alpha = 0.05);

struct ExponentialFit {
  double rate = 1.0;
  std::size_t sample_size = 0;
};

/// ML rate = 1 / mean. Throws DataError on an empty list or any value <= 0.
ExponentialFit fit_exponential(std::span<const double> variances);

struct SampleBounds {
  double low = 0.0;
  double high = 0.0;
};

/// `n` draws from Exp(rate), rejection-truncated to `bounds` when given.
/// Identical (fit.rate, n, bounds, seed) give identical output.
Eigen::VectorXd sample_variances(const ExponentialFit& fit, std::size_t n,
                                 std::optional<SampleBounds> bounds, std::uint64_t seed);

/// Variance file: header `variance`, one positive real per line.
std::vector<double> read_variance_file(std::istream& in);
void write_variance_file(std::ostream& out, std::span<const double> variances);

}  // namespace mbar
