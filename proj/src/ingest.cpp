#include "mbar/ingest.hpp"

#include "mbar/error.hpp"
#include "mbar/random.hpp"

#include <boost/random/exponential_distribution.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>
#include <string_view>
#include <tuple>
#include <unordered_map>

namespace mbar {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && first != last;
}

std::string line_error(std::size_t line_no, const std::string& what) {
  return "line " + std::to_string(line_no) + ": " + what;
}

struct PairHash {
  std::size_t operator()(const PairKey& k) const noexcept {
    return std::hash<std::string>{}(k.first) * 31 + std::hash<std::string>{}(k.second);
  }
};

}  // namespace

RatingTensor::RatingTensor(ScaleSpec scale, std::vector<RatingRecord> records)
    : scale_(scale), records_(std::move(records)) {
  scale_.validate();
  std::set<std::tuple<std::string, std::string, int>> seen;
  for (const auto& r : records_) {
    const std::string triple = "(" + r.user_id + "," + r.item_id + "," + std::to_string(r.trial) + ")";
    if (!scale_.contains(r.rating)) {
      throw DataError("rating out of scale: " + std::to_string(r.rating) + " for " + triple);
    }
    if (r.trial < 1 || r.trial > scale_.num_trials) {
      throw DataError("trial index out of range: " + std::to_string(r.trial) + " for " + triple);
    }
    if (!seen.emplace(r.user_id, r.item_id, r.trial).second) {
      throw DataError("duplicate triple " + triple);
    }
  }
}

std::vector<std::pair<PairKey, std::vector<int>>> RatingTensor::slices() const {
  std::vector<std::pair<PairKey, std::vector<std::pair<int, int>>>> grouped;
  std::unordered_map<PairKey, std::size_t, PairHash> index;
  for (const auto& r : records_) {
    PairKey key{r.user_id, r.item_id};
    auto [it, inserted] = index.emplace(key, grouped.size());
    if (inserted) grouped.emplace_back(std::move(key), std::vector<std::pair<int, int>>{});
    grouped[it->second].second.emplace_back(r.trial, r.rating);
  }

  std::vector<std::pair<PairKey, std::vector<int>>> out;
  out.reserve(grouped.size());
  for (auto& [key, entries] : grouped) {
    std::sort(entries.begin(), entries.end());
    std::vector<int> ratings;
    ratings.reserve(entries.size());
    for (const auto& e : entries) ratings.push_back(e.second);
    out.emplace_back(std::move(key), std::move(ratings));
  }
  return out;
}

RatingTensor parse_tensor(std::istream& in, const ScaleSpec& scale) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<RatingRecord> records;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (view.empty()) continue;

    const auto fields = split_fields(view);
    if (!have_header) {
      if (fields.size() != 4 || fields[0] != "user" || fields[1] != "item" || fields[2] != "trial" ||
          fields[3] != "rating") {
        throw DataError(line_error(line_no, "expected header 'user,item,trial,rating'"));
      }
      have_header = true;
      continue;
    }
    if (fields.size() != 4) {
      throw DataError(line_error(line_no, "expected 4 fields, found " + std::to_string(fields.size())));
    }
    if (fields[0].empty() || fields[1].empty()) throw DataError(line_error(line_no, "empty user or item id"));

    RatingRecord rec{std::string(fields[0]), std::string(fields[1]), 0, 0};
    if (!parse_number(fields[2], rec.trial)) {
      throw DataError(line_error(line_no, "trial is not an integer: '" + std::string(fields[2]) + "'"));
    }
    if (!parse_number(fields[3], rec.rating)) {
      throw DataError(line_error(line_no, "rating is not an integer: '" + std::string(fields[3]) + "'"));
    }
    if (!scale.contains(rec.rating)) {
      throw DataError(line_error(line_no, "rating out of scale: " + std::to_string(rec.rating)));
    }
    records.push_back(std::move(rec));
  }
  if (!have_header) throw DataError(line_error(std::max<std::size_t>(line_no, 1), "missing header"));
  return RatingTensor(scale, std::move(records));
}

void write_tensor(std::ostream& out, const RatingTensor& tensor) {
  out << "user,item,trial,rating\n";
  for (const auto& r : tensor.records()) {
    out << r.user_id << ',' << r.item_id << ',' << r.trial << ',' << r.rating << '\n';
  }
}

std::vector<RatingDistribution> fit_pair_gaussians(const RatingTensor& tensor) {
  std::vector<RatingDistribution> dists;
  for (const auto& [key, ratings] : tensor.slices()) {
    std::vector<double> values(ratings.begin(), ratings.end());
    const double mean = compensated_sum(values) / static_cast<double>(values.size());
    dists.push_back({key.first, key.second, mean, population_variance(values)});
  }
  return dists;
}

std::vector<RatingDistribution> filter_nonvanishing(std::span<const RatingDistribution> dists) {
  std::vector<RatingDistribution> out;
  std::copy_if(dists.begin(), dists.end(), std::back_inserter(out),
               [](const RatingDistribution& d) { return d.variance > 0.0; });
  return out;
}

std::map<std::string, double> item_nonzero_fractions(std::span<const RatingDistribution> dists) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& d : dists) {
    auto& c = counts[d.item_id];
    ++c.second;
    if (d.variance > 0.0) ++c.first;
  }
  std::map<std::string, double> out;
  for (const auto& [item, c] : counts) out[item] = static_cast<double>(c.first) / static_cast<double>(c.second);
  return out;
}

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (x < 1.18) {
    // P(K <= x) = sqrt(2 pi)/x * sum exp(-(2j-1)^2 pi^2 / (8 x^2)); converges fast for small x.
    const double w = -pi * pi / (8.0 * x * x);
    double cdf = 0.0;
    for (int j = 1; j <= 8; ++j) {
      const double k = 2.0 * j - 1.0;
      cdf += std::exp(k * k * w);
    }
    cdf *= std::sqrt(2.0 * pi) / x;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double q = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    q += (j % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

KSResult ks_normality_test(std::span<const double> sample, double mu, double sigma, double alpha) {
  if (!(sigma > 0.0)) throw DataError("degenerate reference distribution");
  if (sample.size() < 2) throw std::invalid_argument("ks_normality_test: sample size must be at least 2");

  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const Gaussian reference{mu, sigma * sigma};

  // Evaluate at each distinct value: the empirical CDF jumps from below/n to
  // through/n there, so both one-sided gaps are checked.
  double d = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double f = reference.cdf(sorted[i]);
    d = std::max({d, std::abs(static_cast<double>(i) / n - f), std::abs(static_cast<double>(j) / n - f)});
    i = j;
  }

  const double root_n = std::sqrt(n);
  const double p = kolmogorov_survival((root_n + 0.12 + 0.11 / root_n) * d);
  return {d, p, p < alpha};
}

KSSummary ks_summary(const RatingTensor& tensor, double alpha) {
  KSSummary summary;
  summary.alpha = alpha;
  for (const auto& [key, ratings] : tensor.slices()) {
    if (ratings.size() < 2) continue;
    std::vector<double> values(ratings.begin(), ratings.end());
    const double var = population_variance(values);
    if (var <= 0.0) continue;
    const double mean = compensated_sum(values) / static_cast<double>(values.size());
    ++summary.tested;
    if (ks_normality_test(values, mean, std::sqrt(var), alpha).rejected) ++summary.rejected;
  }
  return summary;
}

ExponentialFit fit_exponential(std::span<const double> variances) {
  if (variances.empty()) throw DataError("exponential fit needs at least one value");
  for (double v : variances) {
    if (!(v > 0.0)) throw DataError("exponential support violated: " + std::to_string(v));
  }
  const double mean = compensated_sum(variances) / static_cast<double>(variances.size());
  return {1.0 / mean, variances.size()};
}

Eigen::VectorXd sample_variances(const ExponentialFit& fit, std::size_t n, std::optional<SampleBounds> bounds,
                                 std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_variances: n must be at least 1");
  if (!(fit.rate > 0.0)) throw std::invalid_argument("sample_variances: rate must be positive");
  if (bounds) {
    const double lo = std::max(bounds->low, 0.0);
    if (!(bounds->low < bounds->high)) throw std::invalid_argument("sample_variances: bounds need low < high");
    const double mass = std::exp(-fit.rate * lo) - std::exp(-fit.rate * bounds->high);
    if (!(mass > 1e-9)) throw std::invalid_argument("sample_variances: truncated mass is not positive");
  }

  constexpr std::size_t chunk = 1u << 16;
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t start = 0; start < n; start += chunk) {
    StreamEngine engine(seed, start / chunk);
    boost::random::exponential_distribution<double> exp_dist(fit.rate);
    const std::size_t stop = std::min(n, start + chunk);
    for (std::size_t i = start; i < stop; ++i) {
      double v = exp_dist(engine);
      if (bounds) {
        while (v < bounds->low || v > bounds->high) v = exp_dist(engine);
      }
      out[static_cast<Eigen::Index>(i)] = v;
    }
  }
  return out;
}

std::vector<double> read_variance_file(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (!have_header) {
      if (view != "variance") throw DataError(line_error(line_no, "expected header 'variance'"));
      have_header = true;
      continue;
    }
    double v = 0.0;
    if (!parse_number(view, v)) throw DataError(line_error(line_no, "not a number: '" + std::string(view) + "'"));
    if (!(v > 0.0)) throw DataError(line_error(line_no, "variance must be positive"));
    values.push_back(v);
  }
  if (!have_header) throw DataError(line_error(std::max<std::size_t>(line_no, 1), "missing header"));
  return values;
}

void write_variance_file(std::ostream& out, std::span<const double> variances) {
  out << "variance\n";
  char buf[64];
  for (double v : variances) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, ptr - buf);
    out << '\n';
  }
}

}  // namespace mbar
