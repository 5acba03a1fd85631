#include "mbar/error.hpp"
#include "mbar/ingest.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace mbar;

namespace {

RatingTensor parse(const std::string& text, ScaleSpec scale = {}) {
  std::istringstream in(text);
  return parse_tensor(in, scale);
}

std::string full_tensor_csv(int users, int items, int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> rating(1, 5);
  std::ostringstream out;
  out << "user,item,trial,rating\n";
  for (int u = 0; u < users; ++u)
    for (int i = 0; i < items; ++i)
      for (int t = 1; t <= trials; ++t) out << "u" << u << ",i" << i << ',' << t << ',' << rating(rng) << '\n';
  return out.str();
}

}  // namespace

TEST_CASE("parse_tensor reads a 67 x 5 x 5 tensor") {
  const auto tensor = parse(full_tensor_csv(67, 5, 5, 1));
  CHECK(tensor.size() == 1675);
  CHECK(tensor.slices().size() == 335);
}

TEST_CASE("parse_tensor accepts an empty body and CRLF endings") {
  CHECK(parse("user,item,trial,rating\n").empty());
  const auto t = parse("user,item,trial,rating\r\nu1,i1,1,3\r\nu1,i1,2,4\r\n");
  REQUIRE(t.size() == 2);
  CHECK(t.records()[1] == RatingRecord{"u1", "i1", 2, 4});
}

TEST_CASE("parse_tensor errors") {
  CHECK_THROWS_WITH_AS(parse("user,item,trial,rating\nu1,i1,1,7\n"), doctest::Contains("rating out of scale: 7"),
                       DataError);
  CHECK_THROWS_WITH_AS(parse("user,item,trial,rating\nu1,i1,1,3\nu1,i1\n"), doctest::Contains("line 3"), DataError);
  CHECK_THROWS_WITH_AS(parse("user,item,trial,rating\nu1,i1,1,3\nu1,i1,x,3\n"), doctest::Contains("line 3"),
                       DataError);
  CHECK_THROWS_WITH_AS(parse("user,item,trial,rating\nu1,i1,1,3\nu1,i1,1,4\n"),
                       doctest::Contains("duplicate triple (u1,i1,1)"), DataError);
  CHECK_THROWS_WITH_AS(parse("user,item,trial,rating\nu1,i1,6,4\n"), doctest::Contains("trial index"), DataError);
  CHECK_THROWS_WITH_AS(parse("u,i,t,r\n"), doctest::Contains("line 1"), DataError);
  CHECK_THROWS_AS(parse(""), DataError);
}

TEST_CASE("write_tensor then parse_tensor is the identity") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const int users = 1 + static_cast<int>(rng() % 10);
    const auto original = parse(full_tensor_csv(users, 1 + static_cast<int>(rng() % 4), 1 + static_cast<int>(rng() % 5), seed));
    std::ostringstream out;
    write_tensor(out, original);
    const auto round_trip = parse(out.str());
    CHECK(round_trip.records() == original.records());
  }
}

TEST_CASE("fit_pair_gaussians uses mean and population variance") {
  const auto t = parse(
      "user,item,trial,rating\n"
      "a,x,1,1\na,x,2,1\na,x,3,1\na,x,4,1\na,x,5,2\n"
      "b,x,1,3\nb,x,2,3\nb,x,3,3\nb,x,4,3\nb,x,5,3\n"
      "c,y,1,1\nc,y,2,1\nc,y,3,1\nc,y,4,5\nc,y,5,5\n");
  const auto d = fit_pair_gaussians(t);
  REQUIRE(d.size() == 3);
  CHECK(d[0].mean == doctest::Approx(1.2));
  CHECK(d[0].variance == doctest::Approx(0.16));
  CHECK(d[1].mean == 3.0);
  CHECK(d[1].variance == 0.0);
  CHECK(d[2].mean == doctest::Approx(2.6));
  CHECK(d[2].variance == doctest::Approx(3.84));
}

TEST_CASE("shifting every rating shifts means and keeps variances") {
  const auto base = parse(full_tensor_csv(20, 3, 5, 9), {1, 5, 5});
  std::vector<RatingRecord> shifted = base.records();
  for (auto& r : shifted) r.rating += 2;
  const RatingTensor moved({3, 7, 5}, shifted);
  const auto a = fit_pair_gaussians(base);
  const auto b = fit_pair_gaussians(moved);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b[i].mean == doctest::Approx(a[i].mean + 2.0));
    CHECK(b[i].variance == doctest::Approx(a[i].variance).epsilon(1e-12));
  }
}

TEST_CASE("filter_nonvanishing keeps positive variances in order") {
  std::vector<RatingDistribution> d;
  for (int i = 0; i < 10; ++i) d.push_back({"u" + std::to_string(i), "i", 3.0, (i % 5 == 1 || i % 5 == 3) ? 0.0 : 0.1 * i});
  const auto kept = filter_nonvanishing(d);
  std::vector<std::string> ids;
  for (const auto& k : kept) ids.push_back(k.user_id);
  CHECK(ids == std::vector<std::string>{"u2", "u4", "u5", "u7", "u9"});

  std::vector<RatingDistribution> constant(4, {"u", "i", 2.0, 0.0});
  CHECK(filter_nonvanishing(constant).empty());
}

TEST_CASE("filter_nonvanishing on a mixed list of ten with four zeros") {
  std::vector<RatingDistribution> d;
  const double vars[] = {0.2, 0.0, 0.4, 0.0, 0.6, 0.7, 0.0, 0.8, 0.0, 1.0};
  for (int i = 0; i < 10; ++i) d.push_back({"u" + std::to_string(i), "i", 1.0, vars[i]});
  const auto kept = filter_nonvanishing(d);
  REQUIRE(kept.size() == 6);
  CHECK(kept.front().user_id == "u0");
  CHECK(kept[2].user_id == "u4");
  CHECK(kept.back().user_id == "u9");
}

TEST_CASE("item_nonzero_fractions") {
  const std::vector<RatingDistribution> d{{"a", "x", 1, 0.1}, {"b", "x", 1, 0}, {"a", "y", 1, 0.3}};
  const auto f = item_nonzero_fractions(d);
  CHECK(f.at("x") == 0.5);
  CHECK(f.at("y") == 1.0);
}

TEST_CASE("Kolmogorov tail values") {
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(1.0) == doctest::Approx(0.26999967).epsilon(1e-6));
  CHECK(kolmogorov_survival(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(kolmogorov_survival(1.6276) == doctest::Approx(0.01).epsilon(2e-3));
  // The two series meet smoothly at the switch point.
  CHECK(kolmogorov_survival(1.18 - 1e-9) == doctest::Approx(kolmogorov_survival(1.18)).epsilon(1e-7));
}

TEST_CASE("KS statistic at the N(0,1) deciles") {
  const std::vector<double> sample{-1.2816, -0.5244, 0.0, 0.5244, 1.2816};
  const auto r = ks_normality_test(sample, 0.0, 1.0, 0.05);
  // Oracle: sup over a fine grid of |F_n - Phi|.
  double sup = 0.0;
  for (double x = -6; x <= 6; x += 1e-5) {
    const double fn = static_cast<double>(std::count_if(sample.begin(), sample.end(), [&](double s) { return s <= x; })) / 5.0;
    sup = std::max(sup, std::abs(fn - oracle::normal_cdf(x)));
  }
  CHECK(r.statistic == doctest::Approx(0.1).epsilon(1e-3));
  CHECK(r.statistic == doctest::Approx(sup).epsilon(1e-3));
  CHECK_FALSE(r.rejected);
}

TEST_CASE("KS accepts a sample at the reference quantiles") {
  const int n = 20;
  std::vector<double> sample;
  // Inverse normal CDF by bisection on the oracle CDF.
  for (int i = 1; i <= n; ++i) {
    const double p = static_cast<double>(i) / (n + 1);
    double lo = -10, hi = 10;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (oracle::normal_cdf(mid) < p ? lo : hi) = mid;
    }
    sample.push_back(2.0 + 0.5 * lo);
  }
  const auto r = ks_normality_test(sample, 2.0, 0.5);
  CHECK_FALSE(r.rejected);
  CHECK(r.p_value > 0.5);
}

TEST_CASE("KS errors and affine invariance") {
  const std::vector<double> s{1, 2, 2, 3, 5};
  CHECK_THROWS_WITH_AS(ks_normality_test(s, 2.0, 0.0), "degenerate reference distribution", DataError);
  CHECK_THROWS_AS(ks_normality_test(std::vector<double>{1.0}, 0.0, 1.0), std::invalid_argument);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(12), y(12);
    for (auto& v : x) v = normal(rng);
    const double a = 0.5 + trial, b = -3.0 + trial;
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
    const auto rx = ks_normality_test(x, 0.2, 1.1);
    const auto ry = ks_normality_test(y, a * 0.2 + b, a * 1.1);
    CHECK(ry.statistic == doctest::Approx(rx.statistic).epsilon(1e-9));
  }
}

TEST_CASE("ks_summary skips constant slices") {
  const auto t = parse("user,item,trial,rating\na,x,1,2\na,x,2,3\na,x,3,3\na,x,4,4\na,x,5,3\nb,x,1,4\nb,x,2,4\nb,x,3,4\nb,x,4,4\nb,x,5,4\n");
  const auto summary = ks_summary(t);
  CHECK(summary.tested == 1);
  CHECK(summary.rejected == 0);
}

TEST_CASE("fit_exponential") {
  const std::vector<double> halves(10, 0.5);
  CHECK(fit_exponential(halves).rate == 2.0);
  CHECK(fit_exponential(halves).sample_size == 10);
  CHECK_THROWS_WITH_AS(fit_exponential(std::vector<double>{0.3, 0.0}), doctest::Contains("exponential support violated"),
                       DataError);
  CHECK_THROWS_AS(fit_exponential(std::vector<double>{}), DataError);
}

TEST_CASE("fit_exponential recovers the sampling rate") {
  const auto draws = sample_variances({2.11, 0}, 100000, std::nullopt, 42);
  const auto fit = fit_exponential(std::span<const double>(draws.data(), draws.size()));
  CHECK(std::abs(fit.rate - 2.11) / 2.11 < 0.02);
}

TEST_CASE("sample_variances at 2.8 million draws has the analytic mean") {
  const auto draws = sample_variances({2.11, 0}, 2'800'000, std::nullopt, 7);
  CHECK(std::abs(draws.mean() - 1.0 / 2.11) / (1.0 / 2.11) < 0.005);
}

TEST_CASE("sample_variances contracts") {
  const auto one = sample_variances({2.11, 0}, 1, std::nullopt, 123);
  REQUIRE(one.size() == 1);
  CHECK(one[0] > 0.0);

  const auto bounded = sample_variances({2.11, 0}, 50000, SampleBounds{0.16, 3.84}, 3);
  CHECK(bounded.minCoeff() >= 0.16);
  CHECK(bounded.maxCoeff() <= 3.84);

  CHECK(sample_variances({2.11, 0}, 70000, std::nullopt, 9) == sample_variances({2.11, 0}, 70000, std::nullopt, 9));
  CHECK(sample_variances({2.11, 0}, 100, std::nullopt, 9) != sample_variances({2.11, 0}, 100, std::nullopt, 10));

  CHECK_THROWS_AS(sample_variances({2.11, 0}, 10, SampleBounds{1.0, 0.5}, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_variances({2.11, 0}, 10, SampleBounds{1e6, 2e6}, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_variances({2.11, 0}, 0, std::nullopt, 1), std::invalid_argument);
}

TEST_CASE("variance file round trip and errors") {
  const std::vector<double> v{0.16, 0.5, 3.84, 1e-3};
  std::ostringstream out;
  write_variance_file(out, v);
  std::istringstream in(out.str());
  CHECK(read_variance_file(in) == v);

  std::istringstream bad("variance\n0.3\n-1\n");
  CHECK_THROWS_WITH_AS(read_variance_file(bad), doctest::Contains("line 3"), DataError);
  std::istringstream no_header("0.3\n");
  CHECK_THROWS_AS(read_variance_file(no_header), DataError);
}
