#include "mbar/serialize.hpp"

#include "mbar/error.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace mbar {
namespace {

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double require_number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw DataError(std::string("JSON field '") + key + "' missing or not a number");
  }
  return j.at(key).get<double>();
}

std::uint64_t to_little_endian(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((bits >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return out;
  }
  return bits;
}

}  // namespace

json to_json(const Gaussian& g) { return {{"mean", g.mean}, {"variance", g.variance}}; }

Gaussian gaussian_from_json(const json& j) {
  Gaussian g{require_number(j, "mean"), require_number(j, "variance")};
  if (g.variance < 0.0) throw DataError("Gaussian variance must be >= 0");
  return g;
}

json to_json(const Histogram& h) { return {{"edges", h.edges}, {"heights", h.heights}}; }

Histogram histogram_from_json(const json& j) {
  Histogram h;
  try {
    h.edges = j.at("edges").get<std::vector<double>>();
    h.heights = j.at("heights").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed histogram: ") + e.what());
  }
  if (h.edges.size() != h.heights.size() + 1) throw DataError("histogram needs one more edge than heights");
  return h;
}

json to_json(const MetricSample& s, const std::optional<std::filesystem::path>& values_path) {
  json j;
  if (values_path) {
    write_values_binary(*values_path, s.values);
    j["values_path"] = values_path->string();
  }
  j["trials"] = s.values.size();
  j["mean"] = s.summary.mean;
  j["variance"] = s.summary.variance;
  j["standard_error"] = s.standard_error();
  j["histogram"] = to_json(s.histogram);
  return j;
}

json to_json(const DiscreteDensity& d) {
  return {{"edges", d.edges}, {"masses", std::vector<double>(d.masses.data(), d.masses.data() + d.masses.size())}};
}

json to_json(const RatingDistribution& d) {
  return {{"user", d.user_id}, {"item", d.item_id}, {"mean", d.mean}, {"variance", d.variance}};
}

std::vector<RatingDistribution> distributions_from_json(const json& pairs) {
  if (!pairs.is_array()) throw DataError("'pairs' must be an array");
  std::vector<RatingDistribution> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (!p.contains("user") || !p.contains("item") || !p.at("user").is_string() || !p.at("item").is_string()) {
      throw DataError("pair entry needs string 'user' and 'item'");
    }
    RatingDistribution d{p.at("user").get<std::string>(), p.at("item").get<std::string>(), require_number(p, "mean"),
                         require_number(p, "variance")};
    if (d.variance < 0.0) throw DataError("pair (" + d.user_id + "," + d.item_id + ") has negative variance");
    out.push_back(std::move(d));
  }
  return out;
}

json to_json(const ExponentialFit& fit) { return {{"rate", fit.rate}, {"sample_size", fit.sample_size}}; }

json to_json(const KSSummary& ks) {
  return {{"alpha", ks.alpha}, {"tested", ks.tested}, {"rejected", ks.rejected}};
}

json to_json(const CriterionResult& c) {
  return {{"differentiated_analysis_needed", c.differentiated_analysis_needed},
          {"margin", c.margin},
          {"simplified_needed", c.simplified_needed},
          {"mean_gap", c.mean_gap},
          {"simplified_threshold", c.simplified_threshold},
          {"verdict", c.simplified_needed ? "needed" : "improvable"}};
}

json to_json(std::span<const SensitivityRow> rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"axis_value", r.axis_value},
                   {"mean", r.barrier.mean},
                   {"variance", r.barrier.variance},
                   {"min_mean", r.lower.mean},
                   {"min_variance", r.lower.variance},
                   {"max_mean", r.upper.mean},
                   {"max_variance", r.upper.variance}});
  }
  return out;
}

void write_csv(std::ostream& out, std::span<const SensitivityRow> rows) {
  out << "axis_value,mean,variance,min_mean,min_variance,max_mean,max_variance\n";
  for (const auto& r : rows) {
    out << fmt(r.axis_value) << ',' << fmt(r.barrier.mean) << ',' << fmt(r.barrier.variance) << ','
        << fmt(r.lower.mean) << ',' << fmt(r.lower.variance) << ',' << fmt(r.upper.mean) << ','
        << fmt(r.upper.variance) << '\n';
  }
}

json to_json(std::span<const RankingErrorRow> rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"delta", r.delta}, {"offset", r.offset}, {"error_probability", r.error_probability}});
  }
  return out;
}

void write_csv(std::ostream& out, std::span<const RankingErrorRow> rows) {
  out << "delta,offset,error_probability\n";
  for (const auto& r : rows) out << fmt(r.delta) << ',' << fmt(r.offset) << ',' << fmt(r.error_probability) << '\n';
}

std::string ordering_label(const std::vector<std::size_t>& ordering) {
  std::string label;
  for (std::size_t i = 0; i < ordering.size(); ++i) {
    if (i) label += '<';
    label += std::to_string(ordering[i]);
  }
  return label;
}

json to_json(const RankDistribution& r) {
  json rows = json::array();
  for (const auto& [ordering, count] : r.counts) {
    rows.push_back({{"ordering", ordering_label(ordering)},
                    {"count", count},
                    {"probability", static_cast<double>(count) / static_cast<double>(r.trials)}});
  }
  return {{"trials", r.trials}, {"orderings", rows}};
}

void write_csv(std::ostream& out, const RankDistribution& r) {
  out << "ordering,count,probability\n";
  for (const auto& [ordering, count] : r.counts) {
    out << ordering_label(ordering) << ',' << count << ','
        << fmt(static_cast<double>(count) / static_cast<double>(r.trials)) << '\n';
  }
}

void write_values_binary(const std::filesystem::path& path, std::span<const double> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (double v : values) {
    const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    out.write(bytes, 8);
  }
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<double> read_values_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<double> values;
  char bytes[8];
  while (in.read(bytes, 8)) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, bytes, 8);
    values.push_back(std::bit_cast<double>(to_little_endian(bits)));
  }
  if (in.gcount() != 0) throw DataError(path.string() + ": size is not a multiple of 8 bytes");
  return values;
}

PredictorVector read_predictors_csv(std::istream& in, std::span<const RatingDistribution> dists) {
  std::map<PairKey, double> table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!have_header) {
      if (fields != std::vector<std::string>{"user", "item", "prediction"}) {
        throw DataError("line " + std::to_string(line_no) + ": expected header 'user,item,prediction'");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != 3) throw DataError("line " + std::to_string(line_no) + ": expected 3 fields");
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), value);
    if (ec != std::errc{} || ptr != fields[2].data() + fields[2].size()) {
      throw DataError("line " + std::to_string(line_no) + ": prediction is not a number");
    }
    if (!table.emplace(PairKey{fields[0], fields[1]}, value).second) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate pair (" + fields[0] + "," + fields[1] + ")");
    }
  }
  if (!have_header) throw DataError("predictor file: missing header");

  PredictorVector p{keys_of(dists), Eigen::VectorXd(static_cast<Eigen::Index>(dists.size()))};
  for (std::size_t i = 0; i < dists.size(); ++i) {
    const auto it = table.find(p.keys[i]);
    if (it == table.end()) {
      throw DataError("no prediction for pair (" + p.keys[i].first + "," + p.keys[i].second + ")");
    }
    p.predictions[static_cast<Eigen::Index>(i)] = it->second;
  }
  return p;
}

void write_predictors_csv(std::ostream& out, const PredictorVector& p) {
  out << "user,item,prediction\n";
  for (std::size_t i = 0; i < p.keys.size(); ++i) {
    out << p.keys[i].first << ',' << p.keys[i].second << ',' << fmt(p.predictions[static_cast<Eigen::Index>(i)])
        << '\n';
  }
}

}  // namespace mbar
