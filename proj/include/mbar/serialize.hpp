#pragma once

#include "mbar/analysis.hpp"
#include "mbar/core.hpp"
#include "mbar/ingest.hpp"
#include "mbar/mc_engine.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mbar {

using json = nlohmann::ordered_json;

json to_json(const Gaussian& g);
Gaussian gaussian_from_json(const json& j);

json to_json(const Histogram& h);
Histogram histogram_from_json(const json& j);

/// {"values_path"?, "mean", "variance", "histogram": {"edges", "heights"}}.
/// When `values_path` is given the raw values are written there as
/// little-endian float64 and the path is recorded.
json to_json(const MetricSample& s, const std::optional<std::filesystem::path>& values_path = std::nullopt);

json to_json(const DiscreteDensity& d);

json to_json(const RatingDistribution& d);
std::vector<RatingDistribution> distributions_from_json(const json& pairs);

json to_json(const ExponentialFit& fit);
json to_json(const KSSummary& ks);
json to_json(const CriterionResult& c);

json to_json(std::span<const SensitivityRow> rows);
void write_csv(std::ostream& out, std::span<const SensitivityRow> rows);

json to_json(std::span<const RankingErrorRow> rows);
void write_csv(std::ostream& out, std::span<const RankingErrorRow> rows);

/// Orderings rendered as "0<1<2" (best first).
std::string ordering_label(const std::vector<std::size_t>& ordering);
json to_json(const RankDistribution& r);
void write_csv(std::ostream& out, const RankDistribution& r);

void write_values_binary(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_values_binary(const std::filesystem::path& path);

/// Predictor CSV `user,item,prediction`, reordered to match `dists`. Throws
/// DataError when a pair has no prediction or the file is malformed.
PredictorVector read_predictors_csv(std::istream& in, std::span<const RatingDistribution> dists);
void write_predictors_csv(std::ostream& out, const PredictorVector& p);

}  // namespace mbar
