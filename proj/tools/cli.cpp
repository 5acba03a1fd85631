#include "cli.hpp"

#include "mbar/analysis.hpp"
#include "mbar/approx.hpp"
#include "mbar/error.hpp"
#include "mbar/ingest.hpp"
#include "mbar/mc_engine.hpp"
#include "mbar/serialize.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace mbar::cli {
namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string subcommand;
  ScaleSpec scale;
  MCConfig mc;
  std::string metric_name = "rmse";
  std::string format = "json";
  std::string out_path;
  int verbosity = 0;
  json options = json::object();

  MetricKind metric() const { return parse_metric(metric_name); }

  json to_json() const {
    return {{"scale", {{"min_category", scale.min_category},
                       {"max_category", scale.max_category},
                       {"num_trials", scale.num_trials}}},
            {"mc", {{"tau", mc.trials}, {"bins", mc.resolved_bins()}, {"seed", mc.master_seed}}},
            {"metric", metric_name},
            {"format", format},
            {"options", options}};
  }
};

json header(const RunConfig& rc) {
  return {{"tool", "mbar"}, {"version", kToolVersion}, {"command", rc.subcommand}, {"config", rc.to_json()}};
}

std::string csv_preamble(const RunConfig& rc) {
  return "# " + header(rc).dump() + "\n";
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

// key,value rows for the scalar (and nested scalar) fields of a document.
void flatten(const json& j, const std::string& prefix, std::ostream& out) {
  for (const auto& [key, value] : j.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      flatten(value, name, out);
    } else if (value.is_primitive()) {
      out << name << ',' << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
    }
  }
}

std::string render_document(const RunConfig& rc, const json& doc) {
  if (rc.format == "csv") {
    std::ostringstream ss;
    ss << csv_preamble(rc) << "field,value\n";
    json body = doc;
    for (const char* k : {"tool", "version", "command", "config"}) body.erase(k);
    flatten(body, "", ss);
    return ss.str();
  }
  return doc.dump(2) + "\n";
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

json read_json_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::vector<RatingDistribution> load_pairs(const std::string& path, bool all_pairs) {
  const json doc = read_json_file(path);
  if (!doc.is_array() && !doc.contains("pairs")) throw DataError(path + ": no 'pairs' array");
  auto dists = distributions_from_json(doc.is_array() ? doc : doc.at("pairs"));
  return all_pairs ? dists : filter_nonvanishing(dists);
}

std::vector<double> parse_grid(const std::string& text, const std::string& flag) {
  std::vector<double> grid;
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw UsageError(flag + ": '" + s + "' is not a number");
    }
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() != 3) throw UsageError(flag + ": range must be start:stop:step");
    const double start = number(parts[0]);
    const double stop = number(parts[1]);
    const double step = number(parts[2]);
    if (!(step > 0.0) || stop < start) throw UsageError(flag + ": invalid range " + text);
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) grid.push_back(start + step * static_cast<double>(i));
  } else {
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) grid.push_back(number(part));
  }
  if (grid.empty()) throw UsageError(flag + ": empty grid");
  return grid;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string tensor;
  double alpha = 0.05;
};

std::string cmd_ingest(RunConfig& rc, const IngestArgs& a, std::ostream& err) {
  rc.options = {{"tensor", a.tensor}, {"alpha", a.alpha}};
  auto in = open_input(a.tensor);
  const RatingTensor tensor = parse_tensor(in, rc.scale);
  const auto dists = fit_pair_gaussians(tensor);
  const auto nonvanishing = filter_nonvanishing(dists);

  if (rc.format == "csv") {
    std::ostringstream ss;
    ss << csv_preamble(rc) << "user,item,mean,variance\n";
    for (const auto& d : dists) ss << d.user_id << ',' << d.item_id << ',' << fmt(d.mean) << ',' << fmt(d.variance) << '\n';
    return ss.str();
  }

  json doc = header(rc);
  doc["record_count"] = tensor.size();
  doc["pair_count"] = dists.size();
  doc["nonvanishing_count"] = nonvanishing.size();
  json fractions = json::object();
  for (const auto& [item, f] : item_nonzero_fractions(dists)) fractions[item] = f;
  doc["item_nonzero_fractions"] = fractions;

  const Eigen::VectorXd variances = variances_of(nonvanishing);
  try {
    doc["exponential"] = to_json(fit_exponential(std::span<const double>(variances.data(), variances.size())));
  } catch (const DataError& e) {
    err << "warning: exponential fit unavailable: " << e.what() << '\n';
    doc["exponential"] = {{"error", e.what()}};
  }
  if (nonvanishing.empty()) err << "warning: no pair has nonzero variance\n";
  doc["ks"] = to_json(ks_summary(tensor, a.alpha));

  json pairs = json::array();
  for (const auto& d : dists) pairs.push_back(to_json(d));
  doc["pairs"] = std::move(pairs);
  return render_document(rc, doc);
}

struct EstimateArgs {
  std::string pairs;
  std::string variances;
  bool all_pairs = false;
};

std::string cmd_estimate(RunConfig& rc, const EstimateArgs& a, std::ostream& err) {
  if (a.pairs.empty() == a.variances.empty()) throw UsageError("estimate: give exactly one of PAIRS or --variances");
  rc.options = {{"pairs", a.pairs}, {"variances", a.variances}, {"all_pairs", a.all_pairs}};

  Eigen::VectorXd variances;
  if (!a.pairs.empty()) {
    variances = variances_of(load_pairs(a.pairs, a.all_pairs));
  } else {
    auto in = open_input(a.variances);
    const auto values = read_variance_file(in);
    variances = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  }
  if (variances.size() == 0) throw DegenerateError("no rating distributions to estimate from");
  if (variances.size() < 100) {
    err << "warning: N = " << variances.size() << " < 100; the Gaussian shape of the barrier is less reliable\n";
  }

  const auto start = std::chrono::steady_clock::now();
  const Gaussian barrier = rc.metric() == MetricKind::RMSE
                               ? magic_barrier_rmse(variances)
                               : mae_distribution(variances, Eigen::VectorXd::Zero(variances.size()));
  err << "closed form: " << elapsed_ms(start) << " ms for N = " << variances.size() << '\n';

  json doc = header(rc);
  doc["n"] = variances.size();
  doc["mean"] = barrier.mean;
  doc["variance"] = barrier.variance;
  if (rc.metric() == MetricKind::RMSE) {
    const auto diag = barrier_diagnostics(variances);
    doc["second_order"] = to_json(diag.second_order);
  }
  return render_document(rc, doc);
}

struct SimulateArgs {
  std::string pairs;
  std::string predictors;
  bool optimal = false;
  bool all_pairs = false;
  std::string values_path;
  std::vector<double> clip;
};

std::string cmd_simulate(RunConfig& rc, const SimulateArgs& a, std::ostream& err) {
  if (!a.predictors.empty() && a.optimal) throw UsageError("simulate: --predictors and --optimal are exclusive");
  if (!a.clip.empty() && a.clip.size() != 2) throw UsageError("simulate: --clip takes LOW HIGH");
  rc.options = {{"pairs", a.pairs}, {"predictors", a.predictors}, {"optimal", a.predictors.empty()},
                {"all_pairs", a.all_pairs}, {"values_path", a.values_path}, {"clip", a.clip}};
  if (rc.mc.trials >= 10'000'000) err << "note: tau >= 1e7 is long-running\n";

  const auto dists = load_pairs(a.pairs, a.all_pairs);
  if (dists.empty()) throw DegenerateError("no rating distributions to simulate");
  PredictorVector predictors;
  if (a.predictors.empty()) {
    predictors = optimal_predictors(dists, rc.metric());
  } else {
    auto in = open_input(a.predictors);
    predictors = read_predictors_csv(in, dists);
  }
  MCConfig mc = rc.mc;
  if (!a.clip.empty()) mc.clip = std::make_pair(a.clip[0], a.clip[1]);

  const MetricSample sample = simulate_metric(dists, predictors, rc.metric(), mc);
  json doc = header(rc);
  doc["n"] = dists.size();
  doc.update(to_json(sample, a.values_path.empty() ? std::nullopt
                                                  : std::optional<std::filesystem::path>(a.values_path)));
  return render_document(rc, doc);
}

struct CompareArgs {
  std::string barrier;
  std::string rmse;
  double normalizer = 1.0;
};

std::string cmd_compare(RunConfig& rc, const CompareArgs& a, std::ostream&) {
  rc.options = {{"barrier", a.barrier}, {"rmse", a.rmse}, {"jsd_normalizer", a.normalizer}};
  const json bj = read_json_file(a.barrier);
  const json rj = read_json_file(a.rmse);
  const Gaussian mb = gaussian_from_json(bj);
  const Gaussian rmse = gaussian_from_json(rj);

  json doc = header(rc);
  doc["barrier"] = to_json(mb);
  doc["rmse"] = to_json(rmse);
  doc["interference_probability"] = interference_probability(mb, rmse);
  doc["interference_probability_quadrature"] = interference_probability_quadrature(mb, rmse);
  doc["criterion"] = to_json(improvement_criterion(mb, rmse));

  if (bj.contains("histogram") && rj.contains("histogram")) {
    const auto hb = DiscreteDensity::from_histogram(histogram_from_json(bj.at("histogram")));
    const auto hr = DiscreteDensity::from_histogram(histogram_from_json(rj.at("histogram")));
    const double lo = std::min(hb.edges.front(), hr.edges.front());
    const double hi = std::max(hb.edges.back(), hr.edges.back());
    const std::size_t bins = std::max(hb.masses.size(), hr.masses.size());
    std::vector<double> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    edges.back() = hi;
    doc["jsd"] = jsd(hb.rebinned(edges), hr.rebinned(edges), a.normalizer);
  }
  return render_document(rc, doc);
}

struct SensitivityArgs {
  std::string axis = "n";
  std::string grid;
  double fixed = 0.0;
};

std::string cmd_sensitivity(RunConfig& rc, const SensitivityArgs& a, std::ostream&) {
  rc.options = {{"axis", a.axis}, {"grid", a.grid}, {"fixed", a.fixed}};
  SweepAxis axis;
  if (a.axis == "n") {
    axis = SweepAxis::NumRatings;
  } else if (a.axis == "variance") {
    axis = SweepAxis::Variance;
  } else {
    throw UsageError("sensitivity: --axis must be n or variance");
  }
  const auto grid = parse_grid(a.grid, "--grid");
  const auto rows = sensitivity_sweep(axis, grid, a.fixed, rc.scale);
  if (rc.format == "csv") {
    std::ostringstream ss;
    ss << csv_preamble(rc);
    write_csv(ss, std::span<const SensitivityRow>(rows));
    return ss.str();
  }
  json doc = header(rc);
  doc["rows"] = to_json(std::span<const SensitivityRow>(rows));
  return doc.dump(2) + "\n";
}

struct RankCurvesArgs {
  std::string deltas;
  std::string offsets;
  std::string pairs;
  std::string variances;
  double lambda = 0.0;
  std::size_t n = 0;
  double noise_scale = 1.0;
  bool simulate = false;
};

std::string cmd_rankcurves(RunConfig& rc, const RankCurvesArgs& a, std::ostream&) {
  rc.options = {{"deltas", a.deltas}, {"offsets", a.offsets}, {"pairs", a.pairs}, {"variances", a.variances},
                {"lambda", a.lambda}, {"n", a.n}, {"noise_scale", a.noise_scale}, {"simulate", a.simulate}};
  NoiseSweepConfig cfg;
  cfg.relative_differences = parse_grid(a.deltas, "--deltas");
  cfg.offsets = parse_grid(a.offsets, "--offsets");
  cfg.noise_scale = a.noise_scale;
  cfg.seed = rc.mc.master_seed;

  const int sources = !a.pairs.empty() + !a.variances.empty() + (a.lambda > 0.0);
  if (sources != 1) throw UsageError("rankcurves: give exactly one of --pairs, --variances, --lambda");
  if (!a.pairs.empty()) {
    cfg.base_variances = variances_of(load_pairs(a.pairs, false));
  } else if (!a.variances.empty()) {
    auto in = open_input(a.variances);
    const auto values = read_variance_file(in);
    cfg.base_variances = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  } else {
    if (a.n < 1) throw UsageError("rankcurves: --lambda needs --n >= 1");
    cfg.base_variances = sample_variances({a.lambda, 0}, a.n, std::nullopt, rc.mc.master_seed);
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto rows = a.simulate ? ranking_error_curves_simulated(cfg, rc.mc) : ranking_error_curves(cfg);
  if (rc.format == "csv") {
    std::ostringstream ss;
    ss << csv_preamble(rc);
    write_csv(ss, std::span<const RankingErrorRow>(rows));
    return ss.str();
  }
  json doc = header(rc);
  doc["rows"] = to_json(std::span<const RankingErrorRow>(rows));
  return doc.dump(2) + "\n";
}

struct RankArgs {
  std::string pairs;
  std::vector<std::string> predictors;
  bool include_optimal = false;
  bool all_pairs = false;
};

std::string cmd_rank(RunConfig& rc, const RankArgs& a, std::ostream&) {
  rc.options = {{"pairs", a.pairs}, {"predictors", a.predictors}, {"include_optimal", a.include_optimal},
                {"all_pairs", a.all_pairs}};
  const auto dists = load_pairs(a.pairs, a.all_pairs);
  if (dists.empty()) throw DegenerateError("no rating distributions to rank on");
  std::vector<PredictorVector> systems;
  json labels = json::array();
  if (a.include_optimal) {
    systems.push_back(optimal_predictors(dists, rc.metric()));
    labels.push_back("optimal");
  }
  for (const auto& path : a.predictors) {
    auto in = open_input(path);
    systems.push_back(read_predictors_csv(in, dists));
    labels.push_back(path);
  }
  if (systems.empty()) throw UsageError("rank: no systems (use --predictors and/or --include-optimal)");

  const auto ranking = rank_distribution(systems, dists, rc.metric(), rc.mc);
  if (rc.format == "csv") {
    std::ostringstream ss;
    ss << csv_preamble(rc);
    write_csv(ss, ranking);
    return ss.str();
  }
  json doc = header(rc);
  doc["systems"] = labels;
  doc.update(to_json(ranking));
  return doc.dump(2) + "\n";
}

struct TransferArgs {
  double lambda = 2.11;
  std::size_t n = 2'800'000;
  double competitor = 0.8567;
  std::optional<double> competitor_variance;
  std::vector<double> bounds;
};

std::string cmd_transfer(RunConfig& rc, const TransferArgs& a, std::ostream& err) {
  if (!a.bounds.empty() && a.bounds.size() != 2) throw UsageError("transfer: --bounds takes LOW HIGH");
  if (!(a.lambda > 0.0) || a.n < 1) throw UsageError("transfer: need --lambda > 0 and --n >= 1");
  rc.options = {{"lambda", a.lambda}, {"n", a.n}, {"competitor", a.competitor}, {"bounds", a.bounds}};
  if (a.competitor_variance) rc.options["competitor_variance"] = *a.competitor_variance;

  std::optional<SampleBounds> bounds;
  if (!a.bounds.empty()) bounds = SampleBounds{a.bounds[0], a.bounds[1]};
  const Eigen::VectorXd variances = sample_variances({a.lambda, 0}, a.n, bounds, rc.mc.master_seed);

  const auto start = std::chrono::steady_clock::now();
  const Gaussian barrier = magic_barrier_rmse(variances);
  err << "closed form: " << elapsed_ms(start) << " ms for N = " << a.n << '\n';

  const Gaussian competitor{a.competitor, a.competitor_variance.value_or(barrier.variance)};
  json doc = header(rc);
  doc["sampled_mean_variance"] = compensated_sum(variances) / static_cast<double>(variances.size());
  doc["analytic_barrier_mean"] = std::sqrt(1.0 / a.lambda);
  doc["barrier"] = to_json(barrier);
  doc["competitor"] = to_json(competitor);
  doc["interference_probability"] = interference_probability(barrier, competitor);
  doc["criterion"] = to_json(improvement_criterion(barrier, competitor));
  return render_document(rc, doc);
}

void write_output(const RunConfig& rc, const std::string& text, std::ostream& out) {
  if (rc.out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(rc.out_path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot open " + rc.out_path + " for writing");
  file << text;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distribution-level recommender evaluation: magic barrier estimation and analysis", "mbar"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  RunConfig rc;
  std::uint64_t seed = rc.mc.master_seed;
  app.add_option("--scale-min", rc.scale.min_category, "Lowest rating category")->capture_default_str();
  app.add_option("--scale-max", rc.scale.max_category, "Highest rating category")->capture_default_str();
  app.add_option("--trials", rc.scale.num_trials, "Repeated ratings per pair")->capture_default_str();
  app.add_option("--tau", rc.mc.trials, "Monte-Carlo trials")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--bins", rc.mc.bins, "Histogram bins (0 = ceil(sqrt(tau)) capped at 512)")->capture_default_str();
  app.add_option("--seed", seed, "Master seed")->capture_default_str();
  app.add_option("--threads", rc.mc.threads, "Worker threads (0 = all cores); never changes results");
  app.add_option("--metric", rc.metric_name, "rmse or mae")->check(CLI::IsMember({"rmse", "mae"}))->capture_default_str();
  app.add_option("--format", rc.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app.add_option("--out", rc.out_path, "Output file (default stdout)");
  app.add_flag("-v,--verbose", rc.verbosity, "More diagnostics on stderr");
  app.fallthrough();

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Fit per-pair Gaussians to a re-rating tensor CSV");
  c_ingest->add_option("tensor", ingest.tensor, "Tensor CSV (user,item,trial,rating)")->required();
  c_ingest->add_option("--alpha", ingest.alpha, "KS significance level")->capture_default_str();

  EstimateArgs estimate;
  auto* c_estimate = app.add_subcommand("estimate", "Closed-form barrier distribution");
  c_estimate->add_option("pairs", estimate.pairs, "pairs.json from ingest");
  c_estimate->add_option("--variances", estimate.variances, "Variance file instead of pairs.json");
  c_estimate->add_flag("--all-pairs", estimate.all_pairs, "Keep zero-variance pairs");

  SimulateArgs simulate;
  auto* c_simulate = app.add_subcommand("simulate", "Monte-Carlo metric distribution");
  c_simulate->add_option("pairs", simulate.pairs, "pairs.json from ingest")->required();
  c_simulate->add_option("--predictors", simulate.predictors, "Predictor CSV (user,item,prediction)");
  c_simulate->add_flag("--optimal", simulate.optimal, "Use the optimal predictors (default)");
  c_simulate->add_flag("--all-pairs", simulate.all_pairs, "Keep zero-variance pairs");
  c_simulate->add_option("--values-path", simulate.values_path, "Write raw float64 LE values here");
  c_simulate->add_option("--clip", simulate.clip, "Clip draws to LOW HIGH")->expected(2);

  CompareArgs compare;
  auto* c_compare = app.add_subcommand("compare", "Interference probability and improvement criterion");
  c_compare->add_option("barrier", compare.barrier, "Barrier JSON (estimate or simulate output)")->required();
  c_compare->add_option("rmse", compare.rmse, "System RMSE JSON")->required();
  c_compare->add_option("--jsd-normalizer", compare.normalizer, "Divisor for the JSD")->capture_default_str();

  SensitivityArgs sensitivity;
  auto* c_sens = app.add_subcommand("sensitivity", "Barrier sensitivity over N or variance");
  c_sens->add_option("--axis", sensitivity.axis, "n or variance")->capture_default_str();
  c_sens->add_option("--grid", sensitivity.grid, "Comma list or start:stop:step")->required();
  c_sens->add_option("--fixed", sensitivity.fixed, "Variance (axis n) or N (axis variance)")->required();

  RankCurvesArgs curves;
  auto* c_curves = app.add_subcommand("rankcurves", "Point-paradigm ranking error vs distance from the barrier");
  c_curves->add_option("--deltas", curves.deltas, "Relative noise differences")->required();
  c_curves->add_option("--offsets", curves.offsets, "Noise levels of the better system")->required();
  c_curves->add_option("--pairs", curves.pairs, "Base variances from pairs.json");
  c_curves->add_option("--variances", curves.variances, "Base variances from a variance file");
  c_curves->add_option("--lambda", curves.lambda, "Sample base variances from Exp(lambda)");
  c_curves->add_option("--n", curves.n, "Number of sampled base variances");
  c_curves->add_option("--noise-scale", curves.noise_scale, "Rating units per noise level")->capture_default_str();
  c_curves->add_flag("--simulate", curves.simulate, "Estimate by Monte-Carlo instead of closed form");

  RankArgs rank;
  auto* c_rank = app.add_subcommand("rank", "Distribution of ranking orders over shared-draw trials");
  c_rank->add_option("pairs", rank.pairs, "pairs.json from ingest")->required();
  c_rank->add_option("--predictors", rank.predictors, "Predictor CSV per system (repeatable)");
  c_rank->add_flag("--include-optimal", rank.include_optimal, "Add the optimal recommender as system 0");
  c_rank->add_flag("--all-pairs", rank.all_pairs, "Keep zero-variance pairs");

  TransferArgs transfer;
  auto* c_transfer = app.add_subcommand("transfer", "Barrier for a large record with sampled variances");
  c_transfer->add_option("--lambda", transfer.lambda, "Exponential rate of the variances")->capture_default_str();
  c_transfer->add_option("--n", transfer.n, "Number of ratings")->capture_default_str();
  c_transfer->add_option("--competitor", transfer.competitor, "Competitor expected RMSE")->capture_default_str();
  c_transfer->add_option("--competitor-variance", transfer.competitor_variance,
                         "Competitor RMSE variance (default: barrier variance)");
  c_transfer->add_option("--bounds", transfer.bounds, "Truncate sampled variances to LOW HIGH")->expected(2);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kOk : kUsage;
  }

  rc.mc.master_seed = seed;
  try {
    rc.scale.validate();
    rc.mc.validate();
    std::string text;
    if (c_ingest->parsed()) {
      rc.subcommand = "ingest";
      text = cmd_ingest(rc, ingest, err);
    } else if (c_estimate->parsed()) {
      rc.subcommand = "estimate";
      text = cmd_estimate(rc, estimate, err);
    } else if (c_simulate->parsed()) {
      rc.subcommand = "simulate";
      text = cmd_simulate(rc, simulate, err);
    } else if (c_compare->parsed()) {
      rc.subcommand = "compare";
      text = cmd_compare(rc, compare, err);
    } else if (c_sens->parsed()) {
      rc.subcommand = "sensitivity";
      text = cmd_sensitivity(rc, sensitivity, err);
    } else if (c_curves->parsed()) {
      rc.subcommand = "rankcurves";
      text = cmd_rankcurves(rc, curves, err);
    } else if (c_rank->parsed()) {
      rc.subcommand = "rank";
      text = cmd_rank(rc, rank, err);
    } else {
      rc.subcommand = "transfer";
      text = cmd_transfer(rc, transfer, err);
    }
    write_output(rc, text, out);
    return kOk;
  } catch (const DegenerateError& e) {
    err << "error: " << e.what() << '\n';
    return kDegenerate;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace mbar::cli
