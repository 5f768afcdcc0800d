#ifndef POTVINE_CLI_HPP
#define POTVINE_CLI_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "potvine/counterfactual.hpp"
#include "potvine/csv.hpp"
#include "potvine/diagnostics.hpp"
#include "potvine/errors.hpp"
#include "potvine/margins.hpp"
#include "potvine/optimize.hpp"
#include "potvine/serialize.hpp"
#include "potvine/vine.hpp"

namespace potvine::cli {

struct RunConfig {
  std::string input_path;
  std::string timestamp_column;
  std::vector<std::string> variables;  // empty: every column except the timestamp
  std::string cause_variable;
  int horizon = 1;
  int markov_order = 0;  // fixed order when > 0
  int order_min = 1;
  int order_max = 3;
  std::vector<double> candidate_quantiles{0.80, 0.85, 0.90, 0.95};
  double alpha = 0.05;
  int replicates = 500;
  std::vector<std::string> families{"clayton", "gumbel", "frank", "joe"};
  std::string criterion = "mbicv";
  double psi0 = 0.9;
  double independence_level = 0.05;
  std::string transform = "exponential";
  double transform_shape = 0.0;
  double transform_scale = 1.0;
  double impact_threshold = std::numeric_limits<double>::quiet_NaN();
  double impact_quantile = std::numeric_limits<double>::quiet_NaN();
  std::string v_grid;  // "lo:hi:count"
  std::vector<std::string> pc_kinds{"pns"};
  std::vector<double> lambdas{0.0};
  std::vector<int> norms{1};
  bool include_cause = true;
  bool ablation = false;
  int n_synthetic = 1500;
  double noise_fraction = 0.0;
  bool normalize = true;
  std::uint64_t seed = 0;
  std::string output_dir = "potvine_out";
  std::vector<std::string> quantile_overrides;  // NAME=Q entries
  // simulate
  int n_samples = 1000;
  int path_length = 0;
  std::string scale = "u";
  // optimize
  std::string source = "empirical";
  bool tail_approx = false;
  int generations = 300;
  int population_factor = 10;
  int refine_iterations = 200;
  // diagnose
  int max_lag = 40;
  double extremal_u = 0.95;
  int histogram_bins = 30;
  bool stamp = false;
};

namespace detail {

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  for (const auto& [key, val] : j.items()) {
    try {
      if (key == "input") cfg.input_path = val.get<std::string>();
      else if (key == "timestamp-column") cfg.timestamp_column = val.get<std::string>();
      else if (key == "variables") cfg.variables = val.get<std::vector<std::string>>();
      else if (key == "cause") cfg.cause_variable = val.get<std::string>();
      else if (key == "horizon") cfg.horizon = val.get<int>();
      else if (key == "markov-order") cfg.markov_order = val.get<int>();
      else if (key == "order-min") cfg.order_min = val.get<int>();
      else if (key == "order-max") cfg.order_max = val.get<int>();
      else if (key == "candidate-quantiles") cfg.candidate_quantiles = val.get<std::vector<double>>();
      else if (key == "alpha") cfg.alpha = val.get<double>();
      else if (key == "replicates") cfg.replicates = val.get<int>();
      else if (key == "families") cfg.families = val.get<std::vector<std::string>>();
      else if (key == "criterion") cfg.criterion = val.get<std::string>();
      else if (key == "psi0") cfg.psi0 = val.get<double>();
      else if (key == "independence-level") cfg.independence_level = val.get<double>();
      else if (key == "transform") cfg.transform = val.get<std::string>();
      else if (key == "transform-shape") cfg.transform_shape = val.get<double>();
      else if (key == "transform-scale") cfg.transform_scale = val.get<double>();
      else if (key == "impact-threshold") cfg.impact_threshold = val.get<double>();
      else if (key == "impact-quantile") cfg.impact_quantile = val.get<double>();
      else if (key == "v-grid") cfg.v_grid = val.get<std::string>();
      else if (key == "pc") cfg.pc_kinds = val.get<std::vector<std::string>>();
      else if (key == "lambdas") cfg.lambdas = val.get<std::vector<double>>();
      else if (key == "norms") cfg.norms = val.get<std::vector<int>>();
      else if (key == "include-cause") cfg.include_cause = val.get<bool>();
      else if (key == "ablation") cfg.ablation = val.get<bool>();
      else if (key == "n-synthetic") cfg.n_synthetic = val.get<int>();
      else if (key == "noise-fraction") cfg.noise_fraction = val.get<double>();
      else if (key == "normalize") cfg.normalize = val.get<bool>();
      else if (key == "seed") cfg.seed = val.get<std::uint64_t>();
      else if (key == "out") cfg.output_dir = val.get<std::string>();
      else if (key == "quantile-override") cfg.quantile_overrides = val.get<std::vector<std::string>>();
      else if (key == "n") cfg.n_samples = val.get<int>();
      else if (key == "path") cfg.path_length = val.get<int>();
      else if (key == "scale") cfg.scale = val.get<std::string>();
      else if (key == "source") cfg.source = val.get<std::string>();
      else if (key == "tail-approx") cfg.tail_approx = val.get<bool>();
      else if (key == "generations") cfg.generations = val.get<int>();
      else if (key == "population-factor") cfg.population_factor = val.get<int>();
      else if (key == "refine-iterations") cfg.refine_iterations = val.get<int>();
      else if (key == "max-lag") cfg.max_lag = val.get<int>();
      else if (key == "extremal-u") cfg.extremal_u = val.get<double>();
      else if (key == "histogram-bins") cfg.histogram_bins = val.get<int>();
      else throw ConfigError("unknown config key: " + key);
    } catch (const Json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
}

// Canonical config dump: everything that affects results, never the output
// location, so reruns into different directories stay byte-identical.
inline Json config_to_json(const RunConfig& c, const std::string& command) {
  Json j;
  j["command"] = command;
  j["input"] = c.input_path;
  j["timestamp-column"] = c.timestamp_column;
  j["variables"] = c.variables;
  j["cause"] = c.cause_variable;
  j["horizon"] = c.horizon;
  j["markov-order"] = c.markov_order;
  j["order-min"] = c.order_min;
  j["order-max"] = c.order_max;
  j["candidate-quantiles"] = c.candidate_quantiles;
  j["alpha"] = c.alpha;
  j["replicates"] = c.replicates;
  j["families"] = c.families;
  j["criterion"] = c.criterion;
  j["psi0"] = c.psi0;
  j["independence-level"] = c.independence_level;
  j["transform"] = c.transform;
  j["transform-shape"] = c.transform_shape;
  j["transform-scale"] = c.transform_scale;
  j["impact-threshold"] = c.impact_threshold;
  j["impact-quantile"] = c.impact_quantile;
  j["v-grid"] = c.v_grid;
  j["pc"] = c.pc_kinds;
  j["lambdas"] = c.lambdas;
  j["norms"] = c.norms;
  j["include-cause"] = c.include_cause;
  j["ablation"] = c.ablation;
  j["n-synthetic"] = c.n_synthetic;
  j["noise-fraction"] = c.noise_fraction;
  j["normalize"] = c.normalize;
  j["seed"] = c.seed;
  j["quantile-override"] = c.quantile_overrides;
  j["n"] = c.n_samples;
  j["path"] = c.path_length;
  j["scale"] = c.scale;
  j["source"] = c.source;
  j["tail-approx"] = c.tail_approx;
  j["generations"] = c.generations;
  j["population-factor"] = c.population_factor;
  j["refine-iterations"] = c.refine_iterations;
  j["max-lag"] = c.max_lag;
  j["extremal-u"] = c.extremal_u;
  j["histogram-bins"] = c.histogram_bins;
  // NaN is not valid JSON; encode the unset sentinels as null
  if (std::isnan(c.impact_threshold)) j["impact-threshold"] = nullptr;
  if (std::isnan(c.impact_quantile)) j["impact-quantile"] = nullptr;
  return j;
}

inline std::vector<std::string> csv_header_only(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open input file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty csv: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) header.push_back(cell);
  return header;
}

struct Dataset {
  std::vector<std::string> names;
  Matrix data;  // n x d, preprocessed
};

// Column-role validation happens on the header before any numeric parsing.
inline Dataset load_dataset(const RunConfig& cfg, bool require_cause) {
  const auto header = csv_header_only(cfg.input_path);
  auto col_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw ConfigError("column '" + name + "' not found in " + cfg.input_path);
    return static_cast<std::size_t>(it - header.begin());
  };

  std::vector<std::string> wanted = cfg.variables;
  if (wanted.empty()) {
    for (const auto& h : header)
      if (h != cfg.timestamp_column) wanted.push_back(h);
  }
  if (!cfg.timestamp_column.empty()) col_of(cfg.timestamp_column);
  std::vector<std::size_t> idx;
  for (const auto& name : wanted) idx.push_back(col_of(name));
  if (require_cause) {
    if (cfg.cause_variable.empty()) throw ConfigError("--cause is required");
    if (std::find(wanted.begin(), wanted.end(), cfg.cause_variable) == wanted.end())
      throw ConfigError("cause column '" + cfg.cause_variable +
                        "' is not among the modelled variables");
  }

  const CsvTable table = read_csv(cfg.input_path);
  Dataset ds;
  ds.names = std::move(wanted);
  ds.data = Matrix(table.values.rows(), idx.size());
  for (std::size_t r = 0; r < table.values.rows(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c)
      ds.data(r, c) = table.values(r, idx[c]);

  if (cfg.noise_fraction > 0.0 || cfg.normalize) {
    for (std::size_t c = 0; c < ds.data.cols(); ++c) {
      const auto col = ds.data.col(c);
      const auto processed = jitter_and_normalize(
          col, cfg.noise_fraction, rng::splitmix64(cfg.seed ^ (0xa11cu + c)));
      for (std::size_t r = 0; r < ds.data.rows(); ++r) ds.data(r, c) = processed[r];
    }
  }
  return ds;
}

inline std::vector<CopulaFamily> parse_families(const std::vector<std::string>& names) {
  std::vector<CopulaFamily> out;
  for (const auto& n : names) {
    const CopulaFamily f = family_from_name(n);
    if (f != CopulaFamily::Independence) out.push_back(f);
  }
  if (out.empty()) throw ConfigError("family list is empty");
  return out;
}

inline SelectionCriterion parse_criterion(const std::string& s) {
  if (s == "aic") return SelectionCriterion::Aic;
  if (s == "bic") return SelectionCriterion::Bic;
  if (s == "mbicv") return SelectionCriterion::Mbicv;
  throw ConfigError("unknown criterion: " + s);
}

inline TransformSpec parse_transform(const RunConfig& cfg) {
  TransformSpec t;
  if (cfg.transform == "raw") t.kind = TransformKind::Raw;
  else if (cfg.transform == "identity") t.kind = TransformKind::Identity;
  else if (cfg.transform == "exponential") t.kind = TransformKind::Exponential;
  else if (cfg.transform == "gpd") t.kind = TransformKind::Gpd;
  else throw ConfigError("unknown transform: " + cfg.transform);
  t.shape = cfg.transform_shape;
  t.scale = cfg.transform_scale;
  return t;
}

inline PcKind parse_pc_kind(const std::string& s) {
  if (s == "pn") return PcKind::PN;
  if (s == "ps") return PcKind::PS;
  if (s == "pns") return PcKind::PNS;
  throw ConfigError("unknown pc kind: " + s);
}

inline std::map<std::string, double> parse_overrides(
    const std::vector<std::string>& entries) {
  std::map<std::string, double> out;
  for (const auto& e : entries) {
    const auto eq = e.find('=');
    if (eq == std::string::npos)
      throw ConfigError("quantile override must be NAME=Q: " + e);
    const double q = std::stod(e.substr(eq + 1));
    if (!(q > 0.0 && q < 1.0))
      throw ConfigError("override quantile outside (0,1): " + e);
    out[e.substr(0, eq)] = q;
  }
  return out;
}

inline void ensure_output_dir(const RunConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + cfg.output_dir);
}

inline void write_config(const RunConfig& cfg, const std::string& command) {
  std::ofstream out(cfg.output_dir + "/config.json");
  if (!out) throw IoError("cannot write config.json");
  out << config_to_json(cfg, command).dump(2) << '\n';
}

inline std::string config_hash(const RunConfig& cfg, const std::string& command) {
  return hex64(rng::fnv1a64(config_to_json(cfg, command).dump()));
}

// Impact threshold grid for the configured transform.
inline std::vector<double> resolve_v_grid(const RunConfig& cfg, const ImpactEvent& ev,
                                          std::span<const MarginalModel> margins,
                                          const Dataset& ds) {
  auto h_of_quantile = [&](double q) {
    switch (ev.transform.kind) {
      case TransformKind::Identity:
        return q;
      case TransformKind::Exponential:
      case TransformKind::Gpd:
        return transform_margin_H(q, ev.transform);
      case TransformKind::Raw: {
        // empirical quantile of the observed impact values
        std::vector<double> impacts;
        const int d = static_cast<int>(ds.data.cols());
        const int k = ev.horizon;
        std::vector<double> block(static_cast<std::size_t>(k) * d);
        for (std::size_t t = 0; t + static_cast<std::size_t>(k) < ds.data.rows(); ++t) {
          for (int l = 1; l <= k; ++l)
            for (int j = 0; j < d; ++j)
              block[static_cast<std::size_t>(l - 1) * d + j] =
                  ds.data(t + static_cast<std::size_t>(l), static_cast<std::size_t>(j));
          impacts.push_back(impact_value(block, ev, margins));
        }
        std::sort(impacts.begin(), impacts.end());
        return numeric::sorted_quantile(impacts, q);
      }
    }
    return q;
  };

  if (!cfg.v_grid.empty()) {
    double lo = 0.0, hi = 0.0;
    int count = 0;
    char c1 = 0, c2 = 0;
    std::stringstream ss(cfg.v_grid);
    if (!(ss >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' || count < 1)
      throw ConfigError("--v-grid must be lo:hi:count");
    std::vector<double> grid;
    for (int i = 0; i < count; ++i)
      grid.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    return grid;
  }
  if (!std::isnan(cfg.impact_threshold)) return {cfg.impact_threshold};
  if (!std::isnan(cfg.impact_quantile)) return {h_of_quantile(cfg.impact_quantile)};
  std::vector<double> grid;
  for (int i = 0; i < 21; ++i) grid.push_back(h_of_quantile(0.30 + 0.6900 * i / 20.0));
  return grid;
}

inline double resolve_single_v(const RunConfig& cfg, const ImpactEvent& ev,
                               std::span<const MarginalModel> margins,
                               const Dataset& ds) {
  if (!std::isnan(cfg.impact_threshold)) return cfg.impact_threshold;
  RunConfig with_default = cfg;
  if (std::isnan(cfg.impact_quantile)) with_default.impact_quantile = 0.8;
  return resolve_v_grid(with_default, ev, margins, ds).front();
}

inline void write_reports_csv(const std::string& path,
                              std::span<const CausationReport> reports) {
  CsvWriter w(path);
  w.row({"v", "p_f", "p_cf", "pn", "ps", "pns", "source", "n_f", "n_cf", "seed",
         "degenerate"});
  for (const auto& r : reports)
    w.row({format_double(r.v), format_double(r.p_f), format_double(r.p_cf),
           format_double(r.pn), format_double(r.ps), format_double(r.pns), r.source,
           std::to_string(r.n_f), std::to_string(r.n_cf), std::to_string(r.seed),
           r.degenerate ? "1" : "0"});
}

struct LoadedModel {
  ModelArtifact artifact;
  Dataset ds;
  CauseEvent cause;
  int cause_index = 0;
};

inline LoadedModel load_model_and_data(const RunConfig& cfg) {
  LoadedModel lm;
  lm.artifact = load_artifact(cfg.output_dir);
  RunConfig data_cfg = cfg;
  // reproduce the training preprocessing exactly
  data_cfg.variables = lm.artifact.columns;
  data_cfg.noise_fraction = lm.artifact.noise_fraction;
  data_cfg.normalize = lm.artifact.normalize;
  data_cfg.seed = lm.artifact.seed;
  lm.ds = load_dataset(data_cfg, /*require_cause=*/true);
  const auto it =
      std::find(lm.ds.names.begin(), lm.ds.names.end(), cfg.cause_variable);
  lm.cause_index = static_cast<int>(it - lm.ds.names.begin());
  lm.cause = cause_from_marginal(
      lm.cause_index, lm.artifact.marginals[static_cast<std::size_t>(lm.cause_index)]);
  if (cfg.horizon < 1) throw ConfigError("--horizon must be >= 1");
  if (cfg.horizon > lm.artifact.vine.p)
    throw HorizonExceedsOrder("horizon " + std::to_string(cfg.horizon) +
                              " exceeds the fitted Markov order " +
                              std::to_string(lm.artifact.vine.p));
  return lm;
}

// ---------------------------------------------------------------- commands

inline int cmd_fit(const RunConfig& cfg) {
  if (cfg.markov_order < 0 || cfg.order_min < 1 || cfg.order_max < cfg.order_min)
    throw ConfigError("invalid Markov order range");
  const auto overrides = parse_overrides(cfg.quantile_overrides);
  const auto families = parse_families(cfg.families);
  const auto criterion = parse_criterion(cfg.criterion);

  const Dataset ds = load_dataset(cfg, /*require_cause=*/false);
  const auto n = ds.data.rows();
  const auto d = ds.data.cols();

  std::vector<MarginalModel> margins;
  for (std::size_t c = 0; c < d; ++c) {
    const auto col = ds.data.col(c);
    const auto it = overrides.find(ds.names[c]);
    if (it != overrides.end()) {
      margins.push_back(fit_marginal_model_at(col, it->second, ds.names[c]));
    } else {
      margins.push_back(fit_marginal_model(
          col, cfg.candidate_quantiles, cfg.alpha,
          rng::splitmix64(cfg.seed ^ (0xf17u + c)), cfg.replicates, ds.names[c]));
    }
    std::cerr << "margin " << ds.names[c] << ": threshold_quantile="
              << margins.back().gpd.threshold_quantile
              << " shape=" << margins.back().gpd.shape
              << " scale=" << margins.back().gpd.scale << "\n";
  }

  Matrix pit(n, d);
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t r = 0; r < n; ++r)
      pit(r, c) = pit_forward(ds.data(r, c), margins[c]);

  const auto cross_order = select_cross_section_order(pit);

  std::vector<int> orders;
  if (cfg.markov_order > 0) {
    orders.push_back(cfg.markov_order);
  } else {
    for (int p = cfg.order_min; p <= cfg.order_max; ++p) orders.push_back(p);
  }

  VineFitOptions vopt;
  vopt.families = families;
  vopt.criterion = criterion == SelectionCriterion::Mbicv ? SelectionCriterion::Bic
                                                          : criterion;
  vopt.independence_level = cfg.independence_level;

  ModelArtifact artifact;
  artifact.columns = ds.names;
  artifact.seed = cfg.seed;
  artifact.config_hash = config_hash(cfg, "fit");
  artifact.noise_fraction = cfg.noise_fraction;
  artifact.normalize = cfg.normalize;
  artifact.marginals = margins;

  double best_score = std::numeric_limits<double>::infinity();
  StationaryVine best_vine;
  int best_order = orders.front();
  double best_loglik = 0.0;
  std::size_t best_blocks = 0;
  for (int p : orders) {
    const auto blocks = build_blocks(pit, p);
    const auto vine = fit_stationary_vine(blocks, cross_order, vopt);
    const auto ic = information_criteria(vine, blocks, cfg.psi0);
    artifact.criteria.push_back(ic);
    artifact.orders.push_back(p);
    const double score = criterion == SelectionCriterion::Aic   ? ic.aic
                         : criterion == SelectionCriterion::Bic ? ic.bic
                                                                : ic.mbicv;
    std::cerr << "order " << p << ": loglik=" << ic.loglik << " nu=" << ic.nu
              << " aic=" << ic.aic << " bic=" << ic.bic << " mbicv=" << ic.mbicv
              << "\n";
    if (score < best_score) {
      best_score = score;
      best_vine = vine;
      best_order = p;
      best_loglik = ic.loglik;
      best_blocks = blocks.n_blocks();
    }
  }
  artifact.selected_order = best_order;
  artifact.vine = best_vine;
  artifact.train_loglik = best_loglik;
  artifact.train_blocks = best_blocks;
  if (cfg.stamp) {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    artifact.timestamp = buf;
  }

  ensure_output_dir(cfg);
  write_config(cfg, "fit");
  save_artifact(cfg.output_dir, artifact);

  CsvWriter crit(cfg.output_dir + "/criteria.csv");
  crit.row({"order", "loglik", "nu", "aic", "bic", "mbicv", "selected"});
  for (std::size_t i = 0; i < artifact.criteria.size(); ++i) {
    const auto& ic = artifact.criteria[i];
    crit.row({std::to_string(artifact.orders[i]), format_double(ic.loglik),
              std::to_string(ic.nu), format_double(ic.aic), format_double(ic.bic),
              format_double(ic.mbicv),
              artifact.orders[i] == best_order ? "1" : "0"});
  }

  CsvWriter marg(cfg.output_dir + "/marginals.csv");
  marg.row({"variable", "threshold", "threshold_quantile", "shape", "scale",
            "se_shape", "se_scale", "n"});
  for (const auto& m : margins)
    marg.row({m.name, format_double(m.gpd.threshold),
              format_double(m.gpd.threshold_quantile), format_double(m.gpd.shape),
              format_double(m.gpd.scale), format_double(m.se_shape),
              format_double(m.se_scale), std::to_string(m.sorted_sample.size())});

  std::cerr << "selected Markov order " << best_order << " by " << cfg.criterion
            << "; artifact written to " << cfg.output_dir << "\n";
  return 0;
}

inline int cmd_causation(const RunConfig& cfg) {
  const LoadedModel lm = load_model_and_data(cfg);
  const int d = static_cast<int>(lm.ds.data.cols());

  ImpactEvent ev;
  ev.horizon = cfg.horizon;
  ev.transform = parse_transform(cfg);
  ev.include_cause = cfg.include_cause;
  ev.weights = cfg.include_cause
                   ? uniform_weights(cfg.horizon, d)
                   : uniform_weights_masked(cfg.horizon, d, lm.cause_index);

  const auto grid = resolve_v_grid(cfg, ev, lm.artifact.marginals, lm.ds);

  const auto empirical =
      pc_curve_empirical(lm.ds.data, lm.artifact.marginals, lm.cause, ev, grid);
  const auto samples = generate_counterfactual_samples(
      lm.artifact.vine, lm.ds.data, lm.artifact.marginals, lm.cause, cfg.horizon,
      static_cast<std::size_t>(cfg.n_synthetic), cfg.seed);
  const auto synthetic =
      pc_curve_from_samples(samples, lm.artifact.marginals, ev, grid, cfg.seed);

  ensure_output_dir(cfg);
  write_config(cfg, "causation");
  write_reports_csv(cfg.output_dir + "/causation_empirical.csv", empirical);
  write_reports_csv(cfg.output_dir + "/causation_synthetic.csv", synthetic);

  CsvWriter cmp(cfg.output_dir + "/causation_comparison.csv");
  cmp.row({"v", "empirical_p_f", "empirical_p_cf", "synthetic_p_f", "synthetic_p_cf",
           "diff_p_f", "diff_p_cf"});
  for (std::size_t i = 0; i < grid.size(); ++i)
    cmp.row({format_double(grid[i]), format_double(empirical[i].p_f),
             format_double(empirical[i].p_cf), format_double(synthetic[i].p_f),
             format_double(synthetic[i].p_cf),
             format_double(synthetic[i].p_f - empirical[i].p_f),
             format_double(synthetic[i].p_cf - empirical[i].p_cf)});

  std::cerr << "causation curves over " << grid.size() << " thresholds written to "
            << cfg.output_dir << "\n";
  return 0;
}

inline int cmd_optimize(const RunConfig& cfg) {
  if (cfg.lambdas.empty()) throw ConfigError("--lambdas must not be empty");
  if (cfg.pc_kinds.empty()) throw ConfigError("--pc must not be empty");
  for (int nrm : cfg.norms)
    if (nrm != 1 && nrm != 2) throw ConfigError("--norms entries must be 1 or 2");

  const LoadedModel lm = load_model_and_data(cfg);
  const int d = static_cast<int>(lm.ds.data.cols());
  const int k = cfg.horizon;

  ImpactEvent ev;
  ev.horizon = k;
  ev.transform = parse_transform(cfg);
  ev.weights = uniform_weights(k, d);
  ev.impact_threshold = resolve_single_v(cfg, ev, lm.artifact.marginals, lm.ds);

  std::optional<WorldSamples> samples;
  if (cfg.source == "synthetic") {
    samples = generate_counterfactual_samples(
        lm.artifact.vine, lm.ds.data, lm.artifact.marginals, lm.cause, k,
        static_cast<std::size_t>(cfg.n_synthetic), cfg.seed);
  } else if (cfg.source != "empirical") {
    throw ConfigError("--source must be empirical or synthetic");
  }

  auto make_context = [&](bool include_cause) {
    ImpactEvent e = ev;
    e.include_cause = include_cause;
    PcEvaluationContext ctx =
        samples ? PcEvaluationContext::synthetic(*samples, lm.artifact.marginals, e,
                                                 lm.cause_index)
                : PcEvaluationContext::empirical(lm.ds.data, lm.artifact.marginals,
                                                 lm.cause, e);
    if (cfg.tail_approx) ctx.enable_tail_approx(lm.artifact.marginals, e);
    return ctx;
  };

  ensure_output_dir(cfg);
  write_config(cfg, "optimize");

  std::vector<bool> cause_modes{cfg.include_cause};
  if (cfg.ablation) cause_modes = {true, false};

  CsvWriter results(cfg.output_dir + "/optimize_results.csv");
  results.row({"pc", "lambda", "norm", "include_cause", "value", "objective",
               "entropy", "v", "source"});
  Json results_json = Json::array();
  // variable shares for the ablation summary: [pc][lambda][norm][mode]
  std::map<std::string, std::vector<double>> shares_with, shares_without;

  for (bool with_cause : cause_modes) {
    const auto ctx = make_context(with_cause);
    for (const auto& kind_name : cfg.pc_kinds) {
      const PcKind kind = parse_pc_kind(kind_name);
      for (double lambda : cfg.lambdas) {
        for (int nrm : cfg.norms) {
          OptConfig ocfg;
          ocfg.generations = cfg.generations;
          ocfg.population_factor = cfg.population_factor;
          ocfg.refine_iterations = cfg.refine_iterations;
          ocfg.seed = rng::splitmix64(cfg.seed ^ rng::fnv1a64(kind_name) ^
                                      rng::fnv1a64(format_double(lambda)) ^
                                      static_cast<std::uint64_t>(nrm) ^
                                      (with_cause ? 0u : 0x9e37u));
          const auto res = maximize_pc(kind, RegSpec{nrm, lambda}, ctx, ocfg);

          results.row({kind_name, format_double(lambda), std::to_string(nrm),
                       with_cause ? "1" : "0", format_double(res.pc_value),
                       format_double(res.objective), format_double(res.entropy),
                       format_double(ev.impact_threshold), cfg.source});

          Json entry;
          entry["pc"] = kind_name;
          entry["lambda"] = lambda;
          entry["norm"] = nrm;
          entry["include_cause"] = with_cause;
          entry["value"] = res.pc_value;
          entry["objective"] = res.objective;
          entry["entropy"] = res.entropy;
          entry["weights"] = res.weights;
          entry["trace"] = res.trace;
          results_json.push_back(std::move(entry));

          // k x d weight grid (rows: horizon step, columns: variables)
          std::ostringstream tag;
          tag << kind_name << "_l" << format_double(lambda) << "_p" << nrm
              << (with_cause ? "" : "_nocause");
          const auto std_w = standardize_weights(res.weights);
          CsvWriter grid(cfg.output_dir + "/weights_" + tag.str() + ".csv");
          std::vector<std::string> head{"step"};
          for (const auto& nm : lm.ds.names) head.push_back(nm);
          grid.row(head);
          for (int l = 0; l < k; ++l) {
            std::vector<std::string> row{std::to_string(l + 1)};
            for (int j = 0; j < d; ++j)
              row.push_back(
                  format_double(res.weights[static_cast<std::size_t>(l) * d + j]));
            grid.row(row);
          }
          CsvWriter sgrid(cfg.output_dir + "/weights_std_" + tag.str() + ".csv");
          sgrid.row(head);
          for (int l = 0; l < k; ++l) {
            std::vector<std::string> row{std::to_string(l + 1)};
            for (int j = 0; j < d; ++j)
              row.push_back(format_double(std_w[static_cast<std::size_t>(l) * d + j]));
            sgrid.row(row);
          }

          std::vector<double> shares(static_cast<std::size_t>(d), 0.0);
          for (std::size_t c = 0; c < res.weights.size(); ++c)
            shares[c % static_cast<std::size_t>(d)] += res.weights[c];
          const std::string key =
              kind_name + "/" + format_double(lambda) + "/" + std::to_string(nrm);
          (with_cause ? shares_with : shares_without)[key] = std::move(shares);
        }
      }
    }
  }

  {
    std::ofstream out(cfg.output_dir + "/optimize_results.json");
    out << results_json.dump(2) << '\n';
  }
  if (cfg.ablation) {
    CsvWriter ab(cfg.output_dir + "/ablation_summary.csv");
    ab.row({"pc", "lambda", "norm", "variable", "share_with_cause",
            "share_without_cause"});
    for (const auto& [key, with_shares] : shares_with) {
      const auto it = shares_without.find(key);
      if (it == shares_without.end()) continue;
      std::stringstream ss(key);
      std::string kindp, lamp, nrmp;
      std::getline(ss, kindp, '/');
      std::getline(ss, lamp, '/');
      std::getline(ss, nrmp, '/');
      for (int j = 0; j < d; ++j)
        ab.row({kindp, lamp, nrmp, lm.ds.names[static_cast<std::size_t>(j)],
                format_double(with_shares[static_cast<std::size_t>(j)]),
                format_double(it->second[static_cast<std::size_t>(j)])});
    }
  }
  std::cerr << "optimization results written to " << cfg.output_dir << "\n";
  return 0;
}

inline int cmd_simulate(const RunConfig& cfg) {
  const ModelArtifact artifact = load_artifact(cfg.output_dir);
  const bool data_scale = cfg.scale == "data";
  if (!data_scale && cfg.scale != "u")
    throw ConfigError("--scale must be u or data");

  ensure_output_dir(cfg);
  write_config(cfg, "simulate");
  const int d = artifact.vine.d;

  auto to_data = [&](double u, int var) {
    return data_scale
               ? pit_inverse(pc::clamp01(u), artifact.marginals[static_cast<std::size_t>(var)])
               : u;
  };

  if (cfg.path_length > 0) {
    const auto path = simulate_path(artifact.vine, static_cast<std::size_t>(cfg.path_length),
                                    cfg.seed);
    CsvWriter w(cfg.output_dir + "/simulated_path.csv");
    w.row(artifact.columns);
    for (std::size_t r = 0; r < path.rows(); ++r) {
      std::vector<std::string> row;
      for (int j = 0; j < d; ++j)
        row.push_back(format_double(to_data(path(r, static_cast<std::size_t>(j)), j)));
      w.row(row);
    }
    std::cerr << "simulated path of length " << cfg.path_length << "\n";
  } else {
    const auto blocks = simulate_unconditional(
        artifact.vine, static_cast<std::size_t>(cfg.n_samples), cfg.seed);
    CsvWriter w(cfg.output_dir + "/simulated_blocks.csv");
    std::vector<std::string> head;
    for (int s = 0; s <= artifact.vine.p; ++s)
      for (int j = 0; j < d; ++j)
        head.push_back(artifact.columns[static_cast<std::size_t>(j)] + "@t+" +
                       std::to_string(s));
    w.row(head);
    for (std::size_t r = 0; r < blocks.rows(); ++r) {
      std::vector<std::string> row;
      for (std::size_t c = 0; c < blocks.cols(); ++c)
        row.push_back(
            format_double(to_data(blocks(r, c), static_cast<int>(c) % d)));
      w.row(row);
    }
    std::cerr << "simulated " << cfg.n_samples << " blocks\n";
  }
  return 0;
}

inline int cmd_diagnose(const RunConfig& cfg) {
  if (cfg.noise_fraction > 0.0 && cfg.seed == 0)
    throw ConfigError("--seed is required when jitter is enabled");
  const Dataset ds = load_dataset(cfg, /*require_cause=*/false);
  const auto d = ds.data.cols();
  const auto n = ds.data.rows();

  ensure_output_dir(cfg);
  write_config(cfg, "diagnose");

  CsvWriter summary(cfg.output_dir + "/summary.csv");
  summary.row({"variable", "n", "mean", "sd", "min", "max"});
  for (std::size_t c = 0; c < d; ++c) {
    const auto col = ds.data.col(c);
    const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
    summary.row({ds.names[c], std::to_string(n), format_double(numeric::mean(col)),
                 format_double(std::sqrt(numeric::variance(col))), format_double(*mn),
                 format_double(*mx)});
  }

  CsvWriter hist(cfg.output_dir + "/histograms.csv");
  hist.row({"variable", "bin_lo", "bin_hi", "count"});
  for (std::size_t c = 0; c < d; ++c) {
    const auto col = ds.data.col(c);
    const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
    const double width = (*mx - *mn) / cfg.histogram_bins;
    std::vector<std::size_t> counts(static_cast<std::size_t>(cfg.histogram_bins), 0);
    for (double v : col) {
      auto bin = static_cast<std::size_t>((v - *mn) / (width > 0 ? width : 1.0));
      if (bin >= counts.size()) bin = counts.size() - 1;
      ++counts[bin];
    }
    for (std::size_t b = 0; b < counts.size(); ++b)
      hist.row({ds.names[c], format_double(*mn + width * b),
                format_double(*mn + width * (b + 1)), std::to_string(counts[b])});
  }

  const int cause_idx = [&]() -> int {
    if (cfg.cause_variable.empty()) return 0;
    const auto it = std::find(ds.names.begin(), ds.names.end(), cfg.cause_variable);
    if (it == ds.names.end())
      throw ConfigError("cause column '" + cfg.cause_variable + "' not found");
    return static_cast<int>(it - ds.names.begin());
  }();

  CsvWriter corr(cfg.output_dir + "/correlations.csv");
  corr.row({"kind", "i", "j", "lag", "value", "ci"});
  const auto cause_col = ds.data.col(static_cast<std::size_t>(cause_idx));
  for (std::size_t c = 0; c < d; ++c) {
    const auto col = ds.data.col(c);
    for (auto kind : {CorrelationKind::Acf, CorrelationKind::Pacf}) {
      const auto cs = correlation_functions(col, cfg.max_lag, kind);
      for (std::size_t h = 0; h < cs.values.size(); ++h)
        corr.row({correlation_kind_name(kind), ds.names[c], ds.names[c],
                  std::to_string(cs.lags[h]), format_double(cs.values[h]),
                  format_double(cs.ci_halfwidth)});
    }
    for (auto kind : {CorrelationKind::Ccf, CorrelationKind::Pccf}) {
      const auto cs = correlation_functions(cause_col, col, cfg.max_lag, kind);
      for (std::size_t h = 0; h < cs.values.size(); ++h)
        corr.row({correlation_kind_name(kind),
                  ds.names[static_cast<std::size_t>(cause_idx)], ds.names[c],
                  std::to_string(cs.lags[h]), format_double(cs.values[h]),
                  format_double(cs.ci_halfwidth)});
    }
  }

  CsvWriter adf(cfg.output_dir + "/adf.csv");
  adf.row({"variable", "statistic", "lags", "reject_at_1pct"});
  for (std::size_t c = 0; c < d; ++c) {
    const auto res = adf_test(ds.data.col(c), std::max(1, std::min(cfg.max_lag, 12)));
    adf.row({ds.names[c], format_double(res.statistic), std::to_string(res.lags_used),
             res.reject_at_1pct ? "1" : "0"});
  }

  CsvWriter ext(cfg.output_dir + "/extremal.csv");
  ext.row({"i", "j", "h", "u", "value"});
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      for (int h : {0, 1, 2, 3, 6}) {
        if (a == b && h == 0) {
          ext.row({ds.names[a], ds.names[b], "0", format_double(cfg.extremal_u),
                   "1"});
          continue;
        }
        try {
          const double chi = empirical_extremal_correlation(
              ds.data.col(a), ds.data.col(b), h, cfg.extremal_u);
          ext.row({ds.names[a], ds.names[b], std::to_string(h),
                   format_double(cfg.extremal_u), format_double(chi)});
        } catch (const InsufficientExceedances&) {
          // skip pairs without enough exceedances at this level
        }
      }

  std::cerr << "diagnostics written to " << cfg.output_dir << "\n";
  return 0;
}

}  // namespace detail

// Argument-vector entry point (excluding argv[0]). Returns the process exit
// code: 0 success, 2 config error, 3 data error, 4 numerical failure.
inline int run_cli(std::vector<std::string> args) {
  RunConfig cfg;
  // --config seeds the defaults; explicit flags override it
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--config") {
      try {
        detail::apply_config_file(cfg, args[i + 1]);
      } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
      }
    }

  CLI::App app{"peaks-over-threshold margins, stationary vine dependence and "
               "counterfactual causation probabilities"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file with defaults");

  auto add_common = [&](CLI::App* sub, bool needs_seed) {
    sub->add_option("--config", config_path, "JSON config file with defaults");
    sub->add_option("--input", cfg.input_path, "input csv (headered, numeric)");
    sub->add_option("--out", cfg.output_dir, "output/run directory");
    sub->add_option("--timestamp-column", cfg.timestamp_column,
                    "column to ignore as timestamp");
    sub->add_option("--variables", cfg.variables, "modelled columns (default: all)");
    auto* seed_opt = sub->add_option("--seed", cfg.seed, "master seed");
    if (needs_seed) seed_opt->required(cfg.seed == 0);
    sub->add_option("--noise-fraction", cfg.noise_fraction,
                    "gaussian jitter sd as a fraction of each column sd");
    sub->add_flag("--normalize,!--no-normalize", cfg.normalize,
                  "rescale columns to unit variance");
    return seed_opt;
  };

  auto* fit = app.add_subcommand("fit", "fit margins and the stationary vine");
  add_common(fit, true);
  fit->add_option("--candidate-quantiles", cfg.candidate_quantiles,
                  "ascending threshold candidate quantiles");
  fit->add_option("--alpha", cfg.alpha, "ForwardStop FDR level");
  fit->add_option("--replicates", cfg.replicates, "GoF bootstrap replicates");
  fit->add_option("--quantile-override", cfg.quantile_overrides,
                  "NAME=Q fixed threshold quantile for a variable");
  fit->add_option("--families", cfg.families, "pair-copula family menu");
  fit->add_option("--criterion", cfg.criterion, "aic|bic|mbicv");
  fit->add_option("--psi0", cfg.psi0, "mBICV prior parameter");
  fit->add_option("--independence-level", cfg.independence_level,
                  "pairwise independence test level");
  fit->add_option("--markov-order", cfg.markov_order, "fixed Markov order");
  fit->add_option("--order-min", cfg.order_min, "Markov order sweep start");
  fit->add_option("--order-max", cfg.order_max, "Markov order sweep end");
  fit->add_flag("--timestamp", cfg.stamp, "record a wall-clock timestamp");

  auto* causation = app.add_subcommand(
      "causation", "empirical and synthetic causation curves over a threshold grid");
  add_common(causation, true);
  causation->add_option("--cause", cfg.cause_variable, "cause variable name");
  causation->add_option("--horizon", cfg.horizon, "impact horizon k");
  causation->add_option("--transform", cfg.transform, "raw|identity|exponential|gpd");
  causation->add_option("--transform-shape", cfg.transform_shape, "gpd H shape");
  causation->add_option("--transform-scale", cfg.transform_scale, "gpd H scale");
  causation->add_option("--impact-threshold", cfg.impact_threshold, "single v");
  causation->add_option("--impact-quantile", cfg.impact_quantile,
                        "v as an H-quantile level");
  causation->add_option("--v-grid", cfg.v_grid, "lo:hi:count threshold grid");
  causation->add_option("--n-synthetic", cfg.n_synthetic,
                        "conditional samples per world");
  causation->add_flag("--include-cause,!--exclude-cause", cfg.include_cause,
                      "keep the cause variable's columns in the impact event");

  auto* optimize = app.add_subcommand("optimize", "maximize causation probabilities");
  add_common(optimize, true);
  optimize->add_option("--cause", cfg.cause_variable, "cause variable name");
  optimize->add_option("--horizon", cfg.horizon, "impact horizon k");
  optimize->add_option("--transform", cfg.transform, "raw|identity|exponential|gpd");
  optimize->add_option("--transform-shape", cfg.transform_shape, "gpd H shape");
  optimize->add_option("--transform-scale", cfg.transform_scale, "gpd H scale");
  optimize->add_option("--impact-threshold", cfg.impact_threshold, "impact threshold v");
  optimize->add_option("--impact-quantile", cfg.impact_quantile,
                       "v as an H-quantile level (default 0.8)");
  optimize->add_option("--pc", cfg.pc_kinds, "pc kinds: pn ps pns");
  optimize->add_option("--lambdas", cfg.lambdas, "regularization strengths");
  optimize->add_option("--norms", cfg.norms, "penalty norms (1 and/or 2)");
  optimize->add_option("--source", cfg.source, "empirical|synthetic probabilities");
  optimize->add_flag("--tail-approx", cfg.tail_approx,
                     "use the anchored tail approximation objective");
  optimize->add_option("--n-synthetic", cfg.n_synthetic,
                       "conditional samples per world (synthetic source)");
  optimize->add_flag("--include-cause,!--exclude-cause", cfg.include_cause,
                     "keep the cause variable's columns in the impact event");
  optimize->add_flag("--ablation", cfg.ablation,
                     "run both with and without the cause columns");
  optimize->add_option("--generations", cfg.generations, "DE generations");
  optimize->add_option("--population-factor", cfg.population_factor,
                       "DE population = factor x dimension");
  optimize->add_option("--refine-iterations", cfg.refine_iterations,
                       "local polish iterations");

  auto* simulate = app.add_subcommand("simulate", "draw from the fitted model");
  add_common(simulate, true);
  simulate->add_option("--n", cfg.n_samples, "number of independent blocks");
  simulate->add_option("--path", cfg.path_length, "simulate a path of this length");
  simulate->add_option("--scale", cfg.scale, "u|data output scale");

  auto* diagnose = app.add_subcommand("diagnose", "exploratory statistics tables");
  add_common(diagnose, false);
  diagnose->add_option("--cause", cfg.cause_variable,
                       "reference variable for cross-correlations");
  diagnose->add_option("--max-lag", cfg.max_lag, "largest lag");
  diagnose->add_option("--extremal-u", cfg.extremal_u,
                       "quantile level for extremal correlations");
  diagnose->add_option("--histogram-bins", cfg.histogram_bins, "histogram bins");

  std::vector<const char*> argv;
  argv.push_back("potvine");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      app.exit(e);
      return 0;
    }
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (cfg.input_path.empty() && !simulate->parsed())
      throw ConfigError("--input is required");
    if (fit->parsed()) return detail::cmd_fit(cfg);
    if (causation->parsed()) return detail::cmd_causation(cfg);
    if (optimize->parsed()) return detail::cmd_optimize(cfg);
    if (simulate->parsed()) return detail::cmd_simulate(cfg);
    if (diagnose->parsed()) return detail::cmd_diagnose(cfg);
    throw ConfigError("no subcommand");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace potvine::cli

#endif  // POTVINE_CLI_HPP
