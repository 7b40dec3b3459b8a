#include "confacq/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>

#include "confacq/errors.hpp"

namespace confacq {

using nlohmann::json;

namespace {

void require_known_keys(const json& obj, const std::set<std::string>& known,
                        const std::string& context) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.contains(it.key()))
      throw ConfigError("unknown key '" + it.key() + "' in " + context);
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key) || obj[key].is_null()) return fallback;
  try {
    return obj[key].get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

DataConfig parse_data(const json& obj) {
  require_known_keys(obj, {"source", "path", "id_column", "kinds", "n_samples", "columns",
                           "attribute_column"},
                     "data");
  DataConfig data;
  const std::string source = get_or<std::string>(obj, "source", "synthetic");
  if (source == "file")
    data.source = DataConfig::Source::kFile;
  else if (source == "synthetic")
    data.source = DataConfig::Source::kSynthetic;
  else
    throw ConfigError("data.source must be 'file' or 'synthetic'");
  data.path = get_or<std::string>(obj, "path", "");
  data.id_column = get_or<std::string>(obj, "id_column", "id");
  if (obj.contains("kinds"))
    for (auto it = obj["kinds"].begin(); it != obj["kinds"].end(); ++it)
      data.kinds[it.key()] = column_kind_from_string(it.value().get<std::string>());
  data.n_samples = get_or<Eigen::Index>(obj, "n_samples", 600);
  if (obj.contains("columns")) {
    for (const auto& col : obj["columns"]) {
      require_known_keys(col, {"name", "kind", "mean", "sd", "p"}, "data.columns[]");
      ColumnSpec spec;
      spec.name = col.at("name").get<std::string>();
      spec.kind = column_kind_from_string(col.at("kind").get<std::string>());
      spec.mean = get_or<double>(col, "mean", 0.0);
      spec.sd = get_or<double>(col, "sd", 1.0);
      spec.p = get_or<double>(col, "p", 0.5);
      data.columns.push_back(std::move(spec));
    }
  }
  data.attribute_column = get_or<std::string>(obj, "attribute_column", "momwhite");
  if (data.source == DataConfig::Source::kFile && data.path.empty())
    throw ConfigError("data.source is 'file' but data.path is empty");
  return data;
}

SimulationConfig parse_simulation(const json& obj) {
  require_known_keys(obj, {"mask_fraction", "a_variant", "treatment", "outcome"}, "simulation");
  SimulationConfig sim;
  sim.mask_fraction = get_or<double>(obj, "mask_fraction", 0.95);
  if (obj.contains("a_variant")) {
    const auto& av = obj["a_variant"];
    require_known_keys(av, {"mode", "retain_fraction", "rho", "birthweight_column"},
                       "simulation.a_variant");
    sim.a_variant.mode =
        a_variant_mode_from_string(get_or<std::string>(av, "mode", "independent_permuted"));
    sim.a_variant.retain_fraction = get_or<double>(av, "retain_fraction", 0.0);
    sim.a_variant.rho = get_or<double>(av, "rho", 0.0);
    sim.a_variant.birthweight_column = get_or<std::string>(av, "birthweight_column", "bw");
  }
  if (obj.contains("treatment")) {
    const auto& tr = obj["treatment"];
    require_known_keys(tr, {"columns", "xi", "xi_range", "clip"}, "simulation.treatment");
    sim.treatment.columns = get_or<std::vector<std::string>>(tr, "columns", {});
    if (tr.contains("xi") && !tr["xi"].is_null())
      sim.treatment.xi = tr["xi"].get<std::vector<double>>();
    if (tr.contains("xi_range")) {
      const auto range = tr["xi_range"].get<std::vector<double>>();
      if (range.size() != 2) throw ConfigError("treatment.xi_range must have two entries");
      sim.treatment.xi_lo = range[0];
      sim.treatment.xi_hi = range[1];
    }
    if (tr.contains("clip")) {
      const auto clip = tr["clip"].get<std::vector<double>>();
      if (clip.size() != 2) throw ConfigError("treatment.clip must have two entries");
      sim.treatment.clip_lo = clip[0];
      sim.treatment.clip_hi = clip[1];
    }
  }
  if (obj.contains("outcome")) {
    const auto& oc = obj["outcome"];
    require_known_keys(oc, {"named_beta", "noise_sd"}, "simulation.outcome");
    if (oc.contains("named_beta"))
      for (auto it = oc["named_beta"].begin(); it != oc["named_beta"].end(); ++it)
        sim.outcome.named_beta[it.key()] = it.value().get<double>();
    sim.outcome.noise_sd = get_or<double>(oc, "noise_sd", 1.0);
  }
  if (sim.outcome.named_beta.empty()) sim.outcome.named_beta = default_named_beta();
  return sim;
}

EstimatorConfig parse_estimator(const json& obj) {
  EstimatorConfig cfg;
  cfg.kind = estimator_kind_from_string(obj.at("kind").get<std::string>());
  if (obj.contains("seed") && !obj["seed"].is_null())
    cfg.seed = obj["seed"].get<std::uint64_t>();
  switch (cfg.kind) {
    case EstimatorKind::kDr:
      require_known_keys(obj,
                         {"kind", "seed", "hidden", "learning_rate", "epochs",
                          "propensity_hidden", "propensity_learning_rate",
                          "propensity_epochs", "propensity_clip"},
                         "estimators[dr]");
      cfg.dr.outcome_net.hidden = get_or<int>(obj, "hidden", cfg.dr.outcome_net.hidden);
      cfg.dr.outcome_net.learning_rate =
          get_or<double>(obj, "learning_rate", cfg.dr.outcome_net.learning_rate);
      cfg.dr.outcome_net.epochs = get_or<int>(obj, "epochs", cfg.dr.outcome_net.epochs);
      cfg.dr.propensity_net.hidden =
          get_or<int>(obj, "propensity_hidden", cfg.dr.outcome_net.hidden);
      cfg.dr.propensity_net.learning_rate = get_or<double>(obj, "propensity_learning_rate",
                                                           cfg.dr.propensity_net.learning_rate);
      cfg.dr.propensity_net.epochs =
          get_or<int>(obj, "propensity_epochs", cfg.dr.outcome_net.epochs);
      cfg.dr.propensity_clip = get_or<double>(obj, "propensity_clip", cfg.dr.propensity_clip);
      break;
    case EstimatorKind::kMlpMulti:
      require_known_keys(obj,
                         {"kind", "seed", "hidden", "learning_rate", "max_epochs",
                          "validation_fraction", "patience"},
                         "estimators[mlp_multi]");
      cfg.mlp.hidden = get_or<std::vector<int>>(obj, "hidden", cfg.mlp.hidden);
      cfg.mlp.learning_rate = get_or<double>(obj, "learning_rate", cfg.mlp.learning_rate);
      cfg.mlp.max_epochs = get_or<int>(obj, "max_epochs", cfg.mlp.max_epochs);
      cfg.mlp.validation_fraction =
          get_or<double>(obj, "validation_fraction", cfg.mlp.validation_fraction);
      cfg.mlp.patience = get_or<int>(obj, "patience", cfg.mlp.patience);
      break;
    case EstimatorKind::kGpMulti:
      require_known_keys(
          obj,
          {"kind", "seed", "length_scale", "signal_var", "noise_var", "jitter", "optimize"},
          "estimators[gp_multi]");
      cfg.gp.length_scale = get_or<double>(obj, "length_scale", cfg.gp.length_scale);
      cfg.gp.signal_var = get_or<double>(obj, "signal_var", cfg.gp.signal_var);
      cfg.gp.noise_var = get_or<double>(obj, "noise_var", cfg.gp.noise_var);
      cfg.gp.jitter = get_or<double>(obj, "jitter", cfg.gp.jitter);
      cfg.gp.optimize = get_or<bool>(obj, "optimize", cfg.gp.optimize);
      break;
  }
  return cfg;
}

StrategySpec parse_strategy(const json& obj) {
  require_known_keys(obj, {"name", "bandwidth", "scoring_mode", "batch_size", "seed"},
                     "strategies[]");
  StrategySpec spec;
  spec.kind = strategy_kind_from_string(obj.at("name").get<std::string>());
  if (obj.contains("bandwidth") && !obj["bandwidth"].is_null()) {
    if (obj["bandwidth"].is_string()) {
      if (obj["bandwidth"].get<std::string>() != "median_heuristic")
        throw ConfigError("bandwidth must be a positive number or 'median_heuristic'");
      spec.kernel.bandwidth = 0.0;
    } else {
      spec.kernel.bandwidth = obj["bandwidth"].get<double>();
      if (spec.kernel.bandwidth <= 0.0) throw ConfigError("bandwidth must be positive");
    }
  }
  const std::string mode = get_or<std::string>(obj, "scoring_mode", "independent");
  if (mode == "independent")
    spec.scoring_mode = CbScoringMode::kIndependent;
  else if (mode == "greedy_sequential")
    spec.scoring_mode = CbScoringMode::kGreedySequential;
  else
    throw ConfigError("scoring_mode must be 'independent' or 'greedy_sequential'");
  if (obj.contains("batch_size") && !obj["batch_size"].is_null())
    spec.batch_size = obj["batch_size"].get<int>();
  if (obj.contains("seed") && !obj["seed"].is_null())
    spec.seed = obj["seed"].get<std::uint64_t>();
  return spec;
}

json strategy_to_json(const StrategySpec& spec) {
  json obj;
  obj["name"] = to_string(spec.kind);
  if (spec.kernel.bandwidth > 0.0)
    obj["bandwidth"] = spec.kernel.bandwidth;
  else
    obj["bandwidth"] = "median_heuristic";
  obj["scoring_mode"] = spec.scoring_mode == CbScoringMode::kIndependent
                            ? "independent"
                            : "greedy_sequential";
  if (spec.batch_size.has_value())
    obj["batch_size"] = *spec.batch_size;
  else
    obj["batch_size"] = nullptr;
  if (spec.seed.has_value())
    obj["seed"] = *spec.seed;
  else
    obj["seed"] = nullptr;
  return obj;
}

json estimator_to_json(const EstimatorConfig& cfg) {
  json obj;
  obj["kind"] = to_string(cfg.kind);
  if (cfg.seed.has_value())
    obj["seed"] = *cfg.seed;
  else
    obj["seed"] = nullptr;
  switch (cfg.kind) {
    case EstimatorKind::kDr:
      obj["hidden"] = cfg.dr.outcome_net.hidden;
      obj["learning_rate"] = cfg.dr.outcome_net.learning_rate;
      obj["epochs"] = cfg.dr.outcome_net.epochs;
      obj["propensity_hidden"] = cfg.dr.propensity_net.hidden;
      obj["propensity_learning_rate"] = cfg.dr.propensity_net.learning_rate;
      obj["propensity_epochs"] = cfg.dr.propensity_net.epochs;
      obj["propensity_clip"] = cfg.dr.propensity_clip;
      break;
    case EstimatorKind::kMlpMulti:
      obj["hidden"] = cfg.mlp.hidden;
      obj["learning_rate"] = cfg.mlp.learning_rate;
      obj["max_epochs"] = cfg.mlp.max_epochs;
      obj["validation_fraction"] = cfg.mlp.validation_fraction;
      obj["patience"] = cfg.mlp.patience;
      break;
    case EstimatorKind::kGpMulti:
      obj["length_scale"] = cfg.gp.length_scale;
      obj["signal_var"] = cfg.gp.signal_var;
      obj["noise_var"] = cfg.gp.noise_var;
      obj["jitter"] = cfg.gp.jitter;
      obj["optimize"] = cfg.gp.optimize;
      break;
  }
  return obj;
}

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like path.to.key=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // plain string
  }
  json* node = &root;
  std::size_t begin = 0;
  while (true) {
    const auto dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot - begin);
    if (key.empty()) throw ConfigError("bad override path: " + path);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    begin = dot + 1;
  }
}

}  // namespace

std::vector<ColumnSpec> default_synthetic_columns() {
  using K = ColumnKind;
  return {
      {"bw", K::kContinuous, 2600.0, 900.0, 0.0},
      {"b.head", K::kContinuous, 34.0, 2.5, 0.0},
      {"preterm", K::kContinuous, 5.0, 3.0, 0.0},
      {"birth.o", K::kContinuous, 2.0, 1.2, 0.0},
      {"nnhealth", K::kContinuous, 100.0, 25.0, 0.0},
      {"momage", K::kContinuous, 24.0, 5.5, 0.0},
      {"sex", K::kBinary, 0.0, 1.0, 0.51},
      {"twin", K::kBinary, 0.0, 1.0, 0.08},
      {"b.marr", K::kBinary, 0.0, 1.0, 0.43},
      {"mom.lths", K::kBinary, 0.0, 1.0, 0.37},
      {"mom.hs", K::kBinary, 0.0, 1.0, 0.29},
      {"mom.scoll", K::kBinary, 0.0, 1.0, 0.20},
      {"cig", K::kBinary, 0.0, 1.0, 0.45},
      {"first", K::kBinary, 0.0, 1.0, 0.44},
      {"booze", K::kBinary, 0.0, 1.0, 0.12},
      {"drugs", K::kBinary, 0.0, 1.0, 0.11},
      {"work.dur", K::kBinary, 0.0, 1.0, 0.60},
      {"prenatal", K::kBinary, 0.0, 1.0, 0.95},
      {"momwhite", K::kBinary, 0.0, 1.0, 0.58},
      {"ark", K::kBinary, 0.0, 1.0, 0.13},
      {"ein", K::kBinary, 0.0, 1.0, 0.14},
      {"har", K::kBinary, 0.0, 1.0, 0.13},
      {"mia", K::kBinary, 0.0, 1.0, 0.15},
      {"pen", K::kBinary, 0.0, 1.0, 0.15},
      {"tex", K::kBinary, 0.0, 1.0, 0.16},
  };
}

ExperimentConfig parse_experiment_config_json(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require_known_keys(root,
                     {"data", "simulation", "partition", "estimators", "strategies",
                      "attribute_model", "batch_size", "max_iterations", "sigma_ate_sq",
                      "n_realizations", "seed", "output_dir", "workers", "export_pca"},
                     "config");
  ExperimentConfig cfg;
  if (root.contains("data")) cfg.data = parse_data(root["data"]);
  if (root.contains("simulation")) cfg.simulation = parse_simulation(root["simulation"]);
  if (cfg.simulation.outcome.named_beta.empty())
    cfg.simulation.outcome.named_beta = default_named_beta();
  if (root.contains("partition")) {
    require_known_keys(root["partition"], {"test_fraction"}, "partition");
    cfg.test_fraction = get_or<double>(root["partition"], "test_fraction", 0.25);
  }
  if (root.contains("estimators"))
    for (const auto& e : root["estimators"]) cfg.estimators.push_back(parse_estimator(e));
  if (cfg.estimators.empty()) cfg.estimators.push_back(EstimatorConfig{});
  if (root.contains("strategies"))
    for (const auto& s : root["strategies"]) cfg.strategies.push_back(parse_strategy(s));
  if (cfg.strategies.empty()) cfg.strategies.push_back(StrategySpec{});
  if (root.contains("attribute_model")) {
    const auto& am = root["attribute_model"];
    require_known_keys(am, {"n_trees", "max_depth", "min_samples_split", "mtry"},
                       "attribute_model");
    cfg.attribute_model.n_trees = get_or<int>(am, "n_trees", cfg.attribute_model.n_trees);
    cfg.attribute_model.max_depth = get_or<int>(am, "max_depth", cfg.attribute_model.max_depth);
    cfg.attribute_model.min_samples_split =
        get_or<int>(am, "min_samples_split", cfg.attribute_model.min_samples_split);
    cfg.attribute_model.mtry = get_or<int>(am, "mtry", cfg.attribute_model.mtry);
  }
  cfg.batch_size = get_or<int>(root, "batch_size", 10);
  cfg.max_iterations = get_or<int>(root, "max_iterations", -1);
  if (root.contains("sigma_ate_sq") && !root["sigma_ate_sq"].is_null())
    cfg.sigma_ate_sq = root["sigma_ate_sq"].get<double>();
  cfg.n_realizations = get_or<int>(root, "n_realizations", 1);
  cfg.seed = get_or<std::uint64_t>(root, "seed", 0);
  cfg.output_dir = get_or<std::string>(root, "output_dir", "out");
  cfg.workers = get_or<int>(root, "workers", 0);
  cfg.export_pca = get_or<bool>(root, "export_pca", false);
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + " is not valid JSON: " + e.what());
  }
  for (const auto& assignment : overrides) apply_override(root, assignment);
  return parse_experiment_config_json(root.dump());
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json root;
  json data;
  data["source"] = cfg.data.source == DataConfig::Source::kFile ? "file" : "synthetic";
  data["path"] = cfg.data.path.string();
  data["id_column"] = cfg.data.id_column;
  json kinds = json::object();
  for (const auto& [name, kind] : cfg.data.kinds) kinds[name] = to_string(kind);
  data["kinds"] = kinds;
  data["n_samples"] = cfg.data.n_samples;
  json columns = json::array();
  for (const auto& c : cfg.data.columns) {
    json col;
    col["name"] = c.name;
    col["kind"] = to_string(c.kind);
    if (c.kind == ColumnKind::kContinuous) {
      col["mean"] = c.mean;
      col["sd"] = c.sd;
    } else {
      col["p"] = c.p;
    }
    columns.push_back(col);
  }
  data["columns"] = columns;
  data["attribute_column"] = cfg.data.attribute_column;
  root["data"] = data;

  json sim;
  sim["mask_fraction"] = cfg.simulation.mask_fraction;
  sim["a_variant"] = {{"mode", to_string(cfg.simulation.a_variant.mode)},
                      {"retain_fraction", cfg.simulation.a_variant.retain_fraction},
                      {"rho", cfg.simulation.a_variant.rho},
                      {"birthweight_column", cfg.simulation.a_variant.birthweight_column}};
  json treatment;
  treatment["columns"] = cfg.simulation.treatment.columns;
  if (cfg.simulation.treatment.xi.has_value())
    treatment["xi"] = *cfg.simulation.treatment.xi;
  else
    treatment["xi"] = nullptr;
  treatment["xi_range"] = {cfg.simulation.treatment.xi_lo, cfg.simulation.treatment.xi_hi};
  treatment["clip"] = {cfg.simulation.treatment.clip_lo, cfg.simulation.treatment.clip_hi};
  sim["treatment"] = treatment;
  json outcome;
  outcome["named_beta"] = cfg.simulation.outcome.named_beta;
  outcome["noise_sd"] = cfg.simulation.outcome.noise_sd;
  sim["outcome"] = outcome;
  root["simulation"] = sim;

  root["partition"] = {{"test_fraction", cfg.test_fraction}};
  json estimators = json::array();
  for (const auto& e : cfg.estimators) estimators.push_back(estimator_to_json(e));
  root["estimators"] = estimators;
  json strategies = json::array();
  for (const auto& s : cfg.strategies) strategies.push_back(strategy_to_json(s));
  root["strategies"] = strategies;
  root["attribute_model"] = {{"n_trees", cfg.attribute_model.n_trees},
                             {"max_depth", cfg.attribute_model.max_depth},
                             {"min_samples_split", cfg.attribute_model.min_samples_split},
                             {"mtry", cfg.attribute_model.mtry}};
  root["batch_size"] = cfg.batch_size;
  root["max_iterations"] = cfg.max_iterations;
  if (cfg.sigma_ate_sq.has_value())
    root["sigma_ate_sq"] = *cfg.sigma_ate_sq;
  else
    root["sigma_ate_sq"] = nullptr;
  root["n_realizations"] = cfg.n_realizations;
  root["seed"] = cfg.seed;
  root["output_dir"] = cfg.output_dir.string();
  root["workers"] = cfg.workers;
  root["export_pca"] = cfg.export_pca;
  return root.dump(2);
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.n_realizations < 1) throw ConfigError("n_realizations must be >= 1");
  if (cfg.test_fraction <= 0.0 || cfg.test_fraction >= 1.0)
    throw ConfigError("partition.test_fraction must lie in (0,1)");
  if (cfg.simulation.mask_fraction < 0.0 || cfg.simulation.mask_fraction >= 1.0)
    throw ConfigError("simulation.mask_fraction must lie in [0,1)");
  if (cfg.estimators.empty()) throw ConfigError("at least one estimator is required");
  if (cfg.strategies.empty()) throw ConfigError("at least one strategy is required");
  std::set<std::string> estimator_names, strategy_names;
  for (const auto& e : cfg.estimators)
    if (!estimator_names.insert(to_string(e.kind)).second)
      throw ConfigError("duplicate estimator kind '" + to_string(e.kind) + "'");
  for (const auto& s : cfg.strategies) {
    if (!strategy_names.insert(to_string(s.kind)).second)
      throw ConfigError("duplicate strategy '" + to_string(s.kind) + "'");
    if (s.batch_size.has_value() && *s.batch_size < 1)
      throw ConfigError("strategy batch_size must be >= 1");
  }
  if (cfg.data.source == DataConfig::Source::kSynthetic) {
    const auto& columns =
        cfg.data.columns.empty() ? default_synthetic_columns() : cfg.data.columns;
    bool attribute_found = false;
    for (const auto& c : columns)
      if (c.name == cfg.data.attribute_column) {
        attribute_found = true;
        if (c.kind != ColumnKind::kBinary)
          throw ConfigError("attribute column '" + c.name + "' must be binary");
      }
    if (!attribute_found)
      throw ConfigError("attribute column '" + cfg.data.attribute_column +
                        "' is not among the synthetic columns");
  }
  if (cfg.sigma_ate_sq.has_value() && *cfg.sigma_ate_sq < 0.0)
    throw ConfigError("sigma_ate_sq must be nonnegative");
  // Capability gate: the outcome-error strategy needs factual-outcome
  // prediction from every configured estimator it will be paired with.
  for (const auto& s : cfg.strategies) {
    if (s.kind != StrategyKind::kOe) continue;
    for (const auto& e : cfg.estimators) {
      const auto probe = make_estimator(e, SplitRng(0));
      if (!probe->predicts_factual_outcome())
        throw ConfigError("strategy 'oe' is incompatible with estimator '" +
                          to_string(e.kind) + "' (no factual-outcome prediction)");
    }
  }
}

}  // namespace confacq
