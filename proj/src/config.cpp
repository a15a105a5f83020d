#include <fstream>
#include <sstream>

#include "json_io.hpp"
#include "tabinfill/error.hpp"

namespace tabinfill {

namespace detail {

using nlohmann::json;

namespace {

const char* to_string(NoiseDistribution d) {
  return d == NoiseDistribution::Normal ? "normal" : "laplace";
}

NoiseDistribution noise_distribution_from(const std::string& s) {
  if (s == "normal") return NoiseDistribution::Normal;
  if (s == "laplace") return NoiseDistribution::Laplace;
  throw ConfigError("unknown noise distribution '" + s + "' (expected normal or laplace)");
}

json learner_to_json(const LearnerConfig& c) {
  json j;
  const auto& g = c.grid;
  if (g.n_estimators.empty()) {
    j["n_estimators"] = c.n_estimators;
  } else {
    j["n_estimators"] = g.n_estimators;
  }
  if (!g.max_depth.empty()) {
    j["max_depth"] = g.max_depth;
  } else {
    j["max_depth"] = c.max_depth.value_or(0);
  }
  if (g.min_samples_split.empty()) {
    j["min_samples_split"] = c.min_samples_split;
  } else {
    j["min_samples_split"] = g.min_samples_split;
  }
  if (!g.feature_subsample.empty()) {
    json list = json::array();
    for (auto f : g.feature_subsample) list.push_back(to_string(f));
    j["feature_subsample"] = list;
  } else if (c.feature_subsample) {
    j["feature_subsample"] = to_string(*c.feature_subsample);
  }
  if (g.bootstrap.empty()) {
    j["bootstrap"] = c.bootstrap;
  } else {
    json list = json::array();
    for (bool b : g.bootstrap) list.push_back(b);
    j["bootstrap"] = list;
  }
  j["seed"] = c.seed;
  return j;
}

// A parameter given as a list becomes a grid axis; a scalar sets the value.
template <typename T, typename Set>
void scalar_or_list(const json& v, std::vector<T>& grid, Set set) {
  if (v.is_array()) {
    if (v.empty()) throw ConfigError("grid lists must be nonempty");
    for (const auto& e : v) grid.push_back(e.get<T>());
  } else {
    set(v.get<T>());
  }
}

LearnerConfig learner_from_json(const json& j) {
  LearnerConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "n_estimators") {
      scalar_or_list<int>(v, c.grid.n_estimators, [&](int x) { c.n_estimators = x; });
    } else if (key == "max_depth") {
      scalar_or_list<int>(v, c.grid.max_depth, [&](int x) {
        c.max_depth = x == 0 ? std::nullopt : std::optional<int>(x);
      });
    } else if (key == "min_samples_split") {
      scalar_or_list<int>(v, c.grid.min_samples_split, [&](int x) { c.min_samples_split = x; });
    } else if (key == "feature_subsample") {
      std::vector<std::string> names;
      scalar_or_list<std::string>(v, names, [&](const std::string& s) {
        c.feature_subsample = feature_subsample_from_string(s);
      });
      for (const auto& n : names) c.grid.feature_subsample.push_back(feature_subsample_from_string(n));
    } else if (key == "bootstrap") {
      std::vector<bool> flags;
      scalar_or_list<bool>(v, flags, [&](bool b) { c.bootstrap = b; });
      c.grid.bootstrap = flags;
    } else if (key == "seed") {
      c.seed = v.get<std::uint64_t>();
    } else {
      throw ConfigError("unknown learner parameter '" + key + "'");
    }
  }
  c.validate();
  return c;
}

json ml_to_json(const MlCommand& m) {
  json j;
  j["leakage_sets"] = m.leakage.leakage_sets;
  j["leakage_dict"] = m.leakage.leakage_dict;
  j["full_exclude"] = m.leakage.full_exclude;
  j["leakage_tolerance"] = m.leakage.tolerance;
  j["halt_iterate"] = m.halt.halt_enabled;
  j["categoric_tol"] = m.halt.categoric_tol;
  j["numeric_tol"] = m.halt.numeric_tol;
  j["infilliterate"] = m.halt.max_iterations;
  j["stochastic_impute_numeric"] = m.noise.numeric_enabled;
  j["stochastic_impute_numeric_mu"] = m.noise.mu;
  j["stochastic_impute_numeric_sigma"] = m.noise.sigma;
  j["stochastic_impute_numeric_flip_prob"] = m.noise.numeric_flip_prob;
  j["stochastic_impute_numeric_noisedistribution"] = to_string(m.noise.distribution);
  j["stochastic_impute_categoric"] = m.noise.categoric_enabled;
  j["stochastic_impute_categoric_flip_prob"] = m.noise.categoric_flip_prob;
  j["MLinfill_cmnd"] = learner_to_json(m.learner);
  return j;
}

MlCommand ml_from_json(const json& j) {
  MlCommand m;
  for (const auto& [key, v] : j.items()) {
    if (key == "leakage_sets") {
      // Either one list of headers or a list of lists.
      if (!v.is_array()) throw ConfigError("leakage_sets must be a list");
      if (!v.empty() && v.front().is_string()) {
        m.leakage.leakage_sets.push_back(v.get<std::vector<std::string>>());
      } else {
        m.leakage.leakage_sets = v.get<std::vector<std::vector<std::string>>>();
      }
    } else if (key == "leakage_dict") {
      m.leakage.leakage_dict = v.get<std::map<std::string, std::set<std::string>>>();
    } else if (key == "full_exclude") {
      m.leakage.full_exclude = v.get<std::vector<std::string>>();
    } else if (key == "leakage_tolerance") {
      m.leakage.tolerance = v.get<double>();
    } else if (key == "halt_iterate") {
      m.halt.halt_enabled = v.get<bool>();
    } else if (key == "categoric_tol") {
      m.halt.categoric_tol = v.get<double>();
    } else if (key == "numeric_tol") {
      m.halt.numeric_tol = v.get<double>();
    } else if (key == "infilliterate") {
      m.halt.max_iterations = v.get<int>();
    } else if (key == "stochastic_impute_numeric") {
      m.noise.numeric_enabled = v.get<bool>();
    } else if (key == "stochastic_impute_numeric_mu") {
      m.noise.mu = v.get<double>();
    } else if (key == "stochastic_impute_numeric_sigma") {
      m.noise.sigma = v.get<double>();
    } else if (key == "stochastic_impute_numeric_flip_prob") {
      m.noise.numeric_flip_prob = v.get<double>();
    } else if (key == "stochastic_impute_numeric_noisedistribution") {
      m.noise.distribution = noise_distribution_from(v.get<std::string>());
    } else if (key == "stochastic_impute_categoric") {
      m.noise.categoric_enabled = v.get<bool>();
    } else if (key == "stochastic_impute_categoric_flip_prob") {
      m.noise.categoric_flip_prob = v.get<double>();
    } else if (key == "MLinfill_cmnd") {
      m.learner = learner_from_json(v);
    } else {
      throw ConfigError("unknown ml_cmnd key '" + key + "'");
    }
  }
  m.noise.validate();
  m.halt.validate();
  return m;
}

}  // namespace

json config_to_json(const PrepareConfig& c) {
  json j;
  j["labels_column"] = c.labels_column ? json(*c.labels_column) : json(nullptr);
  j["id_columns"] = c.id_columns;
  j["val_ratio"] = c.val_ratio;
  j["shuffle_train"] = c.shuffle_train;
  j["shuffle_test"] = c.shuffle_test;
  j["ml_infill"] = c.ml_infill;
  j["narw_marker"] = c.narw_marker;
  j["infill_only"] = c.infill_only;
  j["assigncat"] = c.assigncat;
  j["assigninfill"] = c.assigninfill;
  j["ml_cmnd"] = ml_to_json(c.ml_cmnd);
  j["seed"] = c.seed;
  return j;
}

PrepareConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  PrepareConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "labels_column") {
        if (!v.is_null()) c.labels_column = v.get<std::string>();
      } else if (key == "id_columns") {
        c.id_columns = v.get<std::vector<std::string>>();
      } else if (key == "val_ratio") {
        c.val_ratio = v.get<double>();
      } else if (key == "shuffle_train") {
        c.shuffle_train = v.get<bool>();
      } else if (key == "shuffle_test") {
        c.shuffle_test = v.get<bool>();
      } else if (key == "ml_infill") {
        c.ml_infill = v.get<bool>();
      } else if (key == "narw_marker") {
        c.narw_marker = v.get<bool>();
      } else if (key == "infill_only") {
        c.infill_only = v.get<bool>();
      } else if (key == "assigncat") {
        c.assigncat = v.get<std::map<std::string, std::vector<std::string>>>();
        for (const auto& [name, headers] : c.assigncat) scheme_from_string(name);
      } else if (key == "assigninfill") {
        c.assigninfill = v.get<InfillAssignments>();
        for (const auto& [name, headers] : c.assigninfill) infill_strategy_from_name(name);
      } else if (key == "ml_cmnd") {
        c.ml_cmnd = ml_from_json(v);
      } else if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (!(c.val_ratio >= 0.0 && c.val_ratio < 1.0)) throw ConfigError("val_ratio must lie in [0, 1)");
  return c;
}

}  // namespace detail

PrepareConfig parse_prepare_config(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return detail::config_from_json(j);
}

PrepareConfig load_prepare_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_prepare_config(ss.str());
}

std::string prepare_config_to_json(const PrepareConfig& config) {
  return detail::config_to_json(config).dump(2);
}

}  // namespace tabinfill
