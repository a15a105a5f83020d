#include <fstream>
#include <sstream>

#include "json_io.hpp"
#include "tabinfill/error.hpp"

namespace tabinfill {

namespace detail {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

}  // namespace

std::string base64_encode(const std::string& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    const auto b1 = static_cast<unsigned char>(bytes[i + 1]);
    const auto b2 = static_cast<unsigned char>(bytes[i + 2]);
    out.push_back(kAlphabet[b0 >> 2]);
    out.push_back(kAlphabet[((b0 & 3) << 4) | (b1 >> 4)]);
    out.push_back(kAlphabet[((b1 & 15) << 2) | (b2 >> 6)]);
    out.push_back(kAlphabet[b2 & 63]);
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    out.push_back(kAlphabet[b0 >> 2]);
    out.push_back(kAlphabet[(b0 & 3) << 4]);
    out += "==";
  } else if (rest == 2) {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    const auto b1 = static_cast<unsigned char>(bytes[i + 1]);
    out.push_back(kAlphabet[b0 >> 2]);
    out.push_back(kAlphabet[((b0 & 3) << 4) | (b1 >> 4)]);
    out.push_back(kAlphabet[(b1 & 15) << 2]);
    out.push_back('=');
  }
  return out;
}

std::string base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw ArtifactError("base64 payload has invalid length");
  std::string out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + static_cast<std::size_t>(k)];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        v[k] = 0;
        ++pad;
      } else if (pad > 0 || (v[k] = decode_char(c)) < 0) {
        throw ArtifactError("base64 payload has invalid characters");
      }
    }
    const unsigned n = (static_cast<unsigned>(v[0]) << 18) | (static_cast<unsigned>(v[1]) << 12) |
                       (static_cast<unsigned>(v[2]) << 6) | static_cast<unsigned>(v[3]);
    out.push_back(static_cast<char>((n >> 16) & 0xff));
    if (pad < 2) out.push_back(static_cast<char>((n >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<char>(n & 0xff));
  }
  return out;
}

}  // namespace detail

namespace {

using nlohmann::json;
using detail::base64_decode;
using detail::base64_encode;

constexpr const char* kFormatName = "tabinfill-artifact";

json strategy_to_json(const InfillStrategy& s) {
  json j = {{"kind", to_string(s)}};
  if (s.kind == InfillStrategy::Kind::Arbitrary) j["value"] = s.value;
  return j;
}

InfillStrategy strategy_from_json(const json& j) {
  using K = InfillStrategy::Kind;
  const auto kind = j.at("kind").get<std::string>();
  for (K k : {K::Mean, K::Median, K::Mode, K::AdjacentCell, K::Arbitrary, K::DistinctActivation,
              K::MLInfill}) {
    InfillStrategy s{k};
    if (to_string(s) == kind) {
      if (k == K::Arbitrary) s.value = j.at("value").get<double>();
      return s;
    }
  }
  throw ArtifactError("unknown infill strategy '" + kind + "' in artifact");
}

json spec_to_json(const EncodingSpec& s) {
  json j;
  j["input_header"] = s.input_header;
  j["input_kind"] = to_string(s.input_kind);
  j["scheme"] = to_string(s.scheme);
  j["returned_headers"] = s.returned_headers;
  j["default_infill"] = strategy_to_json(s.default_infill);
  if (is_categoric(s.scheme)) {
    j["entries"] = s.categoric.entries;
    j["activations"] = s.categoric.activations;
    j["mode"] = s.categoric.mode;
  } else {
    const auto& n = s.numeric;
    j["numeric"] = {{"mean", n.mean},     {"std", n.std},       {"min", n.min},
                    {"max", n.max},       {"median", n.median}, {"mode", n.mode}};
  }
  return j;
}

EncodingSpec spec_from_json(const json& j) {
  EncodingSpec s;
  s.input_header = j.at("input_header").get<std::string>();
  s.input_kind = column_kind_from_string(j.at("input_kind").get<std::string>());
  s.scheme = scheme_from_string(j.at("scheme").get<std::string>());
  s.returned_headers = j.at("returned_headers").get<std::vector<std::string>>();
  s.default_infill = strategy_from_json(j.at("default_infill"));
  if (is_categoric(s.scheme)) {
    s.categoric.entries = j.at("entries").get<std::vector<std::string>>();
    s.categoric.activations = j.at("activations").get<std::vector<std::vector<double>>>();
    s.categoric.mode = j.at("mode").get<std::string>();
    if (s.categoric.activations.size() != s.categoric.entries.size() + 1) {
      throw ArtifactError("activation map size mismatch for '" + s.input_header + "'");
    }
    for (const auto& row : s.categoric.activations) {
      if (row.size() != s.returned_headers.size()) {
        throw ArtifactError("activation width mismatch for '" + s.input_header + "'");
      }
    }
  } else {
    const auto& n = j.at("numeric");
    s.numeric = {n.at("mean").get<double>(),   n.at("std").get<double>(),
                 n.at("min").get<double>(),    n.at("max").get<double>(),
                 n.at("median").get<double>(), n.at("mode").get<double>()};
    if (s.returned_headers.size() != 1) throw ArtifactError("numeric spec needs one column");
  }
  return s;
}

json model_to_json(const ImputationModel& m) {
  json j;
  j["header"] = m.header;
  j["task"] = to_string(m.task);
  j["basis"] = m.basis;
  j["fallback_reason"] = m.fallback_reason;
  j["noise_min"] = m.noise_min;
  j["noise_max"] = m.noise_max;
  j["label_rows"] = m.labels.rows();
  if (m.model) {
    j["learner"] = m.model->learner_name();
    j["model"] = base64_encode(m.model->encode());
  } else {
    j["learner"] = nullptr;
    j["model"] = nullptr;
  }
  return j;
}

ImputationModel model_from_json(const json& j) {
  ImputationModel m;
  m.header = j.at("header").get<std::string>();
  const auto task = j.at("task").get<std::string>();
  if (task != "regression" && task != "classification") throw ArtifactError("unknown task");
  m.task = task == "regression" ? Task::Regression : Task::Classification;
  m.basis = j.at("basis").get<std::vector<std::string>>();
  m.fallback_reason = j.at("fallback_reason").get<std::string>();
  m.noise_min = j.at("noise_min").get<double>();
  m.noise_max = j.at("noise_max").get<double>();
  m.labels = LabelMap(j.at("label_rows").get<std::vector<std::vector<double>>>());
  if (!j.at("model").is_null()) {
    const Learner& learner = find_learner(j.at("learner").get<std::string>());
    m.model = learner.decode(base64_decode(j.at("model").get<std::string>()));
  }
  return m;
}

json plan_to_json(const ExclusionPlan& p) {
  json pairs = json::array();
  for (const auto& [a, b] : p.pairwise_excluded) pairs.push_back({a, b});
  return {{"pairwise_excluded", pairs},
          {"unidirectional", p.unidirectional},
          {"full_exclude", p.full_exclude},
          {"leakage_tolerance", p.leakage_tolerance}};
}

ExclusionPlan plan_from_json(const json& j) {
  ExclusionPlan p;
  for (const auto& pair : j.at("pairwise_excluded")) {
    p.pairwise_excluded.emplace(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
  }
  p.unidirectional = j.at("unidirectional").get<std::map<std::string, std::set<std::string>>>();
  p.full_exclude = j.at("full_exclude").get<std::set<std::string>>();
  p.leakage_tolerance = j.at("leakage_tolerance").get<double>();
  return p;
}

json learner_base_to_json(const LearnerConfig& c) {
  return {{"n_estimators", c.n_estimators},
          {"max_depth", c.max_depth.value_or(0)},
          {"min_samples_split", c.min_samples_split},
          {"feature_subsample",
           c.feature_subsample ? json(to_string(*c.feature_subsample)) : json(nullptr)},
          {"bootstrap", c.bootstrap},
          {"seed", c.seed}};
}

void learner_base_from_json(const json& j, LearnerConfig& c) {
  c.n_estimators = j.at("n_estimators").get<int>();
  const int depth = j.at("max_depth").get<int>();
  c.max_depth = depth == 0 ? std::nullopt : std::optional<int>(depth);
  c.min_samples_split = j.at("min_samples_split").get<int>();
  const auto& fs = j.at("feature_subsample");
  c.feature_subsample = fs.is_null() ? std::nullopt
                                     : std::optional(feature_subsample_from_string(fs.get<std::string>()));
  c.bootstrap = j.at("bootstrap").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
}

json artifact_to_json(const FitArtifact& a) {
  json j;
  j["format"] = kFormatName;
  j["format_version"] = a.format_version;
  j["config"] = detail::config_to_json(a.config);
  j["learner_base"] = learner_base_to_json(a.config.ml_cmnd.learner);
  j["input_headers"] = a.input_headers;
  json specs = json::array();
  for (const auto& s : a.specs) specs.push_back(spec_to_json(s));
  j["specs"] = specs;
  j["label_spec"] = a.label_spec ? spec_to_json(*a.label_spec) : json(nullptr);
  json infill = json::array();
  for (const auto& col : a.infill) {
    json list = json::array();
    for (const auto& s : col) list.push_back(strategy_to_json(s));
    infill.push_back(list);
  }
  j["infill"] = infill;
  j["plan"] = plan_to_json(a.plan);
  j["order"] = a.order;
  json iterations = json::array();
  for (const auto& set : a.iterations) {
    json models = json::array();
    for (const auto& [h, m] : set) models.push_back(model_to_json(m));
    iterations.push_back(models);
  }
  j["iterations"] = iterations;
  json halts = json::array();
  for (const auto& h : a.halt_checks) {
    halts.push_back({{"halt", h.halt},
                     {"numeric_metric", h.numeric_metric},
                     {"categoric_metric", h.categoric_metric}});
  }
  j["halt_checks"] = halts;
  j["learner"] = a.learner_name;
  j["train_missing_counts"] = a.train_missing_counts;
  j["output_headers"] = a.output_headers;
  j["column_map"] = a.column_map;
  j["columntype_report"] = a.columntype_report;
  return j;
}

FitArtifact artifact_from_json(const json& j) {
  FitArtifact a;
  a.format_version = j.at("format_version").get<int>();
  a.config = detail::config_from_json(j.at("config"));
  learner_base_from_json(j.at("learner_base"), a.config.ml_cmnd.learner);
  a.input_headers = j.at("input_headers").get<std::vector<std::string>>();
  for (const auto& s : j.at("specs")) a.specs.push_back(spec_from_json(s));
  if (!j.at("label_spec").is_null()) a.label_spec = spec_from_json(j.at("label_spec"));
  for (const auto& col : j.at("infill")) {
    std::vector<InfillStrategy> list;
    for (const auto& s : col) list.push_back(strategy_from_json(s));
    a.infill.push_back(std::move(list));
  }
  a.plan = plan_from_json(j.at("plan"));
  a.order = j.at("order").get<std::vector<std::string>>();
  for (const auto& set : j.at("iterations")) {
    ModelSet models;
    for (const auto& m : set) {
      auto model = model_from_json(m);
      models.emplace(model.header, std::move(model));
    }
    a.iterations.push_back(std::move(models));
  }
  for (const auto& h : j.at("halt_checks")) {
    a.halt_checks.push_back({h.at("halt").get<bool>(), h.at("numeric_metric").get<double>(),
                             h.at("categoric_metric").get<double>()});
  }
  a.learner_name = j.at("learner").get<std::string>();
  a.train_missing_counts = j.at("train_missing_counts").get<std::map<std::string, std::size_t>>();
  a.output_headers = j.at("output_headers").get<std::vector<std::string>>();
  a.column_map = j.at("column_map").get<std::map<std::string, std::vector<std::string>>>();
  a.columntype_report = j.at("columntype_report").get<std::map<std::string, std::string>>();

  if (a.specs.size() != a.input_headers.size() || a.infill.size() != a.specs.size()) {
    throw ArtifactError("artifact column lists disagree in length");
  }
  for (std::size_t i = 0; i < a.specs.size(); ++i) {
    if (a.infill[i].size() != a.specs[i].returned_headers.size()) {
      throw ArtifactError("infill assignments disagree with returned headers");
    }
  }
  return a;
}

}  // namespace

std::string save_artifact(const FitArtifact& artifact) { return artifact_to_json(artifact).dump(); }

FitArtifact load_artifact(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    throw ArtifactError(std::string("artifact is corrupted: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != kFormatName) {
      throw ArtifactError("not a tabinfill artifact");
    }
    const int version = j.at("format_version").get<int>();
    if (version != kArtifactFormatVersion) throw UnsupportedVersionError(version);
    return artifact_from_json(j);
  } catch (const json::exception& e) {
    throw ArtifactError(std::string("artifact is malformed: ") + e.what());
  } catch (const ConfigError& e) {
    throw ArtifactError(std::string("artifact config is invalid: ") + e.what());
  }
}

void save_artifact_file(const std::string& path, const FitArtifact& artifact) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << save_artifact(artifact);
  if (!out) throw DataError("failed writing '" + path + "'");
}

FitArtifact load_artifact_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open artifact '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_artifact(ss.str());
}

bool same_artifact(const FitArtifact& a, const FitArtifact& b) {
  return artifact_to_json(a) == artifact_to_json(b);
}

}  // namespace tabinfill
