#include "tabinfill/infill.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tabinfill/error.hpp"

namespace tabinfill {

double leakage_ratio(const MissingMask& a, const MissingMask& b) {
  if (a.size() != b.size()) throw DataError("leakage ratio needs masks of equal length");
  std::size_t both = 0;
  std::size_t marked = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.bits[i]) {
      ++marked;
      if (b.bits[i]) ++both;
    }
  }
  if (marked == 0) return 0.0;
  return static_cast<double>(both) / static_cast<double>(marked);
}

bool ExclusionPlan::excludes(const std::string& target, const std::string& other) const {
  if (full_exclude.contains(other)) return true;
  if (pairwise_excluded.contains(std::minmax(target, other))) return true;
  auto it = unidirectional.find(target);
  return it != unidirectional.end() && it->second.contains(other);
}

ExclusionPlan plan_exclusions(const MaskMap& masks, const LeakageConfig& config) {
  if (!(config.tolerance > 0.0 && config.tolerance <= 1.0)) {
    throw ConfigError("leakage_tolerance must lie in (0, 1]");
  }
  auto require = [&masks](const std::string& h, const char* where) {
    if (!masks.contains(h)) {
      throw ConfigError(std::string(where) + " names unknown column '" + h + "'");
    }
  };

  ExclusionPlan plan;
  plan.leakage_tolerance = config.tolerance;
  for (const auto& [target, target_mask] : masks) {
    for (const auto& [other, other_mask] : masks) {
      if (target == other) continue;
      if (leakage_ratio(target_mask, other_mask) > config.tolerance) {
        plan.unidirectional[target].insert(other);
      }
    }
  }
  for (const auto& group : config.leakage_sets) {
    for (const auto& a : group) {
      require(a, "leakage_sets");
      for (const auto& b : group) {
        if (a != b) plan.pairwise_excluded.insert(std::minmax(a, b));
      }
    }
  }
  for (const auto& [target, excluded] : config.leakage_dict) {
    require(target, "leakage_dict");
    for (const auto& e : excluded) {
      require(e, "leakage_dict");
      if (e != target) plan.unidirectional[target].insert(e);
    }
  }
  for (const auto& h : config.full_exclude) {
    require(h, "full_exclude");
    plan.full_exclude.insert(h);
  }
  return plan;
}

std::vector<std::string> order_targets(const MaskMap& masks) {
  std::vector<std::pair<std::size_t, std::string>> keyed;
  for (const auto& [h, m] : masks) keyed.emplace_back(m.count, h);
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> out;
  for (auto& [count, h] : keyed) out.push_back(std::move(h));
  return out;
}

bool FeatureLayout::ml_target() const {
  return std::find(ml_columns.begin(), ml_columns.end(), true) != ml_columns.end();
}

std::size_t InfillLayout::position(const std::string& header) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].header == header) return i;
  }
  throw DataError("no feature named '" + header + "' in the infill layout");
}

const FeatureLayout& InfillLayout::feature(const std::string& header) const {
  return features[position(header)];
}

Matrix gather(const EncodedFrame& frame, std::span<const std::size_t> columns,
              std::span<const std::size_t> rows) {
  Matrix m(rows.size(), columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto& col = frame.columns[columns[c]];
    for (std::size_t r = 0; r < rows.size(); ++r) m(r, c) = col[rows[r]];
  }
  return m;
}

Partitions partition(const std::string& target, const EncodedFrame& frame,
                     const MaskMap& masks, const InfillLayout& layout, const ExclusionPlan& plan) {
  const FeatureLayout& feature = layout.feature(target);
  const MissingMask& mask = masks.at(target);
  if (mask.size() != frame.rows) throw DataError("mask length differs from frame rows");

  Partitions p;
  for (const auto& other : layout.features) {
    if (other.header == target || plan.excludes(target, other.header)) continue;
    p.basis_columns.insert(p.basis_columns.end(), other.columns.begin(), other.columns.end());
    if (other.narw_column) p.basis_columns.push_back(*other.narw_column);
  }
  std::sort(p.basis_columns.begin(), p.basis_columns.end());
  for (auto c : p.basis_columns) p.basis.push_back(frame.headers[c]);

  for (std::size_t r = 0; r < mask.size(); ++r) {
    (mask.bits[r] ? p.infer_rows : p.train_rows).push_back(r);
  }
  p.train_X = gather(frame, p.basis_columns, p.train_rows);
  p.infer_X = gather(frame, p.basis_columns, p.infer_rows);
  p.train_y.reserve(p.train_rows.size());
  for (auto r : p.train_rows) {
    std::vector<double> row;
    row.reserve(feature.columns.size());
    for (auto c : feature.columns) row.push_back(frame.columns[c][r]);
    p.train_y.push_back(std::move(row));
  }
  return p;
}

ModelSet train_models(const EncodedFrame& frame, const InfillLayout& layout, const MaskMap& masks,
                      const ExclusionPlan& plan, const Learner& learner,
                      const LearnerConfig& config, std::uint64_t seed) {
  ModelSet models;
  for (std::size_t pos = 0; pos < layout.features.size(); ++pos) {
    const FeatureLayout& feature = layout.features[pos];
    if (!feature.ml_target()) continue;

    ImputationModel m;
    m.header = feature.header;
    m.task = feature.task;
    m.noise_min = feature.noise_min;
    m.noise_max = feature.noise_max;
    try {
      Partitions p = partition(feature.header, frame, masks, layout, plan);
      m.basis = p.basis;
      if (p.basis.empty()) {
        m.fallback_reason = "empty basis";
      } else if (p.train_rows.empty()) {
        m.fallback_reason = "no training rows";
      } else {
        LearnerConfig cfg = config;
        cfg.seed = derive_seed(seed, {pos});
        if (feature.task == Task::Regression) {
          std::vector<double> y;
          y.reserve(p.train_y.size());
          for (const auto& row : p.train_y) y.push_back(row.front());
          m.model = learner.fit(p.train_X, y, Task::Regression, cfg);
        } else {
          LabelConversion labels = labels_for_learner(p.train_y);
          m.labels = std::move(labels.map);
          m.model = learner.fit(p.train_X, labels.classes, Task::Classification, cfg);
        }
      }
    } catch (const DataError& e) {
      m.model.reset();
      m.fallback_reason = e.what();
    }
    models.emplace(feature.header, std::move(m));
  }
  return models;
}

void NoiseParams::validate() const {
  if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be nonnegative");
  for (double p : {numeric_flip_prob, categoric_flip_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("noise flip probability must lie in [0, 1]");
  }
}

NoiseParams NoiseParams::disabled() {
  NoiseParams p;
  p.numeric_enabled = false;
  p.categoric_enabled = false;
  return p;
}

NoisyValues inject_noise_numeric(std::span<const double> values, double train_min,
                                 double train_max, const NoiseParams& params, Rng& rng) {
  NoisyValues out{{values.begin(), values.end()}, 0};
  if (!(train_min < train_max)) return out;
  const double span = train_max - train_min;
  for (double& v : out.values) {
    if (!rng.bernoulli(params.numeric_flip_prob)) continue;
    ++out.injected;
    const double draw = params.distribution == NoiseDistribution::Normal
                            ? rng.normal(params.mu, params.sigma)
                            : rng.laplace(params.mu, params.sigma / std::numbers::sqrt2);
    const double scaled = std::clamp((v - train_min) / span + draw, 0.0, 1.0);
    v = std::clamp(scaled * span + train_min, train_min, train_max);
  }
  return out;
}

NoisyRows inject_noise_categoric(const std::vector<std::vector<double>>& rows,
                                 const std::vector<std::vector<double>>& training_rows,
                                 double flip_prob, Rng& rng) {
  if (training_rows.empty()) throw DataError("categoric noise needs training activation rows");
  NoisyRows out{rows, 0};
  for (auto& row : out.rows) {
    if (!rng.bernoulli(flip_prob)) continue;
    ++out.injected;
    row = training_rows[rng.uniform_index(training_rows.size())];
  }
  return out;
}

ImputationRecord impute_iteration(EncodedFrame& frame, const InfillLayout& layout,
                                  const ModelSet& models, const MaskMap& masks,
                                  std::span<const std::string> order, const NoiseParams& noise,
                                  std::uint64_t seed, std::size_t iteration) {
  ImputationRecord record;
  record.iteration = iteration;
  for (const auto& header : order) {
    auto it = models.find(header);
    if (it == models.end() || it->second.fallback()) continue;
    const ImputationModel& model = it->second;
    const MissingMask& mask = masks.at(header);
    if (mask.count == 0) continue;
    const std::size_t pos = layout.position(header);
    const FeatureLayout& feature = layout.features[pos];

    std::vector<std::size_t> rows;
    rows.reserve(mask.count);
    for (std::size_t r = 0; r < mask.size(); ++r) {
      if (mask.bits[r]) rows.push_back(r);
    }
    std::vector<std::size_t> basis_columns;
    for (const auto& h : model.basis) basis_columns.push_back(frame.index_of(h));
    const auto pred = model.model->predict(gather(frame, basis_columns, rows));

    Rng rng(derive_seed(seed, {iteration, pos, 0x401e}));
    FeatureImputations imp;
    imp.task = model.task;
    imp.rows = rows;
    if (model.task == Task::Regression) {
      std::vector<double> values = pred;
      if (noise.numeric_enabled) {
        values = inject_noise_numeric(values, model.noise_min, model.noise_max, noise, rng).values;
      }
      for (double v : values) imp.values.push_back({v});
    } else {
      imp.values = inverse_labels(pred, model.labels);
      if (noise.categoric_enabled) {
        imp.values =
            inject_noise_categoric(imp.values, model.labels.rows(), noise.categoric_flip_prob, rng)
                .rows;
      }
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t c = 0; c < feature.columns.size(); ++c) {
        if (feature.ml_columns[c]) frame.columns[feature.columns[c]][rows[i]] = imp.values[i][c];
      }
    }
    record.features.emplace(header, std::move(imp));
  }
  return record;
}

void HaltTolerances::validate() const {
  if (!(numeric_tol > 0.0) || !(categoric_tol > 0.0)) {
    throw ConfigError("halting tolerances must be positive");
  }
  if (max_iterations < 1) throw ConfigError("iterations must be at least 1");
}

HaltCheck check_halt(const ImputationRecord& prev, const ImputationRecord& curr,
                     const HaltTolerances& tolerances) {
  if (prev.features.size() != curr.features.size()) {
    throw DataError("imputation records cover different features");
  }
  double weighted = 0.0;
  double weight = 0.0;
  std::size_t changed = 0;
  std::size_t categoric_total = 0;
  for (const auto& [header, c] : curr.features) {
    auto it = prev.features.find(header);
    if (it == prev.features.end() || it->second.rows != c.rows ||
        it->second.values.size() != c.values.size()) {
      throw DataError("imputation records differ in rows for '" + header + "'");
    }
    const auto& p = it->second;
    if (c.rows.empty()) continue;
    if (c.task == Task::Regression) {
      double max_delta = 0.0;
      double abs_sum = 0.0;
      for (std::size_t i = 0; i < c.values.size(); ++i) {
        max_delta = std::max(max_delta, std::abs(c.values[i][0] - p.values[i][0]));
        abs_sum += std::abs(c.values[i][0]);
      }
      const double mean_abs = abs_sum / static_cast<double>(c.values.size());
      double r = 0.0;
      if (mean_abs > 0.0) {
        r = max_delta / mean_abs;
      } else if (max_delta > 0.0) {
        r = 1.0;
      }
      const auto w = static_cast<double>(c.values.size());
      weighted += w * r;
      weight += w;
    } else {
      for (std::size_t i = 0; i < c.values.size(); ++i) {
        if (c.values[i] != p.values[i]) ++changed;
      }
      categoric_total += c.values.size();
    }
  }
  HaltCheck h;
  h.numeric_metric = weight > 0.0 ? weighted / weight : 0.0;
  h.categoric_metric =
      categoric_total > 0 ? static_cast<double>(changed) / static_cast<double>(categoric_total)
                          : 0.0;
  h.halt = h.numeric_metric <= tolerances.numeric_tol &&
           h.categoric_metric <= tolerances.categoric_tol;
  return h;
}

InfillRun run_ml_infill(EncodedFrame& frame, const InfillLayout& layout, const MaskMap& masks,
                        const ExclusionPlan& plan, const Learner& learner,
                        const LearnerConfig& config, const NoiseParams& noise,
                        const HaltTolerances& tolerances, std::uint64_t seed) {
  tolerances.validate();
  noise.validate();
  InfillRun run;
  run.order = order_targets(masks);
  for (int it = 0; it < tolerances.max_iterations; ++it) {
    const auto iteration = static_cast<std::size_t>(it);
    run.iterations.push_back(train_models(frame, layout, masks, plan, learner, config,
                                          derive_seed(seed, {iteration, 0x7a1})));
    run.records.push_back(impute_iteration(frame, layout, run.iterations.back(), masks, run.order,
                                           noise, seed, iteration));
    if (it > 0 && tolerances.halt_enabled) {
      run.halt_checks.push_back(
          check_halt(run.records[iteration - 1], run.records[iteration], tolerances));
      if (run.halt_checks.back().halt) break;
    }
  }
  return run;
}

std::size_t replay_ml_infill(EncodedFrame& frame, const InfillLayout& layout,
                             std::span<const ModelSet> iterations, const MaskMap& masks,
                             std::span<const std::string> order, const NoiseParams& noise,
                             std::uint64_t seed) {
  std::size_t calls = 0;
  for (std::size_t it = 0; it < iterations.size(); ++it) {
    calls += impute_iteration(frame, layout, iterations[it], masks, order, noise, seed, it)
                 .features.size();
  }
  return calls;
}

}  // namespace tabinfill
