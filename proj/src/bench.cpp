#include "tabinfill/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>

#include "tabinfill/error.hpp"
#include "tabinfill/rng.hpp"

namespace tabinfill::bench {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kHoldoutStream = 0x401d;

void check_ratio(double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw ConfigError("injection ratio must lie in [0, 1]");
  }
}

std::size_t round_count(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
}

Injection inject_among(const Column& column, const std::vector<std::size_t>& eligible,
                       double ratio, std::uint64_t seed) {
  Injection out{column, MissingMask::from_bits(std::vector<std::uint8_t>(column.size(), 0)),
                column};
  const std::size_t k = round_count(ratio, eligible.size());
  Rng rng(seed);
  std::vector<std::uint8_t> bits(column.size(), 0);
  for (std::size_t pick : rng.sample_without_replacement(eligible.size(), k)) {
    const std::size_t row = eligible[pick];
    bits[row] = 1;
    out.column.set_missing(row);
  }
  out.truth = MissingMask::from_bits(std::move(bits));
  return out;
}

std::string shortest(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Matrix to_matrix(const EncodedFrame& frame) {
  Matrix X(frame.rows, frame.columns.size());
  for (std::size_t c = 0; c < frame.columns.size(); ++c) {
    for (std::size_t r = 0; r < frame.rows; ++r) X(r, c) = frame.columns[c][r];
  }
  return X;
}

bool constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

std::vector<double> label_values(const Table& t, const std::string& label) {
  const Column& col = t.column(label);
  if (col.kind() != ColumnKind::Numeric) throw DataError("label '" + label + "' is not numeric");
  std::vector<double> out;
  out.reserve(col.size());
  for (const auto& v : col.numeric_cells()) {
    if (!v) throw DataError("label '" + label + "' has missing values");
    out.push_back(*v);
  }
  return out;
}

std::optional<std::string> strategy_assignment(const std::string& strategy) {
  if (strategy == "default") return std::nullopt;
  if (strategy == "mode") return "modeinfill";
  if (strategy == "adjacent") return "adjinfill";
  if (strategy == "ml" || strategy == "ml+narw") return "MLinfill";
  throw ConfigError("unknown strategy '" + strategy + "'");
}

double stddev(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

const char* to_string(Mechanism m) noexcept {
  switch (m) {
    case Mechanism::MAR: return "mar";
    case Mechanism::MNARNumericRightTail: return "mnar_numeric_right_tail";
    case Mechanism::MNARCategoricActivation: return "mnar_categoric_activation";
  }
  return "?";
}

double lower_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(std::floor(static_cast<double>(values.size() - 1) * q));
  return values[idx];
}

Injection inject_mar(const Column& column, double ratio, std::uint64_t seed) {
  check_ratio(ratio);
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < column.size(); ++i) {
    if (!column.is_missing(i)) eligible.push_back(i);
  }
  return inject_among(column, eligible, ratio, seed);
}

Injection inject_mnar_numeric(const Column& column, double segment_quantile, double ratio,
                              std::uint64_t seed) {
  check_ratio(ratio);
  if (column.kind() != ColumnKind::Numeric) {
    throw DataError("numeric right-tail injection needs a numeric column");
  }
  std::vector<double> present;
  for (const auto& v : column.numeric_cells()) {
    if (v) present.push_back(*v);
  }
  if (present.empty()) throw DataError("right-tail segment is empty");
  const double cut = lower_quantile(present, segment_quantile);
  std::vector<std::size_t> segment;
  const auto& cells = column.numeric_cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] && *cells[i] >= cut) segment.push_back(i);
  }
  return inject_among(column, segment, ratio, seed);
}

Injection inject_mnar_categoric(const Column& column,
                                const std::optional<std::string>& target_category, double ratio,
                                std::uint64_t seed) {
  check_ratio(ratio);
  if (column.kind() != ColumnKind::Categoric) {
    throw DataError("categoric activation injection needs a categoric column");
  }
  const auto& cells = column.categoric_cells();
  std::string category;
  if (target_category) {
    category = *target_category;
  } else {
    std::map<std::string, std::size_t> counts;
    for (const auto& v : cells) {
      if (v) ++counts[*v];
    }
    std::size_t best = 0;
    for (const auto& [entry, n] : counts) {
      if (n > best) {
        best = n;
        category = entry;
      }
    }
    if (best == 0) throw DataError("column has no category to inject");
  }
  std::vector<std::size_t> segment;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] && *cells[i] == category) segment.push_back(i);
  }
  if (segment.empty()) throw DataError("category '" + category + "' is not present");
  return inject_among(column, segment, ratio, seed);
}

Injection inject(const Column& column, const InjectionSpec& spec) {
  switch (spec.mechanism) {
    case Mechanism::MAR: return inject_mar(column, spec.ratio, spec.seed);
    case Mechanism::MNARNumericRightTail:
      return inject_mnar_numeric(column, spec.segment_quantile, spec.ratio, spec.seed);
    case Mechanism::MNARCategoricActivation:
      return inject_mnar_categoric(column, spec.target_category, spec.ratio, spec.seed);
  }
  throw ConfigError("unknown mechanism");
}

double rmse(std::span<const double> predictions, std::span<const double> truth) {
  if (predictions.size() != truth.size()) throw DataError("rmse inputs differ in length");
  if (truth.empty()) throw DataError("rmse of an empty set");
  double ss = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = predictions[i] - truth[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(truth.size()));
}

double downstream_eval(const EncodedFrame& train, std::span<const double> train_labels,
                       const EncodedFrame& holdout, std::span<const double> holdout_labels,
                       std::uint64_t seed, const LearnerConfig& learner) {
  if (holdout.rows == 0) throw DataError("holdout set is empty");
  if (train.rows == 0) throw DataError("training set is empty");
  if (train_labels.size() != train.rows || holdout_labels.size() != holdout.rows) {
    throw DataError("label count does not match row count");
  }
  if (train.headers != holdout.headers) throw DataError("train and holdout columns differ");

  std::vector<std::string> keep;
  for (std::size_t c = 0; c < train.columns.size(); ++c) {
    if (!constant(train.columns[c])) keep.push_back(train.headers[c]);
  }
  std::vector<double> predictions;
  if (keep.empty()) {
    const double mean = std::accumulate(train_labels.begin(), train_labels.end(), 0.0) /
                        static_cast<double>(train_labels.size());
    predictions.assign(holdout.rows, mean);
  } else {
    LearnerConfig cfg = learner;
    cfg.seed = seed;
    const Forest forest =
        fit_forest(to_matrix(train.select_columns(keep)), train_labels, Task::Regression, cfg);
    predictions = predict(forest, to_matrix(holdout.select_columns(keep)));
  }
  return rmse(predictions, holdout_labels);
}

double permuted_error_delta(const Model& model, const EncodedFrame& frame,
                            std::span<const double> labels, std::size_t column,
                            std::span<const std::size_t> permutation) {
  if (column >= frame.columns.size()) throw DataError("column index out of range");
  if (permutation.size() != frame.rows) throw DataError("permutation length mismatch");
  Matrix X = to_matrix(frame);
  const double baseline = rmse(model.predict(X), labels);
  for (std::size_t r = 0; r < frame.rows; ++r) X(r, column) = frame.columns[column][permutation[r]];
  return rmse(model.predict(X), labels) - baseline;
}

Importance permutation_importance(
    const Model& model, const EncodedFrame& frame, std::span<const double> labels,
    std::uint64_t seed, const std::map<std::string, std::vector<std::string>>* column_map) {
  Importance out;
  const Matrix X = to_matrix(frame);
  const double baseline = rmse(model.predict(X), labels);
  for (std::size_t c = 0; c < frame.columns.size(); ++c) {
    Rng rng(derive_seed(seed, {c}));
    const auto perm = rng.permutation(frame.rows);
    Matrix P = X;
    for (std::size_t r = 0; r < frame.rows; ++r) P(r, c) = frame.columns[c][perm[r]];
    out.by_column[frame.headers[c]] = rmse(model.predict(P), labels) - baseline;
  }
  if (column_map) {
    for (const auto& [input, returned] : *column_map) {
      double sum = 0.0;
      for (const auto& r : returned) {
        if (auto it = out.by_column.find(r); it != out.by_column.end()) sum += it->second;
      }
      out.by_input[input] = sum;
    }
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (label.empty()) throw ConfigError("bench needs a label column");
  if (target.empty()) throw ConfigError("bench needs a target column");
  if (label == target) throw ConfigError("label and target must differ");
  if (repeats == 0) throw ConfigError("repeats must be at least 1");
  if (mechanisms.empty() || ratios.empty() || strategies.empty()) {
    throw ConfigError("mechanisms, ratios and strategies must be nonempty");
  }
  for (const auto& m : mechanisms) {
    if (m != "mar" && m != "mnar") throw ConfigError("unknown mechanism '" + m + "'");
  }
  for (double r : ratios) check_ratio(r);
  for (const auto& s : strategies) strategy_assignment(s);
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("holdout fraction must lie in (0, 1)");
  }
  if (!(segment_quantile >= 0.0 && segment_quantile <= 1.0)) {
    throw ConfigError("segment quantile must lie in [0, 1]");
  }
  infill_learner.validate();
  downstream_learner.validate();
}

const AggregateRow& ExperimentResult::aggregate(const std::string& mechanism, double ratio,
                                                const std::string& strategy) const {
  for (const auto& a : aggregates) {
    if (a.mechanism == mechanism && a.ratio == ratio && a.strategy == strategy) return a;
  }
  throw DataError("no aggregate for " + mechanism + "/" + shortest(ratio) + "/" + strategy);
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t mechanism, std::size_t ratio,
                         std::size_t repetition) {
  return derive_seed(seed, {mechanism, ratio, repetition});
}

TrialOutcome run_trial(const Table& train, const Table& holdout, const ExperimentConfig& config,
                       const std::string& mechanism, double ratio, const std::string& strategy,
                       std::uint64_t seed) {
  const Column& target = train.column(config.target);
  InjectionSpec spec;
  spec.target = config.target;
  spec.ratio = ratio;
  spec.segment_quantile = config.segment_quantile;
  spec.target_category = config.target_category;
  if (mechanism == "mar") {
    spec.mechanism = Mechanism::MAR;
  } else if (mechanism == "mnar") {
    spec.mechanism = target.kind() == ColumnKind::Numeric ? Mechanism::MNARNumericRightTail
                                                          : Mechanism::MNARCategoricActivation;
  } else {
    throw ConfigError("unknown mechanism '" + mechanism + "'");
  }

  spec.seed = derive_seed(seed, {1});
  const Injection train_inj = inject(target, spec);
  spec.seed = derive_seed(seed, {2});
  const Injection holdout_inj = inject(holdout.column(config.target), spec);

  Table train_t = train;
  train_t.replace_column(config.target, train_inj.column);
  Table holdout_t = holdout;
  holdout_t.replace_column(config.target, holdout_inj.column);

  PrepareConfig pc;
  pc.labels_column = config.label;
  pc.shuffle_train = false;
  pc.ml_infill = false;
  pc.narw_marker = strategy == "ml+narw";
  if (auto name = strategy_assignment(strategy)) pc.assigninfill[*name] = {config.target};
  pc.ml_cmnd.learner = config.infill_learner;
  if (!config.noise) pc.ml_cmnd.noise = NoiseParams::disabled();
  pc.seed = derive_seed(seed, {3});

  const PreparedTrain prepared = prepare_train(train_t, pc);
  const PreparedTest tested = prepare_test(prepared.artifact, holdout_t);

  std::vector<std::string> keep;
  const std::string own_narw = config.target + "_NArw";
  for (const auto& h : prepared.train.headers) {
    const bool narw = h.size() > 5 && h.compare(h.size() - 5, 5, "_NArw") == 0;
    if (!narw || h == own_narw) keep.push_back(h);
  }

  TrialOutcome out;
  out.rmse = downstream_eval(prepared.train.select_columns(keep), label_values(train, config.label),
                             tested.data.select_columns(keep),
                             label_values(holdout, config.label), derive_seed(seed, {4}),
                             config.downstream_learner);

  out.imputation_rmse = kNaN;
  const EncodingSpec& es = prepared.artifact.spec(config.target);
  if (es.scheme == Scheme::Zscore && train_inj.truth.count > 0) {
    const auto& z = prepared.train.columns[prepared.train.index_of(es.returned_headers.front())];
    std::vector<double> imputed, truth;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (!train_inj.truth.bits[i]) continue;
      imputed.push_back(es.numeric.std == 0.0 ? es.numeric.mean
                                              : z[i] * es.numeric.std + es.numeric.mean);
      truth.push_back(*train_inj.original.numeric_cells()[i]);
    }
    out.imputation_rmse = rmse(imputed, truth);
  }
  return out;
}

Table select_top_features(const Table& dataset, const std::string& label,
                          const std::string& target, std::size_t top_k, std::uint64_t seed,
                          const LearnerConfig& learner) {
  PrepareConfig pc;
  pc.labels_column = label;
  pc.shuffle_train = false;
  pc.ml_infill = false;
  pc.narw_marker = false;
  pc.seed = seed;
  const PreparedTrain prepared = prepare_train(dataset, pc);
  const std::vector<double> y = label_values(dataset, label);
  LearnerConfig cfg = learner;
  cfg.seed = derive_seed(seed, {1});
  const ForestModel model(fit_forest(to_matrix(prepared.train), y, Task::Regression, cfg));
  const Importance imp = permutation_importance(model, prepared.train, y, derive_seed(seed, {2}),
                                                &prepared.artifact.column_map);

  std::vector<std::pair<std::string, double>> ranked(imp.by_input.begin(), imp.by_input.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::set<std::string> chosen = {label, target};
  for (std::size_t i = 0; i < ranked.size() && i < top_k; ++i) chosen.insert(ranked[i].first);

  std::vector<std::string> keep;
  for (const auto& h : dataset.headers()) {
    if (chosen.contains(h)) keep.push_back(h);
  }
  return dataset.select_columns(keep);
}

ExperimentResult run_experiment(const Table& dataset, const ExperimentConfig& config) {
  config.validate();
  if (!dataset.has(config.label)) throw DataError("label '" + config.label + "' is not in the data");
  if (!dataset.has(config.target)) {
    throw DataError("target '" + config.target + "' is not in the data");
  }
  label_values(dataset, config.label);

  Table data = dataset;
  if (config.top_features) {
    data = select_top_features(dataset, config.label, config.target, *config.top_features,
                               derive_seed(config.seed, {0x7f}), config.downstream_learner);
  }
  auto [train, holdout] = split_validation(data, config.holdout_fraction, true,
                                           derive_seed(config.seed, {kHoldoutStream}));
  if (holdout.row_count() == 0 || train.row_count() == 0) {
    throw DataError("dataset too small for a holdout split");
  }

  struct Task {
    std::size_t mechanism, ratio, strategy, repetition;
  };
  std::vector<Task> tasks;
  for (std::size_t m = 0; m < config.mechanisms.size(); ++m) {
    for (std::size_t r = 0; r < config.ratios.size(); ++r) {
      for (std::size_t s = 0; s < config.strategies.size(); ++s) {
        for (std::size_t k = 0; k < config.repeats; ++k) tasks.push_back({m, r, s, k});
      }
    }
  }

  std::vector<std::optional<TrialOutcome>> outcomes(tasks.size());
  std::vector<std::string> errors(tasks.size());
  const auto n_tasks = static_cast<std::ptrdiff_t>(tasks.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n_tasks; ++i) {
    const Task& t = tasks[static_cast<std::size_t>(i)];
    try {
      outcomes[static_cast<std::size_t>(i)] =
          run_trial(train, holdout, config, config.mechanisms[t.mechanism],
                    config.ratios[t.ratio], config.strategies[t.strategy],
                    trial_seed(config.seed, t.mechanism, t.ratio, t.repetition));
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }

  ExperimentResult result;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<double>> cells;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Task& t = tasks[i];
    const std::string& mech = config.mechanisms[t.mechanism];
    const std::string& strat = config.strategies[t.strategy];
    const double ratio = config.ratios[t.ratio];
    auto& cell = cells[{t.mechanism, t.ratio, t.strategy}];
    if (!outcomes[i]) {
      result.failures.push_back(mech + "/" + shortest(ratio) + "/" + strat + "/" +
                                std::to_string(t.repetition) + ": " + errors[i]);
      continue;
    }
    result.rows.push_back({mech, ratio, strat, t.repetition, outcomes[i]->rmse,
                           outcomes[i]->imputation_rmse});
    cell.push_back(outcomes[i]->rmse);
  }
  for (const auto& [key, values] : cells) {
    const auto [m, r, s] = key;
    AggregateRow a{config.mechanisms[m], config.ratios[r], config.strategies[s], values.size(),
                   kNaN, kNaN};
    if (!values.empty()) {
      a.mean = std::accumulate(values.begin(), values.end(), 0.0) /
               static_cast<double>(values.size());
      a.std = stddev(values, a.mean);
    }
    result.aggregates.push_back(a);
  }
  return result;
}

void write_results_csv(std::ostream& out, const ExperimentResult& result) {
  out << "mechanism,ratio,strategy,repetition,rmse,imputation_rmse,agg,std\n";
  for (const auto& r : result.rows) {
    out << csv_escape(r.mechanism) << ',' << shortest(r.ratio) << ',' << csv_escape(r.strategy)
        << ',' << r.repetition << ',' << shortest(r.rmse) << ',' << shortest(r.imputation_rmse)
        << ",0,\n";
  }
  for (const auto& a : result.aggregates) {
    out << csv_escape(a.mechanism) << ',' << shortest(a.ratio) << ',' << csv_escape(a.strategy)
        << ',' << a.repetitions << ',' << shortest(a.mean) << ",,1," << shortest(a.std) << '\n';
  }
}

Table synthetic_numeric(const SyntheticOptions& options, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = options.rows;
  std::vector<std::vector<std::optional<double>>> x(5, std::vector<std::optional<double>>(n));
  std::vector<std::optional<double>> t(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v[5];
    for (std::size_t j = 0; j < 5; ++j) {
      v[j] = rng.normal(0.0, 1.0);
      x[j][i] = v[j];
    }
    const double tv = 0.8 * v[0] + 0.6 * v[1] - 0.5 * v[2] + 0.4 * v[3] +
                      rng.normal(0.0, options.target_noise);
    t[i] = tv;
    y[i] = 2.0 * tv + 0.5 * v[4] + rng.normal(0.0, options.label_noise);
  }
  Table table(n);
  for (std::size_t j = 0; j < 5; ++j) {
    table.add_column("x" + std::to_string(j + 1), Column::numeric(std::move(x[j])));
  }
  table.add_column("t", Column::numeric(std::move(t)));
  table.add_column("y", Column::numeric(std::move(y)));
  return table;
}

Table synthetic_mixed(const SyntheticOptions& options, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = options.rows;
  static const char* const kCats[] = {"a", "b", "c", "d"};
  std::vector<std::optional<double>> x1(n), x2(n), x3(n), y(n);
  std::vector<std::optional<std::string>> c1(n), c2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.normal(0.0, 1.0), b = rng.normal(0.0, 1.0), c = rng.normal(0.0, 1.0);
    x1[i] = a;
    x2[i] = b;
    x3[i] = c;
    std::size_t cat = a < -0.674 ? 0 : a < 0.0 ? 1 : a < 0.674 ? 2 : 3;
    if (rng.bernoulli(std::min(1.0, options.target_noise * 0.2))) cat = rng.uniform_index(4);
    c1[i] = kCats[cat];
    const bool yes = rng.uniform01() < 1.0 / (1.0 + std::exp(-2.0 * b));
    c2[i] = yes ? "yes" : "no";
    y[i] = 1.5 * static_cast<double>(cat) + b + (yes ? 1.0 : 0.0) + 0.5 * c +
           rng.normal(0.0, options.label_noise);
  }
  Table table(n);
  table.add_column("x1", Column::numeric(std::move(x1)));
  table.add_column("x2", Column::numeric(std::move(x2)));
  table.add_column("x3", Column::numeric(std::move(x3)));
  table.add_column("c1", Column::categoric(std::move(c1)));
  table.add_column("c2", Column::categoric(std::move(c2)));
  table.add_column("y", Column::numeric(std::move(y)));
  return table;
}

}  // namespace tabinfill::bench
