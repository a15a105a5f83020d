#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tabinfill/artifact.hpp"
#include "tabinfill/encode.hpp"
#include "tabinfill/forest.hpp"
#include "tabinfill/learner.hpp"
#include "tabinfill/table.hpp"

namespace tabinfill::bench {

enum class Mechanism { MAR, MNARNumericRightTail, MNARCategoricActivation };

const char* to_string(Mechanism m) noexcept;

struct InjectionSpec {
  std::string target;
  Mechanism mechanism = Mechanism::MAR;
  double ratio = 0.0;
  double segment_quantile = 0.75;
  std::optional<std::string> target_category;
  std::uint64_t seed = 0;
};

struct Injection {
  Column column;       // with injected missing cells
  MissingMask truth;   // cells injected by this call only
  Column original;     // the column before injection, holding the truth values
};

// Exactly round(ratio * eligible) cells, where eligible are the cells not
// already missing.
Injection inject_mar(const Column& column, double ratio, std::uint64_t seed);

// Injects within the segment of values >= the lower empirical quantile.
Injection inject_mnar_numeric(const Column& column, double segment_quantile, double ratio,
                              std::uint64_t seed);

// Injects within cells holding target_category (most frequent when unset).
Injection inject_mnar_categoric(const Column& column,
                                const std::optional<std::string>& target_category, double ratio,
                                std::uint64_t seed);

Injection inject(const Column& column, const InjectionSpec& spec);

// sorted[floor((n - 1) * q)]
double lower_quantile(std::vector<double> values, double q);

double rmse(std::span<const double> predictions, std::span<const double> truth);

// Fits a forest regressor on train and scores the holdout. Columns constant
// over the training rows are dropped first; no split can use them.
double downstream_eval(const EncodedFrame& train, std::span<const double> train_labels,
                       const EncodedFrame& holdout, std::span<const double> holdout_labels,
                       std::uint64_t seed, const LearnerConfig& learner = {});

// RMSE increase when column `column` is reordered by `permutation`.
double permuted_error_delta(const Model& model, const EncodedFrame& frame,
                            std::span<const double> labels, std::size_t column,
                            std::span<const std::size_t> permutation);

struct Importance {
  std::map<std::string, double> by_column;
  std::map<std::string, double> by_input;  // filled when a column map is given
};

Importance permutation_importance(
    const Model& model, const EncodedFrame& frame, std::span<const double> labels,
    std::uint64_t seed,
    const std::map<std::string, std::vector<std::string>>* column_map = nullptr);

struct ExperimentConfig {
  std::string label;
  std::string target;
  std::vector<std::string> mechanisms = {"mar", "mnar"};
  std::vector<double> ratios = {0.0, 0.1, 0.33, 0.67, 1.0};
  std::vector<std::string> strategies = {"default", "mode", "adjacent", "ml"};
  std::size_t repeats = 30;
  std::uint64_t seed = 0;
  double holdout_fraction = 0.25;
  double segment_quantile = 0.75;
  std::optional<std::string> target_category;
  std::optional<std::size_t> top_features;
  LearnerConfig infill_learner;
  LearnerConfig downstream_learner;
  bool noise = true;

  void validate() const;
};

struct ExperimentRow {
  std::string mechanism;
  double ratio = 0.0;
  std::string strategy;
  std::size_t repetition = 0;
  double rmse = 0.0;
  double imputation_rmse = 0.0;  // NaN for categoric targets or nothing injected
};

struct AggregateRow {
  std::string mechanism;
  double ratio = 0.0;
  std::string strategy;
  std::size_t repetitions = 0;
  double mean = 0.0;
  double std = 0.0;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  std::vector<AggregateRow> aggregates;
  std::vector<std::string> failures;

  const AggregateRow& aggregate(const std::string& mechanism, double ratio,
                                const std::string& strategy) const;
};

// One repetition of one scenario; exposed for targeted experiments.
struct TrialOutcome {
  double rmse = 0.0;
  double imputation_rmse = 0.0;
};

// Shared by every strategy of a repetition so zero-ratio cells see identical data.
std::uint64_t trial_seed(std::uint64_t seed, std::size_t mechanism, std::size_t ratio,
                         std::size_t repetition);

TrialOutcome run_trial(const Table& train, const Table& holdout, const ExperimentConfig& config,
                       const std::string& mechanism, double ratio, const std::string& strategy,
                       std::uint64_t seed);

ExperimentResult run_experiment(const Table& dataset, const ExperimentConfig& config);

void write_results_csv(std::ostream& out, const ExperimentResult& result);

// Keeps the label, the target and the top_k inputs ranked by permutation importance.
Table select_top_features(const Table& dataset, const std::string& label,
                          const std::string& target, std::size_t top_k, std::uint64_t seed,
                          const LearnerConfig& learner);

struct SyntheticOptions {
  std::size_t rows = 1000;
  double target_noise = 0.5;  // std of the target's own noise
  double label_noise = 0.3;
};

// Columns x1..x5, t, y. t = 0.8 x1 + 0.6 x2 - 0.5 x3 + 0.4 x4 + noise;
// y = 2 t + 0.5 x5 + noise. All x are standard normal.
Table synthetic_numeric(const SyntheticOptions& options, std::uint64_t seed);

// Columns x1..x3, c1 (4 categories driven by x1), c2 (2 categories), y.
Table synthetic_mixed(const SyntheticOptions& options, std::uint64_t seed);

}  // namespace tabinfill::bench
