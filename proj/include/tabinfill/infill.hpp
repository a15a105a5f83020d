#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tabinfill/encode.hpp"
#include "tabinfill/forest.hpp"
#include "tabinfill/learner.hpp"
#include "tabinfill/matrix.hpp"
#include "tabinfill/rng.hpp"
#include "tabinfill/table.hpp"

namespace tabinfill {

using MaskMap = std::map<std::string, MissingMask>;

// Fraction of a's marked rows that b also marks; 0 when a marks nothing.
double leakage_ratio(const MissingMask& a, const MissingMask& b);

struct LeakageConfig {
  std::vector<std::vector<std::string>> leakage_sets;
  std::map<std::string, std::set<std::string>> leakage_dict;
  std::vector<std::string> full_exclude;
  double tolerance = 0.85;

  bool operator==(const LeakageConfig&) const = default;
};

struct ExclusionPlan {
  std::set<std::pair<std::string, std::string>> pairwise_excluded;  // (smaller, larger)
  std::map<std::string, std::set<std::string>> unidirectional;      // target -> excluded
  std::set<std::string> full_exclude;
  double leakage_tolerance = 0.85;

  // True when `other` must not appear in the basis of `target`.
  bool excludes(const std::string& target, const std::string& other) const;

  bool operator==(const ExclusionPlan&) const = default;
};

// Masks must cover every input header; user headers must name one of them.
ExclusionPlan plan_exclusions(const MaskMap& masks, const LeakageConfig& config);

// Highest mask count first, ties by header name.
std::vector<std::string> order_targets(const MaskMap& masks);

// Where one input feature lives in the working frame.
struct FeatureLayout {
  std::string header;
  Task task = Task::Regression;
  std::vector<std::size_t> columns;
  // Parallel to columns: which columns receive model imputations.
  std::vector<bool> ml_columns;
  std::optional<std::size_t> narw_column;
  // Training range in encoded space, for noise scaling of numeric features.
  double noise_min = 0.0;
  double noise_max = 0.0;

  bool ml_target() const;
};

struct InfillLayout {
  std::vector<FeatureLayout> features;

  const FeatureLayout& feature(const std::string& header) const;
  std::size_t position(const std::string& header) const;
};

struct Partitions {
  std::vector<std::string> basis;
  std::vector<std::size_t> basis_columns;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> infer_rows;
  Matrix train_X;
  std::vector<std::vector<double>> train_y;  // activation rows; width 1 for numeric
  Matrix infer_X;
};

Matrix gather(const EncodedFrame& frame, std::span<const std::size_t> columns,
              std::span<const std::size_t> rows);

Partitions partition(const std::string& target, const EncodedFrame& frame,
                     const MaskMap& masks, const InfillLayout& layout, const ExclusionPlan& plan);

struct ImputationModel {
  std::string header;
  Task task = Task::Regression;
  std::vector<std::string> basis;
  std::shared_ptr<const Model> model;  // null when the target fell back
  LabelMap labels;                     // classification targets
  std::string fallback_reason;
  double noise_min = 0.0;
  double noise_max = 0.0;

  bool fallback() const { return model == nullptr; }
};

using ModelSet = std::map<std::string, ImputationModel>;

// Trains one model per ML target. Failures are recorded on the model and
// never abort the set.
ModelSet train_models(const EncodedFrame& frame, const InfillLayout& layout, const MaskMap& masks,
                      const ExclusionPlan& plan, const Learner& learner,
                      const LearnerConfig& config, std::uint64_t seed);

enum class NoiseDistribution { Normal, Laplace };

struct NoiseParams {
  bool numeric_enabled = true;
  bool categoric_enabled = true;
  double mu = 0.0;
  double sigma = 0.03;
  double numeric_flip_prob = 0.06;
  double categoric_flip_prob = 0.03;
  NoiseDistribution distribution = NoiseDistribution::Normal;

  void validate() const;
  static NoiseParams disabled();

  bool operator==(const NoiseParams&) const = default;
};

struct NoisyValues {
  std::vector<double> values;
  std::size_t injected = 0;
};

// Noise added in min/max scaled space, clamped to [0, 1], then scaled back.
NoisyValues inject_noise_numeric(std::span<const double> values, double train_min,
                                 double train_max, const NoiseParams& params, Rng& rng);

struct NoisyRows {
  std::vector<std::vector<double>> rows;
  std::size_t injected = 0;
};

NoisyRows inject_noise_categoric(const std::vector<std::vector<double>>& rows,
                                 const std::vector<std::vector<double>>& training_rows,
                                 double flip_prob, Rng& rng);

struct FeatureImputations {
  Task task = Task::Regression;
  std::vector<std::size_t> rows;
  std::vector<std::vector<double>> values;  // width 1 for numeric features
};

struct ImputationRecord {
  std::size_t iteration = 0;
  std::map<std::string, FeatureImputations> features;

  bool empty() const { return features.empty(); }
};

// Predicts each target's masked rows in `order` and writes them into the
// frame; later targets see earlier targets' fresh imputations.
ImputationRecord impute_iteration(EncodedFrame& frame, const InfillLayout& layout,
                                  const ModelSet& models, const MaskMap& masks,
                                  std::span<const std::string> order, const NoiseParams& noise,
                                  std::uint64_t seed, std::size_t iteration);

struct HaltTolerances {
  double numeric_tol = 0.01;
  double categoric_tol = 0.05;
  int max_iterations = 1;
  bool halt_enabled = false;

  void validate() const;

  bool operator==(const HaltTolerances&) const = default;
};

struct HaltCheck {
  bool halt = false;
  double numeric_metric = 0.0;
  double categoric_metric = 0.0;
};

HaltCheck check_halt(const ImputationRecord& prev, const ImputationRecord& curr,
                     const HaltTolerances& tolerances);

struct InfillRun {
  std::vector<ModelSet> iterations;  // models trained at the start of each iteration
  std::vector<ImputationRecord> records;
  std::vector<HaltCheck> halt_checks;
  std::vector<std::string> order;
};

// Iterated model training and imputation over a frame whose masked cells
// already hold precursor infill.
InfillRun run_ml_infill(EncodedFrame& frame, const InfillLayout& layout, const MaskMap& masks,
                        const ExclusionPlan& plan, const Learner& learner,
                        const LearnerConfig& config, const NoiseParams& noise,
                        const HaltTolerances& tolerances, std::uint64_t seed);

// Replays stored iterations on new data; no model is refitted. Returns the
// number of prediction calls made.
std::size_t replay_ml_infill(EncodedFrame& frame, const InfillLayout& layout,
                             std::span<const ModelSet> iterations, const MaskMap& masks,
                             std::span<const std::string> order, const NoiseParams& noise,
                             std::uint64_t seed);

}  // namespace tabinfill
