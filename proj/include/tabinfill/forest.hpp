#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabinfill/matrix.hpp"

namespace tabinfill {

enum class Task { Regression, Classification };

const char* to_string(Task t) noexcept;

enum class FeatureSubsample { Sqrt, Third, All };

const char* to_string(FeatureSubsample f) noexcept;
FeatureSubsample feature_subsample_from_string(const std::string& s);

// Lists of candidate values; an empty list leaves the base config's value.
struct ParamGrid {
  std::vector<int> n_estimators;
  std::vector<int> max_depth;  // 0 means unlimited
  std::vector<int> min_samples_split;
  std::vector<FeatureSubsample> feature_subsample;
  std::vector<bool> bootstrap;

  bool empty() const;
  // Product of the nonempty list sizes.
  std::size_t size() const;

  bool operator==(const ParamGrid&) const = default;
};

struct LearnerConfig {
  int n_estimators = 100;
  std::optional<int> max_depth;  // unlimited when unset
  int min_samples_split = 2;
  // Unset means sqrt for classification and a third for regression.
  std::optional<FeatureSubsample> feature_subsample;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  ParamGrid grid;

  // Throws ConfigError when a bound is violated.
  void validate() const;

  bool operator==(const LearnerConfig&) const = default;
};

// Features drawn per split for dimension d.
std::size_t features_per_split(FeatureSubsample mode, std::size_t d);

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when x <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;  // regression mean, or majority class of a leaf
  std::uint32_t count_offset = 0;  // classification leaves: class counts offset

  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<std::uint32_t> class_counts;

  double predict(std::span<const double> x) const;

  bool operator==(const Tree&) const = default;
};

struct Forest {
  Task task = Task::Regression;
  std::size_t feature_count = 0;
  std::size_t class_count = 0;
  std::vector<Tree> trees;

  bool operator==(const Forest&) const = default;
};

// Grows one tree; exposed for the memorization property and for kernels.
Tree grow_tree(const Matrix& X, std::span<const double> y, Task task, std::size_t class_count,
               const LearnerConfig& config, std::uint64_t tree_seed);

// Trees grown in parallel with OpenMP; each tree writes its own slot so the
// result is independent of scheduling.
Forest fit_forest(const Matrix& X, std::span<const double> y, Task task,
                  const LearnerConfig& config);
// Single-threaded reference for fit_forest.
Forest fit_forest_serial(const Matrix& X, std::span<const double> y, Task task,
                         const LearnerConfig& config);

std::vector<double> predict(const Forest& forest, const Matrix& X);
std::vector<double> predict_serial(const Forest& forest, const Matrix& X);

struct GridSearchResult {
  LearnerConfig best;
  Forest forest;
  std::vector<LearnerConfig> candidates;
  std::vector<double> scores;  // accuracy or negative MSE, in candidate order
};

// Cartesian product of the grid over the base config, in enumeration order
// (n_estimators outermost). Throws ConfigError on any invalid candidate.
std::vector<LearnerConfig> expand_grid(const LearnerConfig& base);

GridSearchResult grid_search(const Matrix& X, std::span<const double> y, Task task,
                             const LearnerConfig& config);

// Byte encoding of a forest for embedding in artifacts.
std::string encode_forest(const Forest& forest);
Forest decode_forest(const std::string& bytes);

}  // namespace tabinfill
