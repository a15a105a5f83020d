#include "tabinfill/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include <omp.h>

#include "tabinfill/error.hpp"
#include "tabinfill/rng.hpp"

namespace tabinfill {

const char* to_string(Task t) noexcept {
  return t == Task::Regression ? "regression" : "classification";
}

const char* to_string(FeatureSubsample f) noexcept {
  switch (f) {
    case FeatureSubsample::Sqrt: return "sqrt";
    case FeatureSubsample::Third: return "third";
    case FeatureSubsample::All: return "all";
  }
  return "?";
}

FeatureSubsample feature_subsample_from_string(const std::string& s) {
  if (s == "sqrt") return FeatureSubsample::Sqrt;
  if (s == "third") return FeatureSubsample::Third;
  if (s == "all") return FeatureSubsample::All;
  throw ConfigError("unknown feature_subsample '" + s + "'");
}

bool ParamGrid::empty() const {
  return n_estimators.empty() && max_depth.empty() && min_samples_split.empty() &&
         feature_subsample.empty() && bootstrap.empty();
}

std::size_t ParamGrid::size() const {
  std::size_t n = 1;
  for (std::size_t s : {n_estimators.size(), max_depth.size(), min_samples_split.size(),
                        feature_subsample.size(), bootstrap.size()}) {
    if (s) n *= s;
  }
  return n;
}

void LearnerConfig::validate() const {
  if (n_estimators < 1) throw ConfigError("n_estimators must be positive");
  if (max_depth && *max_depth < 1) throw ConfigError("max_depth must be positive");
  if (min_samples_split < 2) throw ConfigError("min_samples_split must be at least 2");
  for (int v : grid.n_estimators) {
    if (v < 1) throw ConfigError("grid n_estimators must be positive");
  }
  for (int v : grid.max_depth) {
    if (v < 0) throw ConfigError("grid max_depth must be nonnegative (0 = unlimited)");
  }
  for (int v : grid.min_samples_split) {
    if (v < 2) throw ConfigError("grid min_samples_split must be at least 2");
  }
}

std::size_t features_per_split(FeatureSubsample mode, std::size_t d) {
  switch (mode) {
    case FeatureSubsample::Sqrt:
      return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
    case FeatureSubsample::Third: return std::max<std::size_t>(1, d / 3);
    case FeatureSubsample::All: return std::max<std::size_t>(1, d);
  }
  return 1;
}

double Tree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                      : n.right);
  }
  return nodes[i].value;
}

namespace {

struct Frame {
  std::int32_t node;
  std::size_t begin;
  std::size_t end;
  int depth;
};

struct Split {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double score = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, std::span<const double> y, Task task, std::size_t class_count,
              const LearnerConfig& config, std::uint64_t seed)
      : X_(X), y_(y), task_(task), classes_(class_count), config_(config), rng_(seed) {
    const FeatureSubsample mode = config.feature_subsample.value_or(
        task == Task::Classification ? FeatureSubsample::Sqrt : FeatureSubsample::Third);
    per_split_ = features_per_split(mode, X.cols());
  }

  Tree build() {
    const std::size_t n = X_.rows();
    idx_.resize(n);
    if (config_.bootstrap) {
      for (auto& i : idx_) i = rng_.uniform_index(n);
    } else {
      std::iota(idx_.begin(), idx_.end(), std::size_t{0});
    }
    tree_.nodes.emplace_back();
    std::vector<Frame> stack{{0, 0, n, 0}};
    while (!stack.empty()) {
      Frame f = stack.back();
      stack.pop_back();
      grow(f, stack);
    }
    return std::move(tree_);
  }

 private:
  void make_leaf(std::int32_t node, std::size_t begin, std::size_t end) {
    TreeNode& leaf = tree_.nodes[static_cast<std::size_t>(node)];
    leaf.feature = -1;
    if (task_ == Task::Regression) {
      double sum = 0.0;
      double lo = y_[idx_[begin]];
      double hi = lo;
      for (std::size_t i = begin; i < end; ++i) {
        const double v = y_[idx_[i]];
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      leaf.value = std::clamp(sum / static_cast<double>(end - begin), lo, hi);
    } else {
      leaf.count_offset = static_cast<std::uint32_t>(tree_.class_counts.size());
      tree_.class_counts.resize(tree_.class_counts.size() + classes_, 0);
      auto* counts = tree_.class_counts.data() + leaf.count_offset;
      for (std::size_t i = begin; i < end; ++i) ++counts[static_cast<std::size_t>(y_[idx_[i]])];
      std::size_t best = 0;
      for (std::size_t c = 1; c < classes_; ++c) {
        if (counts[c] > counts[best]) best = c;
      }
      leaf.value = static_cast<double>(best);
    }
  }

  bool pure(std::size_t begin, std::size_t end) const {
    const double first = y_[idx_[begin]];
    for (std::size_t i = begin + 1; i < end; ++i) {
      if (y_[idx_[i]] != first) return false;
    }
    return true;
  }

  void evaluate_feature(std::size_t f, std::size_t begin, std::size_t end, Split& best) {
    const std::size_t n = end - begin;
    pairs_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = idx_[begin + i];
      pairs_[i] = {X_(r, f), y_[r]};
    }
    std::sort(pairs_.begin(), pairs_.end());
    if (pairs_.front().first == pairs_.back().first) return;

    if (task_ == Task::Regression) {
      double total = 0.0;
      for (const auto& p : pairs_) total += p.second;
      double left = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left += pairs_[i].second;
        if (pairs_[i].first == pairs_[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = static_cast<double>(n - i - 1);
        const double right = total - left;
        const double score = left * left / nl + right * right / nr;
        consider(best, f, i, score);
      }
    } else {
      left_counts_.assign(classes_, 0.0);
      right_counts_.assign(classes_, 0.0);
      for (const auto& p : pairs_) right_counts_[static_cast<std::size_t>(p.second)] += 1.0;
      double left_sq = 0.0;
      double right_sq = 0.0;
      for (double c : right_counts_) right_sq += c * c;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto c = static_cast<std::size_t>(pairs_[i].second);
        // Incremental sums of squared class counts on each side.
        left_sq += 2.0 * left_counts_[c] + 1.0;
        right_sq -= 2.0 * right_counts_[c] - 1.0;
        left_counts_[c] += 1.0;
        right_counts_[c] -= 1.0;
        if (pairs_[i].first == pairs_[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = static_cast<double>(n - i - 1);
        consider(best, f, i, left_sq / nl + right_sq / nr);
      }
    }
  }

  void consider(Split& best, std::size_t f, std::size_t i, double score) {
    if (best.found && !(score > best.score)) return;
    const double a = pairs_[i].first;
    const double b = pairs_[i + 1].first;
    double t = a + (b - a) / 2.0;
    if (!(t < b)) t = a;
    best = {true, f, t, score};
  }

  void grow(const Frame& f, std::vector<Frame>& stack) {
    const std::size_t n = f.end - f.begin;
    const bool depth_reached = config_.max_depth && f.depth >= *config_.max_depth;
    if (n < static_cast<std::size_t>(config_.min_samples_split) || depth_reached ||
        pure(f.begin, f.end)) {
      make_leaf(f.node, f.begin, f.end);
      return;
    }

    // Draw features in random order; past the per-split budget keep drawing
    // only until some feature admits a split.
    auto order = rng_.permutation(X_.cols());
    Split best;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k >= per_split_ && best.found) break;
      evaluate_feature(order[k], f.begin, f.end, best);
    }
    if (!best.found) {
      make_leaf(f.node, f.begin, f.end);
      return;
    }

    auto first = idx_.begin() + static_cast<std::ptrdiff_t>(f.begin);
    auto last = idx_.begin() + static_cast<std::ptrdiff_t>(f.end);
    auto mid = std::stable_partition(
        first, last, [&](std::size_t r) { return X_(r, best.feature) <= best.threshold; });
    const std::size_t split_at = static_cast<std::size_t>(mid - idx_.begin());

    const auto left = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes.emplace_back();
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(f.node)];
    node.feature = static_cast<std::int32_t>(best.feature);
    node.threshold = best.threshold;
    node.left = left;
    node.right = left + 1;
    stack.push_back({left + 1, split_at, f.end, f.depth + 1});
    stack.push_back({left, f.begin, split_at, f.depth + 1});
  }

  const Matrix& X_;
  std::span<const double> y_;
  Task task_;
  std::size_t classes_;
  const LearnerConfig& config_;
  Rng rng_;
  std::size_t per_split_ = 1;
  Tree tree_;
  std::vector<std::size_t> idx_;
  std::vector<std::pair<double, double>> pairs_;
  std::vector<double> left_counts_;
  std::vector<double> right_counts_;
};

std::size_t check_inputs(const Matrix& X, std::span<const double> y, Task task,
                         const LearnerConfig& config) {
  config.validate();
  if (X.rows() == 0) throw DataError("cannot fit a forest on an empty training set");
  if (X.rows() != y.size()) throw DataError("feature rows and target length differ");
  for (std::size_t r = 0; r < X.rows(); ++r) {
    for (double v : X.row(r)) {
      if (!std::isfinite(v)) throw DataError("training features must be finite");
    }
  }
  std::size_t classes = 0;
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("training targets must be finite");
    if (task == Task::Classification) {
      if (v < 0 || v != std::floor(v)) throw DataError("class labels must be nonnegative integers");
      classes = std::max(classes, static_cast<std::size_t>(v) + 1);
    }
  }
  return classes;
}

Forest empty_forest(const Matrix& X, Task task, std::size_t classes, const LearnerConfig& config) {
  Forest forest;
  forest.task = task;
  forest.feature_count = X.cols();
  forest.class_count = classes;
  forest.trees.resize(static_cast<std::size_t>(config.n_estimators));
  return forest;
}

double aggregate(const Forest& forest, std::span<const double> x, std::vector<std::size_t>& votes) {
  if (forest.task == Task::Regression) {
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& t : forest.trees) {
      const double v = t.predict(x);
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return std::clamp(sum / static_cast<double>(forest.trees.size()), lo, hi);
  }
  votes.assign(forest.class_count, 0);
  for (const auto& t : forest.trees) ++votes[static_cast<std::size_t>(t.predict(x))];
  std::size_t best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c) {
    if (votes[c] > votes[best]) best = c;
  }
  return static_cast<double>(best);
}

void check_predict(const Forest& forest, const Matrix& X) {
  if (X.cols() != forest.feature_count) {
    throw DataError("prediction matrix has " + std::to_string(X.cols()) +
                    " columns, forest was trained on " + std::to_string(forest.feature_count));
  }
  if (forest.trees.empty()) throw DataError("forest has no trees");
}

}  // namespace

Tree grow_tree(const Matrix& X, std::span<const double> y, Task task, std::size_t class_count,
               const LearnerConfig& config, std::uint64_t tree_seed) {
  return TreeBuilder(X, y, task, class_count, config, tree_seed).build();
}

Forest fit_forest(const Matrix& X, std::span<const double> y, Task task,
                  const LearnerConfig& config) {
  const std::size_t classes = check_inputs(X, y, task, config);
  Forest forest = empty_forest(X, task, classes, config);
  const auto n_trees = static_cast<std::int64_t>(forest.trees.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t t = 0; t < n_trees; ++t) {
    const auto seed = derive_seed(config.seed, {static_cast<std::uint64_t>(t)});
    forest.trees[static_cast<std::size_t>(t)] = grow_tree(X, y, task, classes, config, seed);
  }
  return forest;
}

Forest fit_forest_serial(const Matrix& X, std::span<const double> y, Task task,
                         const LearnerConfig& config) {
  const std::size_t classes = check_inputs(X, y, task, config);
  Forest forest = empty_forest(X, task, classes, config);
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    forest.trees[t] = grow_tree(X, y, task, classes, config, derive_seed(config.seed, {t}));
  }
  return forest;
}

std::vector<double> predict(const Forest& forest, const Matrix& X) {
  check_predict(forest, X);
  std::vector<double> out(X.rows());
  const auto n = static_cast<std::int64_t>(X.rows());
#pragma omp parallel
  {
    std::vector<std::size_t> votes;
#pragma omp for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
      out[static_cast<std::size_t>(r)] = aggregate(forest, X.row(static_cast<std::size_t>(r)), votes);
    }
  }
  return out;
}

std::vector<double> predict_serial(const Forest& forest, const Matrix& X) {
  check_predict(forest, X);
  std::vector<double> out(X.rows());
  std::vector<std::size_t> votes;
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = aggregate(forest, X.row(r), votes);
  return out;
}

std::vector<LearnerConfig> expand_grid(const LearnerConfig& base) {
  base.validate();
  LearnerConfig plain = base;
  plain.grid = {};
  std::vector<LearnerConfig> out{plain};
  auto expand = [&out](const auto& values, auto apply) {
    if (values.empty()) return;
    std::vector<LearnerConfig> next;
    for (const auto& cfg : out) {
      for (const auto& v : values) {
        LearnerConfig c = cfg;
        apply(c, v);
        next.push_back(c);
      }
    }
    out = std::move(next);
  };
  // Later expansions vary fastest, so n_estimators is the outermost loop.
  expand(base.grid.n_estimators, [](LearnerConfig& c, int v) { c.n_estimators = v; });
  expand(base.grid.max_depth, [](LearnerConfig& c, int v) {
    c.max_depth = v == 0 ? std::nullopt : std::optional<int>(v);
  });
  expand(base.grid.min_samples_split, [](LearnerConfig& c, int v) { c.min_samples_split = v; });
  expand(base.grid.feature_subsample,
         [](LearnerConfig& c, FeatureSubsample v) { c.feature_subsample = v; });
  expand(base.grid.bootstrap, [](LearnerConfig& c, bool v) { c.bootstrap = v; });
  for (const auto& c : out) c.validate();
  return out;
}

GridSearchResult grid_search(const Matrix& X, std::span<const double> y, Task task,
                             const LearnerConfig& config) {
  GridSearchResult result;
  result.candidates = expand_grid(config);
  check_inputs(X, y, task, result.candidates.front());
  const std::size_t n = X.rows();
  if (n < 4) throw DataError("grid search needs at least 4 samples");

  const std::size_t k = std::min<std::size_t>(3, n);
  Rng rng(derive_seed(config.seed, {0xcf01d}));
  const auto perm = rng.permutation(n);
  std::vector<std::size_t> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[perm[i]] = i % k;

  for (const auto& candidate : result.candidates) {
    double total = 0.0;
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<std::size_t> train_rows;
      std::vector<std::size_t> test_rows;
      for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? test_rows : train_rows).push_back(i);
      std::vector<double> train_y;
      for (auto r : train_rows) train_y.push_back(y[r]);
      const Forest model = fit_forest(X.select_rows(train_rows), train_y, task, candidate);
      const auto pred = predict(model, X.select_rows(test_rows));
      for (std::size_t i = 0; i < test_rows.size(); ++i) {
        const double truth = y[test_rows[i]];
        if (task == Task::Classification) {
          total += pred[i] == truth ? 1.0 : 0.0;
        } else {
          total -= (pred[i] - truth) * (pred[i] - truth);
        }
      }
    }
    result.scores.push_back(total / static_cast<double>(n));
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.scores.size(); ++i) {
    if (result.scores[i] > result.scores[best]) best = i;
  }
  result.best = result.candidates[best];
  result.forest = fit_forest(X, y, task, result.best);
  return result;
}

namespace {

// Fixed-width little-endian layout; hosts are assumed little-endian.
class Writer {
 public:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > in_.size()) throw ArtifactError("forest payload is truncated");
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

constexpr std::uint32_t kForestMagic = 0x524f4654;  // "TFOR"

}  // namespace

std::string encode_forest(const Forest& forest) {
  Writer w;
  w.put(kForestMagic);
  w.put<std::uint8_t>(forest.task == Task::Regression ? 0 : 1);
  w.put<std::uint64_t>(forest.feature_count);
  w.put<std::uint64_t>(forest.class_count);
  w.put<std::uint64_t>(forest.trees.size());
  for (const auto& t : forest.trees) {
    w.put<std::uint64_t>(t.nodes.size());
    for (const auto& n : t.nodes) {
      w.put(n.feature);
      w.put(n.threshold);
      w.put(n.left);
      w.put(n.right);
      w.put(n.value);
      w.put(n.count_offset);
    }
    w.put<std::uint64_t>(t.class_counts.size());
    for (auto c : t.class_counts) w.put(c);
  }
  return w.take();
}

Forest decode_forest(const std::string& bytes) {
  Reader r(bytes);
  if (r.get<std::uint32_t>() != kForestMagic) throw ArtifactError("forest payload has bad magic");
  Forest f;
  const auto task = r.get<std::uint8_t>();
  if (task > 1) throw ArtifactError("forest payload has unknown task");
  f.task = task == 0 ? Task::Regression : Task::Classification;
  f.feature_count = r.get<std::uint64_t>();
  f.class_count = r.get<std::uint64_t>();
  const auto n_trees = r.get<std::uint64_t>();
  constexpr std::size_t kNodeBytes = 4 + 8 + 4 + 4 + 8 + 4;
  if (n_trees > r.remaining() / 16) throw ArtifactError("forest payload is truncated");
  f.trees.resize(n_trees);
  for (auto& t : f.trees) {
    const auto n_nodes = r.get<std::uint64_t>();
    if (n_nodes == 0 || n_nodes > r.remaining() / kNodeBytes) {
      throw ArtifactError("forest payload is truncated");
    }
    t.nodes.resize(n_nodes);
    for (auto& n : t.nodes) {
      n.feature = r.get<std::int32_t>();
      n.threshold = r.get<double>();
      n.left = r.get<std::int32_t>();
      n.right = r.get<std::int32_t>();
      n.value = r.get<double>();
      n.count_offset = r.get<std::uint32_t>();
    }
    const auto n_counts = r.get<std::uint64_t>();
    if (n_counts > r.remaining() / 4) throw ArtifactError("forest payload is truncated");
    t.class_counts.resize(n_counts);
    for (auto& c : t.class_counts) c = r.get<std::uint32_t>();
    // Children always follow their parent, which rules out cycles.
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const auto& n = t.nodes[i];
      bool ok = true;
      if (n.feature >= 0) {
        ok = static_cast<std::uint64_t>(n.feature) < f.feature_count &&
             n.left > static_cast<std::int64_t>(i) && n.right > static_cast<std::int64_t>(i) &&
             static_cast<std::uint64_t>(n.left) < n_nodes &&
             static_cast<std::uint64_t>(n.right) < n_nodes;
      } else if (f.task == Task::Classification) {
        ok = n.value >= 0 && n.value < static_cast<double>(f.class_count) &&
             n.value == std::floor(n.value);
      }
      if (!ok) throw ArtifactError("forest payload has an invalid node");
    }
  }
  if (r.remaining() != 0) throw ArtifactError("forest payload has trailing bytes");
  return f;
}

}  // namespace tabinfill
