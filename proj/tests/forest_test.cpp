#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "tabinfill/error.hpp"
#include "tabinfill/forest.hpp"
#include "tabinfill/learner.hpp"
#include "tabinfill/rng.hpp"

using namespace tabinfill;

namespace {

struct Data {
  Matrix X;
  std::vector<double> y;
};

// Rows are drawn from a small lattice so duplicates occur; duplicate rows get
// the label of their first occurrence, which keeps the instance conflict free.
Data lattice_data(Rng& rng, std::size_t rows, std::size_t cols, Task task, std::size_t classes) {
  Data d{Matrix(rows, cols), std::vector<double>(rows)};
  std::vector<std::pair<std::vector<double>, double>> seen;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> x(cols);
    for (auto& v : x) v = static_cast<double>(rng.uniform_index(4));
    for (std::size_t c = 0; c < cols; ++c) d.X(r, c) = x[c];
    auto it = std::find_if(seen.begin(), seen.end(), [&](const auto& p) { return p.first == x; });
    if (it != seen.end()) {
      d.y[r] = it->second;
      continue;
    }
    d.y[r] = task == Task::Classification ? static_cast<double>(rng.uniform_index(classes))
                                          : rng.normal(0.0, 3.0);
    seen.emplace_back(x, d.y[r]);
  }
  return d;
}

Data linear_data(Rng& rng, std::size_t rows, double noise) {
  Data d{Matrix(rows, 3), std::vector<double>(rows)};
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < 3; ++c) d.X(r, c) = rng.normal(0.0, 1.0);
    d.y[r] = 2.0 * d.X(r, 0) - d.X(r, 1) + rng.normal(0.0, noise);
  }
  return d;
}

LearnerConfig single_tree() {
  LearnerConfig cfg;
  cfg.n_estimators = 1;
  cfg.bootstrap = false;
  cfg.feature_subsample = FeatureSubsample::All;
  return cfg;
}

Tree leaf(double value) {
  Tree t;
  TreeNode n;
  n.value = value;
  t.nodes.push_back(n);
  return t;
}

}  // namespace

TEST(Forest, ConstantRegressionTarget) {
  Rng rng(1);
  Data d = linear_data(rng, 40, 0.1);
  std::fill(d.y.begin(), d.y.end(), 4.25);
  LearnerConfig cfg;
  cfg.n_estimators = 10;
  for (double p : predict(fit_forest(d.X, d.y, Task::Regression, cfg), d.X)) EXPECT_EQ(p, 4.25);
}

TEST(Forest, SingleClass) {
  Rng rng(2);
  Data d = linear_data(rng, 30, 0.1);
  std::fill(d.y.begin(), d.y.end(), 2.0);
  LearnerConfig cfg;
  cfg.n_estimators = 5;
  for (double p : predict(fit_forest(d.X, d.y, Task::Classification, cfg), d.X)) EXPECT_EQ(p, 2.0);
}

TEST(Forest, SingleSample) {
  Matrix X(1, 2, 1.0);
  std::vector<double> y = {3.0};
  Forest f = fit_forest(X, y, Task::Regression, LearnerConfig{});
  for (const auto& t : f.trees) EXPECT_EQ(t.nodes.size(), 1u);
  EXPECT_EQ(predict(f, X)[0], 3.0);
}

TEST(Forest, Errors) {
  Matrix empty(0, 2);
  std::vector<double> none;
  EXPECT_THROW(fit_forest(empty, none, Task::Regression, LearnerConfig{}), DataError);
  Rng rng(3);
  Data d = linear_data(rng, 20, 0.1);
  LearnerConfig cfg;
  cfg.n_estimators = 3;
  Forest f = fit_forest(d.X, d.y, Task::Regression, cfg);
  EXPECT_THROW(predict(f, Matrix(2, 5)), DataError);
  LearnerConfig bad;
  bad.min_samples_split = 1;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Forest, IdenticalLeavesPredictTheirValue) {
  Forest f;
  f.task = Task::Regression;
  f.feature_count = 1;
  f.trees = {leaf(3.5), leaf(3.5), leaf(3.5)};
  for (double p : predict(f, Matrix(4, 1))) EXPECT_EQ(p, 3.5);
}

TEST(Forest, VoteTieGoesToLowestClass) {
  Forest f;
  f.task = Task::Classification;
  f.feature_count = 1;
  f.class_count = 2;
  f.trees = {leaf(1.0), leaf(0.0)};
  EXPECT_EQ(predict(f, Matrix(1, 1))[0], 0.0);
}

TEST(Forest, SingleTreeMemorizesConflictFreeData) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Task task = trial % 2 ? Task::Classification : Task::Regression;
    Data d = lattice_data(rng, 10 + rng.uniform_index(60), 1 + rng.uniform_index(4), task, 3);
    LearnerConfig cfg = single_tree();
    cfg.seed = static_cast<std::uint64_t>(trial);
    EXPECT_EQ(predict(fit_forest(d.X, d.y, task, cfg), d.X), d.y);
  }
}

TEST(Forest, ParallelMatchesSerial) {
  Rng rng(5);
  for (Task task : {Task::Regression, Task::Classification}) {
    Data d = lattice_data(rng, 200, 5, task, 4);
    LearnerConfig cfg;
    cfg.n_estimators = 24;
    cfg.seed = 99;
    const Forest a = fit_forest(d.X, d.y, task, cfg);
    const Forest b = fit_forest_serial(d.X, d.y, task, cfg);
    EXPECT_EQ(a, b);
    EXPECT_EQ(predict(a, d.X), predict_serial(b, d.X));
  }
}

TEST(Forest, DeterministicUnderSeed) {
  Rng rng(6);
  Data d = linear_data(rng, 150, 0.5);
  LearnerConfig cfg;
  cfg.n_estimators = 20;
  cfg.seed = 7;
  const Forest a = fit_forest(d.X, d.y, Task::Regression, cfg);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(fit_forest(d.X, d.y, Task::Regression, cfg), a);
  cfg.seed = 8;
  EXPECT_NE(fit_forest(d.X, d.y, Task::Regression, cfg), a);
}

TEST(Forest, RegressionStaysInTrainingRange) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Data d = linear_data(rng, 30 + rng.uniform_index(100), 1.0);
    LearnerConfig cfg;
    cfg.n_estimators = 15;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const Forest f = fit_forest(d.X, d.y, Task::Regression, cfg);
    const auto [lo, hi] = std::minmax_element(d.y.begin(), d.y.end());
    Data probe = linear_data(rng, 100, 1.0);
    for (std::size_t r = 0; r < probe.X.rows(); ++r) {
      for (std::size_t c = 0; c < 3; ++c) probe.X(r, c) *= 10.0;
    }
    for (double p : predict(f, probe.X)) {
      EXPECT_GE(p, *lo);
      EXPECT_LE(p, *hi);
    }
  }
}

TEST(Forest, ClassificationPredictsObservedClasses) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Data d = lattice_data(rng, 60, 3, Task::Classification, 5);
    for (auto& v : d.y) v = v == 1.0 ? 3.0 : v;
    const std::set<double> observed(d.y.begin(), d.y.end());
    LearnerConfig cfg;
    cfg.n_estimators = 9;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const Forest f = fit_forest(d.X, d.y, Task::Classification, cfg);
    Data probe = lattice_data(rng, 60, 3, Task::Classification, 5);
    for (double p : predict(f, probe.X)) EXPECT_TRUE(observed.contains(p));
  }
}

TEST(Forest, SerializationRoundTrip) {
  Rng rng(9);
  for (Task task : {Task::Regression, Task::Classification}) {
    Data d = lattice_data(rng, 80, 3, task, 3);
    LearnerConfig cfg;
    cfg.n_estimators = 7;
    const Forest f = fit_forest(d.X, d.y, task, cfg);
    const std::string bytes = encode_forest(f);
    EXPECT_EQ(decode_forest(bytes), f);
    EXPECT_THROW(decode_forest(bytes.substr(0, bytes.size() / 2)), ArtifactError);
    EXPECT_THROW(decode_forest(bytes + "x"), ArtifactError);
    std::string bad = bytes;
    bad[0] ^= 0x55;
    EXPECT_THROW(decode_forest(bad), ArtifactError);
  }
}

TEST(Grid, ProductCount) {
  LearnerConfig cfg;
  cfg.grid.n_estimators = {5, 10};
  cfg.grid.max_depth = {0, 2, 4};
  EXPECT_EQ(cfg.grid.size(), 6u);
  auto candidates = expand_grid(cfg);
  ASSERT_EQ(candidates.size(), 6u);
  EXPECT_EQ(candidates[0].n_estimators, 5);
  EXPECT_FALSE(candidates[0].max_depth.has_value());
  EXPECT_EQ(candidates[2].max_depth, 4);
  EXPECT_EQ(candidates[3].n_estimators, 10);

  Rng rng(10);
  Data d = linear_data(rng, 40, 0.3);
  auto result = grid_search(d.X, d.y, Task::Regression, cfg);
  EXPECT_EQ(result.candidates.size(), 6u);
  EXPECT_EQ(result.scores.size(), 6u);
}

TEST(Grid, SingletonSelectsItsValue) {
  LearnerConfig cfg;
  cfg.grid.n_estimators = {100};
  Rng rng(11);
  Data d = linear_data(rng, 20, 0.3);
  auto result = grid_search(d.X, d.y, Task::Regression, cfg);
  EXPECT_EQ(result.best.n_estimators, 100);
  EXPECT_EQ(result.forest.trees.size(), 100u);
}

TEST(Grid, InvalidValuesRejectedAndSmallSetsRefused) {
  LearnerConfig cfg;
  cfg.grid.min_samples_split = {2, 1};
  EXPECT_THROW(expand_grid(cfg), ConfigError);
  LearnerConfig ok;
  ok.grid.n_estimators = {1, 2};
  Matrix X(3, 1);
  std::vector<double> y = {1, 2, 3};
  EXPECT_THROW(grid_search(X, y, Task::Regression, ok), DataError);
}

TEST(Grid, LargerForestWinsOnNoisyRegression) {
  int wins = 0;
  const int trials = 10;
  for (int s = 0; s < trials; ++s) {
    Rng rng(static_cast<std::uint64_t>(100 + s));
    Data d = linear_data(rng, 120, 1.0);
    LearnerConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(s);
    cfg.grid.n_estimators = {1, 50};
    auto r = grid_search(d.X, d.y, Task::Regression, cfg);
    if (r.best.n_estimators == 50) ++wins;
  }
  EXPECT_GE(wins, 8);
}

TEST(Learner, RegistryAndModelRoundTrip) {
  const Learner& l = find_learner(ForestLearner::kName);
  EXPECT_EQ(l.name(), "random_forest");
  EXPECT_THROW(find_learner("no_such_learner"), DataError);
  Rng rng(12);
  Data d = linear_data(rng, 50, 0.2);
  LearnerConfig cfg;
  cfg.n_estimators = 4;
  auto model = l.fit(d.X, d.y, Task::Regression, cfg);
  auto back = l.decode(model->encode());
  EXPECT_EQ(back->predict(d.X), model->predict(d.X));
}
