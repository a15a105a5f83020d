#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "support.hpp"
#include "tabinfill/error.hpp"
#include "tabinfill/infill.hpp"

using namespace tabinfill;
using testing_support::mask_of;

namespace {

// Working frame with two numeric features (a, b) and one binarized categoric
// feature (c), plus their NArw columns; b and c depend on a.
struct Scenario {
  EncodedFrame frame;
  InfillLayout layout;
  MaskMap masks;
};

Scenario make_setup(std::uint64_t seed, std::size_t n, double missing) {
  Rng rng(seed);
  Scenario s;
  std::vector<double> a(n), b(n), c0(n), c1(n);
  std::vector<std::uint8_t> ma(n), mb(n), mc(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.normal(0.0, 1.0);
    b[i] = 0.9 * a[i] + rng.normal(0.0, 0.2);
    const std::size_t cat = a[i] < -0.5 ? 1 : a[i] < 0.5 ? 2 : 3;
    c0[i] = static_cast<double>(cat >> 1);
    c1[i] = static_cast<double>(cat & 1);
    ma[i] = i > 3 && rng.bernoulli(missing);
    mb[i] = i > 3 && rng.bernoulli(missing);
    mc[i] = i > 3 && rng.bernoulli(missing);
    if (ma[i]) a[i] = 0.0;
    if (mb[i]) b[i] = 0.0;
    if (mc[i]) c0[i] = c1[i] = 0.0;
  }
  s.frame.rows = n;
  s.frame.add("a_zs", a);
  s.frame.add("b_zs", b);
  s.frame.add("c_bin_0", c0);
  s.frame.add("c_bin_1", c1);
  s.frame.add("a_NArw", std::vector<double>(ma.begin(), ma.end()));
  s.frame.add("b_NArw", std::vector<double>(mb.begin(), mb.end()));
  s.frame.add("c_NArw", std::vector<double>(mc.begin(), mc.end()));
  FeatureLayout fa{"a", Task::Regression, {0}, {true}, 4, -3.0, 3.0};
  FeatureLayout fb{"b", Task::Regression, {1}, {true}, 5, -3.0, 3.0};
  FeatureLayout fc{"c", Task::Classification, {2, 3}, {true, true}, 6, 0.0, 0.0};
  s.layout.features = {fa, fb, fc};
  s.masks["a"] = mask_of(ma);
  s.masks["b"] = mask_of(mb);
  s.masks["c"] = mask_of(mc);
  return s;
}

LearnerConfig small_forest() {
  LearnerConfig cfg;
  cfg.n_estimators = 10;
  return cfg;
}

}  // namespace

TEST(Leakage, RatioExamplesAndZeroDenominator) {
  EXPECT_EQ(leakage_ratio(mask_of({1, 1, 0, 0}), mask_of({1, 0, 1, 0})), 0.5);
  EXPECT_EQ(leakage_ratio(mask_of({0, 0}), mask_of({1, 1})), 0.0);
  EXPECT_EQ(leakage_ratio(mask_of({1, 0}), mask_of({1, 1})), 1.0);
  EXPECT_THROW(leakage_ratio(mask_of({1}), mask_of({1, 0})), DataError);
}

TEST(Leakage, MatchesRowScanExhaustivelyUpToLength8) {
  for (std::size_t n = 1; n <= 8; ++n) {
    for (std::uint32_t x = 0; x < (1u << n); ++x) {
      for (std::uint32_t y = 0; y < (1u << n); ++y) {
        std::vector<std::uint8_t> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
          a[i] = (x >> i) & 1u;
          b[i] = (y >> i) & 1u;
        }
        ASSERT_EQ(leakage_ratio(mask_of(a), mask_of(b)), testing_support::leakage_oracle(a, b));
      }
    }
  }
}

TEST(Exclusions, AutomaticAndUserRules) {
  MaskMap m;
  m["a"] = mask_of({1, 1, 1, 0, 0});
  m["b"] = mask_of({1, 1, 1, 1, 0});
  m["c"] = mask_of({0, 0, 0, 0, 1});
  m["d"] = mask_of({0, 0, 0, 0, 0});
  LeakageConfig cfg;
  ExclusionPlan p = plan_exclusions(m, cfg);
  EXPECT_TRUE(p.excludes("a", "b"));   // 3/3 of a's rows are marked in b
  EXPECT_FALSE(p.excludes("b", "a"));  // 3/4 <= 0.85
  EXPECT_FALSE(p.excludes("c", "a"));

  cfg.leakage_sets = {{"c", "d"}};
  cfg.leakage_dict = {{"a", {"d"}}};
  cfg.full_exclude = {"c"};
  p = plan_exclusions(m, cfg);
  EXPECT_TRUE(p.excludes("d", "c"));
  EXPECT_TRUE(p.excludes("c", "d"));
  EXPECT_TRUE(p.excludes("a", "d"));
  EXPECT_FALSE(p.excludes("d", "a"));
  EXPECT_TRUE(p.excludes("b", "c"));
  EXPECT_EQ(p.pairwise_excluded.count({"c", "d"}), 1u);

  LeakageConfig bad;
  bad.full_exclude = {"zz"};
  EXPECT_THROW(plan_exclusions(m, bad), ConfigError);
  bad = {};
  bad.tolerance = 0.0;
  EXPECT_THROW(plan_exclusions(m, bad), ConfigError);
}

TEST(Order, CountDescendingThenName) {
  MaskMap m;
  m["b"] = mask_of({1, 0, 0});
  m["a"] = mask_of({1, 0, 0});
  m["c"] = mask_of({1, 1, 0});
  m["d"] = mask_of({0, 0, 0});
  EXPECT_EQ(order_targets(m), (std::vector<std::string>{"c", "a", "b", "d"}));
}

TEST(Partition, RowsAndBasis) {
  Scenario s = make_setup(1, 60, 0.3);
  ExclusionPlan plan;
  for (const auto& f : s.layout.features) {
    Partitions p = partition(f.header, s.frame, s.masks, s.layout, plan);
    std::set<std::size_t> rows(p.train_rows.begin(), p.train_rows.end());
    for (auto r : p.infer_rows) EXPECT_TRUE(rows.insert(r).second);
    EXPECT_EQ(rows.size(), s.frame.rows);
    for (const auto& h : p.basis) {
      EXPECT_NE(h.rfind(f.header + "_", 0), 0u) << h;
    }
    EXPECT_EQ(p.basis.size(), 7u - f.columns.size() - 1);
    EXPECT_EQ(p.train_X.rows(), p.train_rows.size());
    EXPECT_EQ(p.infer_X.rows(), p.infer_rows.size());
  }
  plan.full_exclude = {"a"};
  Partitions p = partition("b", s.frame, s.masks, s.layout, plan);
  EXPECT_EQ(p.basis, (std::vector<std::string>{"c_bin_0", "c_bin_1", "c_NArw"}));
}

TEST(Halt, HandExamples) {
  ImputationRecord prev, curr;
  curr.features["A"] = testing_support::numeric_imputations({2, 4});
  prev.features["A"] = testing_support::numeric_imputations({1, 4});
  curr.features["B"] = testing_support::numeric_imputations({0.5});
  prev.features["B"] = testing_support::numeric_imputations({0.5});
  HaltTolerances tol;
  HaltCheck h = check_halt(prev, curr, tol);
  EXPECT_NEAR(h.numeric_metric, 2.0 / 9.0, 1e-12);
  EXPECT_FALSE(h.halt);

  ImputationRecord cp, cc;
  cp.features["C"] = testing_support::categoric_imputations({{1}, {2}, {2}, {3}});
  cc.features["C"] = testing_support::categoric_imputations({{1}, {2}, {1}, {3}});
  h = check_halt(cp, cc, tol);
  EXPECT_EQ(h.categoric_metric, 0.25);
  EXPECT_FALSE(h.halt);

  h = check_halt(curr, curr, tol);
  EXPECT_EQ(h.numeric_metric, 0.0);
  EXPECT_EQ(h.categoric_metric, 0.0);
  EXPECT_TRUE(h.halt);
}

TEST(Halt, ZeroMeanConventionAndMismatch) {
  ImputationRecord prev, curr;
  prev.features["A"] = testing_support::numeric_imputations({1, -1});
  curr.features["A"] = testing_support::numeric_imputations({0, 0});
  EXPECT_EQ(check_halt(prev, curr, {}).numeric_metric, 1.0);
  EXPECT_EQ(check_halt(curr, curr, {}).numeric_metric, 0.0);

  ImputationRecord other;
  other.features["A"] = testing_support::numeric_imputations({0, 0, 0});
  EXPECT_THROW(check_halt(other, curr, {}), DataError);
}

TEST(Halt, CategoricMetricSymmetric) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    ImputationRecord a, b;
    std::vector<std::vector<double>> ra, rb;
    std::vector<double> na, nb;
    const std::size_t n = 1 + rng.uniform_index(20);
    for (std::size_t i = 0; i < n; ++i) {
      ra.push_back({static_cast<double>(rng.uniform_index(3))});
      rb.push_back({static_cast<double>(rng.uniform_index(3))});
      na.push_back(rng.normal(0, 1));
      nb.push_back(rng.normal(0, 1));
    }
    a.features["c"] = testing_support::categoric_imputations(ra);
    b.features["c"] = testing_support::categoric_imputations(rb);
    a.features["n"] = testing_support::numeric_imputations(na);
    b.features["n"] = testing_support::numeric_imputations(nb);
    EXPECT_EQ(check_halt(a, b, {}).categoric_metric, check_halt(b, a, {}).categoric_metric);
    const auto o = testing_support::halt_oracle(a, b);
    EXPECT_NEAR(check_halt(a, b, {}).numeric_metric, o.numeric, 1e-12);
  }
}

TEST(Noise, NumericExamples) {
  Rng rng(1);
  NoiseParams p;
  p.numeric_flip_prob = 0.0;
  std::vector<double> v = {0.1, 0.5, 0.9};
  EXPECT_EQ(inject_noise_numeric(v, 0.0, 1.0, p, rng).values, v);

  NoiseParams push;
  push.numeric_flip_prob = 1.0;
  push.mu = 0.05;
  push.sigma = 0.0;
  std::vector<double> edge = {10.0 + 0.99 * 2.0};
  EXPECT_EQ(inject_noise_numeric(edge, 10.0, 12.0, push, rng).values[0], 12.0);

  NoiseParams on;
  on.numeric_flip_prob = 1.0;
  EXPECT_EQ(inject_noise_numeric(v, 1.0, 1.0, on, rng).values, v);
}

TEST(Noise, NumericBinomialCountAndRange) {
  for (NoiseDistribution dist : {NoiseDistribution::Normal, NoiseDistribution::Laplace}) {
    Rng rng(2);
    NoiseParams p;
    p.distribution = dist;
    p.sigma = 0.5;
    std::vector<double> v(10000);
    for (auto& x : v) x = rng.uniform01() * 4.0 - 2.0;
    auto out = inject_noise_numeric(v, -2.0, 2.0, p, rng);
    const double sd = std::sqrt(10000 * 0.06 * 0.94);
    EXPECT_LE(std::abs(static_cast<double>(out.injected) - 600.0), 3 * sd);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_GE(out.values[i], -2.0);
      EXPECT_LE(out.values[i], 2.0);
      changed += out.values[i] != v[i];
    }
    EXPECT_LE(changed, out.injected);
  }
}

TEST(Noise, CategoricExamples) {
  Rng rng(3);
  std::vector<std::vector<double>> rows(50, {1.0, 0.0});
  EXPECT_EQ(inject_noise_categoric(rows, {{1.0, 0.0}}, 1.0, rng).rows, rows);
  EXPECT_EQ(inject_noise_categoric(rows, {{0.0, 1.0}}, 0.0, rng).rows, rows);
  EXPECT_THROW(inject_noise_categoric(rows, {}, 0.5, rng), DataError);

  std::vector<std::vector<double>> many(10000, {1.0});
  auto out = inject_noise_categoric(many, {{0.0}, {1.0}}, 0.03, rng);
  const double sd = std::sqrt(10000 * 0.03 * 0.97);
  EXPECT_LE(std::abs(static_cast<double>(out.injected) - 300.0), 3 * sd);
}

TEST(Models, FallbacksNeverAbort) {
  Scenario s = make_setup(2, 40, 0.2);
  ExclusionPlan plan;
  plan.full_exclude = {"a", "b", "c"};
  ModelSet models = train_models(s.frame, s.layout, s.masks, plan, default_learner(),
                                 small_forest(), 1);
  for (const auto& [h, m] : models) {
    EXPECT_TRUE(m.fallback());
    EXPECT_EQ(m.fallback_reason, "empty basis");
  }
}

TEST(Iteration, SequentialWritesOnFiveRows) {
  // a is missing in row 4 and b in row 3; b's model must see a's new value.
  EncodedFrame f;
  f.rows = 5;
  f.add("a_zs", {0.0, 1.0, 2.0, 3.0, 0.0});
  f.add("b_zs", {0.0, 10.0, 20.0, 0.0, 40.0});
  f.add("a_NArw", {0, 0, 0, 0, 1});
  f.add("b_NArw", {0, 0, 0, 1, 0});
  InfillLayout layout;
  layout.features = {FeatureLayout{"a", Task::Regression, {0}, {true}, 2, 0, 3},
                     FeatureLayout{"b", Task::Regression, {1}, {true}, 3, 0, 40}};
  MaskMap masks;
  masks["a"] = mask_of({0, 0, 0, 0, 1});
  masks["b"] = mask_of({0, 0, 0, 1, 0});
  ExclusionPlan plan;
  LearnerConfig cfg = small_forest();
  cfg.bootstrap = false;
  cfg.feature_subsample = FeatureSubsample::All;
  ModelSet models = train_models(f, layout, masks, plan, default_learner(), cfg, 3);
  const std::vector<std::string> order = {"a", "b"};
  EncodedFrame g = f;
  ImputationRecord rec = impute_iteration(g, layout, models, masks, order, NoiseParams::disabled(), 0, 0);
  ASSERT_EQ(rec.features.size(), 2u);
  EXPECT_EQ(g.columns[0][4], rec.features["a"].values[0][0]);
  EXPECT_EQ(g.columns[1][3], rec.features["b"].values[0][0]);
  std::vector<std::size_t> cols;
  for (const auto& h : models["b"].basis) cols.push_back(g.index_of(h));
  std::vector<std::size_t> row = {3};
  EXPECT_EQ(models["b"].model->predict(gather(g, cols, row))[0], g.columns[1][3]);
  for (std::size_t r = 0; r < 5; ++r) {
    if (r != 4) EXPECT_EQ(g.columns[0][r], f.columns[0][r]);
    if (r != 3) EXPECT_EQ(g.columns[1][r], f.columns[1][r]);
  }
}

TEST(Iteration, PureWithoutNoiseAndImputationsStayValid) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Scenario s = make_setup(seed, 80, 0.25);
    ExclusionPlan plan;
    ModelSet models = train_models(s.frame, s.layout, s.masks, plan, default_learner(),
                                   small_forest(), seed);
    const auto order = order_targets(s.masks);
    EncodedFrame f1 = s.frame, f2 = s.frame;
    auto r1 = impute_iteration(f1, s.layout, models, s.masks, order, NoiseParams::disabled(), 9, 0);
    auto r2 = impute_iteration(f2, s.layout, models, s.masks, order, NoiseParams::disabled(), 9, 0);
    EXPECT_TRUE(bit_identical(f1, f2));

    EncodedFrame f3 = s.frame;
    auto r3 = impute_iteration(f3, s.layout, models, s.masks, order, NoiseParams{}, 9, 0);
    const auto& labels = models.at("c").labels.rows();
    const std::set<std::vector<double>> allowed(labels.begin(), labels.end());
    for (const auto& v : r3.features["c"].values) EXPECT_TRUE(allowed.contains(v));
    for (const auto& v : r3.features["a"].values) {
      EXPECT_GE(v[0], -3.0);
      EXPECT_LE(v[0], 3.0);
    }
    (void)r1;
    (void)r2;
  }
}

TEST(Run, IterationsAndReplay) {
  Scenario s = make_setup(4, 60, 0.25);
  ExclusionPlan plan;
  HaltTolerances tol;
  tol.max_iterations = 3;
  EncodedFrame work = s.frame;
  InfillRun run = run_ml_infill(work, s.layout, s.masks, plan, default_learner(), small_forest(),
                                NoiseParams::disabled(), tol, 5);
  EXPECT_EQ(run.iterations.size(), 3u);
  EXPECT_EQ(run.records.size(), 3u);
  EXPECT_TRUE(run.halt_checks.empty());
  EncodedFrame replay = s.frame;
  replay_ml_infill(replay, s.layout, run.iterations, s.masks, run.order, NoiseParams::disabled(), 0);
  EXPECT_TRUE(bit_identical(replay, work));
}
