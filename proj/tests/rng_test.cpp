#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "tabinfill/rng.hpp"

using namespace tabinfill;

TEST(Rng, DeriveSeedDependsOnPath) {
  EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {2}), derive_seed(2, {2}));
}

TEST(Rng, SampleWithoutReplacementIsDistinct) {
  Rng rng(1);
  for (std::size_t n : {1u, 5u, 40u}) {
    for (std::size_t k = 0; k <= n; ++k) {
      auto s = rng.sample_without_replacement(n, k);
      ASSERT_EQ(s.size(), k);
      std::sort(s.begin(), s.end());
      EXPECT_TRUE(std::adjacent_find(s.begin(), s.end()) == s.end());
      for (auto i : s) EXPECT_LT(i, n);
    }
  }
}

TEST(Rng, UniformIndexCoversRange) {
  Rng rng(2);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) ++counts[rng.uniform_index(7)];
  for (int c : counts) EXPECT_NEAR(c, 1000, 150);
}

TEST(Rng, NormalMoments) {
  Rng rng(3);
  double s = 0, ss = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal(1.0, 2.0);
    s += x;
    ss += x * x;
  }
  const double mean = s / n;
  EXPECT_NEAR(mean, 1.0, 0.03);
  EXPECT_NEAR(std::sqrt(ss / n - mean * mean), 2.0, 0.03);
}

TEST(Rng, LaplaceScale) {
  Rng rng(4);
  double abs_sum = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) abs_sum += std::fabs(rng.laplace(0.0, 0.5));
  EXPECT_NEAR(abs_sum / n, 0.5, 0.01);
}
