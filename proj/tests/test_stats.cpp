#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lpoison/stats.hpp"

using namespace lpoison;
using stats::kendall_tau;
using stats::pearson_r;

namespace {

using Vec = std::vector<double>;

// O(n^2) tau-b straight from the pair definition.
std::optional<double> brute_tau_b(const Vec& a, const Vec& b) {
  double conc = 0, disc = 0, ta = 0, tb = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double da = a[i] - a[j], db = b[i] - b[j];
      if (da == 0 && db == 0) continue;
      if (da == 0) ta += 1;
      else if (db == 0) tb += 1;
      else if ((da > 0) == (db > 0)) conc += 1;
      else disc += 1;
    }
  const double denom = std::sqrt((conc + disc + ta) * (conc + disc + tb));
  if (denom == 0) return std::nullopt;
  return (conc - disc) / denom;
}

Vec random_ties(std::size_t n, int levels, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, levels - 1);
  Vec v(n);
  for (double& x : v) x = pick(rng);
  return v;
}

}  // namespace

TEST(Kendall, ReferenceValues) {
  EXPECT_NEAR(*kendall_tau(Vec{1, 2, 3, 4}, Vec{1, 2, 3, 4}), 1.0, 1e-12);
  EXPECT_NEAR(*kendall_tau(Vec{1, 2, 3, 4}, Vec{4, 3, 2, 1}), -1.0, 1e-12);
  EXPECT_NEAR(*kendall_tau(Vec{1, 2, 3, 4}, Vec{1, 3, 2, 4}), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(*kendall_tau(Vec{1, 1, 2, 3, 3}, Vec{2, 1, 2, 3, 3}), 0.875, 1e-12);
}

TEST(Kendall, DegenerateInputs) {
  EXPECT_FALSE(kendall_tau(Vec{1, 1, 1}, Vec{1, 2, 3}));
  EXPECT_FALSE(kendall_tau(Vec{1, 2, 3}, Vec{5, 5, 5}));
  EXPECT_FALSE(kendall_tau(Vec{1}, Vec{2}));
  EXPECT_FALSE(kendall_tau(Vec{}, Vec{}));
  EXPECT_THROW(kendall_tau(Vec{1, 2}, Vec{1}), ValidationError);
}

TEST(Kendall, MatchesPairCountingWithTies) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 60;
    const Vec a = random_ties(n, 1 + trial % 7, rng), b = random_ties(n, 1 + trial % 5, rng);
    const auto fast = kendall_tau(a, b), slow = brute_tau_b(a, b);
    ASSERT_EQ(fast.has_value(), slow.has_value());
    if (fast) {
      EXPECT_NEAR(*fast, *slow, 1e-12);
    }
  }
}

TEST(Kendall, SymmetricAndMonotoneInvariant) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec a = random_ties(30, 10, rng), b = random_ties(30, 10, rng);
    Vec a2(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) a2[i] = std::exp(0.3 * a[i]) - 7.0;
    EXPECT_NEAR(*kendall_tau(a, b), *kendall_tau(b, a), 1e-12);
    EXPECT_NEAR(*kendall_tau(a, b), *kendall_tau(a2, b), 1e-12);
  }
}

TEST(Pearson, ReferenceValues) {
  EXPECT_NEAR(*pearson_r(Vec{1, 2, 3}, Vec{2, 4, 6}), 1.0, 1e-12);
  EXPECT_NEAR(*pearson_r(Vec{1, 2, 3}, Vec{3, 2, 1}), -1.0, 1e-12);
  EXPECT_NEAR(*pearson_r(Vec{1, 2, 3, 4, 5}, Vec{2, 1, 4, 3, 6}), 0.8219949365267865, 1e-12);
}

TEST(Pearson, DegenerateAndAffineInvariance) {
  EXPECT_FALSE(pearson_r(Vec{2, 2, 2}, Vec{1, 2, 3}));
  EXPECT_FALSE(pearson_r(Vec{1}, Vec{1}));
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    Vec a(25), b(25), c(25);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = g(rng);
      b[i] = g(rng) + 0.5 * a[i];
      c[i] = 3.0 * a[i] + 100.0;
    }
    EXPECT_NEAR(*pearson_r(a, b), *pearson_r(c, b), 1e-12);
    EXPECT_NEAR(*pearson_r(a, b), *pearson_r(b, a), 1e-15);
    EXPECT_LE(std::abs(*pearson_r(a, b)), 1.0);
  }
}

TEST(Summarize, Basics) {
  const stats::Summary s = stats::summarize(Vec{3, 1, 2});
  EXPECT_EQ(s.count, 3u);
  EXPECT_EQ(s.mean, 2.0);
  EXPECT_EQ(s.median, 2.0);
  EXPECT_NEAR(s.stddev, 0.816496580927726, 1e-15);
  EXPECT_EQ(s.min, 1.0);
  EXPECT_EQ(s.max, 3.0);
  EXPECT_EQ(stats::median(Vec{4, 1, 3, 2}), 2.5);
  EXPECT_THROW(stats::summarize(Vec{}), ValidationError);
}
