#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>
#include <set>

#include "almrl/rng.hpp"

using namespace almrl;

TEST(Rng, SameSeedSameSequence) {
  auto a = derive_stream({42, 7});
  auto b = derive_stream({42, 7});
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Rng, DistinctStreamsDiffer) {
  auto a = derive_stream({42, 7});
  auto b = derive_stream({42, 8});
  auto c = derive_stream({43, 7});
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a(), vb = b(), vc = c();
    same_ab += va == vb;
    same_ac += va == vc;
  }
  EXPECT_EQ(same_ab, 0);
  EXPECT_EQ(same_ac, 0);
}

TEST(Rng, UniformChiSquare) {
  auto s = derive_stream({1, 2});
  constexpr int bins = 100;
  constexpr int n = 1000000;
  std::array<int, bins> counts{};
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++counts[static_cast<int>(u * bins)];
  }
  const double expected = static_cast<double>(n) / bins;
  double chi2 = 0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // upper 0.001 critical value of chi-square with 99 degrees of freedom
  EXPECT_LT(chi2, 148.23);
}

TEST(Rng, NormalMoments) {
  auto s = derive_stream({3, 4});
  constexpr int n = 1000000;
  double sum = 0, sumsq = 0;
  for (int i = 0; i < n; ++i) {
    const double z = next_standard_normal(s);
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  EXPECT_GT(mean, -0.004);
  EXPECT_LT(mean, 0.004);
  EXPECT_GT(var, 0.994);
  EXPECT_LT(var, 1.006);
}

TEST(Rng, NormalTailFrequency) {
  auto s = derive_stream({5, 6});
  constexpr int n = 1000000;
  int beyond2 = 0;
  for (int i = 0; i < n; ++i) beyond2 += std::abs(s.standard_normal()) > 2.0;
  const double p = std::erfc(2.0 / std::sqrt(2.0));
  EXPECT_NEAR(static_cast<double>(beyond2) / n, p, 4 * std::sqrt(p * (1 - p) / n));
}

TEST(Rng, NormalSequenceRepeats) {
  auto a = derive_stream({9, 9});
  auto b = derive_stream({9, 9});
  for (int i = 0; i < 101; ++i) ASSERT_EQ(a.standard_normal(), b.standard_normal());
}

TEST(Rng, HashIndicesSeparatesTuples) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 20; ++i)
    for (std::uint64_t j = 0; j < 20; ++j) seen.insert(hash_indices({i, j}));
  EXPECT_EQ(seen.size(), 400u);
  EXPECT_NE(hash_indices({1, 2}), hash_indices({2, 1}));
  EXPECT_NE(hash_indices({1}), hash_indices({1, 0}));
}

TEST(Rng, UsableWithStdDistributions) {
  auto s = derive_stream({1, 1});
  static_assert(std::uniform_random_bit_generator<Stream>);
  EXPECT_EQ(Stream::min(), 0u);
  (void)s();
}
