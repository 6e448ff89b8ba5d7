#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "qfock/combinatorics.hpp"

namespace qfock {
namespace {

// Counts adjacent transpositions performed by bubble sort; equals the inversion count.
std::size_t bubble_swaps(std::vector<int> a) {
  std::size_t swaps = 0;
  for (std::size_t pass = 0; pass < a.size(); ++pass) {
    for (std::size_t i = 0; i + 1 < a.size(); ++i) {
      if (a[i] > a[i + 1]) {
        std::swap(a[i], a[i + 1]);
        ++swaps;
      }
    }
  }
  return swaps;
}

TEST(Inversions, Examples) {
  EXPECT_EQ(inversions(Permutation::identity(5)), 0u);
  EXPECT_EQ(inversions(Permutation({2, 1})), 1u);
  EXPECT_EQ(bubble_swaps({3, 1, 2}), 2u);
  EXPECT_EQ(inversions(Permutation({3, 1, 2})), 2u);
  EXPECT_EQ(inversions(Permutation()), 0u);
}

TEST(Inversions, ReversalIsMaximal) {
  for (std::size_t n = 0; n <= 8; ++n) {
    std::vector<int> rev(n);
    for (std::size_t i = 0; i < n; ++i) rev[i] = static_cast<int>(n - i);
    EXPECT_EQ(inversions(Permutation(rev)), n * (n - 1) / 2) << "n=" << n;
  }
}

TEST(Inversions, MatchesBubbleSortOnRandomPermutations) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = Permutation::identity(1 + trial % 8).images();
    std::shuffle(p.begin(), p.end(), rng);
    EXPECT_EQ(inversions(Permutation(p)), bubble_swaps(p));
  }
}

TEST(Permutation, RejectsMalformedOneLineNotation) {
  EXPECT_THROW(Permutation({1, 1}), InvalidInput);
  EXPECT_THROW(Permutation({0, 1}), InvalidInput);
  EXPECT_THROW(Permutation({1, 3}), InvalidInput);
}

TEST(EnumeratePermutations, Counts) {
  std::size_t count = 0;
  for (const auto& p : enumerate_permutations(0)) {
    EXPECT_EQ(p.size(), 0u);
    ++count;
  }
  EXPECT_EQ(count, 1u);

  count = 0;
  for (const auto& p : enumerate_permutations(3)) {
    (void)p;
    ++count;
  }
  EXPECT_EQ(count, 6u);
}

TEST(EnumeratePermutations, InversionTotalForS4) {
  // Oracle: sum of inversions over S_n is n! n (n-1) / 4.
  std::size_t total = 0;
  std::set<std::vector<int>> seen;
  for (const auto& p : enumerate_permutations(4)) {
    total += bubble_swaps(p.images());
    seen.insert(p.images());
  }
  EXPECT_EQ(seen.size(), 24u);
  EXPECT_EQ(total, 72u);
}

TEST(EnumeratePermutations, EachElementOnceUpToEight) {
  std::set<std::vector<int>> seen;
  for (const auto& p : enumerate_permutations(8)) seen.insert(p.images());
  EXPECT_EQ(seen.size(), 40320u);
}

TEST(EnumeratePermutations, BudgetIsEnforced) {
  EXPECT_THROW(enumerate_permutations(9), ResourceLimit);
  EXPECT_NO_THROW(enumerate_permutations(9, 9));
  try {
    enumerate_permutations(10);
    FAIL();
  } catch (const ResourceLimit& e) {
    EXPECT_EQ(e.limit(), 8u);
  }
}

TEST(QInversionSum, Examples) {
  EXPECT_DOUBLE_EQ(q_inversion_sum(1, 0.3), 1.0);
  EXPECT_DOUBLE_EQ(q_inversion_sum(2, 0.5), 1.5);
  // Brute force over S_3: inversion counts {0,1,1,2,2,3}.
  const double q = 0.5;
  const double brute = 1 + 2 * q + 2 * q * q + q * q * q;
  EXPECT_DOUBLE_EQ(brute, 2.625);
  EXPECT_NEAR(q_inversion_sum(3, q), brute, 1e-15);
}

TEST(QInversionSum, MatchesQFactorial) {
  for (std::size_t n = 0; n <= 6; ++n) {
    for (double q : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
      EXPECT_NEAR(q_inversion_sum(n, q), q_factorial(n, q), 1e-12) << "n=" << n << " q=" << q;
    }
  }
}

// Independent count: pair the smallest open point with each other one.
std::size_t count_pairings(std::size_t m) { return m == 0 ? 1 : (m - 1) * count_pairings(m - 2); }

TEST(PairPartitions, Counts) {
  auto one = enumerate_pair_partitions(2);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].pairs(), (std::vector<std::pair<int, int>>{{1, 2}}));
  EXPECT_EQ(enumerate_pair_partitions(4).size(), 3u);
  EXPECT_EQ(count_pairings(6), 15u);
  EXPECT_EQ(enumerate_pair_partitions(6).size(), 15u);
  EXPECT_EQ(enumerate_pair_partitions(0).size(), 1u);
  for (std::size_t k = 0; k <= 6; ++k) {
    EXPECT_EQ(enumerate_pair_partitions(2 * k).size(), k == 0 ? 1u : double_factorial(2 * k - 1));
    EXPECT_EQ(enumerate_pair_partitions(2 * k).size(), count_pairings(2 * k));
  }
}

TEST(PairPartitions, AreDistinctAndCover) {
  std::set<std::set<std::pair<int, int>>> seen;
  for (const auto& p : enumerate_pair_partitions(8)) {
    std::set<int> covered;
    for (auto [a, b] : p.pairs()) {
      EXPECT_LT(a, b);
      covered.insert(a);
      covered.insert(b);
    }
    EXPECT_EQ(covered.size(), 8u);
    seen.insert({p.pairs().begin(), p.pairs().end()});
  }
  EXPECT_EQ(seen.size(), 105u);
}

TEST(PairPartitions, Errors) {
  EXPECT_THROW(enumerate_pair_partitions(3), InvalidInput);
  EXPECT_THROW(enumerate_pair_partitions(14), ResourceLimit);
  EXPECT_THROW(PairPartition({{1, 1}}), InvalidInput);
  EXPECT_THROW(PairPartition({{1, 3}}), InvalidInput);
}

// Oracle: scan all quadruples a < c < b < d directly.
std::size_t brute_crossings(const PairPartition& p) {
  std::map<int, int> partner;
  for (auto [a, b] : p.pairs()) {
    partner[a] = b;
    partner[b] = a;
  }
  const int m = static_cast<int>(p.ground_size());
  std::size_t count = 0;
  for (int a = 1; a <= m; ++a)
    for (int c = a + 1; c <= m; ++c)
      for (int b = c + 1; b <= m; ++b)
        for (int d = b + 1; d <= m; ++d)
          if (partner[a] == b && partner[c] == d) ++count;
  return count;
}

TEST(Crossings, Examples) {
  EXPECT_EQ(crossings(PairPartition({{1, 2}, {3, 4}})), 0u);
  EXPECT_EQ(crossings(PairPartition({{1, 3}, {2, 4}})), 1u);
  const PairPartition three({{1, 4}, {2, 6}, {3, 5}});
  EXPECT_EQ(brute_crossings(three), 2u);
  EXPECT_EQ(crossings(three), 2u);
}

TEST(Crossings, MatchesBruteForceAndIgnoresPairOrder) {
  std::mt19937 rng(11);
  for (const auto& p : enumerate_pair_partitions(10)) {
    const auto expected = brute_crossings(p);
    EXPECT_EQ(crossings(p), expected);
    auto pairs = p.pairs();
    std::shuffle(pairs.begin(), pairs.end(), rng);
    for (auto& pr : pairs) {
      if (rng() % 2) std::swap(pr.first, pr.second);
    }
    EXPECT_EQ(crossings(PairPartition(pairs)), expected);
  }
}

}  // namespace
}  // namespace qfock
