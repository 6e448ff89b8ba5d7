#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qfock/oracle.hpp"

namespace qfock {
namespace {

std::size_t catalan(std::size_t k) {
  std::size_t c = 1;
  for (std::size_t i = 0; i < k; ++i) c = c * 2 * (2 * i + 1) / (i + 2);
  return c;
}

TEST(WickMoment, Examples) {
  const double q = 0.37;
  EXPECT_DOUBLE_EQ(wick_moment({{1, 1}}, q), 1.0);
  // Pairings of {1,2,3,4}: {12,34} and {14,23} are non-crossing, {13,24} crosses once.
  EXPECT_DOUBLE_EQ(wick_moment({{1, 1, 1, 1}}, q), 2.0 + q);
  EXPECT_DOUBLE_EQ(wick_moment({{1, 2, 1, 2}}, q), q);
  EXPECT_DOUBLE_EQ(wick_moment({{1, 1, 2, 2}}, q), 1.0);
  EXPECT_DOUBLE_EQ(wick_moment({{1}}, q), 0.0);
  EXPECT_DOUBLE_EQ(wick_moment({{1, 1, 1}}, q), 0.0);
  EXPECT_DOUBLE_EQ(wick_moment({{}}, q), 1.0);
  EXPECT_THROW(wick_moment({std::vector<int>(14, 1)}, q), ResourceLimit);
}

TEST(WickMoment, ContributingPartitions) {
  const auto parts = contributing_partitions({{1, 2, 1, 2}});
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(crossings(parts[0]), 1u);
  EXPECT_EQ(contributing_partitions({{1, 1, 1, 1}}).size(), 3u);
}

TEST(WickMoment, FreeCaseCountsNonCrossingPairings) {
  for (std::size_t k = 0; k <= 6; ++k) {
    EXPECT_DOUBLE_EQ(wick_moment({std::vector<int>(2 * k, 1)}, 0.0),
                     static_cast<double>(catalan(k)));
  }
}

TEST(MatrixMoment, Examples) {
  TruncatedFock s(0.6, 2, 3);
  EXPECT_DOUBLE_EQ(matrix_moment({{1}}, s), 0.0);
  EXPECT_DOUBLE_EQ(matrix_moment({{1, 1}}, s), 1.0);
  EXPECT_NEAR(matrix_moment({{1, 1, 1, 1}}, s), 2.6, 1e-14);
  EXPECT_NEAR(matrix_moment({{1, 2, 1, 2}}, s), 0.6, 1e-14);
}

TEST(MatrixMoment, TruncationMustCoverTheWalk) {
  TruncatedFock s(0.2, 2, 2);
  EXPECT_NO_THROW(matrix_moment({{1, 1, 1, 1}}, s));
  try {
    matrix_moment({{1, 1, 1, 1, 1, 1}}, s);
    FAIL();
  } catch (const TruncationInsufficient& e) {
    EXPECT_EQ(e.required_levels(), 3u);
  }
  EXPECT_THROW(matrix_moment({{3, 3}}, s), InvalidInput);
}

TEST(MatrixMoment, AgreesWithWickExhaustively) {
  TruncatedFock s(-0.5, 2, 3);
  const auto c = compare_moments(s, 6);
  EXPECT_TRUE(c.ok());
  EXPECT_EQ(c.checked, 127u);  // sum_{k<=6} 2^k
  EXPECT_LT(c.max_abs_difference, 1e-10);
}

TEST(MatrixMoment, TracialUnderCyclicRotation) {
  TruncatedFock s(0.45, 3, 3);
  const MomentEvaluator eval(s);
  for (std::size_t idx = 0; idx < ipow(3, 6); ++idx) {
    auto indices = index_word(idx, 6, 3).letters;
    const double base = eval({indices});
    for (int shift = 1; shift < 6; ++shift) {
      std::rotate(indices.begin(), indices.begin() + 1, indices.end());
      ASSERT_NEAR(eval({indices}), base, 1e-10);
    }
  }
}

TEST(MomentComparison, ReportsMismatches) {
  TruncatedFock s(0.3, 1, 2);
  const auto c = compare_moments(s, 4, -1.0);  // negative tolerance flags every tuple
  EXPECT_EQ(c.mismatches.size(), c.checked);
  const auto& last = c.mismatches.back();
  EXPECT_EQ(last.query.order(), 4u);
  EXPECT_EQ(last.partitions.size(), 3u);
}

}  // namespace
}  // namespace qfock
