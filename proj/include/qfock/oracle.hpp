#pragma once

// Vacuum moments of the q-Gaussians, two ways.
//
// wick_moment is the pair-partition formula
//   <Omega, L_{i_1} ... L_{i_k} Omega> = sum over pairings pi compatible with
//   the indices of q^{crossings(pi)}.
// It is only an oracle: nothing in fock/ or operators/ depends on it.
// matrix_moment evaluates the same number from the assembled matrices.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qfock/combinatorics.hpp"
#include "qfock/errors.hpp"
#include "qfock/fock.hpp"
#include "qfock/operators.hpp"

namespace qfock {

inline constexpr std::size_t kMaxMomentOrder = 12;

struct MomentQuery {
  std::vector<int> indices;

  std::size_t order() const noexcept { return indices.size(); }
};

namespace detail {

inline bool pairing_matches(const PairPartition& p, const MomentQuery& m) {
  for (auto [a, b] : p.pairs()) {
    if (m.indices[a - 1] != m.indices[b - 1]) return false;
  }
  return true;
}

}  // namespace detail

/// Pairings of {1..k} that only pair equal indices.
inline std::vector<PairPartition> contributing_partitions(const MomentQuery& m) {
  std::vector<PairPartition> out;
  if (m.order() % 2 != 0) return out;
  for_each_pair_partition(
      m.order(),
      [&](const PairPartition& p) {
        if (detail::pairing_matches(p, m)) out.push_back(p);
      },
      kMaxMomentOrder);
  return out;
}

inline double wick_moment(const MomentQuery& m, double q) {
  validate_q(q);
  if (m.order() > kMaxMomentOrder) {
    throw ResourceLimit("Wick moment of order " + std::to_string(m.order()), kMaxMomentOrder);
  }
  if (m.order() % 2 != 0) return 0.0;
  double total = 0.0;
  for_each_pair_partition(
      m.order(),
      [&](const PairPartition& p) {
        if (detail::pairing_matches(p, m)) total += std::pow(q, static_cast<double>(crossings(p)));
      },
      kMaxMomentOrder);
  return total;
}

/// Evaluates <Omega, L_{i_1} ... L_{i_k} Omega>_q with the assembled L_i.
class MomentEvaluator {
 public:
  explicit MomentEvaluator(const TruncatedFock& space) : shape_(SpaceShape::fock(space)) {
    for (std::size_t i = 1; i <= space.d(); ++i) gaussians_.push_back(gaussian_left(i, space));
  }

  double operator()(const MomentQuery& m) const {
    // A walk from level 0 back to level 0 never climbs above k/2.
    const auto required = (m.order() + 1) / 2;
    if (required > shape_.max_level) throw TruncationInsufficient(m.order(), required);
    for (int i : m.indices) {
      if (i < 1 || static_cast<std::size_t>(i) > gaussians_.size()) {
        throw InvalidInput("moment index " + std::to_string(i) + " outside 1.." +
                           std::to_string(gaussians_.size()));
      }
    }
    auto v = vacuum_vector(shape_);
    for (auto it = m.indices.rbegin(); it != m.indices.rend(); ++it) {
      v = gaussians_[static_cast<std::size_t>(*it - 1)].apply(v);
    }
    // The level-0 Gram matrix is [1].
    return v[0](0);
  }

 private:
  SpaceShape shape_;
  std::vector<FockOperator> gaussians_;
};

inline double matrix_moment(const MomentQuery& m, const TruncatedFock& space) {
  return MomentEvaluator(space)(m);
}

struct MomentMismatch {
  MomentQuery query;
  double wick = 0.0;
  double matrix = 0.0;
  std::vector<PairPartition> partitions;
};

struct MomentComparison {
  double q = 0.0;
  std::size_t d = 0;
  std::size_t max_order = 0;
  std::size_t checked = 0;
  double max_abs_difference = 0.0;
  double tolerance = 1e-10;
  std::vector<MomentMismatch> mismatches;

  bool ok() const noexcept { return mismatches.empty(); }
};

/// Compares both evaluations on every index tuple of order <= max_order.
inline MomentComparison compare_moments(const TruncatedFock& space, std::size_t max_order,
                                        double tolerance = 1e-10) {
  MomentComparison c;
  c.q = space.q();
  c.d = space.d();
  c.max_order = max_order;
  c.tolerance = tolerance;
  const MomentEvaluator eval(space);
  const auto d = space.d();
  for (std::size_t k = 0; k <= max_order; ++k) {
    const auto count = ipow(d, k);
    for (std::size_t idx = 0; idx < count; ++idx) {
      MomentQuery query{index_word(idx, k, d).letters};
      const double w = wick_moment(query, space.q());
      const double m = eval(query);
      const double diff = std::abs(w - m);
      c.max_abs_difference = std::max(c.max_abs_difference, diff);
      ++c.checked;
      if (!(diff <= tolerance)) {
        c.mismatches.push_back({query, w, m, contributing_partitions(query)});
      }
    }
  }
  return c;
}

}  // namespace qfock
