#pragma once

// Symmetric-group and pair-partition machinery.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "qfock/errors.hpp"

namespace qfock {

inline constexpr std::size_t kDefaultMaxPermutationLength = 8;
inline constexpr std::size_t kDefaultMaxPairGround = 12;

/// A permutation of {1..n} in one-line notation.
class Permutation {
 public:
  Permutation() = default;

  explicit Permutation(std::vector<int> images) : images_(std::move(images)) {
    const auto n = images_.size();
    std::vector<bool> seen(n + 1, false);
    for (int v : images_) {
      if (v < 1 || static_cast<std::size_t>(v) > n) {
        throw InvalidInput("permutation image " + std::to_string(v) + " outside 1.." +
                           std::to_string(n));
      }
      if (seen[v]) throw InvalidInput("permutation image " + std::to_string(v) + " repeated");
      seen[v] = true;
    }
  }

  static Permutation identity(std::size_t n) {
    Permutation p;
    p.images_.resize(n);
    std::iota(p.images_.begin(), p.images_.end(), 1);
    return p;
  }

  std::size_t size() const noexcept { return images_.size(); }
  /// Image of the 1-based point i.
  int operator()(std::size_t i) const { return images_[i - 1]; }
  const std::vector<int>& images() const noexcept { return images_; }

  bool operator==(const Permutation&) const = default;

 private:
  friend class PermutationRange;
  std::vector<int> images_;
};

/// Number of pairs i < j with p(i) > p(j). Plain O(n^2) scan.
inline std::size_t inversions(const Permutation& p) {
  const auto& a = p.images();
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      if (a[i] > a[j]) ++count;
    }
  }
  return count;
}

/// Streams S_n in lexicographic order without materializing it.
class PermutationRange {
 public:
  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Permutation;
    using difference_type = std::ptrdiff_t;
    using pointer = const Permutation*;
    using reference = const Permutation&;

    iterator() = default;
    explicit iterator(std::size_t n) : current_(Permutation::identity(n)), done_(false) {}

    reference operator*() const { return current_; }
    pointer operator->() const { return &current_; }
    iterator& operator++() {
      done_ = !std::next_permutation(current_.images_.begin(), current_.images_.end());
      return *this;
    }
    void operator++(int) { ++*this; }
    bool operator==(const iterator& other) const { return done_ && other.done_; }

   private:
    Permutation current_;
    bool done_ = true;
  };

  explicit PermutationRange(std::size_t n) : n_(n) {}
  iterator begin() const { return iterator(n_); }
  iterator end() const { return iterator(); }

 private:
  std::size_t n_;
};

inline PermutationRange enumerate_permutations(std::size_t n,
                                               std::size_t max_n = kDefaultMaxPermutationLength) {
  if (n > max_n) throw ResourceLimit("permutation enumeration of S_" + std::to_string(n), max_n);
  return PermutationRange(n);
}

/// Sum of q^inv(sigma) over S_n, by enumeration.
inline double q_inversion_sum(std::size_t n, double q,
                              std::size_t max_n = kDefaultMaxPermutationLength) {
  double total = 0.0;
  for (const auto& p : enumerate_permutations(n, max_n)) {
    total += std::pow(q, static_cast<double>(inversions(p)));
  }
  return total;
}

/// [k]_q = 1 + q + ... + q^{k-1}.
inline double q_integer(std::size_t k, double q) {
  double sum = 0.0, term = 1.0;
  for (std::size_t i = 0; i < k; ++i, term *= q) sum += term;
  return sum;
}

/// [n]_q! = prod_{k=1}^n [k]_q.
inline double q_factorial(std::size_t n, double q) {
  double prod = 1.0;
  for (std::size_t k = 1; k <= n; ++k) prod *= q_integer(k, q);
  return prod;
}

inline std::size_t double_factorial(std::size_t n) {
  std::size_t r = 1;
  for (std::size_t k = n; k > 1; k -= 2) r *= k;
  return r;
}

/// A perfect matching of {1..2k}. Pairs are stored with first < second.
class PairPartition {
 public:
  PairPartition() = default;

  explicit PairPartition(std::vector<std::pair<int, int>> pairs) : pairs_(std::move(pairs)) {
    const auto ground = 2 * pairs_.size();
    std::vector<bool> seen(ground + 1, false);
    for (auto& [a, b] : pairs_) {
      if (a > b) std::swap(a, b);
      for (int v : {a, b}) {
        if (v < 1 || static_cast<std::size_t>(v) > ground) {
          throw InvalidInput("pair element " + std::to_string(v) + " outside 1.." +
                             std::to_string(ground));
        }
        if (seen[v]) throw InvalidInput("pair element " + std::to_string(v) + " repeated");
        seen[v] = true;
      }
    }
  }

  std::size_t size() const noexcept { return pairs_.size(); }
  std::size_t ground_size() const noexcept { return 2 * pairs_.size(); }
  const std::vector<std::pair<int, int>>& pairs() const noexcept { return pairs_; }

 private:
  std::vector<std::pair<int, int>> pairs_;
};

/// Pairs of pairs {a,b}, {c,d} with a < c < b < d.
inline std::size_t crossings(const PairPartition& p) {
  const auto& pr = p.pairs();
  std::size_t count = 0;
  for (std::size_t x = 0; x < pr.size(); ++x) {
    for (std::size_t y = x + 1; y < pr.size(); ++y) {
      auto [a, b] = pr[x];
      auto [c, d] = pr[y];
      if (c < a) {
        std::swap(a, c);
        std::swap(b, d);
      }
      if (a < c && c < b && b < d) ++count;
    }
  }
  return count;
}

namespace detail {

template <typename F>
void pair_partitions_rec(std::vector<int>& open, std::vector<std::pair<int, int>>& acc, F& visit) {
  if (open.empty()) {
    visit(PairPartition(acc));
    return;
  }
  const int first = open.front();
  for (std::size_t k = 1; k < open.size(); ++k) {
    const int partner = open[k];
    std::vector<int> rest;
    rest.reserve(open.size() - 2);
    for (std::size_t t = 1; t < open.size(); ++t) {
      if (t != k) rest.push_back(open[t]);
    }
    acc.emplace_back(first, partner);
    pair_partitions_rec(rest, acc, visit);
    acc.pop_back();
  }
}

}  // namespace detail

/// Calls visit(const PairPartition&) once for every pair partition of {1..ground_size}.
template <typename F>
void for_each_pair_partition(std::size_t ground_size, F&& visit,
                             std::size_t max_ground = kDefaultMaxPairGround) {
  if (ground_size % 2 != 0) {
    throw InvalidInput("pair partitions need an even ground set, got " +
                       std::to_string(ground_size));
  }
  if (ground_size > max_ground) {
    throw ResourceLimit("pair partitions of a " + std::to_string(ground_size) + "-element set",
                        max_ground);
  }
  std::vector<int> open(ground_size);
  std::iota(open.begin(), open.end(), 1);
  std::vector<std::pair<int, int>> acc;
  detail::pair_partitions_rec(open, acc, visit);
}

inline std::vector<PairPartition> enumerate_pair_partitions(
    std::size_t ground_size, std::size_t max_ground = kDefaultMaxPairGround) {
  std::vector<PairPartition> out;
  for_each_pair_partition(
      ground_size, [&](const PairPartition& p) { out.push_back(p); }, max_ground);
  return out;
}

}  // namespace qfock
