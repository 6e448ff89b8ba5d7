#pragma once

// Truncated q-Fock space.
//
// Level n is H^{(x)n} with H = R^d, written in the standard tensor basis
// e_{w_1} (x) ... (x) e_{w_n}. Basis words are ranked lexicographically with
// the first letter most significant, so prepending a letter a to a level-n
// word of rank r gives rank (a-1) d^n + r. The q-inner product on level n is
// <x, y>_q = x^T P^(n) y; the Cholesky factor chol (P = chol chol^T) turns
// it into the dot product through y = chol^T x.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qfock/combinatorics.hpp"
#include "qfock/eigensolver.hpp"
#include "qfock/errors.hpp"

namespace qfock {

inline constexpr std::size_t kDefaultMaxLevelDim = 8192;

inline std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  while (exp-- > 0) r *= base;
  return r;
}

/// Multi-index (i_1, ..., i_n) with letters in 1..d. The empty word labels the vacuum.
struct Word {
  std::vector<int> letters;

  std::size_t size() const noexcept { return letters.size(); }
  bool operator==(const Word&) const = default;
};

inline std::size_t word_index(const Word& w, std::size_t d) {
  std::size_t idx = 0;
  for (int letter : w.letters) {
    if (letter < 1 || static_cast<std::size_t>(letter) > d) {
      throw InvalidInput("letter " + std::to_string(letter) + " outside 1.." + std::to_string(d));
    }
    idx = idx * d + static_cast<std::size_t>(letter - 1);
  }
  return idx;
}

inline Word index_word(std::size_t index, std::size_t length, std::size_t d) {
  if (index >= ipow(d, length)) {
    throw InvalidInput("word index " + std::to_string(index) + " out of range for length " +
                       std::to_string(length));
  }
  Word w;
  w.letters.assign(length, 1);
  for (std::size_t k = length; k-- > 0;) {
    w.letters[k] = static_cast<int>(index % d) + 1;
    index /= d;
  }
  return w;
}

namespace detail {

/// 0-based digits of a word index; faster than Word for inner loops.
inline void index_digits(std::size_t index, std::size_t d, std::vector<std::size_t>& digits) {
  for (std::size_t k = digits.size(); k-- > 0;) {
    digits[k] = index % d;
    index /= d;
  }
}

inline std::size_t digits_index(std::span<const std::size_t> digits, std::size_t d) {
  std::size_t idx = 0;
  for (auto v : digits) idx = idx * d + v;
  return idx;
}

inline void check_level_budget(std::size_t n, std::size_t d, std::size_t max_dim) {
  // Overflow-safe d^n <= max_dim.
  std::size_t dim = 1;
  for (std::size_t k = 0; k < n; ++k) {
    if (d != 0 && dim > max_dim / d) {
      throw ResourceLimit("level " + std::to_string(n) + " with d=" + std::to_string(d) +
                              " exceeds the dense level budget",
                          max_dim);
    }
    dim *= d;
  }
  if (dim > max_dim) {
    throw ResourceLimit("level " + std::to_string(n) + " dimension " + std::to_string(dim),
                        max_dim);
  }
}

}  // namespace detail

/// P^(n) by the defining sum over S_n. Oracle path; n! work per column.
inline Matrix build_symmetrizer_bruteforce(std::size_t n, std::size_t d, double q,
                                           std::size_t max_dim = kDefaultMaxLevelDim,
                                           std::size_t max_perm = kDefaultMaxPermutationLength) {
  validate_q(q);
  if (d == 0) throw InvalidInput("d must be at least 1");
  detail::check_level_budget(n, d, max_dim);
  const auto dim = ipow(d, n);
  std::vector<std::pair<std::vector<int>, double>> perms;
  for (const auto& p : enumerate_permutations(n, max_perm)) {
    perms.emplace_back(p.images(), std::pow(q, static_cast<double>(inversions(p))));
  }
  Matrix gram = Matrix::Zero(dim, dim);
  std::vector<std::size_t> digits(n), permuted(n);
  for (std::size_t col = 0; col < dim; ++col) {
    detail::index_digits(col, d, digits);
    for (const auto& [images, weight] : perms) {
      for (std::size_t k = 0; k < n; ++k) permuted[k] = digits[images[k] - 1];
      gram(detail::digits_index(permuted, d), col) += weight;
    }
  }
  return gram;
}

/// P^(n+1) from P^(n) via P^(n+1) = (1 (x) P^(n)) (1 + q T_1 + q^2 T_1 T_2 + ... + q^n T_1...T_n),
/// T_k swapping tensor slots k and k+1. T_1...T_k moves slot k+1 to the front.
inline Matrix symmetrizer_next(const Matrix& prev, std::size_t n, std::size_t d, double q) {
  const auto inner = ipow(d, n);
  if (static_cast<std::size_t>(prev.rows()) != inner) {
    throw InvalidInput("previous symmetrizer has the wrong dimension");
  }
  const auto dim = inner * d;
  Matrix next = Matrix::Zero(dim, dim);
  std::vector<std::size_t> digits(n + 1), rest(n);
  for (std::size_t col = 0; col < dim; ++col) {
    detail::index_digits(col, d, digits);
    double weight = 1.0;
    for (std::size_t k = 0; k <= n; ++k, weight *= q) {
      // Letter at slot k moves to the front; the remaining letters keep their order.
      std::size_t t = 0;
      for (std::size_t s = 0; s <= n; ++s) {
        if (s != k) rest[t++] = digits[s];
      }
      const auto front = digits[k];
      next.block(front * inner, col, inner, 1) +=
          weight * prev.col(static_cast<Eigen::Index>(detail::digits_index(rest, d)));
    }
  }
  // Exact symmetry: the assembled matrix is symmetric up to rounding.
  return 0.5 * (next + next.transpose());
}

inline Matrix build_symmetrizer_recursive(std::size_t n, std::size_t d, double q,
                                          std::size_t max_dim = kDefaultMaxLevelDim) {
  validate_q(q);
  if (d == 0) throw InvalidInput("d must be at least 1");
  detail::check_level_budget(n, d, max_dim);
  Matrix gram = Matrix::Identity(1, 1);
  for (std::size_t k = 0; k < n; ++k) gram = symmetrizer_next(gram, k, d, q);
  return gram;
}

/// Default assembly path for P^(n).
inline Matrix build_symmetrizer(std::size_t n, std::size_t d, double q,
                                std::size_t max_dim = kDefaultMaxLevelDim) {
  return build_symmetrizer_recursive(n, d, q, max_dim);
}

/// Lower Cholesky factor. A pivot below 1e-12 times the largest diagonal entry
/// is treated as loss of positivity; there is no regularization.
inline Matrix cholesky_factor(const Matrix& gram) {
  const Eigen::Index n = gram.rows();
  if (gram.cols() != n) throw InvalidInput("Cholesky needs a square matrix");
  Matrix chol = Matrix::Zero(n, n);
  if (n == 0) return chol;
  const double threshold = 1e-12 * gram.diagonal().maxCoeff();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double pivot = gram(j, j) - chol.row(j).head(j).squaredNorm();
    if (!(pivot > threshold)) throw PositivityLost(static_cast<std::size_t>(j), pivot);
    const double root = std::sqrt(pivot);
    chol(j, j) = root;
    const Eigen::Index below = n - j - 1;
    if (below > 0) {
      chol.col(j).tail(below) =
          (gram.col(j).tail(below) -
           chol.block(j + 1, 0, below, j) * chol.row(j).head(j).transpose()) /
          root;
    }
  }
  return chol;
}

/// One Fock level with its Gram matrix P^(n) and Cholesky factor.
struct LevelSpace {
  std::size_t level = 0;
  std::size_t dim = 1;
  Matrix gram;
  Matrix chol;
};

inline Matrix orthonormalize(const LevelSpace& level) { return cholesky_factor(level.gram); }

inline LevelSpace make_level(std::size_t n, Matrix gram) {
  LevelSpace ls;
  ls.level = n;
  ls.dim = static_cast<std::size_t>(gram.rows());
  ls.gram = std::move(gram);
  ls.chol = cholesky_factor(ls.gram);
  return ls;
}

inline double gram_min_eigenvalue(const LevelSpace& level, const EigenOptions& opt = {}) {
  return sym_eig_extremes(level.gram, opt).min;
}

struct FockOptions {
  std::size_t max_level_dim = kDefaultMaxLevelDim;
};

/// F_N = (+)_{n=0}^{N} H^{(x)n}_q. Immutable once built.
class TruncatedFock {
 public:
  TruncatedFock(double q, std::size_t d, std::size_t max_level, const FockOptions& opt = {})
      : q_(validate_q(q)), d_(d) {
    check_shape(d, max_level);
    detail::check_level_budget(max_level, d, opt.max_level_dim);
    Matrix gram = Matrix::Identity(1, 1);
    for (std::size_t n = 0; n <= max_level; ++n) {
      if (n > 0) gram = symmetrizer_next(gram, n - 1, d, q);
      levels_.push_back(make_level(n, gram));
    }
    finish();
  }

  /// Assembles a space from precomputed levels 0..N (e.g. loaded from a cache).
  static TruncatedFock from_levels(double q, std::size_t d, std::vector<LevelSpace> levels) {
    if (levels.empty()) throw InvalidInput("no levels supplied");
    check_shape(d, levels.size() - 1);
    for (std::size_t n = 0; n < levels.size(); ++n) {
      if (levels[n].level != n || levels[n].dim != ipow(d, n) ||
          static_cast<std::size_t>(levels[n].gram.rows()) != levels[n].dim ||
          static_cast<std::size_t>(levels[n].chol.rows()) != levels[n].dim) {
        throw InvalidInput("level " + std::to_string(n) + " has inconsistent shape");
      }
    }
    TruncatedFock space(validate_q(q), d);
    space.levels_ = std::move(levels);
    space.finish();
    return space;
  }

  double q() const noexcept { return q_; }
  std::size_t d() const noexcept { return d_; }
  std::size_t max_level() const noexcept { return levels_.size() - 1; }
  const LevelSpace& level(std::size_t n) const { return levels_.at(n); }
  std::size_t level_dim(std::size_t n) const { return levels_.at(n).dim; }
  /// Offset of level n inside the concatenated coordinate vector.
  std::size_t offset(std::size_t n) const { return offsets_.at(n); }
  std::size_t total_dim() const noexcept { return offsets_.back(); }

 private:
  TruncatedFock(double q, std::size_t d) : q_(q), d_(d) {}

  static void check_shape(std::size_t d, std::size_t max_level) {
    if (d == 0) throw InvalidInput("d must be at least 1");
    if (max_level == 0) throw InvalidInput("truncation degree N must be at least 1");
  }

  void finish() {
    offsets_.assign(1, 0);
    for (const auto& l : levels_) offsets_.push_back(offsets_.back() + l.dim);
  }

  double q_;
  std::size_t d_;
  std::vector<LevelSpace> levels_;
  std::vector<std::size_t> offsets_;
};

namespace detail {

/// rows <- (I_d (x) L)^{-1} rows, L lower triangular of size dim/d.
inline void solve_blockwise_lower(const Matrix& lower, std::size_t d, Matrix& rows) {
  const auto inner = lower.rows();
  for (std::size_t h = 0; h < d; ++h) {
    auto block = rows.middleRows(static_cast<Eigen::Index>(h) * inner, inner);
    lower.triangularView<Eigen::Lower>().solveInPlace(block);
  }
}

/// Reorders level-(n+1) coordinates so that word (u, h) takes the slot of (h, u).
inline std::vector<std::size_t> last_to_front_permutation(std::size_t n, std::size_t d) {
  const auto inner = ipow(d, n);
  std::vector<std::size_t> perm(inner * d);
  for (std::size_t u = 0; u < inner; ++u) {
    for (std::size_t h = 0; h < d; ++h) perm[u * d + h] = h * inner + u;
  }
  return perm;
}

/// Extremal eigenvalues of the pencil (P^(n+1), I_d (x) P^(n)).
inline EigenExtremes left_pencil(const Matrix& upper_gram, const Matrix& lower_chol, std::size_t d,
                                 const EigenOptions& opt) {
  Matrix x = upper_gram;
  solve_blockwise_lower(lower_chol, d, x);
  Matrix xt = x.transpose();
  solve_blockwise_lower(lower_chol, d, xt);
  return sym_eig_extremes(0.5 * (xt + xt.transpose()), opt);
}

}  // namespace detail

/// Norms of the trivial inclusion H (x) H^{(x)n}_q -> H^{(x)n+1}_q and of its
/// inverse, for the left (phi (x) Psi) and right (Psi (x) phi) placements.
struct JNorms {
  std::size_t level = 0;
  double left = 1.0;
  double left_inverse = 1.0;
  double right = 1.0;
  double right_inverse = 1.0;
};

inline JNorms j_norms(std::size_t n, const TruncatedFock& space, const EigenOptions& opt = {}) {
  if (n + 1 > space.max_level()) {
    throw InvalidInput("j_norms at level " + std::to_string(n) + " needs N >= " +
                       std::to_string(n + 1));
  }
  const auto d = space.d();
  const auto& upper = space.level(n + 1).gram;
  const auto& lower = space.level(n).chol;

  JNorms r;
  r.level = n;
  const auto left = detail::left_pencil(upper, lower, d, opt);
  r.left = std::sqrt(left.max);
  r.left_inverse = 1.0 / std::sqrt(left.min);

  // P^(n) (x) I_d is I_d (x) P^(n) after moving the last letter to the front.
  const auto perm = detail::last_to_front_permutation(n, d);
  const auto dim = static_cast<Eigen::Index>(perm.size());
  Matrix moved(dim, dim);
  for (Eigen::Index a = 0; a < dim; ++a) {
    for (Eigen::Index b = 0; b < dim; ++b) moved(perm[a], perm[b]) = upper(a, b);
  }
  const auto right = detail::left_pencil(moved, lower, d, opt);
  r.right = std::sqrt(right.max);
  r.right_inverse = 1.0 / std::sqrt(right.min);
  return r;
}

struct EmpiricalConstants {
  double c1 = 1.0;
  double c2 = 1.0;
  std::vector<JNorms> per_level;
};

/// C1 = max_{n<N} ||j||_n and C2 = max_{n<N} ||j^{-1}||_n over both placements.
inline EmpiricalConstants empirical_constants(const TruncatedFock& space,
                                              const EigenOptions& opt = {}) {
  EmpiricalConstants c;
  for (std::size_t n = 0; n < space.max_level(); ++n) {
    auto j = j_norms(n, space, opt);
    c.c1 = std::max({c.c1, j.left, j.right});
    c.c2 = std::max({c.c2, j.left_inverse, j.right_inverse});
    c.per_level.push_back(j);
  }
  return c;
}

/// The bound ||j|| <= (1 - |q|)^{-1/2}.
inline double analytic_c1(double q) { return 1.0 / std::sqrt(1.0 - std::abs(validate_q(q))); }

}  // namespace qfock
