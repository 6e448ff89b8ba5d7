#pragma once

// Block-banded operators on the truncated q-Fock space.
//
// Operators are stored in word coordinates, one dense block per
// (output level, input level). Raising operators drop anything that would
// leave the truncation, so identities are only exact on the interior levels
// each check restricts itself to.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qfock/errors.hpp"
#include "qfock/fock.hpp"

namespace qfock {

enum class SpaceKind { fock, h_tensor_fock };

/// Either F_N itself or H (x) F_N; level n of H (x) F_N has dimension d^{n+1}.
struct SpaceShape {
  SpaceKind kind = SpaceKind::fock;
  std::size_t d = 1;
  std::size_t max_level = 1;

  std::size_t level_dim(std::size_t n) const {
    return ipow(d, kind == SpaceKind::fock ? n : n + 1);
  }
  bool operator==(const SpaceShape&) const = default;

  static SpaceShape fock(const TruncatedFock& s) { return {SpaceKind::fock, s.d(), s.max_level()}; }
  static SpaceShape h_tensor(const TruncatedFock& s) {
    return {SpaceKind::h_tensor_fock, s.d(), s.max_level()};
  }
};

/// Per-level coordinate vector.
using FockVector = std::vector<Vector>;

inline FockVector zero_vector(const SpaceShape& shape) {
  FockVector v;
  for (std::size_t n = 0; n <= shape.max_level; ++n) v.push_back(Vector::Zero(shape.level_dim(n)));
  return v;
}

inline FockVector vacuum_vector(const SpaceShape& shape) {
  auto v = zero_vector(shape);
  v[0](0) = 1.0;
  return v;
}

inline FockVector basis_vector(const SpaceShape& shape, const Word& w) {
  if (shape.kind != SpaceKind::fock) throw InvalidInput("basis_vector expects a Fock shape");
  auto v = zero_vector(shape);
  v.at(w.size())(static_cast<Eigen::Index>(word_index(w, shape.d))) = 1.0;
  return v;
}

using BlockKey = std::pair<std::size_t, std::size_t>;

class FockOperator {
 public:
  FockOperator(SpaceShape domain, SpaceShape codomain) : domain_(domain), codomain_(codomain) {}

  const SpaceShape& domain() const noexcept { return domain_; }
  const SpaceShape& codomain() const noexcept { return codomain_; }
  const std::map<BlockKey, Matrix>& blocks() const noexcept { return blocks_; }

  void set_block(std::size_t out, std::size_t in, Matrix m) {
    check_key(out, in, m);
    blocks_[{out, in}] = std::move(m);
  }

  void add_to_block(std::size_t out, std::size_t in, const Matrix& m, double scale = 1.0) {
    check_key(out, in, m);
    auto it = blocks_.find({out, in});
    if (it == blocks_.end()) {
      blocks_.emplace(BlockKey{out, in}, scale * m);
    } else {
      it->second += scale * m;
    }
  }

  const Matrix* find(std::size_t out, std::size_t in) const {
    auto it = blocks_.find({out, in});
    return it == blocks_.end() ? nullptr : &it->second;
  }

  Matrix block_or_zero(std::size_t out, std::size_t in) const {
    if (const auto* b = find(out, in)) return *b;
    return Matrix::Zero(codomain_.level_dim(out), domain_.level_dim(in));
  }

  /// Largest |out - in| over stored blocks.
  std::size_t band() const {
    std::size_t b = 0;
    for (const auto& [key, m] : blocks_) {
      b = std::max(b, key.first > key.second ? key.first - key.second : key.second - key.first);
    }
    return b;
  }

  FockVector apply(const FockVector& x) const {
    if (x.size() != domain_.max_level + 1) throw InvalidInput("vector has the wrong level count");
    auto y = zero_vector(codomain_);
    for (const auto& [key, m] : blocks_) y[key.first] += m * x[key.second];
    return y;
  }

  FockOperator& operator+=(const FockOperator& o) { return accumulate(o, 1.0); }
  FockOperator& operator-=(const FockOperator& o) { return accumulate(o, -1.0); }
  FockOperator& operator*=(double s) {
    for (auto& [key, m] : blocks_) m *= s;
    return *this;
  }

  /// Dense matrix over the concatenation of all levels.
  Matrix dense() const {
    std::vector<std::size_t> row_off{0}, col_off{0};
    for (std::size_t n = 0; n <= codomain_.max_level; ++n)
      row_off.push_back(row_off.back() + codomain_.level_dim(n));
    for (std::size_t n = 0; n <= domain_.max_level; ++n)
      col_off.push_back(col_off.back() + domain_.level_dim(n));
    Matrix out = Matrix::Zero(row_off.back(), col_off.back());
    for (const auto& [key, m] : blocks_) {
      out.block(row_off[key.first], col_off[key.second], m.rows(), m.cols()) = m;
    }
    return out;
  }

 private:
  FockOperator& accumulate(const FockOperator& o, double s) {
    if (!(o.domain_ == domain_ && o.codomain_ == codomain_)) {
      throw InvalidInput("operator shapes do not match");
    }
    for (const auto& [key, m] : o.blocks_) add_to_block(key.first, key.second, m, s);
    return *this;
  }

  void check_key(std::size_t out, std::size_t in, const Matrix& m) const {
    if (out > codomain_.max_level || in > domain_.max_level) {
      throw InvalidInput("block (" + std::to_string(out) + "," + std::to_string(in) +
                         ") outside the truncation");
    }
    if (static_cast<std::size_t>(m.rows()) != codomain_.level_dim(out) ||
        static_cast<std::size_t>(m.cols()) != domain_.level_dim(in)) {
      throw InvalidInput("block (" + std::to_string(out) + "," + std::to_string(in) +
                         ") has shape " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
    }
  }

  SpaceShape domain_;
  SpaceShape codomain_;
  std::map<BlockKey, Matrix> blocks_;
};

inline FockOperator operator+(FockOperator a, const FockOperator& b) { return a += b; }
inline FockOperator operator-(FockOperator a, const FockOperator& b) { return a -= b; }
inline FockOperator operator*(double s, FockOperator a) { return a *= s; }

/// Composition a * b (apply b first).
inline FockOperator operator*(const FockOperator& a, const FockOperator& b) {
  if (!(a.domain() == b.codomain())) throw InvalidInput("composition of incompatible operators");
  FockOperator c(b.domain(), a.codomain());
  for (const auto& [kb, mb] : b.blocks()) {
    for (const auto& [ka, ma] : a.blocks()) {
      if (ka.second == kb.first) c.add_to_block(ka.first, kb.second, ma * mb);
    }
  }
  return c;
}

inline FockOperator identity_operator(const SpaceShape& shape) {
  FockOperator id(shape, shape);
  for (std::size_t n = 0; n <= shape.max_level; ++n) {
    id.set_block(n, n, Matrix::Identity(shape.level_dim(n), shape.level_dim(n)));
  }
  return id;
}

// ---------------------------------------------------------------------------
// q-orthonormal transport

namespace detail {

inline void check_space(const TruncatedFock& space, const SpaceShape& shape) {
  if (shape.d != space.d() || shape.max_level > space.max_level()) {
    throw InvalidInput("operator shape does not fit the Fock space");
  }
}

/// Row blocks of the level coordinates that share one Cholesky factor.
inline std::size_t chol_copies(const SpaceShape& shape) {
  return shape.kind == SpaceKind::fock ? 1 : shape.d;
}

/// m <- C^T m, with C the level's Cholesky factor (I_d (x) chol on H (x) F).
inline void chol_t_times(const TruncatedFock& space, const SpaceShape& shape, std::size_t n,
                         Matrix& m) {
  const auto& L = space.level(n).chol;
  const auto inner = L.rows();
  for (std::size_t h = 0; h < chol_copies(shape); ++h) {
    auto rows = m.middleRows(static_cast<Eigen::Index>(h) * inner, inner);
    rows = (L.transpose().triangularView<Eigen::Upper>() * rows).eval();
  }
}

/// m <- C^{-T} m.
inline void chol_inv_t_times(const TruncatedFock& space, const SpaceShape& shape, std::size_t n,
                             Matrix& m) {
  const auto& L = space.level(n).chol;
  const auto inner = L.rows();
  for (std::size_t h = 0; h < chol_copies(shape); ++h) {
    auto rows = m.middleRows(static_cast<Eigen::Index>(h) * inner, inner);
    L.transpose().triangularView<Eigen::Upper>().solveInPlace(rows);
  }
}

/// m <- m C^{-T}.
inline void times_chol_inv_t(const TruncatedFock& space, const SpaceShape& shape, std::size_t n,
                             Matrix& m) {
  const auto& L = space.level(n).chol;
  const auto inner = L.rows();
  for (std::size_t h = 0; h < chol_copies(shape); ++h) {
    auto cols = m.middleCols(static_cast<Eigen::Index>(h) * inner, inner);
    // cols L^{-T} = (L^{-1} cols^T)^T
    L.transpose().triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(cols);
  }
}

/// m <- m C^T.
inline void times_chol_t(const TruncatedFock& space, const SpaceShape& shape, std::size_t n,
                         Matrix& m) {
  const auto& L = space.level(n).chol;
  const auto inner = L.rows();
  for (std::size_t h = 0; h < chol_copies(shape); ++h) {
    auto cols = m.middleCols(static_cast<Eigen::Index>(h) * inner, inner);
    cols = (cols * L.transpose().triangularView<Eigen::Upper>()).eval();
  }
}

}  // namespace detail

/// Block in q-orthonormal coordinates: C_out^T A C_in^{-T}.
inline Matrix transport_block(const TruncatedFock& space, const SpaceShape& codomain,
                              std::size_t out, const SpaceShape& domain, std::size_t in,
                              Matrix block) {
  detail::chol_t_times(space, codomain, out, block);
  detail::times_chol_inv_t(space, domain, in, block);
  return block;
}

inline FockOperator to_orthonormal(const FockOperator& op, const TruncatedFock& space) {
  detail::check_space(space, op.domain());
  detail::check_space(space, op.codomain());
  FockOperator r(op.domain(), op.codomain());
  for (const auto& [key, m] : op.blocks()) {
    r.set_block(key.first, key.second,
                transport_block(space, op.codomain(), key.first, op.domain(), key.second, m));
  }
  return r;
}

inline FockOperator from_orthonormal(const FockOperator& op, const TruncatedFock& space) {
  detail::check_space(space, op.domain());
  detail::check_space(space, op.codomain());
  FockOperator r(op.domain(), op.codomain());
  for (const auto& [key, m] : op.blocks()) {
    Matrix b = m;
    detail::chol_inv_t_times(space, op.codomain(), key.first, b);
    detail::times_chol_t(space, op.domain(), key.second, b);
    r.set_block(key.first, key.second, std::move(b));
  }
  return r;
}

/// Adjoint with respect to the q-inner products: A^dag = G_in^{-1} A^T G_out.
inline FockOperator q_adjoint(const FockOperator& op, const TruncatedFock& space) {
  const auto on = to_orthonormal(op, space);
  FockOperator t(op.codomain(), op.domain());
  for (const auto& [key, m] : on.blocks()) t.set_block(key.second, key.first, m.transpose());
  return from_orthonormal(t, space);
}

// ---------------------------------------------------------------------------
// Ladder operators

namespace detail {

inline std::vector<double> unit_vector(std::size_t i, std::size_t d) {
  if (i < 1 || i > d) {
    throw InvalidInput("basis index " + std::to_string(i) + " outside 1.." + std::to_string(d));
  }
  std::vector<double> phi(d, 0.0);
  phi[i - 1] = 1.0;
  return phi;
}

inline void check_phi(std::span<const double> phi, std::size_t d) {
  if (phi.size() != d) throw InvalidInput("vector in H must have d components");
}

enum class Side { left, right };

inline FockOperator creation(std::span<const double> phi, const TruncatedFock& space, Side side) {
  check_phi(phi, space.d());
  const auto shape = SpaceShape::fock(space);
  const auto d = space.d();
  FockOperator op(shape, shape);
  for (std::size_t n = 0; n < space.max_level(); ++n) {
    const auto inner = space.level_dim(n);
    Matrix b = Matrix::Zero(inner * d, inner);
    for (std::size_t r = 0; r < inner; ++r) {
      for (std::size_t a = 0; a < d; ++a) {
        if (phi[a] == 0.0) continue;
        const auto row = side == Side::left ? a * inner + r : r * d + a;
        b(row, r) = phi[a];
      }
    }
    op.set_block(n + 1, n, std::move(b));
  }
  return op;
}

inline FockOperator annihilation(std::span<const double> phi, const TruncatedFock& space,
                                 Side side) {
  check_phi(phi, space.d());
  const auto shape = SpaceShape::fock(space);
  const auto d = space.d();
  const double q = space.q();
  FockOperator op(shape, shape);
  std::vector<std::size_t> digits, rest;
  for (std::size_t n = 1; n <= space.max_level(); ++n) {
    const auto dim = space.level_dim(n);
    Matrix b = Matrix::Zero(space.level_dim(n - 1), dim);
    digits.assign(n, 0);
    rest.assign(n - 1, 0);
    for (std::size_t col = 0; col < dim; ++col) {
      detail::index_digits(col, d, digits);
      for (std::size_t k = 0; k < n; ++k) {
        const double coupling = phi[digits[k]];
        if (coupling == 0.0) continue;
        // Slot k (0-based): weight q^k from the left, q^{n-1-k} from the right.
        const double weight = std::pow(q, static_cast<double>(side == Side::left ? k : n - 1 - k));
        std::size_t t = 0;
        for (std::size_t s = 0; s < n; ++s) {
          if (s != k) rest[t++] = digits[s];
        }
        b(static_cast<Eigen::Index>(detail::digits_index(rest, d)), col) += coupling * weight;
      }
    }
    op.set_block(n - 1, n, std::move(b));
  }
  return op;
}

}  // namespace detail

/// l*_phi: prepends phi. Level N is mapped to zero.
inline FockOperator creation_left(std::span<const double> phi, const TruncatedFock& space) {
  return detail::creation(phi, space, detail::Side::left);
}
inline FockOperator creation_left(std::size_t i, const TruncatedFock& space) {
  return creation_left(detail::unit_vector(i, space.d()), space);
}

/// r*_phi: appends phi.
inline FockOperator creation_right(std::span<const double> phi, const TruncatedFock& space) {
  return detail::creation(phi, space, detail::Side::right);
}
inline FockOperator creation_right(std::size_t i, const TruncatedFock& space) {
  return creation_right(detail::unit_vector(i, space.d()), space);
}

/// l_phi: removes slot k with weight q^{k-1} (phi, psi_k).
inline FockOperator annihilation_left(std::span<const double> phi, const TruncatedFock& space) {
  return detail::annihilation(phi, space, detail::Side::left);
}
inline FockOperator annihilation_left(std::size_t i, const TruncatedFock& space) {
  return annihilation_left(detail::unit_vector(i, space.d()), space);
}

/// r_phi: removes slot k with weight q^{n-k} (phi, psi_k).
inline FockOperator annihilation_right(std::span<const double> phi, const TruncatedFock& space) {
  return detail::annihilation(phi, space, detail::Side::right);
}
inline FockOperator annihilation_right(std::size_t i, const TruncatedFock& space) {
  return annihilation_right(detail::unit_vector(i, space.d()), space);
}

/// L_i = l_i + l*_i.
inline FockOperator gaussian_left(std::size_t i, const TruncatedFock& space) {
  return annihilation_left(i, space) + creation_left(i, space);
}

/// R_i = r_i + r*_i.
inline FockOperator gaussian_right(std::size_t i, const TruncatedFock& space) {
  return annihilation_right(i, space) + creation_right(i, space);
}

// ---------------------------------------------------------------------------
// m, m^dag, M : F -> H (x) F

namespace detail {

/// sum_a e_a (x) sum_i basis(a, i) (left_i - right_i), with left/right built
/// for the rotated vectors basis.col(i).
template <typename Left, typename Right>
FockOperator stack_into_h(const TruncatedFock& space, const Matrix& basis, Left make_left,
                          Right make_right) {
  const auto d = space.d();
  if (static_cast<std::size_t>(basis.rows()) != d || static_cast<std::size_t>(basis.cols()) != d) {
    throw InvalidInput("basis must be a d x d matrix");
  }
  FockOperator out(SpaceShape::fock(space), SpaceShape::h_tensor(space));
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<double> phi(basis.col(static_cast<Eigen::Index>(i)).data(),
                            basis.col(static_cast<Eigen::Index>(i)).data() + d);
    const auto diff = make_left(phi, space) - make_right(phi, space);
    for (const auto& [key, m] : diff.blocks()) {
      // Image level key.first of F becomes level key.first of H (x) F.
      Matrix stacked = Matrix::Zero(static_cast<Eigen::Index>(d) * m.rows(), m.cols());
      for (std::size_t a = 0; a < d; ++a) {
        const double c = basis(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(i));
        if (c != 0.0) stacked.middleRows(static_cast<Eigen::Index>(a) * m.rows(), m.rows()) = c * m;
      }
      out.add_to_block(key.first, key.second, stacked);
    }
  }
  return out;
}

}  // namespace detail

/// m(Phi) = sum_i e_i (x) (l_i - r_i) Phi. `basis` holds the orthonormal e_i as columns.
inline FockOperator build_m(const TruncatedFock& space, const Matrix& basis) {
  return detail::stack_into_h(
      space, basis,
      [](std::span<const double> p, const TruncatedFock& s) { return annihilation_left(p, s); },
      [](std::span<const double> p, const TruncatedFock& s) { return annihilation_right(p, s); });
}
inline FockOperator build_m(const TruncatedFock& space) {
  return build_m(space, Matrix::Identity(space.d(), space.d()));
}

/// m^dag(Phi) = sum_i e_i (x) (l*_i - r*_i) Phi.
inline FockOperator build_mdag(const TruncatedFock& space, const Matrix& basis) {
  return detail::stack_into_h(
      space, basis,
      [](std::span<const double> p, const TruncatedFock& s) { return creation_left(p, s); },
      [](std::span<const double> p, const TruncatedFock& s) { return creation_right(p, s); });
}
inline FockOperator build_mdag(const TruncatedFock& space) {
  return build_mdag(space, Matrix::Identity(space.d(), space.d()));
}

inline FockOperator build_M(const TruncatedFock& space, const Matrix& basis) {
  return build_m(space, basis) + build_mdag(space, basis);
}
inline FockOperator build_M(const TruncatedFock& space) {
  return build_M(space, Matrix::Identity(space.d(), space.d()));
}

namespace detail {

inline void require_gap_truncation(const TruncatedFock& space) {
  if (space.max_level() < 2) throw InvalidInput("this construction needs N >= 2");
}

/// Offsets of levels 0..N-1 inside the compressed coordinate vector.
inline std::vector<std::size_t> interior_offsets(const TruncatedFock& space) {
  std::vector<std::size_t> off{0};
  for (std::size_t n = 0; n + 1 <= space.max_level(); ++n) off.push_back(off.back() + space.level_dim(n));
  return off;
}

}  // namespace detail

/// The form (Phi, Psi) -> <M Phi, M Psi> on F_{N-1}, in q-orthonormal
/// coordinates, as the Gram matrix of the images of M inside H (x) F_N.
inline Matrix abs_M_squared_gram(const TruncatedFock& space, const Matrix& basis) {
  detail::require_gap_truncation(space);
  const auto M = build_M(space, basis);
  const auto top = space.max_level() - 1;
  const auto off = detail::interior_offsets(space);
  const auto dim = static_cast<Eigen::Index>(off.back());
  Matrix gram = Matrix::Zero(dim, dim);
  for (std::size_t out = 0; out <= space.max_level(); ++out) {
    Matrix images = Matrix::Zero(M.codomain().level_dim(out), dim);
    for (std::size_t in = 0; in <= top; ++in) {
      if (const auto* b = M.find(out, in)) {
        Matrix t = *b;
        detail::times_chol_inv_t(space, M.domain(), in, t);
        images.middleCols(static_cast<Eigen::Index>(off[in]), t.cols()) = t;
      }
    }
    detail::chol_t_times(space, M.codomain(), out, images);
    gram.noalias() += images.transpose() * images;
  }
  return 0.5 * (gram + gram.transpose());
}

inline Matrix abs_M_squared_gram(const TruncatedFock& space) {
  return abs_M_squared_gram(space, Matrix::Identity(space.d(), space.d()));
}

/// The same form as the compression of sum_i (L_i - R_i)^2 onto F_{N-1}.
inline Matrix abs_M_squared_compression(const TruncatedFock& space) {
  detail::require_gap_truncation(space);
  const auto top = space.max_level() - 1;
  const auto off = detail::interior_offsets(space);
  const auto dim = static_cast<Eigen::Index>(off.back());
  Matrix form = Matrix::Zero(dim, dim);
  for (std::size_t i = 1; i <= space.d(); ++i) {
    const auto x = to_orthonormal(gaussian_left(i, space) - gaussian_right(i, space), space);
    const auto sq = x * x;
    for (const auto& [key, m] : sq.blocks()) {
      if (key.first > top || key.second > top) continue;
      form.block(static_cast<Eigen::Index>(off[key.first]), static_cast<Eigen::Index>(off[key.second]),
                 m.rows(), m.cols()) += m;
    }
  }
  return 0.5 * (form + form.transpose());
}

/// Default assembly of |M|^2 on F_{N-1}.
inline Matrix build_abs_M_squared(const TruncatedFock& space) { return abs_M_squared_gram(space); }

// ---------------------------------------------------------------------------
// S and f

/// S(phi_1 (x) ... (x) phi_n) = phi_2 (x) ... (x) phi_n (x) phi_1 on F^+.
inline FockOperator build_S(const TruncatedFock& space) {
  const auto shape = SpaceShape::fock(space);
  const auto d = space.d();
  FockOperator op(shape, shape);
  for (std::size_t n = 1; n <= space.max_level(); ++n) {
    const auto dim = space.level_dim(n);
    const auto inner = dim / d;
    Matrix b = Matrix::Zero(dim, dim);
    for (std::size_t col = 0; col < dim; ++col) {
      const auto first = col / inner;
      const auto rest = col % inner;
      b(static_cast<Eigen::Index>(rest * d + first), static_cast<Eigen::Index>(col)) = 1.0;
    }
    op.set_block(n, n, std::move(b));
  }
  return op;
}

/// f(phi (x) psi_1 (x) ... (x) psi_n) = (phi, psi_1) psi_2 (x) ... (x) psi_n,
/// from H (x) F^+ to F.
inline FockOperator build_f(const TruncatedFock& space) {
  const auto d = space.d();
  FockOperator op(SpaceShape::h_tensor(space), SpaceShape::fock(space));
  for (std::size_t m = 1; m <= space.max_level(); ++m) {
    const auto inner = space.level_dim(m - 1);
    Matrix b = Matrix::Zero(inner, inner * d * d);
    // Column word (h, w_1, rest) has rank (h d + w_1) inner + rest.
    for (std::size_t k = 0; k < d; ++k) {
      for (std::size_t r = 0; r < inner; ++r) {
        b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>((k * d + k) * inner + r)) = 1.0;
      }
    }
    op.set_block(m - 1, m, std::move(b));
  }
  return op;
}

// ---------------------------------------------------------------------------
// Identity checks. Each returns a max-entry residual.

namespace detail {

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// Max entry of `op - target` over blocks whose input level lies in [lo, hi].
inline double residual_on_inputs(const FockOperator& op, const FockOperator& target, std::size_t lo,
                                 std::size_t hi) {
  double worst = 0.0;
  std::map<BlockKey, bool> keys;
  for (const auto& [k, m] : op.blocks()) keys[k] = true;
  for (const auto& [k, m] : target.blocks()) keys[k] = true;
  for (const auto& [k, unused] : keys) {
    if (k.second < lo || k.second > hi) continue;
    worst = std::max(worst, max_abs(op.block_or_zero(k.first, k.second) -
                                    target.block_or_zero(k.first, k.second)));
  }
  return worst;
}

}  // namespace detail

/// max_{i,j} | l_i l*_j - q l*_j l_i - delta_ij | on input levels 0..N-1.
inline double verify_qccr(const TruncatedFock& space) {
  const auto shape = SpaceShape::fock(space);
  const auto id = identity_operator(shape);
  const FockOperator zero(shape, shape);
  std::vector<FockOperator> ann, cre;
  for (std::size_t i = 1; i <= space.d(); ++i) {
    ann.push_back(annihilation_left(i, space));
    cre.push_back(creation_left(i, space));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < space.d(); ++i) {
    for (std::size_t j = 0; j < space.d(); ++j) {
      const auto lhs = ann[i] * cre[j] - space.q() * (cre[j] * ann[i]);
      worst = std::max(worst, detail::residual_on_inputs(lhs, i == j ? id : zero, 0,
                                                         space.max_level() - 1));
    }
  }
  return worst;
}

/// max_{i,j} | [L_i, R_j] | on input levels 0..N-2.
inline double verify_lr_commutation(const TruncatedFock& space) {
  detail::require_gap_truncation(space);
  const auto shape = SpaceShape::fock(space);
  const FockOperator zero(shape, shape);
  std::vector<FockOperator> L, R;
  for (std::size_t i = 1; i <= space.d(); ++i) {
    L.push_back(gaussian_left(i, space));
    R.push_back(gaussian_right(i, space));
  }
  double worst = 0.0;
  for (const auto& li : L) {
    for (const auto& rj : R) {
      worst = std::max(worst, detail::residual_on_inputs(li * rj - rj * li, zero, 0,
                                                         space.max_level() - 2));
    }
  }
  return worst;
}

/// Max entry of (annihilator)_on - (creator)_on^T over all ladder pairs, both sides.
inline double verify_adjointness(const TruncatedFock& space) {
  double worst = 0.0;
  for (std::size_t i = 1; i <= space.d(); ++i) {
    const std::pair<FockOperator, FockOperator> pairs[] = {
        {annihilation_left(i, space), creation_left(i, space)},
        {annihilation_right(i, space), creation_right(i, space)}};
    for (const auto& [a, c] : pairs) {
      const auto a_on = to_orthonormal(a, space);
      const auto c_on = to_orthonormal(c, space);
      for (std::size_t n = 0; n < space.max_level(); ++n) {
        worst = std::max(worst, detail::max_abs(a_on.block_or_zero(n, n + 1) -
                                                c_on.block_or_zero(n + 1, n).transpose()));
      }
    }
  }
  return worst;
}

/// Max entry of f m^dag - (d - S) on levels 1..N-1.
inline double verify_fm_identity(const TruncatedFock& space) {
  detail::require_gap_truncation(space);
  const auto shape = SpaceShape::fock(space);
  const auto lhs = build_f(space) * build_mdag(space);
  const auto rhs = static_cast<double>(space.d()) * identity_operator(shape) - build_S(space);
  return detail::residual_on_inputs(lhs, rhs, 1, space.max_level() - 1);
}

}  // namespace qfock
