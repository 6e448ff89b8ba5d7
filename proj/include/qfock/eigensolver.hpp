#pragma once

// Extremal eigenpairs of real symmetric matrices.
//
// Two backends sit behind one contract: a full dense decomposition for
// small problems and a Lanczos iteration with full reorthogonalization
// above `dense_cutoff`. Both report the residual ||Av - lambda v|| of the
// returned pairs, and both fail loudly when it exceeds
// `relative_tolerance * ||A||`.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>

#include "qfock/errors.hpp"

namespace qfock {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class EigenBackend { dense, lanczos };

struct EigenOptions {
  std::size_t dense_cutoff = 3000;
  std::size_t max_iterations = 2000;
  double relative_tolerance = 1e-8;
  /// Forces one backend regardless of size; used by tests.
  bool force_lanczos = false;
};

struct EigenExtremes {
  double min = 0.0;
  double max = 0.0;
  double min_residual = 0.0;
  double max_residual = 0.0;
  EigenBackend backend = EigenBackend::dense;
  std::size_t iterations = 0;
};

namespace detail {

inline double residual_of(const Matrix& a, const Vector& v, double lambda) {
  return (a * v - lambda * v).norm() / std::max(v.norm(), 1e-300);
}

inline EigenExtremes dense_extremes(const Matrix& a, const EigenOptions& opt) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) {
    throw NumericFailure("dense symmetric eigensolver did not converge", INFINITY);
  }
  const auto& ev = es.eigenvalues();
  const auto n = a.rows();
  EigenExtremes r;
  r.backend = EigenBackend::dense;
  r.min = ev(0);
  r.max = ev(n - 1);
  r.min_residual = residual_of(a, es.eigenvectors().col(0), r.min);
  r.max_residual = residual_of(a, es.eigenvectors().col(n - 1), r.max);
  const double scale = std::max(std::abs(r.min), std::abs(r.max));
  const double worst = std::max(r.min_residual, r.max_residual);
  if (worst > opt.relative_tolerance * std::max(scale, 1.0)) {
    throw NumericFailure("dense eigensolver residual " + std::to_string(worst) + " above tolerance",
                         worst);
  }
  return r;
}

inline EigenExtremes lanczos_extremes(const Matrix& a, const EigenOptions& opt) {
  const Eigen::Index n = a.rows();
  const Eigen::Index budget =
      std::min<Eigen::Index>(n, static_cast<Eigen::Index>(opt.max_iterations));

  Matrix basis(n, budget);
  Vector alpha(budget), beta(budget);

  // Fixed seed keeps reports reproducible.
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  v.normalize();

  double scale = 1.0;
  double best = INFINITY;
  EigenExtremes r;
  r.backend = EigenBackend::lanczos;

  Eigen::Index k = 0;
  for (; k < budget; ++k) {
    basis.col(k) = v;
    Vector w = a * v;
    alpha(k) = v.dot(w);
    // Full reorthogonalization, applied twice.
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * w);
    }
    beta(k) = w.norm();

    const bool exhausted = beta(k) <= 1e-14 * scale || k + 1 == budget;
    if (k % 10 == 9 || exhausted) {
      Matrix t = Matrix::Zero(k + 1, k + 1);
      for (Eigen::Index i = 0; i <= k; ++i) {
        t(i, i) = alpha(i);
        if (i > 0) t(i, i - 1) = t(i - 1, i) = beta(i - 1);
      }
      Eigen::SelfAdjointEigenSolver<Matrix> ts(t);
      const auto& tv = ts.eigenvalues();
      scale = std::max({std::abs(tv(0)), std::abs(tv(k)), 1.0});
      Vector vmin = basis.leftCols(k + 1) * ts.eigenvectors().col(0);
      Vector vmax = basis.leftCols(k + 1) * ts.eigenvectors().col(k);
      r.min = tv(0);
      r.max = tv(k);
      r.min_residual = residual_of(a, vmin, r.min);
      r.max_residual = residual_of(a, vmax, r.max);
      r.iterations = static_cast<std::size_t>(k + 1);
      const double worst = std::max(r.min_residual, r.max_residual);
      best = std::min(best, worst);
      if (worst <= opt.relative_tolerance * scale) return r;
      if (exhausted) break;
    }
    v = w / beta(k);
  }
  throw NumericFailure("Lanczos did not converge within " + std::to_string(budget) +
                           " iterations; best residual " + std::to_string(best),
                       best);
}

}  // namespace detail

/// Smallest and largest eigenvalue of a symmetric matrix. The input is
/// symmetrized first; asymmetry above 1e-10 (relative) is rejected.
inline EigenExtremes sym_eig_extremes(const Matrix& a, const EigenOptions& opt = {}) {
  if (a.rows() != a.cols()) throw InvalidInput("eigenproblem needs a square matrix");
  if (a.rows() == 0) throw InvalidInput("eigenproblem on an empty matrix");
  const double norm = std::max(a.cwiseAbs().maxCoeff(), 1.0);
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * norm) {
    throw InvalidInput("matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }
  const Matrix sym = 0.5 * (a + a.transpose());
  if (opt.force_lanczos || static_cast<std::size_t>(a.rows()) > opt.dense_cutoff) {
    return detail::lanczos_extremes(sym, opt);
  }
  return detail::dense_extremes(sym, opt);
}

/// Largest singular value of b, via the eigenproblem of b^T b.
inline double largest_singular_value(const Matrix& b, const EigenOptions& opt = {}) {
  if (b.size() == 0) return 0.0;
  const Matrix g = b.cols() <= b.rows() ? Matrix(b.transpose() * b) : Matrix(b * b.transpose());
  return std::sqrt(std::max(sym_eig_extremes(g, opt).max, 0.0));
}

/// Smallest singular value of b as a map on its column space (needs rows >= cols).
inline double smallest_singular_value(const Matrix& b, const EigenOptions& opt = {}) {
  if (b.cols() == 0) return INFINITY;
  if (b.rows() < b.cols()) return 0.0;
  const Matrix g = b.transpose() * b;
  return std::sqrt(std::max(sym_eig_extremes(g, opt).min, 0.0));
}

struct SingularValueExtremes {
  double max = 0.0;
  double min = 0.0;
};

/// Both extremes from a single eigensolve; same conventions as the two
/// functions above.
inline SingularValueExtremes singular_value_extremes(const Matrix& b, const EigenOptions& opt = {}) {
  if (b.cols() == 0) return {0.0, INFINITY};
  if (b.rows() < b.cols()) return {largest_singular_value(b, opt), 0.0};
  const auto e = sym_eig_extremes(Matrix(b.transpose() * b), opt);
  return {std::sqrt(std::max(e.max, 0.0)), std::sqrt(std::max(e.min, 0.0))};
}

}  // namespace qfock
