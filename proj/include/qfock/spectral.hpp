#pragma once

// Spectral side of the factoriality argument: ||m||, the lower bound of
// |m^dag| on F^+, the gap of |M| on F^+, and the threshold d0(q).
//
// All singular values are computed in q-orthonormal coordinates on both
// sides, through the symmetric eigenproblem of B^T B (or B B^T).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qfock/eigensolver.hpp"
#include "qfock/errors.hpp"
#include "qfock/fock.hpp"
#include "qfock/operators.hpp"

namespace qfock {

struct Tolerances {
  double identity = 1e-10;
  double inequality = 1e-9;
  double eigen_residual = 1e-8;
  double kernel = 1e-12;
};

struct LevelSingularValues {
  std::size_t level = 0;
  double max_sv = 0.0;
  double min_sv = 0.0;
};

/// Singular values per input level of an operator whose input levels each map
/// to a single output level (true for m, m^dag, S and f), over input levels
/// first..last.
inline std::vector<LevelSingularValues> level_singular_values(const FockOperator& op,
                                                              const TruncatedFock& space,
                                                              std::size_t first, std::size_t last,
                                                              const EigenOptions& opt = {}) {
  std::vector<LevelSingularValues> out;
  for (std::size_t in = first; in <= last; ++in) {
    const Matrix* block = nullptr;
    std::size_t out_level = 0;
    for (const auto& [key, m] : op.blocks()) {
      if (key.second != in) continue;
      if (block != nullptr) throw InvalidInput("input level maps to several output levels");
      block = &m;
      out_level = key.first;
    }
    LevelSingularValues sv;
    sv.level = in;
    if (block != nullptr) {
      const auto t =
          transport_block(space, op.codomain(), out_level, op.domain(), in, *block);
      const auto e = singular_value_extremes(t, opt);
      sv.max_sv = e.max;
      sv.min_sv = e.min;
    }
    out.push_back(sv);
  }
  return out;
}

inline double max_of(const std::vector<LevelSingularValues>& v) {
  double r = 0.0;
  for (const auto& s : v) r = std::max(r, s.max_sv);
  return r;
}

inline double min_of(const std::vector<LevelSingularValues>& v) {
  double r = INFINITY;
  for (const auto& s : v) r = std::min(r, s.min_sv);
  return r;
}

/// ||m|| on F^+ (input levels 1..N; m only lowers, so nothing is clipped).
inline double norm_of_m(const TruncatedFock& space, const EigenOptions& opt = {}) {
  return max_of(level_singular_values(build_m(space), space, 1, space.max_level(), opt));
}

/// Smallest singular value of m^dag on F^+_{N-1}.
inline double min_sv_of_mdag(const TruncatedFock& space, const EigenOptions& opt = {}) {
  if (space.max_level() < 2) throw InvalidInput("min_sv_of_mdag needs N >= 2");
  return min_of(level_singular_values(build_mdag(space), space, 1, space.max_level() - 1, opt));
}

/// (d - C1 C2) / (C2 sqrt(d)); the bound is vacuous when this is not positive.
inline double mdag_lower_bound(std::size_t d, double c1, double c2) {
  const auto dd = static_cast<double>(d);
  return (dd - c1 * c2) / (c2 * std::sqrt(dd));
}

struct GapResult {
  double gap = 0.0;             ///< sqrt of the smallest eigenvalue on F^+_{N-1}
  double min_eigenvalue = 0.0;  ///< smallest eigenvalue of the compression on F^+_{N-1}
  double vacuum_diagonal = 0.0;
  double vacuum_row_norm = 0.0;
  std::size_t dimension = 0;
};

inline GapResult gap_from_form(const Matrix& form, const EigenOptions& opt = {}) {
  GapResult r;
  const auto n = form.rows();
  r.vacuum_diagonal = std::abs(form(0, 0));
  r.vacuum_row_norm = std::max(form.row(0).norm(), form.col(0).norm());
  r.dimension = static_cast<std::size_t>(n - 1);
  const Matrix interior = form.bottomRightCorner(n - 1, n - 1);
  r.min_eigenvalue = sym_eig_extremes(interior, opt).min;
  r.gap = std::sqrt(std::max(r.min_eigenvalue, 0.0));
  return r;
}

/// Gap of |M| on F^+_{N-1}.
inline GapResult gap(const TruncatedFock& space, const EigenOptions& opt = {}) {
  return gap_from_form(build_abs_M_squared(space), opt);
}

struct SpectralReport {
  double q = 0.0;
  std::size_t d = 0;
  std::size_t N = 0;
  double c1_emp = 1.0;
  double c2_emp = 1.0;
  double m_norm = 0.0;
  double mdag_min_sv = 0.0;
  double mdag_bound = 0.0;
  bool mdag_bound_vacuous = true;
  double S_norm = 0.0;
  double f_norm = 0.0;
  GapResult gap;
  double fm_identity_residual = 0.0;
  bool m_norm_bound_ok = false;    ///< ||m|| <= 2 C1
  bool mdag_bound_ok = false;    ///< |m^dag| >= (d - C1 C2)/(C2 sqrt d) on F^+
  bool S_bound_ok = false;       ///< ||S|| <= C1 C2
  bool f_bound_ok = false;       ///< ||f|| <= C2 sqrt d
  bool vacuum_kernel_ok = false;
  bool gap_positive = false;
  bool triangle_ok = false;      ///< gap >= min_sv(m^dag) - ||m|| when positive
  std::vector<JNorms> j_levels;
  std::vector<LevelSingularValues> m_levels;
  std::vector<LevelSingularValues> mdag_levels;
};

/// Runs every spectral check for one truncated space.
inline SpectralReport spectral_report(const TruncatedFock& space, const Tolerances& tol = {},
                                      const EigenOptions& opt = {}) {
  if (space.max_level() < 2) throw InvalidInput("spectral analysis needs N >= 2");
  SpectralReport r;
  r.q = space.q();
  r.d = space.d();
  r.N = space.max_level();

  const auto constants = empirical_constants(space, opt);
  r.c1_emp = constants.c1;
  r.c2_emp = constants.c2;
  r.j_levels = constants.per_level;

  r.m_levels = level_singular_values(build_m(space), space, 1, r.N, opt);
  r.m_norm = max_of(r.m_levels);
  r.mdag_levels = level_singular_values(build_mdag(space), space, 1, r.N - 1, opt);
  r.mdag_min_sv = min_of(r.mdag_levels);

  r.S_norm = max_of(level_singular_values(build_S(space), space, 1, r.N, opt));
  r.f_norm = max_of(level_singular_values(build_f(space), space, 1, r.N, opt));
  r.fm_identity_residual = verify_fm_identity(space);

  r.gap = gap(space, opt);

  const double slack = tol.inequality;
  r.m_norm_bound_ok = r.m_norm <= 2.0 * r.c1_emp + slack;
  r.mdag_bound = mdag_lower_bound(r.d, r.c1_emp, r.c2_emp);
  r.mdag_bound_vacuous = r.mdag_bound <= 0.0;
  r.mdag_bound_ok = r.mdag_bound_vacuous || r.mdag_min_sv >= r.mdag_bound - slack;
  r.S_bound_ok = r.S_norm <= r.c1_emp * r.c2_emp + slack;
  r.f_bound_ok = r.f_norm <= r.c2_emp * std::sqrt(static_cast<double>(r.d)) + slack;
  r.vacuum_kernel_ok = r.gap.vacuum_diagonal < tol.kernel && r.gap.vacuum_row_norm < tol.kernel;
  r.gap_positive = r.gap.min_eigenvalue > slack;
  const double lower = r.mdag_min_sv - r.m_norm;
  r.triangle_ok = lower <= 0.0 || r.gap.gap >= lower - slack;
  return r;
}

// ---------------------------------------------------------------------------
// Threshold d0

enum class ThresholdMode { empirical_constants, analytic_c1_only };

inline const char* to_string(ThresholdMode m) {
  return m == ThresholdMode::empirical_constants ? "empirical-constants" : "analytic-C1-only";
}

struct ThresholdReport {
  double q = 0.0;
  double c1 = 1.0;
  double c2 = 1.0;
  std::size_t d0 = 0;
  ThresholdMode mode = ThresholdMode::empirical_constants;
  std::size_t probe_d = 0;
  std::size_t probe_N = 0;
};

inline constexpr std::size_t kThresholdScanCap = 1'000'000;

/// Least d >= 1 with (d - C1 C2)/(C2 sqrt d) > 2 C1, by direct scan.
inline std::size_t threshold_from_constants(double c1, double c2,
                                            std::size_t cap = kThresholdScanCap) {
  if (!(c1 > 0.0) || !(c2 > 0.0) || !std::isfinite(c1) || !std::isfinite(c2)) {
    throw InvalidInput("threshold constants must be finite and positive");
  }
  for (std::size_t d = 1; d <= cap; ++d) {
    if (mdag_lower_bound(d, c1, c2) > 2.0 * c1) return d;
  }
  throw ResourceLimit("no d satisfies the threshold inequality", cap);
}

/// Probe space for the empirical constants. For q < 0 the level-n maxima
/// need words with n distinct letters, hence d = N.
struct ProbeOptions {
  std::size_t d = 4;
  std::size_t N = 4;
};

using SpaceFactory = std::function<TruncatedFock(double, std::size_t, std::size_t)>;

inline SpaceFactory default_space_factory() {
  return [](double q, std::size_t d, std::size_t N) { return TruncatedFock(q, d, N); };
}

inline ThresholdReport d0_threshold(double q, ThresholdMode mode, const ProbeOptions& probe = {},
                                    const EigenOptions& opt = {},
                                    const SpaceFactory& factory = default_space_factory()) {
  validate_q(q);
  ThresholdReport r;
  r.q = q;
  r.mode = mode;
  r.probe_d = probe.d;
  r.probe_N = probe.N;
  const auto constants = empirical_constants(factory(q, probe.d, probe.N), opt);
  r.c1 = mode == ThresholdMode::empirical_constants ? constants.c1 : analytic_c1(q);
  r.c2 = constants.c2;
  r.d0 = threshold_from_constants(r.c1, r.c2);
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepPoint {
  double q = 0.0;
  std::size_t d = 1;
  std::size_t N = 2;
};

struct SweepRow {
  SweepPoint point;
  bool ok = false;
  std::string error;
  ErrorKind error_kind = ErrorKind::numeric_failure;
  std::optional<SpectralReport> report;
};

/// Full report at every grid point; failures are recorded per row and the
/// sweep carries on.
inline std::vector<SweepRow> gap_vs_bound_sweep(const std::vector<double>& qs,
                                                const std::vector<std::size_t>& ds,
                                                const std::vector<std::size_t>& Ns,
                                                const Tolerances& tol = {},
                                                const EigenOptions& opt = {},
                                                const SpaceFactory& factory = default_space_factory()) {
  std::vector<SweepRow> rows;
  for (double q : qs) {
    for (auto d : ds) {
      for (auto N : Ns) {
        SweepRow row;
        row.point = {q, d, N};
        try {
          row.report = spectral_report(factory(q, d, N), tol, opt);
          row.ok = true;
        } catch (const Error& e) {
          row.error = e.what();
          row.error_kind = e.kind();
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

}  // namespace qfock
