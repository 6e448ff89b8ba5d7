#pragma once

// Run configuration and the JSON/CSV report formats.
//
// Every JSON report is an envelope
//   { "format_version", "command", "config", "warnings", "result", "timing" }
// where "timing" holds wall-clock, memory and cache statistics and is the only
// part allowed to differ between reruns of the same configuration.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qfock/errors.hpp"
#include "qfock/oracle.hpp"
#include "qfock/spectral.hpp"

namespace qfock {

using Json = nlohmann::ordered_json;

inline constexpr int kReportFormatVersion = 1;

/// |q| at or above this is accepted but reported as high-condition.
inline constexpr double kHighConditionQ = 0.99;

struct RunConfig {
  double q = 0.0;
  std::size_t d = 2;
  std::size_t N = 3;
  Tolerances tol;
  std::size_t dense_cutoff = 3000;
  std::size_t max_iterations = 2000;
  std::size_t max_level_dim = kDefaultMaxLevelDim;
  std::string cache_dir;
  std::string format = "json";
  std::size_t moment_order = 6;
  std::size_t moment_budget = 20000;  ///< max index tuples checked by verify
  ThresholdMode threshold_mode = ThresholdMode::empirical_constants;
  ProbeOptions probe;
  std::vector<double> q_grid;
  std::vector<std::size_t> d_grid;
  std::vector<std::size_t> N_grid;

  EigenOptions eigen() const {
    EigenOptions e;
    e.dense_cutoff = dense_cutoff;
    e.max_iterations = max_iterations;
    e.relative_tolerance = tol.eigen_residual;
    return e;
  }
  FockOptions fock() const { return {max_level_dim}; }
};

inline ThresholdMode parse_threshold_mode(const std::string& s) {
  if (s == to_string(ThresholdMode::empirical_constants)) return ThresholdMode::empirical_constants;
  if (s == to_string(ThresholdMode::analytic_c1_only)) return ThresholdMode::analytic_c1_only;
  throw InvalidInput("unknown threshold mode '" + s + "'");
}

/// Throws InvalidInput on a bad config; returns warnings for accepted but
/// suspicious values.
inline std::vector<std::string> validate(const RunConfig& c) {
  validate_q(c.q);
  for (double q : c.q_grid) validate_q(q);
  if (c.d < 1) throw InvalidInput("d must be at least 1");
  if (c.N < 2) throw InvalidInput("N must be at least 2");
  for (auto d : c.d_grid)
    if (d < 1) throw InvalidInput("d-grid entries must be at least 1");
  for (auto N : c.N_grid)
    if (N < 2) throw InvalidInput("N-grid entries must be at least 2");
  for (double t : {c.tol.identity, c.tol.inequality, c.tol.eigen_residual, c.tol.kernel}) {
    if (!(t > 0.0) || !std::isfinite(t)) throw InvalidInput("tolerances must be finite and positive");
  }
  if (c.dense_cutoff == 0 || c.max_iterations == 0 || c.max_level_dim == 0) {
    throw InvalidInput("eigensolver cutoff, iteration budget and level budget must be positive");
  }
  if (c.format != "json" && c.format != "csv") throw InvalidInput("format must be json or csv");
  if (c.probe.d < 1 || c.probe.N < 1) throw InvalidInput("probe d and N must be positive");
  std::vector<std::string> warnings;
  auto flag = [&](double q) {
    if (std::abs(q) >= kHighConditionQ) {
      warnings.push_back("high-condition: |q| = " + Json(std::abs(q)).dump() +
                         " >= 0.99, Gram matrices are nearly singular");
    }
  };
  flag(c.q);
  for (double q : c.q_grid) flag(q);
  return warnings;
}

inline Json to_json(const RunConfig& c) {
  return Json{
      {"q", c.q},
      {"d", c.d},
      {"N", c.N},
      {"tolerances",
       {{"identity", c.tol.identity},
        {"inequality", c.tol.inequality},
        {"eigen_residual", c.tol.eigen_residual},
        {"kernel", c.tol.kernel}}},
      {"eigensolver", {{"dense_cutoff", c.dense_cutoff}, {"max_iterations", c.max_iterations}}},
      {"max_level_dim", c.max_level_dim},
      {"cache_dir", c.cache_dir},
      {"format", c.format},
      {"moments", {{"order", c.moment_order}, {"budget", c.moment_budget}}},
      {"threshold", {{"mode", to_string(c.threshold_mode)}, {"probe_d", c.probe.d}, {"probe_N", c.probe.N}}},
      {"grid", {{"q", c.q_grid}, {"d", c.d_grid}, {"N", c.N_grid}}},
  };
}

namespace detail {

template <class T>
void take(const Json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("config " + where + key + ": " + e.what());
  }
}

inline void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw InvalidInput("config " + where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw InvalidInput("unknown config key '" + where + k + "'");
  }
}

}  // namespace detail

/// Overlays the keys present in `j` onto `base`.
inline RunConfig config_from_json(const Json& j, RunConfig base = {}) {
  using detail::take;
  detail::reject_unknown(j, {"q", "d", "N", "tolerances", "eigensolver", "max_level_dim", "cache_dir",
                             "format", "moments", "threshold", "grid"},
                         "");
  take(j, "q", base.q, "");
  take(j, "d", base.d, "");
  take(j, "N", base.N, "");
  take(j, "max_level_dim", base.max_level_dim, "");
  take(j, "cache_dir", base.cache_dir, "");
  take(j, "format", base.format, "");
  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    detail::reject_unknown(t, {"identity", "inequality", "eigen_residual", "kernel"}, "tolerances.");
    take(t, "identity", base.tol.identity, "tolerances.");
    take(t, "inequality", base.tol.inequality, "tolerances.");
    take(t, "eigen_residual", base.tol.eigen_residual, "tolerances.");
    take(t, "kernel", base.tol.kernel, "tolerances.");
  }
  if (j.contains("eigensolver")) {
    const auto& e = j["eigensolver"];
    detail::reject_unknown(e, {"dense_cutoff", "max_iterations"}, "eigensolver.");
    take(e, "dense_cutoff", base.dense_cutoff, "eigensolver.");
    take(e, "max_iterations", base.max_iterations, "eigensolver.");
  }
  if (j.contains("moments")) {
    const auto& m = j["moments"];
    detail::reject_unknown(m, {"order", "budget"}, "moments.");
    take(m, "order", base.moment_order, "moments.");
    take(m, "budget", base.moment_budget, "moments.");
  }
  if (j.contains("threshold")) {
    const auto& t = j["threshold"];
    detail::reject_unknown(t, {"mode", "probe_d", "probe_N"}, "threshold.");
    std::string mode = to_string(base.threshold_mode);
    take(t, "mode", mode, "threshold.");
    base.threshold_mode = parse_threshold_mode(mode);
    take(t, "probe_d", base.probe.d, "threshold.");
    take(t, "probe_N", base.probe.N, "threshold.");
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    detail::reject_unknown(g, {"q", "d", "N"}, "grid.");
    take(g, "q", base.q_grid, "grid.");
    take(g, "d", base.d_grid, "grid.");
    take(g, "N", base.N_grid, "grid.");
  }
  return base;
}

inline RunConfig load_config_file(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("config file " + path + ": " + e.what());
  }
  return config_from_json(j, std::move(base));
}

// ---------------------------------------------------------------------------
// Result payloads

/// Non-finite values become null so the output stays valid JSON.
inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const JNorms& j) {
  return {{"level", j.level}, {"left", num(j.left)}, {"left_inverse", num(j.left_inverse)},
          {"right", num(j.right)}, {"right_inverse", num(j.right_inverse)}};
}

inline Json to_json(const LevelSingularValues& s) {
  return {{"level", s.level}, {"max_sv", num(s.max_sv)}, {"min_sv", num(s.min_sv)}};
}

template <class T>
Json array_of(const std::vector<T>& v) {
  Json a = Json::array();
  for (const auto& x : v) a.push_back(to_json(x));
  return a;
}

inline Json to_json(const SpectralReport& r) {
  return {
      {"q", r.q},
      {"d", r.d},
      {"N", r.N},
      {"C1_emp", num(r.c1_emp)},
      {"C2_emp", num(r.c2_emp)},
      {"m_norm", num(r.m_norm)},
      {"mdag_min_sv", num(r.mdag_min_sv)},
      {"mdag_bound", num(r.mdag_bound)},
      {"mdag_bound_vacuous", r.mdag_bound_vacuous},
      {"S_norm", num(r.S_norm)},
      {"f_norm", num(r.f_norm)},
      {"fm_identity_residual", num(r.fm_identity_residual)},
      {"gap",
       {{"gap", num(r.gap.gap)},
        {"min_eigenvalue", num(r.gap.min_eigenvalue)},
        {"vacuum_diagonal", num(r.gap.vacuum_diagonal)},
        {"vacuum_row_norm", num(r.gap.vacuum_row_norm)},
        {"dimension", r.gap.dimension}}},
      {"flags",
       {{"m_norm_bound", r.m_norm_bound_ok},
        {"mdag_lower_bound", r.mdag_bound_ok},
        {"S_bound", r.S_bound_ok},
        {"f_bound", r.f_bound_ok},
        {"vacuum_kernel", r.vacuum_kernel_ok},
        {"gap_positive", r.gap_positive},
        {"triangle", r.triangle_ok}}},
      {"levels", {{"j", array_of(r.j_levels)}, {"m", array_of(r.m_levels)}, {"mdag", array_of(r.mdag_levels)}}},
  };
}

/// True when every inequality and identity in the report holds. Positivity of
/// the gap is reported but is not a claim outside d >= d0.
inline bool report_consistent(const SpectralReport& r, const Tolerances& tol) {
  return r.m_norm_bound_ok && r.mdag_bound_ok && r.S_bound_ok && r.f_bound_ok && r.vacuum_kernel_ok &&
         r.triangle_ok && r.fm_identity_residual < tol.identity;
}

inline Json to_json(const ThresholdReport& r) {
  return {{"q", r.q}, {"C1", num(r.c1)}, {"C2", num(r.c2)}, {"d0", r.d0},
          {"mode", to_string(r.mode)}, {"probe_d", r.probe_d}, {"probe_N", r.probe_N}};
}

inline Json to_json(const PairPartition& p) {
  Json a = Json::array();
  for (const auto& [x, y] : p.pairs()) a.push_back(Json::array({x, y}));
  return a;
}

inline Json to_json(const MomentMismatch& m) {
  return {{"indices", m.query.indices}, {"wick", num(m.wick)}, {"matrix", num(m.matrix)},
          {"difference", num(std::abs(m.wick - m.matrix))}, {"partitions", array_of(m.partitions)}};
}

inline Json to_json(const MomentComparison& c) {
  return {{"q", c.q},
          {"d", c.d},
          {"max_order", c.max_order},
          {"checked", c.checked},
          {"max_abs_difference", num(c.max_abs_difference)},
          {"tolerance", c.tolerance},
          {"ok", c.ok()},
          {"mismatches", array_of(c.mismatches)}};
}

inline Json sweep_row_json(const SweepRow& row, const Tolerances& tol) {
  Json j{{"q", row.point.q}, {"d", row.point.d}, {"N", row.point.N}, {"ok", row.ok}};
  if (row.ok) {
    j["consistent"] = report_consistent(*row.report, tol);
    j["report"] = to_json(*row.report);
  } else {
    j["error"] = row.error;
  }
  return j;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_number(const Json& v) { return v.is_null() ? "" : v.dump(); }

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline constexpr const char* kSweepCsvHeader =
    "q,d,N,ok,consistent,C1_emp,C2_emp,m_norm,mdag_min_sv,mdag_bound,S_norm,f_norm,gap,"
    "gap_min_eigenvalue,vacuum_row_norm,m_norm_bound,mdag_lower_bound,S_bound,f_bound,"
    "vacuum_kernel,gap_positive,triangle,error";

inline constexpr const char* kSweepCsvHelp =
    "Sweep CSV columns: q, d, N; ok (point computed); consistent (every bound and identity "
    "holds); C1_emp, C2_emp (empirical inclusion constants); m_norm; mdag_min_sv and "
    "mdag_bound (its lower bound); S_norm; f_norm; gap (sqrt of gap_min_eigenvalue); "
    "vacuum_row_norm; one 0/1 column per check flag; error (message for failed points).";

inline constexpr const char* kThresholdCsvHeader = "q,C1,C2,d0";

inline std::string sweep_csv_line(const Json& row) {
  std::ostringstream s;
  s << csv_number(row["q"]) << ',' << row["d"].get<std::size_t>() << ',' << row["N"].get<std::size_t>() << ','
    << (row["ok"].get<bool>() ? 1 : 0) << ',';
  if (!row["ok"].get<bool>()) {
    s << std::string(18, ',') << csv_escape(row["error"].get<std::string>());
    return s.str();
  }
  const auto& r = row["report"];
  const auto& f = r["flags"];
  s << (row["consistent"].get<bool>() ? 1 : 0);
  for (const char* k : {"C1_emp", "C2_emp", "m_norm", "mdag_min_sv", "mdag_bound", "S_norm", "f_norm"}) {
    s << ',' << csv_number(r[k]);
  }
  s << ',' << csv_number(r["gap"]["gap"]) << ',' << csv_number(r["gap"]["min_eigenvalue"]) << ','
    << csv_number(r["gap"]["vacuum_row_norm"]);
  for (const char* k :
       {"m_norm_bound", "mdag_lower_bound", "S_bound", "f_bound", "vacuum_kernel", "gap_positive", "triangle"}) {
    s << ',' << (f[k].get<bool>() ? 1 : 0);
  }
  s << ',';
  return s.str();
}

inline std::string sweep_csv(const std::vector<Json>& rows) {
  std::string out = std::string(kSweepCsvHeader) + "\n";
  for (const auto& r : rows) out += sweep_csv_line(r) + "\n";
  return out;
}

inline std::string threshold_csv(const std::vector<ThresholdReport>& rows) {
  std::string out = std::string(kThresholdCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += csv_number(Json(r.q)) + ',' + csv_number(num(r.c1)) + ',' + csv_number(num(r.c2)) + ',' +
           std::to_string(r.d0) + "\n";
  }
  return out;
}

}  // namespace qfock
