#pragma once

// Command implementations behind the qfock executable. Argument parsing lives
// in tools/qfock.cpp; everything here takes a resolved RunConfig.

#include <sys/resource.h>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qfock/cache.hpp"
#include "qfock/errors.hpp"
#include "qfock/operators.hpp"
#include "qfock/oracle.hpp"
#include "qfock/report.hpp"
#include "qfock/spectral.hpp"

namespace qfock {

struct CommandOutput {
  int exit_code = 0;
  std::string text;  ///< what goes to --out or stdout
  Json report;       ///< JSON envelope (also produced for csv output)
};

inline long peak_rss_kb() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return usage.ru_maxrss;
}

/// Per-invocation state: resolved config, optional level cache and the clock.
class Session {
 public:
  explicit Session(RunConfig config)
      : config_(std::move(config)),
        warnings_(validate(config_)),
        start_(std::chrono::steady_clock::now()) {
    if (!config_.cache_dir.empty()) cache_.emplace(config_.cache_dir);
  }

  const RunConfig& config() const noexcept { return config_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  const std::optional<LevelCache>& cache() const noexcept { return cache_; }

  TruncatedFock space(double q, std::size_t d, std::size_t N) {
    if (cache_) return cache_->load(q, d, N, config_.fock());
    const auto t0 = std::chrono::steady_clock::now();
    TruncatedFock s(q, d, N, config_.fock());
    uncached_assembly_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    uncached_levels_ += N + 1;
    return s;
  }

  SpaceFactory factory() {
    return [this](double q, std::size_t d, std::size_t N) { return space(q, d, N); };
  }

  void note_resumed() { ++resumed_; }

  Json timing() const {
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    Json t{{"seconds", total}, {"peak_rss_kb", peak_rss_kb()}};
    if (cache_) {
      const auto& s = cache_->stats();
      t["gram_assembly_seconds"] = s.assembly_seconds;
      t["levels_built"] = s.levels_built;
      t["cache_hits"] = s.hits;
      t["cache_misses"] = s.misses;
      t["cache_corrupt"] = s.corrupt;
      t["cache_diagnostics"] = cache_->diagnostics();
    } else {
      t["gram_assembly_seconds"] = uncached_assembly_;
      t["levels_built"] = uncached_levels_;
    }
    t["sweep_points_resumed"] = resumed_;
    return t;
  }

  Json envelope(const std::string& command, Json result) const {
    return Json{{"format_version", kReportFormatVersion},
                {"command", command},
                {"config", to_json(config_)},
                {"warnings", warnings_},
                {"result", std::move(result)},
                {"timing", timing()}};
  }

 private:
  RunConfig config_;
  std::vector<std::string> warnings_;
  std::chrono::steady_clock::time_point start_;
  std::optional<LevelCache> cache_;
  double uncached_assembly_ = 0.0;
  std::size_t uncached_levels_ = 0;
  std::size_t resumed_ = 0;
};

inline std::string dump_report(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// verify

/// Largest even moment order within the configured order, the truncation
/// (order <= 2N) and the tuple budget.
inline std::size_t verify_moment_order(const RunConfig& c) {
  std::size_t order = std::min({c.moment_order, 2 * c.N, kMaxMomentOrder});
  auto tuples = [&](std::size_t k) {
    std::size_t total = 0;
    for (std::size_t j = 0; j <= k; ++j) total += ipow(c.d, j);
    return total;
  };
  while (order > 0 && (order % 2 == 1 || tuples(order) > c.moment_budget)) --order;
  return order;
}

inline CommandOutput cmd_verify(Session& session) {
  const auto& c = session.config();
  const auto space = session.space(c.q, c.d, c.N);
  struct Check {
    std::string name;
    double residual;
    double threshold;
  };
  std::vector<Check> checks{
      {"qccr", verify_qccr(space), c.tol.identity},
      {"lr_commutation", verify_lr_commutation(space), c.tol.identity},
      {"adjointness", verify_adjointness(space), c.tol.identity},
      {"fm_identity", verify_fm_identity(space), c.tol.identity},
  };
  const auto order = verify_moment_order(c);
  const auto moments = compare_moments(space, order, c.tol.identity);
  checks.push_back({"moments", moments.max_abs_difference, c.tol.identity});

  bool all = true;
  Json list = Json::array();
  std::string csv = "check,residual,threshold,pass\n";
  for (const auto& ch : checks) {
    const bool pass = ch.residual < ch.threshold;
    all = all && pass;
    list.push_back({{"check", ch.name}, {"residual", num(ch.residual)}, {"threshold", ch.threshold}, {"pass", pass}});
    csv += ch.name + ',' + csv_number(num(ch.residual)) + ',' + csv_number(Json(ch.threshold)) + ',' +
           (pass ? "1" : "0") + "\n";
  }
  all = all && moments.ok();
  Json result{{"ok", all}, {"checks", list}, {"moments", to_json(moments)}};
  CommandOutput out;
  out.exit_code = all ? 0 : exit_code(ErrorKind::verification_failure);
  out.report = session.envelope("verify", std::move(result));
  out.text = c.format == "csv" ? csv : dump_report(out.report);
  return out;
}

// ---------------------------------------------------------------------------
// gap

inline CommandOutput cmd_gap(Session& session) {
  const auto& c = session.config();
  const auto report = spectral_report(session.space(c.q, c.d, c.N), c.tol, c.eigen());
  const bool consistent = report_consistent(report, c.tol);
  SweepRow row;
  row.point = {c.q, c.d, c.N};
  row.ok = true;
  row.report = report;
  const auto row_json = sweep_row_json(row, c.tol);

  CommandOutput out;
  out.exit_code = consistent ? 0 : exit_code(ErrorKind::verification_failure);
  out.report = session.envelope("gap", {{"consistent", consistent}, {"report", row_json["report"]}});
  out.text = c.format == "csv" ? sweep_csv({row_json}) : dump_report(out.report);
  return out;
}

// ---------------------------------------------------------------------------
// d0

inline CommandOutput cmd_d0(Session& session, const std::vector<double>& qs) {
  const auto& c = session.config();
  std::vector<ThresholdReport> rows;
  Json list = Json::array();
  for (double q : qs) {
    rows.push_back(d0_threshold(q, c.threshold_mode, c.probe, c.eigen(), session.factory()));
    list.push_back(to_json(rows.back()));
  }
  CommandOutput out;
  out.report = session.envelope("d0", {{"rows", list}});
  out.text = c.format == "csv" ? threshold_csv(rows) : dump_report(out.report);
  return out;
}

// ---------------------------------------------------------------------------
// sweep

/// Cache key of one sweep point: its coordinates plus every setting that can
/// change the numbers.
inline std::filesystem::path sweep_point_path(const RunConfig& c, double q, std::size_t d, std::size_t N) {
  const auto key = Json{{"format_version", kReportFormatVersion},
                        {"q_bits", q_bits(q)},
                        {"d", d},
                        {"N", N},
                        {"tolerances", to_json(c)["tolerances"]},
                        {"eigensolver", to_json(c)["eigensolver"]},
                        {"max_level_dim", c.max_level_dim}}
                       .dump();
  const auto h = fnv1a64(reinterpret_cast<const std::uint8_t*>(key.data()), key.size());
  return std::filesystem::path(c.cache_dir) / "sweep" /
         ("point_q" + hex64(q_bits(q)) + "_d" + std::to_string(d) + "_N" + std::to_string(N) + "_" + hex64(h) +
          ".json");
}

inline std::optional<Json> load_sweep_point(const std::filesystem::path& path, double q, std::size_t d,
                                            std::size_t N) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    std::ifstream in(path);
    auto j = Json::parse(in);
    if (q_bits(j.at("q").get<double>()) != q_bits(q) || j.at("d").get<std::size_t>() != d ||
        j.at("N").get<std::size_t>() != N || !j.at("ok").get<bool>()) {
      return std::nullopt;
    }
    return j;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline CommandOutput cmd_sweep(Session& session) {
  const auto& c = session.config();
  const auto qs = c.q_grid.empty() ? std::vector<double>{c.q} : c.q_grid;
  const auto ds = c.d_grid.empty() ? std::vector<std::size_t>{c.d} : c.d_grid;
  const auto Ns = c.N_grid.empty() ? std::vector<std::size_t>{c.N} : c.N_grid;
  const bool resumable = !c.cache_dir.empty();

  std::vector<Json> rows;
  std::size_t failures = 0;
  std::optional<ErrorKind> first_failure;
  for (double q : qs) {
    for (auto d : ds) {
      for (auto N : Ns) {
        std::filesystem::path path;
        if (resumable) {
          path = sweep_point_path(c, q, d, N);
          if (auto done = load_sweep_point(path, q, d, N)) {
            session.note_resumed();
            rows.push_back(std::move(*done));
            continue;
          }
        }
        const auto row = gap_vs_bound_sweep({q}, {d}, {N}, c.tol, c.eigen(), session.factory()).front();
        rows.push_back(sweep_row_json(row, c.tol));
        if (!row.ok) {
          ++failures;
          if (!first_failure) first_failure = row.error_kind;
        } else if (resumable) {
          atomic_write_text(path, rows.back().dump() + "\n");
        }
      }
    }
  }
  CommandOutput out;
  if (!rows.empty() && failures == rows.size()) out.exit_code = exit_code(*first_failure);
  Json list = Json::array();
  for (const auto& r : rows) list.push_back(r);
  out.report = session.envelope("sweep", {{"points", rows.size()}, {"failures", failures}, {"rows", list}});
  out.text = c.format == "csv" ? sweep_csv(rows) : dump_report(out.report);
  return out;
}

// ---------------------------------------------------------------------------
// moments

/// Exhaustive comparison up to `order`, or a single moment when `indices` is
/// non-empty.
inline CommandOutput cmd_moments(Session& session, std::size_t order, const std::vector<int>& indices) {
  const auto& c = session.config();
  const auto space = session.space(c.q, c.d, c.N);
  CommandOutput out;
  Json result;
  std::string csv;
  if (!indices.empty()) {
    const MomentQuery query{indices};
    const double w = wick_moment(query, c.q);
    const double m = matrix_moment(query, space);
    const bool ok = std::abs(w - m) <= c.tol.identity;
    result = {{"ok", ok}, {"moment", to_json(MomentMismatch{query, w, m, contributing_partitions(query)})}};
    out.exit_code = ok ? 0 : exit_code(ErrorKind::verification_failure);
    csv = "wick,matrix,difference,ok\n" + csv_number(num(w)) + ',' + csv_number(num(m)) + ',' +
          csv_number(num(std::abs(w - m))) + ',' + (ok ? "1" : "0") + "\n";
  } else {
    const auto cmp = compare_moments(space, order, c.tol.identity);
    result = to_json(cmp);
    out.exit_code = cmp.ok() ? 0 : exit_code(ErrorKind::verification_failure);
    csv = "q,d,max_order,checked,max_abs_difference,ok\n" + csv_number(Json(c.q)) + ',' + std::to_string(c.d) +
          ',' + std::to_string(order) + ',' + std::to_string(cmp.checked) + ',' +
          csv_number(num(cmp.max_abs_difference)) + ',' + (cmp.ok() ? "1" : "0") + "\n";
  }
  out.report = session.envelope("moments", std::move(result));
  out.text = c.format == "csv" ? csv : dump_report(out.report);
  return out;
}

/// Report payload with the timing block removed, for determinism checks.
inline Json without_timing(Json report) {
  report.erase("timing");
  return report;
}

}  // namespace qfock
