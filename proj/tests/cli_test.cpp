#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qfock/cli.hpp"

namespace qfock {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            (std::string("qfock_cli_test_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Runs the qfock executable and returns its exit status; stdout goes to `out`.
int run_cli(const std::string& args, const fs::path& out) {
  const std::string cmd = std::string(QFOCK_CLI_PATH) + " " + args + " > " + out.string() + " 2> " +
                          out.string() + ".err";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

RunConfig config(double q, std::size_t d, std::size_t N) {
  RunConfig c;
  c.q = q;
  c.d = d;
  c.N = N;
  return c;
}

TEST(Config, Validation) {
  EXPECT_TRUE(validate(config(0.0, 2, 3)).empty());
  EXPECT_THROW(validate(config(1.0, 2, 3)), InvalidInput);
  EXPECT_THROW(validate(config(-1.0, 2, 3)), InvalidInput);
  EXPECT_THROW(validate(config(0.0, 2, 1)), InvalidInput);
  EXPECT_THROW(validate(config(0.0, 0, 3)), InvalidInput);
  EXPECT_EQ(validate(config(0.99, 2, 3)).size(), 1u);
  EXPECT_EQ(validate(config(-0.995, 2, 3)).size(), 1u);
  auto bad_tol = config(0.0, 2, 3);
  bad_tol.tol.identity = 0.0;
  EXPECT_THROW(validate(bad_tol), InvalidInput);
  auto bad_format = config(0.0, 2, 3);
  bad_format.format = "xml";
  EXPECT_THROW(validate(bad_format), InvalidInput);
}

TEST(Config, JsonRoundTripAndOverlay) {
  RunConfig c = config(-0.25, 3, 4);
  c.tol.inequality = 1e-7;
  c.q_grid = {0.1, 0.2};
  c.threshold_mode = ThresholdMode::analytic_c1_only;
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));

  const auto partial = config_from_json(Json{{"d", 5}, {"tolerances", {{"kernel", 1e-11}}}}, c);
  EXPECT_EQ(partial.d, 5u);
  EXPECT_EQ(partial.q, -0.25);
  EXPECT_EQ(partial.tol.kernel, 1e-11);
  EXPECT_EQ(partial.tol.inequality, 1e-7);

  EXPECT_THROW(config_from_json(Json{{"qq", 0.1}}), InvalidInput);
  EXPECT_THROW(config_from_json(Json{{"tolerances", {{"identiy", 1e-3}}}}), InvalidInput);
  EXPECT_THROW(config_from_json(Json{{"q", "zero"}}), InvalidInput);
  EXPECT_THROW(config_from_json(Json{{"threshold", {{"mode", "closed-form"}}}}), InvalidInput);
}

TEST(Verify, FreeCasePasses) {
  Session s(config(0.0, 2, 3));
  const auto out = cmd_verify(s);
  EXPECT_EQ(out.exit_code, 0);
  EXPECT_TRUE(out.report["result"]["ok"].get<bool>());
  EXPECT_EQ(out.report["result"]["checks"].size(), 5u);
  for (const auto& ch : out.report["result"]["checks"]) {
    EXPECT_LT(ch["residual"].get<double>(), ch["threshold"].get<double>()) << ch["check"];
  }
  EXPECT_EQ(out.report["format_version"], kReportFormatVersion);
  EXPECT_EQ(out.report["config"]["q"], 0.0);
}

TEST(Verify, MomentOrderRespectsBudgetAndTruncation) {
  EXPECT_EQ(verify_moment_order(config(0.0, 2, 3)), 6u);
  EXPECT_EQ(verify_moment_order(config(0.0, 2, 2)), 4u);
  EXPECT_EQ(verify_moment_order(config(0.0, 6, 4)), 4u);
  auto tight = config(0.3, 3, 3);
  tight.tol.identity = 1e-30;  // below double rounding: some residual must exceed it
  Session s(tight);
  EXPECT_EQ(cmd_verify(s).exit_code, 1);
}

TEST(Gap, ReportFields) {
  Session s(config(0.0, 6, 3));
  const auto out = cmd_gap(s);
  EXPECT_EQ(out.exit_code, 0);
  const auto& r = out.report["result"]["report"];
  EXPECT_GT(r["gap"]["gap"].get<double>(), 0.0);
  EXPECT_LT(r["gap"]["vacuum_diagonal"].get<double>(), 1e-12);
  EXPECT_TRUE(r["flags"]["gap_positive"].get<bool>());
  EXPECT_NEAR(r["mdag_bound"].get<double>(), 5.0 / std::sqrt(6.0), 1e-12);
}

TEST(D0, CsvRows) {
  auto c = config(0.0, 2, 3);
  c.format = "csv";
  Session s(c);
  EXPECT_EQ(cmd_d0(s, {}).text, "q,C1,C2,d0\n");
  const auto text = cmd_d0(s, {0.0}).text;
  EXPECT_EQ(text, "q,C1,C2,d0\n0.0,1.0,1.0,6\n");
}

TEST(Sweep, GridRowsAndPartialFailure) {
  auto c = config(0.0, 2, 3);
  c.q_grid = {-0.3, 0.0, 0.3};
  c.d_grid = {1, 2};
  c.N_grid = {2, 3};
  c.format = "csv";
  Session s(c);
  const auto out = cmd_sweep(s);
  EXPECT_EQ(out.exit_code, 0);
  EXPECT_EQ(out.report["result"]["points"], 12u);
  EXPECT_EQ(count_lines(out.text), 13u);
  EXPECT_EQ(out.text.substr(0, out.text.find('\n')), kSweepCsvHeader);

  auto mixed = config(0.0, 2, 3);
  mixed.d_grid = {2, 100};
  Session sm(mixed);
  const auto partial = cmd_sweep(sm);
  EXPECT_EQ(partial.exit_code, 0);
  EXPECT_EQ(partial.report["result"]["failures"], 1u);

  auto hopeless = config(0.0, 2, 3);
  hopeless.d_grid = {100};
  Session sh(hopeless);
  EXPECT_EQ(cmd_sweep(sh).exit_code, 4);
}

TEST(Sweep, CsvColumnCountIsUniform) {
  auto c = config(0.0, 2, 3);
  c.d_grid = {2, 100};
  c.format = "csv";
  Session s(c);
  std::istringstream lines(cmd_sweep(s).text);
  std::string line;
  std::size_t expected = 0;
  while (std::getline(lines, line)) {
    const auto commas = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
    if (expected == 0) expected = commas;
    EXPECT_EQ(commas, expected) << line;
  }
}

TEST(Sweep, WarmCacheSkipsAssemblyAndResumes) {
  TempDir tmp;
  auto c = config(0.0, 2, 3);
  c.q_grid = {0.0, 0.5};
  c.N_grid = {2, 3};
  c.cache_dir = tmp.path().string();

  Session cold(c);
  const auto first = cmd_sweep(cold);
  EXPECT_GT(first.report["timing"]["levels_built"].get<std::size_t>(), 0u);
  EXPECT_EQ(first.report["timing"]["sweep_points_resumed"], 0u);

  Session warm(c);
  const auto second = cmd_sweep(warm);
  EXPECT_EQ(second.report["timing"]["levels_built"], 0u);
  EXPECT_EQ(second.report["timing"]["gram_assembly_seconds"], 0.0);
  EXPECT_EQ(second.report["timing"]["sweep_points_resumed"], 4u);
  EXPECT_EQ(without_timing(first.report), without_timing(second.report));

  // An interrupted sweep: drop one completed point and the levels it needs.
  fs::remove(sweep_point_path(c, 0.5, 2, 3));
  fs::remove(level_cache_path(c.cache_dir, 0.5, 2, 3));
  Session resumed(c);
  const auto third = cmd_sweep(resumed);
  EXPECT_EQ(third.report["timing"]["sweep_points_resumed"], 3u);
  EXPECT_EQ(third.report["timing"]["levels_built"], 1u);
  EXPECT_EQ(without_timing(first.report).dump(), without_timing(third.report).dump());
}

TEST(Determinism, ColdAndWarmPayloadsMatch) {
  TempDir tmp;
  auto c = config(-0.4, 3, 3);
  Session plain(c);
  const auto a = cmd_gap(plain);
  c.cache_dir = tmp.path().string();
  Session cold(c);
  Session warm(c);
  const auto b = cmd_gap(cold);
  const auto w = cmd_gap(warm);
  EXPECT_EQ(without_timing(b.report).dump(), without_timing(w.report).dump());
  EXPECT_EQ(a.report["result"].dump(), b.report["result"].dump());
  c.format = "csv";
  Session csv1(c), csv2(c);
  EXPECT_EQ(cmd_gap(csv1).text, cmd_gap(csv2).text);
}

TEST(Moments, SingleAndExhaustive) {
  Session s(config(0.3, 2, 3));
  const auto one = cmd_moments(s, 6, {1, 2, 1, 2});
  EXPECT_EQ(one.exit_code, 0);
  EXPECT_NEAR(one.report["result"]["moment"]["wick"].get<double>(), 0.3, 1e-15);
  EXPECT_EQ(one.report["result"]["moment"]["partitions"].size(), 1u);
  const auto all = cmd_moments(s, 6, {});
  EXPECT_EQ(all.exit_code, 0);
  EXPECT_EQ(all.report["result"]["checked"], 127u);
  EXPECT_THROW(cmd_moments(s, 8, {}), TruncationInsufficient);
}

TEST(Executable, ExitCodes) {
  TempDir tmp;
  const auto out = tmp.path() / "out.txt";
  EXPECT_EQ(run_cli("verify --q 0 --d 2 --N 3", out), 0);
  EXPECT_TRUE(Json::parse(slurp(out))["result"]["ok"].get<bool>());
  EXPECT_EQ(run_cli("verify --q 1.0 --d 2 --N 3", out), 3);
  EXPECT_NE(slurp(out.string() + ".err").find("strictly inside"), std::string::npos);
  EXPECT_EQ(run_cli("verify --q 0 --d 2 --N 1", out), 3);
  EXPECT_EQ(run_cli("gap --q 0 --d 2 --N 3 --format xml", out), 3);
  EXPECT_EQ(run_cli("frobnicate", out), 3);
  EXPECT_EQ(run_cli("gap --q 0 --d 100 --N 2", out), 4);
  EXPECT_EQ(run_cli("moments --q 0 --d 2 --N 2 --order 6", out), 3);
  EXPECT_EQ(run_cli("moments --q=-0.5 --d 2 --N 3 --indices 1,2,1,2", out), 0);
  EXPECT_EQ(run_cli("sweep --help", out), 0);
  EXPECT_NE(slurp(out).find("C1_emp"), std::string::npos);
}

TEST(Executable, ConfigFileAndFlagOverride) {
  TempDir tmp;
  const auto cfg = tmp.path() / "run.json";
  const auto out = tmp.path() / "out.txt";
  std::ofstream(cfg) << R"({"q": 0.99, "d": 1, "N": 2, "format": "csv"})";
  EXPECT_EQ(run_cli("verify --config " + cfg.string(), out), 0);
  EXPECT_NE(slurp(out.string() + ".err").find("high-condition"), std::string::npos);
  EXPECT_EQ(slurp(out).substr(0, 5), "check");

  EXPECT_EQ(run_cli("verify --config " + cfg.string() + " --format json --q 0.2", out), 0);
  const auto report = Json::parse(slurp(out));
  EXPECT_EQ(report["config"]["q"], 0.2);
  EXPECT_EQ(report["config"]["d"], 1);

  std::ofstream(cfg) << R"({"q": 1.0})";
  EXPECT_EQ(run_cli("verify --config " + cfg.string(), out), 3);
  std::ofstream(cfg) << R"({"q": 0.1, "colour": "blue"})";
  EXPECT_EQ(run_cli("verify --config " + cfg.string(), out), 3);
}

TEST(Executable, CorruptedCacheIsRebuilt) {
  TempDir tmp;
  const auto cache = tmp.path() / "cache";
  const auto out = tmp.path() / "out.json";
  const std::string args = "verify --q 0.3 --d 2 --N 3 --cache-dir " + cache.string() + " --out " + out.string();
  ASSERT_EQ(run_cli(args, tmp.path() / "stdout.txt"), 0);
  const auto cold = without_timing(Json::parse(slurp(out)));

  const auto victim = level_cache_path(cache, 0.3, 2, 3);
  ASSERT_TRUE(fs::exists(victim));
  {
    std::fstream f(victim, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-3, std::ios::end);
    f.put('\x7f');
  }
  EXPECT_EQ(run_cli(args, tmp.path() / "stdout.txt"), 0);
  EXPECT_NE(slurp(tmp.path() / "stdout.txt.err").find("checksum"), std::string::npos);
  const auto rebuilt = Json::parse(slurp(out));
  EXPECT_EQ(rebuilt["timing"]["cache_corrupt"], 1u);
  EXPECT_EQ(rebuilt["timing"]["levels_built"], 1u);
  EXPECT_EQ(without_timing(rebuilt), cold);
}

TEST(Executable, SweepGridFromFlags) {
  TempDir tmp;
  const auto out = tmp.path() / "sweep.csv";
  EXPECT_EQ(run_cli("sweep --q-grid=-0.3,0,0.3 --d-grid 1,2 --N-grid 2,3 --format csv", out), 0);
  EXPECT_EQ(count_lines(slurp(out)), 13u);
  EXPECT_EQ(run_cli("d0 --q-grid \"\" --format csv", out), 0);
  EXPECT_EQ(slurp(out), "q,C1,C2,d0\n");
  EXPECT_EQ(run_cli("d0 --q 0 --format csv", out), 0);
  EXPECT_EQ(slurp(out), "q,C1,C2,d0\n0.0,1.0,1.0,6\n");
}

}  // namespace
}  // namespace qfock
