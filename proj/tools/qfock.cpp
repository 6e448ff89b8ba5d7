#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qfock/cli.hpp"

namespace {

using qfock::RunConfig;

struct Flags {
  double q = 0.0;
  std::size_t d = 0;
  std::size_t N = 0;
  std::string config;
  std::string cache_dir;
  std::string format;
  std::string out;
  std::size_t dense_cutoff = 0;
  std::size_t max_iterations = 0;
  std::string q_grid, d_grid, N_grid;
  std::string mode;
  std::size_t probe_d = 0, probe_N = 0;
  std::size_t order = 6;
  std::string indices;
};

template <class T>
std::vector<T> parse_list(const std::string& s, const char* what) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof()) {
      throw qfock::InvalidInput(std::string("cannot parse ") + what + " entry '" + item + "'");
    }
    if constexpr (std::is_unsigned_v<T>) {
      if (item.find('-') != std::string::npos) {
        throw qfock::InvalidInput(std::string(what) + " entries must be non-negative");
      }
    }
    out.push_back(v);
  }
  return out;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--q", f.q, "Deformation parameter, strictly inside (-1, 1)");
  sub->add_option("--d", f.d, "Dimension of the one-particle space");
  sub->add_option("--N", f.N, "Truncation degree (levels 0..N)");
  sub->add_option("--config", f.config, "JSON config file; flags override its values");
  sub->add_option("--cache-dir", f.cache_dir, "Directory for the level cache and resumable sweep points");
  sub->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--out", f.out, "Write the report here instead of stdout");
  sub->add_option("--dense-cutoff", f.dense_cutoff, "Largest dimension solved densely");
  sub->add_option("--max-iterations", f.max_iterations, "Iteration budget of the iterative eigensolver");
}

RunConfig resolve(const CLI::App* sub, const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) c = qfock::load_config_file(f.config);
  auto given = [&](const char* name) { return sub->count(name) > 0; };
  if (given("--q")) c.q = f.q;
  if (given("--d")) c.d = f.d;
  if (given("--N")) c.N = f.N;
  if (given("--cache-dir")) c.cache_dir = f.cache_dir;
  if (given("--format")) c.format = f.format;
  if (given("--dense-cutoff")) c.dense_cutoff = f.dense_cutoff;
  if (given("--max-iterations")) c.max_iterations = f.max_iterations;
  if (sub->get_option_no_throw("--q-grid") && given("--q-grid")) c.q_grid = parse_list<double>(f.q_grid, "--q-grid");
  if (sub->get_option_no_throw("--d-grid") && given("--d-grid")) {
    c.d_grid = parse_list<std::size_t>(f.d_grid, "--d-grid");
  }
  if (sub->get_option_no_throw("--N-grid") && given("--N-grid")) {
    c.N_grid = parse_list<std::size_t>(f.N_grid, "--N-grid");
  }
  if (sub->get_option_no_throw("--mode") && given("--mode")) c.threshold_mode = qfock::parse_threshold_mode(f.mode);
  if (sub->get_option_no_throw("--probe-d") && given("--probe-d")) c.probe.d = f.probe_d;
  if (sub->get_option_no_throw("--probe-N") && given("--probe-N")) c.probe.N = f.probe_N;
  if (sub->get_option_no_throw("--order") && given("--order")) c.moment_order = f.order;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks on truncated q-deformed Fock spaces.\n"
               "Exit codes: 0 success, 1 verification failure, 2 numeric failure, 3 invalid input, "
               "4 resource limit."};
  app.require_subcommand(1);
  Flags f;

  auto* verify = app.add_subcommand("verify", "Check q-CCR, [L,R] = 0, adjointness, f m^dag = d - S and moments");
  add_common(verify, f);

  auto* gap = app.add_subcommand("gap", "Spectral report for one (q, d, N): gap, norms, constants, flags");
  add_common(gap, f);

  auto* d0 = app.add_subcommand("d0", "Threshold dimension per q. CSV columns: q, C1, C2, d0");
  add_common(d0, f);
  d0->add_option("--q-grid", f.q_grid, "Comma-separated q values (empty gives a header-only CSV)");
  d0->add_option("--mode", f.mode, "Constants used for C1")
      ->check(CLI::IsMember({"empirical-constants", "analytic-C1-only"}));
  d0->add_option("--probe-d", f.probe_d, "d of the probe space for the empirical constants");
  d0->add_option("--probe-N", f.probe_N, "N of the probe space for the empirical constants");

  auto* sweep = app.add_subcommand("sweep", std::string("Spectral report over a q x d x N grid. ") +
                                                qfock::kSweepCsvHelp);
  add_common(sweep, f);
  sweep->add_option("--q-grid", f.q_grid, "Comma-separated q values");
  sweep->add_option("--d-grid", f.d_grid, "Comma-separated d values");
  sweep->add_option("--N-grid", f.N_grid, "Comma-separated N values");

  auto* moments = app.add_subcommand("moments", "Compare matrix moments with the pair-partition formula");
  add_common(moments, f);
  moments->add_option("--order", f.order, "Largest order compared exhaustively");
  moments->add_option("--indices", f.indices, "Single moment, e.g. 1,2,1,2");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return qfock::exit_code(qfock::ErrorKind::invalid_input);
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    auto config = resolve(sub, f);
    qfock::Session session(config);
    for (const auto& w : session.warnings()) std::cerr << "warning: " << w << "\n";

    qfock::CommandOutput out;
    if (sub == verify) {
      out = qfock::cmd_verify(session);
    } else if (sub == gap) {
      out = qfock::cmd_gap(session);
    } else if (sub == d0) {
      const auto qs = sub->count("--q-grid") > 0 ? session.config().q_grid : std::vector<double>{session.config().q};
      out = qfock::cmd_d0(session, qs);
    } else if (sub == sweep) {
      out = qfock::cmd_sweep(session);
    } else {
      const auto idx = parse_list<int>(f.indices, "--indices");
      out = qfock::cmd_moments(session, session.config().moment_order, idx);
    }

    if (session.cache()) {
      for (const auto& msg : session.cache()->diagnostics()) std::cerr << "cache: " << msg << ", rebuilt\n";
    }
    if (f.out.empty()) {
      std::cout << out.text;
    } else {
      qfock::atomic_write_text(f.out, out.text);
    }
    return out.exit_code;
  } catch (const qfock::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return qfock::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return qfock::exit_code(qfock::ErrorKind::numeric_failure);
  }
}
