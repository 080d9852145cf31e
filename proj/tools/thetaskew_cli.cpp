// thetaskew command line: simulate, analyze, sweep, null-test, check, oracle regen.
// Exit status: 0 ok, 2 configuration or usage error, 3 compute error, 4 acceptance failure.

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "thetaskew/acceptance.hpp"
#include "thetaskew/config.hpp"
#include "thetaskew/errors.hpp"
#include "thetaskew/fixtures.hpp"
#include "thetaskew/kernels.hpp"
#include "thetaskew/oracle.hpp"
#include "thetaskew/pipeline.hpp"

namespace fs = std::filesystem;
using namespace thetaskew;

namespace {

struct Flags {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool quiet = false;
  bool out_given = false;
};

void info(const Flags& f, const std::string& msg) {
  if (!f.quiet) std::cerr << msg << "\n";
}

config::RunConfig load_config(const Flags& f) {
  if (f.config.empty()) throw ConfigError("", 0, "--config PATH is required");
  auto cfg = config::load(f.config);
  if (f.seed) cfg.override_seed(*f.seed);
  return cfg;
}

std::string today() {
  const std::time_t t = std::time(nullptr);
  char buf[16];
  std::strftime(buf, sizeof buf, "%Y-%m-%d", std::gmtime(&t));
  return buf;
}

int cmd_simulate(const Flags& f) {
  const auto cfg = load_config(f);
  const auto res = pipeline::simulate(cfg);
  pipeline::write_simulate(res, cfg, f.out);
  std::size_t usable = 0;
  for (const auto& r : res.measurement.records) usable += r.usable ? 1 : 0;
  std::string line = "simulate: " + std::to_string(usable) + " usable fringes";
  if (res.estimate) {
    char buf[96];
    std::snprintf(buf, sizeof buf, ", theta_hat = %.6g +- %.3g", res.estimate->theta_hat,
                  res.estimate->std_error);
    line += buf;
  } else {
    line += ", no estimate (" + res.estimate_error + ")";
  }
  info(f, line + "; wrote " + f.out);
  return 0;
}

int cmd_analyze(const Flags& f, const std::string& input) {
  config::AnalysisSpec spec;
  std::string hash = "none";
  if (!f.config.empty()) {
    const auto cfg = load_config(f);
    spec = cfg.analysis;
    hash = cfg.hash();
  }
  const auto p = pipeline::read_pattern(input);
  const auto records = pipeline::analyze_file(p, spec);
  pipeline::write_analysis(records, p, hash, f.out);
  info(f, "analyze: " + std::to_string(records.size()) + " fringes; wrote " + f.out);
  return 0;
}

int cmd_sweep(const Flags& f) {
  const auto cfg = load_config(f);
  const auto res = pipeline::sweep(cfg);
  pipeline::write_sweep(res, cfg, f.out);
  char buf[160];
  std::snprintf(buf, sizeof buf, "sweep: %zu points, K = %.6g, R^2 = %.6f, max deviation %.3g",
                res.fit.points, res.fit.k, res.fit.r2, res.fit.max_rel_dev);
  info(f, std::string(buf) + "; wrote " + f.out);
  return 0;
}

int cmd_null(const Flags& f) {
  const auto cfg = load_config(f);
  const auto res = pipeline::null_test(cfg);
  pipeline::write_null_test(res, cfg, f.out);
  double worst = 0.0;
  for (const auto& r : res.rows) worst = std::max(worst, std::abs(r.result.z_score));
  char buf[128];
  std::snprintf(buf, sizeof buf, "null-test: %zu fringes, max |z| = %.3g", res.rows.size(), worst);
  info(f, std::string(buf) + "; wrote " + f.out);
  return 0;
}

int cmd_check(const Flags& f, const std::vector<int>& only, bool skip_slow) {
  acceptance::Options opt;
  auto ids = only.empty() ? acceptance::all_criteria() : only;
  bool all = true;
  std::string report;
  for (int id : ids) {
    if (skip_slow && acceptance::is_slow(id)) continue;
    const auto r = acceptance::run(id, opt);
    const auto line = acceptance::format(r);
    std::cout << line << std::endl;
    report += line + "\n";
    all = all && r.pass;
  }
  if (f.out_given) {
    fs::create_directories(f.out);
    std::FILE* fp = std::fopen((fs::path(f.out) / "acceptance.txt").string().c_str(), "wb");
    if (fp) {
      std::fputs(report.c_str(), fp);
      std::fclose(fp);
    }
  }
  return all ? 0 : 4;
}

int cmd_regen(const Flags& f, const std::string& path, const std::string& date) {
  const auto records = oracle::regenerate_fixtures(date.empty() ? today() : date);
  const std::string target = path.empty() ? acceptance::default_fixtures_path() : path;
  fs::create_directories(fs::path(target).parent_path());
  fixtures::save(target, records);
  info(f, "oracle regen: " + std::to_string(records.size()) + " records; wrote " + target);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thetaskew: theta-deformed interference skewness toolkit"};
  app.require_subcommand(1);
  Flags flags;
  app.add_option("--config", flags.config, "Run configuration file");
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--seed", flags.seed, "Override the configured seed");
  app.add_option("--threads", flags.threads, "OpenMP threads (0: runtime default)");
  app.add_flag("--quiet", flags.quiet, "Suppress progress messages");

  auto* simulate = app.add_subcommand("simulate", "Simulate, analyze and estimate theta");
  auto* analyze = app.add_subcommand("analyze", "Analyze an existing pattern CSV");
  std::string input;
  analyze->add_option("--input", input, "Pattern CSV with columns x and p")->required();
  auto* sweep = app.add_subcommand("sweep", "Theta x imbalance scaling sweep");
  auto* null = app.add_subcommand("null-test", "Symmetric-noise skewness null test");
  auto* check = app.add_subcommand("check", "Run the acceptance criteria");
  std::vector<int> only;
  bool skip_slow = false;
  check->add_option("--only", only, "Criteria to run (default: all)");
  check->add_flag("--skip-slow", skip_slow, "Skip the slow null-ensemble criterion");
  auto* oracle_cmd = app.add_subcommand("oracle", "Oracle utilities");
  oracle_cmd->require_subcommand(1);
  auto* regen = oracle_cmd->add_subcommand("regen", "Recompute the derived-constants fixtures");
  std::string fixture_path, date;
  regen->add_option("--fixtures", fixture_path, "Fixtures file to write (default: source tree)");
  regen->add_option("--date", date, "Date stamp for the records (default: today, UTC)");
  for (auto* sub : {simulate, analyze, sweep, null, check, oracle_cmd, regen}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  flags.out_given = app.count("--out") > 0;
  try {
    if (flags.threads > 0) kernels::set_threads(flags.threads);
    if (*simulate) return cmd_simulate(flags);
    if (*analyze) return cmd_analyze(flags, input);
    if (*sweep) return cmd_sweep(flags);
    if (*null) return cmd_null(flags);
    if (*check) return cmd_check(flags, only, skip_slow);
    if (*regen) return cmd_regen(flags, fixture_path, date);
  } catch (const ConfigError& e) {
    std::cerr << "thetaskew: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "thetaskew: compute error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
