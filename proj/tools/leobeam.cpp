// leobeam: run, sweep, validate and oracle subcommands.
// Exit codes: 0 ok, 1 scenario error, 2 solver failure, 64 usage.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "leobeam/oracle.hpp"
#include "leobeam/orchestrator.hpp"
#include "leobeam/scenario_io.hpp"

using namespace leobeam;

namespace {

constexpr int kScenarioError = 1;
constexpr int kSolverFailure = 2;
constexpr int kUsage = 64;

struct Options {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string algorithm = "proposal";
  int threads = 1;
  bool timing = false;
  int resolution = 20;
};

Scenario load(const Options& o) {
  Scenario s = load_scenario(o.scenario);
  if (o.seed) s.seeds = {*o.seed};
  return s;
}

void print_rows(const std::vector<SweepRow>& rows) {
  std::printf("%-9s %2s %3s %5s %-9s %6s %14s %6s %14s %7s %4s\n", "algorithm", "L", "K", "K_thr",
              "layout", "seed", "sum_rate_bps", "served", "alpha_utility", "jfi", "iter");
  for (const auto& r : rows)
    std::printf("%-9s %2d %3d %5d %-9s %6llu %14.6g %6d %14.6g %7.4f %4d\n",
                std::string(to_string(r.algorithm)).c_str(), r.L, r.K, r.K_thr, r.distribution.c_str(),
                static_cast<unsigned long long>(r.seed), r.metrics.sum_rate, r.metrics.served_users,
                r.metrics.sum_alpha_utility, r.metrics.jfi_rate, r.outer_iterations);
}

int cmd_run(const Options& o) {
  Scenario s = load(o);
  s.sweep = SweepConfig{};
  s.sweep.algorithms = {parse_algorithm(o.algorithm)};
  s.seeds = {s.seeds.front()};
  const auto rows = run_sweep(s, o.timing);
  print_rows(rows);
  for (const auto& r : rows)
    if (r.record.violations > 0) {
      for (const auto& v : r.record.violation_log) std::cerr << v << "\n";
      return kSolverFailure;
    }
  if (!o.out.empty()) emit_results(s, rows, o.out);
  return 0;
}

int cmd_sweep(const Options& o) {
  Scenario s = load(o);
  const auto rows = run_sweep(s, o.timing, o.threads);
  print_rows(rows);
  if (!o.out.empty()) emit_results(s, rows, o.out);
  int bad = 0;
  for (const auto& r : rows) bad += r.record.violations;
  return bad > 0 ? kSolverFailure : 0;
}

int cmd_validate(const Options& o) {
  const Scenario s = load(o);
  std::printf("ok %s (hash %s)\n", o.scenario.c_str(), scenario_hash(s).c_str());
  return 0;
}

// Heuristic against exhaustive search, one phase at a time, on the final
// allocation of a proposal run.
int cmd_oracle(const Options& o) {
  const Scenario s = load(o);
  const auto seed = s.seeds.front();
  const Network net = build_network(s, seed);
  FrameworkConfig cfg;
  cfg.algo = s.algorithm;
  cfg.seed = seed;
  RunRecord rec;
  const Allocation a = run_framework(net, cfg, parse_algorithm(o.algorithm), rec);
  const double f = objective_from_rates(net.radio, rate_table(net, a));

  std::string csv = "phase,heuristic,oracle,ratio,states,scenario_hash,seed\n";
  auto row = [&](const char* phase, const OracleResult& r) {
    const double ratio = r.objective > 0 ? f / r.objective : 1.0;
    std::printf("%-6s heuristic %.10g  oracle %.10g  ratio %.6f  states %llu\n", phase, f, r.objective,
                ratio, static_cast<unsigned long long>(r.states));
    csv += std::string(phase) + "," + format_number(f) + "," + format_number(r.objective) + "," +
           format_number(ratio) + "," + std::to_string(r.states) + "," + scenario_hash(s) + "," +
           std::to_string(seed) + "\n";
  };
  row("bdc", exact_bdc(net, a));
  row("sa", exact_sa(net, a));
  row("power", grid_power(net, a, o.resolution));
  if (!o.out.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(o.out, ec);
    if (ec) throw IoError(o.out + ": " + ec.message());
    write_file(std::filesystem::path(o.out) / "oracle.csv", csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beam direction, subchannel and power allocation for multi-beam LEO downlinks"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* c) {
    c->add_option("--scenario", o.scenario, "scenario file (YAML)")->required()->check(CLI::ExistingFile);
    c->add_option("--seed", o.seed, "use this seed instead of the scenario's list");
  };
  auto* run = app.add_subcommand("run", "one framework run");
  common(run);
  run->add_option("--out", o.out, "directory for scenario.yaml, metrics.csv, run_log.jsonl");
  run->add_option("--algorithm", o.algorithm, "proposal, baseline1 or baseline2")
      ->check(CLI::IsMember({"proposal", "baseline1", "baseline2"}));
  run->add_flag("--timing", o.timing, "record wall-clock times (outputs no longer reproducible)");

  auto* sweep = app.add_subcommand("sweep", "all sweep points, seeds and algorithms of the scenario");
  common(sweep);
  sweep->add_option("--out", o.out, "output directory");
  sweep->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  sweep->add_flag("--timing", o.timing, "record wall-clock times");

  auto* validate = app.add_subcommand("validate", "check a scenario file");
  common(validate);

  auto* oracle = app.add_subcommand("oracle", "compare against exhaustive search on a tiny scenario");
  common(oracle);
  oracle->add_option("--out", o.out, "directory for oracle.csv");
  oracle->add_option("--algorithm", o.algorithm)->check(CLI::IsMember({"proposal", "baseline1", "baseline2"}));
  oracle->add_option("--resolution", o.resolution, "power grid steps per beam")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
    if (*validate) return cmd_validate(o);
    if (*oracle) return cmd_oracle(o);
  } catch (const ScenarioError& e) {
    std::cerr << e.what() << "\n";
    return kScenarioError;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kScenarioError;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  }
  return kUsage;
}
