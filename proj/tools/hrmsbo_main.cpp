// hrmsbo: run HRMS Bayesian-optimization experiments from the command line.
//
// Subcommands:
//   run    - execute an experiment grid described by a plan.json
//   truth  - build and cache a ground-truth model for an objective
//   report - regenerate summary.csv and plotdata/ from records.csv
//   single - one optimization run, result printed to stdout as JSON
//
// Exit codes: 0 success, 2 invalid configuration, 3 I/O failure,
// 4 every run in the grid failed.

#include "hrmsbo/harness.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitBadConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitAllRunsFailed = 4;

int cmd_run(const std::string& plan_path, const std::string& out_dir,
            int parallelism) {
  std::ifstream in(plan_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << plan_path << '\n';
    return kExitIo;
  }
  json plan_json;
  try {
    plan_json = json::parse(in);
  } catch (const json::parse_error& e) {
    std::cerr << "error: invalid plan JSON: " << e.what() << '\n';
    return kExitBadConfig;
  }
  hrmsbo::harness::ExperimentPlan plan;
  try {
    plan = hrmsbo::harness::plan_from_json(plan_json);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: invalid plan: " << e.what() << '\n';
    return kExitBadConfig;
  }

  hrmsbo::harness::GridOptions options;
  options.out_dir = out_dir;
  options.parallelism = parallelism;
  const auto result = hrmsbo::harness::run_grid(plan, options);
  const int total = static_cast<int>(result.records.size());
  std::cerr << "completed " << (total - result.failed_runs) << "/" << total
            << " runs\n";
  if (result.failed_runs == total && total > 0) return kExitAllRunsFailed;
  return kExitOk;
}

int cmd_truth(const std::string& objective_name, int grid, int reps,
              std::uint64_t seed, const std::string& out_dir) {
  const auto& objective = hrmsbo::bench::find_objective(objective_name);
  hrmsbo::bench::GroundTruthOptions options;
  options.grid_per_dim = grid;
  options.reps = reps;
  const auto truth = hrmsbo::bench::build_ground_truth(objective, seed, options);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "error: cannot create " << out_dir << '\n';
    return kExitIo;
  }
  hrmsbo::harness::save_ground_truth(truth, seed, fs::path(out_dir) / "truth.json");
  std::cerr << "ground truth: " << truth.points_used << " points -> "
            << (fs::path(out_dir) / "truth.json").string() << '\n';
  return kExitOk;
}

int cmd_report(const std::string& in_dir) {
  hrmsbo::harness::regenerate_reports(in_dir);
  return kExitOk;
}

int cmd_single(const std::string& objective_name, const std::string& acq_name,
               int rs, int ms, int budget, std::uint64_t seed, int n_seed) {
  const auto& objective = hrmsbo::bench::find_objective(objective_name);
  hrmsbo::opt::HRMSConfig config;
  config.kind = hrmsbo::acq::kind_from_string(acq_name);
  config.rs = rs;
  config.ms = ms;
  config.bounds = objective.bounds;
  config.seed = seed;
  config.n_seed = n_seed;
  config.budget_evals = budget;

  hrmsbo::bench::SyntheticHandle handle(objective);
  const auto result = hrmsbo::opt::run(config, handle);

  nlohmann::ordered_json out;
  out["objective"] = objective_name;
  out["acquisition"] = acq_name;
  out["rs"] = rs;
  out["ms"] = ms;
  out["seed"] = seed;
  out["x_hat"] = std::vector<double>(result.x_hat.data(),
                                     result.x_hat.data() + result.x_hat.size());
  out["y_hat"] = result.y_hat;
  out["evals_used"] = result.evals_used;
  out["iters"] = result.iterations;
  out["termination_reason"] = hrmsbo::opt::to_string(result.reason);
  out["terminated_early"] =
      result.reason == hrmsbo::opt::TerminationReason::ill_conditioned;
  if (result.reason == hrmsbo::opt::TerminationReason::ill_conditioned) {
    out["failed_jitter"] = result.failed_jitter;
  }
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HRMS Bayesian-optimization experiment harness"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "execute an experiment grid");
  std::string plan_path, run_out;
  int parallelism = 1;
  run->add_option("--plan", plan_path, "plan.json path")->required();
  run->add_option("--out", run_out, "output directory")->required();
  run->add_option("--parallelism", parallelism, "worker count")
      ->check(CLI::PositiveNumber);

  // truth
  auto* truth = app.add_subcommand("truth", "build and cache a ground-truth model");
  std::string truth_objective, truth_out;
  int truth_grid = 21, truth_reps = 5;
  std::uint64_t truth_seed = 0;
  truth->add_option("--objective", truth_objective, "objective name")->required();
  truth->add_option("--grid", truth_grid, "grid nodes per dimension")
      ->check(CLI::Range(2, 1000));
  truth->add_option("--reps", truth_reps, "repeats per node")
      ->check(CLI::PositiveNumber);
  truth->add_option("--seed", truth_seed, "rng seed");
  truth->add_option("--out", truth_out, "output directory")->required();

  // report
  auto* report = app.add_subcommand("report", "regenerate summary and plot data");
  std::string report_in;
  report->add_option("--in", report_in, "experiment output directory")->required();

  // single
  auto* single = app.add_subcommand("single", "one optimization run (JSON to stdout)");
  std::string single_objective, single_acq = "ucb";
  int single_rs = 1, single_ms = 1, single_budget = 500, single_n_seed = 20;
  std::uint64_t single_seed = 0;
  single->add_option("--objective", single_objective, "objective name")->required();
  single->add_option("--acq", single_acq, "acquisition: ei, ucb, or ts");
  single->add_option("--rs", single_rs, "repeat-sampling count")
      ->check(CLI::PositiveNumber);
  single->add_option("--ms", single_ms, "multi-point sampling count")
      ->check(CLI::PositiveNumber);
  single->add_option("--budget", single_budget, "evaluation budget")
      ->check(CLI::PositiveNumber);
  single->add_option("--seed", single_seed, "rng seed");
  single->add_option("--n-seed", single_n_seed, "seed-design size")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // --help: exits 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadConfig;
  }

  try {
    if (*run) return cmd_run(plan_path, run_out, parallelism);
    if (*truth) return cmd_truth(truth_objective, truth_grid, truth_reps,
                                 truth_seed, truth_out);
    if (*report) return cmd_report(report_in);
    if (*single) return cmd_single(single_objective, single_acq, single_rs,
                                   single_ms, single_budget, single_seed,
                                   single_n_seed);
  } catch (const hrmsbo::harness::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}
