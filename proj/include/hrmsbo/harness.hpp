#pragma once

#include "hrmsbo/ground_truth.hpp"
#include "hrmsbo/optimizer.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hrmsbo::harness {

/// Filesystem failure with the offending path in the message. The CLI maps
/// this to its I/O exit code.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A full experiment grid: every acquisition × rs × ms cell, `repeats` runs
/// per cell. Defaults mirror the benchmark protocol this project reproduces.
struct ExperimentPlan {
  std::string objective = "volatile-ttk";
  std::vector<acq::Kind> acquisitions = {acq::Kind::ei, acq::Kind::ucb,
                                         acq::Kind::ts};
  std::vector<int> rs_levels = {1, 3, 5, 10};
  std::vector<int> ms_levels = {1, 3, 5};
  int repeats = 4;
  int budget_evals = 500;
  std::optional<std::int64_t> budget_wall_ms;
  std::uint64_t base_seed = 0;
  int n_seed = 20;

  void validate() const;
  int total_runs() const;
};

/// Fail-closed JSON codec: unknown keys, wrong types, or out-of-range values
/// throw std::invalid_argument. Round-trips exactly.
ExperimentPlan plan_from_json(const nlohmann::json& j);
nlohmann::json plan_to_json(const ExperimentPlan& plan);

/// Derived per-run seed; pairwise distinct across the grid in practice
/// (hash-based, collision-checked in tests).
std::uint64_t derive_run_seed(std::uint64_t base_seed, acq::Kind kind, int rs,
                              int ms, int repeat_index);
std::string make_run_id(acq::Kind kind, int rs, int ms, int repeat_index);

struct ExperimentRecord {
  std::string run_id;
  std::string acquisition;
  int rs = 0;
  int ms = 0;
  int repeat_index = 0;
  std::uint64_t seed = 0;
  Vec x_hat;
  double y_hat = 0.0;
  double x_err = 0.0;
  double y_err = 0.0;
  int evals_used = 0;
  int iters = 0;
  bool terminated_early = false;
  std::string termination_reason;
  bench::FidelityReport fidelity;
  std::int64_t wall_ms = 0;

  /// True for runs that threw instead of completing; such records carry
  /// zeroed metrics and are excluded from every aggregate.
  bool failed() const { return termination_reason == "error"; }
};

/// records.csv codec. The header is fixed (given the objective dimension);
/// x_hat occupies one column per dimension.
std::vector<std::string> record_header(int dim);
std::vector<std::string> record_to_row(const ExperimentRecord& r);
ExperimentRecord record_from_row(const std::vector<std::string>& row, int dim);

struct GridOptions {
  std::filesystem::path out_dir;
  int parallelism = 1;
  bench::GroundTruthOptions truth;
  bench::FidelityOptions fidelity;
  /// Persist final-model sidecars (models/<run_id>.json) for the runs whose
  /// posterior surfaces feed fig5_surfaces.csv.
  bool save_selected_models = true;
};

struct GridResult {
  std::vector<ExperimentRecord> records;
  int failed_runs = 0;
};

/// Execute a plan: build (or load from out_dir) the ground truth, run every
/// cell × repeat with derived seeds in a pool of `parallelism` workers, score
/// fidelity, and append records to records.csv in run order as they complete
/// (crash-safe; rerunning with the same plan resumes after the last complete
/// row). A run that throws is recorded with termination_reason "error" and
/// never aborts the grid.
GridResult run_grid(const ExperimentPlan& plan, const GridOptions& options);

/// Per-cell aggregates. Dispersion fields are absent for cells with fewer
/// than two completed runs.
struct SummaryRow {
  std::string acquisition;
  int rs = 0;
  int ms = 0;
  int n_runs = 0;  // completed runs
  int n_failed = 0;
  double early_term_rate = 0.0;
  double mean_evals = 0.0;
  double mean_iters = 0.0;
  double mean_x_err = 0.0;
  std::optional<double> sd_x_err;
  double mean_y_err = 0.0;
  std::optional<double> sd_y_err;
  double mean_rmse_mean = 0.0;
  std::optional<double> sd_rmse_mean;
  double mean_nlpd = 0.0;
  std::optional<double> sd_nlpd;
  /// sd(x_err) of this cell over sd(x_err) of the same acquisition's
  /// rs=1, ms=1 cell; absent when either sd is absent or the SS sd is 0.
  std::optional<double> x_err_sd_ratio_vs_ss;
};

/// Pure function of the record set: permutation-invariant. Cell order follows
/// the plan's acquisition/rs/ms order.
std::vector<SummaryRow> summarize(const ExperimentPlan& plan,
                                  const std::vector<ExperimentRecord>& records);

/// Write records.csv, summary.csv, and plotdata/{fig3_scatter,fig4_counts,
/// fig5_surfaces}.csv under `dir`. fig5 surfaces cover the ground truth plus
/// the selected runs whose model sidecars exist (selection: each
/// acquisition's rs=1/ms=1 and max-rs/max-ms cells, repeat 0).
void export_all(const ExperimentPlan& plan,
                const std::vector<ExperimentRecord>& records,
                const std::filesystem::path& dir);

/// summary.csv + plotdata/ only (records.csv stays untouched).
void export_reports(const ExperimentPlan& plan,
                    const std::vector<ExperimentRecord>& records,
                    const std::filesystem::path& dir);

/// The run_ids whose posterior surfaces are exported to fig5_surfaces.csv.
std::vector<std::string> fig5_selection(const ExperimentPlan& plan);

/// Model/ground-truth JSON persistence (full round-trip precision).
nlohmann::json model_to_json(const gp::GPModel& model);
gp::GPModel model_from_json(const nlohmann::json& j);
void save_ground_truth(const bench::GroundTruthModel& truth,
                       std::uint64_t seed, const std::filesystem::path& path);
std::optional<bench::GroundTruthModel> load_ground_truth(
    const std::filesystem::path& path, const std::string& objective_name,
    const bench::GroundTruthOptions& options, std::uint64_t seed);

/// Regenerate summary.csv and plotdata/ from an output directory's plan.json
/// + records.csv (fig5 only if truth.json and model sidecars are present).
void regenerate_reports(const std::filesystem::path& dir);

/// Load what run_grid persisted (for reporting and tests).
ExperimentPlan load_plan(const std::filesystem::path& path);
std::vector<ExperimentRecord> load_records(const std::filesystem::path& path,
                                           int dim);

}  // namespace hrmsbo::harness
