#pragma once

#include "hrmsbo/acquisition.hpp"
#include "hrmsbo/map_fit.hpp"
#include "hrmsbo/objective.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hrmsbo::opt {

/// Configuration of one optimization run. rs is the repeat-sampling count
/// (evaluations per proposed location), ms the multi-point sampling count
/// (locations per iteration); rs = ms = 1 is standard sequential sampling.
struct HRMSConfig {
  acq::Kind kind = acq::Kind::ucb;
  int rs = 1;
  int ms = 1;
  Bounds bounds;
  std::uint64_t seed = 0;
  int n_seed = 20;
  int budget_evals = 500;
  std::optional<std::int64_t> budget_wall_ms;
  int refit_every = 1;
  int map_restarts = 5;
  /// Ascent-iteration cap for the warm per-iteration refits (the initial fit
  /// always gets MapFitOptions' full default).
  int refit_max_iterations = 25;
  acq::ProposalOptions proposal;
  gp::HyperPriors priors;
  gp::JitterPolicy jitter;

  void validate() const;
};

enum class TerminationReason { none, budget, wall_clock, ill_conditioned };

std::string to_string(TerminationReason reason);

struct IterationRecord {
  int iteration = 0;
  std::vector<Vec> proposals;  // raw coordinates, ms entries
  Vec acquisition_values;
  int evaluations = 0;  // successful evaluations this iteration
  int missing = 0;      // evaluations abandoned after the retry
};

struct Termination {
  TerminationReason reason = TerminationReason::none;
  int iteration = 0;
  /// Jitter level that failed, for ill_conditioned terminations.
  double failed_jitter = 0.0;
};

/// Mutable state threaded through step(). `model` is always the most recent
/// successfully fitted posterior; on ill-conditioned termination it is the
/// last valid one.
struct OptimizationState {
  Dataset data;  // raw coordinates / raw targets
  gp::GPModel model;
  gp::Hyperparameters hyper;  // current MAP estimate (normalized space)
  int iteration = 0;
  int evals_used = 0;
  int seed_evals = 0;  // successful seed evaluations
  std::optional<Termination> terminated;
  std::vector<IterationRecord> trace;
  std::chrono::steady_clock::time_point started_at;
};

/// Space-filling seed design: n points uniform in `bounds`.
std::vector<Vec> seed_design(const Bounds& bounds, int n, Rng& rng);

/// Expand a batch proposal into per-evaluation requests, rs copies per
/// location, ordered by (location_index, repeat_index).
struct EvaluationRequest {
  Vec x;
  int location_index = 0;
  int repeat_index = 0;
};
std::vector<EvaluationRequest> expand_repeats(
    const std::vector<Vec>& locations, int rs);

/// Evaluate the seed design and fit the initial model. Returns a state ready
/// for step(); sets `terminated` directly in the (pathological) event that
/// even the seed fit is ill-conditioned.
OptimizationState initialize(const HRMSConfig& config,
                             ObjectiveHandle& objective);

/// One HRMS iteration: refit hyperparameters (every refit_every iterations),
/// propose ms locations, evaluate each rs times, extend the dataset, refit
/// the model, and apply budget checks (after the iteration completes, so the
/// final iteration may overshoot budget_evals). Sets state.terminated on
/// budget exhaustion, wall-clock exhaustion, or an ill-conditioned refit.
void step(OptimizationState& state, const HRMSConfig& config,
          ObjectiveHandle& objective, Rng& rng);

/// Recommendation: argmin of the posterior mean over a dense audit grid of
/// the box, polished by coordinate golden-section refinement.
struct Recommendation {
  Vec x;
  double mean = 0.0;
};
Recommendation recommend(const gp::GPModel& model, const Bounds& bounds);

struct RunResult {
  Vec x_hat;
  double y_hat = 0.0;
  int evals_used = 0;
  int iterations = 0;
  TerminationReason reason = TerminationReason::budget;
  double failed_jitter = 0.0;  // ill_conditioned only
  gp::GPModel model;
  std::vector<IterationRecord> trace;
};

/// Full run: seed, iterate until a budget or failure terminates, recommend.
/// Deterministic given config.seed (wall-clock budget aside).
RunResult run(const HRMSConfig& config, ObjectiveHandle& objective);

}  // namespace hrmsbo::opt
