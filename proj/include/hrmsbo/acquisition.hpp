#pragma once

#include "hrmsbo/gp.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace hrmsbo::acq {

enum class Kind { ei, ucb, ts };

Kind kind_from_string(std::string_view name);
std::string to_string(Kind kind);

/// Expected improvement for minimization:
///   EI = (best - mean) Phi(z) + sd phi(z),  z = (best - mean) / sd,
/// and max(best - mean, 0) in the zero-variance limit.
double expected_improvement(double mean, double sd, double best);

/// Confidence-bound exploration weight
///   beta(t) = 2 log(d t^2 pi^2 / (6 delta)),
/// clamped below at 0.
double beta_schedule(int t, int dim, double delta);

/// Lower confidence bound mean - sqrt(beta) sd; proposals minimize it.
double lower_confidence_bound(double mean, double sd, double beta);

struct ProposalOptions {
  int candidate_count = 4096;  // low-discrepancy candidates per proposal
  int refine_top = 8;          // candidates kept for local refinement
  int refine_iterations = 50;  // coordinate golden-section line searches
  int ts_grid = 1024;          // grid size per Thompson draw
  double delta = 0.1;          // confidence level for beta_schedule
  /// Minimum pairwise separation of batch points in normalized coordinates.
  double min_separation = 1e-6;
  int retry_budget = 8;
};

struct BatchProposal {
  /// Proposed locations in the objective's raw coordinates.
  std::vector<Vec> locations;
  /// Acquisition diagnostics, one per location: EI value under the
  /// progressively fantasized model, negative LCB (first point) / posterior
  /// sd (later points) for UCB, or the Thompson draw's minimum.
  Vec values;
  /// False when distinctness retries were exhausted or a fantasy refit went
  /// ill-conditioned; `locations` then holds fewer than the requested count.
  bool complete = true;
};

/// One proposal maximizing the acquisition: EI and UCB by multistart golden
/// refinement over a rotated low-discrepancy candidate set, TS by the argmin
/// of one joint posterior draw. `incumbent` is the current best (minimum)
/// posterior mean among observed locations; `t` is the 1-based iteration
/// index feeding the beta schedule.
Vec propose_single(const gp::GPModel& model, Kind kind, const Bounds& bounds,
                   double incumbent, int t, Rng& rng,
                   const ProposalOptions& options = {});

/// `count` jointly chosen locations: EI via constant-liar fantasies at the
/// incumbent value, UCB via pure-exploration variance updates after the first
/// point, TS via independent posterior draws. With count = 1 this is
/// bit-identical to propose_single.
BatchProposal propose_batch(const gp::GPModel& model, Kind kind,
                            const Bounds& bounds, double incumbent, int count,
                            int t, Rng& rng,
                            const ProposalOptions& options = {});

}  // namespace hrmsbo::acq
