#pragma once

#include "hrmsbo/gp.hpp"
#include "hrmsbo/objectives.hpp"

namespace hrmsbo::bench {

struct GroundTruthOptions {
  int grid_per_dim = 21;
  int reps = 5;
  /// Fitting caps, for tractability: the model keeps at most max_points
  /// observations; MAP hyperparameters are estimated on at most map_points of
  /// them. Both subsamples are seeded and deterministic.
  int max_points = 4000;
  int map_points = 800;
  int map_restarts = 3;
};

/// Reference surrogate: a GP fitted to a dense replicated evaluation grid of
/// a synthetic objective. Stands in for the unknown true response surface
/// when scoring optimization-produced models.
struct GroundTruthModel {
  gp::GPModel model;
  SyntheticObjective objective;
  int grid_per_dim = 0;
  int reps = 0;
  int points_used = 0;
};

GroundTruthModel build_ground_truth(const SyntheticObjective& objective,
                                    std::uint64_t seed,
                                    const GroundTruthOptions& options = {});

/// Surrogate fidelity of a candidate model against the reference:
/// RMSE of posterior means and posterior sds over a dense audit grid, and
/// mean negative log predictive density of a fresh held-out noisy sample set
/// under the candidate (noise-inclusive predictive variance).
struct FidelityReport {
  double rmse_mean = 0.0;
  double rmse_sd = 0.0;
  double nlpd = 0.0;
};

struct FidelityOptions {
  int audit_per_dim = 101;  // audit grid resolution for d <= 2
  int holdout = 256;        // held-out noisy samples for NLPD
};

FidelityReport fidelity(const gp::GPModel& candidate,
                        const GroundTruthModel& truth, std::uint64_t seed,
                        const FidelityOptions& options = {});

/// Dense rectangular audit grid over `bounds`: per_dim^d points for d <= 2,
/// a fixed low-discrepancy set of per_dim^2 points otherwise.
std::vector<Vec> audit_grid(const Bounds& bounds, int per_dim);

}  // namespace hrmsbo::bench
