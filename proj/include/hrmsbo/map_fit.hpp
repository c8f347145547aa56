#pragma once

#include "hrmsbo/gp.hpp"

#include <optional>

namespace hrmsbo::gp {

/// Independent normal priors on the log-hyperparameters. Defaults assume
/// inputs normalized to [0,1]^d and standardized targets.
struct HyperPriors {
  double log_lengthscale_mean;
  double log_lengthscale_sd = 1.0;
  double log_signal_sd_mean = 0.0;
  double log_signal_sd_sd = 1.0;
  double log_noise_sd_mean;
  double log_noise_sd_sd = 1.0;

  HyperPriors();

  Hyperparameters mode(int dim) const;
  double log_density(const Hyperparameters& h) const;
  Vec gradient(const Hyperparameters& h) const;
  Hyperparameters sample(int dim, Rng& rng) const;
};

struct MapFitOptions {
  /// Total starts: the prior mode (or warm start, when given) plus
  /// (restarts - 1) draws from the prior.
  int restarts = 5;
  int max_iterations = 200;
  /// Convergence: infinity norm of the objective gradient.
  double gradient_tolerance = 1e-5;
  /// Replaces the prior-mode start; used for warm refits between iterations.
  std::optional<Hyperparameters> warm_start;
  JitterPolicy jitter;
};

struct MapFitResult {
  Hyperparameters hyper;
  /// Log posterior (log marginal likelihood + log prior) at `hyper`.
  double objective = 0.0;
  /// False when every start was ill-conditioned; `hyper` is then the prior
  /// mode (or warm start) unchanged.
  bool any_start_usable = true;
};

/// Maximum a posteriori hyperparameters by multistart gradient ascent with
/// Armijo backtracking line search. Deterministic given `rng`'s stream.
MapFitResult map_fit(const Dataset& data, const HyperPriors& priors,
                     const MapFitOptions& options, Rng& rng);

}  // namespace hrmsbo::gp
