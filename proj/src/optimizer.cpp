#include "hrmsbo/optimizer.hpp"

#include "hrmsbo/lowdisc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hrmsbo::opt {

namespace {

// Substream tags for deriving independent randomness from the run seed.
constexpr std::uint64_t kTagSeedDesign = 0xA1;
constexpr std::uint64_t kTagInitialMap = 0xA2;
constexpr std::uint64_t kTagStep = 0xA3;
constexpr std::uint64_t kTagEval = 0xA4;

std::uint64_t eval_key(std::uint64_t run_seed, int iteration, int location,
                       int repeat, int retry) {
  return mix_key(run_seed, {kTagEval, static_cast<std::uint64_t>(iteration),
                            static_cast<std::uint64_t>(location),
                            static_cast<std::uint64_t>(repeat),
                            static_cast<std::uint64_t>(retry)});
}

// Evaluate with one retry; true on success. Locations are never re-proposed
// on failure, only re-evaluated under a fresh substream.
bool evaluate_with_retry(ObjectiveHandle& objective, const Vec& x,
                         std::uint64_t run_seed, int iteration, int location,
                         int repeat, double& out) {
  for (int retry = 0; retry < 2; ++retry) {
    try {
      out = objective.evaluate(x, eval_key(run_seed, iteration, location, repeat, retry));
      return true;
    } catch (const EvaluationError&) {
      // retry once, then give up on this evaluation
    }
  }
  return false;
}

std::int64_t elapsed_ms(const OptimizationState& state) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - state.started_at)
      .count();
}

// Minimum posterior mean over the observed locations (EI's incumbent).
double incumbent_mean(const gp::GPModel& model, const Dataset& data) {
  const Vec means = model.predict_mean(data.points);
  return means.minCoeff();
}

// Refit the model on the current dataset with the current hyperparameters.
// Returns false (and records termination) when the covariance stays
// ill-conditioned at the jitter ceiling; the previous model is kept.
bool refit_model(OptimizationState& state, const HRMSConfig& config) {
  auto result = gp::fit_standardized(state.data, config.bounds, state.hyper,
                                     config.jitter);
  if (auto* m = std::get_if<gp::GPModel>(&result)) {
    state.model = std::move(*m);
    return true;
  }
  state.terminated = Termination{TerminationReason::ill_conditioned,
                                 state.iteration,
                                 std::get<gp::IllConditioned>(result).last_jitter};
  return false;
}

void check_budgets(OptimizationState& state, const HRMSConfig& config) {
  if (state.terminated) return;
  const int last_iteration = std::max(0, state.iteration - 1);
  if (state.evals_used >= config.budget_evals) {
    state.terminated =
        Termination{TerminationReason::budget, last_iteration, 0.0};
    return;
  }
  if (config.budget_wall_ms && elapsed_ms(state) >= *config.budget_wall_ms) {
    state.terminated =
        Termination{TerminationReason::wall_clock, last_iteration, 0.0};
  }
}

}  // namespace

void HRMSConfig::validate() const {
  if (bounds.dim() < 1) throw std::invalid_argument("config.bounds is empty");
  if (rs < 1) throw std::invalid_argument("config.rs must be >= 1");
  if (ms < 1) throw std::invalid_argument("config.ms must be >= 1");
  if (n_seed < 1) throw std::invalid_argument("config.n_seed must be >= 1");
  if (budget_evals < 1) throw std::invalid_argument("config.budget_evals must be >= 1");
  if (budget_wall_ms && *budget_wall_ms < 1) {
    throw std::invalid_argument("config.budget_wall_ms must be >= 1");
  }
  if (refit_every < 1) throw std::invalid_argument("config.refit_every must be >= 1");
  if (map_restarts < 1) throw std::invalid_argument("config.map_restarts must be >= 1");
  if (refit_max_iterations < 1) {
    throw std::invalid_argument("config.refit_max_iterations must be >= 1");
  }
}

std::string to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::none: return "none";
    case TerminationReason::budget: return "budget";
    case TerminationReason::wall_clock: return "wall_clock";
    case TerminationReason::ill_conditioned: return "ill_conditioned";
  }
  throw std::invalid_argument("unknown termination reason");
}

std::vector<Vec> seed_design(const Bounds& bounds, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("seed design needs n >= 1");
  std::vector<Vec> points;
  points.reserve(n);
  for (int k = 0; k < n; ++k) {
    Vec x(bounds.dim());
    for (int i = 0; i < bounds.dim(); ++i) {
      x[i] = rng.uniform(bounds.lower[i], bounds.upper[i]);
    }
    points.push_back(std::move(x));
  }
  return points;
}

std::vector<EvaluationRequest> expand_repeats(const std::vector<Vec>& locations,
                                              int rs) {
  if (rs < 1) throw std::invalid_argument("expand_repeats needs rs >= 1");
  std::vector<EvaluationRequest> requests;
  requests.reserve(locations.size() * static_cast<std::size_t>(rs));
  for (std::size_t loc = 0; loc < locations.size(); ++loc) {
    for (int rep = 0; rep < rs; ++rep) {
      requests.push_back({locations[loc], static_cast<int>(loc), rep});
    }
  }
  return requests;
}

OptimizationState initialize(const HRMSConfig& config,
                             ObjectiveHandle& objective) {
  config.validate();
  if (objective.dim() != config.bounds.dim()) {
    throw std::invalid_argument("objective and config dimensions disagree");
  }

  OptimizationState state;
  state.started_at = std::chrono::steady_clock::now();

  Rng design_rng = Rng::keyed(config.seed, {kTagSeedDesign});
  const std::vector<Vec> seeds = seed_design(config.bounds, config.n_seed, design_rng);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    double y = 0.0;
    if (evaluate_with_retry(objective, seeds[i], config.seed, /*iteration=*/0,
                            static_cast<int>(i), /*repeat=*/0, y)) {
      state.data.add(seeds[i], y);
    }
  }
  state.seed_evals = state.data.n();
  state.evals_used = state.data.n();
  if (state.data.n() == 0) {
    throw EvaluationError("every seed evaluation failed");
  }

  Rng map_rng = Rng::keyed(config.seed, {kTagInitialMap});
  gp::Standardized st = gp::standardize(state.data, config.bounds);
  gp::MapFitOptions options;
  options.restarts = config.map_restarts;
  options.jitter = config.jitter;
  state.hyper = gp::map_fit(st.data, config.priors, options, map_rng).hyper;

  state.model = gp::GPModel::prior(config.bounds.dim(), state.hyper);
  refit_model(state, config);  // sets termination if even the seed fit fails
  check_budgets(state, config);
  return state;
}

void step(OptimizationState& state, const HRMSConfig& config,
          ObjectiveHandle& objective, Rng& rng) {
  if (state.terminated) {
    throw std::logic_error("step called on a terminated optimization");
  }
  const int i = state.iteration;

  // Hyperparameter refit (warm single start between iterations; the full
  // multistart happened at seed time).
  if (i % config.refit_every == 0) {
    gp::Standardized st = gp::standardize(state.data, config.bounds);
    gp::MapFitOptions options;
    options.restarts = 1;
    options.warm_start = state.hyper;
    options.max_iterations = config.refit_max_iterations;
    options.jitter = config.jitter;
    state.hyper = gp::map_fit(st.data, config.priors, options, rng).hyper;
    if (!refit_model(state, config)) return;
  }

  const double incumbent =
      config.kind == acq::Kind::ei
          ? incumbent_mean(state.model, state.data)
          : std::numeric_limits<double>::quiet_NaN();
  acq::BatchProposal proposal =
      acq::propose_batch(state.model, config.kind, config.bounds, incumbent,
                         config.ms, /*t=*/i + 1, rng, config.proposal);

  IterationRecord record;
  record.iteration = i;
  record.proposals = proposal.locations;
  record.acquisition_values = proposal.values;

  for (const auto& request : expand_repeats(proposal.locations, config.rs)) {
    double y = 0.0;
    if (evaluate_with_retry(objective, request.x, config.seed, i + 1,
                            request.location_index, request.repeat_index, y)) {
      state.data.add(request.x, y);
      ++record.evaluations;
    } else {
      ++record.missing;
    }
  }
  state.evals_used += record.evaluations;
  state.trace.push_back(std::move(record));
  state.iteration = i + 1;

  // Refit on the augmented dataset (current hyperparameters). With heavy
  // replication and near-zero fitted noise this is where the covariance goes
  // numerically singular and the run terminates early.
  refit_model(state, config);
  check_budgets(state, config);
}

Recommendation recommend(const gp::GPModel& model, const Bounds& bounds) {
  const int d = bounds.dim();
  if (model.dim() != d) {
    throw std::invalid_argument("recommend: bounds dimension mismatch");
  }

  // Dense audit of the posterior mean.
  std::vector<Vec> grid;
  if (d == 1) {
    grid.reserve(2001);
    for (int i = 0; i <= 2000; ++i) {
      Vec u(1);
      u[0] = i / 2000.0;
      grid.push_back(bounds.from_unit(u));
    }
  } else if (d == 2) {
    grid.reserve(201 * 201);
    for (int i = 0; i <= 200; ++i) {
      for (int j = 0; j <= 200; ++j) {
        Vec u(2);
        u << i / 200.0, j / 200.0;
        grid.push_back(bounds.from_unit(u));
      }
    }
  } else {
    const Mat units = low_discrepancy_fixed(1 << 14, d);
    grid.reserve(units.rows());
    for (Eigen::Index r = 0; r < units.rows(); ++r) {
      grid.push_back(bounds.from_unit(units.row(r).transpose()));
    }
  }
  const Vec means = model.predict_mean(grid);
  Eigen::Index best = 0;
  means.minCoeff(&best);

  // Coordinate golden-section polish in unit coordinates.
  Vec unit = bounds.to_unit(grid[best]);
  double value = means[best];
  auto mean_at = [&](const Vec& u) {
    return model.predict_mean({bounds.from_unit(u)})[0];
  };
  constexpr double kInvGolden = 0.61803398874989484820;
  double width = d <= 2 ? 0.01 : 0.05;
  for (int it = 0; it < 60; ++it) {
    const int c = it % d;
    double a = std::max(0.0, unit[c] - width);
    double b = std::min(1.0, unit[c] + width);
    double x1 = b - kInvGolden * (b - a);
    double x2 = a + kInvGolden * (b - a);
    auto at = [&](double t) {
      Vec u = unit;
      u[c] = t;
      return mean_at(u);
    };
    double f1 = at(x1), f2 = at(x2);
    for (int e = 0; e < 10; ++e) {
      if (f1 > f2) {  // minimize: drop the left part
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + kInvGolden * (b - a);
        f2 = at(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - kInvGolden * (b - a);
        f1 = at(x1);
      }
    }
    const double t = f1 < f2 ? x1 : x2;
    const double v = f1 < f2 ? f1 : f2;
    if (v < value) {
      value = v;
      unit[c] = t;
    }
    if (c == d - 1) width *= 0.5;
  }

  Recommendation rec;
  rec.x = bounds.from_unit(unit);
  rec.mean = model.predict_mean({rec.x})[0];
  return rec;
}

RunResult run(const HRMSConfig& config, ObjectiveHandle& objective) {
  OptimizationState state = initialize(config, objective);
  Rng rng = Rng::keyed(config.seed, {kTagStep});
  while (!state.terminated) {
    step(state, config, objective, rng);
  }

  RunResult result;
  const Recommendation rec = recommend(state.model, config.bounds);
  result.x_hat = rec.x;
  result.y_hat = rec.mean;
  result.evals_used = state.evals_used;
  result.iterations = state.iteration;
  result.reason = state.terminated->reason;
  result.failed_jitter = state.terminated->failed_jitter;
  result.model = std::move(state.model);
  result.trace = std::move(state.trace);
  return result;
}

}  // namespace hrmsbo::opt
