#include "hrmsbo/ground_truth.hpp"

#include "hrmsbo/lowdisc.hpp"
#include "hrmsbo/map_fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace hrmsbo::bench {

namespace {

constexpr std::uint64_t kTagTruthEval = 0xB1;
constexpr std::uint64_t kTagTruthSubsample = 0xB2;
constexpr std::uint64_t kTagTruthMap = 0xB3;
constexpr std::uint64_t kTagFidelityHoldout = 0xC1;

// Deterministic subsample of indices [0, n): a seeded Fisher-Yates prefix.
std::vector<int> subsample_indices(int n, int keep, Rng rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (keep >= n) return idx;
  for (int i = 0; i < keep; ++i) {
    const int j = i + static_cast<int>(rng.uniform() * (n - i));
    std::swap(idx[i], idx[std::min(j, n - 1)]);
  }
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Dataset select(const Dataset& data, const std::vector<int>& indices) {
  Dataset out;
  for (int i : indices) out.add(data.points[i], data.targets[i]);
  return out;
}

}  // namespace

std::vector<Vec> audit_grid(const Bounds& bounds, int per_dim) {
  if (per_dim < 2) throw std::invalid_argument("audit grid needs per_dim >= 2");
  const int d = bounds.dim();
  std::vector<Vec> grid;
  if (d == 1) {
    grid.reserve(per_dim);
    for (int i = 0; i < per_dim; ++i) {
      Vec u(1);
      u[0] = static_cast<double>(i) / (per_dim - 1);
      grid.push_back(bounds.from_unit(u));
    }
  } else if (d == 2) {
    grid.reserve(static_cast<std::size_t>(per_dim) * per_dim);
    for (int i = 0; i < per_dim; ++i) {
      for (int j = 0; j < per_dim; ++j) {
        Vec u(2);
        u << static_cast<double>(i) / (per_dim - 1),
            static_cast<double>(j) / (per_dim - 1);
        grid.push_back(bounds.from_unit(u));
      }
    }
  } else {
    const Mat units = low_discrepancy_fixed(per_dim * per_dim, d);
    grid.reserve(units.rows());
    for (Eigen::Index r = 0; r < units.rows(); ++r) {
      grid.push_back(bounds.from_unit(units.row(r).transpose()));
    }
  }
  return grid;
}

GroundTruthModel build_ground_truth(const SyntheticObjective& objective,
                                    std::uint64_t seed,
                                    const GroundTruthOptions& options) {
  if (options.grid_per_dim < 2 || options.reps < 1) {
    throw std::invalid_argument("ground truth needs grid_per_dim >= 2, reps >= 1");
  }
  if (options.max_points < 2 || options.map_points < 2 || options.map_restarts < 1) {
    throw std::invalid_argument("ground truth caps must be sensible");
  }

  const std::vector<Vec> nodes = audit_grid(objective.bounds, options.grid_per_dim);
  Dataset data;
  for (std::size_t node = 0; node < nodes.size(); ++node) {
    const double mu = objective.mean(nodes[node]);
    const double sd = objective.noise_sd(nodes[node]);
    for (int rep = 0; rep < options.reps; ++rep) {
      const std::uint64_t key =
          mix_key(seed, {kTagTruthEval, static_cast<std::uint64_t>(node),
                         static_cast<std::uint64_t>(rep)});
      data.add(nodes[node], mu + sd * keyed_normal(key));
    }
  }

  // Cap the model size, then cap the MAP estimation set further; both
  // subsamples are seeded so the whole build is a function of (objective,
  // seed, options).
  Dataset model_data =
      data.n() > options.max_points
          ? select(data, subsample_indices(data.n(), options.max_points,
                                           Rng::keyed(seed, {kTagTruthSubsample, 0})))
          : data;
  Dataset map_data =
      model_data.n() > options.map_points
          ? select(model_data,
                   subsample_indices(model_data.n(), options.map_points,
                                     Rng::keyed(seed, {kTagTruthSubsample, 1})))
          : model_data;

  Rng map_rng = Rng::keyed(seed, {kTagTruthMap});
  gp::MapFitOptions map_options;
  map_options.restarts = options.map_restarts;
  const gp::Standardized st = gp::standardize(map_data, objective.bounds);
  const gp::Hyperparameters hyper =
      gp::map_fit(st.data, gp::HyperPriors{}, map_options, map_rng).hyper;

  auto fitted = gp::fit_standardized(model_data, objective.bounds, hyper);
  if (std::holds_alternative<gp::IllConditioned>(fitted)) {
    // A replicated design with MAP noise should never be singular; if it is,
    // the caller's configuration is unusable.
    throw std::runtime_error("ground-truth fit is ill-conditioned");
  }

  GroundTruthModel truth;
  truth.model = std::move(std::get<gp::GPModel>(fitted));
  truth.objective = objective;
  truth.grid_per_dim = options.grid_per_dim;
  truth.reps = options.reps;
  truth.points_used = model_data.n();
  return truth;
}

FidelityReport fidelity(const gp::GPModel& candidate,
                        const GroundTruthModel& truth, std::uint64_t seed,
                        const FidelityOptions& options) {
  if (candidate.dim() != truth.model.dim()) {
    throw std::invalid_argument("fidelity: model dimensions disagree");
  }
  if (options.audit_per_dim < 2 || options.holdout < 1) {
    throw std::invalid_argument("fidelity options must be positive");
  }
  const Bounds& bounds = truth.objective.bounds;
  const std::vector<Vec> grid = audit_grid(bounds, options.audit_per_dim);

  Vec mean_c, var_c, mean_t, var_t;
  candidate.predict(grid, mean_c, var_c);
  truth.model.predict(grid, mean_t, var_t);
  const Vec sd_c = var_c.cwiseSqrt();
  const Vec sd_t = var_t.cwiseSqrt();

  FidelityReport report;
  report.rmse_mean = std::sqrt((mean_c - mean_t).squaredNorm() / grid.size());
  report.rmse_sd = std::sqrt((sd_c - sd_t).squaredNorm() / grid.size());

  // Fresh noisy holdout, scored under the candidate's noise-inclusive
  // predictive distribution.
  Rng holdout_rng = Rng::keyed(seed, {kTagFidelityHoldout});
  std::vector<Vec> held_x;
  Vec held_y(options.holdout);
  held_x.reserve(options.holdout);
  for (int i = 0; i < options.holdout; ++i) {
    Vec x(bounds.dim());
    for (int k = 0; k < bounds.dim(); ++k) {
      x[k] = holdout_rng.uniform(bounds.lower[k], bounds.upper[k]);
    }
    const double mu = truth.objective.mean(x);
    const double sd = truth.objective.noise_sd(x);
    held_y[i] = mu + sd * holdout_rng.normal();
    held_x.push_back(std::move(x));
  }
  Vec mean_h, var_h;
  candidate.predict(held_x, mean_h, var_h, /*include_noise=*/true);
  double nlpd = 0.0;
  for (int i = 0; i < options.holdout; ++i) {
    const double v = std::max(var_h[i], 1e-300);
    const double resid = held_y[i] - mean_h[i];
    nlpd += 0.5 * std::log(2.0 * std::numbers::pi * v) + resid * resid / (2.0 * v);
  }
  report.nlpd = nlpd / options.holdout;
  return report;
}

}  // namespace hrmsbo::bench
