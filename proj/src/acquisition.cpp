#include "hrmsbo/acquisition.hpp"

#include "hrmsbo/lowdisc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

namespace hrmsbo::acq {

namespace {

constexpr double kInvGolden = 0.61803398874989484820;

using ScoreFn = std::function<double(double mean, double sd)>;

struct Scored {
  Vec unit;
  double value = -std::numeric_limits<double>::infinity();
};

// Batch-score candidate unit points under `score`.
Vec score_points(const gp::GPModel& model, const Bounds& bounds,
                 const Mat& units, const ScoreFn& score) {
  std::vector<Vec> X;
  X.reserve(units.rows());
  for (Eigen::Index i = 0; i < units.rows(); ++i) {
    X.push_back(bounds.from_unit(units.row(i).transpose()));
  }
  Vec mean, variance;
  model.predict(X, mean, variance);
  Vec s(units.rows());
  for (Eigen::Index i = 0; i < units.rows(); ++i) {
    s[i] = score(mean[i], std::sqrt(variance[i]));
  }
  return s;
}

double score_one(const gp::GPModel& model, const Bounds& bounds, const Vec& unit,
                 const ScoreFn& score) {
  const auto [mean, variance] = model.predict_one(bounds.from_unit(unit));
  return score(mean, std::sqrt(variance));
}

// Golden-section line search maximizing f over [lo, hi] with a fixed number
// of evaluations; returns the best evaluated point.
void golden_max(const std::function<double(double)>& f, double lo, double hi,
                int evals, double& best_t, double& best_f) {
  double a = lo, b = hi;
  double x1 = b - kInvGolden * (b - a);
  double x2 = a + kInvGolden * (b - a);
  double f1 = f(x1), f2 = f(x2);
  auto consider = [&](double t, double v) {
    if (v > best_f) {
      best_f = v;
      best_t = t;
    }
  };
  consider(x1, f1);
  consider(x2, f2);
  for (int e = 2; e < evals; ++e) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvGolden * (b - a);
      f2 = f(x2);
      consider(x2, f2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvGolden * (b - a);
      f1 = f(x1);
      consider(x1, f1);
    }
  }
}

// Coordinate-wise golden-section polish of one start, in unit coordinates.
// `iterations` counts line searches; coordinates cycle, with the search
// half-width halved after every full cycle.
Scored refine(const gp::GPModel& model, const Bounds& bounds, Vec unit,
              double value, int iterations, const ScoreFn& score) {
  const int d = static_cast<int>(unit.size());
  double width = 0.12;
  double round_start_value = value;
  for (int it = 0; it < iterations; ++it) {
    const int i = it % d;
    const double lo = std::max(0.0, unit[i] - width);
    const double hi = std::min(1.0, unit[i] + width);
    auto along = [&](double t) {
      Vec u = unit;
      u[i] = t;
      return score_one(model, bounds, u, score);
    };
    double best_t = unit[i];
    double best_f = value;
    golden_max(along, lo, hi, 8, best_t, best_f);
    if (best_f > value) {
      value = best_f;
      unit[i] = best_t;
    }
    if (i == d - 1) {  // full cycle complete
      const bool stalled =
          value - round_start_value <= 1e-14 * (1.0 + std::abs(value));
      width *= 0.5;
      if (stalled && width < 1e-6) break;
      round_start_value = value;
    }
  }
  return {std::move(unit), value};
}

// Multistart inner optimizer: score a rotated low-discrepancy candidate set,
// keep the best few, polish each, return the winner.
Scored maximize_acquisition(const gp::GPModel& model, const Bounds& bounds,
                            const ScoreFn& score, Rng& rng,
                            const ProposalOptions& options) {
  const int d = bounds.dim();
  const Mat candidates = low_discrepancy(options.candidate_count, d, rng);
  const Vec scores = score_points(model, bounds, candidates, score);

  std::vector<int> order(candidates.rows());
  std::iota(order.begin(), order.end(), 0);
  const int keep = std::min<int>(options.refine_top, static_cast<int>(order.size()));
  std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                    [&](int a, int b) { return scores[a] > scores[b]; });

  Scored best;
  for (int s = 0; s < keep; ++s) {
    const int idx = order[s];
    Scored polished = refine(model, bounds, candidates.row(idx).transpose(),
                             scores[idx], options.refine_iterations, score);
    if (polished.value > best.value) best = std::move(polished);
  }
  return best;
}

bool far_enough(const std::vector<Vec>& chosen_units, const Vec& unit,
                double min_separation) {
  for (const auto& u : chosen_units) {
    if ((u - unit).norm() < min_separation) return false;
  }
  return true;
}

void validate_args(const gp::GPModel& model, const Bounds& bounds, int count,
                   int t) {
  if (bounds.dim() != model.dim()) {
    throw std::invalid_argument("proposal bounds dimension mismatch");
  }
  if (count < 1) throw std::invalid_argument("proposal count must be >= 1");
  if (t < 1) throw std::invalid_argument("iteration index t must be >= 1");
}

}  // namespace

Kind kind_from_string(std::string_view name) {
  if (name == "ei") return Kind::ei;
  if (name == "ucb") return Kind::ucb;
  if (name == "ts") return Kind::ts;
  throw std::invalid_argument("unknown acquisition: " + std::string(name));
}

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::ei: return "ei";
    case Kind::ucb: return "ucb";
    case Kind::ts: return "ts";
  }
  throw std::invalid_argument("unknown acquisition kind");
}

double expected_improvement(double mean, double sd, double best) {
  if (!std::isfinite(mean) || !std::isfinite(sd) || !std::isfinite(best) ||
      sd < 0.0) {
    throw std::invalid_argument("expected_improvement: invalid arguments");
  }
  const double gap = best - mean;
  if (sd == 0.0) return std::max(gap, 0.0);
  const double z = gap / sd;
  return gap * normal_cdf(z) + sd * normal_pdf(z);
}

double beta_schedule(int t, int dim, double delta) {
  if (t < 1 || dim < 1 || !(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("beta_schedule: invalid arguments");
  }
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double inside = dim * static_cast<double>(t) * t * pi2 / (6.0 * delta);
  return std::max(0.0, 2.0 * std::log(inside));
}

double lower_confidence_bound(double mean, double sd, double beta) {
  if (sd < 0.0 || beta < 0.0) {
    throw std::invalid_argument("lower_confidence_bound: invalid arguments");
  }
  return mean - std::sqrt(beta) * sd;
}

Vec propose_single(const gp::GPModel& model, Kind kind, const Bounds& bounds,
                   double incumbent, int t, Rng& rng,
                   const ProposalOptions& options) {
  BatchProposal p = propose_batch(model, kind, bounds, incumbent, 1, t, rng, options);
  return p.locations.at(0);
}

BatchProposal propose_batch(const gp::GPModel& model, Kind kind,
                            const Bounds& bounds, double incumbent, int count,
                            int t, Rng& rng, const ProposalOptions& options) {
  validate_args(model, bounds, count, t);
  if (kind == Kind::ei && !std::isfinite(incumbent)) {
    throw std::invalid_argument("expected improvement requires a finite incumbent");
  }

  BatchProposal out;
  out.values = Vec(count);
  std::vector<Vec> chosen_units;

  auto accept = [&](const Vec& unit, double value) {
    chosen_units.push_back(unit);
    out.locations.push_back(bounds.from_unit(unit));
    out.values[static_cast<Eigen::Index>(chosen_units.size()) - 1] = value;
  };

  switch (kind) {
    case Kind::ei: {
      // q-EI by constant liar: fantasize the incumbent value at each chosen
      // point and re-score the remainder under the updated posterior.
      gp::GPModel working = model;
      for (int k = 0; k < count; ++k) {
        const ScoreFn ei = [&](double mean, double sd) {
          return expected_improvement(mean, sd, incumbent);
        };
        bool placed = false;
        for (int attempt = 0; attempt < options.retry_budget; ++attempt) {
          Rng sub = rng.fork(mix_key(static_cast<std::uint64_t>(k),
                                     {static_cast<std::uint64_t>(attempt)}));
          Scored s = maximize_acquisition(working, bounds, ei, sub, options);
          if (!far_enough(chosen_units, s.unit, options.min_separation)) continue;
          accept(s.unit, s.value);
          placed = true;
          break;
        }
        if (!placed) {
          out.complete = false;
          break;
        }
        if (k + 1 < count) {
          auto updated = working.with_observation(out.locations.back(), incumbent);
          if (std::holds_alternative<gp::IllConditioned>(updated)) {
            out.complete = false;
            break;
          }
          working = std::move(std::get<gp::GPModel>(updated));
        }
      }
      break;
    }
    case Kind::ucb: {
      // First point minimizes the lower confidence bound; follow-up points
      // maximize posterior sd under fantasy updates (pure exploration).
      const double beta = beta_schedule(t, bounds.dim(), options.delta);
      gp::GPModel working = model;
      for (int k = 0; k < count; ++k) {
        const ScoreFn score =
            k == 0 ? ScoreFn([&](double mean, double sd) {
              return -lower_confidence_bound(mean, sd, beta);
            })
                   : ScoreFn([](double, double sd) { return sd; });
        bool placed = false;
        for (int attempt = 0; attempt < options.retry_budget; ++attempt) {
          Rng sub = rng.fork(mix_key(static_cast<std::uint64_t>(k),
                                     {static_cast<std::uint64_t>(attempt)}));
          Scored s = maximize_acquisition(working, bounds, score, sub, options);
          if (!far_enough(chosen_units, s.unit, options.min_separation)) continue;
          accept(s.unit, s.value);
          placed = true;
          break;
        }
        if (!placed) {
          out.complete = false;
          break;
        }
        if (k + 1 < count) {
          const Vec& x = out.locations.back();
          const auto [mean, variance] = working.predict_one(x);
          auto updated = working.with_observation(x, mean);
          if (std::holds_alternative<gp::IllConditioned>(updated)) {
            out.complete = false;
            break;
          }
          working = std::move(std::get<gp::GPModel>(updated));
        }
      }
      break;
    }
    case Kind::ts: {
      // Independent joint posterior draws, each on a fresh low-discrepancy
      // grid; the k-th draw depends only on substream k (and its retry
      // counter), never on the other draws.
      for (int k = 0; k < count; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < options.retry_budget; ++attempt) {
          Rng sub = rng.fork(mix_key(static_cast<std::uint64_t>(k),
                                     {static_cast<std::uint64_t>(attempt)}));
          const Mat grid = low_discrepancy(options.ts_grid, bounds.dim(), sub);
          std::vector<Vec> X;
          X.reserve(grid.rows());
          for (Eigen::Index i = 0; i < grid.rows(); ++i) {
            X.push_back(bounds.from_unit(grid.row(i).transpose()));
          }
          const Vec draw = model.sample_posterior(X, sub);
          Eigen::Index best = 0;
          draw.minCoeff(&best);
          const Vec unit = grid.row(best).transpose();
          if (!far_enough(chosen_units, unit, options.min_separation)) continue;
          accept(unit, draw[best]);
          placed = true;
          break;
        }
        if (!placed) {
          out.complete = false;
          break;
        }
      }
      break;
    }
  }

  out.values.conservativeResize(static_cast<Eigen::Index>(out.locations.size()));
  return out;
}

}  // namespace hrmsbo::acq
