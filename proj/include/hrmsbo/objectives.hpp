#pragma once

#include "hrmsbo/objective.hpp"
#include "hrmsbo/rng.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace hrmsbo::bench {

/// Synthetic noisy benchmark: observations are mu(x) + s(x) * z with z a
/// standard normal draw keyed by the evaluation's substream. s(x) is the
/// heteroscedastic noise standard deviation.
struct SyntheticObjective {
  std::string name;
  Bounds bounds;
  std::function<double(const Vec&)> mean;
  std::function<double(const Vec&)> noise_sd;
  /// Known minimizer of mu, for recommendation-error reporting.
  Vec true_min_x;
  double true_min_y = 0.0;

  int dim() const { return bounds.dim(); }
};

/// 2-d time-to-K surrogate benchmark on [0,1]^2: a tilted plane with a sharp
/// basin at (0.25, 0.7) and noise that grows toward the top-left corner
/// (high x2, low x1) so the basin sits in volatile territory.
SyntheticObjective volatile_ttk();

/// Smooth 2-d quadratic with small constant noise; boring on purpose, used to
/// check budget-bound termination and accounting.
SyntheticObjective bowl();

/// 1-d dip-and-slope objective with midrange-peaked noise, handy for plots
/// and eyeballing one-dimensional behavior.
SyntheticObjective fig2_1d();

/// Registry lookup by name ("volatile-ttk", "bowl", "fig2-1d").
/// Throws std::invalid_argument for unknown names.
const SyntheticObjective& find_objective(const std::string& name);
std::vector<std::string> objective_names();

/// ObjectiveHandle over a synthetic objective: evaluate(x, key) returns
/// mu(x) + s(x) * keyed_normal(key).
class SyntheticHandle : public ObjectiveHandle {
 public:
  explicit SyntheticHandle(SyntheticObjective objective);

  int dim() const override { return objective_.dim(); }
  const Bounds& bounds() const override { return objective_.bounds; }
  double evaluate(const Vec& x, std::uint64_t substream_key) override;

  const SyntheticObjective& objective() const { return objective_; }

 private:
  SyntheticObjective objective_;
};

}  // namespace hrmsbo::bench
