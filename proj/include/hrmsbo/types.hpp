#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

namespace hrmsbo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Axis-aligned box of feasible inputs. lower[i] < upper[i] for all i.
struct Bounds {
  Vec lower;
  Vec upper;

  Bounds() = default;
  Bounds(Vec lo, Vec hi);

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vec& x, double tol = 0.0) const;

  /// Affine map raw -> [0,1]^d.
  Vec to_unit(const Vec& x) const;
  /// Affine map [0,1]^d -> raw.
  Vec from_unit(const Vec& u) const;

  static Bounds unit(int d);
};

/// Accumulated (x, y) evaluations. Duplicate locations are permitted and
/// preserved; repeat sampling relies on that.
struct Dataset {
  std::vector<Vec> points;
  std::vector<double> targets;

  int n() const { return static_cast<int>(points.size()); }
  int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }

  void add(Vec x, double y);
  void validate() const;
};

void check_finite(const Vec& x, const char* what);

}  // namespace hrmsbo
