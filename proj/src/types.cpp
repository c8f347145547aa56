#include "hrmsbo/types.hpp"

#include <cmath>
#include <string>

namespace hrmsbo {

void check_finite(const Vec& x, const char* what) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw std::invalid_argument(std::string(what) + " has non-finite entry");
    }
  }
}

Bounds::Bounds(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) {
    throw std::invalid_argument("bounds dimensions disagree");
  }
  if (lower.size() == 0) {
    throw std::invalid_argument("bounds must have at least one dimension");
  }
  check_finite(lower, "bounds.lower");
  check_finite(upper, "bounds.upper");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] < upper[i])) {
      throw std::invalid_argument("bounds.lower must be strictly below bounds.upper");
    }
  }
}

bool Bounds::contains(const Vec& x, double tol) const {
  if (x.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) return false;
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
  }
  return true;
}

Vec Bounds::to_unit(const Vec& x) const {
  return (x - lower).cwiseQuotient(upper - lower);
}

Vec Bounds::from_unit(const Vec& u) const {
  return lower + u.cwiseProduct(upper - lower);
}

Bounds Bounds::unit(int d) {
  return Bounds(Vec::Zero(d), Vec::Ones(d));
}

void Dataset::add(Vec x, double y) {
  check_finite(x, "dataset point");
  if (!std::isfinite(y)) {
    throw std::invalid_argument("dataset target is non-finite");
  }
  if (!points.empty() && x.size() != points.front().size()) {
    throw std::invalid_argument("dataset point dimension mismatch");
  }
  points.push_back(std::move(x));
  targets.push_back(y);
}

void Dataset::validate() const {
  if (points.size() != targets.size()) {
    throw std::invalid_argument("dataset points/targets length mismatch");
  }
  for (const auto& p : points) {
    check_finite(p, "dataset point");
    if (p.size() != points.front().size()) {
      throw std::invalid_argument("dataset point dimension mismatch");
    }
  }
  for (double y : targets) {
    if (!std::isfinite(y)) {
      throw std::invalid_argument("dataset target is non-finite");
    }
  }
}

}  // namespace hrmsbo
