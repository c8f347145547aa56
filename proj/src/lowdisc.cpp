#include "hrmsbo/lowdisc.hpp"

#include <cmath>
#include <stdexcept>

namespace hrmsbo {

namespace {

// Root of x^(d+1) = x + 1 (the "generalized golden ratio"), by Newton's
// method from 2.0; converges in a handful of steps for any d >= 1.
double generalized_golden(int dim) {
  double x = 2.0;
  for (int it = 0; it < 64; ++it) {
    const double f = std::pow(x, dim + 1) - x - 1.0;
    const double df = (dim + 1) * std::pow(x, dim) - 1.0;
    const double next = x - f / df;
    if (std::abs(next - x) < 1e-15) return next;
    x = next;
  }
  return x;
}

Vec kronecker_alphas(int dim) {
  const double phi = generalized_golden(dim);
  Vec alpha(dim);
  double a = 1.0;
  for (int i = 0; i < dim; ++i) {
    a /= phi;
    alpha[i] = a;
  }
  return alpha;
}

inline double frac(double v) { return v - std::floor(v); }

}  // namespace

Mat kronecker_sequence(int count, int dim, const Vec& shift) {
  if (count < 0 || dim < 1) {
    throw std::invalid_argument("kronecker_sequence requires count >= 0, dim >= 1");
  }
  if (shift.size() != dim) {
    throw std::invalid_argument("kronecker_sequence shift dimension mismatch");
  }
  const Vec alpha = kronecker_alphas(dim);
  Mat points(count, dim);
  for (int k = 0; k < count; ++k) {
    for (int i = 0; i < dim; ++i) {
      points(k, i) = frac(shift[i] + (k + 1) * alpha[i]);
    }
  }
  return points;
}

Mat low_discrepancy(int count, int dim, Rng& rng) {
  Vec shift(dim);
  for (int i = 0; i < dim; ++i) shift[i] = rng.uniform();
  return kronecker_sequence(count, dim, shift);
}

Mat low_discrepancy_fixed(int count, int dim) {
  return kronecker_sequence(count, dim, Vec::Constant(dim, 0.5));
}

}  // namespace hrmsbo
