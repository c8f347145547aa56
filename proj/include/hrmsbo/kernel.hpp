#pragma once

#include "hrmsbo/types.hpp"

namespace hrmsbo::gp {

/// GP hyperparameters in log space: one lengthscale per input dimension
/// (ARD), a signal standard deviation, and an observation-noise standard
/// deviation.
struct Hyperparameters {
  Vec log_lengthscales;
  double log_signal_sd = 0.0;
  double log_noise_sd = 0.0;

  int dim() const { return static_cast<int>(log_lengthscales.size()); }
  Vec lengthscales() const { return log_lengthscales.array().exp(); }
  double signal_sd() const;
  double noise_sd() const;
  double signal_var() const;
  double noise_var() const;

  /// Packed order: [log_lengthscales..., log_signal_sd, log_noise_sd].
  Vec to_vector() const;
  static Hyperparameters from_vector(const Vec& v);

  void validate(int expected_dim) const;

  static Hyperparameters isotropic(int d, double lengthscale, double signal_sd,
                                   double noise_sd);
};

/// Matern 3/2 covariance with ARD distance
///   r = sqrt(sum_i ((a_i-b_i)/l_i)^2),  k = s2 * (1 + sqrt(3) r) exp(-sqrt(3) r).
double kernel(const Vec& a, const Vec& b, const Hyperparameters& h);

/// Cross-covariance matrix K[i][j] = kernel(X[i], Z[j]).
Mat kernel_cross(const std::vector<Vec>& X, const std::vector<Vec>& Z,
                 const Hyperparameters& h);

/// Symmetric Gram matrix on X. Exactly symmetric (lower triangle mirrored).
Mat kernel_gram(const std::vector<Vec>& X, const Hyperparameters& h);

}  // namespace hrmsbo::gp
