#pragma once

#include "hrmsbo/kernel.hpp"
#include "hrmsbo/rng.hpp"
#include "hrmsbo/types.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace hrmsbo::gp {

/// Escalating diagonal regularization tried when the noisy Gram matrix fails
/// to factorize acceptably. Multipliers scale mean(diag K). The factorization
/// is accepted only if the Cholesky pivots also pass a conditioning screen:
/// (max_i L_ii / min_i L_ii)^2 <= max_condition. Without that screen, exact
/// duplicate rows with near-zero noise factorize "successfully" into a matrix
/// that is numerically singular for every downstream solve.
struct JitterPolicy {
  std::vector<double> schedule = {0.0, 1e-10, 1e-8, 1e-6, 1e-4};
  double max_condition = 2500.0;
};

/// Recoverable fitting failure: the covariance stayed unusable at the largest
/// jitter in the schedule. Callers treat this as an outcome, not an error.
struct IllConditioned {
  double last_jitter = 0.0;
};

/// Affine target transform applied on top of a model fitted to shifted/scaled
/// targets: y_raw = shift + scale * y_internal.
struct OutputTransform {
  double shift = 0.0;
  double scale = 1.0;
};

/// Fitted Gaussian process posterior. Immutable once constructed; refits
/// produce new models. When `input_bounds`/`output` transforms are present,
/// all public queries take raw coordinates and return raw-unit predictions,
/// while the stored dataset and factorization live in normalized space.
class GPModel {
 public:
  int dim() const { return hyper_.dim(); }
  int n() const { return data_.n(); }
  const Dataset& data() const { return data_; }
  const Hyperparameters& hyper() const { return hyper_; }
  const Mat& chol() const { return chol_; }
  const Vec& alpha() const { return alpha_; }
  double jitter_used() const { return jitter_used_; }

  const std::optional<Bounds>& input_bounds() const { return input_bounds_; }
  const OutputTransform& output() const { return output_; }

  /// Posterior mean and variance at each query point. Variance is the latent
  /// function's unless include_noise adds the observation noise.
  void predict(const std::vector<Vec>& X, Vec& mean, Vec& variance,
               bool include_noise = false) const;
  /// Mean-only path (skips the triangular solve for variances).
  Vec predict_mean(const std::vector<Vec>& X) const;
  std::pair<double, double> predict_one(const Vec& x,
                                        bool include_noise = false) const;

  /// One draw from the joint posterior of the latent function over `grid`.
  Vec sample_posterior(const std::vector<Vec>& grid, Rng& rng) const;

  /// Model with one extra observation and unchanged hyperparameters and
  /// transforms. Used for fantasy updates inside batch proposal.
  std::variant<GPModel, IllConditioned> with_observation(
      const Vec& x, double y, const JitterPolicy& policy = {}) const;

  /// Data-free prior model (zero mean; prior covariance).
  static GPModel prior(int dim, Hyperparameters h);

  /// Rebuild a model from persisted internal-space data plus transforms
  /// (deserialization path).
  static std::variant<GPModel, IllConditioned> restore(
      Dataset internal_data, const Hyperparameters& h,
      std::optional<Bounds> input_bounds, OutputTransform output,
      const JitterPolicy& policy = {});

  friend std::variant<GPModel, IllConditioned> fit(const Dataset&,
                                                   const Hyperparameters&,
                                                   const JitterPolicy&);
  friend std::variant<GPModel, IllConditioned> fit_standardized(
      const Dataset&, const Bounds&, const Hyperparameters&,
      const JitterPolicy&);

 private:
  Dataset data_;  // internal (possibly normalized/standardized) coordinates
  Hyperparameters hyper_;
  Mat chol_;   // lower Cholesky factor of K + (noise_var + jitter) I
  Vec alpha_;  // (K + (noise_var + jitter) I)^{-1} y
  double jitter_used_ = 0.0;
  std::optional<Bounds> input_bounds_;
  OutputTransform output_;

  Vec to_internal(const Vec& x) const;
  void predict_internal(const std::vector<Vec>& Xi, Vec& mean, Vec& variance,
                        bool include_noise, bool want_variance) const;
};

using FitResult = std::variant<GPModel, IllConditioned>;

/// Exact GP regression on the dataset as given (no transforms): Cholesky of
/// K + noise_var I with the escalating jitter policy.
FitResult fit(const Dataset& data, const Hyperparameters& h,
              const JitterPolicy& policy = {});

/// Fit on inputs normalized to the unit box and targets standardized to zero
/// mean / unit sd, recording both transforms on the returned model.
FitResult fit_standardized(const Dataset& raw, const Bounds& bounds,
                           const Hyperparameters& h,
                           const JitterPolicy& policy = {});

struct LogMarginal {
  double value = 0.0;
  Vec gradient;  // w.r.t. packed log-hyperparameters
};

/// Log marginal likelihood and its analytic gradient. The jitter actually
/// used is treated as a constant of the computation, not a function of the
/// hyperparameters.
std::variant<LogMarginal, IllConditioned> log_marginal_likelihood(
    const Dataset& data, const Hyperparameters& h,
    const JitterPolicy& policy = {});

/// Value-only variant (skips the O(n^3) gradient work); used inside line
/// searches.
std::variant<double, IllConditioned> log_marginal_value(
    const Dataset& data, const Hyperparameters& h,
    const JitterPolicy& policy = {});

struct Standardized {
  Dataset data;
  OutputTransform output;
};

/// Normalize inputs to [0,1]^d and shift/scale targets to zero mean, unit
/// (population) sd. Degenerate scales fall back to 1.
Standardized standardize(const Dataset& raw, const Bounds& bounds);

}  // namespace hrmsbo::gp
