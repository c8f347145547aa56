#include "hrmsbo/map_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hrmsbo::gp {

namespace {

constexpr double kArmijoC = 1e-4;
constexpr double kMinStep = 1e-12;

struct Objective {
  const Dataset& data;
  const HyperPriors& priors;
  const JitterPolicy& jitter;

  // Log posterior (unnormalized): LML + log prior. Ill-conditioned
  // hyperparameters score -inf so the search simply walks away from them.
  double value(const Hyperparameters& h) const {
    auto lml = log_marginal_value(data, h, jitter);
    if (std::holds_alternative<IllConditioned>(lml)) {
      return -std::numeric_limits<double>::infinity();
    }
    return std::get<double>(lml) + priors.log_density(h);
  }

  bool value_and_gradient(const Hyperparameters& h, double& value,
                          Vec& gradient) const {
    auto lml = log_marginal_likelihood(data, h, jitter);
    if (std::holds_alternative<IllConditioned>(lml)) return false;
    const auto& lm = std::get<LogMarginal>(lml);
    value = lm.value + priors.log_density(h);
    gradient = lm.gradient + priors.gradient(h);
    return true;
  }
};

struct AscentResult {
  Hyperparameters hyper;
  double value = -std::numeric_limits<double>::infinity();
  bool usable = false;
};

AscentResult ascend(const Objective& objective, Hyperparameters start,
                    const MapFitOptions& options) {
  AscentResult res;
  res.hyper = start;

  Vec theta = start.to_vector();
  double value;
  Vec gradient;
  if (!objective.value_and_gradient(start, value, gradient)) {
    return res;  // unusable start
  }
  res.usable = true;
  res.value = value;

  for (int it = 0; it < options.max_iterations; ++it) {
    if (gradient.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) break;

    const double g2 = gradient.squaredNorm();
    double step = 1.0;
    bool accepted = false;
    Hyperparameters next;
    double next_value = 0.0;
    while (step >= kMinStep) {
      next = Hyperparameters::from_vector(theta + step * gradient);
      next_value = objective.value(next);
      if (next_value >= value + kArmijoC * step * g2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    theta = next.to_vector();
    res.hyper = next;
    res.value = next_value;
    if (!objective.value_and_gradient(next, value, gradient)) break;
  }
  return res;
}

}  // namespace

HyperPriors::HyperPriors()
    : log_lengthscale_mean(std::log(0.2)), log_noise_sd_mean(std::log(0.3)) {}

Hyperparameters HyperPriors::mode(int dim) const {
  Hyperparameters h;
  h.log_lengthscales = Vec::Constant(dim, log_lengthscale_mean);
  h.log_signal_sd = log_signal_sd_mean;
  h.log_noise_sd = log_noise_sd_mean;
  return h;
}

double HyperPriors::log_density(const Hyperparameters& h) const {
  // Independent normals on the log scale; constants omitted (only
  // differences and gradients matter to the search).
  auto term = [](double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * z * z;
  };
  double v = 0.0;
  for (int i = 0; i < h.dim(); ++i) {
    v += term(h.log_lengthscales[i], log_lengthscale_mean, log_lengthscale_sd);
  }
  v += term(h.log_signal_sd, log_signal_sd_mean, log_signal_sd_sd);
  v += term(h.log_noise_sd, log_noise_sd_mean, log_noise_sd_sd);
  return v;
}

Vec HyperPriors::gradient(const Hyperparameters& h) const {
  const int d = h.dim();
  Vec g(d + 2);
  for (int i = 0; i < d; ++i) {
    g[i] = -(h.log_lengthscales[i] - log_lengthscale_mean) /
           (log_lengthscale_sd * log_lengthscale_sd);
  }
  g[d] = -(h.log_signal_sd - log_signal_sd_mean) /
         (log_signal_sd_sd * log_signal_sd_sd);
  g[d + 1] = -(h.log_noise_sd - log_noise_sd_mean) /
             (log_noise_sd_sd * log_noise_sd_sd);
  return g;
}

Hyperparameters HyperPriors::sample(int dim, Rng& rng) const {
  Hyperparameters h;
  h.log_lengthscales = Vec(dim);
  for (int i = 0; i < dim; ++i) {
    h.log_lengthscales[i] = log_lengthscale_mean + log_lengthscale_sd * rng.normal();
  }
  h.log_signal_sd = log_signal_sd_mean + log_signal_sd_sd * rng.normal();
  h.log_noise_sd = log_noise_sd_mean + log_noise_sd_sd * rng.normal();
  return h;
}

MapFitResult map_fit(const Dataset& data, const HyperPriors& priors,
                     const MapFitOptions& options, Rng& rng) {
  data.validate();
  if (data.n() < 1) {
    throw std::invalid_argument("map_fit requires data");
  }
  if (options.restarts < 1) {
    throw std::invalid_argument("map_fit requires restarts >= 1");
  }
  const int d = data.dim();
  const Objective objective{data, priors, options.jitter};

  const Hyperparameters anchor =
      options.warm_start ? *options.warm_start : priors.mode(d);

  MapFitResult best;
  best.hyper = anchor;
  best.objective = -std::numeric_limits<double>::infinity();
  best.any_start_usable = false;

  for (int s = 0; s < options.restarts; ++s) {
    // Start 0 is the anchor; the rest are prior draws (consumed from `rng` in
    // a fixed order, so the whole search is deterministic).
    const Hyperparameters start = s == 0 ? anchor : priors.sample(d, rng);
    AscentResult res = ascend(objective, start, options);
    if (!res.usable) continue;
    if (!best.any_start_usable || res.value > best.objective) {
      best.hyper = res.hyper;
      best.objective = res.value;
      best.any_start_usable = true;
    }
  }
  return best;
}

}  // namespace hrmsbo::gp
