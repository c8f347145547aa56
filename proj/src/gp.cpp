#include "hrmsbo/gp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace hrmsbo::gp {

namespace {

struct Factorization {
  Mat L;
  Vec alpha;
  double jitter = 0.0;
};

// Cholesky of K + (noise_var + jitter) I under the escalating jitter policy.
// A factorization only counts as a success if the pivots pass the
// conditioning screen; otherwise escalate.
std::variant<Factorization, IllConditioned> factorize(
    const Mat& K, const Vec& y, double noise_var, const JitterPolicy& policy) {
  if (policy.schedule.empty()) {
    throw std::invalid_argument("jitter schedule must be nonempty");
  }
  const double mean_diag = K.diagonal().mean();
  double last_jitter = 0.0;
  for (double mult : policy.schedule) {
    const double jitter = mult * mean_diag;
    last_jitter = jitter;
    Mat Ky = K;
    Ky.diagonal().array() += noise_var + jitter;
    Eigen::LLT<Mat> llt(Ky);
    if (llt.info() != Eigen::Success) continue;
    Mat L = llt.matrixL();
    const double dmax = L.diagonal().maxCoeff();
    const double dmin = L.diagonal().minCoeff();
    if (!(dmin > 0.0)) continue;
    const double ratio = dmax / dmin;
    if (ratio * ratio > policy.max_condition) continue;
    Factorization f;
    f.L = std::move(L);
    f.jitter = jitter;
    f.alpha = llt.solve(y);
    return f;
  }
  return IllConditioned{last_jitter};
}

double lml_value(const Factorization& f, const Vec& y) {
  const double n = static_cast<double>(y.size());
  return -0.5 * y.dot(f.alpha) - f.L.diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

}  // namespace

FitResult fit(const Dataset& data, const Hyperparameters& h,
              const JitterPolicy& policy) {
  data.validate();
  if (data.n() < 1) {
    throw std::invalid_argument("fit requires at least one observation");
  }
  h.validate(data.dim());
  const Mat K = kernel_gram(data.points, h);
  const Vec y = Eigen::Map<const Vec>(data.targets.data(), data.n());
  auto fac = factorize(K, y, h.noise_var(), policy);
  if (std::holds_alternative<IllConditioned>(fac)) {
    return std::get<IllConditioned>(fac);
  }
  auto& f = std::get<Factorization>(fac);
  GPModel m;
  m.data_ = data;
  m.hyper_ = h;
  m.chol_ = std::move(f.L);
  m.alpha_ = std::move(f.alpha);
  m.jitter_used_ = f.jitter;
  return m;
}

FitResult fit_standardized(const Dataset& raw, const Bounds& bounds,
                           const Hyperparameters& h,
                           const JitterPolicy& policy) {
  Standardized st = standardize(raw, bounds);
  FitResult r = fit(st.data, h, policy);
  if (auto* m = std::get_if<GPModel>(&r)) {
    m->input_bounds_ = bounds;
    m->output_ = st.output;
  }
  return r;
}

Standardized standardize(const Dataset& raw, const Bounds& bounds) {
  raw.validate();
  if (raw.n() > 0 && raw.dim() != bounds.dim()) {
    throw std::invalid_argument("standardize: bounds dimension mismatch");
  }
  Standardized st;
  const int n = raw.n();
  if (n > 0) {
    const Vec y = Eigen::Map<const Vec>(raw.targets.data(), n);
    st.output.shift = y.mean();
    const double var = (y.array() - st.output.shift).square().sum() / n;
    const double sd = std::sqrt(var);
    st.output.scale = sd > 1e-12 ? sd : 1.0;
  }
  for (int i = 0; i < n; ++i) {
    st.data.add(bounds.to_unit(raw.points[i]),
                (raw.targets[i] - st.output.shift) / st.output.scale);
  }
  return st;
}

GPModel GPModel::prior(int dim, Hyperparameters h) {
  h.validate(dim);
  GPModel m;
  m.hyper_ = std::move(h);
  return m;
}

std::variant<GPModel, IllConditioned> GPModel::restore(
    Dataset internal_data, const Hyperparameters& h,
    std::optional<Bounds> input_bounds, OutputTransform output,
    const JitterPolicy& policy) {
  FitResult r = fit(internal_data, h, policy);
  if (auto* m = std::get_if<GPModel>(&r)) {
    m->input_bounds_ = std::move(input_bounds);
    m->output_ = output;
    return std::move(*m);
  }
  return std::get<IllConditioned>(r);
}

Vec GPModel::to_internal(const Vec& x) const {
  if (x.size() != dim()) {
    throw std::invalid_argument("query point dimension mismatch");
  }
  check_finite(x, "query point");
  return input_bounds_ ? input_bounds_->to_unit(x) : x;
}

void GPModel::predict_internal(const std::vector<Vec>& Xi, Vec& mean,
                               Vec& variance, bool include_noise,
                               bool want_variance) const {
  const auto m = static_cast<Eigen::Index>(Xi.size());
  if (n() == 0) {
    mean = Vec::Zero(m);
    if (want_variance) {
      variance = Vec::Constant(m, hyper_.signal_var() +
                                      (include_noise ? hyper_.noise_var() : 0.0));
    }
    return;
  }
  const Mat Ks = kernel_cross(data_.points, Xi, hyper_);
  mean = Ks.transpose() * alpha_;
  if (!want_variance) return;
  const Mat V = chol_.triangularView<Eigen::Lower>().solve(Ks);
  variance = (hyper_.signal_var() - V.colwise().squaredNorm().transpose().array())
                 .cwiseMax(0.0);
  if (include_noise) variance.array() += hyper_.noise_var();
}

void GPModel::predict(const std::vector<Vec>& X, Vec& mean, Vec& variance,
                      bool include_noise) const {
  std::vector<Vec> Xi;
  Xi.reserve(X.size());
  for (const auto& x : X) Xi.push_back(to_internal(x));
  predict_internal(Xi, mean, variance, include_noise, true);
  mean = (output_.shift + output_.scale * mean.array()).matrix();
  variance *= output_.scale * output_.scale;
}

Vec GPModel::predict_mean(const std::vector<Vec>& X) const {
  std::vector<Vec> Xi;
  Xi.reserve(X.size());
  for (const auto& x : X) Xi.push_back(to_internal(x));
  Vec mean, unused;
  predict_internal(Xi, mean, unused, false, false);
  return (output_.shift + output_.scale * mean.array()).matrix();
}

std::pair<double, double> GPModel::predict_one(const Vec& x,
                                               bool include_noise) const {
  Vec mean, variance;
  predict({x}, mean, variance, include_noise);
  return {mean[0], variance[0]};
}

Vec GPModel::sample_posterior(const std::vector<Vec>& grid, Rng& rng) const {
  if (grid.empty()) return Vec();
  std::vector<Vec> Gi;
  Gi.reserve(grid.size());
  for (const auto& x : grid) Gi.push_back(to_internal(x));
  const auto m = static_cast<Eigen::Index>(Gi.size());

  Vec mu;
  Mat cov = kernel_gram(Gi, hyper_);
  if (n() > 0) {
    const Mat Ks = kernel_cross(data_.points, Gi, hyper_);
    mu = Ks.transpose() * alpha_;
    const Mat V = chol_.triangularView<Eigen::Lower>().solve(Ks);
    cov -= V.transpose() * V;
  } else {
    mu = Vec::Zero(m);
  }

  Vec z(m);
  for (Eigen::Index i = 0; i < m; ++i) z[i] = rng.normal();

  // Posterior covariance is PSD up to roundoff; escalate a tiny absolute
  // jitter and fall back to a clamped eigen square root if needed.
  const double scale_ref = hyper_.signal_var();
  Vec draw;
  bool done = false;
  for (double mult : {0.0, 1e-12, 1e-10, 1e-8, 1e-6}) {
    Mat C = cov;
    C.diagonal().array() += mult * scale_ref;
    Eigen::LLT<Mat> llt(C);
    if (llt.info() == Eigen::Success) {
      draw = mu + Mat(llt.matrixL()) * z;
      done = true;
      break;
    }
  }
  if (!done) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
    const Vec root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    draw = mu + eig.eigenvectors() * root.asDiagonal() * z;
  }
  return (output_.shift + output_.scale * draw.array()).matrix();
}

std::variant<GPModel, IllConditioned> GPModel::with_observation(
    const Vec& x, double y, const JitterPolicy& policy) const {
  Dataset aug = data_;
  const Vec xi = to_internal(x);
  if (!std::isfinite(y)) {
    throw std::invalid_argument("with_observation: non-finite target");
  }
  aug.add(xi, (y - output_.shift) / output_.scale);
  FitResult r = fit(aug, hyper_, policy);
  if (auto* m = std::get_if<GPModel>(&r)) {
    m->input_bounds_ = input_bounds_;
    m->output_ = output_;
    return std::move(*m);
  }
  return std::get<IllConditioned>(r);
}

std::variant<double, IllConditioned> log_marginal_value(
    const Dataset& data, const Hyperparameters& h, const JitterPolicy& policy) {
  data.validate();
  if (data.n() < 1) {
    throw std::invalid_argument("log_marginal_value requires data");
  }
  h.validate(data.dim());
  const Mat K = kernel_gram(data.points, h);
  const Vec y = Eigen::Map<const Vec>(data.targets.data(), data.n());
  auto fac = factorize(K, y, h.noise_var(), policy);
  if (std::holds_alternative<IllConditioned>(fac)) {
    return std::get<IllConditioned>(fac);
  }
  return lml_value(std::get<Factorization>(fac), y);
}

std::variant<LogMarginal, IllConditioned> log_marginal_likelihood(
    const Dataset& data, const Hyperparameters& h, const JitterPolicy& policy) {
  data.validate();
  if (data.n() < 1) {
    throw std::invalid_argument("log_marginal_likelihood requires data");
  }
  h.validate(data.dim());
  const int n = data.n();
  const int d = data.dim();
  const Mat K = kernel_gram(data.points, h);
  const Vec y = Eigen::Map<const Vec>(data.targets.data(), n);
  auto fac = factorize(K, y, h.noise_var(), policy);
  if (std::holds_alternative<IllConditioned>(fac)) {
    return std::get<IllConditioned>(fac);
  }
  const auto& f = std::get<Factorization>(fac);

  LogMarginal out;
  out.value = lml_value(f, y);

  // W = alpha alpha^T - Ky^{-1}; each gradient entry is tr(W dKy/dtheta)/2.
  Mat Kinv = Mat::Identity(n, n);
  f.L.triangularView<Eigen::Lower>().solveInPlace(Kinv);
  f.L.transpose().triangularView<Eigen::Upper>().solveInPlace(Kinv);
  const Mat W = f.alpha * f.alpha.transpose() - Kinv;

  out.gradient = Vec(d + 2);
  // Lengthscales: dK/dlog l_i = 3 s2 exp(-sqrt(3) r) (delta_i / l_i)^2.
  const Vec inv_ls = (-h.log_lengthscales).array().exp();
  Mat Xs(n, d);
  for (int i = 0; i < n; ++i) {
    Xs.row(i) = data.points[i].cwiseProduct(inv_ls).transpose();
  }
  constexpr double kSqrt3 = 1.7320508075688772935;
  // E(i,j) = 3 s2 exp(-sqrt(3) r_ij), computed once and reused per dimension.
  Mat E(n, n);
  for (int i = 0; i < n; ++i) {
    E(i, i) = 3.0 * h.signal_var();
    for (int j = 0; j < i; ++j) {
      const double r = (Xs.row(i) - Xs.row(j)).norm();
      const double v = 3.0 * h.signal_var() * std::exp(-kSqrt3 * r);
      E(i, j) = v;
      E(j, i) = v;
    }
  }
  for (int k = 0; k < d; ++k) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < i; ++j) {
        const double diff = Xs(i, k) - Xs(j, k);
        acc += W(i, j) * E(i, j) * diff * diff;
      }
    }
    out.gradient[k] = acc;  // = sum over both triangles / 2
  }
  // Signal: dK/dlog s_f = 2 K (kernel part), so the entry is sum(W .* K).
  out.gradient[d] = W.cwiseProduct(K).sum();
  // Noise: dKy/dlog s_n = 2 s_n^2 I.
  out.gradient[d + 1] = h.noise_var() * W.trace();
  return out;
}

}  // namespace hrmsbo::gp
