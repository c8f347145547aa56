#include "hrmsbo/kernel.hpp"

#include <cmath>

namespace hrmsbo::gp {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;

// Rows of X divided elementwise by the lengthscales, so pairwise Euclidean
// distances of the result are the ARD-scaled r.
Mat scale_rows(const std::vector<Vec>& X, const Vec& inv_ls) {
  Mat S(static_cast<Eigen::Index>(X.size()), inv_ls.size());
  for (std::size_t i = 0; i < X.size(); ++i) {
    S.row(i) = X[i].cwiseProduct(inv_ls).transpose();
  }
  return S;
}

}  // namespace

double Hyperparameters::signal_sd() const { return std::exp(log_signal_sd); }
double Hyperparameters::noise_sd() const { return std::exp(log_noise_sd); }
double Hyperparameters::signal_var() const { return std::exp(2.0 * log_signal_sd); }
double Hyperparameters::noise_var() const { return std::exp(2.0 * log_noise_sd); }

Vec Hyperparameters::to_vector() const {
  Vec v(dim() + 2);
  v.head(dim()) = log_lengthscales;
  v[dim()] = log_signal_sd;
  v[dim() + 1] = log_noise_sd;
  return v;
}

Hyperparameters Hyperparameters::from_vector(const Vec& v) {
  if (v.size() < 3) {
    throw std::invalid_argument("packed hyperparameter vector needs >= 3 entries");
  }
  Hyperparameters h;
  h.log_lengthscales = v.head(v.size() - 2);
  h.log_signal_sd = v[v.size() - 2];
  h.log_noise_sd = v[v.size() - 1];
  return h;
}

void Hyperparameters::validate(int expected_dim) const {
  if (dim() != expected_dim) {
    throw std::invalid_argument("hyperparameter lengthscale count does not match data dimension");
  }
  check_finite(log_lengthscales, "log_lengthscales");
  if (!std::isfinite(log_signal_sd) || !std::isfinite(log_noise_sd)) {
    throw std::invalid_argument("hyperparameters have non-finite entries");
  }
}

Hyperparameters Hyperparameters::isotropic(int d, double lengthscale,
                                           double signal_sd, double noise_sd) {
  if (d < 1 || lengthscale <= 0.0 || signal_sd <= 0.0 || noise_sd <= 0.0) {
    throw std::invalid_argument("isotropic hyperparameters must be positive");
  }
  Hyperparameters h;
  h.log_lengthscales = Vec::Constant(d, std::log(lengthscale));
  h.log_signal_sd = std::log(signal_sd);
  h.log_noise_sd = std::log(noise_sd);
  return h;
}

double kernel(const Vec& a, const Vec& b, const Hyperparameters& h) {
  if (a.size() != b.size() || a.size() != h.dim()) {
    throw std::invalid_argument("kernel input dimension mismatch");
  }
  const Vec inv_ls = (-h.log_lengthscales).array().exp();
  const double r = (a - b).cwiseProduct(inv_ls).norm();
  const double c = kSqrt3 * r;
  return h.signal_var() * (1.0 + c) * std::exp(-c);
}

Mat kernel_cross(const std::vector<Vec>& X, const std::vector<Vec>& Z,
                 const Hyperparameters& h) {
  const Vec inv_ls = (-h.log_lengthscales).array().exp();
  const Mat Xs = scale_rows(X, inv_ls);
  const Mat Zs = scale_rows(Z, inv_ls);
  // Pairwise squared distances via the Gram expansion, clamped for roundoff.
  Mat d2 = (Xs.rowwise().squaredNorm().replicate(1, Zs.rows()) +
            Zs.rowwise().squaredNorm().transpose().replicate(Xs.rows(), 1) -
            2.0 * Xs * Zs.transpose())
               .cwiseMax(0.0);
  Mat c = kSqrt3 * d2.array().sqrt();
  return h.signal_var() * ((1.0 + c.array()) * (-c.array()).exp());
}

Mat kernel_gram(const std::vector<Vec>& X, const Hyperparameters& h) {
  const int n = static_cast<int>(X.size());
  const Vec inv_ls = (-h.log_lengthscales).array().exp();
  const Mat Xs = scale_rows(X, inv_ls);
  const double s2 = h.signal_var();
  Mat K(n, n);
  for (int i = 0; i < n; ++i) {
    K(i, i) = s2;
    for (int j = 0; j < i; ++j) {
      const double c = kSqrt3 * (Xs.row(i) - Xs.row(j)).norm();
      const double v = s2 * (1.0 + c) * std::exp(-c);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

}  // namespace hrmsbo::gp
