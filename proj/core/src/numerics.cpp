// Apache License, Version 2.0, refer to LICENSE.txt
#include "infocrit/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "infocrit/errors.hpp"

namespace infocrit {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  if (n <= 16) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw UsageError("log_sum_exp: empty input");
  double max = -kInf;
  for (double v : values) {
    if (std::isnan(v)) throw NumericError("log_sum_exp: NaN input");
    max = std::max(max, v);
  }
  if (max == -kInf) return -kInf;  // all terms are exp(-inf) = 0
  std::vector<double> shifted(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    shifted[i] = std::exp(values[i] - max);
  return max + std::log(pairwise_sum(shifted));
}

double log_sum_exp(const Eigen::VectorXd& values) {
  return log_sum_exp(std::span<const double>(values.data(),
                                             static_cast<std::size_t>(values.size())));
}

double sample_mean(std::span<const double> values) {
  if (values.empty()) throw UsageError("sample_mean: empty input");
  return pairwise_sum(values) / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw UsageError("sample_variance: need at least 2 values");
  const double m = sample_mean(values);
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - m;
    sq[i] = d * d;
  }
  return pairwise_sum(sq) / static_cast<double>(values.size() - 1);
}

void RunningMoments::push(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

double RunningMoments::mean() const {
  if (n_ == 0) throw UsageError("RunningMoments::mean: no values");
  return mean_;
}

double RunningMoments::variance() const {
  if (n_ < 2) throw UsageError("RunningMoments::variance: need at least 2 values");
  return m2_ / static_cast<double>(n_ - 1);
}

SpdMatrix::SpdMatrix(const Eigen::MatrixXd& m) : matrix_(m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw UsageError("SpdMatrix: matrix must be square and non-empty");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale)
        throw NumericError("SpdMatrix: matrix is not symmetric");

  Eigen::LLT<Eigen::MatrixXd> llt(matrix_);
  if (llt.info() != Eigen::Success)
    throw NumericError("SpdMatrix: Cholesky factorization failed (not SPD)");
  chol_ = llt.matrixL();
  double ld = 0.0;
  for (Eigen::Index i = 0; i < chol_.rows(); ++i) {
    if (!(chol_(i, i) > 0.0))
      throw NumericError("SpdMatrix: non-positive Cholesky pivot");
    ld += std::log(chol_(i, i));
  }
  log_det_ = 2.0 * ld;
}

double SpdMatrix::inv_quad_form(const Eigen::VectorXd& r) const {
  if (r.size() != matrix_.rows())
    throw UsageError("SpdMatrix::inv_quad_form: dimension mismatch");
  Eigen::VectorXd z =
      chol_.triangularView<Eigen::Lower>().solve(r);
  return z.squaredNorm();
}

double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const SpdMatrix& cov) {
  const Eigen::Index n = x.size();
  if (mean.size() != n || cov.dim() != n)
    throw UsageError("mvn_logpdf: dimension mismatch");
  const double quad = cov.inv_quad_form(x - mean);
  return -0.5 * (static_cast<double>(n) * std::log(2.0 * M_PI) + cov.log_det() + quad);
}

std::optional<GpdFit> fit_gpd_tail(std::span<const double> sorted_tail) {
  const int n = static_cast<int>(sorted_tail.size());
  if (n < 5) return std::nullopt;
  for (int i = 0; i < n; ++i) {
    if (!(sorted_tail[i] > 0.0) || !std::isfinite(sorted_tail[i]))
      throw NumericError("fit_gpd_tail: samples must be positive and finite");
    if (i > 0 && sorted_tail[i] < sorted_tail[i - 1])
      throw UsageError("fit_gpd_tail: input must be sorted ascending");
  }

  const double x_max = sorted_tail[n - 1];
  // first-quartile pivot, 1-based index floor(n/4 + 0.5)
  const int q_idx = std::max(1, static_cast<int>(std::floor(n / 4.0 + 0.5)));
  const double x_star = sorted_tail[q_idx - 1];
  const int grid = 30 + static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));

  std::vector<double> theta(grid), prof(grid);
  for (int j = 0; j < grid; ++j) {
    theta[j] = 1.0 / x_max +
               (1.0 - std::sqrt(static_cast<double>(grid) / (j + 0.5))) /
                   (3.0 * x_star);
    // profile log-likelihood of theta = k/sigma reparameterization
    double mean_log1p = 0.0;
    for (int i = 0; i < n; ++i) mean_log1p += std::log1p(-theta[j] * sorted_tail[i]);
    mean_log1p /= n;
    prof[j] = n * (std::log(-theta[j] / mean_log1p) - mean_log1p - 1.0);
  }

  // normalized profile weights -> posterior-mean theta
  double theta_hat = 0.0, weight_sum = 0.0;
  for (int j = 0; j < grid; ++j) {
    double inv_w = 0.0;
    for (int i = 0; i < grid; ++i) inv_w += std::exp(prof[i] - prof[j]);
    const double w = 1.0 / inv_w;
    theta_hat += w * theta[j];
    weight_sum += w;
  }
  theta_hat /= weight_sum;

  double k = 0.0;
  for (int i = 0; i < n; ++i) k += std::log1p(-theta_hat * sorted_tail[i]);
  k /= n;
  const double sigma = -k / theta_hat;
  // shrink k toward 0.5 with prior weight 10 pseudo-observations
  const double k_reg = (k * n + 5.0) / (n + 10.0);

  if (!std::isfinite(k_reg) || !(sigma > 0.0) || !std::isfinite(sigma))
    return std::nullopt;
  return GpdFit{k_reg, sigma, n};
}

double gpd_quantile(double p, double k, double sigma) {
  if (!(p >= 0.0 && p < 1.0)) throw UsageError("gpd_quantile: p must be in [0,1)");
  if (std::abs(k) < 1e-12) return -sigma * std::log1p(-p);
  return sigma * std::expm1(-k * std::log1p(-p)) / k;
}

double std_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw UsageError("std_normal_quantile: p must be in (0,1)");
  // Wichura (1988) algorithm AS 241, PPND16 coefficients.
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -value : value;
}

}  // namespace infocrit
