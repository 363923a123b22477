// Apache License, Version 2.0, refer to LICENSE.txt
#include <cmath>

#include "infocrit/errors.hpp"
#include "infocrit/models.hpp"
#include "infocrit/numerics.hpp"

namespace infocrit {

double plugin_deviance(const Model& model, const Eigen::VectorXd& constrained,
                       const Dataset& data) {
  if (!constrained.allFinite())
    throw UsageError("plugin_deviance: point estimate must be finite");
  const Eigen::VectorXd ll = model.pointwise_loglik_constrained(data, constrained);
  std::vector<double> terms(ll.data(), ll.data() + ll.size());
  return -2.0 * pairwise_sum(terms);
}

double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * std::log(2.0 * M_PI) - std::log(sd) - 0.5 * z * z;
}

double half_normal_logpdf(double x, double scale) {
  if (x < 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(2.0) + normal_logpdf(x, 0.0, scale);
}

FactorModel::FactorModel(int n_indicators) : n_(n_indicators) {
  if (n_ < 1) throw UsageError("FactorModel: need at least one indicator");
}

std::vector<std::pair<int, int>> FactorModel::proposal_blocks() const {
  return {{0, n_}, {n_, 2 * n_}, {2 * n_, 3 * n_}};
}

std::vector<std::string> FactorModel::param_names() const {
  std::vector<std::string> names;
  names.reserve(3 * n_);
  for (int i = 0; i < n_; ++i) names.push_back("mu." + std::to_string(i + 1));
  for (int i = 0; i < n_; ++i) names.push_back("lambda." + std::to_string(i + 1));
  for (int i = 0; i < n_; ++i) names.push_back("sigma." + std::to_string(i + 1));
  return names;
}

Eigen::VectorXd FactorModel::constrain(const Eigen::VectorXd& u) const {
  if (u.size() != 3 * n_) throw UsageError("FactorModel::constrain: bad dimension");
  Eigen::VectorXd c = u;
  for (int i = 0; i < n_; ++i) c[2 * n_ + i] = 0.10 + std::exp(u[2 * n_ + i]);
  return c;
}

Eigen::VectorXd FactorModel::unconstrain(const Eigen::VectorXd& c) const {
  if (c.size() != 3 * n_) throw UsageError("FactorModel::unconstrain: bad dimension");
  Eigen::VectorXd u = c;
  for (int i = 0; i < n_; ++i) {
    const double sigma = c[2 * n_ + i];
    if (!(sigma > 0.10))
      throw UsageError("FactorModel::unconstrain: sigma must exceed 0.10");
    u[2 * n_ + i] = std::log(sigma - 0.10);
  }
  return u;
}

double FactorModel::log_prior(const Eigen::VectorXd& u) const {
  if (u.size() != 3 * n_) throw UsageError("FactorModel::log_prior: bad dimension");
  double lp = 0.0;
  const double log_06 = std::log(0.6);
  for (int i = 0; i < n_; ++i) {
    lp += normal_logpdf(u[i], 0.0, 1.0);                    // mu
    lp += normal_logpdf(u[n_ + i], 0.0, 1.0);               // lambda
    lp += normal_logpdf(u[2 * n_ + i], log_06, 0.25);       // tau, sampled directly
  }
  return lp;
}

Eigen::VectorXd FactorModel::pointwise_loglik(const Dataset& data,
                                              const Eigen::VectorXd& u) const {
  return pointwise_loglik_constrained(data, constrain(u));
}

Eigen::VectorXd FactorModel::pointwise_loglik_constrained(
    const Dataset& data, const Eigen::VectorXd& c) const {
  if (c.size() != 3 * n_)
    throw UsageError("FactorModel::pointwise_loglik: bad parameter dimension");
  const auto mu = c.segment(0, n_);
  const auto lambda = c.segment(n_, n_);
  const auto sigma = c.segment(2 * n_, n_);

  Eigen::MatrixXd v = lambda * lambda.transpose();
  for (int i = 0; i < n_; ++i) v(i, i) += sigma[i] * sigma[i];
  // exact symmetry so SpdMatrix construction never trips on rounding
  v = ((v + v.transpose()) * 0.5).eval();
  const SpdMatrix cov(v);  // one factorization shared by all clusters

  const double norm_const =
      -0.5 * (n_ * std::log(2.0 * M_PI) + cov.log_det());
  Eigen::VectorXd out(data.size());
  for (long long j = 0; j < data.size(); ++j) {
    const Eigen::VectorXd& y = data.clusters[j].y;
    if (y.size() != n_)
      throw UsageError("FactorModel::pointwise_loglik: response length mismatch");
    out[j] = norm_const - 0.5 * cov.inv_quad_form(y - mu);
  }
  return out;
}

}  // namespace infocrit
