// Apache License, Version 2.0, refer to LICENSE.txt
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "infocrit/errors.hpp"
#include "infocrit/models.hpp"
#include "infocrit/numerics.hpp"

namespace infocrit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double inv_logit(double x) {
  return (x >= 0.0) ? 1.0 / (1.0 + std::exp(-x))
                    : std::exp(x) / (1.0 + std::exp(x));
}

// 2x2 covariance from (sd1, sd2, rho).
Eigen::Matrix2d cov2x2(double s1, double s2, double rho) {
  Eigen::Matrix2d psi;
  psi << s1 * s1, rho * s1 * s2, rho * s1 * s2, s2 * s2;
  return psi;
}

}  // namespace

Eigen::VectorXd stick_breaking_simplex(const Eigen::VectorXd& sticks) {
  const int k = static_cast<int>(sticks.size()) + 1;
  Eigen::VectorXd w(k);
  double remaining = 1.0;
  for (int i = 0; i < k - 1; ++i) {
    const double z = inv_logit(sticks[i] - std::log(static_cast<double>(k - 1 - i)));
    w[i] = remaining * z;
    remaining -= w[i];
  }
  w[k - 1] = remaining;
  return w;
}

Eigen::VectorXd stick_breaking_inverse(const Eigen::VectorXd& simplex) {
  const int k = static_cast<int>(simplex.size());
  if (k < 2) throw UsageError("stick_breaking_inverse: need at least 2 weights");
  Eigen::VectorXd sticks(k - 1);
  double remaining = 1.0;
  for (int i = 0; i < k - 1; ++i) {
    const double z = simplex[i] / remaining;
    if (!(z > 0.0 && z < 1.0))
      throw UsageError("stick_breaking_inverse: weights must be interior");
    sticks[i] = std::log(z / (1.0 - z)) + std::log(static_cast<double>(k - 1 - i));
    remaining -= simplex[i];
  }
  return sticks;
}

double stick_breaking_log_jacobian(const Eigen::VectorXd& sticks) {
  const int k = static_cast<int>(sticks.size()) + 1;
  double lj = 0.0;
  double remaining = 1.0;
  for (int i = 0; i < k - 1; ++i) {
    const double z = inv_logit(sticks[i] - std::log(static_cast<double>(k - 1 - i)));
    lj += std::log(z) + std::log1p(-z) + std::log(remaining);
    remaining -= remaining * z;
  }
  return lj;
}

double lkj_2x2_logpdf(double rho, double eta) {
  if (!(rho > -1.0 && rho < 1.0))
    return -kInf;
  // normalizer: integral of (1-rho^2)^(eta-1) over (-1,1) is sqrt(pi)
  // Gamma(eta) / Gamma(eta + 1/2)
  const double log_norm =
      0.5 * std::log(M_PI) + std::lgamma(eta) - std::lgamma(eta + 0.5);
  return (eta - 1.0) * std::log1p(-rho * rho) - log_norm;
}

double dirichlet_logpdf(const Eigen::VectorXd& w, double alpha) {
  const int k = static_cast<int>(w.size());
  double lp = std::lgamma(alpha * k) - k * std::lgamma(alpha);
  for (int i = 0; i < k; ++i) {
    if (!(w[i] > 0.0)) return -kInf;
    lp += (alpha - 1.0) * std::log(w[i]);
  }
  return lp;
}

GmmModel::GmmModel(int n_classes, GmmPriorConfig prior)
    : k_(n_classes), prior_(prior) {
  if (k_ < 1) throw UsageError("GmmModel: need at least one class");
}

std::vector<std::pair<int, int>> GmmModel::proposal_blocks() const {
  std::vector<std::pair<int, int>> blocks;
  for (int k = 0; k < k_; ++k) blocks.push_back({3 * k, 3 * k + 3});          // beta
  for (int k = 0; k < k_; ++k) blocks.push_back({3 * k_ + 3 * k, 3 * k_ + 3 * k + 3});
  blocks.push_back({6 * k_, 6 * k_ + 1});  // log sigma_e
  if (k_ > 1) blocks.push_back({6 * k_ + 1, 7 * k_});  // sticks
  return blocks;
}

std::vector<std::string> GmmModel::param_names() const {
  std::vector<std::string> names;
  for (int k = 1; k <= k_; ++k) {
    names.push_back("beta0." + std::to_string(k));
    names.push_back("beta1." + std::to_string(k));
    names.push_back("beta2." + std::to_string(k));
  }
  for (int k = 1; k <= k_; ++k) {
    names.push_back("sigma1." + std::to_string(k));
    names.push_back("sigma2." + std::to_string(k));
    names.push_back("rho." + std::to_string(k));
  }
  names.push_back("sigma_e");
  for (int k = 1; k <= k_; ++k) names.push_back("w." + std::to_string(k));
  return names;
}

Eigen::VectorXd GmmModel::constrain(const Eigen::VectorXd& u) const {
  if (u.size() != unconstrained_dim())
    throw UsageError("GmmModel::constrain: bad dimension");
  Eigen::VectorXd c(constrained_dim());
  c.segment(0, 3 * k_) = u.segment(0, 3 * k_);  // beta unchanged
  for (int k = 0; k < k_; ++k) {
    c[3 * k_ + 3 * k + 0] = std::exp(u[3 * k_ + 3 * k + 0]);   // sigma1
    c[3 * k_ + 3 * k + 1] = std::exp(u[3 * k_ + 3 * k + 1]);   // sigma2
    c[3 * k_ + 3 * k + 2] = std::tanh(u[3 * k_ + 3 * k + 2]);  // rho
  }
  c[6 * k_] = std::exp(u[6 * k_]);  // sigma_e
  if (k_ > 1) {
    c.segment(6 * k_ + 1, k_) =
        stick_breaking_simplex(u.segment(6 * k_ + 1, k_ - 1));
  } else {
    c[6 * k_ + 1] = 1.0;
  }
  return c;
}

Eigen::VectorXd GmmModel::unconstrain(const Eigen::VectorXd& c) const {
  if (c.size() != constrained_dim())
    throw UsageError("GmmModel::unconstrain: bad dimension");
  Eigen::VectorXd u(unconstrained_dim());
  u.segment(0, 3 * k_) = c.segment(0, 3 * k_);
  for (int k = 0; k < k_; ++k) {
    const double s1 = c[3 * k_ + 3 * k + 0];
    const double s2 = c[3 * k_ + 3 * k + 1];
    const double rho = c[3 * k_ + 3 * k + 2];
    if (!(s1 > 0.0 && s2 > 0.0))
      throw UsageError("GmmModel::unconstrain: standard deviations must be positive");
    if (!(rho > -1.0 && rho < 1.0))
      throw UsageError("GmmModel::unconstrain: |rho| must be below 1");
    u[3 * k_ + 3 * k + 0] = std::log(s1);
    u[3 * k_ + 3 * k + 1] = std::log(s2);
    u[3 * k_ + 3 * k + 2] = std::atanh(rho);
  }
  if (!(c[6 * k_] > 0.0))
    throw UsageError("GmmModel::unconstrain: sigma_e must be positive");
  u[6 * k_] = std::log(c[6 * k_]);
  if (k_ > 1)
    u.segment(6 * k_ + 1, k_ - 1) =
        stick_breaking_inverse(c.segment(6 * k_ + 1, k_));
  return u;
}

double GmmModel::log_prior(const Eigen::VectorXd& u) const {
  if (u.size() != unconstrained_dim())
    throw UsageError("GmmModel::log_prior: bad dimension");
  double lp = 0.0;
  for (int i = 0; i < 3 * k_; ++i)
    lp += normal_logpdf(u[i], 0.0, prior_.beta_sd);
  for (int k = 0; k < k_; ++k) {
    const double log_s1 = u[3 * k_ + 3 * k + 0];
    const double log_s2 = u[3 * k_ + 3 * k + 1];
    const double z_rho = u[3 * k_ + 3 * k + 2];
    const double rho = std::tanh(z_rho);
    // half-normal on the sd, plus log-scale Jacobian
    lp += half_normal_logpdf(std::exp(log_s1), prior_.sigma_scale) + log_s1;
    lp += half_normal_logpdf(std::exp(log_s2), prior_.sigma_scale) + log_s2;
    // LKJ on rho, plus tanh Jacobian log(1 - rho^2)
    lp += lkj_2x2_logpdf(rho, prior_.lkj_eta) + std::log1p(-rho * rho);
  }
  const double log_se = u[6 * k_];
  lp += half_normal_logpdf(std::exp(log_se), prior_.sigma_scale) + log_se;
  if (k_ > 1) {
    const Eigen::VectorXd sticks = u.segment(6 * k_ + 1, k_ - 1);
    const Eigen::VectorXd w = stick_breaking_simplex(sticks);
    lp += dirichlet_logpdf(w, prior_.dirichlet_alpha) +
          stick_breaking_log_jacobian(sticks);
  }
  return lp;
}

Eigen::VectorXd GmmModel::pointwise_loglik(const Dataset& data,
                                           const Eigen::VectorXd& u) const {
  return pointwise_loglik_constrained(data, constrain(u));
}

Eigen::VectorXd GmmModel::pointwise_loglik_constrained(
    const Dataset& data, const Eigen::VectorXd& c) const {
  if (c.size() != constrained_dim())
    throw UsageError("GmmModel::pointwise_loglik: bad parameter dimension");
  const long long j_count = data.size();
  Eigen::VectorXd out(j_count);
  const double sigma_e = c[6 * k_];

  Eigen::VectorXd log_w(k_);
  for (int k = 0; k < k_; ++k) {
    const double w = c[6 * k_ + 1 + k];
    log_w[k] = (w > 0.0) ? std::log(w) : -kInf;
  }

  // Clusters sharing one time design share the per-class factorizations.
  // Group by the time vector; data generated here uses a single design.
  std::vector<long long> group_of(j_count, -1);
  std::vector<const Eigen::VectorXd*> group_times;
  for (long long j = 0; j < j_count; ++j) {
    const Eigen::VectorXd& t = data.clusters[j].t;
    if (t.size() < 2)
      throw UsageError("GmmModel::pointwise_loglik: clusters need >= 2 occasions");
    for (std::size_t g = 0; g < group_times.size(); ++g) {
      if (group_times[g]->size() == t.size() && *group_times[g] == t) {
        group_of[j] = static_cast<long long>(g);
        break;
      }
    }
    if (group_of[j] < 0) {
      group_of[j] = static_cast<long long>(group_times.size());
      group_times.push_back(&t);
    }
  }

  // Per group, per class: mean trajectory and covariance factorization.
  struct ClassDensity {
    Eigen::VectorXd mean;
    std::unique_ptr<SpdMatrix> cov;
    double norm_const = 0.0;
  };
  std::vector<std::vector<ClassDensity>> groups(group_times.size());
  for (std::size_t g = 0; g < group_times.size(); ++g) {
    const Eigen::VectorXd& t = *group_times[g];
    const int n = static_cast<int>(t.size());
    Eigen::MatrixXd x(n, 3), z(n, 2);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = 1.0;
      x(i, 1) = t[i];
      x(i, 2) = t[i] * t[i];
      z(i, 0) = 1.0;
      z(i, 1) = t[i];
    }
    groups[g].resize(k_);
    for (int k = 0; k < k_; ++k) {
      const Eigen::Vector3d b = c.segment(3 * k, 3);
      const double s1 = c[3 * k_ + 3 * k + 0];
      const double s2 = c[3 * k_ + 3 * k + 1];
      const double rho = c[3 * k_ + 3 * k + 2];
      Eigen::MatrixXd v = z * cov2x2(s1, s2, rho) * z.transpose();
      for (int i = 0; i < n; ++i) v(i, i) += sigma_e * sigma_e;
      v = ((v + v.transpose()) * 0.5).eval();
      groups[g][k].mean = x * b;
      groups[g][k].cov = std::make_unique<SpdMatrix>(v);
      groups[g][k].norm_const =
          -0.5 * (n * std::log(2.0 * M_PI) + groups[g][k].cov->log_det());
    }
  }

  std::vector<double> class_terms(k_);
  for (long long j = 0; j < j_count; ++j) {
    const auto& dens = groups[group_of[j]];
    const Eigen::VectorXd& y = data.clusters[j].y;
    if (y.size() != dens[0].mean.size())
      throw UsageError("GmmModel::pointwise_loglik: response length mismatch");
    for (int k = 0; k < k_; ++k) {
      class_terms[k] =
          (log_w[k] == -kInf)
              ? -kInf
              : log_w[k] + dens[k].norm_const -
                    0.5 * dens[k].cov->inv_quad_form(y - dens[k].mean);
    }
    out[j] = log_sum_exp(class_terms);
  }
  return out;
}

Eigen::VectorXd GmmModel::align_to(const Eigen::VectorXd& reference,
                                   const Eigen::VectorXd& c) const {
  if (k_ == 1) return c;
  // distance between class parameter blocks (beta, sds, rho)
  auto class_vec = [&](const Eigen::VectorXd& v, int k) {
    Eigen::VectorXd blk(6);
    blk.segment(0, 3) = v.segment(3 * k, 3);
    blk.segment(3, 3) = v.segment(3 * k_ + 3 * k, 3);
    return blk;
  };
  std::vector<int> perm(k_), best(k_);
  std::iota(perm.begin(), perm.end(), 0);
  best = perm;
  double best_cost = kInf;
  do {
    double cost = 0.0;
    for (int k = 0; k < k_; ++k)
      cost += (class_vec(reference, k) - class_vec(c, perm[k])).squaredNorm();
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  Eigen::VectorXd aligned(constrained_dim());
  for (int k = 0; k < k_; ++k) {
    aligned.segment(3 * k, 3) = c.segment(3 * best[k], 3);
    aligned.segment(3 * k_ + 3 * k, 3) = c.segment(3 * k_ + 3 * best[k], 3);
    aligned[6 * k_ + 1 + k] = c[6 * k_ + 1 + best[k]];
  }
  aligned[6 * k_] = c[6 * k_];
  return aligned;
}

Eigen::Vector3d GmmModel::beta(const Eigen::VectorXd& c, int k) const {
  return c.segment(3 * k, 3);
}

double GmmModel::weight(const Eigen::VectorXd& c, int k) const {
  return c[6 * k_ + 1 + k];
}

}  // namespace infocrit
