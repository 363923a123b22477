// Apache License, Version 2.0, refer to LICENSE.txt
#ifndef INFOCRIT_MODELS_HPP
#define INFOCRIT_MODELS_HPP

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace infocrit {

// One cluster's responses. For longitudinal data `t` holds the
// measurement times; cross-sectional models leave it empty.
struct Cluster {
  Eigen::VectorXd y;
  Eigen::VectorXd t;
};

struct DatasetMeta {
  std::string design;     // "fa" | "gmm" | free-form
  std::string condition;  // condition label, e.g. "ug1" or "c0.9_s1.0_J400"
  long long replicate = -1;
  std::uint64_t seed = 0;
  std::map<std::string, double> attrs;  // generating values, counts, ...
};

struct Dataset {
  std::vector<Cluster> clusters;
  DatasetMeta meta;

  long long size() const { return static_cast<long long>(clusters.size()); }
};

// A fittable model: parameter layout, unconstrained<->constrained
// transforms, log-prior (with transform Jacobians folded in), and the
// per-cluster marginal log-likelihood. Implementations are immutable and
// reentrant; concurrent evaluation at distinct points is safe.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual int unconstrained_dim() const = 0;
  virtual int constrained_dim() const = 0;
  virtual int free_param_count() const = 0;  // q
  // Coordinate ranges [begin, end) updated together by blockwise samplers.
  virtual std::vector<std::pair<int, int>> proposal_blocks() const = 0;
  virtual std::vector<std::string> param_names() const = 0;  // constrained

  virtual Eigen::VectorXd constrain(const Eigen::VectorXd& u) const = 0;
  virtual Eigen::VectorXd unconstrain(const Eigen::VectorXd& c) const = 0;

  // Log-prior density of the unconstrained point, including the
  // log-Jacobians of all constraining transforms.
  virtual double log_prior(const Eigen::VectorXd& u) const = 0;

  // Length-J vector of marginal log-likelihood contributions.
  virtual Eigen::VectorXd pointwise_loglik(const Dataset& data,
                                           const Eigen::VectorXd& u) const = 0;
  virtual Eigen::VectorXd pointwise_loglik_constrained(
      const Dataset& data, const Eigen::VectorXd& c) const = 0;

  // Map a constrained point onto the labeling of `reference` when the
  // model has exchangeable components; identity otherwise.
  virtual Eigen::VectorXd align_to(const Eigen::VectorXd& reference,
                                   const Eigen::VectorXd& c) const {
    (void)reference;
    return c;
  }
};

// -2 * sum_j loglik_j at a single constrained point (the plug-in value).
double plugin_deviance(const Model& model, const Eigen::VectorXd& constrained,
                       const Dataset& data);

// One-factor model with n indicators: y_j ~ N(mu, lambda lambda' + diag(sigma^2)).
// Unconstrained layout [mu(n), lambda(n), tau(n)] with sigma = 0.10 + exp(tau).
// Priors: mu_i, lambda_i ~ N(0,1); tau_i ~ N(log 0.6, 0.25^2).
class FactorModel : public Model {
 public:
  explicit FactorModel(int n_indicators);

  std::string name() const override { return "fa"; }
  int indicators() const { return n_; }
  int unconstrained_dim() const override { return 3 * n_; }
  int constrained_dim() const override { return 3 * n_; }
  int free_param_count() const override { return 3 * n_; }
  std::vector<std::pair<int, int>> proposal_blocks() const override;
  std::vector<std::string> param_names() const override;

  Eigen::VectorXd constrain(const Eigen::VectorXd& u) const override;
  Eigen::VectorXd unconstrain(const Eigen::VectorXd& c) const override;
  double log_prior(const Eigen::VectorXd& u) const override;
  Eigen::VectorXd pointwise_loglik(const Dataset& data,
                                   const Eigen::VectorXd& u) const override;
  Eigen::VectorXd pointwise_loglik_constrained(
      const Dataset& data, const Eigen::VectorXd& c) const override;

  // Constrained indices of the loading vector, for switching diagnostics.
  std::pair<int, int> loading_range() const { return {n_, 2 * n_}; }

 private:
  int n_;
};

struct GmmPriorConfig {
  double beta_sd = 10.0;        // N(0, beta_sd^2) on fixed effects
  double sigma_scale = 10.0;    // half-normal scale for sigma_e, sigma_1, sigma_2
  double lkj_eta = 2.0;         // LKJ shape on the 2x2 correlation
  double dirichlet_alpha = 10.0;
};

// K-class growth mixture: quadratic fixed trajectory per class, varying
// intercept/slope with class-specific 2x2 covariance, shared residual sd.
// Unconstrained layout: [beta(3K)][log s1, log s2, atanh rho per class (3K)]
// [log sigma_e][sticks (K-1)], q = 7K.
class GmmModel : public Model {
 public:
  explicit GmmModel(int n_classes, GmmPriorConfig prior = {});

  std::string name() const override { return "gmm" + std::to_string(k_); }
  int classes() const { return k_; }
  const GmmPriorConfig& prior() const { return prior_; }
  int unconstrained_dim() const override { return 7 * k_; }
  int constrained_dim() const override { return 7 * k_ + 1; }
  int free_param_count() const override { return 7 * k_; }
  std::vector<std::pair<int, int>> proposal_blocks() const override;
  std::vector<std::string> param_names() const override;

  Eigen::VectorXd constrain(const Eigen::VectorXd& u) const override;
  Eigen::VectorXd unconstrain(const Eigen::VectorXd& c) const override;
  double log_prior(const Eigen::VectorXd& u) const override;
  Eigen::VectorXd pointwise_loglik(const Dataset& data,
                                   const Eigen::VectorXd& u) const override;
  Eigen::VectorXd pointwise_loglik_constrained(
      const Dataset& data, const Eigen::VectorXd& c) const override;
  Eigen::VectorXd align_to(const Eigen::VectorXd& reference,
                           const Eigen::VectorXd& c) const override;

  // Constrained accessors (class index 0-based).
  Eigen::Vector3d beta(const Eigen::VectorXd& c, int k) const;
  double weight(const Eigen::VectorXd& c, int k) const;

 private:
  int k_;
  GmmPriorConfig prior_;
};

// Simplex transforms shared by the mixture model and its tests.
Eigen::VectorXd stick_breaking_simplex(const Eigen::VectorXd& sticks);
Eigen::VectorXd stick_breaking_inverse(const Eigen::VectorXd& simplex);
double stick_breaking_log_jacobian(const Eigen::VectorXd& sticks);

// Density helpers (normalized), exposed for direct verification.
double normal_logpdf(double x, double mean, double sd);
double half_normal_logpdf(double x, double scale);
double lkj_2x2_logpdf(double rho, double eta);
double dirichlet_logpdf(const Eigen::VectorXd& w, double alpha);

}  // namespace infocrit

#endif
