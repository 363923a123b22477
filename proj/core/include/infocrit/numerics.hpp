// Apache License, Version 2.0, refer to LICENSE.txt
#ifndef INFOCRIT_NUMERICS_HPP
#define INFOCRIT_NUMERICS_HPP

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

namespace infocrit {

// Deterministic pairwise reduction. Column statistics are defined in terms
// of this order so results do not depend on how work is partitioned.
double pairwise_sum(std::span<const double> values);

// log(sum_i exp(values[i])), shift-invariant, tolerates -inf entries.
// Throws UsageError on empty input and NumericError on NaN.
double log_sum_exp(std::span<const double> values);
double log_sum_exp(const Eigen::VectorXd& values);

// Mean / unbiased (n-1) variance over a fixed vector, pairwise order.
double sample_mean(std::span<const double> values);
double sample_variance(std::span<const double> values);

// One-pass Welford accumulator for streaming inputs.
class RunningMoments {
 public:
  void push(double x);
  long long count() const { return n_; }
  double mean() const;       // UsageError if empty
  double variance() const;   // unbiased; UsageError if n < 2
 private:
  long long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Symmetric positive definite matrix, factored once at construction.
// Construction throws NumericError if the matrix is asymmetric beyond
// 1e-12 relative or any Cholesky pivot is non-positive.
class SpdMatrix {
 public:
  explicit SpdMatrix(const Eigen::MatrixXd& m);

  int dim() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const Eigen::MatrixXd& cholesky_factor() const { return chol_; }  // lower
  double log_det() const { return log_det_; }
  // r' M^{-1} r via one triangular solve; no explicit inverse is formed.
  double inv_quad_form(const Eigen::VectorXd& r) const;

 private:
  Eigen::MatrixXd matrix_;
  Eigen::MatrixXd chol_;
  double log_det_ = 0.0;
};

// Multivariate normal log-density at x. UsageError on dimension mismatch.
double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const SpdMatrix& cov);

// Generalized Pareto fit over tail excesses.
struct GpdFit {
  double k_hat = 0.0;      // shape
  double sigma_hat = 0.0;  // scale, > 0
  int n_tail = 0;          // samples used, >= 5
};

// Profile posterior-mean shape estimate on a grid of candidates
// (Zhang & Stephens 2009, with the n/(n+10) shrinkage used by PSIS).
// Input must be sorted ascending and strictly positive. Returns nullopt
// when fewer than 5 samples are supplied or the fit degenerates.
std::optional<GpdFit> fit_gpd_tail(std::span<const double> sorted_tail);

// Quantile of the fitted GPD excess distribution at probability p.
double gpd_quantile(double p, double k, double sigma);

// Inverse standard normal CDF (Wichura's PPND16-style rational fit).
double std_normal_quantile(double p);

}  // namespace infocrit

#endif
