// Apache License, Version 2.0, refer to LICENSE.txt
#ifndef INFOCRIT_PSIS_HPP
#define INFOCRIT_PSIS_HPP

#include <Eigen/Dense>

#include "infocrit/criteria.hpp"

namespace infocrit {

// Pareto-smoothed importance-sampling leave-one-out cross-validation.
struct PsisResult {
  double loo = 0.0;       // -2 * sum_j loo_j
  double p_loo = 0.0;     // lppd - lppd_loo
  double lppd_loo = 0.0;  // sum_j loo_j
  Eigen::VectorXd khat;   // per cluster; NaN where no tail fit was possible
  // Per-column log-weights after smoothing and truncation, normalized so
  // the exponentiated column sums to 1.
  Eigen::MatrixXd smoothed_logweights;
  int tail_size = 0;      // tail samples per column used for the GPD fit
  bool degraded = false;  // S too small for smoothing; raw weights used
  bool any_khat_high = false;  // some khat_j > 0.7
};

// Raw log-ratios per cluster are -loglik; the tail of the largest
// min(0.2 S, 3 sqrt(S)) weights is replaced by expected generalized-Pareto
// order statistics and all weights are truncated at the raw maximum.
// Columns with zero spread keep equal weights and report khat = NaN.
// Below 25 draws smoothing is skipped and `degraded` is set.
PsisResult psis_loo(const PointwiseLogLik& ll);

}  // namespace infocrit

#endif
