// Apache License, Version 2.0, refer to LICENSE.txt
#ifndef INFOCRIT_DIAGNOSTICS_HPP
#define INFOCRIT_DIAGNOSTICS_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "infocrit/models.hpp"
#include "infocrit/sampler.hpp"

namespace infocrit {

struct RhatReport {
  std::vector<std::string> parameter;
  std::vector<double> classic_rhat;
  std::vector<double> rank_normalized_split_rhat;
  double rhat_max = 1.0;  // max classic R-hat over parameters
};

struct SwitchReport {
  bool sign_switch = false;
  bool indeterminate = false;
  std::vector<int> chain_signs;  // +1 / -1 per chain, 0 where undecided
  std::string notes;
};

// Gelman-Rubin potential scale reduction: sqrt(((n-1)/n W + B/n) / W).
// Chains must agree in length (>= 4 draws each, >= 2 chains).
// Returns +inf when W = 0 with B > 0, and exactly 1 when W = B = 0.
double classic_rhat(const std::vector<Eigen::VectorXd>& chain_draws);

// Split each chain in half, rank all draws jointly (ties averaged), map
// ranks through the normal quantile at (r - 3/8) / (n + 1/4), then apply
// the classic statistic to the transformed split chains.
double rank_normalized_split_rhat(const std::vector<Eigen::VectorXd>& chain_draws);

// Both statistics for every constrained parameter of a ChainSet.
RhatReport rhat_report(const ChainSet& chains,
                       const std::vector<std::string>& parameter_names);

// Between-chain sign switching for the factor model: each chain's loading
// mean vector is signed by its alignment with the pooled absolute-mean
// direction; chains disagreeing in sign mark the fit as switching.
SwitchReport detect_sign_switch(const ChainSet& chains, const FactorModel& model);

}  // namespace infocrit

#endif
