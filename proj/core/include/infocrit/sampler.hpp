// Apache License, Version 2.0, refer to LICENSE.txt
#ifndef INFOCRIT_SAMPLER_HPP
#define INFOCRIT_SAMPLER_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "infocrit/criteria.hpp"
#include "infocrit/models.hpp"

namespace infocrit {

struct SamplerConfig {
  int chains = 4;
  int warmup = 1000;
  int iters = 1000;  // retained draws per chain (after thinning)
  int thin = 1;
  std::uint64_t seed = 0;
  double target_accept = 0.234;
  double init_range = 2.0;        // uniform(-r, r) per unconstrained coordinate
  double proposal_jitter = 1e-6;  // floor added to adapted covariances
  int max_init_tries = 100;
};

// Frozen proposal for one coordinate block (for post-run inspection and
// the adaptation-freeze tests).
struct BlockProposal {
  int begin = 0;
  int end = 0;
  double scale = 0.0;
  Eigen::MatrixXd cov_cholesky;  // lower factor of the adapted covariance
};

struct Chain {
  Eigen::MatrixXd unconstrained;  // S_post x d
  Eigen::MatrixXd constrained;    // S_post x d_c
  Eigen::VectorXd log_posterior;  // per retained draw
  Eigen::VectorXd log_lik_total;  // cached per-draw total log-likelihood
  double acceptance_rate = 0.0;   // post-warmup, pooled over blocks
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<BlockProposal> proposal;  // state frozen at end of warmup
};

struct ChainSet {
  std::vector<Chain> chains;
  int warmup = 0;
  int thin = 1;
  std::string model_name;

  long long draws_per_chain() const {
    return chains.empty() ? 0 : chains.front().unconstrained.rows();
  }
  long long total_draws() const {
    return static_cast<long long>(chains.size()) * draws_per_chain();
  }
  // Per-chain means of the constrained draws, one row per chain.
  Eigen::MatrixXd per_chain_constrained_means() const;
  // Pooled posterior mean on the constrained scale. Chains of models with
  // exchangeable components are label-aligned to the first chain before
  // averaging; other models average as-is.
  Eigen::VectorXd pooled_constrained_mean(const Model& model) const;
};

// Adaptive blockwise random-walk Metropolis on the unconstrained space.
// Proposal scale and covariance adapt only during warmup (diminishing
// step sizes, frozen afterward); chains run on independent RNG streams.
// Throws NumericError if no finite-posterior initialization is found.
ChainSet sample(const Model& model, const Dataset& data,
                const SamplerConfig& config);

// S x J pointwise log-likelihood at every retained draw, rows ordered
// chain-major then iteration, with the chain index recorded.
PointwiseLogLik pointwise_loglik_draws(const Model& model, const Dataset& data,
                                       const ChainSet& chains);

}  // namespace infocrit

#endif
