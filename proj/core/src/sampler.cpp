// Apache License, Version 2.0, refer to LICENSE.txt
#include "infocrit/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "infocrit/errors.hpp"
#include "infocrit/numerics.hpp"
#include "infocrit/rng.hpp"

namespace infocrit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Welford accumulator for a block's empirical covariance during warmup.
struct CovAccumulator {
  explicit CovAccumulator(int dim)
      : n(0), mean(Eigen::VectorXd::Zero(dim)),
        m2(Eigen::MatrixXd::Zero(dim, dim)) {}
  long long n;
  Eigen::VectorXd mean;
  Eigen::MatrixXd m2;

  void push(const Eigen::VectorXd& x) {
    ++n;
    Eigen::VectorXd delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean).transpose();
  }
  Eigen::MatrixXd covariance() const {
    return m2 / static_cast<double>(n - 1);
  }
};

struct BlockState {
  int begin = 0;
  int end = 0;
  double log_scale = 0.0;
  Eigen::MatrixXd chol;  // lower factor of regularized covariance
  CovAccumulator acc;
  long long rm_clock = 0;  // Robbins-Monro step index, reset per window

  BlockState(int b, int e)
      : begin(b), end(e), acc(e - b) {
    const int d = e - b;
    log_scale = std::log(2.38 / std::sqrt(static_cast<double>(d)));
    chol = Eigen::MatrixXd::Identity(d, d);
  }
  int dim() const { return end - begin; }

  void refresh_from_window(double jitter) {
    if (acc.n >= 10) {
      Eigen::MatrixXd cov = acc.covariance();
      cov.diagonal().array() += jitter;
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() == Eigen::Success) {
        chol = llt.matrixL();
        // partial clock reset: the scale re-equilibrates to the new
        // shape without the wild unit-size first steps
        rm_clock = std::min(rm_clock, static_cast<long long>(25));
      }
    }
    acc = CovAccumulator(dim());
  }
};

double total_loglik(const Eigen::VectorXd& pointwise) {
  return pairwise_sum(std::span<const double>(
      pointwise.data(), static_cast<std::size_t>(pointwise.size())));
}

Chain run_chain(const Model& model, const Dataset& data,
                const SamplerConfig& config, int chain_id) {
  const int dim = model.unconstrained_dim();
  RandomStream rng(config.seed, static_cast<std::uint64_t>(chain_id));

  // initialization: redraw until the log-posterior is finite
  Eigen::VectorXd u(dim);
  double cur_ll = -kInf, cur_prior = -kInf;
  auto draw_init = [&]() {
    for (int attempt = 0; attempt < config.max_init_tries; ++attempt) {
      for (int i = 0; i < dim; ++i)
        u[i] = rng.uniform(-config.init_range, config.init_range);
      try {
        cur_ll = total_loglik(model.pointwise_loglik(data, u));
        cur_prior = model.log_prior(u);
      } catch (const NumericError&) {
        continue;
      }
      if (std::isfinite(cur_ll) && std::isfinite(cur_prior)) return;
    }
    throw NumericError("sample: no finite log-posterior initialization for chain " +
                       std::to_string(chain_id) + " after " +
                       std::to_string(config.max_init_tries) + " tries");
  };
  draw_init();

  std::vector<BlockState> blocks;
  for (auto [b, e] : model.proposal_blocks()) blocks.emplace_back(b, e);
  // joint moves across all coordinates: small blocks mix the local
  // conditionals quickly but leave the joint tails under-visited
  if (blocks.size() > 1) blocks.emplace_back(0, dim);

  const int n_retained = config.iters;
  const int total_iters = config.warmup + n_retained * config.thin;

  // Warmup schedule: a greedy approach phase that walks dispersed
  // initializations into the typical set, a scale-only opening, then
  // doubling covariance windows; each window estimates the proposal
  // covariance from its own draws so earlier transients cannot
  // contaminate it.
  const int approach = std::min(600, config.warmup / 3);
  const int opening = approach + std::max(25, config.warmup * 15 / 100);
  std::vector<int> window_ends;
  {
    int start = opening, width = 50;
    while (start < config.warmup) {
      int end = start + width;
      // the final window is the longest: once the remainder would not fit
      // two more doublings, extend to the end of warmup
      if (end + 2 * width >= config.warmup) end = config.warmup;
      window_ends.push_back(end);
      start = end;
      width *= 2;
    }
  }

  Chain chain;
  chain.seed = config.seed;
  chain.stream = static_cast<std::uint64_t>(chain_id);
  chain.unconstrained.resize(n_retained, dim);
  chain.constrained.resize(n_retained, model.constrained_dim());
  chain.log_posterior.resize(n_retained);
  chain.log_lik_total.resize(n_retained);

  long long accepted_post = 0, proposed_post = 0;
  int recorded = 0;
  Eigen::VectorXd proposal = u;

  auto evaluate = [&](const Eigen::VectorXd& point, double& ll, double& prior) {
    try {
      ll = total_loglik(model.pointwise_loglik(data, point));
      prior = model.log_prior(point);
    } catch (const NumericError&) {
      ll = -kInf;
      prior = -kInf;
    }
    return std::isfinite(ll) && std::isfinite(prior);
  };

  // Approach phase: greedy climbs from a handful of dispersed starts; the
  // best endpoint seeds the sampler. Ties between observationally
  // equivalent modes stay random, so sign and labeling choices remain
  // symmetric across chains.
  auto greedy_sweep = [&](int iters, double initial_scale) {
    for (auto& block : blocks) block.log_scale = std::log(initial_scale);
    for (int it = 0; it < iters; ++it) {
      for (auto& block : blocks) {
        const int d = block.dim();
        Eigen::VectorXd z(d);
        for (int i = 0; i < d; ++i) z[i] = rng.normal();
        proposal = u;
        proposal.segment(block.begin, d) += std::exp(block.log_scale) * z;
        double prop_ll, prop_prior;
        if (evaluate(proposal, prop_ll, prop_prior) &&
            prop_ll + prop_prior > cur_ll + cur_prior) {
          u = proposal;
          cur_ll = prop_ll;
          cur_prior = prop_prior;
          block.log_scale += 0.1;
        } else {
          block.log_scale = std::max(block.log_scale - 0.05, std::log(1e-4));
        }
      }
    }
  };
  {
    constexpr int kRestarts = 4;
    Eigen::VectorXd best_u = u;
    double best_ll = cur_ll, best_prior = cur_prior;
    for (int restart = 0; restart < kRestarts; ++restart) {
      if (restart > 0) draw_init();
      greedy_sweep(std::max(1, approach / kRestarts), 0.5);
      if (cur_ll + cur_prior > best_ll + best_prior) {
        best_u = u;
        best_ll = cur_ll;
        best_prior = cur_prior;
      }
    }
    u = best_u;
    cur_ll = best_ll;
    cur_prior = best_prior;
    // polish the winning restart so the Metropolis phase starts from a
    // point already inside the typical set
    greedy_sweep(approach / 2, 0.05);

    for (auto& block : blocks) {
      block.log_scale = std::log(2.38 / std::sqrt(static_cast<double>(block.dim())));
      block.rm_clock = 0;
    }
  }

  for (int iter = approach; iter < total_iters; ++iter) {
    const bool in_warmup = iter < config.warmup;
    for (auto& block : blocks) {
      const int d = block.dim();
      Eigen::VectorXd z(d);
      for (int i = 0; i < d; ++i) z[i] = rng.normal();
      proposal = u;
      proposal.segment(block.begin, d) +=
          std::exp(block.log_scale) * (block.chol * z);

      double prop_ll, prop_prior;
      const bool finite_prop = evaluate(proposal, prop_ll, prop_prior);
      double accept_prob = 0.0;
      if (finite_prop) {
        const double log_alpha = (prop_ll + prop_prior) - (cur_ll + cur_prior);
        accept_prob = std::min(1.0, std::exp(log_alpha));
      }
      if (!in_warmup) ++proposed_post;
      if (rng.uniform() < accept_prob) {
        u = proposal;
        cur_ll = prop_ll;
        cur_prior = prop_prior;
        if (!in_warmup) ++accepted_post;
      }
      if (in_warmup) {
        const double gamma =
            std::pow(static_cast<double>(++block.rm_clock), -0.6);
        block.log_scale += gamma * (accept_prob - config.target_accept);
      }
    }

    if (in_warmup) {
      const bool past_opening = iter >= opening;
      const bool window_closes =
          !window_ends.empty() &&
          std::find(window_ends.begin(), window_ends.end(), iter + 1) !=
              window_ends.end();
      for (auto& block : blocks) {
        if (past_opening) block.acc.push(u.segment(block.begin, block.dim()));
        if (window_closes) block.refresh_from_window(config.proposal_jitter);
      }
    } else if ((iter - config.warmup) % config.thin == 0) {
      chain.unconstrained.row(recorded) = u.transpose();
      chain.constrained.row(recorded) = model.constrain(u).transpose();
      chain.log_posterior[recorded] = cur_ll + cur_prior;
      chain.log_lik_total[recorded] = cur_ll;
      ++recorded;
    }
  }

  chain.acceptance_rate =
      proposed_post > 0
          ? static_cast<double>(accepted_post) / static_cast<double>(proposed_post)
          : 0.0;
  for (const auto& block : blocks)
    chain.proposal.push_back(BlockProposal{block.begin, block.end,
                                           std::exp(block.log_scale), block.chol});
  return chain;
}

}  // namespace

Eigen::MatrixXd ChainSet::per_chain_constrained_means() const {
  if (chains.empty()) throw UsageError("ChainSet: no chains");
  const Eigen::Index dim = chains.front().constrained.cols();
  Eigen::MatrixXd means(static_cast<Eigen::Index>(chains.size()), dim);
  for (std::size_t c = 0; c < chains.size(); ++c)
    means.row(static_cast<Eigen::Index>(c)) = chains[c].constrained.colwise().mean();
  return means;
}

Eigen::VectorXd ChainSet::pooled_constrained_mean(const Model& model) const {
  const Eigen::MatrixXd means = per_chain_constrained_means();
  const Eigen::VectorXd reference = means.row(0);
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(means.cols());
  for (Eigen::Index c = 0; c < means.rows(); ++c)
    pooled += model.align_to(reference, means.row(c));
  return pooled / static_cast<double>(means.rows());
}

ChainSet sample(const Model& model, const Dataset& data,
                const SamplerConfig& config) {
  if (config.chains < 1) throw UsageError("sample: need at least one chain");
  if (config.iters < 1) throw UsageError("sample: need at least one retained draw");
  if (config.warmup < 0 || config.thin < 1)
    throw UsageError("sample: invalid warmup/thin");

  ChainSet set;
  set.warmup = config.warmup;
  set.thin = config.thin;
  set.model_name = model.name();
  set.chains.resize(config.chains);

  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(config.chains);
  for (int c = 0; c < config.chains; ++c) {
    workers.emplace_back([&, c]() {
      try {
        set.chains[c] = run_chain(model, data, config, c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
  return set;
}

PointwiseLogLik pointwise_loglik_draws(const Model& model, const Dataset& data,
                                       const ChainSet& chains) {
  if (chains.chains.empty()) throw UsageError("pointwise_loglik_draws: no chains");
  const long long per_chain = chains.draws_per_chain();
  const long long total = chains.total_draws();
  Eigen::MatrixXd values(total, data.size());
  std::vector<int> chain_index(total);

  long long row = 0;
  for (std::size_t c = 0; c < chains.chains.size(); ++c) {
    const Chain& chain = chains.chains[c];
    for (long long s = 0; s < per_chain; ++s, ++row) {
      values.row(row) = model
                            .pointwise_loglik_constrained(
                                data, chain.constrained.row(s).transpose())
                            .transpose();
      chain_index[row] = static_cast<int>(c);
    }
  }
  return PointwiseLogLik(std::move(values), std::move(chain_index));
}

}  // namespace infocrit
