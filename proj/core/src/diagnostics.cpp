// Apache License, Version 2.0, refer to LICENSE.txt
#include "infocrit/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "infocrit/errors.hpp"
#include "infocrit/numerics.hpp"

namespace infocrit {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double classic_rhat(const std::vector<Eigen::VectorXd>& chain_draws) {
  const int m = static_cast<int>(chain_draws.size());
  if (m < 2) throw UsageError("classic_rhat: need at least 2 chains");
  const Eigen::Index n = chain_draws.front().size();
  if (n < 4) throw UsageError("classic_rhat: need at least 4 draws per chain");
  for (const auto& c : chain_draws)
    if (c.size() != n) throw UsageError("classic_rhat: chains must agree in length");

  std::vector<double> chain_means(m), chain_vars(m);
  for (int c = 0; c < m; ++c) {
    std::span<const double> v(chain_draws[c].data(),
                              static_cast<std::size_t>(n));
    chain_means[c] = sample_mean(v);
    chain_vars[c] = sample_variance(v);
  }
  const double w = sample_mean(chain_vars);
  const double grand = sample_mean(chain_means);
  double b = 0.0;
  for (int c = 0; c < m; ++c) {
    const double d = chain_means[c] - grand;
    b += d * d;
  }
  b *= static_cast<double>(n) / (m - 1);

  if (w == 0.0) return (b == 0.0) ? 1.0 : kInf;
  const double nn = static_cast<double>(n);
  return std::sqrt(((nn - 1.0) / nn * w + b / nn) / w);
}

double rank_normalized_split_rhat(const std::vector<Eigen::VectorXd>& chain_draws) {
  const int m = static_cast<int>(chain_draws.size());
  if (m < 2) throw UsageError("rank_normalized_split_rhat: need at least 2 chains");
  const Eigen::Index n = chain_draws.front().size();
  if (n < 4)
    throw UsageError("rank_normalized_split_rhat: need at least 4 draws per chain");
  for (const auto& c : chain_draws)
    if (c.size() != n)
      throw UsageError("rank_normalized_split_rhat: chains must agree in length");

  // split halves: first floor(n/2) and last floor(n/2) draws of each chain
  const Eigen::Index half = n / 2;
  std::vector<std::pair<double, std::pair<int, Eigen::Index>>> pooled;
  pooled.reserve(static_cast<std::size_t>(2 * m * half));
  for (int c = 0; c < m; ++c) {
    for (Eigen::Index i = 0; i < half; ++i)
      pooled.push_back({chain_draws[c][i], {2 * c, i}});
    for (Eigen::Index i = 0; i < half; ++i)
      pooled.push_back({chain_draws[c][n - half + i], {2 * c + 1, i}});
  }

  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pooled[a].first < pooled[b].first;
  });

  // average ranks over ties, then normal-quantile transform
  const double total = static_cast<double>(pooled.size());
  std::vector<Eigen::VectorXd> transformed(2 * m, Eigen::VectorXd(half));
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           pooled[order[j + 1]].first == pooled[order[i]].first)
      ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    const double z = std_normal_quantile((avg_rank - 0.375) / (total + 0.25));
    for (std::size_t k = i; k <= j; ++k) {
      const auto& slot = pooled[order[k]].second;
      transformed[slot.first][slot.second] = z;
    }
    i = j + 1;
  }
  return classic_rhat(transformed);
}

RhatReport rhat_report(const ChainSet& chains,
                       const std::vector<std::string>& parameter_names) {
  if (chains.chains.size() < 2)
    throw UsageError("rhat_report: need at least 2 chains");
  const Eigen::Index n_params = chains.chains.front().constrained.cols();
  if (static_cast<Eigen::Index>(parameter_names.size()) != n_params)
    throw UsageError("rhat_report: name count must match parameter count");

  RhatReport report;
  report.parameter = parameter_names;
  report.classic_rhat.resize(n_params);
  report.rank_normalized_split_rhat.resize(n_params);
  report.rhat_max = 0.0;

  std::vector<Eigen::VectorXd> draws(chains.chains.size());
  for (Eigen::Index p = 0; p < n_params; ++p) {
    for (std::size_t c = 0; c < chains.chains.size(); ++c)
      draws[c] = chains.chains[c].constrained.col(p);
    report.classic_rhat[p] = classic_rhat(draws);
    report.rank_normalized_split_rhat[p] = rank_normalized_split_rhat(draws);
    report.rhat_max = std::max(report.rhat_max, report.classic_rhat[p]);
  }
  return report;
}

SwitchReport detect_sign_switch(const ChainSet& chains, const FactorModel& model) {
  if (chains.chains.empty()) throw UsageError("detect_sign_switch: no chains");
  const auto [lo, hi] = model.loading_range();
  const Eigen::MatrixXd means = chains.per_chain_constrained_means();
  const Eigen::Index n_loadings = hi - lo;

  // reference direction: entrywise mean of |loading means| across chains
  Eigen::VectorXd reference = Eigen::VectorXd::Zero(n_loadings);
  for (Eigen::Index c = 0; c < means.rows(); ++c)
    reference += means.row(c).segment(lo, n_loadings).cwiseAbs();
  reference /= static_cast<double>(means.rows());

  SwitchReport report;
  report.chain_signs.resize(means.rows(), 0);
  constexpr double kZeroTol = 1e-6;
  // a chain settled in one mode projects onto the reference direction with
  // coefficient near +-1; a chain that mixed across modes within the run
  // has a damped mean and is a tie, not a vote
  constexpr double kSettledCoef = 0.5;
  for (Eigen::Index c = 0; c < means.rows(); ++c) {
    const Eigen::VectorXd lm = means.row(c).segment(lo, n_loadings);
    if (lm.cwiseAbs().maxCoeff() <= kZeroTol ||
        reference.squaredNorm() == 0.0) {
      report.indeterminate = true;
      report.notes = "chain " + std::to_string(c) + " loading means are all near zero";
      continue;
    }
    const double coef = lm.dot(reference) / reference.squaredNorm();
    if (std::abs(coef) < kSettledCoef) {
      report.indeterminate = true;
      report.notes = "chain " + std::to_string(c) +
                     " is not settled in one sign mode (projection " +
                     std::to_string(coef) + ")";
      continue;
    }
    report.chain_signs[c] = coef > 0.0 ? 1 : -1;
  }

  bool saw_pos = false, saw_neg = false;
  for (int s : report.chain_signs) {
    saw_pos |= s > 0;
    saw_neg |= s < 0;
  }
  report.sign_switch = saw_pos && saw_neg;
  return report;
}

}  // namespace infocrit
