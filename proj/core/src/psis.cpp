// Apache License, Version 2.0, refer to LICENSE.txt
#include "infocrit/psis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "infocrit/errors.hpp"
#include "infocrit/numerics.hpp"

namespace infocrit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kMinDrawsForSmoothing = 25;
constexpr double kKhatThreshold = 0.7;

int psis_tail_size(long long s_count) {
  const double s = static_cast<double>(s_count);
  return static_cast<int>(std::ceil(std::min(0.2 * s, 3.0 * std::sqrt(s))));
}

}  // namespace

PsisResult psis_loo(const PointwiseLogLik& ll) {
  const long long s_count = ll.draws();
  const long long j_count = ll.clusters();
  if (s_count < 2) throw UsageError("psis_loo: need at least 2 draws");

  PsisResult out;
  out.khat = Eigen::VectorXd::Constant(j_count, kNaN);
  out.smoothed_logweights.resize(s_count, j_count);
  const bool smooth = s_count >= kMinDrawsForSmoothing;
  out.degraded = !smooth;
  out.tail_size = smooth ? psis_tail_size(s_count) : 0;

  std::vector<double> col(s_count), logw(s_count), loo_terms(j_count),
      lppd_terms(j_count);
  std::vector<int> order(s_count);

  for (long long j = 0; j < j_count; ++j) {
    for (long long s = 0; s < s_count; ++s) col[s] = ll.values()(s, j);
    const double lppd_j = log_sum_exp(col) - std::log(static_cast<double>(s_count));
    lppd_terms[j] = lppd_j;

    // raw log importance ratios, shifted so the raw maximum sits at 0
    double max_lw = -std::numeric_limits<double>::infinity();
    for (long long s = 0; s < s_count; ++s) max_lw = std::max(max_lw, -col[s]);
    for (long long s = 0; s < s_count; ++s) logw[s] = -col[s] - max_lw;

    const double spread =
        *std::max_element(logw.begin(), logw.end()) -
        *std::min_element(logw.begin(), logw.end());
    if (spread == 0.0) {
      // degenerate column: equal weights, nothing to smooth
      const double lw = -std::log(static_cast<double>(s_count));
      for (long long s = 0; s < s_count; ++s) out.smoothed_logweights(s, j) = lw;
      loo_terms[j] = lppd_j;
      continue;
    }

    if (smooth) {
      const int m = out.tail_size;
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return logw[a] < logw[b]; });
      const double log_cutoff = logw[order[s_count - m - 1]];
      const double cutoff = std::exp(log_cutoff);

      std::vector<double> excess(m);
      bool positive = true;
      for (int i = 0; i < m; ++i) {
        excess[i] = std::exp(logw[order[s_count - m + i]]) - cutoff;
        if (!(excess[i] > 0.0)) positive = false;
      }
      std::optional<GpdFit> fit;
      if (positive) fit = fit_gpd_tail(excess);
      if (fit) {
        out.khat(j) = fit->k_hat;
        if (fit->k_hat > kKhatThreshold) out.any_khat_high = true;
        // replace tail weights by expected order statistics of the fit,
        // then truncate everything at the raw maximum (= 0 after shift)
        for (int i = 0; i < m; ++i) {
          const double p = (i + 0.5) / m;
          const double q = gpd_quantile(p, fit->k_hat, fit->sigma_hat);
          logw[order[s_count - m + i]] = std::log(cutoff + q);
        }
        for (long long s = 0; s < s_count; ++s) logw[s] = std::min(logw[s], 0.0);
      }
    }

    // normalize; loo_j = log sum_s w_s f(y_j | theta^s) - log sum_s w_s
    const double log_norm = log_sum_exp(logw);
    std::vector<double> combined(s_count);
    for (long long s = 0; s < s_count; ++s) {
      out.smoothed_logweights(s, j) = logw[s] - log_norm;
      combined[s] = out.smoothed_logweights(s, j) + col[s];
    }
    loo_terms[j] = log_sum_exp(combined);
  }

  out.lppd_loo = pairwise_sum(loo_terms);
  out.loo = -2.0 * out.lppd_loo;
  out.p_loo = pairwise_sum(lppd_terms) - out.lppd_loo;
  return out;
}

}  // namespace infocrit
