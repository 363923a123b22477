// Apache License, Version 2.0, refer to LICENSE.txt
#include "infocrit/criteria.hpp"

#include <cmath>
#include <limits>

#include "infocrit/errors.hpp"
#include "infocrit/numerics.hpp"
#include "infocrit/psis.hpp"

namespace infocrit {

PointwiseLogLik::PointwiseLogLik(Eigen::MatrixXd values,
                                 std::vector<int> chain_index)
    : values_(std::move(values)), chain_index_(std::move(chain_index)) {
  if (values_.rows() < 1 || values_.cols() < 1)
    throw UsageError("PointwiseLogLik: matrix must be at least 1x1");
  if (values_.hasNaN())
    throw NumericError("PointwiseLogLik: NaN entries are not allowed");
  if (!chain_index_.empty()) {
    if (static_cast<long long>(chain_index_.size()) != values_.rows())
      throw UsageError("PointwiseLogLik: chain_index length must equal draw count");
    std::vector<long long> counts;
    for (int c : chain_index_) {
      if (c < 0) throw UsageError("PointwiseLogLik: chain indices must be >= 0");
      if (static_cast<std::size_t>(c) >= counts.size()) counts.resize(c + 1, 0);
      ++counts[c];
    }
    for (long long cnt : counts)
      if (cnt == 1)
        throw UsageError("PointwiseLogLik: every chain needs at least 2 draws");
  }
}

std::string flag_name(Flag f) {
  switch (f) {
    case Flag::PDIC_NEGATIVE: return "PDIC_NEGATIVE";
    case Flag::PWAIC_UNRELIABLE: return "PWAIC_UNRELIABLE";
    case Flag::PARETO_K_HIGH: return "PARETO_K_HIGH";
    case Flag::PLUGIN_MISSING: return "PLUGIN_MISSING";
    case Flag::PSIS_DEGRADED: return "PSIS_DEGRADED";
  }
  return "UNKNOWN";
}

std::optional<Flag> flag_from_name(const std::string& name) {
  for (Flag f : {Flag::PDIC_NEGATIVE, Flag::PWAIC_UNRELIABLE, Flag::PARETO_K_HIGH,
                 Flag::PLUGIN_MISSING, Flag::PSIS_DEGRADED})
    if (flag_name(f) == name) return f;
  return std::nullopt;
}

DevianceDraws deviance_from_pointwise(const PointwiseLogLik& ll) {
  const long long s_count = ll.draws();
  const long long j_count = ll.clusters();
  DevianceDraws dev;
  dev.values.resize(s_count);
  std::vector<double> row(j_count);
  for (long long s = 0; s < s_count; ++s) {
    for (long long j = 0; j < j_count; ++j) row[j] = ll.values()(s, j);
    dev.values[s] = -2.0 * pairwise_sum(row);
  }
  return dev;
}

double p_dic(double mean_deviance, double plugin_deviance) {
  if (!std::isfinite(mean_deviance) || !std::isfinite(plugin_deviance))
    throw UsageError("p_dic: deviances must be finite");
  return mean_deviance - plugin_deviance;
}

double p_v(const DevianceDraws& dev) {
  if (dev.values.size() < 2)
    throw UsageError("p_v: need at least 2 deviance draws");
  return 0.5 * sample_variance(dev.values);
}

WaicResult waic(const PointwiseLogLik& ll) {
  const long long s_count = ll.draws();
  const long long j_count = ll.clusters();
  if (s_count < 2) throw UsageError("waic: need at least 2 draws");

  WaicResult out;
  out.per_cluster.resize(j_count);
  std::vector<double> col(s_count);
  std::vector<double> lppd_terms(j_count), var_terms(j_count);
  for (long long j = 0; j < j_count; ++j) {
    for (long long s = 0; s < s_count; ++s) col[s] = ll.values()(s, j);
    const double lppd_j = log_sum_exp(col) - std::log(static_cast<double>(s_count));
    const double var_j = sample_variance(col);
    out.per_cluster[j].lppd_j = lppd_j;
    out.per_cluster[j].var_lj = var_j;
    lppd_terms[j] = lppd_j;
    var_terms[j] = var_j;
    if (var_j > 0.4) out.unreliable = true;
  }
  out.lppd = pairwise_sum(lppd_terms);
  out.p_waic = pairwise_sum(var_terms);
  out.waic = -2.0 * out.lppd + 2.0 * out.p_waic;
  return out;
}

DicFamily dic_family(const DevianceDraws& dev,
                     std::optional<double> plugin_deviance) {
  DicFamily out;
  out.mean_deviance = sample_mean(dev.values);
  out.p_v = p_v(dev);
  out.dic_i = out.mean_deviance + out.p_v;
  if (plugin_deviance.has_value()) {
    out.plugin_deviance = *plugin_deviance;
    const double pd = p_dic(out.mean_deviance, *plugin_deviance);
    out.p_dic = pd;
    out.dic = *plugin_deviance + 2.0 * pd;
    out.dic_p = *plugin_deviance + 2.0 * out.p_v;
    if (pd < 0.0) out.flags.insert(Flag::PDIC_NEGATIVE);
  } else {
    out.flags.insert(Flag::PLUGIN_MISSING);
  }
  return out;
}

LppdDecomposition lppd_decomposition(const PointwiseLogLik& ll) {
  const long long s_count = ll.draws();
  const long long j_count = ll.clusters();
  if (s_count < 2) throw UsageError("lppd_decomposition: need at least 2 draws");

  LppdDecomposition out;
  out.per_cluster.resize(j_count);
  std::vector<double> col(s_count), remainders(j_count);
  for (long long j = 0; j < j_count; ++j) {
    for (long long s = 0; s < s_count; ++s) col[s] = ll.values()(s, j);
    const double lppd_j = log_sum_exp(col) - std::log(static_cast<double>(s_count));
    const double mean_j = sample_mean(col);
    const double half_var_j = 0.5 * sample_variance(col);
    out.per_cluster[j].mean_lj = mean_j;
    out.per_cluster[j].half_var_lj = half_var_j;
    out.per_cluster[j].remainder = lppd_j - mean_j - half_var_j;
    remainders[j] = out.per_cluster[j].remainder;
  }
  out.total_remainder = pairwise_sum(remainders);
  return out;
}

CriteriaReport compute_all(const PointwiseLogLik& ll,
                           std::optional<double> plugin_deviance) {
  if (ll.draws() < 2) throw UsageError("compute_all: need at least 2 draws");

  CriteriaReport report;
  report.draws = ll.draws();
  report.clusters = ll.clusters();

  const DevianceDraws dev = deviance_from_pointwise(ll);
  const DicFamily fam = dic_family(dev, plugin_deviance);
  report.mean_deviance = fam.mean_deviance;
  report.p_v = fam.p_v;
  report.dic_i = fam.dic_i;
  report.plugin_deviance = fam.plugin_deviance;
  report.p_dic = fam.p_dic;
  report.dic = fam.dic;
  report.dic_p = fam.dic_p;
  report.flags = fam.flags;

  const WaicResult w = waic(ll);
  report.waic = w.waic;
  report.lppd = w.lppd;
  report.p_waic = w.p_waic;
  report.per_cluster = w.per_cluster;
  if (w.unreliable) report.flags.insert(Flag::PWAIC_UNRELIABLE);

  const PsisResult psis = psis_loo(ll);
  report.loo = psis.loo;
  report.p_loo = psis.p_loo;
  report.psis_tail_size = psis.tail_size;
  for (long long j = 0; j < ll.clusters(); ++j)
    report.per_cluster[j].khat_j = psis.khat(j);
  if (psis.any_khat_high) report.flags.insert(Flag::PARETO_K_HIGH);
  if (psis.degraded) report.flags.insert(Flag::PSIS_DEGRADED);

  return report;
}

}  // namespace infocrit
