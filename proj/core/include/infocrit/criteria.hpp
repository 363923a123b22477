// Apache License, Version 2.0, refer to LICENSE.txt
#ifndef INFOCRIT_CRITERIA_HPP
#define INFOCRIT_CRITERIA_HPP

#include <Eigen/Dense>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace infocrit {

// S x J matrix of per-draw, per-cluster marginal log-likelihood
// contributions; the single input every criterion is computed from.
// Rows are posterior draws, columns are clusters.
class PointwiseLogLik {
 public:
  // chain_index, when present, maps each row to its chain (0-based) and
  // every chain must contribute at least 2 rows.
  explicit PointwiseLogLik(Eigen::MatrixXd values,
                           std::vector<int> chain_index = {});

  long long draws() const { return values_.rows(); }     // S
  long long clusters() const { return values_.cols(); }  // J
  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<int>& chain_index() const { return chain_index_; }

 private:
  Eigen::MatrixXd values_;
  std::vector<int> chain_index_;
};

// Per-draw deviance D(theta^s) = -2 * sum_j loglik(s, j).
struct DevianceDraws {
  std::vector<double> values;
};

enum class Flag {
  PDIC_NEGATIVE,
  PWAIC_UNRELIABLE,
  PARETO_K_HIGH,
  PLUGIN_MISSING,
  PSIS_DEGRADED,
};
using FlagSet = std::set<Flag>;
std::string flag_name(Flag f);
std::optional<Flag> flag_from_name(const std::string& name);

struct ClusterStat {
  double lppd_j = 0.0;
  double var_lj = 0.0;
  double khat_j = std::numeric_limits<double>::quiet_NaN();  // NaN = not fitted
};

// Everything the library reports for one fitted model. Plug-in dependent
// fields stay empty when no plug-in deviance is supplied.
struct CriteriaReport {
  long long draws = 0;
  long long clusters = 0;

  double mean_deviance = 0.0;
  std::optional<double> plugin_deviance;
  std::optional<double> p_dic;
  double p_v = 0.0;
  double p_waic = 0.0;
  std::optional<double> p_loo;
  std::optional<double> dic;
  std::optional<double> dic_p;
  double dic_i = 0.0;
  double waic = 0.0;
  std::optional<double> loo;
  double lppd = 0.0;
  std::optional<int> psis_tail_size;
  FlagSet flags;
  std::vector<ClusterStat> per_cluster;
};

struct WaicResult {
  double waic = 0.0;
  double lppd = 0.0;
  double p_waic = 0.0;
  bool unreliable = false;  // some Var[l_j] > 0.4
  std::vector<ClusterStat> per_cluster;
};

// Deviance-only criteria; the subset computable without the S x J matrix.
struct DicFamily {
  double mean_deviance = 0.0;
  double p_v = 0.0;
  double dic_i = 0.0;
  std::optional<double> plugin_deviance;
  std::optional<double> p_dic;
  std::optional<double> dic;
  std::optional<double> dic_p;
  FlagSet flags;
};

// Per-cluster expansion log E[f_j] = E[l_j] + 0.5 Var[l_j] + R_j.
struct LppdDecomposition {
  struct Cluster {
    double mean_lj = 0.0;
    double half_var_lj = 0.0;
    double remainder = 0.0;
  };
  std::vector<Cluster> per_cluster;
  double total_remainder = 0.0;
};

DevianceDraws deviance_from_pointwise(const PointwiseLogLik& ll);

// E[D] - D(theta_tilde); may legitimately be negative.
double p_dic(double mean_deviance, double plugin_deviance);

// Half the (n-1) sample variance of the deviance draws; needs >= 2 draws.
double p_v(const DevianceDraws& dev);

WaicResult waic(const PointwiseLogLik& ll);

DicFamily dic_family(const DevianceDraws& dev,
                     std::optional<double> plugin_deviance = std::nullopt);

LppdDecomposition lppd_decomposition(const PointwiseLogLik& ll);

// Full report: deviance family, WAIC, PSIS-LOO, flags, per-cluster stats.
// Deterministic in its inputs; requires S >= 2.
CriteriaReport compute_all(const PointwiseLogLik& ll,
                           std::optional<double> plugin_deviance = std::nullopt);

}  // namespace infocrit

#endif
