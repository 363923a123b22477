// Apache License, Version 2.0, refer to LICENSE.txt
#ifndef INFOCRIT_HARNESS_HPP
#define INFOCRIT_HARNESS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "infocrit/criteria.hpp"
#include "infocrit/diagnostics.hpp"
#include "infocrit/sampler.hpp"
#include "infocrit/simulate.hpp"

namespace infocrit {

// One factorial run: which design, which cells, how to sample, where to
// write. All randomness chains off master_seed.
struct DesignConfig {
  std::string design = "fa";  // "fa" | "gmm"
  std::string output_dir = "out";
  std::uint64_t master_seed = 1;
  long long replicates = 20;
  int workers = 0;  // 0 = hardware concurrency
  bool force = false;
  SamplerConfig sampler;

  struct FaCell {
    double c = 0.9;
    double sigma2 = 1.0;
    long long n_clusters = 400;
    int warmup = 0;  // 0 = use the shared sampler warmup
  };
  std::vector<FaCell> fa_conditions;
  std::vector<std::string> gmm_conditions;
  std::vector<int> candidate_k = {1, 2, 3, 4};
};

DesignConfig design_config_from_json(const std::string& text);
std::string design_config_to_json(const DesignConfig& config);

// Fitted outputs for one candidate model on one replicate dataset.
struct ModelResult {
  std::string model_id;  // "fa", "gmm1".."gmm4"
  bool sampler_failed = false;
  std::string error;
  CriteriaReport criteria;
  RhatReport rhat;
  SwitchReport switch_report;          // meaningful for the factor model
  bool within_chain_suspect = false;   // p_dic < 0 while rhat_max < 1.1
  double acceptance_mean = 0.0;
  std::map<std::string, double> timings_ms;  // dic_i / waic / loo
};

struct ReplicateResult {
  std::string condition;
  long long replicate = 0;
  std::uint64_t seed = 0;
  std::map<std::string, double> condition_attrs;  // c, sigma2, J, ...
  std::vector<ModelResult> models;
};

// Runs every (condition, replicate) cell: generate, fit each candidate,
// compute criteria and diagnostics, persist one JSON per replicate.
// Completed cells listed in the manifest are skipped unless `force`.
// Timings go to a sibling file so result.json stays byte-deterministic.
std::vector<ReplicateResult> run_design(const DesignConfig& config);

// Load previously persisted results (manifest-driven).
std::vector<ReplicateResult> load_results(const std::string& output_dir);

// --- reports -----------------------------------------------------------------

struct RmsdRow {
  std::string condition;
  long long n_used = 0;
  double sd_waic = 0.0;  // FA: SD over replicates; GMM: within-model SD
  std::map<std::string, double> rmsd;          // criterion -> RMSD vs WAIC
  std::map<std::string, long long> n_missing;  // excluded per criterion
  double ratio_dic_i = 0.0;                    // RMSD(dic_i) / sd_waic
};
struct RmsdTable {
  std::vector<RmsdRow> rows;
};
RmsdTable rmsd_report(const std::vector<ReplicateResult>& results);
std::string rmsd_table_to_csv(const RmsdTable& table);
std::string rmsd_table_to_text(const RmsdTable& table);

struct ConvergenceRow {
  double n_clusters = 0;  // J
  long long n = 0;
  double mean_diff = 0.0;  // mean(dic_i - waic)
  double sd_diff = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double mean_p_v = 0.0;
};
struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;  // ascending J
  bool monotone_decreasing = false;
};
ConvergenceTable convergence_study(const std::vector<ReplicateResult>& results);
std::string convergence_table_to_csv(const ConvergenceTable& table);
std::string convergence_table_to_text(const ConvergenceTable& table);

struct ModelComparisonRow {
  std::string condition;
  int k = 0;  // candidate compared against the 2-class fit
  long long n = 0;
  std::map<std::string, double> selection_rate;  // criterion -> frac(delta > 0)
  double signflip_dici_vs_waic = 0.0;            // frac(sign mismatch)
};
struct ModelComparisonReport {
  struct Delta {
    std::string condition;
    long long replicate = 0;
    int k = 0;
    std::map<std::string, double> delta;  // criterion -> crit(K) - crit(2)
  };
  std::vector<ModelComparisonRow> rows;
  std::vector<Delta> deltas;  // plot-ready
};
ModelComparisonReport model_comparison_report(
    const std::vector<ReplicateResult>& results);
std::string model_comparison_to_csv(const ModelComparisonReport& report);
std::string model_comparison_to_text(const ModelComparisonReport& report);
std::string model_comparison_deltas_to_csv(const ModelComparisonReport& report);

struct TimingReport {
  long long n = 0;
  std::map<std::string, double> median_ms;
  std::map<std::string, double> sd_ms;  // spread of repeated measurements
};
TimingReport timing_report(const std::vector<ReplicateResult>& results);
std::string timing_report_to_csv(const TimingReport& report);
std::string timing_report_to_text(const TimingReport& report);

// Fit one dataset end to end (used by run_design and the fit subcommand).
ModelResult evaluate_model(const Model& model, const Dataset& data,
                           const SamplerConfig& sampler_config);

}  // namespace infocrit

#endif
