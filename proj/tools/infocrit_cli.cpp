// Apache License, Version 2.0, refer to LICENSE.txt
//
// infocrit: compute Bayesian predictive information criteria from posterior
// draws and run the simulation designs end to end.

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "infocrit/errors.hpp"
#include "infocrit/harness.hpp"
#include "infocrit/io.hpp"
#include "infocrit/models.hpp"
#include "infocrit/psis.hpp"
#include "infocrit/rng.hpp"
#include "infocrit/sampler.hpp"
#include "infocrit/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace infocrit;

namespace {

std::string replicate_dir(long long rep) {
  std::ostringstream os;
  os << "rep" << std::setw(3) << std::setfill('0') << rep;
  return os.str();
}

int cmd_simulate(const std::string& design, std::vector<double> cs,
                 std::vector<double> sigma2s, std::vector<long long> js,
                 std::vector<std::string> conditions, long long rep_first,
                 long long rep_last, std::uint64_t seed,
                 const std::string& out_dir) {
  long long written = 0;
  if (design == "fa") {
    if (cs.empty()) cs = {0.3, 0.6, 0.9};
    if (sigma2s.empty()) sigma2s = {0.5, 1.0};
    if (js.empty()) js = {400, 800};
    for (double c : cs)
      for (double s2 : sigma2s)
        for (long long j : js)
          for (long long rep = rep_first; rep <= rep_last; ++rep) {
            FaCondition cond{c, s2, j, rep, seed};
            const Dataset data = generate_fa(cond);
            const std::string dir =
                out_dir + "/fa/" + cond.label() + "/" + replicate_dir(rep);
            write_dataset(dir + "/dataset.csv", dir + "/dataset.json", data);
            ++written;
          }
  } else if (design == "gmm") {
    if (conditions.empty()) conditions = GmmCondition::all_names();
    for (const auto& name : conditions)
      for (long long rep = rep_first; rep <= rep_last; ++rep) {
        GmmCondition cond{name, rep, seed};
        const Dataset data = generate_gmm(cond);
        const std::string dir =
            out_dir + "/gmm/" + name + "/" + replicate_dir(rep);
        write_dataset(dir + "/dataset.csv", dir + "/dataset.json", data);
        ++written;
      }
  } else {
    throw UsageError("--design must be fa or gmm");
  }
  std::cout << "wrote " << written << " dataset(s) under " << out_dir << "\n";
  return 0;
}

int cmd_fit(const std::string& model_name, int k, const std::string& data_path,
            const std::string& meta_path, const std::string& out_dir,
            const SamplerConfig& config) {
  const Dataset data = read_dataset(data_path, meta_path);
  std::unique_ptr<Model> model;
  if (model_name == "fa") {
    if (data.clusters.empty()) throw UsageError("empty dataset");
    model = std::make_unique<FactorModel>(
        static_cast<int>(data.clusters.front().y.size()));
  } else if (model_name == "gmm") {
    model = std::make_unique<GmmModel>(k);
  } else {
    throw UsageError("--model must be fa or gmm");
  }

  const ChainSet chains = sample(*model, data, config);
  const PointwiseLogLik ll = pointwise_loglik_draws(*model, data, chains);
  const Eigen::VectorXd plugin_point = chains.pooled_constrained_mean(*model);
  const double plugin = plugin_deviance(*model, plugin_point, data);

  fs::create_directories(out_dir);
  write_draws_csv(out_dir + "/draws.csv", chains, model->param_names());
  write_pointwise_csv_long(out_dir + "/loglik.csv", ll);

  json meta;
  meta["model"] = model->name();
  meta["free_parameters"] = model->free_param_count();
  meta["data"] = data_path;
  meta["chains"] = config.chains;
  meta["warmup"] = config.warmup;
  meta["iters"] = config.iters;
  meta["thin"] = config.thin;
  meta["seed"] = config.seed;
  meta["plugin_deviance"] = plugin;
  json acc = json::array();
  for (const auto& chain : chains.chains) acc.push_back(chain.acceptance_rate);
  meta["acceptance_rate"] = acc;
  atomic_write_file(out_dir + "/meta.json", meta.dump(2) + "\n");

  std::cout << "fit complete: " << chains.chains.size() << " chains x "
            << chains.draws_per_chain() << " draws -> " << out_dir << "\n";
  return 0;
}

int cmd_criteria(const std::string& loglik_path,
                 std::optional<double> plugin_deviance_flag,
                 const std::string& meta_path, const std::string& out_path) {
  const PointwiseLogLik ll = read_pointwise_csv(loglik_path);
  std::optional<double> plugin = plugin_deviance_flag;
  if (!plugin.has_value() && !meta_path.empty()) {
    const json meta = json::parse(read_file(meta_path));
    if (meta.contains("plugin_deviance"))
      plugin = meta.at("plugin_deviance").get<double>();
  }
  const CriteriaReport report = compute_all(ll, plugin);
  const std::string text = criteria_report_to_json(report);
  if (out_path.empty())
    std::cout << text;
  else
    atomic_write_file(out_path, text);
  return 0;
}

int cmd_ingest(const std::vector<std::string>& files, const std::string& out_path) {
  const PointwiseLogLik ll = ingest_cmdstan_csv(files);
  const CriteriaReport report = compute_all(ll);
  const std::string text = criteria_report_to_json(report);
  if (out_path.empty())
    std::cout << text;
  else
    atomic_write_file(out_path, text);
  return 0;
}

int cmd_diagnose(const std::string& draws_path, const std::string& meta_path,
                 const std::string& model_name) {
  const DrawsTable table = read_draws_csv(draws_path);
  if (table.chains.size() < 2)
    throw UsageError("diagnose: need at least 2 chains in the draws file");

  // parameter columns only; lp__ / loglik__ are excluded from rhat_max
  std::vector<std::string> param_names;
  std::vector<Eigen::Index> param_cols;
  for (std::size_t i = 0; i < table.names.size(); ++i) {
    if (table.names[i] == "lp__" || table.names[i] == "loglik__") continue;
    param_names.push_back(table.names[i]);
    param_cols.push_back(static_cast<Eigen::Index>(i));
  }

  ChainSet chains;
  chains.model_name = model_name;
  for (const auto& m : table.chains) {
    Chain chain;
    chain.constrained.resize(m.rows(), static_cast<Eigen::Index>(param_cols.size()));
    for (std::size_t p = 0; p < param_cols.size(); ++p)
      chain.constrained.col(static_cast<Eigen::Index>(p)) = m.col(param_cols[p]);
    chains.chains.push_back(std::move(chain));
  }

  const RhatReport rhat = rhat_report(chains, param_names);
  std::cout << format_rhat_table(rhat);

  json diag;
  diag["rhat"] = json::parse(rhat_report_to_json(rhat));
  if (model_name == "fa") {
    int n_loadings = 0;
    for (const auto& name : param_names)
      if (name.rfind("lambda.", 0) == 0) ++n_loadings;
    if (n_loadings > 0) {
      const FactorModel fa(n_loadings);
      const SwitchReport sw = detect_sign_switch(chains, fa);
      std::cout << "sign_switch: " << (sw.sign_switch ? "yes" : "no")
                << (sw.indeterminate ? " (indeterminate)" : "") << "\n";
      diag["switch"] = json::parse(switch_report_to_json(sw));
    }
  }

  if (!meta_path.empty()) {
    json meta = fs::exists(meta_path) ? json::parse(read_file(meta_path)) : json{};
    meta["diagnostics"] = diag;
    atomic_write_file(meta_path, meta.dump(2) + "\n");
    std::cout << "diagnostics appended to " << meta_path << "\n";
  }
  return 0;
}

int cmd_run_design(const std::string& config_path, bool force, int workers) {
  DesignConfig config = design_config_from_json(read_file(config_path));
  if (force) config.force = true;
  if (workers > 0) config.workers = workers;
  const auto results = run_design(config);
  long long models = 0, failures = 0;
  for (const auto& r : results)
    for (const auto& m : r.models) {
      ++models;
      failures += m.sampler_failed ? 1 : 0;
    }
  std::cout << "completed " << results.size() << " replicate(s), " << models
            << " fitted model(s), " << failures << " failure(s); results in "
            << config.output_dir << "\n";
  return 0;
}

int cmd_report(const std::string& kind, const std::string& results_dir,
               const std::string& out_prefix) {
  const auto results = load_results(results_dir);
  if (results.empty()) throw UsageError("no results found in " + results_dir);

  std::string text, csv, extra_csv, extra_name;
  if (kind == "rmsd") {
    const RmsdTable table = rmsd_report(results);
    text = rmsd_table_to_text(table);
    csv = rmsd_table_to_csv(table);
  } else if (kind == "convergence") {
    const ConvergenceTable table = convergence_study(results);
    text = convergence_table_to_text(table);
    csv = convergence_table_to_csv(table);
  } else if (kind == "model-comparison") {
    const ModelComparisonReport report = model_comparison_report(results);
    text = model_comparison_to_text(report);
    csv = model_comparison_to_csv(report);
    extra_csv = model_comparison_deltas_to_csv(report);
    extra_name = "_deltas";
  } else if (kind == "timing") {
    const TimingReport report = timing_report(results);
    text = timing_report_to_text(report);
    csv = timing_report_to_csv(report);
  } else {
    throw UsageError("unknown report kind: " + kind);
  }

  std::cout << text;
  if (!out_prefix.empty()) {
    atomic_write_file(out_prefix + ".csv", csv);
    atomic_write_file(out_prefix + ".txt", text);
    if (!extra_csv.empty())
      atomic_write_file(out_prefix + extra_name + ".csv", extra_csv);
    std::cout << "written to " << out_prefix << ".{csv,txt}\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian predictive information criteria from posterior draws"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate replicate datasets");
  std::string sim_design = "fa", sim_out = "out";
  std::vector<double> sim_c, sim_sigma2;
  std::vector<long long> sim_j;
  std::vector<std::string> sim_conditions;
  long long sim_rep_first = 0, sim_rep_last = 0;
  std::uint64_t sim_seed = 1;
  sim->add_option("--design", sim_design, "fa | gmm")->required();
  sim->add_option("--c", sim_c, "factor strengths (fa)");
  sim->add_option("--sigma2", sim_sigma2, "noise variances (fa)");
  sim->add_option("--J", sim_j, "cluster counts (fa)");
  sim->add_option("--conditions", sim_conditions,
                  "gmm condition names (default: all)");
  sim->add_option("--rep-first", sim_rep_first, "first replicate id");
  sim->add_option("--rep-last", sim_rep_last, "last replicate id (inclusive)");
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--out", sim_out, "output directory");

  // fit
  auto* fit = app.add_subcommand("fit", "run the built-in MCMC sampler");
  std::string fit_model = "fa", fit_data, fit_meta, fit_out = "fit";
  int fit_k = 2;
  SamplerConfig fit_config;
  fit->add_option("--model", fit_model, "fa | gmm")->required();
  fit->add_option("--K", fit_k, "number of classes (gmm)");
  fit->add_option("--data", fit_data, "dataset CSV")->required();
  fit->add_option("--meta", fit_meta, "dataset JSON sidecar");
  fit->add_option("--out", fit_out, "output directory");
  fit->add_option("--chains", fit_config.chains);
  fit->add_option("--warmup", fit_config.warmup);
  fit->add_option("--iters", fit_config.iters);
  fit->add_option("--thin", fit_config.thin);
  fit->add_option("--seed", fit_config.seed);

  // criteria
  auto* crit = app.add_subcommand("criteria", "criteria from a pointwise CSV");
  std::string crit_loglik, crit_meta, crit_out;
  double crit_plugin = std::numeric_limits<double>::quiet_NaN();
  crit->add_option("--loglik", crit_loglik, "pointwise log-likelihood CSV")
      ->required();
  crit->add_option("--plugin-deviance", crit_plugin,
                   "plug-in deviance for DIC / DIC_p");
  crit->add_option("--meta", crit_meta, "fit meta JSON (plugin_deviance source)");
  crit->add_option("--out", crit_out, "report JSON path (default: stdout)");

  // ingest
  auto* ing = app.add_subcommand("ingest", "criteria from CmdStan-style CSVs");
  std::vector<std::string> ing_files;
  std::string ing_out;
  ing->add_option("files", ing_files, "draws CSV, one file per chain")
      ->required();
  ing->add_option("--out", ing_out, "report JSON path (default: stdout)");

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "convergence / switching table");
  std::string diag_draws, diag_meta, diag_model;
  diag->add_option("--draws", diag_draws, "draws CSV from fit")->required();
  diag->add_option("--meta", diag_meta, "meta JSON to append diagnostics to");
  diag->add_option("--model", diag_model, "fa enables sign-switch detection");

  // run-design
  auto* run = app.add_subcommand("run-design", "run a factorial design");
  std::string run_config;
  bool run_force = false;
  int run_workers = 0;
  run->add_option("--config", run_config, "design config JSON")->required();
  run->add_flag("--force", run_force, "recompute completed replicates");
  run->add_option("--workers", run_workers, "override worker count");

  // report
  auto* rep = app.add_subcommand("report", "tables over completed results");
  std::string rep_kind, rep_results, rep_out;
  rep->add_option("kind", rep_kind, "rmsd | convergence | model-comparison | timing")
      ->required();
  rep->add_option("--results", rep_results, "design output directory")->required();
  rep->add_option("--out", rep_out, "output file prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return cmd_simulate(sim_design, sim_c, sim_sigma2, sim_j, sim_conditions,
                          sim_rep_first, sim_rep_last, sim_seed, sim_out);
    if (fit->parsed())
      return cmd_fit(fit_model, fit_k, fit_data, fit_meta, fit_out, fit_config);
    if (crit->parsed())
      return cmd_criteria(crit_loglik,
                          std::isnan(crit_plugin)
                              ? std::nullopt
                              : std::optional<double>(crit_plugin),
                          crit_meta, crit_out);
    if (ing->parsed()) return cmd_ingest(ing_files, ing_out);
    if (diag->parsed()) return cmd_diagnose(diag_draws, diag_meta, diag_model);
    if (run->parsed()) return cmd_run_design(run_config, run_force, run_workers);
    if (rep->parsed()) return cmd_report(rep_kind, rep_results, rep_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
