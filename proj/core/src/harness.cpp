// Apache License, Version 2.0, refer to LICENSE.txt
#include "infocrit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "infocrit/errors.hpp"
#include "infocrit/io.hpp"
#include "infocrit/models.hpp"
#include "infocrit/numerics.hpp"
#include "infocrit/psis.hpp"
#include "infocrit/rng.hpp"

namespace infocrit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return (v.size() % 2 == 1) ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// +inf is a legal rhat value (zero within-chain variance); JSON cannot
// carry it, so non-finite values round-trip through null
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double finite_or_inf(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

json rhat_to_json(const RhatReport& r) {
  json j;
  j["rhat_max"] = finite_or_null(r.rhat_max);
  j["parameter"] = r.parameter;
  json classic = json::array(), ranked = json::array();
  for (double v : r.classic_rhat) classic.push_back(finite_or_null(v));
  for (double v : r.rank_normalized_split_rhat) ranked.push_back(finite_or_null(v));
  j["classic_rhat"] = classic;
  j["rank_normalized_split_rhat"] = ranked;
  return j;
}

RhatReport rhat_from_json(const json& j) {
  RhatReport r;
  r.rhat_max = j.contains("rhat_max") ? finite_or_inf(j.at("rhat_max")) : 1.0;
  if (j.contains("parameter"))
    r.parameter = j.at("parameter").get<std::vector<std::string>>();
  if (j.contains("classic_rhat"))
    for (const auto& v : j.at("classic_rhat"))
      r.classic_rhat.push_back(finite_or_inf(v));
  if (j.contains("rank_normalized_split_rhat"))
    for (const auto& v : j.at("rank_normalized_split_rhat"))
      r.rank_normalized_split_rhat.push_back(finite_or_inf(v));
  return r;
}

json switch_to_json(const SwitchReport& s) {
  json j;
  j["sign_switch"] = s.sign_switch;
  j["indeterminate"] = s.indeterminate;
  j["chain_signs"] = s.chain_signs;
  j["notes"] = s.notes;
  return j;
}

SwitchReport switch_from_json(const json& j) {
  SwitchReport s;
  s.sign_switch = j.value("sign_switch", false);
  s.indeterminate = j.value("indeterminate", false);
  if (j.contains("chain_signs"))
    s.chain_signs = j.at("chain_signs").get<std::vector<int>>();
  s.notes = j.value("notes", "");
  return s;
}

json model_result_to_json(const ModelResult& m) {
  json j;
  j["model_id"] = m.model_id;
  j["sampler_failed"] = m.sampler_failed;
  j["error"] = m.error;
  if (!m.sampler_failed) {
    j["criteria"] = json::parse(criteria_report_to_json(m.criteria));
    j["rhat"] = rhat_to_json(m.rhat);
    j["switch"] = switch_to_json(m.switch_report);
    j["within_chain_suspect"] = m.within_chain_suspect;
    j["acceptance_mean"] = m.acceptance_mean;
  }
  return j;
}

ModelResult model_result_from_json(const json& j) {
  ModelResult m;
  m.model_id = j.at("model_id").get<std::string>();
  m.sampler_failed = j.value("sampler_failed", false);
  m.error = j.value("error", "");
  if (!m.sampler_failed) {
    m.criteria = criteria_report_from_json(j.at("criteria").dump());
    m.rhat = rhat_from_json(j.at("rhat"));
    m.switch_report = switch_from_json(j.at("switch"));
    m.within_chain_suspect = j.value("within_chain_suspect", false);
    m.acceptance_mean = j.value("acceptance_mean", 0.0);
  }
  return m;
}

json replicate_to_json(const ReplicateResult& r) {
  json j;
  j["condition"] = r.condition;
  j["replicate"] = r.replicate;
  j["seed"] = r.seed;
  j["condition_attrs"] = r.condition_attrs;
  json models = json::array();
  for (const auto& m : r.models) models.push_back(model_result_to_json(m));
  j["models"] = models;
  return j;
}

ReplicateResult replicate_from_json(const json& j) {
  ReplicateResult r;
  r.condition = j.at("condition").get<std::string>();
  r.replicate = j.at("replicate").get<long long>();
  r.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("condition_attrs"))
    r.condition_attrs =
        j.at("condition_attrs").get<std::map<std::string, double>>();
  for (const auto& m : j.at("models")) r.models.push_back(model_result_from_json(m));
  return r;
}

json timings_to_json(const ReplicateResult& r) {
  json models = json::array();
  for (const auto& m : r.models)
    models.push_back({{"model_id", m.model_id}, {"timings_ms", m.timings_ms}});
  return json{{"models", models}};
}

void merge_timings(ReplicateResult& r, const json& j) {
  if (!j.contains("models")) return;
  for (const auto& jm : j.at("models")) {
    const std::string id = jm.value("model_id", "");
    for (auto& m : r.models)
      if (m.model_id == id && jm.contains("timings_ms"))
        m.timings_ms = jm.at("timings_ms").get<std::map<std::string, double>>();
  }
}

std::string replicate_dir_name(long long replicate) {
  std::ostringstream os;
  os << "rep" << std::setw(3) << std::setfill('0') << replicate;
  return os.str();
}

struct Manifest {
  std::map<std::string, std::string> entries;  // key -> relative result path

  static Manifest load(const std::string& path) {
    Manifest m;
    if (fs::exists(path)) {
      const json j = json::parse(read_file(path));
      if (j.contains("entries"))
        m.entries = j.at("entries").get<std::map<std::string, std::string>>();
    }
    return m;
  }
  void save(const std::string& path) const {
    atomic_write_file(path, json{{"entries", entries}}.dump(2) + "\n");
  }
};

}  // namespace

DesignConfig design_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  DesignConfig config;
  config.design = j.value("design", "fa");
  if (config.design != "fa" && config.design != "gmm")
    throw UsageError("design must be 'fa' or 'gmm'");
  config.output_dir = j.value("output_dir", "out");
  config.master_seed = j.value("master_seed", 1ull);
  config.replicates = j.value("replicates", 20ll);
  config.workers = j.value("workers", 0);
  config.force = j.value("force", false);
  if (j.contains("sampler")) {
    const json& s = j.at("sampler");
    config.sampler.chains = s.value("chains", 4);
    config.sampler.warmup = s.value("warmup", 1000);
    config.sampler.iters = s.value("iters", 1000);
    config.sampler.thin = s.value("thin", 1);
  }
  if (j.contains("fa_conditions")) {
    for (const auto& c : j.at("fa_conditions")) {
      DesignConfig::FaCell cell;
      cell.c = c.at("c").get<double>();
      cell.sigma2 = c.at("sigma2").get<double>();
      cell.n_clusters = c.at("J").get<long long>();
      cell.warmup = c.value("warmup", 0);
      config.fa_conditions.push_back(cell);
    }
  }
  if (j.contains("gmm_conditions"))
    config.gmm_conditions =
        j.at("gmm_conditions").get<std::vector<std::string>>();
  if (j.contains("candidate_k"))
    config.candidate_k = j.at("candidate_k").get<std::vector<int>>();
  if (config.design == "fa" && config.fa_conditions.empty())
    throw UsageError("fa design requires fa_conditions");
  if (config.design == "gmm" && config.gmm_conditions.empty())
    throw UsageError("gmm design requires gmm_conditions");
  for (const auto& name : config.gmm_conditions)
    if (!GmmCondition::valid_name(name))
      throw UsageError("unknown gmm condition: " + name);
  return config;
}

std::string design_config_to_json(const DesignConfig& config) {
  json j;
  j["design"] = config.design;
  j["output_dir"] = config.output_dir;
  j["master_seed"] = config.master_seed;
  j["replicates"] = config.replicates;
  j["workers"] = config.workers;
  j["force"] = config.force;
  j["sampler"] = {{"chains", config.sampler.chains},
                  {"warmup", config.sampler.warmup},
                  {"iters", config.sampler.iters},
                  {"thin", config.sampler.thin}};
  json fa = json::array();
  for (const auto& c : config.fa_conditions) {
    json cell = {{"c", c.c}, {"sigma2", c.sigma2}, {"J", c.n_clusters}};
    if (c.warmup > 0) cell["warmup"] = c.warmup;
    fa.push_back(cell);
  }
  j["fa_conditions"] = fa;
  j["gmm_conditions"] = config.gmm_conditions;
  j["candidate_k"] = config.candidate_k;
  return j.dump(2) + "\n";
}

ModelResult evaluate_model(const Model& model, const Dataset& data,
                           const SamplerConfig& sampler_config) {
  ModelResult result;
  result.model_id = model.name();
  try {
    const ChainSet chains = sample(model, data, sampler_config);
    const PointwiseLogLik ll = pointwise_loglik_draws(model, data, chains);
    const Eigen::VectorXd plugin_point = chains.pooled_constrained_mean(model);
    const double plugin = plugin_deviance(model, plugin_point, data);

    result.criteria = compute_all(ll, plugin);

    // per-criterion timings on the same matrix; deviance row sums are
    // precomputed so the dic_i timing reflects its O(S) cost
    const DevianceDraws dev = deviance_from_pointwise(ll);
    auto t0 = std::chrono::steady_clock::now();
    volatile double sink = dic_family(dev, plugin).dic_i;
    result.timings_ms["dic_i"] = elapsed_ms(t0);
    t0 = std::chrono::steady_clock::now();
    sink = waic(ll).waic;
    result.timings_ms["waic"] = elapsed_ms(t0);
    t0 = std::chrono::steady_clock::now();
    sink = psis_loo(ll).loo;
    result.timings_ms["loo"] = elapsed_ms(t0);
    (void)sink;

    result.rhat = rhat_report(chains, model.param_names());
    if (const auto* fa = dynamic_cast<const FactorModel*>(&model))
      result.switch_report = detect_sign_switch(chains, *fa);
    result.within_chain_suspect = result.criteria.p_dic.has_value() &&
                                  *result.criteria.p_dic < 0.0 &&
                                  result.rhat.rhat_max < 1.1;
    std::vector<double> acc;
    for (const auto& chain : chains.chains) acc.push_back(chain.acceptance_rate);
    result.acceptance_mean = sample_mean(acc);
  } catch (const std::exception& e) {
    result.sampler_failed = true;
    result.error = e.what();
  }
  return result;
}

namespace {

struct Task {
  std::string condition;
  long long replicate = 0;
};

ReplicateResult run_task(const DesignConfig& config, const Task& task,
                         const std::string& task_dir) {
  ReplicateResult result;
  result.condition = task.condition;
  result.replicate = task.replicate;

  Dataset data;
  std::vector<std::unique_ptr<Model>> models;
  int warmup_override = 0;
  if (config.design == "fa") {
    FaCondition cond;
    bool found = false;
    for (const auto& cell : config.fa_conditions) {
      cond = FaCondition{cell.c, cell.sigma2, cell.n_clusters, task.replicate,
                         config.master_seed};
      if (cond.label() == task.condition) {
        found = true;
        warmup_override = cell.warmup;
        break;
      }
    }
    if (!found) throw UsageError("unknown fa condition: " + task.condition);
    data = generate_fa(cond);
    models.push_back(std::make_unique<FactorModel>(FaCondition::kIndicators));
  } else {
    GmmCondition cond{task.condition, task.replicate, config.master_seed};
    data = generate_gmm(cond);
    for (int k : config.candidate_k)
      models.push_back(std::make_unique<GmmModel>(k));
  }
  result.seed = data.meta.seed;
  result.condition_attrs = data.meta.attrs;

  write_dataset(task_dir + "/dataset.csv", task_dir + "/dataset.json", data);

  for (const auto& model : models) {
    SamplerConfig sampler_config = config.sampler;
    if (warmup_override > 0) sampler_config.warmup = warmup_override;
    sampler_config.seed = derive_seed(
        config.master_seed, "fit:" + config.design + ":" + task.condition,
        static_cast<std::uint64_t>(task.replicate), fnv1a(model->name()));
    result.models.push_back(evaluate_model(*model, data, sampler_config));
  }
  return result;
}

}  // namespace

std::vector<ReplicateResult> run_design(const DesignConfig& config) {
  std::vector<std::string> conditions;
  if (config.design == "fa") {
    for (const auto& cell : config.fa_conditions)
      conditions.push_back(FaCondition{cell.c, cell.sigma2, cell.n_clusters, 0,
                                       config.master_seed}
                               .label());
  } else {
    conditions = config.gmm_conditions;
  }
  if (config.replicates < 1) throw UsageError("run_design: replicates must be >= 1");

  std::vector<Task> tasks;
  for (const auto& condition : conditions)
    for (long long rep = 0; rep < config.replicates; ++rep)
      tasks.push_back({condition, rep});

  fs::create_directories(config.output_dir);
  const std::string manifest_path = config.output_dir + "/manifest.json";
  std::mutex manifest_mutex;
  Manifest manifest = Manifest::load(manifest_path);

  std::vector<ReplicateResult> results(tasks.size());
  std::vector<char> task_ok(tasks.size(), 0);
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      const std::string key = task.condition + "/" + replicate_dir_name(task.replicate);
      const std::string task_dir = config.output_dir + "/" + key;
      const std::string result_path = task_dir + "/result.json";

      if (!config.force) {
        bool have = false;
        {
          std::lock_guard<std::mutex> lock(manifest_mutex);
          have = manifest.entries.count(key) > 0;
        }
        if (have && fs::exists(result_path)) {
          try {
            ReplicateResult loaded =
                replicate_from_json(json::parse(read_file(result_path)));
            const std::string timing_path = task_dir + "/timings.json";
            if (fs::exists(timing_path))
              merge_timings(loaded, json::parse(read_file(timing_path)));
            results[i] = std::move(loaded);
            task_ok[i] = 1;
            continue;
          } catch (const std::exception&) {
            // fall through and recompute the damaged entry
          }
        }
      }

      fs::create_directories(task_dir);
      ReplicateResult computed = run_task(config, task, task_dir);
      atomic_write_file(result_path, replicate_to_json(computed).dump(2) + "\n");
      atomic_write_file(task_dir + "/timings.json",
                        timings_to_json(computed).dump(2) + "\n");
      results[i] = std::move(computed);
      task_ok[i] = 1;
      {
        std::lock_guard<std::mutex> lock(manifest_mutex);
        manifest.entries[key] = key + "/result.json";
        manifest.save(manifest_path);
      }
    }
  };

  int n_workers = config.workers > 0
                      ? config.workers
                      : static_cast<int>(std::thread::hardware_concurrency());
  if (n_workers < 1) n_workers = 1;
  n_workers = std::min<int>(n_workers, static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::vector<ReplicateResult> out;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (task_ok[i]) out.push_back(std::move(results[i]));
  return out;
}

std::vector<ReplicateResult> load_results(const std::string& output_dir) {
  const Manifest manifest = Manifest::load(output_dir + "/manifest.json");
  std::vector<ReplicateResult> results;
  for (const auto& [key, rel_path] : manifest.entries) {
    const std::string path = output_dir + "/" + rel_path;
    if (!fs::exists(path))
      throw IoError("manifest references missing file: " + path);
    ReplicateResult r = replicate_from_json(json::parse(read_file(path)));
    const std::string timing_path =
        fs::path(path).parent_path().string() + "/timings.json";
    if (fs::exists(timing_path))
      merge_timings(r, json::parse(read_file(timing_path)));
    results.push_back(std::move(r));
  }
  return results;
}

// --- reports -------------------------------------------------------------

namespace {

const std::vector<std::string> kComparedCriteria = {"loo", "dic_i", "dic_p", "dic"};

std::optional<double> criterion_value(const CriteriaReport& r,
                                      const std::string& name) {
  if (name == "waic") return r.waic;
  if (name == "dic_i") return r.dic_i;
  if (name == "loo") return r.loo;
  if (name == "dic") return r.dic;
  if (name == "dic_p") return r.dic_p;
  if (name == "p_v") return r.p_v;
  throw UsageError("unknown criterion: " + name);
}

}  // namespace

RmsdTable rmsd_report(const std::vector<ReplicateResult>& results) {
  std::map<std::string, std::vector<const ReplicateResult*>> by_condition;
  for (const auto& r : results) by_condition[r.condition].push_back(&r);

  RmsdTable table;
  for (const auto& [condition, reps] : by_condition) {
    RmsdRow row;
    row.condition = condition;

    // waic values per model id (GMM pools candidate models)
    std::map<std::string, std::vector<double>> waic_by_model;
    std::vector<std::pair<const CriteriaReport*, double>> reports;
    for (const auto* rep : reps)
      for (const auto& m : rep->models) {
        if (m.sampler_failed) continue;
        waic_by_model[m.model_id].push_back(m.criteria.waic);
        reports.push_back({&m.criteria, m.criteria.waic});
      }
    long long usable = 0;
    for (const auto& [id, vals] : waic_by_model)
      usable = std::max<long long>(usable, static_cast<long long>(vals.size()));
    if (usable < 2)
      throw UsageError("rmsd_report: need >= 2 replicates per condition (" +
                       condition + ")");

    // within-model variance, averaged over models, then square-rooted;
    // for a single-model design this is the plain SD over replicates
    std::vector<double> variances;
    for (const auto& [id, vals] : waic_by_model) {
      (void)id;
      if (vals.size() >= 2) variances.push_back(sample_variance(vals));
    }
    row.sd_waic = std::sqrt(sample_mean(variances));

    for (const auto& crit : kComparedCriteria) {
      std::vector<double> sq;
      long long missing = 0;
      for (const auto& [report, waic_value] : reports) {
        const auto v = criterion_value(*report, crit);
        if (!v.has_value()) {
          ++missing;
          continue;
        }
        const double d = *v - waic_value;
        sq.push_back(d * d);
      }
      row.n_missing[crit] = missing;
      row.rmsd[crit] = sq.empty() ? kNaN : std::sqrt(sample_mean(sq));
      row.n_used = static_cast<long long>(reports.size());
    }
    row.ratio_dic_i =
        row.sd_waic > 0.0 ? row.rmsd.at("dic_i") / row.sd_waic : kNaN;
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string rmsd_table_to_csv(const RmsdTable& table) {
  std::ostringstream os;
  os << "condition,n,sd_waic,rmsd_loo,rmsd_dic_i,rmsd_dic_p,rmsd_dic,"
        "ratio_dic_i,missing_dic\n";
  for (const auto& row : table.rows) {
    os << row.condition << ',' << row.n_used << ',' << row.sd_waic << ','
       << row.rmsd.at("loo") << ',' << row.rmsd.at("dic_i") << ','
       << row.rmsd.at("dic_p") << ',' << row.rmsd.at("dic") << ','
       << row.ratio_dic_i << ',' << row.n_missing.at("dic") << '\n';
  }
  return os.str();
}

std::string rmsd_table_to_text(const RmsdTable& table) {
  std::ostringstream os;
  os << std::left << std::setw(18) << "condition" << std::right << std::setw(6)
     << "n" << std::setw(12) << "SD(WAIC)" << std::setw(12) << "LOO"
     << std::setw(12) << "DIC_i" << std::setw(12) << "DIC_p" << std::setw(12)
     << "DIC" << std::setw(14) << "DIC_i/SD" << '\n';
  for (const auto& row : table.rows) {
    os << std::left << std::setw(18) << row.condition << std::right
       << std::setw(6) << row.n_used << std::fixed << std::setprecision(3)
       << std::setw(12) << row.sd_waic << std::setw(12) << row.rmsd.at("loo")
       << std::setw(12) << row.rmsd.at("dic_i") << std::setw(12)
       << row.rmsd.at("dic_p") << std::setw(12) << row.rmsd.at("dic")
       << std::setw(14) << row.ratio_dic_i << '\n';
    os.unsetf(std::ios::fixed);
  }
  os << "(RMSD columns are measured against WAIC)\n";
  return os.str();
}

ConvergenceTable convergence_study(const std::vector<ReplicateResult>& results) {
  std::map<double, std::vector<std::pair<double, double>>> by_j;  // J -> (diff, p_v)
  for (const auto& rep : results) {
    const auto it = rep.condition_attrs.find("J");
    if (it == rep.condition_attrs.end()) continue;
    for (const auto& m : rep.models) {
      if (m.sampler_failed) continue;
      by_j[it->second].push_back(
          {m.criteria.dic_i - m.criteria.waic, m.criteria.p_v});
    }
  }
  ConvergenceTable table;
  for (const auto& [j, vals] : by_j) {
    ConvergenceRow row;
    row.n_clusters = j;
    row.n = static_cast<long long>(vals.size());
    std::vector<double> diffs, pvs;
    for (const auto& [d, pv] : vals) {
      diffs.push_back(d);
      pvs.push_back(pv);
    }
    row.mean_diff = sample_mean(diffs);
    row.sd_diff = diffs.size() >= 2 ? std::sqrt(sample_variance(diffs)) : 0.0;
    const double half_width =
        1.96 * row.sd_diff / std::sqrt(static_cast<double>(row.n));
    row.ci_lo = row.mean_diff - half_width;
    row.ci_hi = row.mean_diff + half_width;
    row.mean_p_v = sample_mean(pvs);
    table.rows.push_back(row);
  }
  table.monotone_decreasing = table.rows.size() >= 2;
  for (std::size_t i = 1; i < table.rows.size(); ++i)
    if (!(table.rows[i].mean_diff < table.rows[i - 1].mean_diff))
      table.monotone_decreasing = false;
  return table;
}

std::string convergence_table_to_csv(const ConvergenceTable& table) {
  std::ostringstream os;
  os << "J,n,mean_dic_i_minus_waic,sd,ci_lo,ci_hi,mean_p_v\n";
  for (const auto& row : table.rows)
    os << row.n_clusters << ',' << row.n << ',' << row.mean_diff << ','
       << row.sd_diff << ',' << row.ci_lo << ',' << row.ci_hi << ','
       << row.mean_p_v << '\n';
  return os.str();
}

std::string convergence_table_to_text(const ConvergenceTable& table) {
  std::ostringstream os;
  os << std::right << std::setw(8) << "J" << std::setw(6) << "n" << std::setw(14)
     << "mean(diff)" << std::setw(22) << "95% CI" << std::setw(12) << "mean p_V"
     << '\n';
  for (const auto& row : table.rows) {
    std::ostringstream ci;
    ci << std::fixed << std::setprecision(3) << '[' << row.ci_lo << ", "
       << row.ci_hi << ']';
    os << std::right << std::setw(8) << row.n_clusters << std::setw(6) << row.n
       << std::fixed << std::setprecision(3) << std::setw(14) << row.mean_diff
       << std::setw(22) << ci.str() << std::setw(12) << row.mean_p_v << '\n';
    os.unsetf(std::ios::fixed);
  }
  os << "mean(DIC_i - WAIC) monotone decreasing: "
     << (table.monotone_decreasing ? "yes" : "no") << '\n';
  return os.str();
}

ModelComparisonReport model_comparison_report(
    const std::vector<ReplicateResult>& results) {
  const std::vector<std::string> criteria = {"dic_i", "waic", "loo", "dic_p", "dic"};
  ModelComparisonReport report;

  std::map<std::pair<std::string, int>,
           std::vector<const ModelComparisonReport::Delta*>>
      grouped;
  for (const auto& rep : results) {
    const ModelResult* base = nullptr;
    for (const auto& m : rep.models)
      if (m.model_id == "gmm2" && !m.sampler_failed) base = &m;
    if (!base) continue;
    for (const auto& m : rep.models) {
      if (m.sampler_failed || m.model_id == "gmm2" ||
          m.model_id.rfind("gmm", 0) != 0)
        continue;
      ModelComparisonReport::Delta delta;
      delta.condition = rep.condition;
      delta.replicate = rep.replicate;
      delta.k = std::stoi(m.model_id.substr(3));
      for (const auto& crit : criteria) {
        const auto a = criterion_value(m.criteria, crit);
        const auto b = criterion_value(base->criteria, crit);
        if (a.has_value() && b.has_value()) delta.delta[crit] = *a - *b;
      }
      report.deltas.push_back(std::move(delta));
    }
  }
  for (const auto& d : report.deltas) grouped[{d.condition, d.k}].push_back(&d);

  for (const auto& [key, deltas] : grouped) {
    ModelComparisonRow row;
    row.condition = key.first;
    row.k = key.second;
    row.n = static_cast<long long>(deltas.size());
    for (const auto& crit : criteria) {
      long long n = 0, favored = 0;
      for (const auto* d : deltas) {
        const auto it = d->delta.find(crit);
        if (it == d->delta.end()) continue;
        ++n;
        if (it->second > 0.0) ++favored;
      }
      if (n > 0)
        row.selection_rate[crit] =
            static_cast<double>(favored) / static_cast<double>(n);
    }
    long long n_both = 0, flips = 0;
    for (const auto* d : deltas) {
      const auto a = d->delta.find("dic_i");
      const auto b = d->delta.find("waic");
      if (a == d->delta.end() || b == d->delta.end()) continue;
      ++n_both;
      if ((a->second > 0.0) != (b->second > 0.0)) ++flips;
    }
    row.signflip_dici_vs_waic =
        n_both > 0 ? static_cast<double>(flips) / static_cast<double>(n_both)
                   : kNaN;
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string model_comparison_to_csv(const ModelComparisonReport& report) {
  std::ostringstream os;
  os << "condition,k,n,sel_dic_i,sel_waic,sel_loo,sel_dic_p,sel_dic,"
        "signflip_dici_vs_waic\n";
  for (const auto& row : report.rows) {
    auto rate = [&](const char* crit) {
      const auto it = row.selection_rate.find(crit);
      return it == row.selection_rate.end() ? kNaN : it->second;
    };
    os << row.condition << ',' << row.k << ',' << row.n << ',' << rate("dic_i")
       << ',' << rate("waic") << ',' << rate("loo") << ',' << rate("dic_p")
       << ',' << rate("dic") << ',' << row.signflip_dici_vs_waic << '\n';
  }
  return os.str();
}

std::string model_comparison_deltas_to_csv(const ModelComparisonReport& report) {
  std::ostringstream os;
  os << "condition,replicate,k,delta_dic_i,delta_waic,delta_loo,delta_dic_p,"
        "delta_dic\n";
  for (const auto& d : report.deltas) {
    auto val = [&](const char* crit) {
      const auto it = d.delta.find(crit);
      return it == d.delta.end() ? kNaN : it->second;
    };
    os << d.condition << ',' << d.replicate << ',' << d.k << ','
       << val("dic_i") << ',' << val("waic") << ',' << val("loo") << ','
       << val("dic_p") << ',' << val("dic") << '\n';
  }
  return os.str();
}

std::string model_comparison_to_text(const ModelComparisonReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "condition" << std::right << std::setw(4)
     << "K" << std::setw(5) << "n" << std::setw(10) << "DIC_i" << std::setw(10)
     << "WAIC" << std::setw(10) << "LOO" << std::setw(12) << "signflip" << '\n';
  for (const auto& row : report.rows) {
    auto rate = [&](const char* crit) {
      const auto it = row.selection_rate.find(crit);
      return it == row.selection_rate.end() ? kNaN : it->second;
    };
    os << std::left << std::setw(12) << row.condition << std::right
       << std::setw(4) << row.k << std::setw(5) << row.n << std::fixed
       << std::setprecision(2) << std::setw(10) << rate("dic_i") << std::setw(10)
       << rate("waic") << std::setw(10) << rate("loo") << std::setw(12)
       << row.signflip_dici_vs_waic << '\n';
    os.unsetf(std::ios::fixed);
  }
  os << "(selection rate = fraction of replicates where the criterion favors "
        "the 2-class model)\n";
  return os.str();
}

TimingReport timing_report(const std::vector<ReplicateResult>& results) {
  std::map<std::string, std::vector<double>> samples;
  for (const auto& rep : results)
    for (const auto& m : rep.models)
      for (const auto& [name, ms] : m.timings_ms) samples[name].push_back(ms);

  TimingReport report;
  for (const auto& [name, vals] : samples) {
    report.median_ms[name] = median(vals);
    report.sd_ms[name] =
        vals.size() >= 2 ? std::sqrt(sample_variance(vals)) : 0.0;
    report.n = static_cast<long long>(vals.size());
  }
  return report;
}

std::string timing_report_to_csv(const TimingReport& report) {
  std::ostringstream os;
  os << "criterion,n,median_ms,sd_ms\n";
  for (const auto& [name, med] : report.median_ms)
    os << name << ',' << report.n << ',' << med << ',' << report.sd_ms.at(name)
       << '\n';
  return os.str();
}

std::string timing_report_to_text(const TimingReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "criterion" << std::right << std::setw(12)
     << "median ms" << std::setw(12) << "sd ms" << std::setw(8) << "n" << '\n';
  for (const auto& [name, med] : report.median_ms) {
    os << std::left << std::setw(10) << name << std::right << std::fixed
       << std::setprecision(3) << std::setw(12) << med << std::setw(12)
       << report.sd_ms.at(name) << std::setw(8) << report.n << '\n';
    os.unsetf(std::ios::fixed);
  }
  return os.str();
}

}  // namespace infocrit
