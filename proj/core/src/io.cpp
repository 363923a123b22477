// Apache License, Version 2.0, refer to LICENSE.txt
#include "infocrit/io.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "infocrit/errors.hpp"

namespace infocrit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("could not parse number '" + s + "' in " + context);
  }
}

long long parse_int(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("could not parse integer '" + s + "' in " + context);
  }
}

json optional_to_json(const std::optional<double>& v) {
  if (!v.has_value()) return nullptr;
  return *v;
}

std::optional<double> optional_from_json(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json nan_to_json(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

double nan_from_json(const json& j) {
  if (j.is_null()) return kNaN;
  return j.get<double>();
}

}  // namespace

void atomic_write_file(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.parent_path() /
                       (target.filename().string() + ".tmp." +
                        std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_pointwise_csv_long(const std::string& path, const PointwiseLogLik& ll) {
  std::ostringstream os;
  os << "draw,chain,j,loglik\n";
  const bool has_chain = !ll.chain_index().empty();
  for (long long s = 0; s < ll.draws(); ++s) {
    const int chain = has_chain ? ll.chain_index()[s] + 1 : 1;
    for (long long j = 0; j < ll.clusters(); ++j)
      os << (s + 1) << ',' << chain << ',' << (j + 1) << ','
         << format_double(ll.values()(s, j)) << '\n';
  }
  atomic_write_file(path, os.str());
}

void write_pointwise_csv_wide(const std::string& path, const PointwiseLogLik& ll) {
  std::ostringstream os;
  for (long long j = 0; j < ll.clusters(); ++j)
    os << (j ? "," : "") << 'j' << (j + 1);
  os << '\n';
  for (long long s = 0; s < ll.draws(); ++s) {
    for (long long j = 0; j < ll.clusters(); ++j)
      os << (j ? "," : "") << format_double(ll.values()(s, j));
    os << '\n';
  }
  atomic_write_file(path, os.str());
}

namespace {

PointwiseLogLik read_pointwise_long(std::istream& in) {
  // rows keyed by (draw, j); draws need not be contiguous but must be
  // consistent: every draw has the same cluster set and one chain
  std::map<long long, std::map<long long, double>> rows;
  std::map<long long, int> chain_of;
  std::string line;
  long long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4)
      throw IoError("long pointwise CSV: expected 4 fields at line " +
                    std::to_string(lineno));
    const std::string ctx = "line " + std::to_string(lineno);
    const long long draw = parse_int(f[0], ctx);
    const long long chain = parse_int(f[1], ctx);
    const long long j = parse_int(f[2], ctx);
    const double v = parse_double(f[3], ctx);
    rows[draw][j] = v;
    auto [it, inserted] = chain_of.emplace(draw, static_cast<int>(chain));
    if (!inserted && it->second != chain)
      throw IoError("long pointwise CSV: draw " + std::to_string(draw) +
                    " appears in multiple chains");
  }
  if (rows.empty()) throw IoError("long pointwise CSV: no data rows");

  const auto& first = rows.begin()->second;
  const long long j_count = static_cast<long long>(first.size());
  Eigen::MatrixXd values(static_cast<long long>(rows.size()), j_count);
  std::vector<int> chain_index;
  chain_index.reserve(rows.size());

  // chains renumbered to 0..C-1 in order of first appearance by draw id
  std::map<int, int> chain_renumber;
  long long s = 0;
  for (const auto& [draw, cols] : rows) {
    if (static_cast<long long>(cols.size()) != j_count)
      throw IoError("long pointwise CSV: draw " + std::to_string(draw) +
                    " has an inconsistent cluster set");
    long long jj = 0;
    for (const auto& [j, v] : cols) {
      (void)j;
      values(s, jj++) = v;
    }
    const int raw = chain_of.at(draw);
    auto [it, _] = chain_renumber.emplace(raw, static_cast<int>(chain_renumber.size()));
    chain_index.push_back(it->second);
    ++s;
  }
  if (chain_renumber.size() < 2) chain_index.clear();  // single chain: drop
  return PointwiseLogLik(std::move(values), std::move(chain_index));
}

PointwiseLogLik read_pointwise_wide(std::istream& in, long long j_count) {
  std::vector<std::vector<double>> rows;
  std::string line;
  long long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (static_cast<long long>(f.size()) != j_count)
      throw IoError("wide pointwise CSV: expected " + std::to_string(j_count) +
                    " fields at line " + std::to_string(lineno));
    std::vector<double> row(j_count);
    for (long long j = 0; j < j_count; ++j)
      row[j] = parse_double(f[j], "line " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("wide pointwise CSV: no data rows");
  Eigen::MatrixXd values(static_cast<long long>(rows.size()), j_count);
  for (std::size_t s = 0; s < rows.size(); ++s)
    for (long long j = 0; j < j_count; ++j) values(s, j) = rows[s][j];
  return PointwiseLogLik(std::move(values));
}

}  // namespace

PointwiseLogLik read_pointwise_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw IoError("empty pointwise CSV: " + path);
  const auto fields = split_csv_line(header);
  if (fields.size() == 4 && fields[0] == "draw" && fields[1] == "chain" &&
      fields[2] == "j" && fields[3] == "loglik")
    return read_pointwise_long(in);
  // wide: all headers must look like j<k>
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].size() < 2 || fields[i][0] != 'j')
      throw IoError("unrecognized pointwise CSV header in " + path);
    parse_int(fields[i].substr(1), "header of " + path);
  }
  return read_pointwise_wide(in, static_cast<long long>(fields.size()));
}

PointwiseLogLik ingest_cmdstan_csv(const std::vector<std::string>& paths) {
  if (paths.empty()) throw UsageError("ingest: need at least one draws file");
  const std::regex loglik_re(R"(^log_lik[.\[](\d+)\]?$)");

  std::vector<Eigen::MatrixXd> chains;
  long long j_count = -1;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    std::vector<int> loglik_cols;   // column -> cluster (1-based)
    std::vector<long long> cluster_ids;
    bool header_seen = false;
    std::vector<std::vector<double>> rows;
    long long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      const auto f = split_csv_line(line);
      if (!header_seen) {
        header_seen = true;
        for (std::size_t c = 0; c < f.size(); ++c) {
          std::smatch m;
          if (std::regex_match(f[c], m, loglik_re)) {
            loglik_cols.push_back(static_cast<int>(c));
            cluster_ids.push_back(parse_int(m[1].str(), "header of " + path));
          }
        }
        if (loglik_cols.empty())
          throw IoError("no log_lik.* columns found in " + path);
        continue;
      }
      std::vector<double> row(loglik_cols.size());
      for (std::size_t i = 0; i < loglik_cols.size(); ++i) {
        if (static_cast<std::size_t>(loglik_cols[i]) >= f.size())
          throw IoError("short row at line " + std::to_string(lineno) + " in " + path);
        row[i] = parse_double(f[loglik_cols[i]],
                              path + " line " + std::to_string(lineno));
      }
      rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("no draws found in " + path);
    if (j_count < 0) j_count = static_cast<long long>(loglik_cols.size());
    if (j_count != static_cast<long long>(loglik_cols.size()))
      throw IoError("files disagree on the number of log_lik columns");

    Eigen::MatrixXd m(static_cast<long long>(rows.size()), j_count);
    for (std::size_t s = 0; s < rows.size(); ++s)
      for (long long j = 0; j < j_count; ++j) m(static_cast<long long>(s), j) = rows[s][j];
    chains.push_back(std::move(m));
  }

  long long total = 0;
  for (const auto& m : chains) total += m.rows();
  Eigen::MatrixXd values(total, j_count);
  std::vector<int> chain_index;
  chain_index.reserve(total);
  long long row = 0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    values.middleRows(row, chains[c].rows()) = chains[c];
    for (long long s = 0; s < chains[c].rows(); ++s)
      chain_index.push_back(static_cast<int>(c));
    row += chains[c].rows();
  }
  if (chains.size() < 2) chain_index.clear();
  return PointwiseLogLik(std::move(values), std::move(chain_index));
}

void write_dataset(const std::string& csv_path, const std::string& meta_path,
                   const Dataset& data) {
  std::ostringstream os;
  const bool longitudinal = !data.clusters.empty() && data.clusters[0].t.size() > 0;
  if (longitudinal) {
    os << "cluster,occasion,t,y\n";
    for (long long j = 0; j < data.size(); ++j) {
      const auto& cl = data.clusters[j];
      for (Eigen::Index i = 0; i < cl.y.size(); ++i)
        os << (j + 1) << ',' << (i + 1) << ',' << format_double(cl.t[i]) << ','
           << format_double(cl.y[i]) << '\n';
    }
  } else {
    if (data.clusters.empty()) throw UsageError("write_dataset: empty dataset");
    const Eigen::Index n = data.clusters[0].y.size();
    for (Eigen::Index i = 0; i < n; ++i) os << (i ? "," : "") << 'y' << (i + 1);
    os << '\n';
    for (const auto& cl : data.clusters) {
      if (cl.y.size() != n)
        throw UsageError("write_dataset: ragged wide dataset");
      for (Eigen::Index i = 0; i < n; ++i)
        os << (i ? "," : "") << format_double(cl.y[i]);
      os << '\n';
    }
  }
  atomic_write_file(csv_path, os.str());

  json meta;
  meta["design"] = data.meta.design;
  meta["condition"] = data.meta.condition;
  meta["replicate"] = data.meta.replicate;
  meta["seed"] = data.meta.seed;
  meta["clusters"] = data.size();
  meta["attrs"] = data.meta.attrs;
  atomic_write_file(meta_path, meta.dump(2) + "\n");
}

Dataset read_dataset(const std::string& csv_path, const std::string& meta_path) {
  Dataset data;
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open " + csv_path);
  std::string header;
  if (!std::getline(in, header)) throw IoError("empty dataset CSV: " + csv_path);
  const auto head = split_csv_line(header);

  std::string line;
  long long lineno = 1;
  if (head.size() == 4 && head[0] == "cluster" && head[1] == "occasion" &&
      head[2] == "t" && head[3] == "y") {
    std::map<long long, std::vector<std::pair<double, double>>> by_cluster;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto f = split_csv_line(line);
      if (f.size() != 4)
        throw IoError("dataset CSV: expected 4 fields at line " + std::to_string(lineno));
      const std::string ctx = "line " + std::to_string(lineno);
      by_cluster[parse_int(f[0], ctx)].push_back(
          {parse_double(f[2], ctx), parse_double(f[3], ctx)});
    }
    for (const auto& [id, obs] : by_cluster) {
      (void)id;
      Cluster cl;
      cl.t.resize(static_cast<Eigen::Index>(obs.size()));
      cl.y.resize(static_cast<Eigen::Index>(obs.size()));
      for (std::size_t i = 0; i < obs.size(); ++i) {
        cl.t[static_cast<Eigen::Index>(i)] = obs[i].first;
        cl.y[static_cast<Eigen::Index>(i)] = obs[i].second;
      }
      data.clusters.push_back(std::move(cl));
    }
  } else {
    const Eigen::Index n = static_cast<Eigen::Index>(head.size());
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto f = split_csv_line(line);
      if (static_cast<Eigen::Index>(f.size()) != n)
        throw IoError("dataset CSV: ragged row at line " + std::to_string(lineno));
      Cluster cl;
      cl.y.resize(n);
      for (Eigen::Index i = 0; i < n; ++i)
        cl.y[i] = parse_double(f[i], "line " + std::to_string(lineno));
      data.clusters.push_back(std::move(cl));
    }
  }
  if (data.clusters.empty()) throw IoError("dataset CSV has no rows: " + csv_path);

  if (!meta_path.empty() && fs::exists(meta_path)) {
    const json meta = json::parse(read_file(meta_path));
    data.meta.design = meta.value("design", "");
    data.meta.condition = meta.value("condition", "");
    data.meta.replicate = meta.value("replicate", -1);
    data.meta.seed = meta.value("seed", 0ull);
    if (meta.contains("attrs"))
      data.meta.attrs = meta.at("attrs").get<std::map<std::string, double>>();
  }
  return data;
}

void write_draws_csv(const std::string& path, const ChainSet& chains,
                     const std::vector<std::string>& param_names) {
  std::ostringstream os;
  os << "draw,chain";
  for (const auto& name : param_names) os << ',' << name;
  os << ",lp__,loglik__\n";
  for (std::size_t c = 0; c < chains.chains.size(); ++c) {
    const Chain& chain = chains.chains[c];
    if (chain.constrained.cols() != static_cast<Eigen::Index>(param_names.size()))
      throw UsageError("write_draws_csv: name count mismatch");
    for (Eigen::Index s = 0; s < chain.constrained.rows(); ++s) {
      os << (s + 1) << ',' << (c + 1);
      for (Eigen::Index p = 0; p < chain.constrained.cols(); ++p)
        os << ',' << format_double(chain.constrained(s, p));
      os << ',' << format_double(chain.log_posterior[s]) << ','
         << format_double(chain.log_lik_total[s]) << '\n';
    }
  }
  atomic_write_file(path, os.str());
}

DrawsTable read_draws_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw IoError("empty draws CSV: " + path);
  auto head = split_csv_line(header);
  if (head.size() < 3 || head[0] != "draw" || head[1] != "chain")
    throw IoError("draws CSV must start with draw,chain columns: " + path);

  DrawsTable table;
  for (std::size_t i = 2; i < head.size(); ++i) table.names.push_back(head[i]);

  std::map<long long, std::vector<std::vector<double>>> rows_by_chain;
  std::string line;
  long long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != head.size())
      throw IoError("draws CSV: ragged row at line " + std::to_string(lineno));
    const std::string ctx = "line " + std::to_string(lineno);
    const long long chain = parse_int(f[1], ctx);
    std::vector<double> row(table.names.size());
    for (std::size_t i = 0; i < table.names.size(); ++i)
      row[i] = parse_double(f[i + 2], ctx);
    rows_by_chain[chain].push_back(std::move(row));
  }
  for (const auto& [chain, rows] : rows_by_chain) {
    (void)chain;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.names.size()));
    for (std::size_t s = 0; s < rows.size(); ++s)
      for (std::size_t p = 0; p < table.names.size(); ++p)
        m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(p)) = rows[s][p];
    table.chains.push_back(std::move(m));
  }
  if (table.chains.empty()) throw IoError("draws CSV has no rows: " + path);
  return table;
}

std::string criteria_report_to_json(const CriteriaReport& report) {
  json j;
  j["draws"] = report.draws;
  j["clusters"] = report.clusters;
  j["mean_deviance"] = report.mean_deviance;
  j["plugin_deviance"] = optional_to_json(report.plugin_deviance);
  j["p_dic"] = optional_to_json(report.p_dic);
  j["p_v"] = report.p_v;
  j["p_waic"] = report.p_waic;
  j["p_loo"] = optional_to_json(report.p_loo);
  j["dic"] = optional_to_json(report.dic);
  j["dic_p"] = optional_to_json(report.dic_p);
  j["dic_i"] = report.dic_i;
  j["waic"] = report.waic;
  j["loo"] = optional_to_json(report.loo);
  j["lppd"] = report.lppd;
  j["psis_tail_size"] =
      report.psis_tail_size.has_value() ? json(*report.psis_tail_size) : json(nullptr);
  json flags = json::array();
  for (Flag f : report.flags) flags.push_back(flag_name(f));
  j["flags"] = flags;
  json per_cluster = json::array();
  for (std::size_t i = 0; i < report.per_cluster.size(); ++i) {
    const auto& cs = report.per_cluster[i];
    per_cluster.push_back({{"j", i + 1},
                           {"lppd_j", cs.lppd_j},
                           {"var_lj", cs.var_lj},
                           {"khat_j", nan_to_json(cs.khat_j)}});
  }
  j["per_cluster"] = per_cluster;
  return j.dump(2) + "\n";
}

CriteriaReport criteria_report_from_json(const std::string& text) {
  const json j = json::parse(text);
  CriteriaReport report;
  report.draws = j.at("draws").get<long long>();
  report.clusters = j.at("clusters").get<long long>();
  report.mean_deviance = j.at("mean_deviance").get<double>();
  report.plugin_deviance = optional_from_json(j, "plugin_deviance");
  report.p_dic = optional_from_json(j, "p_dic");
  report.p_v = j.at("p_v").get<double>();
  report.p_waic = j.at("p_waic").get<double>();
  report.p_loo = optional_from_json(j, "p_loo");
  report.dic = optional_from_json(j, "dic");
  report.dic_p = optional_from_json(j, "dic_p");
  report.dic_i = j.at("dic_i").get<double>();
  report.waic = j.at("waic").get<double>();
  report.loo = optional_from_json(j, "loo");
  report.lppd = j.at("lppd").get<double>();
  if (j.contains("psis_tail_size") && !j.at("psis_tail_size").is_null())
    report.psis_tail_size = j.at("psis_tail_size").get<int>();
  for (const auto& name : j.at("flags")) {
    const auto f = flag_from_name(name.get<std::string>());
    if (f) report.flags.insert(*f);
  }
  for (const auto& cs : j.at("per_cluster")) {
    ClusterStat stat;
    stat.lppd_j = cs.at("lppd_j").get<double>();
    stat.var_lj = cs.at("var_lj").get<double>();
    stat.khat_j = nan_from_json(cs.at("khat_j"));
    report.per_cluster.push_back(stat);
  }
  return report;
}

std::string rhat_report_to_json(const RhatReport& report) {
  json j;
  j["rhat_max"] = report.rhat_max;
  json params = json::array();
  for (std::size_t i = 0; i < report.parameter.size(); ++i)
    params.push_back({{"parameter", report.parameter[i]},
                      {"classic_rhat", report.classic_rhat[i]},
                      {"rank_normalized_split_rhat",
                       report.rank_normalized_split_rhat[i]}});
  j["parameters"] = params;
  return j.dump(2) + "\n";
}

std::string switch_report_to_json(const SwitchReport& report) {
  json j;
  j["sign_switch"] = report.sign_switch;
  j["indeterminate"] = report.indeterminate;
  j["chain_signs"] = report.chain_signs;
  j["notes"] = report.notes;
  return j.dump(2) + "\n";
}

std::string format_rhat_table(const RhatReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "parameter" << std::right << std::setw(14)
     << "classic_rhat" << std::setw(18) << "rank_split_rhat" << '\n';
  for (std::size_t i = 0; i < report.parameter.size(); ++i) {
    os << std::left << std::setw(16) << report.parameter[i] << std::right
       << std::setw(14) << std::setprecision(4) << std::fixed
       << report.classic_rhat[i] << std::setw(18)
       << report.rank_normalized_split_rhat[i] << '\n';
    os.unsetf(std::ios::fixed);
  }
  os << "rhat_max (classic, parameters only): " << std::setprecision(6)
     << report.rhat_max << '\n';
  return os.str();
}

}  // namespace infocrit
