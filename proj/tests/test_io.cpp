// Apache License, Version 2.0, refer to LICENSE.txt
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "infocrit/errors.hpp"
#include "infocrit/io.hpp"
#include "infocrit/simulate.hpp"

using namespace infocrit;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("infocrit_io_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int counter;
};
int TempDir::counter = 0;

Eigen::MatrixXd random_matrix(long long s, long long j, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> norm(-1.0, 0.8);
  Eigen::MatrixXd m(s, j);
  for (long long r = 0; r < s; ++r)
    for (long long c = 0; c < j; ++c) m(r, c) = norm(gen);
  return m;
}

}  // namespace

TEST_CASE("pointwise long CSV round trip preserves values and chains") {
  TempDir dir;
  Eigen::MatrixXd m = random_matrix(8, 3, 1);
  PointwiseLogLik original(m, {0, 0, 0, 0, 1, 1, 1, 1});
  const std::string path = dir.file("ll_long.csv");
  write_pointwise_csv_long(path, original);

  const PointwiseLogLik loaded = read_pointwise_csv(path);
  CHECK(loaded.draws() == 8);
  CHECK(loaded.clusters() == 3);
  CHECK((loaded.values() - m).cwiseAbs().maxCoeff() == 0.0);  // full precision
  CHECK(loaded.chain_index() == original.chain_index());
}

TEST_CASE("pointwise wide CSV round trip") {
  TempDir dir;
  Eigen::MatrixXd m = random_matrix(5, 4, 2);
  const std::string path = dir.file("ll_wide.csv");
  write_pointwise_csv_wide(path, PointwiseLogLik(m));
  const PointwiseLogLik loaded = read_pointwise_csv(path);
  CHECK(loaded.draws() == 5);
  CHECK(loaded.clusters() == 4);
  CHECK((loaded.values() - m).cwiseAbs().maxCoeff() == 0.0);
  CHECK(loaded.chain_index().empty());
}

TEST_CASE("pointwise CSV rejects malformed input") {
  TempDir dir;
  const std::string path = dir.file("bad.csv");
  atomic_write_file(path, "draw,chain,j,loglik\n1,1,1\n");
  CHECK_THROWS_AS(read_pointwise_csv(path), IoError);
  atomic_write_file(path, "x1,x2\n0.0,0.0\n");
  CHECK_THROWS_AS(read_pointwise_csv(path), IoError);
  atomic_write_file(path, "j1,j2\n0.0,oops\n");
  CHECK_THROWS_AS(read_pointwise_csv(path), IoError);
  atomic_write_file(path, "j1,j2\n");
  CHECK_THROWS_AS(read_pointwise_csv(path), IoError);
}

TEST_CASE("cmdstan ingest picks the log_lik columns across chains") {
  TempDir dir;
  const std::string f1 = dir.file("chain1.csv");
  const std::string f2 = dir.file("chain2.csv");
  atomic_write_file(
      f1,
      "# stan_version_major = 2\n"
      "lp__,accept_stat__,theta,log_lik.1,log_lik.2,log_lik.3\n"
      "-5.0,0.9,0.1,-1.0,-2.0,-3.0\n"
      "# Adaptation terminated\n"
      "-5.5,0.8,0.2,-1.1,-2.1,-3.1\n");
  atomic_write_file(f2,
                    "lp__,accept_stat__,theta,log_lik.1,log_lik.2,log_lik.3\n"
                    "-6.0,0.7,0.3,-1.2,-2.2,-3.2\n"
                    "-6.5,0.6,0.4,-1.3,-2.3,-3.3\n");

  const PointwiseLogLik ll = ingest_cmdstan_csv({f1, f2});
  CHECK(ll.draws() == 4);
  CHECK(ll.clusters() == 3);
  CHECK(ll.values()(0, 0) == doctest::Approx(-1.0));
  CHECK(ll.values()(3, 2) == doctest::Approx(-3.3));
  CHECK(ll.chain_index() == std::vector<int>{0, 0, 1, 1});

  // bracket style also accepted
  const std::string f3 = dir.file("chain3.csv");
  atomic_write_file(f3,
                    "lp__,log_lik[1],log_lik[2]\n"
                    "-1.0,-0.5,-0.6\n-1.1,-0.55,-0.65\n");
  const PointwiseLogLik bracket = ingest_cmdstan_csv({f3});
  CHECK(bracket.clusters() == 2);

  const std::string f4 = dir.file("nolik.csv");
  atomic_write_file(f4, "lp__,theta\n-1.0,0.1\n");
  CHECK_THROWS_AS(ingest_cmdstan_csv({f4}), IoError);
}

TEST_CASE("fa dataset round trip") {
  TempDir dir;
  FaCondition cond;
  cond.c = 0.6;
  cond.sigma2 = 0.5;
  cond.n_clusters = 12;
  cond.replicate = 2;
  cond.master_seed = 41;
  const Dataset data = generate_fa(cond);
  write_dataset(dir.file("d.csv"), dir.file("d.json"), data);
  const Dataset loaded = read_dataset(dir.file("d.csv"), dir.file("d.json"));
  REQUIRE(loaded.size() == data.size());
  for (long long j = 0; j < data.size(); ++j)
    CHECK(loaded.clusters[j].y == data.clusters[j].y);
  CHECK(loaded.meta.condition == data.meta.condition);
  CHECK(loaded.meta.seed == data.meta.seed);
  CHECK(loaded.meta.attrs.at("c") == 0.6);
}

TEST_CASE("gmm dataset round trip keeps the long layout") {
  TempDir dir;
  GmmCondition cond{"bg1", 1, 42};
  const Dataset data = generate_gmm(cond);
  write_dataset(dir.file("g.csv"), dir.file("g.json"), data);
  const Dataset loaded = read_dataset(dir.file("g.csv"), dir.file("g.json"));
  REQUIRE(loaded.size() == data.size());
  for (long long j = 0; j < data.size(); ++j) {
    CHECK(loaded.clusters[j].y == data.clusters[j].y);
    CHECK(loaded.clusters[j].t == data.clusters[j].t);
  }
  CHECK(loaded.meta.design == "gmm");

  // header spot check
  std::ifstream in(dir.file("g.csv"));
  std::string header;
  std::getline(in, header);
  CHECK(header == "cluster,occasion,t,y");
}

TEST_CASE("criteria report JSON round trip") {
  CriteriaReport report;
  report.draws = 100;
  report.clusters = 4;
  report.mean_deviance = 123.5;
  report.plugin_deviance = 120.0;
  report.p_dic = 3.5;
  report.p_v = 4.5;
  report.p_waic = 4.2;
  report.p_loo = 4.3;
  report.dic = 127.0;
  report.dic_p = 129.0;
  report.dic_i = 128.0;
  report.waic = 131.9;
  report.loo = 132.1;
  report.lppd = -61.75;
  report.psis_tail_size = 19;
  report.flags = {Flag::PWAIC_UNRELIABLE, Flag::PARETO_K_HIGH};
  report.per_cluster = {{-1.0, 0.2, 0.5},
                        {-2.0, 0.5, std::numeric_limits<double>::quiet_NaN()}};

  const CriteriaReport back = criteria_report_from_json(criteria_report_to_json(report));
  CHECK(back.draws == 100);
  CHECK(back.mean_deviance == report.mean_deviance);
  CHECK(back.plugin_deviance.value() == 120.0);
  CHECK(back.p_dic.value() == 3.5);
  CHECK(back.dic_i == 128.0);
  CHECK(back.flags == report.flags);
  REQUIRE(back.per_cluster.size() == 2);
  CHECK(back.per_cluster[0].khat_j == 0.5);
  CHECK(std::isnan(back.per_cluster[1].khat_j));

  // absent plugin stays absent
  CriteriaReport no_plugin;
  no_plugin.draws = 10;
  no_plugin.clusters = 1;
  no_plugin.flags = {Flag::PLUGIN_MISSING};
  no_plugin.per_cluster = {{-1.0, 0.1, 0.2}};
  const CriteriaReport back2 =
      criteria_report_from_json(criteria_report_to_json(no_plugin));
  CHECK_FALSE(back2.plugin_deviance.has_value());
  CHECK_FALSE(back2.dic.has_value());
  CHECK(back2.flags.count(Flag::PLUGIN_MISSING) == 1);
}

TEST_CASE("draws CSV round trip") {
  TempDir dir;
  ChainSet set;
  for (int c = 0; c < 2; ++c) {
    Chain chain;
    chain.constrained.resize(3, 2);
    chain.constrained << 1.0 + c, 2.0, 3.0, 4.0, 5.0, 6.0 + c;
    chain.log_posterior = Eigen::VectorXd::LinSpaced(3, -1.0, -3.0);
    chain.log_lik_total = Eigen::VectorXd::LinSpaced(3, -0.5, -2.5);
    set.chains.push_back(std::move(chain));
  }
  const std::string path = dir.file("draws.csv");
  write_draws_csv(path, set, {"alpha", "beta"});
  const DrawsTable table = read_draws_csv(path);
  REQUIRE(table.chains.size() == 2);
  CHECK(table.names ==
        std::vector<std::string>{"alpha", "beta", "lp__", "loglik__"});
  CHECK(table.chains[0](0, 0) == 1.0);
  CHECK(table.chains[1](0, 0) == 2.0);
  CHECK(table.chains[1](2, 1) == 7.0);
  CHECK(table.chains[0](1, 2) == doctest::Approx(-2.0));  // lp__ column
}

TEST_CASE("atomic write replaces content completely") {
  TempDir dir;
  const std::string path = dir.file("x.txt");
  atomic_write_file(path, "first version, long content\n");
  atomic_write_file(path, "v2\n");
  CHECK(read_file(path) == "v2\n");
}
