// Apache License, Version 2.0, refer to LICENSE.txt
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "infocrit/diagnostics.hpp"
#include "infocrit/errors.hpp"
#include "infocrit/models.hpp"
#include "infocrit/numerics.hpp"
#include "infocrit/sampler.hpp"
#include "infocrit/simulate.hpp"

using namespace infocrit;

namespace {

// target distribution expressed as the prior; likelihood contributes 0
class GaussianTargetModel : public Model {
 public:
  GaussianTargetModel(Eigen::VectorXd mean, Eigen::MatrixXd cov)
      : mean_(std::move(mean)), cov_(cov) {}

  std::string name() const override { return "target"; }
  int unconstrained_dim() const override { return static_cast<int>(mean_.size()); }
  int constrained_dim() const override { return unconstrained_dim(); }
  int free_param_count() const override { return unconstrained_dim(); }
  std::vector<std::pair<int, int>> proposal_blocks() const override {
    return {{0, unconstrained_dim()}};
  }
  std::vector<std::string> param_names() const override {
    std::vector<std::string> names;
    for (int i = 0; i < unconstrained_dim(); ++i)
      names.push_back("x." + std::to_string(i + 1));
    return names;
  }
  Eigen::VectorXd constrain(const Eigen::VectorXd& u) const override { return u; }
  Eigen::VectorXd unconstrain(const Eigen::VectorXd& c) const override { return c; }
  double log_prior(const Eigen::VectorXd& u) const override {
    return mvn_logpdf(u, mean_, cov_);
  }
  Eigen::VectorXd pointwise_loglik(const Dataset& data,
                                   const Eigen::VectorXd&) const override {
    return Eigen::VectorXd::Zero(data.size());
  }
  Eigen::VectorXd pointwise_loglik_constrained(
      const Dataset& data, const Eigen::VectorXd&) const override {
    return Eigen::VectorXd::Zero(data.size());
  }

 private:
  Eigen::VectorXd mean_;
  SpdMatrix cov_;
};

// scalar mean with known observation noise and conjugate normal prior
class NormalMeanModel : public Model {
 public:
  NormalMeanModel(double obs_sd, double prior_mean, double prior_sd)
      : obs_sd_(obs_sd), prior_mean_(prior_mean), prior_sd_(prior_sd) {}

  std::string name() const override { return "normal-mean"; }
  int unconstrained_dim() const override { return 1; }
  int constrained_dim() const override { return 1; }
  int free_param_count() const override { return 1; }
  std::vector<std::pair<int, int>> proposal_blocks() const override {
    return {{0, 1}};
  }
  std::vector<std::string> param_names() const override { return {"theta"}; }
  Eigen::VectorXd constrain(const Eigen::VectorXd& u) const override { return u; }
  Eigen::VectorXd unconstrain(const Eigen::VectorXd& c) const override { return c; }
  double log_prior(const Eigen::VectorXd& u) const override {
    return normal_logpdf(u[0], prior_mean_, prior_sd_);
  }
  Eigen::VectorXd pointwise_loglik(const Dataset& data,
                                   const Eigen::VectorXd& u) const override {
    Eigen::VectorXd out(data.size());
    for (long long j = 0; j < data.size(); ++j)
      out[j] = normal_logpdf(data.clusters[j].y[0], u[0], obs_sd_);
    return out;
  }
  Eigen::VectorXd pointwise_loglik_constrained(
      const Dataset& data, const Eigen::VectorXd& c) const override {
    return pointwise_loglik(data, c);
  }

 private:
  double obs_sd_, prior_mean_, prior_sd_;
};

class HopelessModel : public GaussianTargetModel {
 public:
  HopelessModel()
      : GaussianTargetModel(Eigen::VectorXd::Zero(1),
                            Eigen::MatrixXd::Identity(1, 1)) {}
  double log_prior(const Eigen::VectorXd&) const override {
    return -std::numeric_limits<double>::infinity();
  }
};

Dataset empty_data(long long j = 1) {
  Dataset data;
  data.clusters.resize(j);
  for (auto& cl : data.clusters) cl.y = Eigen::VectorXd::Zero(1);
  return data;
}

std::vector<double> pooled_draws(const ChainSet& set, int param) {
  std::vector<double> out;
  for (const auto& chain : set.chains)
    for (Eigen::Index s = 0; s < chain.unconstrained.rows(); ++s)
      out.push_back(chain.unconstrained(s, param));
  return out;
}

}  // namespace

TEST_CASE("standard normal target: moments over 20 seeds") {
  const GaussianTargetModel model(Eigen::VectorXd::Zero(1),
                                  Eigen::MatrixXd::Identity(1, 1));
  const Dataset data = empty_data();

  std::vector<double> means, vars;
  for (int seed = 0; seed < 20; ++seed) {
    SamplerConfig config;
    config.chains = 2;
    config.warmup = 500;
    config.iters = 800;
    config.seed = 1000 + seed;
    const ChainSet set = sample(model, data, config);
    const auto draws = pooled_draws(set, 0);
    means.push_back(sample_mean(draws));
    vars.push_back(sample_variance(draws));
    for (const auto& chain : set.chains) {
      CHECK(chain.acceptance_rate > 0.05);
      CHECK(chain.acceptance_rate < 0.95);
    }
  }
  const double grand_mean = sample_mean(means);
  const double mcse = std::sqrt(sample_variance(means) / means.size());
  CHECK(std::abs(grand_mean) <= 3.0 * mcse + 1e-12);
  CHECK(sample_mean(vars) == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("conjugate normal-mean posterior matches the closed form") {
  const double obs_sd = 1.5, prior_mean = -1.0, prior_sd = 2.0;
  const NormalMeanModel model(obs_sd, prior_mean, prior_sd);

  Dataset data;
  data.clusters.resize(40);
  std::mt19937 gen(77);
  std::normal_distribution<double> norm(2.0, obs_sd);
  double y_sum = 0.0;
  for (auto& cl : data.clusters) {
    cl.y = Eigen::VectorXd::Constant(1, norm(gen));
    y_sum += cl.y[0];
  }
  const double n = static_cast<double>(data.size());
  const double prec = n / (obs_sd * obs_sd) + 1.0 / (prior_sd * prior_sd);
  const double post_var = 1.0 / prec;
  const double post_mean =
      post_var * (y_sum / (obs_sd * obs_sd) + prior_mean / (prior_sd * prior_sd));

  SamplerConfig config;
  config.chains = 4;
  config.warmup = 800;
  config.iters = 2000;
  config.seed = 31;
  const ChainSet set = sample(model, data, config);
  const auto draws = pooled_draws(set, 0);
  const double est_mean = sample_mean(draws);
  const double est_var = sample_variance(draws);
  // loose MC bounds: RWM draws are autocorrelated
  CHECK(std::abs(est_mean - post_mean) < 6.0 * std::sqrt(post_var / 400.0));
  CHECK(est_var == doctest::Approx(post_var).epsilon(0.15));
}

TEST_CASE("2d correlated target: detailed-balance smoke test") {
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.8, 0.8, 1.0;
  Eigen::VectorXd mean(2);
  mean << 3.0, -2.0;
  const GaussianTargetModel model(mean, cov);
  const Dataset data = empty_data();

  SamplerConfig config;
  config.chains = 4;
  config.warmup = 1000;
  config.iters = 4000;
  config.seed = 9;
  const ChainSet set = sample(model, data, config);
  const auto x = pooled_draws(set, 0);
  const auto y = pooled_draws(set, 1);
  CHECK(sample_mean(x) == doctest::Approx(3.0).epsilon(0.05));
  CHECK(sample_mean(y) == doctest::Approx(-2.0).epsilon(0.05));
  CHECK(sample_variance(x) == doctest::Approx(1.0).epsilon(0.15));
  CHECK(sample_variance(y) == doctest::Approx(1.0).epsilon(0.15));
  double cross = 0.0;
  const double mx = sample_mean(x), my = sample_mean(y);
  for (std::size_t i = 0; i < x.size(); ++i) cross += (x[i] - mx) * (y[i] - my);
  cross /= static_cast<double>(x.size() - 1);
  CHECK(cross / std::sqrt(sample_variance(x) * sample_variance(y)) ==
        doctest::Approx(0.8).epsilon(0.08));
}

TEST_CASE("identical config and seed give identical chains") {
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, -0.3, -0.3, 2.0;
  const GaussianTargetModel model(Eigen::VectorXd::Zero(2), cov);
  const Dataset data = empty_data();

  SamplerConfig config;
  config.chains = 3;
  config.warmup = 300;
  config.iters = 200;
  config.seed = 555;
  const ChainSet a = sample(model, data, config);
  const ChainSet b = sample(model, data, config);
  REQUIRE(a.chains.size() == b.chains.size());
  for (std::size_t c = 0; c < a.chains.size(); ++c) {
    CHECK(a.chains[c].unconstrained == b.chains[c].unconstrained);
    CHECK(a.chains[c].log_posterior == b.chains[c].log_posterior);
    CHECK(a.chains[c].acceptance_rate == b.chains[c].acceptance_rate);
  }
}

TEST_CASE("proposal adaptation freezes at the end of warmup") {
  const GaussianTargetModel model(Eigen::VectorXd::Zero(2),
                                  Eigen::MatrixXd::Identity(2, 2));
  const Dataset data = empty_data();

  SamplerConfig short_run;
  short_run.chains = 1;
  short_run.warmup = 400;
  short_run.iters = 50;
  short_run.seed = 77;
  SamplerConfig long_run = short_run;
  long_run.iters = 1500;

  const ChainSet a = sample(model, data, short_run);
  const ChainSet b = sample(model, data, long_run);
  REQUIRE(a.chains[0].proposal.size() == b.chains[0].proposal.size());
  for (std::size_t i = 0; i < a.chains[0].proposal.size(); ++i) {
    CHECK(a.chains[0].proposal[i].scale == b.chains[0].proposal[i].scale);
    CHECK(a.chains[0].proposal[i].cov_cholesky ==
          b.chains[0].proposal[i].cov_cholesky);
  }
}

TEST_CASE("initialization failure is reported") {
  const HopelessModel model;
  const Dataset data = empty_data();
  SamplerConfig config;
  config.chains = 1;
  config.warmup = 10;
  config.iters = 10;
  CHECK_THROWS_AS(sample(model, data, config), NumericError);
}

TEST_CASE("pointwise draws match the model and cached totals") {
  const FactorModel model(6);
  FaCondition cond;
  cond.c = 0.6;
  cond.sigma2 = 1.0;
  cond.n_clusters = 40;
  cond.master_seed = 3;
  const Dataset data = generate_fa(cond);

  SamplerConfig config;
  config.chains = 2;
  config.warmup = 200;
  config.iters = 60;
  config.seed = 12;
  const ChainSet set = sample(model, data, config);
  const PointwiseLogLik ll = pointwise_loglik_draws(model, data, set);
  CHECK(ll.draws() == set.total_draws());
  CHECK(ll.clusters() == data.size());
  REQUIRE(ll.chain_index().size() == static_cast<std::size_t>(ll.draws()));

  // row s equals the model evaluated at draw s (definition)
  const Eigen::VectorXd row0 = model.pointwise_loglik_constrained(
      data, set.chains[0].constrained.row(0).transpose());
  CHECK((ll.values().row(0).transpose() - row0).cwiseAbs().maxCoeff() < 1e-14);

  // deviance of the matrix equals -2 * cached per-draw totals
  const DevianceDraws dev = deviance_from_pointwise(ll);
  long long s = 0;
  for (const auto& chain : set.chains)
    for (Eigen::Index i = 0; i < chain.log_lik_total.size(); ++i, ++s) {
      const double expected = -2.0 * chain.log_lik_total[i];
      CHECK(std::abs(dev.values[s] - expected) /
                std::max(1.0, std::abs(expected)) <
            1e-9);
    }

  // chain-major ordering
  CHECK(ll.chain_index().front() == 0);
  CHECK(ll.chain_index().back() == 1);
}

TEST_CASE("chain permutation leaves criteria unchanged") {
  const FactorModel model(6);
  FaCondition cond;
  cond.c = 0.3;
  cond.sigma2 = 0.5;
  cond.n_clusters = 30;
  cond.master_seed = 4;
  const Dataset data = generate_fa(cond);

  SamplerConfig config;
  config.chains = 3;
  config.warmup = 200;
  config.iters = 50;
  config.seed = 21;
  const ChainSet set = sample(model, data, config);

  ChainSet permuted = set;
  std::swap(permuted.chains[0], permuted.chains[2]);
  const auto a = compute_all(pointwise_loglik_draws(model, data, set));
  const auto b = compute_all(pointwise_loglik_draws(model, data, permuted));
  CHECK(a.waic == doctest::Approx(b.waic).epsilon(1e-12));
  CHECK(a.dic_i == doctest::Approx(b.dic_i).epsilon(1e-12));
  CHECK(a.p_v == doctest::Approx(b.p_v).epsilon(1e-12));
}

TEST_CASE("fa chains can settle in opposite loading-sign modes") {
  const FactorModel model(6);
  int switching = 0;
  for (long long rep = 0; rep < 3; ++rep) {
    FaCondition cond;
    cond.c = 0.9;
    cond.sigma2 = 1.0;
    cond.n_clusters = 100;
    cond.replicate = rep;
    cond.master_seed = 17;
    const Dataset data = generate_fa(cond);
    SamplerConfig config;
    config.chains = 4;
    config.warmup = 500;
    config.iters = 300;
    config.seed = 170 + rep;
    const ChainSet set = sample(model, data, config);
    const SwitchReport sw = detect_sign_switch(set, model);
    if (!sw.indeterminate && sw.sign_switch) ++switching;
  }
  CHECK(switching >= 1);
}
