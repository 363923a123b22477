// Apache License, Version 2.0, refer to LICENSE.txt
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "infocrit/diagnostics.hpp"
#include "infocrit/errors.hpp"
#include "infocrit/models.hpp"
#include "infocrit/numerics.hpp"

using namespace infocrit;

namespace {

Eigen::VectorXd iid_normal(long long n, double mean, double sd, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> norm(mean, sd);
  Eigen::VectorXd v(n);
  for (long long i = 0; i < n; ++i) v[i] = norm(gen);
  return v;
}

// direct formula oracle, no shared code with the implementation
double rhat_oracle(const std::vector<Eigen::VectorXd>& chains) {
  const double m = static_cast<double>(chains.size());
  const double n = static_cast<double>(chains.front().size());
  double w = 0.0, grand = 0.0;
  std::vector<double> means;
  for (const auto& c : chains) {
    const double mean = c.mean();
    means.push_back(mean);
    grand += mean / m;
    w += (c.array() - mean).square().sum() / (n - 1.0) / m;
  }
  double b = 0.0;
  for (double mean : means) b += (mean - grand) * (mean - grand);
  b *= n / (m - 1.0);
  return std::sqrt(((n - 1.0) / n * w + b / n) / w);
}

}  // namespace

TEST_CASE("classic rhat on constant and identical chains") {
  const Eigen::VectorXd constant = Eigen::VectorXd::Constant(100, 3.0);
  CHECK(classic_rhat({constant, constant}) == 1.0);  // W = B = 0

  const Eigen::VectorXd draws = iid_normal(1000, 0.0, 1.0, 1);
  // identical non-constant chains: B = 0, statistic is sqrt((n-1)/n)
  CHECK(classic_rhat({draws, draws}) ==
        doctest::Approx(std::sqrt(999.0 / 1000.0)).epsilon(1e-12));
  CHECK(std::abs(classic_rhat({draws, draws}) - 1.0) < 1e-3);
}

TEST_CASE("classic rhat flags a shifted chain") {
  const Eigen::VectorXd a = iid_normal(1000, 0.0, 1.0, 2);
  const Eigen::VectorXd b = iid_normal(1000, 100.0, 1.0, 3);
  const double got = classic_rhat({a, b});
  CHECK(got == doctest::Approx(rhat_oracle({a, b})).epsilon(1e-12));
  CHECK(got > 10.0);
}

TEST_CASE("classic rhat degenerate branches") {
  const Eigen::VectorXd c1 = Eigen::VectorXd::Constant(50, 1.0);
  const Eigen::VectorXd c2 = Eigen::VectorXd::Constant(50, 2.0);
  CHECK(std::isinf(classic_rhat({c1, c2})));  // W = 0, B > 0
  CHECK_THROWS_AS(classic_rhat({c1}), UsageError);
  CHECK_THROWS_AS(
      classic_rhat({Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)}),
      UsageError);
}

TEST_CASE("classic rhat is invariant to chain order") {
  const Eigen::VectorXd a = iid_normal(500, 0.0, 1.0, 4);
  const Eigen::VectorXd b = iid_normal(500, 0.5, 1.2, 5);
  const Eigen::VectorXd c = iid_normal(500, -0.2, 0.9, 6);
  CHECK(classic_rhat({a, b, c}) == doctest::Approx(classic_rhat({c, a, b})));
}

TEST_CASE("rank normalized split rhat on identical chains") {
  const Eigen::VectorXd constant = Eigen::VectorXd::Constant(100, 2.5);
  CHECK(rank_normalized_split_rhat({constant, constant}) == 1.0);

  const Eigen::VectorXd draws = iid_normal(2000, 0.0, 1.0, 7);
  CHECK(std::abs(rank_normalized_split_rhat({draws, draws}) - 1.0) < 2e-3);
}

TEST_CASE("rank normalized split rhat is stable under heavy tails") {
  // Cauchy draws: classic rhat is variance-dominated, the rank version is not
  std::mt19937 gen(8);
  std::cauchy_distribution<double> cauchy;
  Eigen::VectorXd a(2000), b(2000);
  for (long long i = 0; i < 2000; ++i) {
    a[i] = cauchy(gen);
    b[i] = cauchy(gen) + 3.0;  // location-shifted chain
  }
  const double classic = classic_rhat({a, b});
  const double ranked = rank_normalized_split_rhat({a, b});
  CHECK(std::isfinite(ranked));
  CHECK(ranked > 1.1);   // detects the shift
  CHECK(ranked < 10.0);  // but is not blown up by tail draws
  // tail variance swamps the between-chain shift in the classic statistic
  CHECK(classic < 1.1);
}

TEST_CASE("rank normalized split rhat is invariant to monotone transforms") {
  const Eigen::VectorXd a = iid_normal(600, 0.0, 1.0, 9);
  const Eigen::VectorXd b = iid_normal(600, 0.8, 1.0, 10);
  const double base = rank_normalized_split_rhat({a, b});
  CHECK(rank_normalized_split_rhat({a.array().exp(), b.array().exp()}) ==
        doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("split detects within-chain drift that classic rhat misses") {
  // two chains, each drifting from -2 to 2: identical between chains
  Eigen::VectorXd trend(1000);
  for (long long i = 0; i < 1000; ++i) trend[i] = -2.0 + 4.0 * i / 999.0;
  const double split_stat = rank_normalized_split_rhat({trend, trend});
  CHECK(split_stat > 1.5);
}

namespace {

ChainSet synthetic_chains(const std::vector<Eigen::MatrixXd>& constrained) {
  ChainSet set;
  for (const auto& m : constrained) {
    Chain chain;
    chain.constrained = m;
    set.chains.push_back(std::move(chain));
  }
  return set;
}

}  // namespace

TEST_CASE("rhat report covers every parameter and tracks the max") {
  std::mt19937 gen(11);
  std::normal_distribution<double> norm;
  Eigen::MatrixXd c1(200, 3), c2(200, 3);
  for (long long s = 0; s < 200; ++s)
    for (int p = 0; p < 3; ++p) {
      c1(s, p) = norm(gen);
      c2(s, p) = norm(gen) + (p == 2 ? 50.0 : 0.0);  // parameter 3 disagrees
    }
  const ChainSet set = synthetic_chains({c1, c2});
  const RhatReport report = rhat_report(set, {"a", "b", "c"});
  CHECK(report.classic_rhat.size() == 3);
  CHECK(report.rhat_max == doctest::Approx(report.classic_rhat[2]));
  CHECK(report.classic_rhat[2] > 5.0);
  CHECK(report.classic_rhat[0] < 1.1);
}

TEST_CASE("sign switch detection") {
  const FactorModel model(3);  // constrained layout: mu(3), lambda(3), sigma(3)
  auto chain_with_loadings = [&](double l1, double l2, double l3) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(50, 9);
    m.col(3).setConstant(l1);
    m.col(4).setConstant(l2);
    m.col(5).setConstant(l3);
    m.col(6).setConstant(1.0);
    m.col(7).setConstant(1.0);
    m.col(8).setConstant(1.0);
    return m;
  };

  // all chains positive
  const ChainSet same = synthetic_chains(
      {chain_with_loadings(0.9, 0.8, 0.7), chain_with_loadings(0.85, 0.8, 0.75)});
  const SwitchReport none = detect_sign_switch(same, model);
  CHECK_FALSE(none.sign_switch);
  CHECK_FALSE(none.indeterminate);
  CHECK(none.chain_signs == std::vector<int>{1, 1});

  // one chain at the mirrored mode
  const ChainSet split = synthetic_chains(
      {chain_with_loadings(0.9, 0.8, 0.7), chain_with_loadings(-0.9, -0.8, -0.7)});
  const SwitchReport flagged = detect_sign_switch(split, model);
  CHECK(flagged.sign_switch);
  CHECK(flagged.chain_signs == std::vector<int>{1, -1});

  // flipping every chain leaves the classification unchanged
  const ChainSet mirrored = synthetic_chains(
      {chain_with_loadings(-0.9, -0.8, -0.7), chain_with_loadings(0.9, 0.8, 0.7)});
  CHECK(detect_sign_switch(mirrored, model).sign_switch == flagged.sign_switch);
  const ChainSet both_neg = synthetic_chains(
      {chain_with_loadings(-0.9, -0.8, -0.7), chain_with_loadings(-0.85, -0.8, -0.75)});
  CHECK_FALSE(detect_sign_switch(both_neg, model).sign_switch);

  // near-zero loading means are indeterminate
  const ChainSet zero = synthetic_chains(
      {chain_with_loadings(1e-9, -1e-9, 1e-9), chain_with_loadings(0.9, 0.8, 0.7)});
  const SwitchReport indet = detect_sign_switch(zero, model);
  CHECK(indet.indeterminate);
}

TEST_CASE("mixed-sign loadings follow the dominant direction") {
  const FactorModel model(3);
  // small loading straddles zero in one chain; dominant direction decides
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(50, 9);
  a.col(3).setConstant(0.9);
  a.col(4).setConstant(0.5);
  a.col(5).setConstant(-0.02);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(50, 9);
  b.col(3).setConstant(0.88);
  b.col(4).setConstant(0.52);
  b.col(5).setConstant(0.03);
  const SwitchReport report =
      detect_sign_switch(synthetic_chains({a, b}), model);
  CHECK_FALSE(report.sign_switch);
}

TEST_CASE("a chain that mixed across modes is a tie, not a vote") {
  const FactorModel model(3);
  // chain a settled at the positive mode; chain b spent roughly half its
  // run in each mode, so its mean is damped toward zero
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(50, 9);
  a.col(3).setConstant(0.9);
  a.col(4).setConstant(0.8);
  a.col(5).setConstant(0.7);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(50, 9);
  b.col(3).setConstant(-0.05);
  b.col(4).setConstant(-0.04);
  b.col(5).setConstant(-0.03);
  const SwitchReport report =
      detect_sign_switch(synthetic_chains({a, b}), model);
  CHECK(report.indeterminate);
  CHECK_FALSE(report.sign_switch);
  CHECK(report.chain_signs[0] == 1);
  CHECK(report.chain_signs[1] == 0);
}
