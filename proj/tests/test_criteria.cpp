// Apache License, Version 2.0, refer to LICENSE.txt
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "infocrit/criteria.hpp"
#include "infocrit/errors.hpp"
#include "infocrit/numerics.hpp"

using namespace infocrit;

namespace {

PointwiseLogLik make_ll(std::initializer_list<std::initializer_list<double>> rows) {
  const long long s = static_cast<long long>(rows.size());
  const long long j = static_cast<long long>(rows.begin()->size());
  Eigen::MatrixXd m(s, j);
  long long r = 0;
  for (const auto& row : rows) {
    long long c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return PointwiseLogLik(m);
}

// direct-formula oracle for a full report, long double arithmetic
struct OracleReport {
  long double mean_deviance = 0, p_v = 0, dic_i = 0, lppd = 0, p_waic = 0,
              waic = 0;
};

OracleReport oracle_report(const Eigen::MatrixXd& ll) {
  const long long s = ll.rows(), j = ll.cols();
  OracleReport o;
  std::vector<long double> dev(s, 0.0L);
  for (long long r = 0; r < s; ++r) {
    long double sum = 0.0L;
    for (long long c = 0; c < j; ++c) sum += ll(r, c);
    dev[r] = -2.0L * sum;
    o.mean_deviance += dev[r];
  }
  o.mean_deviance /= s;
  long double ss = 0.0L;
  for (long long r = 0; r < s; ++r) {
    const long double d = dev[r] - o.mean_deviance;
    ss += d * d;
  }
  o.p_v = 0.5L * ss / (s - 1);
  o.dic_i = o.mean_deviance + o.p_v;
  for (long long c = 0; c < j; ++c) {
    long double sum_exp = 0.0L, mean = 0.0L;
    for (long long r = 0; r < s; ++r) {
      sum_exp += expl(static_cast<long double>(ll(r, c)));
      mean += ll(r, c);
    }
    mean /= s;
    long double var = 0.0L;
    for (long long r = 0; r < s; ++r) {
      const long double d = ll(r, c) - mean;
      var += d * d;
    }
    var /= (s - 1);
    o.lppd += logl(sum_exp / s);
    o.p_waic += var;
  }
  o.waic = -2.0L * o.lppd + 2.0L * o.p_waic;
  return o;
}

}  // namespace

TEST_CASE("pointwise matrix validation") {
  Eigen::MatrixXd one(1, 1);
  one << -3.0;
  CHECK_NOTHROW(PointwiseLogLik{one});

  Eigen::MatrixXd with_nan(2, 1);
  with_nan << 0.0, std::nan("");
  CHECK_THROWS_AS(PointwiseLogLik{with_nan}, NumericError);

  Eigen::MatrixXd ok(4, 2);
  ok.setZero();
  CHECK_THROWS_AS(PointwiseLogLik(ok, {0, 0, 0, 1}), UsageError);  // chain 1 has 1 draw
  CHECK_NOTHROW(PointwiseLogLik(ok, {0, 0, 1, 1}));
}

TEST_CASE("deviance from pointwise") {
  const auto single = deviance_from_pointwise(make_ll({{-3.0}}));
  REQUIRE(single.values.size() == 1);
  CHECK(single.values[0] == doctest::Approx(6.0));

  const auto two = deviance_from_pointwise(make_ll({{-1.0, -2.0}, {-3.0, -4.0}}));
  CHECK(two.values[0] == doctest::Approx(6.0));
  CHECK(two.values[1] == doctest::Approx(14.0));
}

TEST_CASE("deviance linearity: mean equals -2 * total / S") {
  std::mt19937 gen(3);
  std::normal_distribution<double> norm(-2.0, 1.0);
  Eigen::MatrixXd m(13, 7);
  for (long long r = 0; r < m.rows(); ++r)
    for (long long c = 0; c < m.cols(); ++c) m(r, c) = norm(gen);
  const auto dev = deviance_from_pointwise(PointwiseLogLik(m));
  CHECK(sample_mean(dev.values) ==
        doctest::Approx(-2.0 * m.sum() / m.rows()).epsilon(1e-12));
}

TEST_CASE("p_dic subtraction and sign") {
  CHECK(p_dic(100.0, 90.0) == doctest::Approx(10.0));
  CHECK(p_dic(100.0, 110.0) == doctest::Approx(-10.0));
  CHECK_THROWS_AS(p_dic(std::nan(""), 1.0), UsageError);
  CHECK_THROWS_AS(p_dic(1.0, std::numeric_limits<double>::infinity()), UsageError);
}

TEST_CASE("p_v closed forms") {
  CHECK(p_v(DevianceDraws{{7.0, 7.0, 7.0}}) == doctest::Approx(0.0));
  CHECK(p_v(DevianceDraws{{10.0, 14.0}}) == doctest::Approx(4.0));
  CHECK_THROWS_AS(p_v(DevianceDraws{{1.0}}), UsageError);
}

TEST_CASE("waic degenerate posterior") {
  const double c = -1.7;
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(10, 4, c);
  const auto w = waic(PointwiseLogLik(m));
  CHECK(w.p_waic == doctest::Approx(0.0));
  CHECK(w.lppd == doctest::Approx(4 * c).epsilon(1e-13));
  CHECK(w.waic == doctest::Approx(-2.0 * 4 * c).epsilon(1e-13));
  CHECK_FALSE(w.unreliable);
}

TEST_CASE("waic against direct-summation oracle") {
  const auto ll = make_ll({{-1.1, -0.4}, {-2.3, -0.9}, {-0.7, -1.6}});
  const auto w = waic(ll);
  const auto o = oracle_report(ll.values());
  CHECK(w.lppd == doctest::Approx(static_cast<double>(o.lppd)).epsilon(1e-12));
  CHECK(w.p_waic == doctest::Approx(static_cast<double>(o.p_waic)).epsilon(1e-12));
  CHECK(w.waic == doctest::Approx(static_cast<double>(o.waic)).epsilon(1e-12));
}

TEST_CASE("waic reliability flag") {
  // one cluster with log-lik variance far above 0.4
  const auto w = waic(make_ll({{-1.0, 0.0}, {-5.0, 0.1}, {-1.2, -0.1}}));
  CHECK(w.unreliable);
  CHECK(w.per_cluster[0].var_lj > 0.4);
  CHECK(w.per_cluster[1].var_lj < 0.4);
}

TEST_CASE("dic family identities") {
  // two draws with mean 100 and variance 18 -> p_v = 9
  const DevianceDraws dev{{97.0, 103.0}};
  const auto fam = dic_family(dev, 95.0);
  CHECK(fam.mean_deviance == doctest::Approx(100.0));
  CHECK(fam.p_v == doctest::Approx(9.0));
  CHECK(fam.dic_i == doctest::Approx(109.0));
  CHECK(fam.p_dic.value() == doctest::Approx(5.0));
  CHECK(fam.dic.value() == doctest::Approx(105.0));
  CHECK(fam.dic_p.value() == doctest::Approx(113.0));
  // (dic_p - dic_i) = (p_v - p_dic) = (dic_i - dic)
  CHECK(fam.dic_p.value() - fam.dic_i == doctest::Approx(4.0));
  CHECK(fam.p_v - fam.p_dic.value() == doctest::Approx(4.0));
  CHECK(fam.dic_i - fam.dic.value() == doctest::Approx(4.0));
  CHECK(fam.flags.count(Flag::PDIC_NEGATIVE) == 0);
}

TEST_CASE("dic family optionality") {
  const DevianceDraws dev{{97.0, 103.0}};
  const auto fam = dic_family(dev);
  CHECK(fam.dic_i == doctest::Approx(109.0));
  CHECK_FALSE(fam.dic.has_value());
  CHECK_FALSE(fam.dic_p.has_value());
  CHECK_FALSE(fam.p_dic.has_value());
  CHECK(fam.flags.count(Flag::PLUGIN_MISSING) == 1);
}

TEST_CASE("dic family constant deviance") {
  const double c = 42.0;
  const auto fam = dic_family(DevianceDraws{{c, c, c, c}}, c);
  CHECK(fam.dic.value() == doctest::Approx(c));
  CHECK(fam.dic_p.value() == doctest::Approx(c));
  CHECK(fam.dic_i == doctest::Approx(c));
}

TEST_CASE("negative p_dic raises flag") {
  const auto fam = dic_family(DevianceDraws{{99.0, 101.0}}, 110.0);
  CHECK(fam.p_dic.value() == doctest::Approx(-10.0));
  CHECK(fam.flags.count(Flag::PDIC_NEGATIVE) == 1);
}

TEST_CASE("lppd decomposition closed forms") {
  // constant column: all cumulants beyond the mean vanish
  Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(6, 1, -2.2);
  const auto dec0 = lppd_decomposition(PointwiseLogLik(constant));
  CHECK(dec0.per_cluster[0].remainder == doctest::Approx(0.0).epsilon(1e-12));

  // two draws [a, b]: R = log((e^a + e^b)/2) - (a+b)/2 - (a-b)^2 / 4,
  // where the last term is half the (n-1)-denominator sample variance
  const double a = -0.3, b = -1.9;
  const auto dec = lppd_decomposition(make_ll({{a}, {b}}));
  const double expected =
      std::log((std::exp(a) + std::exp(b)) / 2.0) - (a + b) / 2.0 -
      (a - b) * (a - b) / 4.0;
  CHECK(dec.per_cluster[0].remainder == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("lppd decomposition reconstruction identity") {
  std::mt19937 gen(17);
  std::normal_distribution<double> norm(-1.0, 0.8);
  Eigen::MatrixXd m(40, 6);
  for (long long r = 0; r < m.rows(); ++r)
    for (long long c = 0; c < m.cols(); ++c) m(r, c) = norm(gen);
  const PointwiseLogLik ll(m);
  const auto dec = lppd_decomposition(ll);
  const auto w = waic(ll);
  for (long long c = 0; c < m.cols(); ++c) {
    const auto& pc = dec.per_cluster[c];
    CHECK(std::abs(w.per_cluster[c].lppd_j -
                   (pc.mean_lj + pc.half_var_lj + pc.remainder)) < 1e-10);
  }
  // waic = E[D] + p_waic - 2 sum_j R_j
  const auto dev = deviance_from_pointwise(ll);
  const double mean_dev = sample_mean(dev.values);
  CHECK(w.waic == doctest::Approx(mean_dev + w.p_waic - 2.0 * dec.total_remainder)
                      .epsilon(1e-8));
}

TEST_CASE("compute_all matches the direct-formula oracle") {
  std::mt19937 gen(23);
  std::normal_distribution<double> norm(-1.5, 0.7);
  Eigen::MatrixXd m(4, 3);
  for (long long r = 0; r < m.rows(); ++r)
    for (long long c = 0; c < m.cols(); ++c) m(r, c) = norm(gen);
  const PointwiseLogLik ll(m);

  const auto report = compute_all(ll, 11.0);
  const auto o = oracle_report(m);
  CHECK(report.mean_deviance ==
        doctest::Approx(static_cast<double>(o.mean_deviance)).epsilon(1e-12));
  CHECK(report.p_v == doctest::Approx(static_cast<double>(o.p_v)).epsilon(1e-12));
  CHECK(report.dic_i ==
        doctest::Approx(static_cast<double>(o.dic_i)).epsilon(1e-12));
  CHECK(report.waic == doctest::Approx(static_cast<double>(o.waic)).epsilon(1e-12));
  CHECK(report.lppd == doctest::Approx(static_cast<double>(o.lppd)).epsilon(1e-12));
  CHECK(report.p_dic.value() ==
        doctest::Approx(static_cast<double>(o.mean_deviance) - 11.0).epsilon(1e-12));
  // appendix semantics: DIC_i = E_D + 0.5 var(deviance draws)
  const auto dev = deviance_from_pointwise(ll);
  CHECK(report.dic_i == doctest::Approx(sample_mean(dev.values) +
                                        0.5 * sample_variance(dev.values)));
}

TEST_CASE("compute_all invariances") {
  std::mt19937 gen(31);
  std::normal_distribution<double> norm(-2.0, 1.0);
  Eigen::MatrixXd m(30, 5);
  for (long long r = 0; r < m.rows(); ++r)
    for (long long c = 0; c < m.cols(); ++c) m(r, c) = norm(gen);

  const auto base = compute_all(PointwiseLogLik(m));

  // permuting draw rows leaves every criterion unchanged
  std::vector<int> perm(m.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), gen);
  Eigen::MatrixXd rows_permuted(m.rows(), m.cols());
  for (long long r = 0; r < m.rows(); ++r) rows_permuted.row(r) = m.row(perm[r]);
  const auto permuted = compute_all(PointwiseLogLik(rows_permuted));
  CHECK(permuted.waic == doctest::Approx(base.waic).epsilon(1e-12));
  CHECK(permuted.dic_i == doctest::Approx(base.dic_i).epsilon(1e-12));
  CHECK(permuted.p_v == doctest::Approx(base.p_v).epsilon(1e-12));
  CHECK(permuted.p_waic == doctest::Approx(base.p_waic).epsilon(1e-12));
  CHECK(permuted.loo.value() == doctest::Approx(base.loo.value()).epsilon(1e-12));

  // permuting cluster columns leaves the totals unchanged
  Eigen::MatrixXd cols_permuted(m.rows(), m.cols());
  const std::vector<int> cperm{3, 0, 4, 1, 2};
  for (long long c = 0; c < m.cols(); ++c)
    cols_permuted.col(c) = m.col(cperm[c]);
  const auto cpermuted = compute_all(PointwiseLogLik(cols_permuted));
  CHECK(cpermuted.waic == doctest::Approx(base.waic).epsilon(1e-12));
  CHECK(cpermuted.lppd == doctest::Approx(base.lppd).epsilon(1e-12));
  CHECK(cpermuted.p_waic == doctest::Approx(base.p_waic).epsilon(1e-12));
  CHECK(cpermuted.dic_i == doctest::Approx(base.dic_i).epsilon(1e-12));
  CHECK(cpermuted.loo.value() == doctest::Approx(base.loo.value()).epsilon(1e-12));

  // equal matrices produce equal reports regardless of origin
  const auto again = compute_all(PointwiseLogLik(m));
  CHECK(again.waic == base.waic);
  CHECK(again.dic_i == base.dic_i);
  CHECK(again.loo.value() == base.loo.value());
}

TEST_CASE("compute_all difference identity under plugin") {
  std::mt19937 gen(41);
  std::normal_distribution<double> norm(-3.0, 1.3);
  Eigen::MatrixXd m(50, 4);
  for (long long r = 0; r < m.rows(); ++r)
    for (long long c = 0; c < m.cols(); ++c) m(r, c) = norm(gen);
  for (double plugin : {5.0, 30.0, 300.0}) {
    const auto report = compute_all(PointwiseLogLik(m), plugin);
    const double lhs = report.dic_p.value() - report.dic_i;
    const double mid = report.p_v - report.p_dic.value();
    const double rhs = report.dic_i - report.dic.value();
    const double scale = std::max({1.0, std::abs(lhs), std::abs(mid)});
    CHECK(std::abs(lhs - mid) / scale < 1e-9);
    CHECK(std::abs(mid - rhs) / scale < 1e-9);
  }
}

TEST_CASE("compute_all requires two draws") {
  Eigen::MatrixXd one(1, 2);
  one << -1.0, -2.0;
  CHECK_THROWS_AS(compute_all(PointwiseLogLik(one)), UsageError);
}
