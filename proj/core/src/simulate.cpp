// Apache License, Version 2.0, refer to LICENSE.txt
#include "infocrit/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "infocrit/errors.hpp"
#include "infocrit/rng.hpp"

namespace infocrit {

std::string FaCondition::label() const {
  std::ostringstream os;
  os << "c" << c << "_s" << sigma2 << "_J" << n_clusters;
  return os.str();
}

std::array<double, FaCondition::kIndicators> FaCondition::loadings() const {
  std::array<double, kIndicators> base{0.9, 0.8, 0.7, 0.6, 0.5, 0.4};
  for (double& v : base) v *= c;
  return base;
}

const std::vector<std::string>& GmmCondition::all_names() {
  static const std::vector<std::string> names{"ug1", "ug2", "us1", "us2",
                                              "bg1", "bg2", "bs1", "bs2"};
  return names;
}

bool GmmCondition::valid_name(const std::string& name) {
  const auto& names = all_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

double GmmCondition::pi1() const {
  if (!valid_name(name)) throw UsageError("GmmCondition: unknown condition " + name);
  return name[0] == 'b' ? 0.5 : 0.2;
}

long long GmmCondition::n_clusters() const {
  if (!valid_name(name)) throw UsageError("GmmCondition: unknown condition " + name);
  return name[0] == 'b' ? 250 : 400;
}

std::array<double, 2> GmmCondition::beta0() const {
  if (!valid_name(name)) throw UsageError("GmmCondition: unknown condition " + name);
  return name[1] == 'g' ? std::array<double, 2>{6.0, 10.0}
                        : std::array<double, 2>{6.0, 8.0};
}

std::array<double, 2> GmmCondition::beta1() const {
  if (!valid_name(name)) throw UsageError("GmmCondition: unknown condition " + name);
  return name[1] == 'g' ? std::array<double, 2>{0.3, 2.7}
                        : std::array<double, 2>{0.3, 1.5};
}

double GmmCondition::sigma_e() const {
  if (!valid_name(name)) throw UsageError("GmmCondition: unknown condition " + name);
  return name[2] == '1' ? 1.0 : 2.0;
}

Dataset generate_fa(const FaCondition& cond) {
  if (cond.n_clusters < 1) throw UsageError("generate_fa: J must be positive");
  const std::uint64_t seed =
      derive_seed(cond.master_seed, "fa:" + cond.label(),
                  static_cast<std::uint64_t>(cond.replicate));
  RandomStream rng(seed);

  const auto lambda = cond.loadings();
  const double sd = std::sqrt(cond.sigma2);
  const int n = FaCondition::kIndicators;

  Dataset data;
  data.clusters.resize(cond.n_clusters);
  for (auto& cl : data.clusters) {
    const double eta = rng.normal();
    cl.y.resize(n);
    for (int i = 0; i < n; ++i) cl.y[i] = lambda[i] * eta + sd * rng.normal();
  }

  data.meta.design = "fa";
  data.meta.condition = cond.label();
  data.meta.replicate = cond.replicate;
  data.meta.seed = seed;
  data.meta.attrs = {{"c", cond.c},
                     {"sigma2", cond.sigma2},
                     {"J", static_cast<double>(cond.n_clusters)}};
  return data;
}

Dataset generate_gmm(const GmmCondition& cond) {
  const std::uint64_t seed =
      derive_seed(cond.master_seed, "gmm:" + cond.name,
                  static_cast<std::uint64_t>(cond.replicate));
  RandomStream rng(seed);

  const double pi1 = cond.pi1();
  const auto b0 = cond.beta0();
  const auto b1 = cond.beta1();
  const double se = cond.sigma_e();
  const std::array<std::array<double, 3>, 2> psi{GmmCondition::kPsi1,
                                                 GmmCondition::kPsi2};
  const int n = GmmCondition::kOccasions;

  Dataset data;
  data.clusters.resize(cond.n_clusters());
  long long n_class1 = 0;
  for (auto& cl : data.clusters) {
    const int k = (rng.uniform() < pi1) ? 0 : 1;
    n_class1 += (k == 0);
    const double s1 = psi[k][0], s2 = psi[k][1], rho = psi[k][2];
    // bivariate normal via Cholesky of [[s1^2, rho s1 s2], [., s2^2]]
    const double z0 = rng.normal(), z1 = rng.normal();
    const double eta0 = s1 * z0;
    const double eta1 = s2 * (rho * z0 + std::sqrt(1.0 - rho * rho) * z1);
    cl.y.resize(n);
    cl.t.resize(n);
    for (int i = 0; i < n; ++i) {
      const double t = static_cast<double>(i);
      cl.t[i] = t;
      cl.y[i] = b0[k] + b1[k] * t + eta0 + eta1 * t + se * rng.normal();
    }
  }

  data.meta.design = "gmm";
  data.meta.condition = cond.name;
  data.meta.replicate = cond.replicate;
  data.meta.seed = seed;
  data.meta.attrs = {{"pi1", pi1},
                     {"J", static_cast<double>(cond.n_clusters())},
                     {"sigma_e", se},
                     {"beta0_1", b0[0]},
                     {"beta0_2", b0[1]},
                     {"beta1_1", b1[0]},
                     {"beta1_2", b1[1]},
                     {"n_class1", static_cast<double>(n_class1)}};
  return data;
}

}  // namespace infocrit
