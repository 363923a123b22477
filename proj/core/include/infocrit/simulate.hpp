// Apache License, Version 2.0, refer to LICENSE.txt
#ifndef INFOCRIT_SIMULATE_HPP
#define INFOCRIT_SIMULATE_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "infocrit/models.hpp"

namespace infocrit {

// One cell of the one-factor design: loadings c * (0.9,...,0.4),
// homogeneous noise sigma2, J clusters, zero intercepts.
struct FaCondition {
  double c = 0.9;
  double sigma2 = 1.0;
  long long n_clusters = 400;  // J
  long long replicate = 0;
  std::uint64_t master_seed = 0;

  static constexpr int kIndicators = 6;
  std::string label() const;
  std::array<double, kIndicators> loadings() const;
};

// One cell of the growth-mixture design, identified by its two-class
// generating configuration. Name encodes balance (b/u), separation (g/s)
// and residual noise level (1/2), e.g. "ug1".
struct GmmCondition {
  std::string name = "bg1";
  long long replicate = 0;
  std::uint64_t master_seed = 0;

  double pi1() const;          // class-1 weight
  long long n_clusters() const;  // J: 250 balanced, 400 unbalanced
  std::array<double, 2> beta0() const;
  std::array<double, 2> beta1() const;
  double sigma_e() const;
  // class covariances (sd1, sd2, rho); fixed across conditions
  static constexpr std::array<double, 3> kPsi1{0.8, 0.6, 0.2};
  static constexpr std::array<double, 3> kPsi2{0.5, 0.3, 0.8};
  static constexpr int kOccasions = 5;

  static const std::vector<std::string>& all_names();
  static bool valid_name(const std::string& name);
};

Dataset generate_fa(const FaCondition& cond);
Dataset generate_gmm(const GmmCondition& cond);

}  // namespace infocrit

#endif
