#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mismed/model.hpp"
#include "mismed/sim.hpp"

namespace fixtures {

// Latent-class data drawn with std::mt19937_64, independent of the harness generator.
struct Drawn {
  mismed::MediationDataset data;
  std::vector<int> true_m;
};

inline mismed::ParameterSet default_params(mismed::Family family, bool interaction, int p = 1,
                                           int q = 1) {
  mismed::ParameterSet ps;
  ps.beta = Eigen::VectorXd::Zero(2 + p);
  ps.beta[0] = 0.3;
  ps.beta[1] = -1.0;
  for (int k = 0; k < p; ++k) ps.beta[2 + k] = 0.4 / (k + 1);
  ps.gamma = Eigen::MatrixXd::Zero(2, 1 + q);
  ps.gamma(0, 0) = 1.8;
  ps.gamma(1, 0) = -1.5;
  for (int k = 0; k < q; ++k) {
    ps.gamma(0, 1 + k) = 0.6;
    ps.gamma(1, 1 + k) = -0.7;
  }
  ps.interaction = interaction;
  ps.theta = Eigen::VectorXd::Zero(3 + p + (interaction ? 1 : 0));
  ps.theta[0] = family == mismed::Family::Poisson ? 0.2 : 0.5;
  ps.theta[1] = 0.8;
  for (int k = 0; k < p; ++k) ps.theta[2 + k] = -0.3;
  ps.theta[2 + p] = -1.2;
  if (interaction) ps.theta[3 + p] = 0.4;
  if (family == mismed::Family::Normal) ps.sigma2 = 1.0;
  return ps;
}

inline Drawn draw(const mismed::ParameterSet& ps, mismed::Family family, Eigen::Index n,
                  std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::gamma_distribution<double> gam(1.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Eigen::Index p = ps.beta.size() - 2;
  const Eigen::Index q = ps.gamma.cols() - 1;
  Eigen::VectorXd x(n), y(n);
  Eigen::MatrixXd c(n, p), z(n, q);
  std::vector<int> ms(static_cast<std::size_t>(n)), tm(static_cast<std::size_t>(n));
  auto logistic = [](double t) { return 1.0 / (1.0 + std::exp(-t)); };
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = normal(gen);
    for (Eigen::Index k = 0; k < p; ++k) c(i, k) = gam(gen);
    for (Eigen::Index k = 0; k < q; ++k) z(i, k) = gam(gen);
    double em = ps.beta[0] + ps.beta[1] * x[i];
    for (Eigen::Index k = 0; k < p; ++k) em += ps.beta[2 + k] * c(i, k);
    const bool m1 = unif(gen) < logistic(em);
    const int j = m1 ? 0 : 1;
    double eo = ps.gamma(j, 0);
    for (Eigen::Index k = 0; k < q; ++k) eo += ps.gamma(j, 1 + k) * z(i, k);
    const bool o1 = (j == 1 && ps.perfect_specificity) ? false : unif(gen) < logistic(eo);
    tm[static_cast<std::size_t>(i)] = m1 ? 1 : 2;
    ms[static_cast<std::size_t>(i)] = o1 ? 1 : 2;
    double ey = ps.theta[0] + ps.theta[1] * x[i];
    for (Eigen::Index k = 0; k < p; ++k) ey += ps.theta[2 + k] * c(i, k);
    const double mi = m1 ? 1.0 : 0.0;
    ey += ps.theta[2 + p] * mi;
    if (ps.interaction) ey += ps.theta[3 + p] * mi * x[i];
    switch (family) {
      case mismed::Family::Normal:
        y[i] = ey + std::sqrt(ps.sigma2.value_or(1.0)) * normal(gen);
        break;
      case mismed::Family::Bernoulli:
        y[i] = unif(gen) < logistic(ey) ? 1.0 : 0.0;
        break;
      case mismed::Family::Poisson:
        y[i] = std::poisson_distribution<int>(std::exp(ey))(gen);
        break;
    }
  }
  return {mismed::MediationDataset(x, c, z, ms, y), tm};
}

// Same data with the observed mediator replaced by the latent one.
inline mismed::MediationDataset with_mediator(const mismed::MediationDataset& d,
                                              const std::vector<int>& m) {
  return mismed::MediationDataset(d.x(), d.c(), d.z(), m, d.y(), d.labels());
}

inline Eigen::VectorXd indicator(const std::vector<int>& m) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) v[static_cast<Eigen::Index>(i)] = m[i] == 1;
  return v;
}

}  // namespace fixtures
