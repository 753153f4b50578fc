#pragma once

// Reference implementations for the test suite. Nothing here calls into the
// kernels, GLM fitter, E-step or effect formulas they are used to check.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mismed/effects.hpp"
#include "mismed/family.hpp"
#include "mismed/model.hpp"

namespace mismed::oracles {

struct OracleReport {
  std::string name;
  std::vector<double> reference;
  double tolerance = 1e-8;
  bool pass = false;
  double max_abs_diff = 0.0;
};

// Elementwise |reference - actual| <= tolerance. Throws Configuration for
// tolerance <= 0 or a size mismatch.
OracleReport compare(std::string name, const std::vector<double>& reference,
                     const std::vector<double>& actual, double tolerance);

// Bayes rule per subject with plain products of probabilities. Throws
// Evaluation naming the subject when both class weights underflow to zero.
Responsibilities brute_force_posterior(const ParameterSet& params, const MediationDataset& data,
                                       Family family);

struct NewtonResult {
  Eigen::VectorXd coefficients;
  int iterations = 0;
  double max_abs_gradient = 0.0;
};

// Full Newton steps on the analytic score and Hessian of sum_i w_i log f(y_i).
// Normal is solved by a QR of the weighted design. Throws Evaluation if the
// iterates stop being finite or fail to settle.
NewtonResult independent_newton_glm(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                                    const Eigen::VectorXd& weights, Family family);

struct MonteCarloEffects {
  EffectEstimates estimate;
  // Standard errors on the difference scale, or of the log ratio for ratio scales.
  double se_cde = 0.0;
  double se_nde = 0.0;
  double se_nie = 0.0;
};

// Simulates M(x_ref), M(x) from the mediator model and potential outcomes from
// the outcome model at the query's confounders, then contrasts the empirical
// means (difference) or odds/risks (ratio scales). The outcome model follows
// the scale: Normal for differences (sd from params.sigma2, else 1), logistic
// for odds ratios, log-linear Poisson for risk ratios. Needs draws >= 100000.
MonteCarloEffects monte_carlo_effects(const ParameterSet& params, const EffectQuery& query,
                                      long draws, std::uint64_t seed);

}  // namespace mismed::oracles
