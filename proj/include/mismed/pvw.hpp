#pragma once

#include <Eigen/Dense>

#include "mismed/em.hpp"

namespace mismed {

// lambda_i = P(M_i = 1 | M*_i, X_i, C_i, Z_i, Y_i).
struct PredictiveValues {
  Eigen::VectorXd lambda;
};

struct PvwOptions {
  // Alternate predictive values and the weighted outcome fit until the
  // log-likelihood (beta, gamma held at the step-1 values) stops changing.
  // false: a single pass from the naive outcome fit.
  bool refine = true;
};

// Step 1: EM for the mediator and observation mechanisms without the outcome.
FitReport estimate_misclassification_model(const MediationDataset& data, const EmConfig& config);

// Bayes inversion over the latent classes; `params` carries step-1 beta/gamma
// and the provisional theta (and sigma2 for Normal).
PredictiveValues compute_predictive_values(const ParameterSet& params, const MediationDataset& data,
                                           Family family);

// Fits the outcome model on the 2n-row expansion (m = 1 with weight lambda_i,
// m = 0 with weight 1 - lambda_i). The report carries theta (and sigma2) only.
FitReport fit_outcome_weighted(const PredictiveValues& pv, const MediationDataset& data,
                               Family family, bool interaction,
                               const std::optional<Eigen::VectorXd>& start = std::nullopt);

FitReport run_pvw(const MediationDataset& data, Family family, const EmConfig& config,
                  bool interaction, const PvwOptions& options = {});

}  // namespace mismed
