#pragma once

#include "mismed/em.hpp"

namespace mismed {

// Two-step least-squares correction for a Normal outcome.
//
// Step 1 estimates the misclassification model by EM. Step 2 replaces every
// normal-equation moment that involves the true mediator by its counterpart in
// the surrogate
//
//   m~_i = (1{M*_i = 1} - fp_i) / (sens_i - fp_i),   E[m~_i | M_i, X, C, Z, Y] = 1{M_i = 1},
//
// with subject-level sens_i = P(M*=1 | M=1, Z_i) and fp_i = P(M*=1 | M=2, Z_i).
// Because M^2 = M, the M.M, M.XM and XM.XM moments also use m~ linearly. With
// fp = 0 and sens = 1 this is the naive least-squares fit.
FitReport run_ols_correction(const MediationDataset& data, Family family, const EmConfig& config,
                             bool interaction);

// Step 2 alone, from given misclassification parameters (beta, gamma).
FitReport ols_correct_outcome(const ParameterSet& misclassification, const MediationDataset& data,
                              bool interaction);

}  // namespace mismed
