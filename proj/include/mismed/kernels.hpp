#pragma once

// Data-parallel inner loops. Every reduction walks a fixed partition of the
// rows into kBlockRows-sized blocks and combines the block partials in block
// order, so results are bit-identical for any OpenMP thread count.
//
// The `serial` namespace holds straight single-loop reference versions used by
// the test suite and the benchmark. They sum in a different order, so they
// agree with the parallel kernels to rounding, not bitwise.

#include <Eigen/Dense>

#include "mismed/family.hpp"

namespace mismed::kernels {

inline constexpr Eigen::Index kBlockRows = 2048;

struct NormalEquations {
  Eigen::MatrixXd gram;  // X' diag(w) X
  Eigen::VectorXd rhs;   // X' v
};

// Per-row quantities of a canonical-link GLM at linear predictor eta.
struct GlmTerms {
  Eigen::VectorXd working_weight;  // w_i * Var(mu_i)   (w_i / sigma2 for Normal)
  Eigen::VectorXd score;           // w_i * (y_i - mu_i) (divided by sigma2 for Normal)
  double loglik = 0.0;
};

// Inputs for the per-subject joint log-probabilities of the two latent classes.
// Null optional pointers drop the corresponding factor: a null `eta_false_positive`
// means P(M*=1 | M=2) = 0, null outcome pointers exclude the outcome factor.
struct LatentClassInputs {
  const Eigen::VectorXd* eta_mediator = nullptr;        // logit P(M=1 | X, C)
  const Eigen::VectorXd* eta_sensitivity = nullptr;     // logit P(M*=1 | M=1, Z)
  const Eigen::VectorXd* eta_false_positive = nullptr;  // logit P(M*=1 | M=2, Z)
  const Eigen::VectorXd* m_star_is_one = nullptr;       // 1{M*=1}
  const Eigen::VectorXd* eta_outcome_class1 = nullptr;
  const Eigen::VectorXd* eta_outcome_class2 = nullptr;
  const Eigen::VectorXd* y = nullptr;
  Family family = Family::Normal;
  double sigma2 = 1.0;
};

struct Posterior {
  Eigen::MatrixXd responsibilities;  // n x 2
  double loglik = 0.0;               // sum_i log sum_j exp(log_joint_ij)
  Eigen::Index degenerate_row = -1;  // first row with no finite class mass
};

double sum(const Eigen::VectorXd& values);
NormalEquations normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& weights,
                                 const Eigen::VectorXd& v);
GlmTerms glm_terms(Family family, const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& weights, double sigma2);
double glm_loglik(Family family, const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& weights, double sigma2);
Eigen::MatrixXd class_log_joint(const LatentClassInputs& in);
Posterior normalize(const Eigen::MatrixXd& log_joint);

namespace serial {
double sum(const Eigen::VectorXd& values);
NormalEquations normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& weights,
                                 const Eigen::VectorXd& v);
GlmTerms glm_terms(Family family, const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& weights, double sigma2);
double glm_loglik(Family family, const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& weights, double sigma2);
Eigen::MatrixXd class_log_joint(const LatentClassInputs& in);
Posterior normalize(const Eigen::MatrixXd& log_joint);
}  // namespace serial

}  // namespace mismed::kernels
