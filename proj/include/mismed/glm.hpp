#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mismed/family.hpp"

namespace mismed {

// Regressor matrix with named columns. The first column is the intercept.
class DesignMatrix {
 public:
  DesignMatrix() = default;
  // Throws Configuration unless column 0 is all ones, rows >= columns, every
  // entry is finite and the name count matches.
  DesignMatrix(Eigen::MatrixXd values, std::vector<std::string> names);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> names_;
};

struct GlmOptions {
  int max_iterations = 100;
  double coefficient_tolerance = 1e-8;
  double relative_loglik_tolerance = 1e-10;
  // Logistic coefficients beyond this magnitude are reported as separation.
  double separation_bound = 30.0;
  std::optional<Eigen::VectorXd> start;
};

struct GlmFit {
  Eigen::VectorXd coefficients;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  std::optional<double> sigma2;  // profiled residual variance, Normal only
  std::vector<std::string> warnings;
};

// Maximises sum_i w_i log f(y_i | x_i'b). Normal: closed-form weighted least
// squares with sigma2 = WRSS / sum(w). Bernoulli/Poisson: Newton (IRLS) with
// step halving whenever the log-likelihood decreases.
GlmFit fit_weighted_glm(const DesignMatrix& design, const Eigen::VectorXd& response,
                        const Eigen::VectorXd& weights, const OutcomeFamily& family,
                        const GlmOptions& options = {});

double log_likelihood(const DesignMatrix& design, const Eigen::VectorXd& response,
                      const Eigen::VectorXd& weights, const OutcomeFamily& family,
                      const Eigen::VectorXd& coefficients);

// Solves gram * b = rhs after checking that the normalised gram is positive
// definite. Throws RankDeficiencyError naming aliased columns otherwise.
Eigen::VectorXd solve_checked(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                              const std::vector<std::string>& names);

}  // namespace mismed
