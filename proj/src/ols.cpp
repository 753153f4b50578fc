#include "mismed/ols.hpp"

#include <cmath>
#include <sstream>

#include "mismed/errors.hpp"
#include "mismed/kernels.hpp"

namespace mismed {

namespace {

constexpr double kMinDiscrimination = 1e-8;

}  // namespace

FitReport ols_correct_outcome(const ParameterSet& misclassification, const MediationDataset& data,
                              bool interaction) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const Eigen::VectorXd sens = observed_mediator_prob(misclassification, data, 1);
  const Eigen::VectorXd fp = observed_mediator_prob(misclassification, data, 2);
  const Eigen::VectorXd gap = sens - fp;
  if (gap.cwiseAbs().minCoeff() < kMinDiscrimination) {
    throw CorrectionInfeasibleError(
        0.0, "sensitivity equals the false-positive rate for some subject; M* carries no "
             "information about M there");
  }
  const Eigen::VectorXd surrogate = (data.m_star_is_one() - fp).cwiseQuotient(gap);

  // W = (1, X, C, m~, X m~); the gram is then patched where m~ appears squared.
  const DesignMatrix w = outcome_design(data, surrogate, interaction);
  const auto ne =
      kernels::normal_equations(w.values(), Eigen::VectorXd::Ones(n), data.y());
  Eigen::MatrixXd gram = ne.gram;
  const Eigen::Index km = 2 + p;
  gram(km, km) = kernels::sum(surrogate);
  if (interaction) {
    const Eigen::VectorXd xm = data.x().cwiseProduct(surrogate);
    const double sx = kernels::sum(xm);
    gram(km, km + 1) = gram(km + 1, km) = sx;
    gram(km + 1, km + 1) = kernels::sum(data.x().cwiseProduct(xm));
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 1e-12 * hi)) {
    std::ostringstream msg;
    msg << "corrected second-moment matrix is not positive definite (smallest eigenvalue " << lo
        << ")";
    throw CorrectionInfeasibleError(lo, msg.str());
  }
  const Eigen::VectorXd theta = gram.ldlt().solve(ne.rhs);

  FitReport report;
  report.method = "ols";
  report.family = Family::Normal;
  report.params = misclassification;
  report.params.interaction = interaction;
  report.params.theta = theta;
  const double yy = kernels::sum(data.y().cwiseAbs2());
  const double sigma2 = (yy - theta.dot(ne.rhs)) / static_cast<double>(n);
  if (sigma2 > 0.0) {
    report.params.sigma2 = sigma2;
  } else {
    report.params.sigma2 = 1e-12;
    report.diagnostics.push_back("corrected residual variance was not positive; floored");
  }
  report.diagnostics.push_back("moment correction uses subject-level sensitivity and "
                               "false-positive rates");
  report.iterations = 1;
  report.converged = true;
  return report;
}

FitReport run_ols_correction(const MediationDataset& data, Family family, const EmConfig& config,
                             bool interaction) {
  if (family != Family::Normal) {
    throw Error(ErrorKind::UnsupportedFamily,
                "the least-squares correction is only defined for a Normal outcome");
  }
  const FitReport step1 = run_misclassification_em(data, config);
  FitReport report = ols_correct_outcome(step1.params, data, interaction);
  report.loglik_trace = step1.loglik_trace;
  report.em_updates = step1.em_updates;
  report.iterations = step1.iterations;
  report.converged = step1.converged;
  report.average_sensitivity = step1.average_sensitivity;
  report.average_specificity = step1.average_specificity;
  report.label_swap_applied = step1.label_swap_applied;
  for (const auto& d : step1.diagnostics) report.diagnostics.push_back("step 1: " + d);
  return report;
}

}  // namespace mismed
