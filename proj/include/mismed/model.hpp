#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mismed/family.hpp"
#include "mismed/glm.hpp"
#include "mismed/kernels.hpp"

namespace mismed {

struct DatasetLabels {
  std::string x = "x";
  std::vector<std::string> c;  // defaults to c1..cp
  std::vector<std::string> z;  // defaults to z1..zq
  // How the observed mediator was coded on input, e.g. "{1,2}" or "{0,1}->{2,1}".
  std::string mediator_coding = "{1,2}";
};

// Observed data (X, C, Z, M*, Y). Latent classes are coded 1/2 with 2 the
// reference; M* enters linear predictors as the indicator 1{M*=1}. Immutable
// after construction.
class MediationDataset {
 public:
  MediationDataset(Eigen::VectorXd x, Eigen::MatrixXd c, Eigen::MatrixXd z,
                   std::vector<int> m_star, Eigen::VectorXd y, DatasetLabels labels = {});

  Eigen::Index n() const noexcept { return x_.size(); }
  Eigen::Index p() const noexcept { return c_.cols(); }
  Eigen::Index q() const noexcept { return z_.cols(); }

  const Eigen::VectorXd& x() const noexcept { return x_; }
  const Eigen::MatrixXd& c() const noexcept { return c_; }
  const Eigen::MatrixXd& z() const noexcept { return z_; }
  const std::vector<int>& m_star() const noexcept { return m_star_; }
  const Eigen::VectorXd& m_star_is_one() const noexcept { return m_star_is_one_; }
  const Eigen::VectorXd& y() const noexcept { return y_; }
  const DatasetLabels& labels() const noexcept { return labels_; }

  // Throws Configuration if y is not valid for the family.
  void check_outcome(Family family) const;

 private:
  Eigen::VectorXd x_;
  Eigen::MatrixXd c_;
  Eigen::MatrixXd z_;
  std::vector<int> m_star_;
  Eigen::VectorXd m_star_is_one_;
  Eigen::VectorXd y_;
  DatasetLabels labels_;
};

// (beta, gamma, theta) of the mediator, observation and outcome mechanisms.
//   beta  = (b0, bX, bC...)                      length 2 + p
//   gamma = 2 x (1 + q); row 0 -> P(M*=1|M=1,Z) (sensitivity), row 1 -> P(M*=1|M=2,Z)
//   theta = (t0, tX, tC..., tM[, tXM])           empty when the outcome is not modelled
struct ParameterSet {
  Eigen::VectorXd beta;
  Eigen::MatrixXd gamma;
  Eigen::VectorXd theta;
  bool interaction = false;
  std::optional<double> sigma2;
  // P(M*=1 | M=2) = 0 exactly; gamma row 1 is ignored.
  bool perfect_specificity = false;

  bool has_outcome() const noexcept { return theta.size() > 0; }
  Eigen::Index theta_m_index() const noexcept { return theta.size() - (interaction ? 2 : 1); }
  double theta_m() const { return theta[theta_m_index()]; }
  double theta_xm() const { return interaction ? theta[theta.size() - 1] : 0.0; }

  // Shape/finiteness check against a dataset. Throws Configuration.
  void validate(const MediationDataset& data) const;
};

struct NaiveFit {
  Eigen::VectorXd beta_star;
  Eigen::VectorXd theta_star;
  std::optional<double> sigma2;
  bool interaction = false;
};

struct Responsibilities {
  Eigen::MatrixXd r;  // n x 2, r(i, j) = P(M_i = j+1 | data, parameters)
  double loglik = 0.0;
};

struct SensSpec {
  double sensitivity = 0.0;
  double specificity = 0.0;
};

// Column builders. Names are "intercept", the X label, C labels, "m", "x:m".
DesignMatrix mediator_design(const MediationDataset& data);
DesignMatrix observation_design(const MediationDataset& data);
DesignMatrix outcome_design(const MediationDataset& data, const Eigen::VectorXd& m_indicator,
                            bool interaction);
std::vector<std::string> outcome_column_names(const MediationDataset& data, bool interaction);

Eigen::VectorXd true_mediator_prob(const ParameterSet& params, const MediationDataset& data);
// P(M*=1 | M=latent_class, Z) per subject; latent_class in {1, 2}.
Eigen::VectorXd observed_mediator_prob(const ParameterSet& params, const MediationDataset& data,
                                       int latent_class);
SensSpec average_sens_spec(const ParameterSet& params, const MediationDataset& data);
// f(y_i | x_i, c_i, M = m_i) with m_i in {1, 2}.
Eigen::VectorXd outcome_density(const ParameterSet& params, const MediationDataset& data,
                                const std::vector<int>& m, Family family);

// Per-subject linear predictors; keeps the vectors alive for kernels::LatentClassInputs.
struct LinearPredictors {
  Eigen::VectorXd mediator;
  Eigen::VectorXd sensitivity;
  Eigen::VectorXd false_positive;
  Eigen::VectorXd outcome_class1;
  Eigen::VectorXd outcome_class2;
  bool has_false_positive = true;
  bool has_outcome = false;

  kernels::LatentClassInputs inputs(const MediationDataset& data, Family family,
                                    double sigma2) const;
};
LinearPredictors linear_predictors(const ParameterSet& params, const MediationDataset& data);

// Joint log-probabilities log P(M=j, M*, Y | X, C, Z), n x 2. The outcome
// factor is included iff params.has_outcome().
Eigen::MatrixXd class_log_joint(const ParameterSet& params, const MediationDataset& data,
                                Family family);

// sum_i log sum_j P(M=j|X,C) P(M*|M=j,Z) f(Y|X,C,M=j), in log space. Without
// theta this is the marginal likelihood of M* given (X, C, Z).
double observed_data_loglik(const ParameterSet& params, const MediationDataset& data,
                            Family family);

// Relabels the latent classes: gamma rows swap, beta -> -beta,
// theta0 += thetaM, thetaX += thetaXM, thetaM -> -thetaM, thetaXM -> -thetaXM.
ParameterSet swap_labels(const ParameterSet& params);

// Analysis model with M* in place of M. Throws RankDeficiencyError if M* is constant.
NaiveFit fit_naive(const MediationDataset& data, Family family, bool interaction);

}  // namespace mismed
