#include "mismed/model.hpp"

#include <cmath>
#include <string>

#include "mismed/errors.hpp"

namespace mismed {

namespace {

std::vector<std::string> default_names(const std::string& prefix, Eigen::Index k) {
  std::vector<std::string> out;
  for (Eigen::Index j = 0; j < k; ++j) out.push_back(prefix + std::to_string(j + 1));
  return out;
}

Eigen::MatrixXd with_intercept(const Eigen::VectorXd* x, const Eigen::MatrixXd& rest) {
  const Eigen::Index n = rest.rows();
  const Eigen::Index extra = x ? 1 : 0;
  Eigen::MatrixXd out(n, 1 + extra + rest.cols());
  out.col(0).setOnes();
  if (x) out.col(1) = *x;
  out.rightCols(rest.cols()) = rest;
  return out;
}

}  // namespace

MediationDataset::MediationDataset(Eigen::VectorXd x, Eigen::MatrixXd c, Eigen::MatrixXd z,
                                   std::vector<int> m_star, Eigen::VectorXd y,
                                   DatasetLabels labels)
    : x_(std::move(x)),
      c_(std::move(c)),
      z_(std::move(z)),
      m_star_(std::move(m_star)),
      y_(std::move(y)),
      labels_(std::move(labels)) {
  const Eigen::Index n = x_.size();
  if (n == 0) throw Error(ErrorKind::Configuration, "dataset is empty");
  if (c_.rows() != n || z_.rows() != n || y_.size() != n ||
      static_cast<Eigen::Index>(m_star_.size()) != n) {
    throw Error(ErrorKind::Configuration, "dataset columns have different lengths");
  }
  if (!x_.allFinite() || !c_.allFinite() || !z_.allFinite() || !y_.allFinite()) {
    throw Error(ErrorKind::Configuration, "dataset contains non-finite values");
  }
  m_star_is_one_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int m = m_star_[static_cast<std::size_t>(i)];
    if (m != 1 && m != 2) {
      throw Error(ErrorKind::MediatorCode,
                  "observed mediator must be 1 or 2 (row " + std::to_string(i) + ")");
    }
    m_star_is_one_[i] = m == 1 ? 1.0 : 0.0;
  }
  if (labels_.c.empty()) labels_.c = default_names("c", c_.cols());
  if (labels_.z.empty()) labels_.z = default_names("z", z_.cols());
  if (static_cast<Eigen::Index>(labels_.c.size()) != c_.cols() ||
      static_cast<Eigen::Index>(labels_.z.size()) != z_.cols()) {
    throw Error(ErrorKind::Configuration, "column label count mismatch");
  }
}

void MediationDataset::check_outcome(Family family) const {
  for (Eigen::Index i = 0; i < n(); ++i) {
    const double v = y_[i];
    if (family == Family::Bernoulli && v != 0.0 && v != 1.0) {
      throw Error(ErrorKind::Configuration,
                  "Bernoulli outcome must be 0/1 (row " + std::to_string(i) + ")");
    }
    if (family == Family::Poisson && (v < 0.0 || v != std::floor(v))) {
      throw Error(ErrorKind::Configuration,
                  "Poisson outcome must be a nonnegative integer (row " + std::to_string(i) + ")");
    }
  }
}

void ParameterSet::validate(const MediationDataset& data) const {
  if (beta.size() != 2 + data.p()) {
    throw Error(ErrorKind::Configuration, "beta must have length 2 + p");
  }
  if (gamma.rows() != 2 || gamma.cols() != 1 + data.q()) {
    throw Error(ErrorKind::Configuration, "gamma must be 2 x (1 + q)");
  }
  if (has_outcome() && theta.size() != 3 + data.p() + (interaction ? 1 : 0)) {
    throw Error(ErrorKind::Configuration, "theta length does not match covariates/interaction");
  }
  if (!beta.allFinite() || !theta.allFinite() || !gamma.row(0).allFinite() ||
      (!perfect_specificity && !gamma.row(1).allFinite())) {
    throw Error(ErrorKind::Configuration, "parameters must be finite");
  }
  if (sigma2 && !(*sigma2 > 0.0 && std::isfinite(*sigma2))) {
    throw Error(ErrorKind::Configuration, "sigma2 must be finite and positive");
  }
}

DesignMatrix mediator_design(const MediationDataset& data) {
  std::vector<std::string> names{"intercept", data.labels().x};
  names.insert(names.end(), data.labels().c.begin(), data.labels().c.end());
  return DesignMatrix(with_intercept(&data.x(), data.c()), std::move(names));
}

DesignMatrix observation_design(const MediationDataset& data) {
  std::vector<std::string> names{"intercept"};
  names.insert(names.end(), data.labels().z.begin(), data.labels().z.end());
  return DesignMatrix(with_intercept(nullptr, data.z()), std::move(names));
}

std::vector<std::string> outcome_column_names(const MediationDataset& data, bool interaction) {
  std::vector<std::string> names{"intercept", data.labels().x};
  names.insert(names.end(), data.labels().c.begin(), data.labels().c.end());
  names.push_back("m");
  if (interaction) names.push_back(data.labels().x + ":m");
  return names;
}

DesignMatrix outcome_design(const MediationDataset& data, const Eigen::VectorXd& m_indicator,
                            bool interaction) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  Eigen::MatrixXd v(n, 3 + p + (interaction ? 1 : 0));
  v.col(0).setOnes();
  v.col(1) = data.x();
  v.middleCols(2, p) = data.c();
  v.col(2 + p) = m_indicator;
  if (interaction) v.col(3 + p) = data.x().cwiseProduct(m_indicator);
  return DesignMatrix(std::move(v), outcome_column_names(data, interaction));
}

LinearPredictors linear_predictors(const ParameterSet& params, const MediationDataset& data) {
  params.validate(data);
  LinearPredictors lp;
  const Eigen::Index p = data.p();
  lp.mediator = (data.c() * params.beta.tail(p)).array() + params.beta[0] +
                params.beta[1] * data.x().array();
  const Eigen::Index q = data.q();
  lp.sensitivity = (data.z() * params.gamma.row(0).tail(q).transpose()).array() +
                   params.gamma(0, 0);
  lp.has_false_positive = !params.perfect_specificity;
  if (lp.has_false_positive) {
    lp.false_positive = (data.z() * params.gamma.row(1).tail(q).transpose()).array() +
                        params.gamma(1, 0);
  }
  lp.has_outcome = params.has_outcome();
  if (lp.has_outcome) {
    const auto& t = params.theta;
    const Eigen::VectorXd base =
        (data.c() * t.segment(2, p)).array() + t[0] + t[1] * data.x().array();
    lp.outcome_class2 = base;
    lp.outcome_class1 = base.array() + params.theta_m() + params.theta_xm() * data.x().array();
  }
  return lp;
}

kernels::LatentClassInputs LinearPredictors::inputs(const MediationDataset& data, Family family,
                                                    double sigma2) const {
  kernels::LatentClassInputs in;
  in.eta_mediator = &mediator;
  in.eta_sensitivity = &sensitivity;
  in.eta_false_positive = has_false_positive ? &false_positive : nullptr;
  in.m_star_is_one = &data.m_star_is_one();
  if (has_outcome) {
    in.eta_outcome_class1 = &outcome_class1;
    in.eta_outcome_class2 = &outcome_class2;
    in.y = &data.y();
  }
  in.family = family;
  in.sigma2 = sigma2;
  return in;
}

Eigen::VectorXd true_mediator_prob(const ParameterSet& params, const MediationDataset& data) {
  const auto lp = linear_predictors(params, data);
  return lp.mediator.unaryExpr([](double e) { return expit(e); });
}

Eigen::VectorXd observed_mediator_prob(const ParameterSet& params, const MediationDataset& data,
                                       int latent_class) {
  if (latent_class != 1 && latent_class != 2) {
    throw Error(ErrorKind::Configuration, "latent class must be 1 or 2");
  }
  const auto lp = linear_predictors(params, data);
  if (latent_class == 1) return lp.sensitivity.unaryExpr([](double e) { return expit(e); });
  if (!lp.has_false_positive) return Eigen::VectorXd::Zero(data.n());
  return lp.false_positive.unaryExpr([](double e) { return expit(e); });
}

SensSpec average_sens_spec(const ParameterSet& params, const MediationDataset& data) {
  const double n = static_cast<double>(data.n());
  const Eigen::VectorXd sens = observed_mediator_prob(params, data, 1);
  const Eigen::VectorXd fp = observed_mediator_prob(params, data, 2);
  return {kernels::sum(sens) / n, 1.0 - kernels::sum(fp) / n};
}

Eigen::VectorXd outcome_density(const ParameterSet& params, const MediationDataset& data,
                                const std::vector<int>& m, Family family) {
  if (!params.has_outcome()) throw Error(ErrorKind::Configuration, "no outcome parameters");
  if (family == Family::Normal && !params.sigma2) {
    throw Error(ErrorKind::Configuration, "Normal outcome density requires sigma2");
  }
  if (static_cast<Eigen::Index>(m.size()) != data.n()) {
    throw Error(ErrorKind::Configuration, "latent class vector length mismatch");
  }
  const auto lp = linear_predictors(params, data);
  const double s2 = params.sigma2.value_or(1.0);
  Eigen::VectorXd out(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const int mi = m[static_cast<std::size_t>(i)];
    if (mi != 1 && mi != 2) throw Error(ErrorKind::Configuration, "latent class must be 1 or 2");
    const double eta = mi == 1 ? lp.outcome_class1[i] : lp.outcome_class2[i];
    out[i] = std::exp(log_density(family, data.y()[i], eta, s2));
  }
  return out;
}

Eigen::MatrixXd class_log_joint(const ParameterSet& params, const MediationDataset& data,
                                Family family) {
  if (params.has_outcome() && family == Family::Normal && !params.sigma2) {
    throw Error(ErrorKind::Configuration, "Normal outcome requires sigma2");
  }
  const auto lp = linear_predictors(params, data);
  return kernels::class_log_joint(lp.inputs(data, family, params.sigma2.value_or(1.0)));
}

double observed_data_loglik(const ParameterSet& params, const MediationDataset& data,
                            Family family) {
  const auto post = kernels::normalize(class_log_joint(params, data, family));
  if (post.degenerate_row >= 0 || !std::isfinite(post.loglik)) {
    throw Error(ErrorKind::Evaluation, "observed-data log-likelihood is not finite");
  }
  return post.loglik;
}

ParameterSet swap_labels(const ParameterSet& params) {
  if (params.perfect_specificity) {
    throw Error(ErrorKind::Configuration,
                "label swap is undefined under the perfect-specificity constraint");
  }
  ParameterSet out = params;
  out.beta = -params.beta;
  out.gamma.row(0) = params.gamma.row(1);
  out.gamma.row(1) = params.gamma.row(0);
  if (params.has_outcome()) {
    const Eigen::Index m = params.theta_m_index();
    out.theta[0] = params.theta[0] + params.theta_m();
    out.theta[1] = params.theta[1] + params.theta_xm();
    out.theta[m] = -params.theta_m();
    if (params.interaction) out.theta[m + 1] = -params.theta_xm();
  }
  return out;
}

NaiveFit fit_naive(const MediationDataset& data, Family family, bool interaction) {
  data.check_outcome(family);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(data.n());
  NaiveFit out;
  out.interaction = interaction;
  // Outcome first: a constant M* is reported as an aliased "m" column.
  const auto fit = fit_weighted_glm(outcome_design(data, data.m_star_is_one(), interaction),
                                    data.y(), ones, OutcomeFamily::of(family));
  out.theta_star = fit.coefficients;
  out.sigma2 = fit.sigma2;
  out.beta_star = fit_weighted_glm(mediator_design(data), data.m_star_is_one(), ones,
                                   OutcomeFamily::bernoulli())
                      .coefficients;
  return out;
}

}  // namespace mismed
