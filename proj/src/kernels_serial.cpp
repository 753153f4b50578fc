#include <cmath>
#include <limits>

#include "mismed/kernels.hpp"

namespace mismed::kernels::serial {

double sum(const Eigen::VectorXd& values) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) acc += values[i];
  return acc;
}

NormalEquations normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& weights,
                                 const Eigen::VectorXd& v) {
  const Eigen::Index k = x.cols();
  NormalEquations out{Eigen::MatrixXd::Zero(k, k), Eigen::VectorXd::Zero(k)};
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index a = 0; a < k; ++a) {
      out.rhs[a] += x(i, a) * v[i];
      for (Eigen::Index b = 0; b < k; ++b) out.gram(a, b) += weights[i] * x(i, a) * x(i, b);
    }
  }
  return out;
}

GlmTerms glm_terms(Family family, const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& weights, double sigma2) {
  const Eigen::Index n = eta.size();
  GlmTerms out{Eigen::VectorXd(n), Eigen::VectorXd(n), 0.0};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = weights[i];
    const double mu = inverse_link(family, eta[i]);
    const double var = family == Family::Normal      ? 1.0 / sigma2
                       : family == Family::Bernoulli ? mu * (1.0 - mu)
                                                     : mu;
    const double scale = family == Family::Normal ? 1.0 / sigma2 : 1.0;
    out.working_weight[i] = w * var;
    out.score[i] = w * (y[i] - mu) * scale;
    if (w != 0.0) out.loglik += w * log_density(family, y[i], eta[i], sigma2);
  }
  return out;
}

double glm_loglik(Family family, const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& weights, double sigma2) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (weights[i] != 0.0) acc += weights[i] * log_density(family, y[i], eta[i], sigma2);
  }
  return acc;
}

Eigen::MatrixXd class_log_joint(const LatentClassInputs& in) {
  const Eigen::Index n = in.eta_mediator->size();
  Eigen::MatrixXd out(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p1 = expit((*in.eta_mediator)[i]);
    const double sens = expit((*in.eta_sensitivity)[i]);
    const double fp = in.eta_false_positive ? expit((*in.eta_false_positive)[i]) : 0.0;
    const bool observed_one = (*in.m_star_is_one)[i] > 0.5;
    out(i, 0) = std::log(p1) + std::log(observed_one ? sens : 1.0 - sens);
    out(i, 1) = std::log(1.0 - p1) + std::log(observed_one ? fp : 1.0 - fp);
    if (in.eta_outcome_class1 != nullptr) {
      out(i, 0) += log_density(in.family, (*in.y)[i], (*in.eta_outcome_class1)[i], in.sigma2);
      out(i, 1) += log_density(in.family, (*in.y)[i], (*in.eta_outcome_class2)[i], in.sigma2);
    }
  }
  return out;
}

Posterior normalize(const Eigen::MatrixXd& log_joint) {
  const Eigen::Index n = log_joint.rows();
  Posterior out{Eigen::MatrixXd(n, 2), 0.0, -1};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = log_joint.row(i).maxCoeff();
    if (!std::isfinite(hi)) {
      if (out.degenerate_row < 0) out.degenerate_row = i;
      out.responsibilities.row(i).setConstant(std::nan(""));
      continue;
    }
    const double e0 = std::exp(log_joint(i, 0) - hi);
    const double e1 = std::exp(log_joint(i, 1) - hi);
    out.responsibilities(i, 0) = e0 / (e0 + e1);
    out.responsibilities(i, 1) = e1 / (e0 + e1);
    out.loglik += hi + std::log(e0 + e1);
  }
  return out;
}

}  // namespace mismed::kernels::serial
