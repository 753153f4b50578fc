#include "mismed/glm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mismed/errors.hpp"
#include "mismed/kernels.hpp"

namespace mismed {

namespace {

constexpr double kPivotTolerance = 1e-10;

std::string join(const std::vector<std::string>& names, const std::vector<Eigen::Index>& idx) {
  std::string out;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) out += ", ";
    out += names[static_cast<std::size_t>(idx[i])];
  }
  return out;
}

bool positive_definite(const Eigen::MatrixXd& s) {
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) return false;
  const Eigen::VectorXd pivots = llt.matrixL().toDenseMatrix().diagonal();
  return pivots.array().square().minCoeff() > kPivotTolerance;
}

[[noreturn]] void throw_rank_deficiency(const Eigen::MatrixXd& gram,
                                        const std::vector<std::string>& names) {
  const Eigen::Index k = gram.rows();
  const Eigen::VectorXd d = gram.diagonal();
  std::vector<Eigen::Index> kept;
  std::vector<Eigen::Index> aliased;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(d[j] > 0.0) || !std::isfinite(d[j])) {
      aliased.push_back(j);
      continue;
    }
    std::vector<Eigen::Index> trial = kept;
    trial.push_back(j);
    const auto t = static_cast<Eigen::Index>(trial.size());
    Eigen::MatrixXd s(t, t);
    for (Eigen::Index a = 0; a < t; ++a) {
      for (Eigen::Index b = 0; b < t; ++b) {
        s(a, b) = gram(trial[a], trial[b]) / std::sqrt(d[trial[a]] * d[trial[b]]);
      }
    }
    if (positive_definite(s)) {
      kept = std::move(trial);
    } else {
      aliased.push_back(j);
    }
  }
  std::vector<std::string> aliased_names;
  for (auto j : aliased) aliased_names.push_back(names[static_cast<std::size_t>(j)]);
  std::ostringstream msg;
  msg << "singular weighted information matrix: column(s) {" << join(names, aliased)
      << "} are constant or linear combinations of {" << join(names, kept) << "}";
  throw RankDeficiencyError(std::move(aliased_names), msg.str());
}

void validate_inputs(const DesignMatrix& design, const Eigen::VectorXd& response,
                     const Eigen::VectorXd& weights, Family family) {
  const Eigen::Index n = design.rows();
  if (response.size() != n || weights.size() != n) {
    throw Error(ErrorKind::Configuration, "response/weights length does not match design rows");
  }
  bool any_positive = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = weights[i];
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::Configuration, "weights must be finite and nonnegative");
    }
    any_positive = any_positive || w > 0.0;
    const double y = response[i];
    if (!std::isfinite(y)) throw Error(ErrorKind::Configuration, "non-finite response");
    if (family == Family::Bernoulli && y != 0.0 && y != 1.0) {
      throw Error(ErrorKind::Configuration, "Bernoulli responses must be 0 or 1");
    }
    if (family == Family::Poisson && (y < 0.0 || y != std::floor(y))) {
      throw Error(ErrorKind::Configuration, "Poisson responses must be nonnegative integers");
    }
  }
  if (!any_positive) throw Error(ErrorKind::Configuration, "at least one weight must be positive");
}

Eigen::VectorXd default_start(const DesignMatrix& design, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& w, Family family) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(design.cols());
  const double mean = kernels::sum(w.cwiseProduct(y)) / kernels::sum(w);
  if (family == Family::Bernoulli) {
    const double p = std::clamp(mean, 1e-10, 1.0 - 1e-10);
    b[0] = std::log(p / (1.0 - p));
  } else if (family == Family::Poisson) {
    b[0] = std::log(std::max(mean, 1e-10));
  }
  return b;
}

GlmFit fit_normal(const DesignMatrix& design, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& w) {
  const auto ne = kernels::normal_equations(design.values(), w, w.cwiseProduct(y));
  GlmFit fit;
  fit.coefficients = solve_checked(ne.gram, ne.rhs, design.names());
  const Eigen::VectorXd resid = y - design.values() * fit.coefficients;
  const double sum_w = kernels::sum(w);
  const double wrss = kernels::sum(w.cwiseProduct(resid.cwiseAbs2()));
  const double sigma2 = std::max(wrss / sum_w, 1e-300);
  fit.sigma2 = sigma2;
  // At the profiled variance sum_i w_i r_i^2 / sigma2 = sum_i w_i.
  fit.log_likelihood = -0.5 * sum_w * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0);
  fit.iterations = 1;
  fit.converged = true;
  return fit;
}

}  // namespace

DesignMatrix::DesignMatrix(Eigen::MatrixXd values, std::vector<std::string> names)
    : values_(std::move(values)), names_(std::move(names)) {
  if (static_cast<Eigen::Index>(names_.size()) != values_.cols()) {
    throw Error(ErrorKind::Configuration, "design column names do not match column count");
  }
  if (values_.cols() == 0 || values_.rows() < values_.cols()) {
    throw Error(ErrorKind::Configuration, "design needs at least as many rows as columns");
  }
  if (!values_.allFinite()) throw Error(ErrorKind::Configuration, "design has non-finite entries");
  if ((values_.col(0).array() != 1.0).any()) {
    throw Error(ErrorKind::Configuration, "first design column must be the intercept (all ones)");
  }
}

Eigen::VectorXd solve_checked(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                              const std::vector<std::string>& names) {
  const Eigen::VectorXd d = gram.diagonal();
  if ((d.array() > 0.0).all() && d.allFinite()) {
    const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd scaled = s.asDiagonal() * gram * s.asDiagonal();
    Eigen::LLT<Eigen::MatrixXd> llt(scaled);
    if (llt.info() == Eigen::Success) {
      const Eigen::VectorXd pivots = llt.matrixL().toDenseMatrix().diagonal();
      if (pivots.array().square().minCoeff() > kPivotTolerance) {
        return s.cwiseProduct(llt.solve(s.cwiseProduct(rhs)));
      }
    }
  }
  throw_rank_deficiency(gram, names);
}

GlmFit fit_weighted_glm(const DesignMatrix& design, const Eigen::VectorXd& response,
                        const Eigen::VectorXd& weights, const OutcomeFamily& family,
                        const GlmOptions& options) {
  validate_inputs(design, response, weights, family.tag);
  if (family.tag == Family::Normal) return fit_normal(design, response, weights);

  const Eigen::MatrixXd& x = design.values();
  GlmFit fit;
  Eigen::VectorXd b = options.start ? *options.start
                                    : default_start(design, response, weights, family.tag);
  if (b.size() != design.cols()) {
    throw Error(ErrorKind::Configuration, "start vector length does not match design columns");
  }
  Eigen::VectorXd eta = x * b;
  auto terms = kernels::glm_terms(family.tag, eta, response, weights, 1.0);
  double ll = terms.loglik;
  if (!std::isfinite(ll)) throw Error(ErrorKind::Evaluation, "non-finite log-likelihood at start");

  for (int it = 1; it <= options.max_iterations; ++it) {
    fit.iterations = it;
    const auto ne = kernels::normal_equations(x, terms.working_weight, terms.score);
    const Eigen::VectorXd delta = solve_checked(ne.gram, ne.rhs, design.names());

    double step = 1.0;
    Eigen::VectorXd b_new;
    double ll_new = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving, step *= 0.5) {
      b_new = b + step * delta;
      eta = x * b_new;
      ll_new = kernels::glm_loglik(family.tag, eta, response, weights, 1.0);
      if (std::isfinite(ll_new) && ll_new >= ll - 1e-12 * (1.0 + std::abs(ll))) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No ascent direction left at working precision.
      fit.converged = delta.cwiseAbs().maxCoeff() < std::sqrt(options.coefficient_tolerance);
      eta = x * b;
      break;
    }
    const double change = step * delta.cwiseAbs().maxCoeff();
    const double rel = std::abs(ll_new - ll) / (std::abs(ll) + options.relative_loglik_tolerance);
    b = b_new;
    ll = ll_new;
    if (family.tag == Family::Bernoulli &&
        b.cwiseAbs().maxCoeff() > options.separation_bound) {
      fit.warnings.push_back("separation: logistic coefficient magnitude exceeds " +
                             std::to_string(options.separation_bound));
      break;
    }
    if (change < options.coefficient_tolerance || rel < options.relative_loglik_tolerance) {
      fit.converged = true;
      break;
    }
    terms = kernels::glm_terms(family.tag, eta, response, weights, 1.0);
  }

  fit.coefficients = b;
  fit.log_likelihood = ll;
  return fit;
}

double log_likelihood(const DesignMatrix& design, const Eigen::VectorXd& response,
                      const Eigen::VectorXd& weights, const OutcomeFamily& family,
                      const Eigen::VectorXd& coefficients) {
  validate_inputs(design, response, weights, family.tag);
  family.validate();
  if (coefficients.size() != design.cols()) {
    throw Error(ErrorKind::Configuration, "coefficient length does not match design columns");
  }
  const Eigen::VectorXd eta = design.values() * coefficients;
  if (!eta.allFinite()) throw Error(ErrorKind::Evaluation, "non-finite linear predictor");
  return kernels::glm_loglik(family.tag, eta, response, weights, family.sigma2.value_or(1.0));
}

}  // namespace mismed
