#include "mismed/pvw.hpp"

#include <cmath>

#include "mismed/errors.hpp"
#include "mismed/squarem.hpp"

namespace mismed {

namespace {

Eigen::VectorXd stack(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd out(a.size() + b.size());
  out << a, b;
  return out;
}

}  // namespace

FitReport estimate_misclassification_model(const MediationDataset& data, const EmConfig& config) {
  return run_misclassification_em(data, config);
}

PredictiveValues compute_predictive_values(const ParameterSet& params, const MediationDataset& data,
                                           Family family) {
  if (!params.has_outcome()) {
    throw Error(ErrorKind::Configuration, "predictive values need a provisional outcome model");
  }
  const auto lp = linear_predictors(params, data);
  const double s2 = params.sigma2.value_or(1.0);
  PredictiveValues out{Eigen::VectorXd(data.n())};
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const bool one = data.m_star()[static_cast<std::size_t>(i)] == 1;
    double log1 = log_expit(lp.mediator[i]) +
                  (one ? log_expit(lp.sensitivity[i]) : log_expit(-lp.sensitivity[i])) +
                  log_density(family, data.y()[i], lp.outcome_class1[i], s2);
    double log2 = log_expit(-lp.mediator[i]) +
                  log_density(family, data.y()[i], lp.outcome_class2[i], s2);
    if (lp.has_false_positive) {
      log2 += one ? log_expit(lp.false_positive[i]) : log_expit(-lp.false_positive[i]);
    } else if (one) {
      log2 = -std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(log1) && !std::isfinite(log2)) {
      throw DegenerateSubjectError(static_cast<long>(i),
                                   "subject at row " + std::to_string(i) +
                                       " has zero mass under both latent classes");
    }
    out.lambda[i] = log2 == -std::numeric_limits<double>::infinity()
                        ? 1.0
                        : 1.0 / (1.0 + std::exp(log2 - log1));
  }
  return out;
}

FitReport fit_outcome_weighted(const PredictiveValues& pv, const MediationDataset& data,
                               Family family, bool interaction,
                               const std::optional<Eigen::VectorXd>& start) {
  const Eigen::Index n = data.n();
  if (pv.lambda.size() != n) throw Error(ErrorKind::Configuration, "lambda length mismatch");
  if ((pv.lambda.array() < 0.0).any() || (pv.lambda.array() > 1.0).any()) {
    throw Error(ErrorKind::Configuration, "predictive values must lie in [0, 1]");
  }
  const DesignMatrix top = outcome_design(data, Eigen::VectorXd::Ones(n), interaction);
  const DesignMatrix bottom = outcome_design(data, Eigen::VectorXd::Zero(n), interaction);
  Eigen::MatrixXd v(2 * n, top.cols());
  v << top.values(), bottom.values();
  const DesignMatrix expanded(std::move(v), top.names());
  const Eigen::VectorXd weights = stack(pv.lambda, Eigen::VectorXd::Ones(n) - pv.lambda);

  GlmOptions opt;
  opt.start = start;
  const GlmFit fit =
      fit_weighted_glm(expanded, stack(data.y(), data.y()), weights, OutcomeFamily::of(family), opt);

  FitReport report;
  report.method = "pvw-outcome";
  report.family = family;
  report.params.interaction = interaction;
  report.params.theta = fit.coefficients;
  report.params.sigma2 = fit.sigma2;
  report.iterations = fit.iterations;
  report.converged = fit.converged;
  report.diagnostics = fit.warnings;
  return report;
}

FitReport run_pvw(const MediationDataset& data, Family family, const EmConfig& config,
                  bool interaction, const PvwOptions& options) {
  data.check_outcome(family);
  const FitReport step1 = estimate_misclassification_model(data, config);
  const NaiveFit naive = fit_naive(data, family, interaction);

  ParameterSet params = step1.params;
  params.interaction = interaction;
  params.theta = naive.theta_star;
  params.sigma2 = naive.sigma2;

  FitReport report;
  report.method = "pvw";
  report.family = family;
  report.average_sensitivity = step1.average_sensitivity;
  report.average_specificity = step1.average_specificity;
  report.label_swap_applied = step1.label_swap_applied;
  report.diagnostics.push_back("step 1: " + std::to_string(step1.iterations) +
                               " iterations, converged=" + (step1.converged ? "true" : "false"));
  for (const auto& d : step1.diagnostics) report.diagnostics.push_back("step 1: " + d);

  const bool normal = family == Family::Normal;
  auto pack = [&](const ParameterSet& p) {
    Eigen::VectorXd v(p.theta.size() + (normal ? 1 : 0));
    v.head(p.theta.size()) = p.theta;
    if (normal) v[p.theta.size()] = std::log(p.sigma2.value());
    return v;
  };
  auto unpack = [&](const Eigen::VectorXd& v) {
    ParameterSet p = params;
    p.theta = v.head(params.theta.size());
    if (normal) p.sigma2 = std::exp(v[params.theta.size()]);
    return p;
  };

  if (!options.refine) {
    const auto pv = compute_predictive_values(params, data, family);
    const FitReport outcome = fit_outcome_weighted(pv, data, family, interaction, params.theta);
    params.theta = outcome.params.theta;
    params.sigma2 = outcome.params.sigma2;
    report.iterations = 1;
    report.converged = outcome.converged;
    report.loglik_trace.push_back(observed_data_loglik(params, data, family));
    report.diagnostics.insert(report.diagnostics.end(), outcome.diagnostics.begin(),
                              outcome.diagnostics.end());
  } else {
    FixedPointProblem problem;
    problem.update = [&](const Eigen::VectorXd& v) {
      const ParameterSet p = unpack(v);
      const auto pv = compute_predictive_values(p, data, family);
      const FitReport outcome = fit_outcome_weighted(pv, data, family, interaction, p.theta);
      ParameterSet next = p;
      next.theta = outcome.params.theta;
      next.sigma2 = outcome.params.sigma2;
      return pack(next);
    };
    problem.objective = [&](const Eigen::VectorXd& v) {
      return observed_data_loglik(unpack(v), data, family);
    };
    FixedPointOptions fpo;
    fpo.tolerance = config.loglik_tolerance;
    fpo.max_iterations = config.max_iterations;
    fpo.accelerate = config.acceleration == Acceleration::Squarem;
    const FixedPointResult result = run_fixed_point(problem, pack(params), fpo);
    params = unpack(result.point);
    report.iterations = result.iterations;
    report.em_updates = result.updates;
    report.converged = result.converged && step1.converged;
    report.loglik_trace = result.trace;
  }
  report.params = params;
  return report;
}

}  // namespace mismed
