#include "mismed/em.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mismed/errors.hpp"
#include "mismed/rng.hpp"
#include "mismed/squarem.hpp"

namespace mismed {

namespace {

constexpr double kResponsibilityFloor = 1e-12;

DesignMatrix stack_twice(const DesignMatrix& top, const DesignMatrix& bottom) {
  Eigen::MatrixXd v(top.rows() + bottom.rows(), top.cols());
  v.topRows(top.rows()) = top.values();
  v.bottomRows(bottom.rows()) = bottom.values();
  return DesignMatrix(std::move(v), top.names());
}

Eigen::VectorXd stack(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd out(a.size() + b.size());
  out << a, b;
  return out;
}

void remember(std::vector<std::string>& sink, const std::vector<std::string>& warnings,
              const char* where) {
  for (const auto& w : warnings) {
    std::string tagged = std::string(where) + ": " + w;
    if (std::find(sink.begin(), sink.end(), tagged) == sink.end()) sink.push_back(tagged);
  }
}

FitReport run_em_impl(const MediationDataset& data, std::optional<Family> family,
                      const EmConfig& config, bool interaction, std::string method) {
  config.validate();
  if (family) data.check_outcome(*family);
  EmWorkspace ws(data, family, interaction, config.perfect_specificity);
  const ParameterSet start = initialize(data, family, config, interaction);
  const Family tag = family.value_or(Family::Normal);

  FixedPointProblem problem;
  problem.update = [&](const Eigen::VectorXd& v) {
    const ParameterSet p = ws.unpack(v);
    return ws.pack(ws.m_step(ws.e_step(p), &p));
  };
  problem.objective = [&](const Eigen::VectorXd& v) {
    return observed_data_loglik(ws.unpack(v), data, tag);
  };
  FixedPointOptions options;
  options.tolerance = config.loglik_tolerance;
  options.max_iterations = config.max_iterations;
  options.accelerate = config.acceleration == Acceleration::Squarem;
  const FixedPointResult result = run_fixed_point(problem, ws.pack(start), options);

  const LabelCorrection corrected = correct_label_switching(ws.unpack(result.point), data);

  FitReport report;
  report.method = std::move(method);
  report.family = family;
  report.params = corrected.params;
  report.loglik_trace = result.trace;
  report.iterations = result.iterations;
  report.em_updates = result.updates;
  report.converged = result.converged;
  report.average_sensitivity = corrected.after.sensitivity;
  report.average_specificity = corrected.after.specificity;
  report.label_swap_applied = corrected.swapped;
  report.diagnostics = ws.warnings();
  if (options.accelerate) {
    report.diagnostics.push_back("squarem fallbacks: " + std::to_string(result.fallbacks));
  }
  if (!result.converged) {
    report.diagnostics.push_back("iteration cap reached before the log-likelihood tolerance");
  }
  return report;
}

}  // namespace

void EmConfig::validate() const {
  if (!(loglik_tolerance > 0.0) || !std::isfinite(loglik_tolerance)) {
    throw Error(ErrorKind::Configuration, "loglik tolerance must be positive");
  }
  if (max_iterations < 1) throw Error(ErrorKind::Configuration, "max_iterations must be >= 1");
  if (init == InitStrategy::UserSupplied && !start) {
    throw Error(ErrorKind::Configuration, "user-supplied initialisation needs start values");
  }
  if (!(perturbation_scale >= 0.0)) {
    throw Error(ErrorKind::Configuration, "perturbation scale must be nonnegative");
  }
}

EmWorkspace::EmWorkspace(const MediationDataset& data, std::optional<Family> outcome,
                         bool interaction, bool perfect_specificity)
    : data_(data),
      outcome_(outcome),
      interaction_(interaction),
      perfect_specificity_(perfect_specificity) {
  const auto base = mediator_design(data);
  mediator_x2_ = stack_twice(base, base);
  mediator_y2_ = stack(Eigen::VectorXd::Ones(data.n()), Eigen::VectorXd::Zero(data.n()));
  observation_ = observation_design(data);
  if (outcome_) {
    outcome_x2_ = stack_twice(outcome_design(data, Eigen::VectorXd::Ones(data.n()), interaction),
                              outcome_design(data, Eigen::VectorXd::Zero(data.n()), interaction));
    outcome_y2_ = stack(data.y(), data.y());
  }
}

Responsibilities EmWorkspace::e_step(const ParameterSet& params) const {
  const auto post =
      kernels::normalize(class_log_joint(params, data_, outcome_.value_or(Family::Normal)));
  if (post.degenerate_row >= 0) {
    throw DegenerateSubjectError(
        static_cast<long>(post.degenerate_row),
        "subject at row " + std::to_string(post.degenerate_row) +
            " has zero joint probability under both latent classes");
  }
  return {post.responsibilities, post.loglik};
}

ParameterSet EmWorkspace::m_step(const Responsibilities& resp, const ParameterSet* warm_start) {
  const Eigen::Index n = data_.n();
  if (resp.r.rows() != n || resp.r.cols() != 2) {
    throw Error(ErrorKind::Configuration, "responsibilities must be n x 2");
  }
  const Eigen::VectorXd r1 =
      resp.r.col(0).cwiseMax(kResponsibilityFloor).cwiseMin(1.0 - kResponsibilityFloor);
  const Eigen::VectorXd r2 = Eigen::VectorXd::Ones(n) - r1;
  const Eigen::VectorXd w2 = stack(r1, r2);

  ParameterSet out;
  out.interaction = interaction_;
  out.perfect_specificity = perfect_specificity_;

  GlmOptions opt;
  if (warm_start) opt.start = warm_start->beta;
  auto beta_fit =
      fit_weighted_glm(mediator_x2_, mediator_y2_, w2, OutcomeFamily::bernoulli(), opt);
  remember(warnings_, beta_fit.warnings, "mediator model");
  out.beta = beta_fit.coefficients;

  out.gamma = Eigen::MatrixXd::Zero(2, 1 + data_.q());
  for (int j = 0; j < 2; ++j) {
    if (j == 1 && perfect_specificity_) break;
    GlmOptions gopt;
    if (warm_start) gopt.start = warm_start->gamma.row(j).transpose();
    const auto fit = fit_weighted_glm(observation_, data_.m_star_is_one(), j == 0 ? r1 : r2,
                                      OutcomeFamily::bernoulli(), gopt);
    remember(warnings_, fit.warnings, j == 0 ? "sensitivity model" : "false-positive model");
    out.gamma.row(j) = fit.coefficients.transpose();
  }

  if (outcome_) {
    GlmOptions topt;
    if (warm_start && warm_start->has_outcome()) topt.start = warm_start->theta;
    const auto fit =
        fit_weighted_glm(outcome_x2_, outcome_y2_, w2, OutcomeFamily::of(*outcome_), topt);
    remember(warnings_, fit.warnings, "outcome model");
    out.theta = fit.coefficients;
    out.sigma2 = fit.sigma2;
  }
  return out;
}

Eigen::VectorXd EmWorkspace::pack(const ParameterSet& params) const {
  std::vector<double> v(params.beta.data(), params.beta.data() + params.beta.size());
  for (int j = 0; j < (perfect_specificity_ ? 1 : 2); ++j) {
    for (Eigen::Index k = 0; k < params.gamma.cols(); ++k) v.push_back(params.gamma(j, k));
  }
  if (outcome_) {
    v.insert(v.end(), params.theta.data(), params.theta.data() + params.theta.size());
    if (*outcome_ == Family::Normal) v.push_back(std::log(params.sigma2.value()));
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ParameterSet EmWorkspace::unpack(const Eigen::VectorXd& packed) const {
  ParameterSet out;
  out.interaction = interaction_;
  out.perfect_specificity = perfect_specificity_;
  Eigen::Index at = 0;
  const Eigen::Index kb = 2 + data_.p();
  out.beta = packed.segment(at, kb);
  at += kb;
  const Eigen::Index kg = 1 + data_.q();
  out.gamma = Eigen::MatrixXd::Zero(2, kg);
  for (int j = 0; j < (perfect_specificity_ ? 1 : 2); ++j) {
    out.gamma.row(j) = packed.segment(at, kg).transpose();
    at += kg;
  }
  if (outcome_) {
    const Eigen::Index kt = 3 + data_.p() + (interaction_ ? 1 : 0);
    out.theta = packed.segment(at, kt);
    at += kt;
    if (*outcome_ == Family::Normal) out.sigma2 = std::exp(packed[at++]);
  }
  if (at != packed.size()) throw Error(ErrorKind::Configuration, "packed parameter length mismatch");
  return out;
}

Responsibilities e_step(const ParameterSet& params, const MediationDataset& data, Family family) {
  const EmWorkspace ws(data, params.has_outcome() ? std::optional<Family>(family) : std::nullopt,
                       params.interaction, params.perfect_specificity);
  return ws.e_step(params);
}

ParameterSet m_step(const Responsibilities& resp, const MediationDataset& data, Family family,
                    bool interaction) {
  EmWorkspace ws(data, family, interaction, false);
  return ws.m_step(resp, nullptr);
}

ParameterSet initialize(const MediationDataset& data, std::optional<Family> family,
                        const EmConfig& config, bool interaction) {
  ParameterSet out;
  if (config.init == InitStrategy::UserSupplied) {
    if (!config.start) throw Error(ErrorKind::Configuration, "missing user-supplied start");
    out = *config.start;
    if (out.has_outcome() != family.has_value()) {
      throw Error(ErrorKind::Configuration, "start values do not match the modelled mechanisms");
    }
    if (out.has_outcome() && out.interaction != interaction) {
      throw Error(ErrorKind::Configuration, "start values do not match the interaction setting");
    }
    if (family == Family::Normal && !out.sigma2) {
      throw Error(ErrorKind::Configuration, "Normal start values need sigma2");
    }
    out.interaction = interaction;
    out.perfect_specificity = config.perfect_specificity;
    if (out.perfect_specificity) out.gamma.row(1).setZero();
    out.validate(data);
    return out;
  }

  out.interaction = interaction;
  out.perfect_specificity = config.perfect_specificity;
  if (family) {
    const NaiveFit naive = fit_naive(data, *family, interaction);
    out.beta = naive.beta_star;
    out.theta = naive.theta_star;
    out.sigma2 = naive.sigma2;
  } else {
    out.beta = fit_weighted_glm(mediator_design(data), data.m_star_is_one(),
                                Eigen::VectorXd::Ones(data.n()), OutcomeFamily::bernoulli())
                   .coefficients;
  }
  out.gamma = Eigen::MatrixXd::Zero(2, 1 + data.q());
  out.gamma(0, 0) = 2.0;
  if (!out.perfect_specificity) out.gamma(1, 0) = -2.0;

  if (config.init == InitStrategy::RandomPerturbation) {
    Philox4x32 rng(config.seed, 0);
    std::normal_distribution<double> noise(0.0, config.perturbation_scale);
    for (Eigen::Index k = 0; k < out.beta.size(); ++k) out.beta[k] += noise(rng);
    for (int j = 0; j < (out.perfect_specificity ? 1 : 2); ++j) {
      for (Eigen::Index k = 0; k < out.gamma.cols(); ++k) out.gamma(j, k) += noise(rng);
    }
    for (Eigen::Index k = 0; k < out.theta.size(); ++k) out.theta[k] += noise(rng);
  }
  out.validate(data);
  return out;
}

LabelCorrection correct_label_switching(const ParameterSet& params, const MediationDataset& data) {
  LabelCorrection out{params, false, average_sens_spec(params, data), {}};
  const double total = out.before.sensitivity + out.before.specificity;
  if (total == 1.0) {
    throw Error(ErrorKind::Unidentifiable,
                "average sensitivity + specificity is exactly 1; latent classes are not identified");
  }
  if (total > 1.0) {
    out.after = out.before;
    return out;
  }
  out.params = swap_labels(params);
  out.swapped = true;
  out.after = average_sens_spec(out.params, data);
  return out;
}

FitReport run_em(const MediationDataset& data, Family family, const EmConfig& config,
                 bool interaction) {
  return run_em_impl(data, family, config, interaction, "em");
}

FitReport run_misclassification_em(const MediationDataset& data, const EmConfig& config) {
  return run_em_impl(data, std::nullopt, config, false, "misclassification-em");
}

}  // namespace mismed
