#include "mismed/sim.hpp"

#include <cmath>
#include <random>

#include "mismed/errors.hpp"
#include "mismed/ols.hpp"
#include "mismed/pvw.hpp"
#include "mismed/rng.hpp"

namespace mismed {

namespace {

struct Generators {
  Eigen::Vector2d sensitivity;     // (intercept, slope on Z)
  Eigen::Vector2d false_positive;
};

Generators misclassification_generators(Level level) {
  switch (level) {
    case Level::Low: return {{3.0, 2.0}, {-2.0, -2.5}};
    case Level::Medium: return {{1.8, 1.0}, {-1.5, -1.0}};
    case Level::High: return {{1.0, 1.0}, {-0.5, -1.5}};
  }
  return {};
}

double setting4_intercept(Level level) {
  switch (level) {
    case Level::Low: return -4.0;
    case Level::Medium: return -2.5;
    case Level::High: return -1.0;
  }
  return 0.0;
}

bool draw_bernoulli(Philox4x32& rng, double p) { return uniform01(rng) < p; }

}  // namespace

std::string_view to_string(Level level) {
  switch (level) {
    case Level::Low: return "low";
    case Level::Medium: return "medium";
    case Level::High: return "high";
  }
  return "unknown";
}

Level parse_level(std::string_view name) {
  if (name == "low") return Level::Low;
  if (name == "medium" || name == "med") return Level::Medium;
  if (name == "high") return Level::High;
  throw Error(ErrorKind::Configuration, "unknown level '" + std::string(name) + "'");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Naive: return "naive";
    case Method::Em: return "em";
    case Method::Pvw: return "pvw";
    case Method::Ols: return "ols";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "naive") return Method::Naive;
  if (name == "em") return Method::Em;
  if (name == "pvw") return Method::Pvw;
  if (name == "ols") return Method::Ols;
  throw Error(ErrorKind::Configuration, "unknown method '" + std::string(name) + "'");
}

ScenarioSpec ScenarioSpec::defaults(int setting, Level level) {
  ScenarioSpec spec;
  spec.setting = setting;
  spec.level = level;
  spec.n = setting == 4 ? 20000 : 10000;
  spec.replicates = 500;
  return spec;
}

void ScenarioSpec::validate() const {
  if (setting < 1 || setting > 5) throw Error(ErrorKind::Configuration, "setting must be 1..5");
  if (n < 1) throw Error(ErrorKind::Configuration, "n must be >= 1");
  if (replicates < 1) throw Error(ErrorKind::Configuration, "replicates must be >= 1");
}

ScenarioTruth scenario_truth(const ScenarioSpec& spec) {
  spec.validate();
  ScenarioTruth t;
  ParameterSet& p = t.params;
  if (spec.setting == 4) {
    p.beta.resize(7);
    p.beta << setting4_intercept(spec.level), -2.0, 0.5, 0.0, -2.5, -0.5, 1.0;
    p.gamma = Eigen::MatrixXd::Zero(2, 3);
    p.gamma.row(0) << 1.0, 0.5, 0.1;
    p.perfect_specificity = true;
    p.theta.resize(8);
    p.theta << -4.0, 1.5, 1.0, 0.0, 0.5, -0.5, -2.0, 0.2;
    p.interaction = false;
    t.family = Family::Bernoulli;
    return t;
  }
  const Generators g = misclassification_generators(spec.level);
  p.beta = Eigen::Vector3d(1.0, -2.0, -2.5);
  p.gamma.resize(2, 2);
  p.gamma.row(0) = g.sensitivity.transpose();
  p.gamma.row(1) = g.false_positive.transpose();
  switch (spec.setting) {
    case 1:
      p.theta = Eigen::Vector4d(1.0, 1.5, -0.2, -2.0);
      p.sigma2 = 1.0;
      t.family = Family::Normal;
      break;
    case 2:
      p.theta = Eigen::Vector4d(1.0, 1.5, -0.2, -2.0);
      t.family = Family::Bernoulli;
      break;
    case 3:
      p.theta.resize(5);
      p.theta << 1.0, 1.5, -0.2, -2.0, 0.5;
      p.interaction = true;
      t.family = Family::Bernoulli;
      break;
    case 5:
      p.theta.resize(5);
      p.theta << -3.0, 1.0, -0.2, -1.0, 0.5;
      p.interaction = true;
      t.family = Family::Poisson;
      break;
    default: break;
  }
  return t;
}

SimulatedData generate_dataset(const ScenarioSpec& spec, int replicate) {
  const ScenarioTruth truth = scenario_truth(spec);
  const ParameterSet& tp = truth.params;
  const Eigen::Index n = spec.n;
  const bool s4 = spec.setting == 4;
  const Eigen::Index p = s4 ? 5 : 1;
  const Eigen::Index q = s4 ? 2 : 1;

  Philox4x32 rng(spec.seed, static_cast<std::uint64_t>(replicate));
  std::normal_distribution<double> std_normal(0.0, 1.0);
  std::gamma_distribution<double> gamma1(1.0, 1.0);

  Eigen::VectorXd x(n), y(n);
  Eigen::MatrixXd c(n, p), z(n, q);
  std::vector<int> m_star(static_cast<std::size_t>(n)), true_m(static_cast<std::size_t>(n));

  for (Eigen::Index i = 0; i < n; ++i) {
    if (s4) {
      x[i] = draw_bernoulli(rng, 0.67) ? 1.0 : 0.0;
      c(i, 0) = gamma1(rng);
      c(i, 1) = std::abs(1.0 + 2.0 * std_normal(rng));
      c(i, 2) = draw_bernoulli(rng, 0.20) ? 1.0 : 0.0;
      c(i, 3) = draw_bernoulli(rng, 0.55) ? 1.0 : 0.0;
      c(i, 4) = std_normal(rng);
      z(i, 0) = c(i, 0);
      z(i, 1) = c(i, 2);
    } else {
      x[i] = std_normal(rng);
      z(i, 0) = gamma1(rng);
      c(i, 0) = gamma1(rng);
    }
    const double eta_m = tp.beta[0] + tp.beta[1] * x[i] + c.row(i).dot(tp.beta.tail(p));
    const bool class1 = draw_bernoulli(rng, expit(eta_m));
    true_m[static_cast<std::size_t>(i)] = class1 ? 1 : 2;

    const double eta_obs = class1 ? tp.gamma(0, 0) + z.row(i).dot(tp.gamma.row(0).tail(q))
                                  : tp.gamma(1, 0) + z.row(i).dot(tp.gamma.row(1).tail(q));
    bool observed1 = false;
    if (class1 || !tp.perfect_specificity) observed1 = draw_bernoulli(rng, expit(eta_obs));
    m_star[static_cast<std::size_t>(i)] = observed1 ? 1 : 2;

    const double m = class1 ? 1.0 : 0.0;
    const auto& th = tp.theta;
    const double eta_y = th[0] + th[1] * x[i] + c.row(i).dot(th.segment(2, p)) +
                         tp.theta_m() * m + tp.theta_xm() * x[i] * m;
    switch (truth.family) {
      case Family::Normal: y[i] = eta_y + truth.sigma * std_normal(rng); break;
      case Family::Bernoulli: y[i] = draw_bernoulli(rng, expit(eta_y)) ? 1.0 : 0.0; break;
      case Family::Poisson: {
        std::poisson_distribution<int> pois(std::exp(eta_y));
        y[i] = pois(rng);
        break;
      }
    }
  }

  DatasetLabels labels;
  if (s4) {
    labels.c = {"c1", "c2", "c3", "c4", "c5"};
    labels.z = {"c1", "c3"};
  } else {
    labels.c = {"c"};
    labels.z = {"z"};
  }
  return {MediationDataset(std::move(x), std::move(c), std::move(z), std::move(m_star),
                           std::move(y), std::move(labels)),
          std::move(true_m)};
}

std::vector<std::string> scored_parameter_names(const ScenarioSpec& spec) {
  const ScenarioTruth t = scenario_truth(spec);
  std::vector<std::string> names{"beta_0", "beta_x"};
  const Eigen::Index p = t.params.beta.size() - 2;
  auto c_name = [&](Eigen::Index j) {
    return p == 1 ? std::string("c") : "c" + std::to_string(j + 1);
  };
  for (Eigen::Index j = 0; j < p; ++j) names.push_back("beta_" + c_name(j));
  names.push_back("theta_0");
  names.push_back("theta_x");
  for (Eigen::Index j = 0; j < p; ++j) names.push_back("theta_" + c_name(j));
  names.push_back("theta_m");
  if (t.params.interaction) names.push_back("theta_xm");
  return names;
}

void check_methods(const ScenarioSpec& spec, const std::vector<Method>& methods) {
  spec.validate();
  if (methods.empty()) throw Error(ErrorKind::Configuration, "no estimation methods requested");
  const ScenarioTruth t = scenario_truth(spec);
  for (Method m : methods) {
    if (m == Method::Ols && t.family != Family::Normal) {
      throw Error(ErrorKind::Configuration,
                  "method ols requires a Normal outcome (setting 1); setting " +
                      std::to_string(spec.setting) + " has a " +
                      std::string(to_string(t.family)) + " outcome");
    }
  }
}

EmConfig study_em_config(const ScenarioSpec& spec, EmConfig base) {
  if (spec.setting == 4) base.perfect_specificity = true;
  return base;
}

ReplicateResult run_replicate(const ScenarioSpec& spec, const std::vector<Method>& methods,
                              const EmConfig& base_config, int replicate) {
  const EmConfig config = study_em_config(spec, base_config);
  const ScenarioTruth truth = scenario_truth(spec);
  const SimulatedData sim = generate_dataset(spec, replicate);
  const MediationDataset& data = sim.data;
  const bool interaction = truth.params.interaction;

  ReplicateResult out;
  out.replicate = replicate;
  double m1 = 0.0;
  for (int m : sim.true_m) m1 += m == 1 ? 1.0 : 0.0;
  const double n = static_cast<double>(data.n());
  out.p_m = m1 / n;
  out.p_m_star = kernels::sum(data.m_star_is_one()) / n;
  const SensSpec ss = average_sens_spec(truth.params, data);
  out.avg_sensitivity = ss.sensitivity;
  out.avg_specificity = ss.specificity;

  for (Method method : methods) {
    MethodEstimate est;
    est.method = method;
    try {
      switch (method) {
        case Method::Naive: {
          const NaiveFit f = fit_naive(data, truth.family, interaction);
          est.beta = f.beta_star;
          est.theta = f.theta_star;
          est.converged = true;
          break;
        }
        case Method::Em: {
          const FitReport r = run_em(data, truth.family, config, interaction);
          est.beta = r.params.beta;
          est.theta = r.params.theta;
          est.converged = r.converged;
          break;
        }
        case Method::Pvw: {
          const FitReport r = run_pvw(data, truth.family, config, interaction);
          est.beta = r.params.beta;
          est.theta = r.params.theta;
          est.converged = r.converged;
          break;
        }
        case Method::Ols: {
          const FitReport r = run_ols_correction(data, truth.family, config, interaction);
          est.beta = r.params.beta;
          est.theta = r.params.theta;
          est.converged = r.converged;
          break;
        }
      }
      est.ok = true;
    } catch (const Error& e) {
      est.ok = false;
      est.error = e.what();
    }
    out.estimates.push_back(std::move(est));
  }
  return out;
}

const CellSummary& StudySummary::cell(Method method, std::string_view parameter) const {
  for (const auto& c : cells) {
    if (c.method == method && c.parameter == parameter) return c;
  }
  throw Error(ErrorKind::Configuration, "no summary cell for " + std::string(to_string(method)) +
                                            "/" + std::string(parameter));
}

StudySummary run_study(const ScenarioSpec& spec, const std::vector<Method>& methods,
                       const EmConfig& config) {
  check_methods(spec, methods);
  config.validate();
  const ScenarioTruth truth = scenario_truth(spec);
  const int reps = spec.replicates;

  std::vector<ReplicateResult> results(static_cast<std::size_t>(reps));
#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < reps; ++r) {
    results[static_cast<std::size_t>(r)] = run_replicate(spec, methods, config, r);
  }

  StudySummary summary;
  summary.spec = spec;
  summary.methods = methods;
  summary.em_config = study_em_config(spec, config);
  for (const auto& r : results) {
    summary.mean_p_m += r.p_m / reps;
    summary.mean_p_m_star += r.p_m_star / reps;
    summary.mean_sensitivity += r.avg_sensitivity / reps;
    summary.mean_specificity += r.avg_specificity / reps;
  }

  const std::vector<std::string> names = scored_parameter_names(spec);
  const Eigen::Index kb = truth.params.beta.size();
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    for (std::size_t k = 0; k < names.size(); ++k) {
      const auto idx = static_cast<Eigen::Index>(k);
      const double target = idx < kb ? truth.params.beta[idx] : truth.params.theta[idx - kb];
      CellSummary cell;
      cell.method = methods[mi];
      cell.parameter = names[k];
      cell.truth = target;
      std::vector<double> values;
      int converged = 0;
      for (const auto& r : results) {
        const MethodEstimate& e = r.estimates[mi];
        if (e.converged) ++converged;
        if (!e.ok) continue;
        values.push_back(idx < kb ? e.beta[idx] : e.theta[idx - kb]);
      }
      cell.successful = static_cast<int>(values.size());
      cell.convergence_rate = static_cast<double>(converged) / reps;
      if (!values.empty()) {
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        var /= static_cast<double>(values.size());
        cell.mean_estimate = mean;
        cell.bias = mean - target;
        // Equals sqrt(mean squared error) and is never below |bias| in floating point.
        cell.rmse = std::sqrt(cell.bias * cell.bias + var);
      } else {
        cell.mean_estimate = cell.bias = cell.rmse = std::nan("");
      }
      summary.cells.push_back(std::move(cell));
    }
  }
  summary.replicates = std::move(results);
  return summary;
}

}  // namespace mismed
