#include "mismed/oracles.hpp"

#include <cmath>
#include <random>

#include "mismed/errors.hpp"

namespace mismed::oracles {

namespace {

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

double density(Family family, double y, double eta, double sigma2) {
  switch (family) {
    case Family::Normal: {
      const double r = y - eta;
      return std::exp(-r * r / (2.0 * sigma2)) / std::sqrt(2.0 * M_PI * sigma2);
    }
    case Family::Bernoulli: {
      const double p = logistic(eta);
      return y == 1.0 ? p : 1.0 - p;
    }
    case Family::Poisson: {
      const double mu = std::exp(eta);
      return std::exp(-mu) * std::pow(mu, y) / std::tgamma(y + 1.0);
    }
  }
  return 0.0;
}

double row_dot(const Eigen::VectorXd& coef, double first, const Eigen::RowVectorXd& rest) {
  double s = coef[0] + first;
  for (Eigen::Index k = 0; k < rest.size(); ++k) s += coef[k + 1] * rest[k];
  return s;
}

}  // namespace

OracleReport compare(std::string name, const std::vector<double>& reference,
                     const std::vector<double>& actual, double tolerance) {
  if (!(tolerance > 0.0)) throw Error(ErrorKind::Configuration, "oracle tolerance must be > 0");
  if (reference.size() != actual.size()) {
    throw Error(ErrorKind::Configuration, "oracle comparison size mismatch");
  }
  OracleReport r{std::move(name), reference, tolerance, true, 0.0};
  for (std::size_t k = 0; k < reference.size(); ++k) {
    const double d = std::abs(reference[k] - actual[k]);
    if (!(d <= tolerance)) r.pass = false;
    if (!(d <= r.max_abs_diff)) r.max_abs_diff = d;
  }
  return r;
}

Responsibilities brute_force_posterior(const ParameterSet& params, const MediationDataset& data,
                                       Family family) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const bool with_y = params.theta.size() > 0;
  const double s2 = params.sigma2.value_or(1.0);
  Responsibilities out;
  out.r.resize(n, 2);
  out.loglik = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double eta_m = params.beta[0] + params.beta[1] * data.x()[i];
    for (Eigen::Index k = 0; k < p; ++k) eta_m += params.beta[2 + k] * data.c()(i, k);
    const double pm1 = logistic(eta_m);
    const bool observed_one = data.m_star()[static_cast<std::size_t>(i)] == 1;

    double joint[2];
    for (int j = 0; j < 2; ++j) {
      const double prior = j == 0 ? pm1 : 1.0 - pm1;
      double p_obs_one = 0.0;
      if (!(j == 1 && params.perfect_specificity)) {
        p_obs_one = logistic(row_dot(params.gamma.row(j).transpose(), 0.0, data.z().row(i)));
      }
      double f = observed_one ? p_obs_one : 1.0 - p_obs_one;
      if (with_y) {
        const double m = j == 0 ? 1.0 : 0.0;
        double eta = params.theta[0] + params.theta[1] * data.x()[i];
        for (Eigen::Index k = 0; k < p; ++k) eta += params.theta[2 + k] * data.c()(i, k);
        eta += params.theta[2 + p] * m;
        if (params.interaction) eta += params.theta[3 + p] * m * data.x()[i];
        f *= density(family, data.y()[i], eta, s2);
      }
      joint[j] = prior * f;
    }
    const double total = joint[0] + joint[1];
    if (!(total > 0.0) || !std::isfinite(total)) {
      throw Error(ErrorKind::Evaluation,
                  "brute-force posterior underflowed at subject " + std::to_string(i));
    }
    out.r(i, 0) = joint[0] / total;
    out.r(i, 1) = joint[1] / total;
    out.loglik += std::log(total);
  }
  return out;
}

NewtonResult independent_newton_glm(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                                    const Eigen::VectorXd& weights, Family family) {
  const Eigen::Index k = design.cols();
  NewtonResult res;
  if (family == Family::Normal) {
    const Eigen::VectorXd sw = weights.cwiseSqrt();
    const Eigen::MatrixXd a = sw.asDiagonal() * design;
    const Eigen::VectorXd b = sw.cwiseProduct(response);
    res.coefficients = a.colPivHouseholderQr().solve(b);
    res.iterations = 1;
    const Eigen::VectorXd grad = design.transpose() *
                                 weights.cwiseProduct(response - design * res.coefficients);
    res.max_abs_gradient = grad.cwiseAbs().maxCoeff();
    return res;
  }

  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  if (family == Family::Poisson) {
    b[0] = std::log(weights.dot(response) / weights.sum());
  }
  for (int it = 1; it <= 200; ++it) {
    const Eigen::VectorXd eta = design * b;
    Eigen::VectorXd mean(eta.size()), var(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      if (family == Family::Bernoulli) {
        mean[i] = logistic(eta[i]);
        var[i] = mean[i] * (1.0 - mean[i]);
      } else {
        mean[i] = std::exp(eta[i]);
        var[i] = mean[i];
      }
    }
    const Eigen::VectorXd grad = design.transpose() * weights.cwiseProduct(response - mean);
    const Eigen::MatrixXd hess =
        design.transpose() * weights.cwiseProduct(var).asDiagonal() * design;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    if (!step.allFinite()) {
      throw Error(ErrorKind::Evaluation, "independent Newton diverged");
    }
    b += step;
    res.iterations = it;
    if (step.cwiseAbs().maxCoeff() < 1e-13 * (1.0 + b.cwiseAbs().maxCoeff())) break;
    if (it == 200) throw Error(ErrorKind::Evaluation, "independent Newton did not settle");
  }
  const Eigen::VectorXd eta = design * b;
  Eigen::VectorXd resid(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    resid[i] = response[i] - (family == Family::Bernoulli ? logistic(eta[i]) : std::exp(eta[i]));
  }
  res.coefficients = b;
  res.max_abs_gradient = (design.transpose() * weights.cwiseProduct(resid)).cwiseAbs().maxCoeff();
  return res;
}

namespace {

// Poisson draw by CDF inversion so paired counterfactuals share one uniform.
double poisson_inverse(double u, double mu) {
  double k = 0.0;
  double pk = std::exp(-mu);
  double cdf = pk;
  while (u > cdf && pk > 0.0) {
    k += 1.0;
    pk *= mu / k;
    cdf += pk;
  }
  return k;
}

struct Contrast {
  double value = 0.0;
  double se = 0.0;
};

// a_i, b_i paired draws of Y under two regimes.
Contrast contrast(const std::vector<double>& a, const std::vector<double>& b, EffectScale scale) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double ga = 1.0, gb = 1.0;
  Contrast c;
  switch (scale) {
    case EffectScale::Difference:
      c.value = ma - mb;
      break;
    case EffectScale::OddsRatio:
      c.value = std::exp(std::log(ma / (1.0 - ma)) - std::log(mb / (1.0 - mb)));
      ga = 1.0 / (ma * (1.0 - ma));
      gb = 1.0 / (mb * (1.0 - mb));
      break;
    case EffectScale::RiskRatio:
      c.value = ma / mb;
      ga = 1.0 / ma;
      gb = 1.0 / mb;
      break;
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double g = ga * (a[i] - ma) - gb * (b[i] - mb);
    ss += g * g;
  }
  c.se = std::sqrt(ss / (n - 1.0) / n);
  return c;
}

}  // namespace

MonteCarloEffects monte_carlo_effects(const ParameterSet& params, const EffectQuery& query,
                                      long draws, std::uint64_t seed) {
  if (draws < 100000) throw Error(ErrorKind::Configuration, "Monte Carlo needs at least 1e5 draws");
  const Eigen::Index p = params.beta.size() - 2;
  Eigen::VectorXd c = query.c.size() == 0 ? Eigen::VectorXd::Zero(p) : query.c;
  if (c.size() != p) throw Error(ErrorKind::Configuration, "confounder vector has wrong length");

  double med_lin = params.beta[0];
  double out_lin = params.theta[0];
  for (Eigen::Index k = 0; k < p; ++k) {
    med_lin += params.beta[2 + k] * c[k];
    out_lin += params.theta[2 + k] * c[k];
  }
  const double t_x = params.theta[1];
  const double t_m = params.theta[2 + p];
  const double t_xm = params.interaction ? params.theta[3 + p] : 0.0;
  const double sd = std::sqrt(params.sigma2.value_or(1.0));
  const double pm_x = logistic(med_lin + params.beta[1] * query.x);
  const double pm_ref = logistic(med_lin + params.beta[1] * query.x_ref);

  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  auto draw_y = [&](double x, double m, double u, double e) {
    const double eta = out_lin + t_x * x + (t_m + t_xm * x) * m;
    switch (query.scale) {
      case EffectScale::Difference:
        return eta + sd * e;
      case EffectScale::OddsRatio:
        return u < logistic(eta) ? 1.0 : 0.0;
      case EffectScale::RiskRatio:
        return poisson_inverse(u, std::exp(eta));
    }
    return 0.0;
  };

  const auto n = static_cast<std::size_t>(draws);
  std::vector<double> y_x_m(n), y_ref_m(n), y_x_mref(n), y_ref_mref(n), y_x_mx(n);
  const double m_fixed = query.m;
  for (std::size_t i = 0; i < n; ++i) {
    const double um = unif(gen);
    const double m_ref = um < pm_ref ? 1.0 : 0.0;
    const double m_x = um < pm_x ? 1.0 : 0.0;
    const double uy = unif(gen);
    const double e = query.scale == EffectScale::Difference ? normal(gen) : 0.0;
    y_x_m[i] = draw_y(query.x, m_fixed, uy, e);
    y_ref_m[i] = draw_y(query.x_ref, m_fixed, uy, e);
    y_x_mref[i] = draw_y(query.x, m_ref, uy, e);
    y_ref_mref[i] = draw_y(query.x_ref, m_ref, uy, e);
    y_x_mx[i] = draw_y(query.x, m_x, uy, e);
  }
  const Contrast cde = contrast(y_x_m, y_ref_m, query.scale);
  const Contrast nde = contrast(y_x_mref, y_ref_mref, query.scale);
  const Contrast nie = contrast(y_x_mx, y_x_mref, query.scale);
  MonteCarloEffects out;
  out.estimate = EffectEstimates{cde.value, nde.value, nie.value, query.scale};
  out.se_cde = cde.se;
  out.se_nde = nde.se;
  out.se_nie = nie.se;
  return out;
}

}  // namespace mismed::oracles
