#include "mismed/effects.hpp"

#include <cmath>
#include <string>

#include "mismed/errors.hpp"

namespace mismed {

namespace {

struct Terms {
  double theta_x, theta_m, theta_xm;
  double lp_x;      // b0 + bX x + bC c
  double lp_ref;    // b0 + bX x' + bC c
  double dx;
};

Terms terms(const ParameterSet& params, const EffectQuery& q) {
  if (!params.has_outcome()) throw Error(ErrorKind::Configuration, "effects need theta");
  const Eigen::Index p = params.beta.size() - 2;
  Eigen::VectorXd c = q.c.size() == 0 ? Eigen::VectorXd::Zero(p) : q.c;
  if (c.size() != p) {
    throw Error(ErrorKind::Configuration,
                "query has " + std::to_string(c.size()) + " confounder values, model has " +
                    std::to_string(p));
  }
  if (q.m != 0 && q.m != 1) throw Error(ErrorKind::Configuration, "m must be 0 or 1");
  const double bc = params.beta.tail(p).dot(c);
  return {params.theta[1],
          params.theta_m(),
          params.theta_xm(),
          params.beta[0] + params.beta[1] * q.x + bc,
          params.beta[0] + params.beta[1] * q.x_ref + bc,
          q.x - q.x_ref};
}

EffectEstimates ratio_scale(const ParameterSet& params, const EffectQuery& q, EffectScale scale) {
  const Terms t = terms(params, q);
  EffectEstimates e;
  e.scale = scale;
  e.cde = std::exp((t.theta_x + t.theta_xm * q.m) * t.dx);
  e.nde = std::exp(t.theta_x * q.x) * (1.0 + std::exp(t.theta_m + t.theta_xm * q.x + t.lp_ref)) /
          (std::exp(t.theta_x * q.x_ref) *
           (1.0 + std::exp(t.theta_m + t.theta_xm * q.x_ref + t.lp_ref)));
  e.nie = (1.0 + std::exp(t.lp_ref)) * (1.0 + std::exp(t.theta_m + t.theta_xm * q.x + t.lp_x)) /
          ((1.0 + std::exp(t.lp_x)) * (1.0 + std::exp(t.theta_m + t.theta_xm * q.x + t.lp_ref)));
  return e;
}

}  // namespace

std::string_view to_string(EffectScale scale) {
  switch (scale) {
    case EffectScale::Difference: return "difference";
    case EffectScale::OddsRatio: return "odds-ratio";
    case EffectScale::RiskRatio: return "risk-ratio";
  }
  return "unknown";
}

EffectScale parse_scale(std::string_view name) {
  if (name == "difference" || name == "diff") return EffectScale::Difference;
  if (name == "odds-ratio" || name == "or") return EffectScale::OddsRatio;
  if (name == "risk-ratio" || name == "rr") return EffectScale::RiskRatio;
  throw Error(ErrorKind::Configuration, "unknown effect scale '" + std::string(name) + "'");
}

EffectScale natural_scale(Family family) {
  switch (family) {
    case Family::Normal: return EffectScale::Difference;
    case Family::Bernoulli: return EffectScale::OddsRatio;
    case Family::Poisson: return EffectScale::RiskRatio;
  }
  return EffectScale::Difference;
}

EffectEstimates effects_difference(const ParameterSet& params, const EffectQuery& query) {
  const Terms t = terms(params, query);
  EffectEstimates e;
  e.scale = EffectScale::Difference;
  e.cde = (t.theta_x + t.theta_xm * query.m) * t.dx;
  e.nde = t.theta_x * t.dx + t.theta_xm * t.dx * expit(t.lp_ref);
  e.nie = (t.theta_m + t.theta_xm * query.x) * (expit(t.lp_x) - expit(t.lp_ref));
  return e;
}

EffectEstimates effects_odds_ratio(const ParameterSet& params, const EffectQuery& query) {
  return ratio_scale(params, query, EffectScale::OddsRatio);
}

EffectEstimates effects_risk_ratio(const ParameterSet& params, const EffectQuery& query) {
  return ratio_scale(params, query, EffectScale::RiskRatio);
}

EffectEstimates compute_effects(const ParameterSet& params, const EffectQuery& query) {
  switch (query.scale) {
    case EffectScale::Difference: return effects_difference(params, query);
    case EffectScale::OddsRatio: return effects_odds_ratio(params, query);
    case EffectScale::RiskRatio: return effects_risk_ratio(params, query);
  }
  throw Error(ErrorKind::Configuration, "unknown effect scale");
}

}  // namespace mismed
