#pragma once

#include <string_view>

#include <Eigen/Dense>

#include "mismed/model.hpp"

namespace mismed {

enum class EffectScale { Difference, OddsRatio, RiskRatio };

std::string_view to_string(EffectScale scale);
EffectScale parse_scale(std::string_view name);
// Difference <-> Normal, OddsRatio <-> Bernoulli, RiskRatio <-> Poisson.
EffectScale natural_scale(Family family);

// Change in exposure from x_ref to x, at confounder values c, with the
// controlled mediator level m on the indicator scale (1 = class 1).
struct EffectQuery {
  double x = 1.0;
  double x_ref = 0.0;
  Eigen::VectorXd c;
  int m = 0;
  EffectScale scale = EffectScale::Difference;
};

struct EffectEstimates {
  double cde = 0.0;
  double nde = 0.0;
  double nie = 0.0;
  EffectScale scale = EffectScale::Difference;
};

// Identity-link outcome:
//   CDE = (tX + tXM m)(x - x')
//   NDE = tX (x - x') + tXM (x - x') expit(b0 + bX x' + bC c)
//   NIE = (tM + tXM x) [expit(b0 + bX x + bC c) - expit(b0 + bX x' + bC c)]
EffectEstimates effects_difference(const ParameterSet& params, const EffectQuery& query);

// Logit outcome, rare-outcome odds ratios.
EffectEstimates effects_odds_ratio(const ParameterSet& params, const EffectQuery& query);

// Log-link outcome. Same expressions as the odds-ratio scale; for a log link
// they are the exact marginal risk ratios.
EffectEstimates effects_risk_ratio(const ParameterSet& params, const EffectQuery& query);

EffectEstimates compute_effects(const ParameterSet& params, const EffectQuery& query);

}  // namespace mismed
