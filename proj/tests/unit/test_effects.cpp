#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "mismed/effects.hpp"
#include "mismed/errors.hpp"
#include "mismed/oracles.hpp"

using namespace mismed;

namespace {

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

ParameterSet setting_params(Eigen::Vector3d beta, Eigen::VectorXd theta, bool interaction) {
  ParameterSet p;
  p.beta = beta;
  p.gamma = Eigen::MatrixXd::Zero(2, 2);
  p.theta = theta;
  p.interaction = interaction;
  p.sigma2 = 1.0;
  return p;
}

EffectQuery query(double x, double xr, EffectScale s, int m = 0, double c = 0.0) {
  EffectQuery q;
  q.x = x;
  q.x_ref = xr;
  q.c = Eigen::VectorXd::Constant(1, c);
  q.m = m;
  q.scale = s;
  return q;
}

}  // namespace

TEST_SUITE("effects") {
  TEST_CASE("difference scale hand values") {
    const ParameterSet s1 = setting_params({1, -2, -2.5}, Eigen::Vector4d(1, 1.5, -0.2, -2), false);
    const EffectEstimates zero = effects_difference(s1, query(0.3, 0.3, EffectScale::Difference));
    CHECK(zero.cde == 0.0);
    CHECK(zero.nde == 0.0);
    CHECK(zero.nie == 0.0);
    for (int m : {0, 1}) {
      const EffectEstimates e = effects_difference(s1, query(1, 0, EffectScale::Difference, m, 0.7));
      CHECK(e.cde == doctest::Approx(1.5).epsilon(1e-14));
      CHECK(e.nde == doctest::Approx(1.5).epsilon(1e-14));
    }
    const EffectEstimates e = effects_difference(s1, query(1, 0, EffectScale::Difference));
    CHECK(e.nie == doctest::Approx(-2.0 * (logistic(-1.0) - logistic(1.0))).epsilon(1e-14));
    CHECK(e.nie == doctest::Approx(0.9242).epsilon(1e-4));
  }

  TEST_CASE("ratio scales hand values") {
    Eigen::VectorXd th(5);
    th << -3.0, 1.0, -0.2, -1.0, 0.5;
    const ParameterSet s5 = setting_params({1, -2, -2.5}, th, true);
    const EffectEstimates rr = effects_risk_ratio(s5, query(1, 0, EffectScale::RiskRatio, 1));
    CHECK(rr.cde == doctest::Approx(std::exp(1.5)).epsilon(1e-14));
    CHECK(rr.cde == doctest::Approx(4.4817).epsilon(1e-4));
    const EffectEstimates orr = effects_odds_ratio(s5, query(1, 0, EffectScale::OddsRatio, 1));
    CHECK(orr.cde == rr.cde);
    CHECK(orr.nde == rr.nde);
    CHECK(orr.nie == rr.nie);

    for (EffectScale s : {EffectScale::OddsRatio, EffectScale::RiskRatio}) {
      const EffectEstimates one = compute_effects(s5, query(0.4, 0.4, s));
      CHECK(one.cde == 1.0);
      CHECK(one.nde == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(one.nie == doctest::Approx(1.0).epsilon(1e-15));
    }
    ParameterSet noint = setting_params({1, -2, -2.5}, Eigen::Vector4d(-3, 1.2, 0.1, 0.7), false);
    const double a = effects_odds_ratio(noint, query(2, 0.5, EffectScale::OddsRatio, 0)).cde;
    const double b = effects_odds_ratio(noint, query(2, 0.5, EffectScale::OddsRatio, 1)).cde;
    CHECK(a == b);
    CHECK(a == doctest::Approx(std::exp(1.2 * 1.5)).epsilon(1e-14));
  }

  TEST_CASE("invariants") {
    Eigen::VectorXd th(5);
    th << 0.4, 1.1, -0.3, -0.8, 0.6;
    ParameterSet p = setting_params({0.2, -0.7, 0.5}, th, true);
    const EffectEstimates fwd = effects_difference(p, query(1.3, -0.4, EffectScale::Difference, 1, 0.6));
    const EffectEstimates rev = effects_difference(p, query(-0.4, 1.3, EffectScale::Difference, 1, 0.6));
    CHECK(fwd.cde == doctest::Approx(-rev.cde).epsilon(1e-14));

    ParameterSet noint = p;
    noint.interaction = false;
    noint.theta = th.head(4);
    const EffectEstimates f2 = effects_difference(noint, query(1.3, -0.4, EffectScale::Difference, 1, 0.6));
    const EffectEstimates r2 = effects_difference(noint, query(-0.4, 1.3, EffectScale::Difference, 1, 0.6));
    CHECK(f2.nde == doctest::Approx(-r2.nde).epsilon(1e-14));
    CHECK(f2.nie == doctest::Approx(-r2.nie).epsilon(1e-14));

    for (EffectScale s : {EffectScale::OddsRatio, EffectScale::RiskRatio}) {
      const EffectEstimates e = compute_effects(p, query(1.3, -0.4, s, 1, 0.6));
      CHECK(e.cde > 0.0);
      CHECK(e.nde > 0.0);
      CHECK(e.nie > 0.0);
      const double l1 = std::log(compute_effects(p, query(1.0, 0.0, s, 1)).cde);
      const double l3 = std::log(compute_effects(p, query(3.0, 0.0, s, 1)).cde);
      CHECK(l3 == doctest::Approx(3.0 * l1).epsilon(1e-13));
    }

    ParameterSet nomed = p;
    nomed.theta[3] = 0.0;
    nomed.theta[4] = 0.0;
    CHECK(effects_difference(nomed, query(1, 0, EffectScale::Difference)).nie == 0.0);
    CHECK(effects_odds_ratio(nomed, query(1, 0, EffectScale::OddsRatio)).nie == 1.0);
    CHECK(effects_risk_ratio(nomed, query(1, 0, EffectScale::RiskRatio)).nie == 1.0);

    ParameterSet moved = p;
    moved.beta << -1.0, 2.0, 0.3;
    for (EffectScale s : {EffectScale::Difference, EffectScale::OddsRatio, EffectScale::RiskRatio}) {
      CHECK(compute_effects(p, query(1, 0, s, 1)).cde == compute_effects(moved, query(1, 0, s, 1)).cde);
    }
  }

  TEST_CASE("scale names and query validation") {
    CHECK(parse_scale("or") == EffectScale::OddsRatio);
    CHECK(parse_scale("risk-ratio") == EffectScale::RiskRatio);
    CHECK(parse_scale("diff") == EffectScale::Difference);
    CHECK_THROWS_AS(parse_scale("log"), Error);
    CHECK(natural_scale(Family::Poisson) == EffectScale::RiskRatio);
    const ParameterSet p = setting_params({1, -2, -2.5}, Eigen::Vector4d(1, 1.5, -0.2, -2), false);
    EffectQuery q = query(1, 0, EffectScale::Difference);
    q.c = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(effects_difference(p, q), Error);
    q.c.resize(0);
    CHECK(effects_difference(p, q).nie == doctest::Approx(0.9242).epsilon(1e-4));
  }

  TEST_CASE("Monte-Carlo potential-outcome oracle") {
    const ParameterSet s1 = setting_params({1, -2, -2.5}, Eigen::Vector4d(1, 1.5, -0.2, -2), false);
    const EffectQuery qd = query(1, 0, EffectScale::Difference, 1);
    const auto mc = oracles::monte_carlo_effects(s1, qd, 200000, 5);
    const EffectEstimates ex = effects_difference(s1, qd);
    CHECK(std::abs(mc.estimate.nde - ex.nde) <= 3.0 * mc.se_nde + 1e-10);
    CHECK(std::abs(mc.estimate.nie - ex.nie) <= 3.0 * mc.se_nie + 1e-10);
    CHECK(std::abs(mc.estimate.cde - ex.cde) <= 3.0 * mc.se_cde + 1e-10);

    const auto same = oracles::monte_carlo_effects(s1, query(0.5, 0.5, EffectScale::Difference), 100000, 6);
    CHECK(std::abs(same.estimate.cde) < 1e-12);
    CHECK(std::abs(same.estimate.nie) < 1e-12);

    // Setting 2 values with the intercept lowered to make the outcome rare.
    const ParameterSet rare = setting_params({1, -2, -2.5}, Eigen::Vector4d(-6, 1.5, -0.2, -2), false);
    const EffectQuery qo = query(1, 0, EffectScale::OddsRatio);
    const auto mo = oracles::monte_carlo_effects(rare, qo, 1000000, 7);
    const EffectEstimates eo = effects_odds_ratio(rare, qo);
    CHECK(std::abs(std::log(mo.estimate.nde) - std::log(eo.nde)) <= 2.0 * mo.se_nde);
    CHECK(std::abs(std::log(mo.estimate.nie) - std::log(eo.nie)) <= 2.0 * mo.se_nie);

    // Outside the rare-outcome regime the odds-ratio expression for the NIE
    // is only an approximation and the Monte-Carlo value drifts away from it.
    const ParameterSet common = setting_params({1, -2, -2.5}, Eigen::Vector4d(1, 1.5, -0.2, -2), false);
    const auto mcomm = oracles::monte_carlo_effects(common, qo, 1000000, 8);
    const EffectEstimates ecomm = effects_odds_ratio(common, qo);
    CHECK(std::abs(std::log(mcomm.estimate.nie) - std::log(ecomm.nie)) > 4.0 * mcomm.se_nie);

    CHECK_THROWS_AS(oracles::monte_carlo_effects(s1, qd, 10, 1), Error);
  }
}
