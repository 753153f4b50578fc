#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "mismed/errors.hpp"
#include "mismed/ols.hpp"

using namespace mismed;

namespace {

ParameterSet rates(double sens_logit, double fp_logit) {
  ParameterSet p = fixtures::default_params(Family::Normal, false);
  p.gamma.setZero();
  p.gamma(0, 0) = sens_logit;
  p.gamma(1, 0) = fp_logit;
  p.theta.resize(0);
  p.sigma2.reset();
  return p;
}

}  // namespace

TEST_SUITE("ols") {
  TEST_CASE("non-Normal outcomes are rejected") {
    const ParameterSet p = fixtures::default_params(Family::Bernoulli, false);
    const auto d = fixtures::draw(p, Family::Bernoulli, 200, 1);
    try {
      run_ols_correction(d.data, Family::Bernoulli, EmConfig{}, false);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::UnsupportedFamily);
    }
  }

  TEST_CASE("zero false rates reproduce naive least squares") {
    for (bool inter : {false, true}) {
      const ParameterSet p = fixtures::default_params(Family::Normal, inter);
      const auto d = fixtures::draw(p, Family::Normal, 2000, 2);
      const FitReport r = ols_correct_outcome(rates(60.0, -60.0), d.data, inter);
      const NaiveFit naive = fit_naive(d.data, Family::Normal, inter);
      CHECK((r.params.theta - naive.theta_star).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(*r.params.sigma2 == doctest::Approx(*naive.sigma2).epsilon(1e-10));
      REQUIRE(!r.diagnostics.empty());
    }
  }

  TEST_CASE("scaling Y scales every coefficient") {
    const ParameterSet p = fixtures::default_params(Family::Normal, true);
    const auto d = fixtures::draw(p, Family::Normal, 2000, 3);
    const MediationDataset scaled(d.data.x(), d.data.c(), d.data.z(), d.data.m_star(),
                                  3.5 * d.data.y());
    const ParameterSet mis = rates(1.8, -1.5);
    const FitReport a = ols_correct_outcome(mis, d.data, true);
    const FitReport b = ols_correct_outcome(mis, scaled, true);
    CHECK(((b.params.theta - 3.5 * a.params.theta).array().abs() /
           a.params.theta.array().abs().max(1.0))
              .maxCoeff() < 1e-12);
  }

  TEST_CASE("an uninformative observation model is infeasible") {
    const ParameterSet p = fixtures::default_params(Family::Normal, false);
    const auto d = fixtures::draw(p, Family::Normal, 200, 4);
    std::vector<int> mostly2(200, 2);
    for (int i = 0; i < 200; i += 10) mostly2[static_cast<std::size_t>(i)] = 1;
    const MediationDataset weak = fixtures::with_mediator(d.data, mostly2);
    try {
      ols_correct_outcome(rates(std::log(0.55 / 0.45), std::log(0.45 / 0.55)), weak, false);
      FAIL("expected correction-infeasible");
    } catch (const CorrectionInfeasibleError& e) {
      CHECK(e.eigenvalue() < 0.0);
      CHECK(std::string(e.what()).find("eigenvalue") != std::string::npos);
    }
  }

  TEST_CASE("agrees with EM on a Setting 1 replicate") {
    const SimulatedData sim = generate_dataset(ScenarioSpec::defaults(1, Level::Medium), 2);
    const FitReport ols = run_ols_correction(sim.data, Family::Normal, EmConfig{}, false);
    const FitReport em = run_em(sim.data, Family::Normal, EmConfig{}, false);
    CHECK(ols.method == "ols");
    CHECK((ols.params.theta - em.params.theta).cwiseAbs().maxCoeff() < 0.1);
  }
}
