#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "mismed/em.hpp"
#include "mismed/errors.hpp"
#include "mismed/oracles.hpp"

using namespace mismed;

namespace {

Responsibilities hard(const std::vector<int>& m) {
  Responsibilities r;
  r.r.resize(static_cast<Eigen::Index>(m.size()), 2);
  for (std::size_t i = 0; i < m.size(); ++i) {
    r.r(static_cast<Eigen::Index>(i), 0) = m[i] == 1 ? 1.0 : 0.0;
    r.r(static_cast<Eigen::Index>(i), 1) = m[i] == 1 ? 0.0 : 1.0;
  }
  return r;
}

GlmFit subset_logistic(const MediationDataset& d, const std::vector<int>& m, int cls) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i] == cls) rows.push_back(static_cast<Eigen::Index>(i));
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), 1 + d.q());
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index k = 0; k < x.rows(); ++k) {
    x(k, 0) = 1.0;
    x.row(k).tail(d.q()) = d.z().row(rows[static_cast<std::size_t>(k)]);
    y[k] = d.m_star_is_one()[rows[static_cast<std::size_t>(k)]];
  }
  std::vector<std::string> names{"intercept"};
  for (Eigen::Index k = 0; k < d.q(); ++k) names.push_back("z" + std::to_string(k));
  return fit_weighted_glm(DesignMatrix(x, names), y, Eigen::VectorXd::Ones(x.rows()),
                          OutcomeFamily::bernoulli());
}

}  // namespace

TEST_SUITE("em") {
  TEST_CASE("e-step edge cases") {
    ParameterSet p = fixtures::default_params(Family::Bernoulli, false);
    const auto d = fixtures::draw(p, Family::Bernoulli, 30, 1);
    ParameterSet sym = p;
    sym.beta.setZero();
    sym.gamma.setZero();
    sym.theta.setZero();
    const Responsibilities half = e_step(sym, d.data, Family::Bernoulli);
    CHECK((half.r.array() - 0.5).abs().maxCoeff() < 1e-15);

    ParameterSet sharp = p;
    sharp.gamma.setZero();
    sharp.gamma(0, 0) = 30.0;
    sharp.gamma(1, 0) = -30.0;
    const Responsibilities pinned = e_step(sharp, d.data, Family::Bernoulli);
    for (Eigen::Index i = 0; i < 30; ++i) {
      const double expect = d.data.m_star()[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0;
      CHECK(std::abs(pinned.r(i, 0) - expect) < 1e-9);
    }
  }

  TEST_CASE("e-step matches the brute-force Bayes oracle on 5 subjects") {
    for (Family f : {Family::Normal, Family::Bernoulli, Family::Poisson}) {
      const ParameterSet p = fixtures::default_params(f, true);
      const auto d = fixtures::draw(p, f, 5, 2);
      const Responsibilities fast = e_step(p, d.data, f);
      const Responsibilities slow = oracles::brute_force_posterior(p, d.data, f);
      CHECK((fast.r - slow.r).cwiseAbs().maxCoeff() < 1e-12);
      const Eigen::VectorXd sums = fast.r.rowwise().sum();
      CHECK((sums.array() - 1.0).abs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("m-step with hard labels is the complete-data fit") {
    for (Family f : {Family::Normal, Family::Poisson}) {
      const ParameterSet p = fixtures::default_params(f, true);
      const auto d = fixtures::draw(p, f, 3000, 3);
      const ParameterSet m = m_step(hard(d.true_m), d.data, f, true);

      const Eigen::VectorXd ind = fixtures::indicator(d.true_m);
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(3000);
      const auto beta = fit_weighted_glm(mediator_design(d.data), ind, ones, OutcomeFamily::bernoulli());
      const auto theta =
          fit_weighted_glm(outcome_design(d.data, ind, true), d.data.y(), ones, OutcomeFamily::of(f));
      CHECK((m.beta - beta.coefficients).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((m.theta - theta.coefficients).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((m.gamma.row(0).transpose() - subset_logistic(d.data, d.true_m, 1).coefficients)
                .cwiseAbs()
                .maxCoeff() < 1e-8);
      CHECK((m.gamma.row(1).transpose() - subset_logistic(d.data, d.true_m, 2).coefficients)
                .cwiseAbs()
                .maxCoeff() < 1e-8);
      if (f == Family::Normal) CHECK(*m.sigma2 == doctest::Approx(*theta.sigma2).epsilon(1e-9));
    }
  }

  TEST_CASE("m-step with equal responsibilities gives identical gamma rows") {
    const ParameterSet p = fixtures::default_params(Family::Normal, false);
    const auto d = fixtures::draw(p, Family::Normal, 500, 4);
    Responsibilities r;
    r.r = Eigen::MatrixXd::Constant(500, 2, 0.5);
    const ParameterSet m = m_step(r, d.data, Family::Normal, false);
    CHECK((m.gamma.row(0) - m.gamma.row(1)).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("one EM update from the truth does not lower the likelihood") {
    const ParameterSet p = fixtures::default_params(Family::Normal, false);
    const auto d = fixtures::draw(p, Family::Normal, 5000, 5);
    const ParameterSet next = m_step(e_step(p, d.data, Family::Normal), d.data, Family::Normal, false);
    CHECK(observed_data_loglik(next, d.data, Family::Normal) >=
          observed_data_loglik(p, d.data, Family::Normal) - 1e-10);
  }

  TEST_CASE("correct_label_switching") {
    const ParameterSet base = fixtures::default_params(Family::Normal, false);
    const auto d = fixtures::draw(base, Family::Normal, 200, 6);
    ParameterSet p = base;
    p.gamma.setZero();
    p.gamma(0, 0) = std::log(0.2 / 0.8);  // sensitivity 0.2
    p.gamma(1, 0) = std::log(0.7 / 0.3);  // false-positive rate 0.7, specificity 0.3
    const LabelCorrection lc = correct_label_switching(p, d.data);
    CHECK(lc.swapped);
    CHECK(lc.after.sensitivity == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(lc.after.specificity == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(std::abs(observed_data_loglik(p, d.data, Family::Normal) -
                   observed_data_loglik(lc.params, d.data, Family::Normal)) < 1e-10);

    const LabelCorrection same = correct_label_switching(base, d.data);
    CHECK(!same.swapped);
    CHECK(same.params.beta == base.beta);
    CHECK(same.params.gamma == base.gamma);
    CHECK(same.params.theta == base.theta);

    ParameterSet flat = base;
    flat.gamma.setZero();
    CHECK_THROWS_AS(correct_label_switching(flat, d.data), Error);
  }

  TEST_CASE("initialisation strategies") {
    const ParameterSet p = fixtures::default_params(Family::Bernoulli, false);
    const auto d = fixtures::draw(p, Family::Bernoulli, 2000, 7);
    EmConfig cfg;
    const ParameterSet init = initialize(d.data, Family::Bernoulli, cfg, false);
    const SensSpec ss = average_sens_spec(init, d.data);
    CHECK(ss.sensitivity + ss.specificity > 1.0);
    CHECK(init.gamma(0, 0) == 2.0);
    CHECK(init.gamma(1, 0) == -2.0);

    cfg.init = InitStrategy::UserSupplied;
    cfg.start = p;
    const ParameterSet user = initialize(d.data, Family::Bernoulli, cfg, false);
    CHECK(user.beta == p.beta);
    CHECK(user.gamma == p.gamma);
    CHECK(user.theta == p.theta);
    cfg.max_iterations = 1;
    cfg.acceleration = Acceleration::None;
    const FitReport one = run_em(d.data, Family::Bernoulli, cfg, false);
    CHECK(one.loglik_trace.front() == observed_data_loglik(p, d.data, Family::Bernoulli));

    EmConfig rnd;
    rnd.init = InitStrategy::RandomPerturbation;
    rnd.seed = 99;
    const FitReport a = run_em(d.data, Family::Bernoulli, rnd, false);
    const FitReport b = run_em(d.data, Family::Bernoulli, rnd, false);
    CHECK(a.loglik_trace == b.loglik_trace);
    CHECK(a.params.theta == b.params.theta);
  }

  TEST_CASE("plain EM is monotone and SQUAREM ends no lower than it starts") {
    for (Family f : {Family::Normal, Family::Bernoulli, Family::Poisson}) {
      const ParameterSet p = fixtures::default_params(f, false);
      const auto d = fixtures::draw(p, f, 1500, 8);
      EmConfig plain;
      plain.acceleration = Acceleration::None;
      plain.max_iterations = 300;
      const FitReport r = run_em(d.data, f, plain, false);
      for (std::size_t k = 1; k < r.loglik_trace.size(); ++k) {
        REQUIRE(r.loglik_trace[k] >= r.loglik_trace[k - 1] - 1e-10);
      }
      const FitReport s = run_em(d.data, f, EmConfig{}, false);
      CHECK(s.loglik_trace.back() >= s.loglik_trace.front());
      CHECK(s.converged);
      const std::size_t t = s.loglik_trace.size();
      CHECK(std::abs(s.loglik_trace[t - 1] - s.loglik_trace[t - 2]) < 1e-7);
    }
  }

  TEST_CASE("run_em recovers from a label-flipped start") {
    const ParameterSet p = fixtures::default_params(Family::Normal, false);
    const auto d = fixtures::draw(p, Family::Normal, 3000, 9);
    EmConfig cfg;
    cfg.init = InitStrategy::UserSupplied;
    cfg.start = swap_labels(initialize(d.data, Family::Normal, EmConfig{}, false));
    const FitReport r = run_em(d.data, Family::Normal, cfg, false);
    CHECK(r.label_swap_applied);
    CHECK(*r.average_sensitivity + *r.average_specificity > 1.0);
    CHECK(r.params.theta_m() < 0.0);
  }

  TEST_CASE("zero misclassification: EM theta near the complete-data fit") {
    const ScenarioSpec spec = ScenarioSpec::defaults(1, Level::Medium);
    const SimulatedData sim = generate_dataset(spec, 0);
    const MediationDataset clean = fixtures::with_mediator(sim.data, sim.true_m);
    const NaiveFit complete = fit_naive(clean, Family::Normal, false);
    const FitReport r = run_em(clean, Family::Normal, EmConfig{}, false);
    CHECK((r.params.theta - complete.theta_star).cwiseAbs().maxCoeff() < 0.05);
  }

  TEST_CASE("perfect-specificity mode leaves the false-positive row out") {
    ParameterSet p = fixtures::default_params(Family::Bernoulli, false);
    p.perfect_specificity = true;
    const auto d = fixtures::draw(p, Family::Bernoulli, 3000, 10);
    EmConfig cfg;
    cfg.perfect_specificity = true;
    const FitReport r = run_em(d.data, Family::Bernoulli, cfg, false);
    CHECK(r.params.perfect_specificity);
    CHECK(*r.average_specificity == 1.0);
    CHECK(!r.label_swap_applied);
    CHECK_THROWS_AS(swap_labels(r.params), Error);
  }

  TEST_CASE("configuration validation") {
    EmConfig bad;
    bad.loglik_tolerance = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = EmConfig{};
    bad.max_iterations = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = EmConfig{};
    bad.init = InitStrategy::UserSupplied;
    CHECK_THROWS_AS(bad.validate(), Error);
  }

  TEST_CASE("iteration cap returns the full trace unconverged") {
    const ParameterSet p = fixtures::default_params(Family::Normal, false);
    const auto d = fixtures::draw(p, Family::Normal, 1000, 11);
    EmConfig cfg;
    cfg.max_iterations = 2;
    cfg.acceleration = Acceleration::None;
    const FitReport r = run_em(d.data, Family::Normal, cfg, false);
    CHECK(!r.converged);
    CHECK(r.iterations == 2);
    CHECK(r.loglik_trace.size() == 3);
  }
}
