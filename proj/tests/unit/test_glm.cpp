#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mismed/errors.hpp"
#include "mismed/glm.hpp"
#include "mismed/oracles.hpp"

using namespace mismed;

namespace {

struct Problem {
  DesignMatrix design;
  Eigen::VectorXd y;
  Eigen::VectorXd w;
};

Problem random_problem(Family family, Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd x(n, k);
  x.col(0).setOnes();
  for (Eigen::Index j = 1; j < k; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = normal(gen);
  Eigen::VectorXd b(k);
  for (auto& e : b) e = 0.5 * normal(gen);
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double eta = x.row(i).dot(b);
    w[i] = 0.2 + unif(gen);
    switch (family) {
      case Family::Normal: y[i] = eta + normal(gen); break;
      case Family::Bernoulli: y[i] = unif(gen) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0; break;
      case Family::Poisson: y[i] = std::poisson_distribution<int>(std::exp(eta))(gen); break;
    }
  }
  std::vector<std::string> names{"intercept"};
  for (Eigen::Index j = 1; j < k; ++j) names.push_back("x" + std::to_string(j));
  return {DesignMatrix(x, names), y, w};
}

}  // namespace

TEST_SUITE("glm") {
  TEST_CASE("exact linear Normal data gives exact coefficients") {
    Eigen::MatrixXd x(6, 2);
    x.col(0).setOnes();
    x.col(1) << -2, -1, 0, 1, 2.5, 4;
    const Eigen::VectorXd y = (2.0 + 3.0 * x.col(1).array()).matrix();
    const auto fit = fit_weighted_glm(DesignMatrix(x, {"intercept", "x"}), y,
                                      Eigen::VectorXd::Ones(6), OutcomeFamily::normal());
    CHECK(std::abs(fit.coefficients[0] - 2.0) < 1e-10);
    CHECK(std::abs(fit.coefficients[1] - 3.0) < 1e-10);
    CHECK(fit.converged);
  }

  TEST_CASE("8-row Bernoulli fit matches the independent Newton oracle") {
    Eigen::MatrixXd x(8, 2);
    x.col(0).setOnes();
    x.col(1) << -1.5, -1.0, -0.3, 0.1, 0.4, 0.9, 1.3, 2.0;
    Eigen::VectorXd y(8);
    y << 0, 0, 1, 0, 1, 0, 1, 1;
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(8);
    const auto fit = fit_weighted_glm(DesignMatrix(x, {"intercept", "x"}), y, w,
                                      OutcomeFamily::bernoulli());
    const auto ref = oracles::independent_newton_glm(x, y, w, Family::Bernoulli);
    CHECK((fit.coefficients - ref.coefficients).cwiseAbs().maxCoeff() < 1e-8);
  }

  TEST_CASE("zero-weight rows are inert") {
    for (Family f : {Family::Normal, Family::Bernoulli, Family::Poisson}) {
      const Problem pr = random_problem(f, 60, 3, 5);
      Eigen::VectorXd w = pr.w;
      w.tail(20).setZero();
      const auto full = fit_weighted_glm(pr.design, pr.y, w, OutcomeFamily::of(f));
      const DesignMatrix top(pr.design.values().topRows(40), pr.design.names());
      const auto cut =
          fit_weighted_glm(top, pr.y.head(40), pr.w.head(40), OutcomeFamily::of(f));
      CHECK((full.coefficients - cut.coefficients).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(full.log_likelihood == doctest::Approx(cut.log_likelihood).epsilon(1e-12));
    }
  }

  TEST_CASE("log_likelihood hand values") {
    const DesignMatrix one(Eigen::MatrixXd::Ones(1, 1), {"intercept"});
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    CHECK(log_likelihood(one, Eigen::VectorXd::Ones(1), w, OutcomeFamily::bernoulli(), zero) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-14));
    const Eigen::VectorXd eta = Eigen::VectorXd::Constant(1, 0.7);
    CHECK(log_likelihood(one, eta, w, OutcomeFamily::normal(1.0), eta) ==
          doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
    CHECK(log_likelihood(one, Eigen::VectorXd::Constant(1, 2.0), w, OutcomeFamily::poisson(),
                         zero) == doctest::Approx(-1.0 - std::log(2.0)).epsilon(1e-14));
    CHECK(-1.0 - std::log(2.0) == doctest::Approx(-1.6931).epsilon(1e-4));
  }

  TEST_CASE("non-finite linear predictor is an evaluation error") {
    const DesignMatrix one(Eigen::MatrixXd::Ones(1, 1), {"intercept"});
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
    const Eigen::VectorXd bad = Eigen::VectorXd::Constant(1, std::nan(""));
    try {
      log_likelihood(one, w, w, OutcomeFamily::poisson(), bad);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Evaluation);
    }
  }

  TEST_CASE("Normal fit equals the normal-equation solution") {
    for (int s = 0; s < 5; ++s) {
      const Problem pr = random_problem(Family::Normal, 200, 4, 100 + s);
      const auto fit = fit_weighted_glm(pr.design, pr.y, pr.w, OutcomeFamily::normal());
      const Eigen::MatrixXd& x = pr.design.values();
      const Eigen::VectorXd b =
          (x.transpose() * pr.w.asDiagonal() * x).ldlt().solve(x.transpose() * pr.w.cwiseProduct(pr.y));
      CHECK(((fit.coefficients - b).array().abs() / b.array().abs().max(1.0)).maxCoeff() < 1e-10);
      const double wrss = pr.w.dot((pr.y - x * b).cwiseAbs2());
      CHECK(*fit.sigma2 == doctest::Approx(wrss / pr.w.sum()).epsilon(1e-10));
    }
  }

  TEST_CASE("doubling weights, permuting rows and the zero start") {
    for (Family f : {Family::Normal, Family::Bernoulli, Family::Poisson}) {
      const Problem pr = random_problem(f, 150, 3, 9);
      const auto base = fit_weighted_glm(pr.design, pr.y, pr.w, OutcomeFamily::of(f));
      const auto doubled = fit_weighted_glm(pr.design, pr.y, 2.0 * pr.w, OutcomeFamily::of(f));
      CHECK((base.coefficients - doubled.coefficients).cwiseAbs().maxCoeff() < 1e-9);

      Eigen::PermutationMatrix<Eigen::Dynamic> perm(150);
      perm.setIdentity();
      std::mt19937_64 gen(3);
      std::shuffle(perm.indices().data(), perm.indices().data() + 150, gen);
      const DesignMatrix px(perm * pr.design.values(), pr.design.names());
      const auto permuted =
          fit_weighted_glm(px, perm * pr.y, perm * pr.w, OutcomeFamily::of(f));
      CHECK((base.coefficients - permuted.coefficients).cwiseAbs().maxCoeff() < 1e-10);

      OutcomeFamily fam = OutcomeFamily::of(f);
      if (f == Family::Normal) fam.sigma2 = base.sigma2;
      CHECK(base.log_likelihood >=
            log_likelihood(pr.design, pr.y, pr.w, fam, Eigen::VectorXd::Zero(3)));
    }
  }

  TEST_CASE("aliased columns are named in the rank-deficiency error") {
    Eigen::MatrixXd x(10, 3);
    x.col(0).setOnes();
    for (int i = 0; i < 10; ++i) x(i, 1) = i;
    x.col(2) = 2.0 * x.col(1);
    const Eigen::VectorXd y = x.col(1);
    try {
      fit_weighted_glm(DesignMatrix(x, {"intercept", "a", "b"}), y, Eigen::VectorXd::Ones(10),
                       OutcomeFamily::normal());
      FAIL("expected rank deficiency");
    } catch (const RankDeficiencyError& e) {
      CHECK(e.columns() == std::vector<std::string>{"b"});
    }
  }

  TEST_CASE("complete separation attaches a warning") {
    Eigen::MatrixXd x(8, 2);
    x.col(0).setOnes();
    x.col(1) << -4, -3, -2, -1, 1, 2, 3, 4;
    Eigen::VectorXd y(8);
    y << 0, 0, 0, 0, 1, 1, 1, 1;
    const auto fit = fit_weighted_glm(DesignMatrix(x, {"intercept", "x"}), y,
                                      Eigen::VectorXd::Ones(8), OutcomeFamily::bernoulli());
    REQUIRE(!fit.warnings.empty());
    CHECK(fit.warnings[0].find("separation") != std::string::npos);
  }

  TEST_CASE("design and input validation") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 2);
    x(1, 0) = 2.0;
    CHECK_THROWS_AS(DesignMatrix(x, {"a", "b"}), Error);
    CHECK_THROWS_AS(DesignMatrix(Eigen::MatrixXd::Ones(1, 2), {"a", "b"}), Error);
    CHECK_THROWS_AS(DesignMatrix(Eigen::MatrixXd::Ones(3, 1), {"a", "b"}), Error);
    const DesignMatrix d(Eigen::MatrixXd::Ones(3, 1), {"intercept"});
    Eigen::VectorXd y(3);
    y << 0, 1, 2;
    CHECK_THROWS_AS(fit_weighted_glm(d, y, Eigen::VectorXd::Ones(3), OutcomeFamily::bernoulli()),
                    Error);
    CHECK_THROWS_AS(fit_weighted_glm(d, y, Eigen::VectorXd::Zero(3), OutcomeFamily::normal()),
                    Error);
    CHECK_THROWS_AS((OutcomeFamily{Family::Poisson, 1.0}.validate()), Error);
    CHECK_THROWS_AS(OutcomeFamily::normal(-1.0).validate(), Error);
  }

  TEST_CASE("oracle first-order condition and exact-linear fixture") {
    for (Family f : {Family::Bernoulli, Family::Poisson}) {
      const Problem pr = random_problem(f, 120, 3, 21);
      const auto ref =
          oracles::independent_newton_glm(pr.design.values(), pr.y, pr.w, f);
      CHECK(ref.max_abs_gradient < 1e-8);
    }
    Eigen::MatrixXd x(5, 2);
    x.col(0).setOnes();
    x.col(1) << 0, 1, 2, 3, 4;
    const Eigen::VectorXd y = (-1.0 + 0.5 * x.col(1).array()).matrix();
    const auto ref =
        oracles::independent_newton_glm(x, y, Eigen::VectorXd::Ones(5), Family::Normal);
    CHECK(std::abs(ref.coefficients[0] + 1.0) < 1e-12);
    CHECK(std::abs(ref.coefficients[1] - 0.5) < 1e-12);
  }
}
