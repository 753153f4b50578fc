#include "mismed/squarem.hpp"

#include <algorithm>
#include <cmath>

#include "mismed/errors.hpp"

namespace mismed {

namespace {

constexpr double kStepMin = 1.0;
constexpr double kStepGrowth = 4.0;

}  // namespace

FixedPointResult run_fixed_point(const FixedPointProblem& problem, Eigen::VectorXd start,
                                 const FixedPointOptions& options) {
  if (!(options.tolerance > 0.0) || options.max_iterations < 1) {
    throw Error(ErrorKind::Configuration, "tolerance must be > 0 and max_iterations >= 1");
  }
  FixedPointResult out;
  out.point = std::move(start);
  double current = problem.objective(out.point);
  if (!std::isfinite(current)) {
    throw Error(ErrorKind::Evaluation, "objective is not finite at the starting point");
  }
  out.trace.push_back(current);
  double step_max = 1.0;

  for (int it = 1; it <= options.max_iterations; ++it) {
    out.iterations = it;
    Eigen::VectorXd next;
    double next_value = 0.0;

    if (!options.accelerate) {
      next = problem.update(out.point);
      ++out.updates;
      next_value = problem.objective(next);
    } else {
      const Eigen::VectorXd p1 = problem.update(out.point);
      const Eigen::VectorXd p2 = problem.update(p1);
      out.updates += 2;
      const double plain_value = problem.objective(p2);
      next = p2;
      next_value = plain_value;

      const Eigen::VectorXd r = p1 - out.point;
      const Eigen::VectorXd v = (p2 - p1) - r;
      const double sr2 = r.squaredNorm();
      const double sv2 = v.squaredNorm();
      if (sv2 > 0.0 && sr2 > 0.0) {
        const double alpha = std::clamp(std::sqrt(sr2 / sv2), kStepMin, step_max);
        if (alpha > kStepMin) {
          bool accepted = false;
          try {
            const Eigen::VectorXd extrapolated = out.point + 2.0 * alpha * r + alpha * alpha * v;
            Eigen::VectorXd stabilised = problem.update(extrapolated);
            ++out.updates;
            const double value = problem.objective(stabilised);
            if (std::isfinite(value) && value >= plain_value) {
              next = std::move(stabilised);
              next_value = value;
              accepted = true;
            }
          } catch (const Error&) {
            // Extrapolated point left the region where the update is defined.
          }
          if (!accepted) {
            ++out.fallbacks;
            step_max = std::max(kStepMin, step_max / kStepGrowth);
          } else if (alpha == step_max) {
            step_max *= kStepGrowth;
          }
        } else if (alpha == step_max) {
          step_max *= kStepGrowth;
        }
      }
    }

    if (!std::isfinite(next_value)) {
      throw Error(ErrorKind::Evaluation, "objective became non-finite during iteration");
    }
    const double change = std::abs(next_value - current);
    out.point = std::move(next);
    current = next_value;
    out.trace.push_back(current);
    if (change < options.tolerance) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace mismed
