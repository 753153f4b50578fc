#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace mismed {

// A monotone fixed-point map (one EM update) and the objective it ascends.
struct FixedPointProblem {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> update;
  std::function<double(const Eigen::VectorXd&)> objective;
};

struct FixedPointOptions {
  double tolerance = 1e-7;  // on |objective change| between iterations
  int max_iterations = 1500;
  bool accelerate = true;
};

struct FixedPointResult {
  Eigen::VectorXd point;
  std::vector<double> trace;  // objective at the start and after every iteration
  int iterations = 0;
  int updates = 0;            // evaluations of the update map
  int fallbacks = 0;          // extrapolations rejected in favour of the plain step
  bool converged = false;
};

// Plain iteration, or SQUAREM (S3 step length) with a monotonicity fallback:
// an extrapolated point is accepted only if its objective is at least that of
// the two plain steps it was built from. One iteration is one update when
// plain and one squarem cycle when accelerated.
FixedPointResult run_fixed_point(const FixedPointProblem& problem, Eigen::VectorXd start,
                                 const FixedPointOptions& options);

}  // namespace mismed
