#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mismed/kernels.hpp"

namespace mismed::kernels {

namespace {

Eigen::Index block_count(Eigen::Index n) { return (n + kBlockRows - 1) / kBlockRows; }

struct RowRange {
  Eigen::Index begin;
  Eigen::Index size;
};

RowRange block_range(Eigen::Index b, Eigen::Index n) {
  const Eigen::Index begin = b * kBlockRows;
  return {begin, std::min(kBlockRows, n - begin)};
}

// Sums `block_sum(range)` over the fixed block partition, in block order.
template <class BlockSum>
double blocked_sum(Eigen::Index n, BlockSum&& block_sum) {
  const Eigen::Index blocks = block_count(n);
  std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);
#pragma omp parallel for schedule(static) if (blocks > 1)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    partial[static_cast<std::size_t>(b)] = block_sum(block_range(b, n));
  }
  return std::accumulate(partial.begin(), partial.end(), 0.0);
}

double log_sum_exp2(double a, double b) {
  const double hi = std::max(a, b);
  if (!std::isfinite(hi)) return hi;
  return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

}  // namespace

double sum(const Eigen::VectorXd& values) {
  return blocked_sum(values.size(),
                     [&](RowRange r) { return values.segment(r.begin, r.size).sum(); });
}

NormalEquations normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& weights,
                                 const Eigen::VectorXd& v) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  const Eigen::Index blocks = block_count(n);
  std::vector<Eigen::MatrixXd> grams(static_cast<std::size_t>(blocks));
  std::vector<Eigen::VectorXd> rhs(static_cast<std::size_t>(blocks));

#pragma omp parallel for schedule(static) if (blocks > 1)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const RowRange r = block_range(b, n);
    const auto xb = x.middleRows(r.begin, r.size);
    const Eigen::MatrixXd wx = xb.array().colwise() * weights.segment(r.begin, r.size).array();
    auto& g = grams[static_cast<std::size_t>(b)];
    g.noalias() = xb.transpose() * wx;
    rhs[static_cast<std::size_t>(b)].noalias() = xb.transpose() * v.segment(r.begin, r.size);
  }

  NormalEquations out{Eigen::MatrixXd::Zero(k, k), Eigen::VectorXd::Zero(k)};
  for (Eigen::Index b = 0; b < blocks; ++b) {
    out.gram += grams[static_cast<std::size_t>(b)];
    out.rhs += rhs[static_cast<std::size_t>(b)];
  }
  return out;
}

GlmTerms glm_terms(Family family, const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& weights, double sigma2) {
  const Eigen::Index n = eta.size();
  GlmTerms out{Eigen::VectorXd(n), Eigen::VectorXd(n), 0.0};
  out.loglik = blocked_sum(n, [&](RowRange r) {
    double acc = 0.0;
    for (Eigen::Index i = r.begin; i < r.begin + r.size; ++i) {
      const double w = weights[i];
      const double mu = inverse_link(family, eta[i]);
      switch (family) {
        case Family::Normal:
          out.working_weight[i] = w / sigma2;
          out.score[i] = w * (y[i] - mu) / sigma2;
          break;
        case Family::Bernoulli:
          out.working_weight[i] = w * mu * (1.0 - mu);
          out.score[i] = w * (y[i] - mu);
          break;
        case Family::Poisson:
          out.working_weight[i] = w * mu;
          out.score[i] = w * (y[i] - mu);
          break;
      }
      if (w != 0.0) acc += w * log_density(family, y[i], eta[i], sigma2);
    }
    return acc;
  });
  return out;
}

double glm_loglik(Family family, const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& weights, double sigma2) {
  return blocked_sum(eta.size(), [&](RowRange r) {
    double acc = 0.0;
    for (Eigen::Index i = r.begin; i < r.begin + r.size; ++i) {
      if (weights[i] != 0.0) acc += weights[i] * log_density(family, y[i], eta[i], sigma2);
    }
    return acc;
  });
}

Eigen::MatrixXd class_log_joint(const LatentClassInputs& in) {
  const Eigen::Index n = in.eta_mediator->size();
  Eigen::MatrixXd out(n, 2);
  const bool with_outcome = in.eta_outcome_class1 != nullptr;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

#pragma omp parallel for schedule(static) if (n > kBlockRows)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double em = (*in.eta_mediator)[i];
    double l1 = log_expit(em);
    double l2 = log_expit(-em);
    const double es = (*in.eta_sensitivity)[i];
    if ((*in.m_star_is_one)[i] > 0.5) {
      l1 += log_expit(es);
      l2 += in.eta_false_positive ? log_expit((*in.eta_false_positive)[i]) : kNegInf;
    } else {
      l1 += log_expit(-es);
      l2 += in.eta_false_positive ? log_expit(-(*in.eta_false_positive)[i]) : 0.0;
    }
    if (with_outcome) {
      const double yi = (*in.y)[i];
      l1 += log_density(in.family, yi, (*in.eta_outcome_class1)[i], in.sigma2);
      l2 += log_density(in.family, yi, (*in.eta_outcome_class2)[i], in.sigma2);
    }
    out(i, 0) = l1;
    out(i, 1) = l2;
  }
  return out;
}

Posterior normalize(const Eigen::MatrixXd& log_joint) {
  const Eigen::Index n = log_joint.rows();
  Posterior out{Eigen::MatrixXd(n, 2), 0.0, -1};
  const Eigen::Index blocks = block_count(n);
  std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);
  std::vector<Eigen::Index> bad(static_cast<std::size_t>(blocks), -1);

#pragma omp parallel for schedule(static) if (blocks > 1)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const RowRange r = block_range(b, n);
    double acc = 0.0;
    for (Eigen::Index i = r.begin; i < r.begin + r.size; ++i) {
      const double a = log_joint(i, 0);
      const double c = log_joint(i, 1);
      const double lse = log_sum_exp2(a, c);
      if (!std::isfinite(lse)) {
        if (bad[static_cast<std::size_t>(b)] < 0) bad[static_cast<std::size_t>(b)] = i;
        out.responsibilities(i, 0) = std::nan("");
        out.responsibilities(i, 1) = std::nan("");
        continue;
      }
      out.responsibilities(i, 0) = std::exp(a - lse);
      out.responsibilities(i, 1) = std::exp(c - lse);
      acc += lse;
    }
    partial[static_cast<std::size_t>(b)] = acc;
  }
  for (Eigen::Index b = 0; b < blocks; ++b) {
    out.loglik += partial[static_cast<std::size_t>(b)];
    if (out.degenerate_row < 0 && bad[static_cast<std::size_t>(b)] >= 0) {
      out.degenerate_row = bad[static_cast<std::size_t>(b)];
    }
  }
  return out;
}

}  // namespace mismed::kernels
