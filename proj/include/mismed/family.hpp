#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

namespace mismed {

enum class Family { Normal, Bernoulli, Poisson };

std::string_view to_string(Family family);
Family parse_family(std::string_view name);

// Outcome distribution. The residual variance is carried only by the Normal family.
struct OutcomeFamily {
  Family tag = Family::Normal;
  std::optional<double> sigma2;

  static OutcomeFamily normal(double sigma2 = 1.0) { return {Family::Normal, sigma2}; }
  static OutcomeFamily bernoulli() { return {Family::Bernoulli, std::nullopt}; }
  static OutcomeFamily poisson() { return {Family::Poisson, std::nullopt}; }
  static OutcomeFamily of(Family tag) {
    return tag == Family::Normal ? normal() : OutcomeFamily{tag, std::nullopt};
  }

  // Throws Configuration when sigma2 presence or value is inconsistent with the tag.
  void validate() const;
};

inline double expit(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// log(expit(eta)) without overflow for large |eta|.
inline double log_expit(double eta) {
  return eta >= 0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
}

inline double log_density(Family family, double y, double eta, double sigma2) {
  switch (family) {
    case Family::Normal: {
      const double r = y - eta;
      return -0.5 * std::log(2.0 * std::numbers::pi * sigma2) - 0.5 * r * r / sigma2;
    }
    case Family::Bernoulli:
      return y > 0.5 ? log_expit(eta) : log_expit(-eta);
    case Family::Poisson:
      return y * eta - std::exp(eta) - std::lgamma(y + 1.0);
  }
  return std::nan("");
}

inline double inverse_link(Family family, double eta) {
  switch (family) {
    case Family::Normal: return eta;
    case Family::Bernoulli: return expit(eta);
    case Family::Poisson: return std::exp(eta);
  }
  return std::nan("");
}

}  // namespace mismed
