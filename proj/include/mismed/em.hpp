#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mismed/glm.hpp"
#include "mismed/model.hpp"

namespace mismed {

enum class Acceleration { None, Squarem };
enum class InitStrategy { Naive, UserSupplied, RandomPerturbation };

struct EmConfig {
  double loglik_tolerance = 1e-7;
  int max_iterations = 1500;
  Acceleration acceleration = Acceleration::Squarem;
  InitStrategy init = InitStrategy::Naive;
  std::optional<ParameterSet> start;  // InitStrategy::UserSupplied
  std::uint64_t seed = 0;             // InitStrategy::RandomPerturbation
  double perturbation_scale = 0.25;
  // Fix P(M*=1 | M=2) = 0 and leave gamma row 1 unestimated.
  bool perfect_specificity = false;

  void validate() const;
};

struct FitReport {
  std::string method;
  std::optional<Family> family;  // empty for the outcome-free step-1 fit
  ParameterSet params;
  std::vector<double> loglik_trace;
  int iterations = 0;
  int em_updates = 0;
  bool converged = false;
  std::optional<double> average_sensitivity;
  std::optional<double> average_specificity;
  bool label_swap_applied = false;
  std::vector<std::string> diagnostics;
};

struct LabelCorrection {
  ParameterSet params;
  bool swapped = false;
  SensSpec before;
  SensSpec after;
};

// Precomputed expanded designs for the M-step of one dataset. Each subject
// appears once per latent class; only the weights change between iterations.
class EmWorkspace {
 public:
  // `outcome` empty: model only (X, C, Z) -> M*, marginalising M without Y.
  EmWorkspace(const MediationDataset& data, std::optional<Family> outcome, bool interaction,
              bool perfect_specificity);

  Responsibilities e_step(const ParameterSet& params) const;
  // Responsibilities are clamped to [1e-12, 1 - 1e-12] before weighting.
  ParameterSet m_step(const Responsibilities& resp, const ParameterSet* warm_start);

  Eigen::VectorXd pack(const ParameterSet& params) const;
  ParameterSet unpack(const Eigen::VectorXd& packed) const;

  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  const MediationDataset& data() const noexcept { return data_; }

 private:
  const MediationDataset& data_;
  std::optional<Family> outcome_;
  bool interaction_;
  bool perfect_specificity_;
  DesignMatrix mediator_x2_;
  Eigen::VectorXd mediator_y2_;
  DesignMatrix observation_;
  DesignMatrix outcome_x2_;
  Eigen::VectorXd outcome_y2_;
  std::vector<std::string> warnings_;
};

Responsibilities e_step(const ParameterSet& params, const MediationDataset& data, Family family);
ParameterSet m_step(const Responsibilities& resp, const MediationDataset& data, Family family,
                    bool interaction);

// Default: naive analysis-model fit for beta/theta, gamma intercepts (+2, -2)
// with zero slopes. `family` empty gives the outcome-free parameterisation.
ParameterSet initialize(const MediationDataset& data, std::optional<Family> family,
                        const EmConfig& config, bool interaction);

// Swaps labels when average sensitivity + specificity < 1. Throws
// Unidentifiable when the sum is exactly 1.
LabelCorrection correct_label_switching(const ParameterSet& params, const MediationDataset& data);

// Seamless EM over (beta, gamma, theta).
FitReport run_em(const MediationDataset& data, Family family, const EmConfig& config,
                 bool interaction);

// EM for (beta, gamma) only, from the mixture P(M* | X, C, Z).
FitReport run_misclassification_em(const MediationDataset& data, const EmConfig& config);

}  // namespace mismed
