#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mismed/em.hpp"
#include "mismed/model.hpp"

namespace mismed {

// Misclassification level for settings 1, 2, 3, 5; mediator prevalence level for setting 4.
enum class Level { Low, Medium, High };
enum class Method { Naive, Em, Pvw, Ols };

std::string_view to_string(Level level);
Level parse_level(std::string_view name);
std::string_view to_string(Method method);
Method parse_method(std::string_view name);

struct ScenarioSpec {
  int setting = 1;
  Level level = Level::Medium;
  Eigen::Index n = 10000;
  int replicates = 500;
  std::uint64_t seed = 1;

  // Defaults: n = 10,000 (20,000 for setting 4), 500 replicates.
  static ScenarioSpec defaults(int setting, Level level);
  void validate() const;
};

// Generating model of a scenario.
struct ScenarioTruth {
  ParameterSet params;
  Family family = Family::Normal;
  double sigma = 1.0;  // residual sd, setting 1
};
ScenarioTruth scenario_truth(const ScenarioSpec& spec);

// The latent mediator is held apart from the dataset and used only for scoring.
struct SimulatedData {
  MediationDataset data;
  std::vector<int> true_m;
};

// Replicate r draws from Philox stream r of the spec's seed.
SimulatedData generate_dataset(const ScenarioSpec& spec, int replicate = 0);

struct MethodEstimate {
  Method method = Method::Naive;
  bool ok = false;
  bool converged = false;
  std::string error;
  Eigen::VectorXd beta;
  Eigen::VectorXd theta;
};

struct ReplicateResult {
  int replicate = 0;
  std::vector<MethodEstimate> estimates;
  double p_m = 0.0;              // realised P(M = 1)
  double p_m_star = 0.0;         // realised P(M* = 1)
  double avg_sensitivity = 0.0;  // mean_i P(M*=1 | M=1, Z_i) at the generating gamma
  double avg_specificity = 0.0;  // mean_i P(M*=2 | M=2, Z_i)
};

struct CellSummary {
  Method method = Method::Naive;
  std::string parameter;
  double truth = 0.0;
  double mean_estimate = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  double convergence_rate = 0.0;
  int successful = 0;
};

struct StudySummary {
  ScenarioSpec spec;
  std::vector<Method> methods;
  EmConfig em_config;
  std::vector<CellSummary> cells;
  double mean_p_m = 0.0;
  double mean_p_m_star = 0.0;
  double mean_sensitivity = 0.0;
  double mean_specificity = 0.0;
  std::vector<ReplicateResult> replicates;

  const CellSummary& cell(Method method, std::string_view parameter) const;
};

// Names of the scored parameters: beta_0, beta_x, beta_c..., theta_0, ..., theta_m[, theta_xm].
std::vector<std::string> scored_parameter_names(const ScenarioSpec& spec);

// Throws Configuration for an empty method list or a method/family mismatch
// (ols needs the Normal outcome of setting 1).
void check_methods(const ScenarioSpec& spec, const std::vector<Method>& methods);

// `config` is passed through study_em_config first.
ReplicateResult run_replicate(const ScenarioSpec& spec, const std::vector<Method>& methods,
                              const EmConfig& config, int replicate);

// Replicates run in parallel; aggregation is in replicate order.
StudySummary run_study(const ScenarioSpec& spec, const std::vector<Method>& methods,
                       const EmConfig& config = {});

// Same EM settings the harness uses for a scenario (perfect specificity for setting 4).
EmConfig study_em_config(const ScenarioSpec& spec, EmConfig base = {});

}  // namespace mismed
