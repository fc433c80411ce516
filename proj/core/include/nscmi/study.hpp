#pragma once

// Monte-Carlo bias studies and sensitivity grids.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nscmi/analysis.hpp"
#include "nscmi/fcs.hpp"
#include "nscmi/population.hpp"
#include "nscmi/scenarios.hpp"

namespace nscmi::study {

using population::Method;

struct SimulationConfig {
  std::size_t n = 200;
  int replicates = 1000;
  std::vector<Method> methods = {Method::kNsc, Method::kMar, Method::kAvailable};
  int t_imputations = 20;
  int r_iterations = 10;
  double ridge = 1e-4;
  std::uint64_t seed = 1;
  double max_failure_fraction = 0.01;
};

struct MethodSummary {
  Method method = Method::kNsc;
  std::vector<double> mean_bias;  // percent, per outcome
  std::vector<double> mc_se;      // Monte-Carlo standard error of mean_bias
  int completed = 0;
  int failed = 0;
};

struct SimulationResult {
  std::vector<MethodSummary> methods;
  std::vector<double> truth;
  std::vector<std::string> failures;  // one message per failed (replicate, method)
};

// Replicate r samples with derive_seed(seed, kReplicate, r); each method then
// imputes with a seed derived from that stream and the method id, so adding or
// removing a method never changes another method's draws. Per-replicate
// failures are counted; more than max_failure_fraction of them is fatal.
SimulationResult simulate(const scenarios::ScenarioOutput& scenario, const SimulationConfig& config);

// Point estimates of the K marginals for one method on one incomplete
// dataset (pooled across imputations for the FCS methods).
std::vector<double> method_estimates(const Dataset& data, Method method, const fcs::FcsConfig& fcs_config);

struct GridAxis {
  double lo = 0.0;
  double hi = 2.0;
  double step = 0.1;

  std::vector<double> values() const;
};

// level_a vs level_b of the analysis group covariate.
struct Contrast {
  std::string level_a;
  std::string level_b;

  std::string label() const { return level_a + " vs " + level_b; }
};

// Imputes under `config`, fits the analysis model per imputation and pools
// each requested contrast.
std::vector<analysis::PooledResult> pooled_contrasts(const Dataset& data, const fcs::FcsConfig& config,
                                                     const analysis::AnalysisSpec& spec,
                                                     const std::string& group_covariate,
                                                     const std::vector<Contrast>& contrasts);

struct SensitivityConfig {
  fcs::FcsConfig fcs;  // base config; per-level offsets are set per grid point
  analysis::AnalysisSpec analysis;
  std::string group_covariate;
  std::vector<Contrast> contrasts;
  GridAxis axis_a;
  GridAxis axis_b;
  double threshold = 0.05;
};

struct GridPoint {
  std::string contrast;
  double lambda_a = 0.0;
  double lambda_b = 0.0;
  analysis::PooledResult pooled;
  bool failed = false;
  std::string error;
};

// For each contrast and each (lambda_a, lambda_b): offsets lambda_a on every
// outcome for rows in level_a, lambda_b for level_b, 0 elsewhere. Every point
// uses the base seed, so the grid is a smooth function of the offsets and the
// (0, 0) point reproduces the main analysis exactly.
std::vector<GridPoint> sensitivity_grid(const Dataset& data, const SensitivityConfig& config);

}  // namespace nscmi::study
