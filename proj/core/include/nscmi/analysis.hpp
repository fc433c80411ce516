#pragma once

// Estimators on completed or incomplete data, the consecutive-run endpoint and
// Rubin's rules.

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nscmi/dataset.hpp"
#include "nscmi/glm.hpp"

namespace nscmi::analysis {

struct EstimateWithVariance {
  double value = 0.0;
  double variance = 0.0;
  std::string label;
};

struct PooledResult {
  std::string label;
  double estimate = 0.0;  // Q-bar
  double within = 0.0;    // W-bar
  double between = 0.0;   // B
  double total = 0.0;     // W-bar + (1 + 1/T) B
  double df = std::numeric_limits<double>::infinity();
  double p_value = 1.0;   // two-sided
  int t = 0;
  bool single_imputation = false;  // T = 1: no between-imputation variance

  double se() const;
};

// Column means with binomial variance p(1-p)/n. The dataset must be complete.
std::vector<EstimateWithVariance> marginal_estimates(const Dataset& completed);

// Means over the rows where each outcome is observed.
std::vector<EstimateWithVariance> available_case(const Dataset& dataset);

// 1 iff `row` has `run_length` consecutive ones. The row must be complete.
int consecutive_abstinence(std::span<const std::int8_t> row, int run_length = 3);

// "consec3" (any run of 3 ones; the digit sets the run length) or an outcome
// column name such as "y2".
struct Endpoint {
  enum class Kind { kConsecutive, kColumn };
  Kind kind = Kind::kConsecutive;
  int run_length = 3;
  int column = 0;  // 0-based
  std::string name = "consec3";

  static Endpoint parse(const std::string& text, const Dataset& data);
};

std::vector<double> endpoint_values(const Dataset& completed, const Endpoint& endpoint);

// Logistic regression of the endpoint on an intercept plus the named
// covariates (categorical ones indicator-coded against a reference level,
// which defaults to the first sorted level). Ridge 0 with escalation on
// separation. Throws ValidationError naming the columns of a rank-deficient
// design.
struct AnalysisSpec {
  Endpoint endpoint;
  std::vector<std::string> covariates;
  std::map<std::string, std::string> reference_levels;
};

glm::DesignMatrix analysis_design(const Dataset& completed, const AnalysisSpec& spec);
glm::GlmFit analysis_model(const Dataset& completed, const AnalysisSpec& spec);

// Coefficient `label` from a fit, with its variance.
EstimateWithVariance coefficient(const glm::GlmFit& fit, const std::string& label);

// log-OR of level_a versus level_b of a categorical covariate in a fitted
// analysis model (either level may be the reference).
EstimateWithVariance contrast(const glm::GlmFit& fit, const std::string& covariate, const std::string& level_a,
                              const std::string& level_b);

// Rubin's rules with the original large-sample degrees of freedom.
PooledResult rubin_pool(std::span<const EstimateWithVariance> per_imputation);

// Pools every coefficient of per-imputation fits with identical labels.
std::vector<PooledResult> pool_coefficients(std::span<const glm::GlmFit> fits);

double percent_bias(double estimate, double truth);

}  // namespace nscmi::analysis
