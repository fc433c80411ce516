#pragma once

// Population (N -> infinity) analogue of the FCS engine. The stochastic draw of
// each sweep is replaced by an exact reallocation of cell mass, so the fixed
// point is computed without Monte-Carlo noise.

#include <vector>

#include "nscmi/fcs.hpp"
#include "nscmi/loglinear.hpp"
#include "nscmi/scenarios.hpp"

namespace nscmi::population {

inline constexpr int kMaxK = 10;

// Mass of each (m, y_(m)) pattern. Stored on the table's cell layout with the
// unobserved Y bits set to zero; every other cell holds 0.
struct ObservedLaw {
  int k = 0;
  std::vector<double> mass;

  double at(loglinear::Mask m, loglinear::Mask y) const;
};

ObservedLaw observed_law(const loglinear::JointTable& table);

struct PopulationOptions {
  double tolerance = 1e-12;  // sup-norm change of q over one full sweep
  int max_sweeps = 1000;
};

struct PopulationResult {
  loglinear::JointTable completed;
  int sweeps = 0;
  double final_change = 0.0;
  std::vector<double> marginals;  // completed P(Y_k = 1)
};

// offsets: per-outcome logit shifts for the imputed cells (empty = all zero).
// Throws ConvergenceError after max_sweeps.
PopulationResult population_fcs(const loglinear::JointTable& table, fcs::Mechanism mechanism,
                                 const std::vector<double>& offsets = {},
                                 const PopulationOptions& options = {});

enum class Method { kNsc, kMar, kAvailable };

const char* to_string(Method m);

// Percent bias of each marginal against scenario.truth.
std::vector<double> asymptotic_bias(const scenarios::ScenarioOutput& scenario, Method method,
                                    const PopulationOptions& options = {});

}  // namespace nscmi::population
