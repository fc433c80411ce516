#pragma once

// Fully conditional specification (chained equations) for binary outcomes
// under either the no-self-censoring (NSC) or the MAR mechanism.
//
// NSC: Y_k is regressed on Y_{-k} and M_{-k} over the rows where Y_k is
// observed, and missing Y_k are drawn from that fit. Under NSC the fit is also
// the conditional law for the rows where Y_k is missing. A sensitivity offset
// lambda_{M_k Y_k} shifts the logit of those draws.
//
// MAR: same loop with Y_{-k} only.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nscmi/dataset.hpp"
#include "nscmi/glm.hpp"
#include "nscmi/rng.hpp"

namespace nscmi::fcs {

enum class Mechanism { kNsc, kMar };

enum class CovariateDesign {
  kNone,
  kMainEffects,        // main effects of every covariate
  kGroupInteractions,  // main effects + design_covariate x (Y_{-k}, M_{-k})
  kStratifyBy,         // separate fits within each level of design_covariate
};

std::string to_string(Mechanism m);
std::string to_string(CovariateDesign d);
Mechanism parse_mechanism(const std::string& s);
CovariateDesign parse_covariate_design(const std::string& s);

// Logit offsets applied when drawing missing Y_k. When group_covariate is set
// and a row's level appears in per_level, that level's vector is used;
// otherwise per_outcome (empty means all zero).
struct SensitivityOffsets {
  std::vector<double> per_outcome;
  std::string group_covariate;
  std::map<std::string, std::vector<double>> per_level;

  double offset(const Dataset& data, std::size_t row, int k) const;
  void validate(const Dataset& data) const;
};

struct FcsConfig {
  Mechanism mechanism = Mechanism::kNsc;
  int t_imputations = 20;
  int r_iterations = 10;
  SensitivityOffsets sensitivity;
  CovariateDesign covariate_design = CovariateDesign::kNone;
  std::string design_covariate;
  bool ym_interactions = false;  // add Y_j * M_l products (j != l, both != k)
  double ridge = 1e-4;
  std::uint64_t seed = 0;

  void validate(const Dataset& data) const;
  std::uint64_t hash() const;
  nlohmann::json to_json() const;
  static FcsConfig from_json(const nlohmann::json& j);
};

struct Provenance {
  int imputation = 0;  // 1-based
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;  // stream seed actually used
};

struct CompletedDataset {
  Dataset data;
  Provenance provenance;
};

struct SweepStats {
  int fits = 0;
  int escalated_fits = 0;
  int nonconverged_fits = 0;
};

// Each missing Y_k drawn from the observed marginal of Y_k.
CompletedDataset initial_fill(const Dataset& dataset, Rng& rng);

// Design for outcome k (0-based) on all rows, built from the current state
// and the original missingness mask.
glm::DesignMatrix fcs_design(const Dataset& completed, const Dataset& original, int k, const FcsConfig& config);

// One pass over k = 1..K. Draws are made in ascending row order with one
// uniform per missing cell.
CompletedDataset sweep(CompletedDataset state, const Dataset& original, const FcsConfig& config, Rng& rng,
                       SweepStats* stats = nullptr);

// T independent imputations, stream t seeded by derive_seed(seed, kImputation, t).
std::vector<CompletedDataset> impute(const Dataset& dataset, const FcsConfig& config, SweepStats* stats = nullptr);

}  // namespace nscmi::fcs
