#pragma once

// The three K = 6 data-generating mechanisms used for the bias studies.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nscmi/loglinear.hpp"

namespace nscmi::scenarios {

inline constexpr int kK = 6;

struct ScenarioOutput {
  std::optional<loglinear::LoglinearSpec> spec;  // empty for the MAR blocks
  loglinear::JointTable table;
  std::vector<double> truth;  // P(Y_k = 1), k = 1..K
  std::string name;           // "nsc-main", "nsc-ym" or "mar-blocks"
  nlohmann::json parameters;  // inputs plus solved block probabilities

  std::string label() const;
};

// Target P(Y_k = 1): 0.4 for k <= 3, 0.6 for k > 3.
std::vector<double> target_marginals();

// Pairwise Y-Y terms 0.5, Y_k M_j = +2 (j <= 3) / -2 (j > 3) for k != j; the
// twelve main effects are calibrated so that P(Y_k=1) hits the targets and
// P(M_k=1) = missing_rate.
ScenarioOutput main_effect_nsc(double missing_rate);

// main_effect_nsc(0.3) plus lambda_{Y_a Y_b M_c} = lambda3 for every
// unordered pair {a, b} and every c outside it; main effects recalibrated.
ScenarioOutput ym_interaction_nsc(double lambda3);

// One bivariate MAR block over outcomes (first, second), 1-based.
//   P(M_first=1, M_second=0 | Y) = w1 Y_second + w2 (1 - Y_second)
//   P(M_first=0, M_second=1 | Y) = v1 Y_first  + v2 (1 - Y_first)
//   P(both missing | Y)         = both_missing
//   P(both observed | Y)        = the remainder
// Every pattern probability depends only on coordinates observed under that
// pattern, so the composed table is MAR. Outcomes outside every block are
// always observed.
struct BlockMechanism {
  int first = 1;
  int second = 4;
  double w1 = 0.0;
  double w2 = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
  double both_missing = 0.0;
};

// P(M, Y) = P(Y) * prod_blocks P(M_block | Y_block). y_law is indexed by the
// Y bit pattern (length 2^K).
loglinear::JointTable compose_mar_blocks(std::span<const double> y_law, int k,
                                         std::span<const BlockMechanism> blocks);

struct MarBlockOptions {
  double w_ratio = 0.5;          // w1 / w2
  double v_ratio = 2.0;          // v1 / v2
  double observed_floor = 0.05;  // min P(both observed | Y) before both_missing > 0
};

// Y law: K = 6 pairwise loglinear model with lambda_{Y_k Y_j} = lambda_yy and
// calibrated main effects. Blocks (k, k+3), k = 1..3, with w2, v2 (and
// both_missing when needed for feasibility) solved by bisection so every
// P(M_k=1) equals missing_rate.
ScenarioOutput mar_blocks(double lambda_yy, double missing_rate, const MarBlockOptions& options = {});

struct ScenarioParams {
  double missing_rate = 0.3;
  double lambda3 = -0.5;
  double lambda_yy = 0.5;
};

// Dispatch on the CLI-facing names "nsc-main", "nsc-ym", "mar-blocks".
ScenarioOutput make_scenario(const std::string& name, const ScenarioParams& params);

}  // namespace nscmi::scenarios
