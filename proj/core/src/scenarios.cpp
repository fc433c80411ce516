#include "nscmi/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "nscmi/error.hpp"

namespace nscmi::scenarios {

using loglinear::JointTable;
using loglinear::LoglinearSpec;
using loglinear::MomentTarget;
using loglinear::TermKey;

namespace {

constexpr double kYY = 0.5;
constexpr double kYM = 2.0;

void require_probability(double p, const char* what) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ValidationError(std::string("scenarios: ") + what + " must lie in (0, 1)");
  }
}

LoglinearSpec pairwise_template(double lambda_yy, bool with_ym) {
  LoglinearSpec spec(kK);
  for (int a = 1; a <= kK; ++a) {
    for (int b = a + 1; b <= kK; ++b) spec.set(loglinear::term({a, b}), lambda_yy);
  }
  if (with_ym) {
    for (int k = 1; k <= kK; ++k) {
      for (int j = 1; j <= kK; ++j) {
        if (j != k) spec.set(loglinear::term({k}, {j}), j <= 3 ? kYM : -kYM);
      }
    }
  }
  return spec;
}

// Main effects of Y (and of M when missing_rate is set) with their targets.
void main_effect_system(std::optional<double> missing_rate, std::vector<TermKey>& keys,
                        std::vector<MomentTarget>& targets) {
  const auto truth = target_marginals();
  for (int k = 1; k <= kK; ++k) {
    keys.push_back(loglinear::term({k}));
    targets.push_back({loglinear::Y(k), truth[static_cast<std::size_t>(k - 1)]});
  }
  if (missing_rate) {
    for (int k = 1; k <= kK; ++k) {
      keys.push_back(loglinear::term({}, {k}));
      targets.push_back({loglinear::M(k), *missing_rate});
    }
  }
}

ScenarioOutput finish(LoglinearSpec spec, std::string name, nlohmann::json params) {
  JointTable table = loglinear::build_table(spec);
  std::vector<double> truth(kK);
  for (int k = 1; k <= kK; ++k) truth[static_cast<std::size_t>(k - 1)] = loglinear::marginal(table, loglinear::Y(k));
  return ScenarioOutput{std::move(spec), std::move(table), std::move(truth), std::move(name),
                        std::move(params)};
}

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  boost::math::tools::eps_tolerance<double> tol(50);
  boost::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::bisect(f, lo, hi, tol, max_iter);
  return 0.5 * (a + b);
}

}  // namespace

std::string ScenarioOutput::label() const {
  std::ostringstream out;
  out << name;
  for (const auto& [key, value] : parameters.items()) {
    if (value.is_number()) out << ' ' << key << '=' << value.get<double>();
  }
  return out.str();
}

std::vector<double> target_marginals() { return {0.4, 0.4, 0.4, 0.6, 0.6, 0.6}; }

ScenarioOutput main_effect_nsc(double missing_rate) {
  require_probability(missing_rate, "missing_rate");
  std::vector<TermKey> keys;
  std::vector<MomentTarget> targets;
  main_effect_system(missing_rate, keys, targets);
  LoglinearSpec spec = loglinear::calibrate(pairwise_template(kYY, true), keys, targets);
  return finish(std::move(spec), "nsc-main", {{"missing_rate", missing_rate}});
}

ScenarioOutput ym_interaction_nsc(double lambda3) {
  if (!std::isfinite(lambda3)) throw ValidationError("scenarios: lambda3 must be finite");
  constexpr double kRate = 0.3;
  // Continuation from the lambda3 = 0 solution.
  LoglinearSpec templ = *main_effect_nsc(kRate).spec;
  for (int a = 1; a <= kK; ++a) {
    for (int b = a + 1; b <= kK; ++b) {
      for (int c = 1; c <= kK; ++c) {
        if (c != a && c != b) templ.set(loglinear::term({a, b}, {c}), lambda3);
      }
    }
  }
  std::vector<TermKey> keys;
  std::vector<MomentTarget> targets;
  main_effect_system(kRate, keys, targets);
  LoglinearSpec spec = loglinear::calibrate(templ, keys, targets);
  return finish(std::move(spec), "nsc-ym", {{"lambda3", lambda3}, {"missing_rate", kRate}});
}

JointTable compose_mar_blocks(std::span<const double> y_law, int k, std::span<const BlockMechanism> blocks) {
  if (k < 1 || k > loglinear::kMaxEnumerationK) throw ValidationError("compose_mar_blocks: bad K");
  if (y_law.size() != (std::size_t{1} << k)) throw ValidationError("compose_mar_blocks: y_law must have 2^K entries");
  std::vector<int> owner(static_cast<std::size_t>(k), -1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (int idx : {blocks[b].first, blocks[b].second}) {
      if (idx < 1 || idx > k) throw ValidationError("compose_mar_blocks: block index out of range");
      if (owner[static_cast<std::size_t>(idx - 1)] != -1) {
        throw ValidationError("compose_mar_blocks: blocks overlap");
      }
      owner[static_cast<std::size_t>(idx - 1)] = static_cast<int>(b);
    }
    if (blocks[b].first == blocks[b].second) throw ValidationError("compose_mar_blocks: degenerate block");
  }

  const std::size_t ny = std::size_t{1} << k;
  std::vector<double> probs(ny * ny, 0.0);
  for (std::size_t y = 0; y < ny; ++y) {
    // Distribute P(Y=y) over the M patterns allowed by the blocks.
    std::vector<std::pair<std::size_t, double>> partial{{0, y_law[y]}};
    for (const auto& blk : blocks) {
      const std::size_t bit_a = std::size_t{1} << (blk.first - 1);
      const std::size_t bit_b = std::size_t{1} << (blk.second - 1);
      const double w = (y & bit_b) ? blk.w1 : blk.w2;
      const double v = (y & bit_a) ? blk.v1 : blk.v2;
      const double both_obs = 1.0 - blk.both_missing - w - v;
      for (double p : {w, v, blk.both_missing, both_obs}) {
        if (!(p >= -1e-15 && p <= 1.0 + 1e-15)) {
          throw ValidationError("compose_mar_blocks: block pattern probability leaves [0, 1]");
        }
      }
      std::vector<std::pair<std::size_t, double>> next;
      next.reserve(partial.size() * 4);
      for (const auto& [m, mass] : partial) {
        next.emplace_back(m, mass * std::max(both_obs, 0.0));
        next.emplace_back(m | bit_a, mass * std::max(w, 0.0));
        next.emplace_back(m | bit_b, mass * std::max(v, 0.0));
        next.emplace_back(m | bit_a | bit_b, mass * blk.both_missing);
      }
      partial = std::move(next);
    }
    for (const auto& [m, mass] : partial) probs[m | (y << k)] += mass;
  }
  return JointTable(k, std::move(probs));
}

ScenarioOutput mar_blocks(double lambda_yy, double missing_rate, const MarBlockOptions& options) {
  if (!std::isfinite(lambda_yy)) throw ValidationError("scenarios: lambda_yy must be finite");
  if (!(missing_rate > 0.0 && missing_rate < 0.5)) {
    throw ValidationError("scenarios: mar-blocks missing_rate must lie in (0, 0.5)");
  }
  if (!(options.w_ratio > 0.0) || !(options.v_ratio > 0.0)) {
    throw ValidationError("scenarios: block ratios must be positive");
  }

  // Y law: pairwise model, main effects calibrated. With no M terms the M
  // half of the table is independent and summed out.
  std::vector<TermKey> keys;
  std::vector<MomentTarget> targets;
  main_effect_system(std::nullopt, keys, targets);
  const LoglinearSpec y_spec = loglinear::calibrate(pairwise_template(lambda_yy, false), keys, targets);
  const std::vector<double> y_law = loglinear::y_marginal_law(loglinear::build_table(y_spec));

  // Exact P(Y_j = 1) from the calibrated law.
  auto y_prob = [&](int index) {
    double s = 0.0;
    for (std::size_t y = 0; y < y_law.size(); ++y) {
      if (y & (std::size_t{1} << (index - 1))) s += y_law[y];
    }
    return s;
  };

  std::vector<BlockMechanism> blocks;
  nlohmann::json solved = nlohmann::json::array();
  for (int a = 1; a <= 3; ++a) {
    const int b = a + 3;
    const double pb = y_prob(b);
    const double pa = y_prob(a);

    // Given both_missing c, P(M_a=1) = c + w2 * E[ratio^Y_b] is linear in w2.
    auto solve_scales = [&](double c) {
      const double rest = missing_rate - c;
      const double w2 = rest / (options.w_ratio * pb + (1.0 - pb));
      const double v2 = rest / (options.v_ratio * pa + (1.0 - pa));
      return std::pair{w2, v2};
    };
    auto min_both_observed = [&](double c) {
      const auto [w2, v2] = solve_scales(c);
      const double w_hi = w2 * std::max(1.0, options.w_ratio);
      const double v_hi = v2 * std::max(1.0, options.v_ratio);
      return 1.0 - c - w_hi - v_hi;
    };

    double c = 0.0;
    if (min_both_observed(0.0) < options.observed_floor) {
      if (min_both_observed(missing_rate) < options.observed_floor) {
        throw ValidationError("scenarios: mar-blocks missing_rate infeasible for the block ratios");
      }
      c = bisect([&](double x) { return min_both_observed(x) - options.observed_floor; }, 0.0, missing_rate);
    }
    const auto [w2, v2] = solve_scales(c);
    BlockMechanism blk{a, b, options.w_ratio * w2, w2, options.v_ratio * v2, v2, c};
    blocks.push_back(blk);
    solved.push_back({{"first", a},
                      {"second", b},
                      {"w1", blk.w1},
                      {"w2", blk.w2},
                      {"v1", blk.v1},
                      {"v2", blk.v2},
                      {"both_missing", blk.both_missing}});
  }

  JointTable table = compose_mar_blocks(y_law, kK, blocks);
  std::vector<double> truth(kK);
  for (int k = 1; k <= kK; ++k) truth[static_cast<std::size_t>(k - 1)] = loglinear::marginal(table, loglinear::Y(k));
  nlohmann::json params = {{"lambda_yy", lambda_yy}, {"missing_rate", missing_rate}, {"blocks", solved}};
  return ScenarioOutput{std::nullopt, std::move(table), std::move(truth), "mar-blocks", std::move(params)};
}

ScenarioOutput make_scenario(const std::string& name, const ScenarioParams& params) {
  if (name == "nsc-main") return main_effect_nsc(params.missing_rate);
  if (name == "nsc-ym") return ym_interaction_nsc(params.lambda3);
  if (name == "mar-blocks") return mar_blocks(params.lambda_yy, params.missing_rate);
  throw ValidationError("unknown scenario '" + name + "' (expected nsc-main, nsc-ym or mar-blocks)");
}

}  // namespace nscmi::scenarios
