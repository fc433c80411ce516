#include "nscmi/study.hpp"

#include <cmath>
#include <mutex>

#include <tbb/parallel_for.h>

#include "nscmi/error.hpp"

namespace nscmi::study {

std::vector<double> method_estimates(const Dataset& data, Method method, const fcs::FcsConfig& fcs_config) {
  std::vector<double> out;
  if (method == Method::kAvailable) {
    for (const auto& e : analysis::available_case(data)) out.push_back(e.value);
    return out;
  }
  fcs::FcsConfig config = fcs_config;
  config.mechanism = method == Method::kNsc ? fcs::Mechanism::kNsc : fcs::Mechanism::kMar;
  const auto completed = fcs::impute(data, config);
  out.assign(static_cast<std::size_t>(data.k()), 0.0);
  for (const auto& c : completed) {
    const auto est = analysis::marginal_estimates(c.data);
    for (std::size_t k = 0; k < est.size(); ++k) out[k] += est[k].value;
  }
  for (double& v : out) v /= static_cast<double>(completed.size());
  return out;
}

SimulationResult simulate(const scenarios::ScenarioOutput& scenario, const SimulationConfig& config) {
  if (config.replicates < 1) throw ValidationError("simulate: replicates must be >= 1");
  if (config.n < 1) throw ValidationError("simulate: n must be >= 1");
  if (config.methods.empty()) throw ValidationError("simulate: no methods selected");
  const int k = scenario.table.k();
  const auto reps = static_cast<std::size_t>(config.replicates);
  const std::size_t n_methods = config.methods.size();

  // bias[m][r] is empty when that (replicate, method) failed.
  std::vector<std::vector<std::vector<double>>> bias(n_methods, std::vector<std::vector<double>>(reps));
  std::vector<std::string> failures;
  std::mutex failure_mutex;

  tbb::parallel_for(std::size_t{0}, reps, [&](std::size_t r) {
    const std::uint64_t stream = derive_seed(config.seed, Stream::kReplicate, r);
    Dataset data;
    try {
      data = masked_dataset(loglinear::sample(scenario.table, config.n, stream), k);
    } catch (const Error& e) {
      std::lock_guard lock(failure_mutex);
      failures.push_back("replicate " + std::to_string(r + 1) + ": " + e.what());
      return;
    }
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      const Method method = config.methods[mi];
      fcs::FcsConfig fc;
      fc.t_imputations = config.t_imputations;
      fc.r_iterations = config.r_iterations;
      fc.ridge = config.ridge;
      fc.seed = derive_seed(stream, Stream::kMethod, static_cast<std::uint64_t>(method));
      try {
        const auto est = method_estimates(data, method, fc);
        std::vector<double> b(est.size());
        for (std::size_t j = 0; j < est.size(); ++j) b[j] = analysis::percent_bias(est[j], scenario.truth[j]);
        bias[mi][r] = std::move(b);
      } catch (const Error& e) {
        std::lock_guard lock(failure_mutex);
        failures.push_back("replicate " + std::to_string(r + 1) + ", " + population::to_string(method) + ": " +
                           e.what());
      }
    }
  });

  SimulationResult result;
  result.truth = scenario.truth;
  result.failures = std::move(failures);
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    MethodSummary s;
    s.method = config.methods[mi];
    s.mean_bias.assign(static_cast<std::size_t>(k), 0.0);
    s.mc_se.assign(static_cast<std::size_t>(k), 0.0);
    for (const auto& b : bias[mi]) {
      if (b.empty()) {
        ++s.failed;
        continue;
      }
      ++s.completed;
      for (std::size_t j = 0; j < b.size(); ++j) s.mean_bias[j] += b[j];
    }
    if (static_cast<double>(s.failed) > config.max_failure_fraction * static_cast<double>(reps)) {
      throw NumericalError("simulate: " + std::to_string(s.failed) + " of " + std::to_string(reps) +
                           " replicates failed for method " + population::to_string(s.method) +
                           (result.failures.empty() ? "" : " (first: " + result.failures.front() + ")"));
    }
    if (s.completed == 0) throw NumericalError("simulate: no replicate completed");
    for (double& v : s.mean_bias) v /= s.completed;
    if (s.completed > 1) {
      for (const auto& b : bias[mi]) {
        if (b.empty()) continue;
        for (std::size_t j = 0; j < b.size(); ++j) s.mc_se[j] += (b[j] - s.mean_bias[j]) * (b[j] - s.mean_bias[j]);
      }
      for (double& v : s.mc_se) v = std::sqrt(v / (s.completed - 1) / s.completed);
    }
    result.methods.push_back(std::move(s));
  }
  return result;
}

std::vector<double> GridAxis::values() const {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(step > 0.0) || hi < lo) {
    throw ValidationError("grid axis needs finite lo <= hi and step > 0");
  }
  if (lo < 0.0 || hi > 4.0) throw ValidationError("grid axis bounds must lie within [0, 4]");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

std::vector<analysis::PooledResult> pooled_contrasts(const Dataset& data, const fcs::FcsConfig& config,
                                                     const analysis::AnalysisSpec& spec,
                                                     const std::string& group_covariate,
                                                     const std::vector<Contrast>& contrasts) {
  const auto completed = fcs::impute(data, config);
  std::vector<std::vector<analysis::EstimateWithVariance>> per(contrasts.size());
  for (const auto& c : completed) {
    const glm::GlmFit fit = analysis::analysis_model(c.data, spec);
    for (std::size_t i = 0; i < contrasts.size(); ++i) {
      per[i].push_back(analysis::contrast(fit, group_covariate, contrasts[i].level_a, contrasts[i].level_b));
    }
  }
  std::vector<analysis::PooledResult> out;
  for (std::size_t i = 0; i < contrasts.size(); ++i) {
    auto pooled = analysis::rubin_pool(per[i]);
    pooled.label = contrasts[i].label();
    out.push_back(std::move(pooled));
  }
  return out;
}

std::vector<GridPoint> sensitivity_grid(const Dataset& data, const SensitivityConfig& config) {
  if (config.contrasts.empty()) throw ValidationError("sensitivity: no contrasts given");
  const Covariate& group = data.covariate(config.group_covariate);
  if (!group.is_categorical()) throw ValidationError("sensitivity: group covariate must be categorical");
  for (const auto& c : config.contrasts) {
    if (group.level_index(c.level_a) < 0 || group.level_index(c.level_b) < 0) {
      throw ValidationError("sensitivity: contrast " + c.label() + " names a level not in '" +
                            config.group_covariate + "'");
    }
    if (c.level_a == c.level_b) throw ValidationError("sensitivity: contrast compares a level with itself");
  }
  const auto va = config.axis_a.values();
  const auto vb = config.axis_b.values();
  const std::size_t per_contrast = va.size() * vb.size();
  std::vector<GridPoint> points(config.contrasts.size() * per_contrast);
  const auto k = static_cast<std::size_t>(data.k());

  tbb::parallel_for(std::size_t{0}, points.size(), [&](std::size_t idx) {
    const Contrast& c = config.contrasts[idx / per_contrast];
    const std::size_t g = idx % per_contrast;
    GridPoint& point = points[idx];
    point.contrast = c.label();
    point.lambda_a = va[g / vb.size()];
    point.lambda_b = vb[g % vb.size()];
    fcs::FcsConfig fc = config.fcs;
    fc.sensitivity.group_covariate = config.group_covariate;
    fc.sensitivity.per_level.clear();
    fc.sensitivity.per_level[c.level_a] = std::vector<double>(k, point.lambda_a);
    fc.sensitivity.per_level[c.level_b] = std::vector<double>(k, point.lambda_b);
    try {
      point.pooled = pooled_contrasts(data, fc, config.analysis, config.group_covariate, {c}).front();
    } catch (const Error& e) {
      point.failed = true;
      point.error = e.what();
    }
  });
  return points;
}

}  // namespace nscmi::study
