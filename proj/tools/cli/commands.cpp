#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>

#include "nscmi/error.hpp"
#include "nscmi/io.hpp"
#include "nscmi/population.hpp"

namespace nscmi::cli {

namespace {

void write_resolved(const RunConfig& config, const std::string& command, const nlohmann::json& inputs = {}) {
  nlohmann::json j = config.to_json();
  j["command"] = command;
  if (!inputs.is_null()) j["inputs"] = inputs;
  io::write_json(config.output_dir / "resolved_config.json", j);
}

fcs::FcsConfig resolved_fcs(const RunConfig& config) {
  fcs::FcsConfig f = config.fcs;
  f.seed = config.seed;
  return f;
}

std::set<std::string> categorical_set(const RunConfig& config) {
  std::set<std::string> s(config.analysis.categorical.begin(), config.analysis.categorical.end());
  if (!config.analysis.group.empty()) s.insert(config.analysis.group);
  return s;
}

std::string method_label(study::Method m) {
  switch (m) {
    case study::Method::kNsc: return "NSC";
    case study::Method::kMar: return "MAR";
    case study::Method::kAvailable: return "Available";
  }
  return "?";
}

std::string parameter_label(const ScenarioChoice& s) {
  char buf[96];
  if (s.name == "nsc-main") {
    std::snprintf(buf, sizeof buf, "missing_rate=%g", s.params.missing_rate);
  } else if (s.name == "nsc-ym") {
    std::snprintf(buf, sizeof buf, "lambda3=%g", s.params.lambda3);
  } else {
    std::snprintf(buf, sizeof buf, "lambda_yy=%g;missing_rate=%g", s.params.lambda_yy, s.params.missing_rate);
  }
  return buf;
}

analysis::AnalysisSpec analysis_spec(const RunConfig& config, const Dataset& data) {
  analysis::AnalysisSpec spec;
  spec.endpoint = analysis::Endpoint::parse(config.analysis.endpoint, data);
  spec.covariates = config.analysis.covariates;
  spec.reference_levels = config.analysis.reference;
  if (!config.analysis.group.empty() &&
      std::find(spec.covariates.begin(), spec.covariates.end(), config.analysis.group) == spec.covariates.end()) {
    spec.covariates.insert(spec.covariates.begin(), config.analysis.group);
  }
  return spec;
}

}  // namespace

nlohmann::json default_config() { return RunConfig{}.to_json(); }

Dataset cmd_gen(const RunConfig& config) {
  if (config.n < 1) throw ValidationError("gen: n must be at least 1");
  const auto scenario = scenarios::make_scenario(config.scenario.name, config.scenario.params);
  const auto draws = loglinear::sample(scenario.table, config.n, derive_seed(config.seed, Stream::kSample, 0));
  Dataset data = masked_dataset(draws, scenario.table.k());
  write_resolved(config, "gen");
  io::write_text_atomic(config.output_dir / "data.csv", io::dataset_csv(data));
  io::write_text_atomic(config.output_dir / "table.csv", io::table_csv(scenario.table));
  if (scenario.spec) io::write_json(config.output_dir / "spec.json", scenario.spec->to_json());
  std::vector<double> missing_rate;
  for (int k = 0; k < data.k(); ++k) {
    missing_rate.push_back(static_cast<double>(data.missing_count(k)) / static_cast<double>(data.n()));
  }
  io::write_json(config.output_dir / "truth.json", {{"scenario", scenario.label()},
                                                    {"truth", scenario.truth},
                                                    {"parameters", scenario.parameters},
                                                    {"empirical_missing_rate", missing_rate},
                                                    {"n", data.n()}});
  return data;
}

std::vector<fcs::CompletedDataset> cmd_impute(const RunConfig& config, const fs::path& data_csv) {
  const Dataset data = io::read_dataset_csv(data_csv, categorical_set(config));
  const fcs::FcsConfig fc = resolved_fcs(config);
  fcs::SweepStats stats;
  auto completed = fcs::impute(data, fc, &stats);
  write_resolved(config, "impute", {{"data", data_csv.string()}});
  io::write_completed(config.output_dir, "imputed", completed, fc,
                      {{"input", data_csv.string()},
                       {"n", data.n()},
                       {"fits", stats.fits},
                       {"escalated_fits", stats.escalated_fits},
                       {"nonconverged_fits", stats.nonconverged_fits}});
  return completed;
}

std::vector<analysis::PooledResult> cmd_analyze(const RunConfig& config, const std::vector<fs::path>& completed) {
  if (completed.empty()) throw ValidationError("analyze: no completed datasets given");
  std::vector<glm::GlmFit> fits;
  analysis::AnalysisSpec spec;
  for (std::size_t i = 0; i < completed.size(); ++i) {
    const Dataset data = io::read_dataset_csv(completed[i], categorical_set(config));
    if (!data.complete()) throw ValidationError("analyze: '" + completed[i].string() + "' still has missing outcomes");
    if (i == 0) spec = analysis_spec(config, data);
    try {
      fits.push_back(analysis::analysis_model(data, spec));
    } catch (const Error& e) {
      throw ValidationError("analyze: imputation " + std::to_string(i + 1) + " (" + completed[i].string() +
                            "): " + e.what());
    }
  }
  auto pooled = analysis::pool_coefficients(fits);
  for (const auto& c : config.analysis.contrasts) {
    if (config.analysis.group.empty()) throw ValidationError("analyze: contrasts need analysis.group");
    std::vector<analysis::EstimateWithVariance> per;
    for (const auto& f : fits) per.push_back(analysis::contrast(f, config.analysis.group, c.level_a, c.level_b));
    auto r = analysis::rubin_pool(per);
    r.label = config.analysis.group + ": " + c.label();
    pooled.push_back(std::move(r));
  }
  if (fits.size() == 1) {
    std::cerr << "warning: a single imputation gives no between-imputation variance; df is infinite\n";
  }
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& p : completed) inputs.push_back(p.string());
  write_resolved(config, "analyze", {{"completed", inputs}});
  io::write_text_atomic(config.output_dir / "pooled.csv", io::pooled_csv(pooled));
  return pooled;
}

study::SimulationResult cmd_simulate(const RunConfig& config) {
  const auto scenario = scenarios::make_scenario(config.scenario.name, config.scenario.params);
  study::SimulationConfig sc;
  sc.n = config.n;
  sc.replicates = config.replicates;
  sc.methods = config.methods;
  sc.t_imputations = config.fcs.t_imputations;
  sc.r_iterations = config.fcs.r_iterations;
  sc.ridge = config.fcs.ridge;
  sc.seed = config.seed;
  auto result = study::simulate(scenario, sc);
  write_resolved(config, "simulate");
  std::string csv = "scenario,method,outcome,truth,mean_bias,mc_se,completed,failed\n";
  for (const auto& m : result.methods) {
    for (std::size_t k = 0; k < m.mean_bias.size(); ++k) {
      csv += "\"" + scenario.label() + "\"," + method_label(m.method) + "," + std::to_string(k + 1) + "," +
             io::format_number(result.truth[k]) + "," + io::format_number(m.mean_bias[k]) + "," +
             io::format_number(m.mc_se[k]) + "," + std::to_string(m.completed) + "," + std::to_string(m.failed) + "\n";
    }
  }
  io::write_text_atomic(config.output_dir / "bias.csv", csv);
  if (!result.failures.empty()) {
    std::string log;
    for (const auto& f : result.failures) log += f + "\n";
    io::write_text_atomic(config.output_dir / "failures.log", log);
    std::cerr << "warning: " << result.failures.size() << " replicate failures (see failures.log)\n";
  }
  return result;
}

std::vector<ScenarioChoice> table_grid(int table) {
  std::vector<ScenarioChoice> grid;
  if (table == 1) {
    for (double r : {0.2, 0.3, 0.4}) grid.push_back({"nsc-main", {r, -0.5, 0.5}});
  } else if (table == 2) {
    for (double l : {-0.5, -1.0, -2.0}) grid.push_back({"nsc-ym", {0.3, l, 0.5}});
  } else if (table == 3) {
    for (double yy : {0.5, 2.0}) {
      for (double r : {0.2, 0.3, 0.4}) grid.push_back({"mar-blocks", {r, -0.5, yy}});
    }
  } else {
    throw ValidationError("table must be 1, 2 or 3");
  }
  return grid;
}

std::vector<AsymptoticRow> cmd_asymptotic(const RunConfig& config, const std::vector<ScenarioChoice>& grid) {
  std::vector<AsymptoticRow> rows;
  for (const auto& choice : grid) {
    const auto scenario = scenarios::make_scenario(choice.name, choice.params);
    for (auto method : config.methods) {
      const auto bias = population::asymptotic_bias(scenario, method);
      for (std::size_t k = 0; k < bias.size(); ++k) {
        rows.push_back({choice.name, parameter_label(choice), method_label(method), static_cast<int>(k + 1), bias[k]});
      }
    }
  }
  write_resolved(config, "asymptotic");
  std::string csv = "scenario,parameter,method,outcome,percent_bias\n";
  for (const auto& r : rows) {
    csv += r.scenario + "," + r.parameter + "," + r.method + "," + std::to_string(r.outcome) + "," +
           io::format_number(r.percent_bias) + "\n";
  }
  io::write_text_atomic(config.output_dir / "asymptotic.csv", csv);
  return rows;
}

std::vector<study::GridPoint> cmd_sensitivity(const RunConfig& config, const fs::path& data_csv) {
  if (config.analysis.group.empty()) throw ValidationError("sensitivity: analysis.group (--group) is required");
  if (config.analysis.contrasts.empty()) throw ValidationError("sensitivity: at least one --contrast is required");
  const Dataset data = io::read_dataset_csv(data_csv, categorical_set(config));
  study::SensitivityConfig sc;
  sc.fcs = resolved_fcs(config);
  sc.analysis = analysis_spec(config, data);
  sc.group_covariate = config.analysis.group;
  sc.contrasts = config.analysis.contrasts;
  sc.axis_a = config.sensitivity.axis_a;
  sc.axis_b = config.sensitivity.axis_b;
  sc.threshold = config.sensitivity.threshold;
  const auto points = study::sensitivity_grid(data, sc);
  write_resolved(config, "sensitivity", {{"data", data_csv.string()}});
  io::write_text_atomic(config.output_dir / "sensitivity.csv", io::grid_csv(points, &sc.threshold));
  std::size_t failed = 0;
  for (const auto& p : points) failed += p.failed ? 1 : 0;
  const auto a = sc.axis_a.values();
  const auto b = sc.axis_b.values();
  io::write_json(config.output_dir / "sensitivity_metadata.json",
                 {{"points_per_contrast", a.size() * b.size()},
                  {"contrasts", points.size() / (a.size() * b.size())},
                  {"failed_points", failed},
                  {"odds_ratio_range_a", {std::exp(a.front()), std::exp(a.back())}},
                  {"odds_ratio_range_b", {std::exp(b.front()), std::exp(b.back())}},
                  {"threshold", sc.threshold}});
  return points;
}

void cmd_reproduce(const RunConfig& config, int table, bool asymptotic_only) {
  const auto grid = table_grid(table);
  const std::vector<study::Method> order = {study::Method::kMar, study::Method::kNsc, study::Method::kAvailable};
  std::string header = "block,outcome";
  for (const auto& g : grid) {
    for (auto m : order) header += "," + parameter_label(g) + " " + method_label(m);
  }
  std::vector<std::vector<std::string>> finite(6), finite_se(6), asym(6);
  for (const auto& g : grid) {
    const auto scenario = scenarios::make_scenario(g.name, g.params);
    if (!asymptotic_only) {
      study::SimulationConfig sc;
      sc.n = config.n;
      sc.replicates = config.replicates;
      sc.methods = order;
      sc.t_imputations = config.fcs.t_imputations;
      sc.r_iterations = config.fcs.r_iterations;
      sc.ridge = config.fcs.ridge;
      sc.seed = config.seed;
      const auto result = study::simulate(scenario, sc);
      for (const auto& m : result.methods) {
        for (std::size_t k = 0; k < 6; ++k) {
          finite[k].push_back(io::format_number(m.mean_bias[k]));
          finite_se[k].push_back(io::format_number(m.mc_se[k]));
        }
      }
    }
    for (auto m : order) {
      const auto bias = population::asymptotic_bias(scenario, m);
      for (std::size_t k = 0; k < 6; ++k) asym[k].push_back(io::format_number(bias[k]));
    }
  }
  std::string csv = header + "\n";
  auto block = [&csv](const std::string& name, const std::vector<std::vector<std::string>>& rows) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      csv += name + ",Outcome " + std::to_string(k + 1);
      for (const auto& v : rows[k]) csv += "," + v;
      csv += "\n";
    }
  };
  if (!asymptotic_only) {
    block("N=" + std::to_string(config.n), finite);
    block("MC SE", finite_se);
  }
  block("Asymptotic", asym);
  write_resolved(config, "reproduce", {{"table", table}, {"asymptotic_only", asymptotic_only}});
  io::write_text_atomic(config.output_dir / ("table" + std::to_string(table) + ".csv"), csv);
}

}  // namespace nscmi::cli
