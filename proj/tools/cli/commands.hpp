#pragma once

#include <filesystem>
#include <vector>

#include "nscmi/analysis.hpp"
#include "nscmi/study.hpp"
#include "run_config.hpp"

namespace nscmi::cli {

namespace fs = std::filesystem;

// Every command writes resolved_config.json into config.output_dir.

// data.csv, truth.json, table.csv (+ spec.json for loglinear scenarios).
Dataset cmd_gen(const RunConfig& config);

// imputed_NNN.csv + imputed_metadata.json.
std::vector<fcs::CompletedDataset> cmd_impute(const RunConfig& config, const fs::path& data_csv);

// pooled.csv: one row per model coefficient, then one per requested contrast.
std::vector<analysis::PooledResult> cmd_analyze(const RunConfig& config, const std::vector<fs::path>& completed);

// bias.csv: method, outcome, truth, mean_bias, mc_se, completed, failed.
study::SimulationResult cmd_simulate(const RunConfig& config);

struct AsymptoticRow {
  std::string scenario;
  std::string parameter;
  std::string method;
  int outcome = 0;
  double percent_bias = 0.0;
};

// asymptotic.csv over the given scenarios (default: every table setting).
std::vector<AsymptoticRow> cmd_asymptotic(const RunConfig& config, const std::vector<ScenarioChoice>& grid);
std::vector<ScenarioChoice> table_grid(int table);

// sensitivity.csv (long format) + sensitivity_metadata.json.
std::vector<study::GridPoint> cmd_sensitivity(const RunConfig& config, const fs::path& data_csv);

// tableN.csv with the finite-sample block (unless asymptotic_only) and the
// asymptotic block, laid out like the published bias tables.
void cmd_reproduce(const RunConfig& config, int table, bool asymptotic_only);

nlohmann::json default_config();

}  // namespace nscmi::cli
