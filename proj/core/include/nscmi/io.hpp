#pragma once

// File formats. CSVs are comma separated with a header row and NA for
// missing; every writer goes through a temporary file and a rename.

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nscmi/analysis.hpp"
#include "nscmi/dataset.hpp"
#include "nscmi/fcs.hpp"
#include "nscmi/loglinear.hpp"
#include "nscmi/study.hpp"

namespace nscmi::io {

namespace fs = std::filesystem;

void write_text_atomic(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

nlohmann::json read_json(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& j);

// cell_index, m_bits, y_bits, prob
std::string table_csv(const loglinear::JointTable& table);

// Outcome columns are those named y1, y2, ... (in order); every other column
// is a covariate. A covariate is continuous when every value parses as a
// number, unless it is listed in `categorical`. NA in a covariate is rejected
// with the row and column named.
Dataset parse_dataset_csv(const std::string& text, const std::set<std::string>& categorical = {});
Dataset read_dataset_csv(const fs::path& path, const std::set<std::string>& categorical = {});
std::string dataset_csv(const Dataset& data);

// One CSV per imputation (prefix_001.csv, ...) plus prefix_metadata.json.
std::vector<fs::path> write_completed(const fs::path& dir, const std::string& prefix,
                                      const std::vector<fcs::CompletedDataset>& completed,
                                      const fcs::FcsConfig& config, const nlohmann::json& extra = {});

// parameter, estimate, se, df, p, T
std::string pooled_csv(const std::vector<analysis::PooledResult>& rows);

// contrast, lambda_a, lambda_b, odds_ratio_a, odds_ratio_b, log_or, se, df, p[, significant], error
std::string grid_csv(const std::vector<study::GridPoint>& points, const double* threshold);

// Writes a double without trailing noise (17 significant digits when needed).
std::string format_number(double v);

}  // namespace nscmi::io
