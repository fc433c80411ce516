#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nscmi/fcs.hpp"
#include "nscmi/scenarios.hpp"
#include "nscmi/study.hpp"

namespace nscmi::cli {

struct ScenarioChoice {
  std::string name = "nsc-main";
  scenarios::ScenarioParams params;
};

struct AnalysisChoice {
  std::string endpoint = "consec3";
  std::vector<std::string> covariates;
  std::map<std::string, std::string> reference;
  std::vector<std::string> categorical;  // force these CSV columns to categorical
  std::string group;                     // covariate whose levels are contrasted
  std::vector<study::Contrast> contrasts;
};

struct SensitivityChoice {
  study::GridAxis axis_a;
  study::GridAxis axis_b;
  double threshold = 0.05;
};

// Everything a command needs. Loaded from JSON, then overridden by flags; the
// resolved copy is written next to the outputs.
struct RunConfig {
  ScenarioChoice scenario;
  std::size_t n = 200;
  int replicates = 1000;
  std::vector<study::Method> methods = {study::Method::kNsc, study::Method::kMar, study::Method::kAvailable};
  std::uint64_t seed = 20240501;
  std::filesystem::path output_dir = "nscmi-out";
  fcs::FcsConfig fcs;
  AnalysisChoice analysis;
  SensitivityChoice sensitivity;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

study::Method parse_method(const std::string& s);
study::Contrast parse_contrast(const std::string& s);  // "A:B"

}  // namespace nscmi::cli
