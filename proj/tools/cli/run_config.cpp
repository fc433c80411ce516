#include "run_config.hpp"

#include <set>

#include "nscmi/error.hpp"

namespace nscmi::cli {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ValidationError("config: '" + where + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ValidationError("config: unknown key '" + key + "' in " + where);
  }
}

nlohmann::json axis_json(const study::GridAxis& a) { return {{"lo", a.lo}, {"hi", a.hi}, {"step", a.step}}; }

study::GridAxis axis_from(const nlohmann::json& j, const std::string& where) {
  reject_unknown(j, {"lo", "hi", "step"}, where);
  study::GridAxis a;
  a.lo = j.value("lo", a.lo);
  a.hi = j.value("hi", a.hi);
  a.step = j.value("step", a.step);
  return a;
}

}  // namespace

study::Method parse_method(const std::string& s) {
  if (s == "nsc") return study::Method::kNsc;
  if (s == "mar") return study::Method::kMar;
  if (s == "available") return study::Method::kAvailable;
  throw ValidationError("unknown method '" + s + "' (expected nsc, mar or available)");
}

study::Contrast parse_contrast(const std::string& s) {
  const auto pos = s.find(':');
  if (pos == std::string::npos || pos == 0 || pos + 1 == s.size()) {
    throw ValidationError("contrast '" + s + "' must look like LEVEL_A:LEVEL_B");
  }
  return {s.substr(0, pos), s.substr(pos + 1)};
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json methods_json = nlohmann::json::array();
  for (auto m : methods) methods_json.push_back(population::to_string(m));
  nlohmann::json contrasts = nlohmann::json::array();
  for (const auto& c : analysis.contrasts) contrasts.push_back(c.level_a + ":" + c.level_b);
  return {
      {"scenario",
       {{"name", scenario.name},
        {"missing_rate", scenario.params.missing_rate},
        {"lambda3", scenario.params.lambda3},
        {"lambda_yy", scenario.params.lambda_yy}}},
      {"n", n},
      {"replicates", replicates},
      {"methods", methods_json},
      {"seed", seed},
      {"output_dir", output_dir.string()},
      {"fcs", fcs.to_json()},
      {"analysis",
       {{"endpoint", analysis.endpoint},
        {"covariates", analysis.covariates},
        {"reference", analysis.reference},
        {"categorical", analysis.categorical},
        {"group", analysis.group},
        {"contrasts", contrasts}}},
      {"sensitivity",
       {{"axis_a", axis_json(sensitivity.axis_a)},
        {"axis_b", axis_json(sensitivity.axis_b)},
        {"threshold", sensitivity.threshold}}},
  };
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  reject_unknown(j, {"scenario", "n", "replicates", "methods", "seed", "output_dir", "fcs", "analysis", "sensitivity"},
                 "config");
  RunConfig c;
  try {
    if (j.contains("scenario")) {
      const auto& s = j["scenario"];
      reject_unknown(s, {"name", "missing_rate", "lambda3", "lambda_yy"}, "scenario");
      c.scenario.name = s.value("name", c.scenario.name);
      c.scenario.params.missing_rate = s.value("missing_rate", c.scenario.params.missing_rate);
      c.scenario.params.lambda3 = s.value("lambda3", c.scenario.params.lambda3);
      c.scenario.params.lambda_yy = s.value("lambda_yy", c.scenario.params.lambda_yy);
    }
    if (j.contains("n")) {
      const auto n = j["n"].get<long long>();
      if (n < 0) throw ValidationError("config: n must be positive");
      c.n = static_cast<std::size_t>(n);
    }
    c.replicates = j.value("replicates", c.replicates);
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j["methods"]) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    c.seed = j.value("seed", c.seed);
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("fcs")) c.fcs = fcs::FcsConfig::from_json(j["fcs"]);
    if (j.contains("analysis")) {
      const auto& a = j["analysis"];
      reject_unknown(a, {"endpoint", "covariates", "reference", "categorical", "group", "contrasts"}, "analysis");
      c.analysis.endpoint = a.value("endpoint", c.analysis.endpoint);
      if (a.contains("covariates")) c.analysis.covariates = a["covariates"].get<std::vector<std::string>>();
      if (a.contains("reference")) c.analysis.reference = a["reference"].get<std::map<std::string, std::string>>();
      if (a.contains("categorical")) c.analysis.categorical = a["categorical"].get<std::vector<std::string>>();
      c.analysis.group = a.value("group", c.analysis.group);
      if (a.contains("contrasts")) {
        for (const auto& s : a["contrasts"]) c.analysis.contrasts.push_back(parse_contrast(s.get<std::string>()));
      }
    }
    if (j.contains("sensitivity")) {
      const auto& s = j["sensitivity"];
      reject_unknown(s, {"axis_a", "axis_b", "threshold"}, "sensitivity");
      if (s.contains("axis_a")) c.sensitivity.axis_a = axis_from(s["axis_a"], "sensitivity.axis_a");
      if (s.contains("axis_b")) c.sensitivity.axis_b = axis_from(s["axis_b"], "sensitivity.axis_b");
      c.sensitivity.threshold = s.value("threshold", c.sensitivity.threshold);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

}  // namespace nscmi::cli
