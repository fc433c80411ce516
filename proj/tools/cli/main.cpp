#include <exception>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "nscmi/error.hpp"
#include "nscmi/io.hpp"

namespace {

using nscmi::cli::RunConfig;

// Flags layered over the JSON config; only options actually given are applied.
struct Overrides {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t n = 0;
  int replicates = 0;
  std::vector<std::string> methods;
  std::string scenario;
  double missing_rate = 0.0;
  double lambda3 = 0.0;
  double lambda_yy = 0.0;
  std::string mechanism;
  int t = 0;
  int r = 0;
  double ridge = 0.0;
  std::string covariate_design;
  std::string design_covariate;
  bool ym_interactions = false;
  std::string endpoint;
  std::vector<std::string> covariates;
  std::vector<std::string> reference;
  std::vector<std::string> categorical;
  std::string group;
  std::vector<std::string> contrasts;
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;
  double threshold = 0.0;
  std::vector<double> offsets;

  std::map<std::string, CLI::Option*> opts;

  void attach(CLI::App* app) {
    opts["config"] = app->add_option("--config", config_path, "JSON run config");
    opts["seed"] = app->add_option("--seed", seed, "master seed");
    opts["out"] = app->add_option("--out", out, "output directory");
    opts["n"] = app->add_option("--n", n, "sample size");
    opts["replicates"] = app->add_option("--replicates", replicates, "Monte-Carlo replicates");
    opts["methods"] = app->add_option("--methods", methods, "nsc, mar, available")->delimiter(',');
    opts["scenario"] = app->add_option("--scenario", scenario, "nsc-main, nsc-ym or mar-blocks");
    opts["missing_rate"] = app->add_option("--missing-rate", missing_rate);
    opts["lambda3"] = app->add_option("--lambda3", lambda3, "Y-Y-M interaction (nsc-ym)");
    opts["lambda_yy"] = app->add_option("--lambda-yy", lambda_yy, "Y-Y association (mar-blocks)");
    opts["mechanism"] = app->add_option("--mechanism", mechanism, "nsc or mar");
    opts["t"] = app->add_option("--t", t, "number of imputations");
    opts["r"] = app->add_option("--r", r, "FCS sweeps per imputation");
    opts["ridge"] = app->add_option("--ridge", ridge);
    opts["covariate_design"] =
        app->add_option("--covariate-design", covariate_design, "none, main-effects, group-interactions, stratify-by");
    opts["design_covariate"] = app->add_option("--design-covariate", design_covariate);
    opts["ym_interactions"] = app->add_flag("--ym-interactions", ym_interactions, "add Y*M product columns");
    opts["endpoint"] = app->add_option("--endpoint", endpoint, "consecN or an outcome column");
    opts["covariates"] = app->add_option("--covariates", covariates, "analysis covariates")->delimiter(',');
    opts["reference"] = app->add_option("--reference", reference, "COVARIATE=LEVEL");
    opts["categorical"] = app->add_option("--categorical", categorical, "treat columns as categorical")->delimiter(',');
    opts["group"] = app->add_option("--group", group, "covariate whose levels are contrasted");
    opts["contrast"] = app->add_option("--contrast", contrasts, "LEVEL_A:LEVEL_B");
    opts["lo"] = app->add_option("--lo", lo, "grid lower bound (both axes)");
    opts["hi"] = app->add_option("--hi", hi, "grid upper bound (both axes)");
    opts["step"] = app->add_option("--step", step, "grid step (both axes)");
    opts["threshold"] = app->add_option("--threshold", threshold, "significance level for the grid flag");
    opts["offsets"] = app->add_option("--offsets", offsets, "per-outcome sensitivity offsets")->delimiter(',');
  }

  bool given(const std::string& name) const { return opts.at(name)->count() > 0; }

  RunConfig resolve() const {
    RunConfig c;
    if (given("config")) c = RunConfig::from_json(nscmi::io::read_json(config_path));
    if (given("seed")) c.seed = seed;
    if (given("out")) c.output_dir = out;
    if (given("n")) c.n = n;
    if (given("replicates")) c.replicates = replicates;
    if (given("methods")) {
      c.methods.clear();
      for (const auto& m : methods) c.methods.push_back(nscmi::cli::parse_method(m));
    }
    if (given("scenario")) c.scenario.name = scenario;
    if (given("missing_rate")) c.scenario.params.missing_rate = missing_rate;
    if (given("lambda3")) c.scenario.params.lambda3 = lambda3;
    if (given("lambda_yy")) c.scenario.params.lambda_yy = lambda_yy;
    if (given("mechanism")) c.fcs.mechanism = nscmi::fcs::parse_mechanism(mechanism);
    if (given("t")) c.fcs.t_imputations = t;
    if (given("r")) c.fcs.r_iterations = r;
    if (given("ridge")) c.fcs.ridge = ridge;
    if (given("covariate_design")) c.fcs.covariate_design = nscmi::fcs::parse_covariate_design(covariate_design);
    if (given("design_covariate")) c.fcs.design_covariate = design_covariate;
    if (given("ym_interactions")) c.fcs.ym_interactions = ym_interactions;
    if (given("offsets")) c.fcs.sensitivity.per_outcome = offsets;
    if (given("endpoint")) c.analysis.endpoint = endpoint;
    if (given("covariates")) c.analysis.covariates = covariates;
    for (const auto& ref : reference) {
      const auto pos = ref.find('=');
      if (pos == std::string::npos) throw nscmi::ValidationError("--reference expects COVARIATE=LEVEL");
      c.analysis.reference[ref.substr(0, pos)] = ref.substr(pos + 1);
    }
    if (given("categorical")) c.analysis.categorical = categorical;
    if (given("group")) c.analysis.group = group;
    if (given("contrast")) {
      c.analysis.contrasts.clear();
      for (const auto& s : contrasts) c.analysis.contrasts.push_back(nscmi::cli::parse_contrast(s));
    }
    for (auto* axis : {&c.sensitivity.axis_a, &c.sensitivity.axis_b}) {
      if (given("lo")) axis->lo = lo;
      if (given("hi")) axis->hi = hi;
      if (given("step")) axis->step = step;
    }
    if (given("threshold")) c.sensitivity.threshold = threshold;
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiple imputation for non-monotone missing binary outcomes under no self-censoring"};
  app.require_subcommand(1);

  Overrides ov_gen, ov_impute, ov_analyze, ov_simulate, ov_asym, ov_sens, ov_repro;
  auto* gen = app.add_subcommand("gen", "sample a scenario dataset");
  ov_gen.attach(gen);

  std::string data_path;
  auto* impute = app.add_subcommand("impute", "multiply impute a dataset");
  impute->add_option("--data", data_path, "dataset CSV")->required();
  ov_impute.attach(impute);

  std::vector<std::string> completed;
  auto* analyze = app.add_subcommand("analyze", "fit the analysis model and pool with Rubin's rules");
  analyze->add_option("--completed", completed, "completed dataset CSVs")->required();
  ov_analyze.attach(analyze);

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo bias study");
  ov_simulate.attach(simulate);

  int asym_table = 0;
  auto* asymptotic = app.add_subcommand("asymptotic", "exact large-sample bias");
  asymptotic->add_option("--table", asym_table, "1, 2 or 3 (default: all settings of all three)");
  ov_asym.attach(asymptotic);

  std::string sens_data;
  auto* sensitivity = app.add_subcommand("sensitivity", "sensitivity grid over group-specific offsets");
  sensitivity->add_option("--data", sens_data, "dataset CSV")->required();
  ov_sens.attach(sensitivity);

  int repro_table = 1;
  bool asymptotic_only = false;
  auto* reproduce = app.add_subcommand("reproduce", "regenerate a bias table");
  reproduce->add_option("--table", repro_table, "1, 2 or 3")->required();
  reproduce->add_flag("--asymptotic-only", asymptotic_only, "skip the Monte-Carlo block");
  ov_repro.attach(reproduce);

  bool defaults = false;
  auto* config = app.add_subcommand("config", "print configuration");
  config->add_flag("--defaults", defaults, "print every default")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      nscmi::cli::cmd_gen(ov_gen.resolve());
    } else if (*impute) {
      nscmi::cli::cmd_impute(ov_impute.resolve(), data_path);
    } else if (*analyze) {
      std::vector<std::filesystem::path> paths(completed.begin(), completed.end());
      for (const auto& r : nscmi::cli::cmd_analyze(ov_analyze.resolve(), paths)) {
        std::cout << r.label << ": " << r.estimate << " (se " << r.se() << ", p " << r.p_value << ")\n";
      }
    } else if (*simulate) {
      nscmi::cli::cmd_simulate(ov_simulate.resolve());
    } else if (*asymptotic) {
      std::vector<nscmi::cli::ScenarioChoice> grid;
      for (int t : asym_table ? std::vector<int>{asym_table} : std::vector<int>{1, 2, 3}) {
        const auto g = nscmi::cli::table_grid(t);
        grid.insert(grid.end(), g.begin(), g.end());
      }
      nscmi::cli::cmd_asymptotic(ov_asym.resolve(), grid);
    } else if (*sensitivity) {
      nscmi::cli::cmd_sensitivity(ov_sens.resolve(), sens_data);
    } else if (*reproduce) {
      nscmi::cli::cmd_reproduce(ov_repro.resolve(), repro_table, asymptotic_only);
    } else if (*config) {
      std::cout << nscmi::cli::default_config().dump(2) << "\n";
    }
  } catch (const nscmi::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nscmi::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
