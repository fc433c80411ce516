// Acceptance suite: one PASS/FAIL line per criterion.
//   nscmi_acceptance [--only 1,4,9] [--report path]
// Exit status is non-zero when a binding criterion fails. Criterion 4 is
// reported but never affects the exit status.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nscmi/analysis.hpp"
#include "nscmi/error.hpp"
#include "nscmi/fcs.hpp"
#include "nscmi/loglinear.hpp"
#include "nscmi/population.hpp"
#include "nscmi/rng.hpp"
#include "nscmi/scenarios.hpp"
#include "nscmi/study.hpp"
#include "oracles.hpp"

using namespace nscmi;
using loglinear::JointTable;
using population::Method;

namespace {

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string join(const std::vector<double>& v, const char* f = "%.3f") {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt(f, x);
  return s;
}

const std::vector<double> kRates = {0.2, 0.3, 0.4};

// ---------------------------------------------------------------- 1
Outcome c1() {
  Outcome o{true, "", {}};
  double worst = 0.0;
  for (double rate : kRates) {
    const auto b = population::asymptotic_bias(scenarios::main_effect_nsc(rate), Method::kNsc);
    for (double v : b) worst = std::max(worst, std::abs(v));
    o.details.push_back("rate " + fmt("%.1f", rate) + " NSC bias: " + join(b, "%.2e"));
  }
  o.pass = worst <= 0.1;
  o.summary = "scenario-1 asymptotic FCS-NSC |bias| max " + fmt("%.2e", worst) + " pp (<= 0.1)";
  return o;
}

// ---------------------------------------------------------------- 2
Outcome c2() {
  Outcome o{true, "", {}};
  double worst = 0.0;
  for (double yy : {0.5, 2.0}) {
    for (double rate : kRates) {
      const auto b = population::asymptotic_bias(scenarios::mar_blocks(yy, rate), Method::kMar);
      for (double v : b) worst = std::max(worst, std::abs(v));
      o.details.push_back("lambda_yy " + fmt("%.1f", yy) + " rate " + fmt("%.1f", rate) + " MAR bias: " + join(b, "%.2e"));
    }
  }
  o.pass = worst <= 0.1;
  o.summary = "scenario-3 asymptotic FCS-MAR |bias| max " + fmt("%.2e", worst) + " pp (<= 0.1)";
  return o;
}

// ---------------------------------------------------------------- 3
Outcome c3() {
  Outcome o{true, "", {}};
  std::vector<std::vector<double>> mar;
  for (double rate : kRates) {
    mar.push_back(population::asymptotic_bias(scenarios::main_effect_nsc(rate), Method::kMar));
    o.details.push_back("scenario-1 rate " + fmt("%.1f", rate) + " MAR: " + join(mar.back()));
  }
  bool signs = true, monotone = true;
  for (std::size_t r = 0; r < mar.size(); ++r) {
    for (std::size_t k = 0; k < 6; ++k) {
      if (k < 3 ? !(mar[r][k] < 0) : !(mar[r][k] > 0)) signs = false;
      if (r > 0 && !(std::abs(mar[r][k]) > std::abs(mar[r - 1][k]))) monotone = false;
    }
  }
  bool nsc_biased = true;
  for (double yy : {0.5, 2.0}) {
    const auto b = population::asymptotic_bias(scenarios::mar_blocks(yy, 0.3), Method::kNsc);
    double worst = 0.0;
    for (double v : b) worst = std::max(worst, std::abs(v));
    if (!(worst > 0.5)) nsc_biased = false;
    o.details.push_back("scenario-3 lambda_yy " + fmt("%.1f", yy) + " rate 0.3 NSC: " + join(b));
  }
  o.pass = signs && monotone && nsc_biased;
  o.summary = std::string("MAR on scenario-1: signs ") + (signs ? "ok" : "WRONG") + ", growth with rate " +
              (monotone ? "ok" : "WRONG") + "; NSC on scenario-3 biased (> 0.5 pp): " + (nsc_biased ? "yes" : "NO");
  return o;
}

// ---------------------------------------------------------------- 4
struct Reference {
  std::string table;
  std::string setting;
  std::string method;
  double low;   // outcomes 1-3
  double high;  // outcomes 4-6
  double tol;
  std::function<scenarios::ScenarioOutput()> make;
  Method m;
};

Outcome c4(const std::string& report_path) {
  using scenarios::main_effect_nsc;
  using scenarios::mar_blocks;
  using scenarios::ym_interaction_nsc;
  std::vector<Reference> refs;
  const double t1_av[3][2] = {{-26.47, 17.65}, {-47.30, 31.53}, {-71.37, 47.57}};
  const double t1_mar[3][2] = {{-2.67, 1.78}, {-8.92, 5.94}, {-36.32, 24.18}};
  for (int i = 0; i < 3; ++i) {
    const double r = kRates[static_cast<std::size_t>(i)];
    const auto make = [r] { return main_effect_nsc(r); };
    refs.push_back({"1", "rate " + fmt("%.1f", r), "available", t1_av[i][0], t1_av[i][1], 0.5, make, Method::kAvailable});
    refs.push_back({"1", "rate " + fmt("%.1f", r), "MAR", t1_mar[i][0], t1_mar[i][1], 0.5, make, Method::kMar});
  }
  const double l3[3] = {-0.5, -1.0, -2.0};
  const double t2_mar[3][2] = {{-14.31, 33.37}, {-5.80, 11.34}, {10.95, -8.98}};
  const double t2_nsc[3][2] = {{0.17, 1.15}, {0.18, 6.02}, {-0.19, -14.22}};
  const double t2_av[3][2] = {{-43.97, 51.27}, {5.82, 26.36}, {55.92, 20.11}};
  for (int i = 0; i < 3; ++i) {
    const double l = l3[i];
    const auto make = [l] { return ym_interaction_nsc(l); };
    const std::string s = "lambda3 " + fmt("%.1f", l);
    refs.push_back({"2", s, "MAR", t2_mar[i][0], t2_mar[i][1], 1.5, make, Method::kMar});
    refs.push_back({"2", s, "NSC", t2_nsc[i][0], t2_nsc[i][1], 1.5, make, Method::kNsc});
    refs.push_back({"2", s, "available", t2_av[i][0], t2_av[i][1], 1.5, make, Method::kAvailable});
  }
  refs.push_back({"3", "lambda_yy 0.5 rate 0.3", "available", 3.74, -2.49, 1.0, [] { return mar_blocks(0.5, 0.3); },
                  Method::kAvailable});
  refs.push_back({"3", "lambda_yy 0.5 rate 0.3", "NSC", -9.18, 6.12, 1.0, [] { return mar_blocks(0.5, 0.3); },
                  Method::kNsc});

  Outcome o{true, "", {}};
  std::ostringstream report;
  report << "Calibration-mismatch report for the asymptotic bias tables\n"
         << "(contingent comparisons: they depend on free parameters the published tables do not fix)\n\n"
         << "table,setting,method,outcomes,reference,computed,difference,tolerance,within\n";
  int misses = 0;
  for (const auto& ref : refs) {
    const auto scenario = ref.make();
    const auto b = population::asymptotic_bias(scenario, ref.m);
    for (int half = 0; half < 2; ++half) {
      const double target = half == 0 ? ref.low : ref.high;
      double worst = 0.0, mean = 0.0;
      for (int k = half * 3; k < half * 3 + 3; ++k) {
        worst = std::max(worst, std::abs(b[static_cast<std::size_t>(k)] - target));
        mean += b[static_cast<std::size_t>(k)] / 3.0;
      }
      const bool ok = worst <= ref.tol;
      misses += ok ? 0 : 1;
      report << ref.table << "," << ref.setting << "," << ref.method << "," << (half == 0 ? "1-3" : "4-6") << ","
             << fmt("%.2f", target) << "," << fmt("%.3f", mean) << "," << fmt("%+.3f", mean - target) << ","
             << fmt("%.1f", ref.tol) << "," << (ok ? "yes" : "no") << "\n";
      if (!ok) {
        o.details.push_back("table " + ref.table + " " + ref.setting + " " + ref.method + " outcomes " +
                            (half == 0 ? "1-3" : "4-6") + ": reference " + fmt("%.2f", target) + ", computed " +
                            fmt("%.3f", mean));
      }
    }
  }
  report << "\nFree-parameter choices behind the computed values:\n";
  for (double r : kRates) {
    const auto s = main_effect_nsc(r);
    report << "  scenario 1, rate " << fmt("%.1f", r) << ": calibrated " << s.spec->to_json()["terms"].dump() << "\n";
  }
  for (double l : l3) {
    const auto s = ym_interaction_nsc(l);
    report << "  scenario 2, lambda3 " << fmt("%.1f", l) << ": main effects recalibrated with every Y_aY_bM_c = lambda3\n";
    (void)s;
  }
  for (double yy : {0.5, 2.0}) {
    for (double r : kRates) {
      report << "  scenario 3, lambda_yy " << fmt("%.1f", yy) << " rate " << fmt("%.1f", r) << ": "
             << mar_blocks(yy, r).parameters.dump() << "\n";
    }
  }
  report << "\nTargets: P(Y_k=1) = 0.4 (k<=3), 0.6 (k>3); P(M_k=1) = missing rate.\n";
  if (!report_path.empty()) {
    std::ofstream f(report_path);
    f << report.str();
  }
  o.pass = misses == 0;
  o.summary = std::to_string(misses) + " of " + std::to_string(2 * refs.size()) +
              " contingent cells outside tolerance (non-binding; report: " +
              (report_path.empty() ? std::string("stdout") : report_path) + ")";
  if (report_path.empty()) o.details.push_back(report.str());
  return o;
}

// ---------------------------------------------------------------- 5
Outcome c5(int replicates) {
  // Published N = 200 columns, outcomes 1..6.
  const double mar[3][6] = {{-2.51, -2.72, -2.58, 1.87, 1.90, 1.81},
                            {-8.23, -7.96, -7.86, 5.52, 5.54, 5.44},
                            {-31.61, -32.10, -30.99, 21.20, 20.94, 20.95}};
  const double nsc[3][6] = {{-0.10, -0.23, -0.15, 0.26, 0.28, 0.28},
                            {0.70, 0.77, 0.88, -0.46, -0.44, -0.18},
                            {1.28, 0.05, 0.84, -0.97, -0.60, -0.10}};
  const double av[3][6] = {{-26.38, -26.59, -26.28, 17.75, 17.92, 17.54},
                           {-47.58, -47.07, -46.94, 31.54, 31.64, 31.53},
                           {-70.99, -71.50, -71.20, 47.52, 47.53, 47.57}};
  Outcome o{true, "", {}};
  int misses = 0;
  double worst_nsc = 0.0, worst_other = 0.0;
  for (int i = 0; i < 3; ++i) {
    const auto scenario = scenarios::main_effect_nsc(kRates[static_cast<std::size_t>(i)]);
    study::SimulationConfig cfg;
    cfg.n = 200;
    cfg.replicates = replicates;
    cfg.t_imputations = 20;
    cfg.seed = 1000 + static_cast<std::uint64_t>(i);
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = study::simulate(scenario, cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& m : res.methods) {
      const double* ref = m.method == Method::kNsc ? nsc[i] : (m.method == Method::kMar ? mar[i] : av[i]);
      const double tol = m.method == Method::kNsc ? 1.5 : 2.0;
      std::string line = "rate " + fmt("%.1f", kRates[static_cast<std::size_t>(i)]) + " " +
                         population::to_string(m.method) + ":";
      for (std::size_t k = 0; k < 6; ++k) {
        const double d = std::abs(m.mean_bias[k] - ref[k]);
        (m.method == Method::kNsc ? worst_nsc : worst_other) =
            std::max(m.method == Method::kNsc ? worst_nsc : worst_other, d);
        if (d > tol) ++misses;
        line += " " + fmt("%.2f", m.mean_bias[k]) + "(" + fmt("%.2f", ref[k]) + ",se " + fmt("%.2f", m.mc_se[k]) + ")";
      }
      line += " failed " + std::to_string(m.failed);
      o.details.push_back(line);
    }
    o.details.push_back("rate " + fmt("%.1f", kRates[static_cast<std::size_t>(i)]) + " runtime " + fmt("%.0f", secs) + " s");
  }
  o.pass = misses == 0;
  o.summary = std::to_string(replicates) + " replicates x 3 rates: max |diff| NSC " + fmt("%.2f", worst_nsc) +
              " (<= 1.5), MAR/available " + fmt("%.2f", worst_other) + " (<= 2.0); " + std::to_string(misses) +
              " cells outside";
  return o;
}

// ---------------------------------------------------------------- 6
Outcome c6() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int counterexamples = 0, mar_tables = 0, total = 0;
  for (int i = 0; i < 1200; ++i) {
    const int k = 2 + i % 3;
    std::vector<oracle::Term> terms;
    if (i % 4 == 3) {
      // No Y-M association: MCAR, and hence MAR, by construction.
      for (const auto& t : oracle::random_nsc_terms(k, 2.0, 0.7, rng)) {
        if (t.ys.empty() || t.ms.empty()) terms.push_back(t);
      }
    } else {
      terms = oracle::random_nsc_terms(k, 2.0, 0.2 + 0.8 * u(rng), rng);
    }
    const auto spec = oracle::to_spec(k, terms);
    if (!loglinear::nsc_holds(spec)) return {false, "generator produced a non-NSC spec", {}};
    const auto table = loglinear::build_table(spec);
    const double mar = loglinear::mar_deviation(table).max_abs_deviation;
    const double mcar = loglinear::mcar_deviation(table).max_abs_deviation;
    ++total;
    if (mar <= 1e-9) {
      ++mar_tables;
      if (mcar > 1e-6) ++counterexamples;
    }
  }
  return {counterexamples == 0 && total >= 1000,
          std::to_string(total) + " random NSC specs (K 2-4, |lambda| <= 2): " + std::to_string(mar_tables) +
              " MAR, " + std::to_string(counterexamples) + " MAR-but-not-MCAR counterexamples",
          {}};
}

// ---------------------------------------------------------------- 7
Outcome c7() {
  int tables = 0, violations = 0, skipped = 0;
  auto check = [&](const JointTable& t) {
    const double mar = loglinear::mar_deviation(t).max_abs_deviation;
    const double mcar = loglinear::mcar_deviation(t).max_abs_deviation;
    if (!(mar <= 1e-12 && mcar > 1e-6)) {
      ++skipped;
      return;
    }
    ++tables;
    double worst = 0.0;
    for (int k = 1; k <= t.k(); ++k) worst = std::max(worst, loglinear::self_censoring_deviation(t, k).max_abs_deviation);
    if (!(worst > 1e-6)) ++violations;
  };
  for (double yy : {0.5, 2.0}) {
    for (double rate : kRates) check(scenarios::mar_blocks(yy, rate).table);
  }
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-1.5, 1.5), p(0.01, 0.3);
  for (int i = 0; i < 300; ++i) {
    const int k = i % 2 == 0 ? 4 : 6;
    std::vector<oracle::Term> terms;
    for (int a = 1; a <= k; ++a) {
      terms.push_back({{a}, {}, coef(rng)});
      for (int b = a + 1; b <= k; ++b) terms.push_back({{a, b}, {}, coef(rng)});
    }
    const auto joint = oracle::table(k, terms);
    std::vector<double> y_law(std::size_t{1} << k);
    double z = 0.0;
    for (std::size_t y = 0; y < y_law.size(); ++y) z += y_law[y] = joint[y << k];
    for (double& v : y_law) v /= z;
    std::vector<scenarios::BlockMechanism> blocks;
    for (int b = 1; b <= k / 2; ++b) blocks.push_back({b, b + k / 2, p(rng), p(rng), p(rng), p(rng), p(rng) / 3});
    check(scenarios::compose_mar_blocks(y_law, k, blocks));
  }
  return {violations == 0 && tables >= 300,
          std::to_string(tables) + " MAR-not-MCAR tables (scenario-3 family + random blocks): " +
              std::to_string(violations) + " without a self-censoring deviation > 1e-6",
          {std::to_string(skipped) + " generated tables were not MAR-not-MCAR and were skipped"}};
}

// ---------------------------------------------------------------- 8
bool preserved(const Dataset& original, const Dataset& completed) {
  if (!completed.complete()) return false;
  for (std::size_t i = 0; i < original.n(); ++i) {
    for (int k = 0; k < original.k(); ++k) {
      if (!original.missing(i, k) && original.y(i, k) != completed.y(i, k)) return false;
      if (completed.y(i, k) != 0 && completed.y(i, k) != 1) return false;
    }
  }
  return true;
}

Dataset add_group(const Dataset& d) {
  std::vector<std::string> raw;
  for (std::size_t i = 0; i < d.n(); ++i) raw.push_back(std::string(1, static_cast<char>('A' + i % 4)));
  return Dataset(d.k(), {d.outcomes().begin(), d.outcomes().end()}, {Covariate::categorical("g", raw)});
}

Outcome c8() {
  int checks = 0, failures = 0;
  std::vector<std::string> notes;
  auto expect = [&](bool ok, const std::string& what) {
    ++checks;
    if (!ok) {
      ++failures;
      if (notes.size() < 10) notes.push_back("failed: " + what);
    }
  };
  const std::vector<scenarios::ScenarioOutput> sources = {scenarios::main_effect_nsc(0.4), scenarios::mar_blocks(2.0, 0.3),
                                                          scenarios::ym_interaction_nsc(-1.0)};
  for (std::size_t si = 0; si < sources.size(); ++si) {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      const auto data = add_group(masked_dataset(loglinear::sample(sources[si].table, 160, seed * 31 + si), 6));
      for (auto mech : {fcs::Mechanism::kNsc, fcs::Mechanism::kMar}) {
        for (auto design : {fcs::CovariateDesign::kNone, fcs::CovariateDesign::kMainEffects,
                            fcs::CovariateDesign::kGroupInteractions, fcs::CovariateDesign::kStratifyBy}) {
          fcs::FcsConfig cfg;
          cfg.mechanism = mech;
          cfg.covariate_design = design;
          if (design != fcs::CovariateDesign::kNone) cfg.design_covariate = "g";
          cfg.t_imputations = 3;
          cfg.r_iterations = 3;
          cfg.seed = seed;
          const std::string tag = sources[si].label() + " seed " + std::to_string(seed) + " " + fcs::to_string(mech) +
                                  " " + fcs::to_string(design);
          std::vector<fcs::CompletedDataset> a;
          try {
            a = fcs::impute(data, cfg);
          } catch (const Error& e) {
            // Small strata may lack observed values; that is a reported error, not a silent one.
            expect(design == fcs::CovariateDesign::kStratifyBy, tag + ": " + e.what());
            continue;
          }
          const auto b = fcs::impute(data, cfg);
          for (std::size_t t = 0; t < a.size(); ++t) {
            expect(preserved(data, a[t].data), tag + " preservation");
            expect(a[t].data == b[t].data, tag + " determinism");
          }
          auto zero = cfg;
          zero.sensitivity.per_outcome.assign(6, 0.0);
          zero.sensitivity.group_covariate = "g";
          zero.sensitivity.per_level["B"] = std::vector<double>(6, 0.0);
          const auto z = fcs::impute(data, zero);
          for (std::size_t t = 0; t < a.size(); ++t) expect(z[t].data == a[t].data, tag + " zero-offset identity");

          auto draws = loglinear::sample(sources[si].table, 60, seed);
          for (auto& dr : draws) dr.m = 0;
          const auto full = add_group(masked_dataset(draws, 6));
          for (const auto& c : fcs::impute(full, cfg)) expect(c.data == full, tag + " fully observed idempotence");
        }
      }
    }
  }
  return {failures == 0, std::to_string(checks) + " invariant checks, " + std::to_string(failures) + " failures", notes};
}

// ---------------------------------------------------------------- 9
Outcome c9() {
  const std::vector<analysis::EstimateWithVariance> two = {{0.0, 1.0, "x"}, {1.0, 1.0, "x"}};
  const auto p = analysis::rubin_pool(two);
  const double nu = std::pow(1.0 + 1.0 / 0.75, 2);
  const bool exact = std::abs(p.estimate - 0.5) <= 1e-10 && std::abs(p.within - 1.0) <= 1e-10 &&
                     std::abs(p.between - 0.5) <= 1e-10 && std::abs(p.total - 1.75) <= 1e-10 &&
                     std::abs(p.df - nu) <= 1e-10;
  const std::vector<analysis::EstimateWithVariance> flat(3, {1.0, 0.25, "x"});
  const auto limit = analysis::rubin_pool(flat);
  bool continuous = std::isinf(limit.df) && limit.between == 0.0 &&
                    std::abs(limit.p_value - std::erfc(2.0 / std::sqrt(2.0))) <= 1e-12;
  double gap = 0.0;
  for (double eps : {1e-4, 1e-6, 1e-8}) {
    const std::vector<analysis::EstimateWithVariance> near = {{1 - eps, 0.25, "x"}, {1.0, 0.25, "x"}, {1 + eps, 0.25, "x"}};
    gap = std::abs(analysis::rubin_pool(near).p_value - limit.p_value);
    if (!(gap <= 10 * eps)) continuous = false;
  }
  return {exact && continuous,
          "T=2: Qbar " + fmt("%.12g", p.estimate) + ", T_var " + fmt("%.12g", p.total) + ", df " + fmt("%.10f", p.df) +
              "; B -> 0 p-value gap " + fmt("%.1e", gap),
          {}};
}

// ---------------------------------------------------------------- 10
Outcome c10() {
  const auto s = scenarios::main_effect_nsc(0.3);
  const auto pop = population::population_fcs(s.table, fcs::Mechanism::kNsc);
  const auto data = masked_dataset(loglinear::sample(s.table, 1000000, 10), 6);
  fcs::FcsConfig cfg;
  cfg.t_imputations = 1;
  cfg.r_iterations = 10;
  cfg.seed = 10;
  const auto completed = fcs::impute(data, cfg);
  const auto est = analysis::marginal_estimates(completed.front().data);
  double worst = 0.0;
  std::vector<double> finite;
  for (std::size_t k = 0; k < 6; ++k) {
    finite.push_back(est[k].value);
    worst = std::max(worst, std::abs(est[k].value - pop.marginals[k]));
  }
  return {worst <= 0.005, "n = 1e6, T = 1, R = 10: max |finite - population| = " + fmt("%.4f", worst) + " (<= 0.005)",
          {"finite: " + join(finite, "%.4f"), "population: " + join(pop.marginals, "%.4f")}};
}

// ---------------------------------------------------------------- 11
Outcome c11(int replicates) {
  const std::vector<std::string> levels = {"A", "B", "C", "D"};
  const double shift[4] = {0.0, 0.15, -0.1, 0.05};
  const auto base = scenarios::main_effect_nsc(0.3);
  std::vector<JointTable> tables;
  std::vector<double> prevalence;
  for (int g = 0; g < 4; ++g) {
    auto spec = *base.spec;
    for (int k = 1; k <= 6; ++k) spec.add(loglinear::term({k}), shift[g]);
    tables.push_back(loglinear::build_table(spec));
    // Exact endpoint prevalence by enumeration over the Y cells.
    double p = 0.0;
    const auto& t = tables.back();
    for (std::size_t c = 0; c < t.size(); ++c) {
      std::int8_t row[6];
      for (int j = 0; j < 6; ++j) row[j] = static_cast<std::int8_t>((t.y_bits(c) >> j) & 1U);
      p += t[c] * analysis::consecutive_abstinence(row, 3);
    }
    prevalence.push_back(p);
  }
  const auto logit = [](double p) { return std::log(p / (1 - p)); };
  const std::vector<study::Contrast> contrasts = {{"B", "A"}, {"C", "A"}, {"D", "B"}};
  std::vector<double> truth;
  for (const auto& c : contrasts) {
    const auto ia = std::find(levels.begin(), levels.end(), c.level_a) - levels.begin();
    const auto ib = std::find(levels.begin(), levels.end(), c.level_b) - levels.begin();
    truth.push_back(logit(prevalence[static_cast<std::size_t>(ia)]) - logit(prevalence[static_cast<std::size_t>(ib)]));
  }

  const std::size_t per_group = 100;
  auto make_data = [&](int r) {
    std::vector<std::int8_t> cells;
    std::vector<std::string> raw;
    for (int g = 0; g < 4; ++g) {
      const auto draws = loglinear::sample(tables[static_cast<std::size_t>(g)], per_group,
                                           derive_seed(11, Stream::kReplicate, static_cast<std::uint64_t>(r * 4 + g)));
      const auto d = masked_dataset(draws, 6);
      cells.insert(cells.end(), d.outcomes().begin(), d.outcomes().end());
      raw.insert(raw.end(), per_group, levels[static_cast<std::size_t>(g)]);
    }
    return Dataset(6, cells, {Covariate::categorical("arm", raw)});
  };
  fcs::FcsConfig cfg;
  cfg.mechanism = fcs::Mechanism::kNsc;
  cfg.covariate_design = fcs::CovariateDesign::kGroupInteractions;
  cfg.design_covariate = "arm";
  cfg.t_imputations = 20;
  cfg.r_iterations = 10;
  analysis::AnalysisSpec spec;
  spec.covariates = {"arm"};

  std::vector<int> covered(contrasts.size(), 0);
  std::vector<double> mean_est(contrasts.size(), 0.0);
  int done = 0, failed = 0;
  for (int r = 0; r < replicates; ++r) {
    const Dataset data = make_data(r);
    spec.endpoint = analysis::Endpoint::parse("consec3", data);
    cfg.seed = derive_seed(11, Stream::kMethod, static_cast<std::uint64_t>(r));
    try {
      const auto pooled = study::pooled_contrasts(data, cfg, spec, "arm", contrasts);
      for (std::size_t c = 0; c < contrasts.size(); ++c) {
        if (std::abs(pooled[c].estimate - truth[c]) <= 3 * pooled[c].se()) ++covered[c];
        mean_est[c] += pooled[c].estimate;
      }
      ++done;
    } catch (const Error&) {
      ++failed;
    }
  }
  Outcome o{true, "", {}};
  double worst_cov = 1.0;
  for (std::size_t c = 0; c < contrasts.size(); ++c) {
    const double cov = static_cast<double>(covered[c]) / replicates;
    worst_cov = std::min(worst_cov, cov);
    o.details.push_back(contrasts[c].label() + ": planted log-OR " + fmt("%.4f", truth[c]) + ", mean pooled " +
                        fmt("%.4f", done ? mean_est[c] / done : NAN) + ", coverage within 3 SE " + fmt("%.3f", cov));
  }
  o.details.push_back("endpoint prevalence by arm: " + join(prevalence, "%.4f") + "; failed replicates " +
                      std::to_string(failed));

  // The (0, 0) sensitivity point is the main analysis.
  const Dataset data = make_data(0);
  spec.endpoint = analysis::Endpoint::parse("consec3", data);
  cfg.seed = derive_seed(11, Stream::kMethod, 0);
  study::SensitivityConfig sc;
  sc.fcs = cfg;
  sc.analysis = spec;
  sc.group_covariate = "arm";
  sc.contrasts = contrasts;
  sc.axis_a = {0.0, 0.2, 0.1};
  sc.axis_b = {0.0, 0.2, 0.1};
  const auto grid = study::sensitivity_grid(data, sc);
  const auto main = study::pooled_contrasts(data, cfg, spec, "arm", contrasts);
  bool same = true;
  for (std::size_t c = 0; c < contrasts.size(); ++c) {
    const auto& point = grid[c * 9];
    if (point.failed || point.lambda_a != 0.0 || point.lambda_b != 0.0 ||
        point.pooled.estimate != main[c].estimate || point.pooled.total != main[c].total ||
        point.pooled.p_value != main[c].p_value) {
      same = false;
    }
  }
  o.pass = worst_cov >= 0.95 && same && failed == 0;
  o.summary = std::to_string(replicates) + " replicates, T = 20: min coverage " + fmt("%.3f", worst_cov) +
              " (>= 0.95); grid (0,0) equals main analysis: " + (same ? "yes" : "NO");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nscmi acceptance suite"};
  std::vector<int> only;
  std::string report = "calibration_mismatch_report.txt";
  int sim_replicates = 1000;
  int app_replicates = 200;
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_option("--report", report, "where criterion 4 writes its report (empty: stdout)");
  app.add_option("--sim-replicates", sim_replicates, "replicates for criterion 5");
  app.add_option("--app-replicates", app_replicates, "replicates for criterion 11");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected(only.begin(), only.end());

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, c1},
      {2, c2},
      {3, c3},
      {4, [&] { return c4(report); }},
      {5, [&] { return c5(sim_replicates); }},
      {6, c6},
      {7, c7},
      {8, c8},
      {9, c9},
      {10, c10},
      {11, [&] { return c11(app_replicates); }},
  };
  bool ok = true;
  for (const auto& [id, run] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what(), {}};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool binding = id != 4;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << (binding ? "" : " (non-binding)") << ": "
              << o.summary << " [" << fmt("%.1f", secs) << " s]\n";
    for (const auto& d : o.details) std::cout << "    " << d << "\n";
    std::cout.flush();
    if (binding && !o.pass) ok = false;
  }
  return ok ? 0 : 1;
}
