#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "nscmi/dataset.hpp"
#include "nscmi/fcs.hpp"
#include "nscmi/glm.hpp"
#include "nscmi/loglinear.hpp"
#include "nscmi/population.hpp"
#include "nscmi/rng.hpp"
#include "nscmi/scenarios.hpp"

using namespace nscmi;

namespace {

const scenarios::ScenarioOutput& s1() {
  static const auto s = scenarios::main_effect_nsc(0.3);
  return s;
}

Dataset sample_data(std::size_t n) {
  const auto draws = loglinear::sample(s1().table, n, 7);
  return masked_dataset(draws, scenarios::kK);
}

void BM_BuildTable(benchmark::State& state) {
  const auto& spec = *s1().spec;
  for (auto _ : state) benchmark::DoNotOptimize(loglinear::build_table(spec));
}
BENCHMARK(BM_BuildTable);

// includes the 12-parameter main-effect calibration
void BM_CalibrateScenario(benchmark::State& state) {
  const double rate = 0.3;
  for (auto _ : state) benchmark::DoNotOptimize(scenarios::main_effect_nsc(rate));
}
BENCHMARK(BM_CalibrateScenario)->Unit(benchmark::kMillisecond);

void BM_FitLogistic(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  glm::DesignMatrix d;
  d.x.resize(n, 12);
  d.labels = std::vector<std::string>(12, "x");
  std::vector<double> y(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n), 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.x(i, 0) = 1.0;
    double eta = 0.0;
    for (Eigen::Index j = 1; j < 12; ++j) {
      d.x(i, j) = z(rng) > 0 ? 1.0 : 0.0;
      eta += 0.2 * d.x(i, j) - 0.1;
    }
    y[static_cast<std::size_t>(i)] = std::uniform_real_distribution<double>()(rng) < glm::inverse_logit(eta) ? 1.0 : 0.0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(glm::fit_logistic(d, y, w, 1e-4));
}
BENCHMARK(BM_FitLogistic)->Arg(200)->Arg(2000)->Arg(20000)->Unit(benchmark::kMicrosecond);

void BM_Sweep(benchmark::State& state) {
  const auto data = sample_data(static_cast<std::size_t>(state.range(0)));
  fcs::FcsConfig config;
  Rng rng(11);
  const auto start = fcs::initial_fill(data, rng);
  for (auto _ : state) benchmark::DoNotOptimize(fcs::sweep(start, data, config, rng));
}
BENCHMARK(BM_Sweep)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Impute(benchmark::State& state) {
  const auto data = sample_data(200);
  fcs::FcsConfig config;
  config.t_imputations = 20;
  for (auto _ : state) benchmark::DoNotOptimize(fcs::impute(data, config));
}
BENCHMARK(BM_Impute)->Unit(benchmark::kMillisecond);

void BM_PopulationFcs(benchmark::State& state) {
  const auto mech = state.range(0) == 0 ? fcs::Mechanism::kNsc : fcs::Mechanism::kMar;
  for (auto _ : state) benchmark::DoNotOptimize(population::population_fcs(s1().table, mech));
}
BENCHMARK(BM_PopulationFcs)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
