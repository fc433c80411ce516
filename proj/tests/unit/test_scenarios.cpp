#include <doctest.h>

#include <cmath>

#include "nscmi/error.hpp"
#include "nscmi/scenarios.hpp"

using namespace nscmi;
using namespace nscmi::loglinear;
using namespace nscmi::scenarios;

namespace {

void check_truth(const ScenarioOutput& s) {
  const auto target = target_marginals();
  REQUIRE(s.truth.size() == 6);
  for (int k = 1; k <= 6; ++k) {
    CHECK(std::abs(s.truth[static_cast<std::size_t>(k - 1)] - target[static_cast<std::size_t>(k - 1)]) <= 1e-8);
    CHECK(std::abs(marginal(s.table, Y(k)) - s.truth[static_cast<std::size_t>(k - 1)]) <= 1e-8);
  }
}

}  // namespace

TEST_SUITE("scenarios") {

TEST_CASE("main-effect NSC hits its targets for every rate") {
  for (double rate : {0.2, 0.3, 0.4}) {
    const auto s = main_effect_nsc(rate);
    check_truth(s);
    for (int k = 1; k <= 6; ++k) CHECK(std::abs(marginal(s.table, M(k)) - rate) <= 1e-8);
    REQUIRE(s.spec.has_value());
    CHECK(nsc_holds(*s.spec));
    for (int k = 1; k <= 6; ++k) CHECK(self_censoring_deviation(s.table, k).max_abs_deviation <= 1e-10);
    CHECK(mcar_deviation(s.table).max_abs_deviation > 1e-6);
    CHECK(mar_deviation(s.table).max_abs_deviation > 1e-6);
  }
}

TEST_CASE("main-effect NSC fixes the stated interactions") {
  const auto s = main_effect_nsc(0.3);
  CHECK(s.spec->get(term({1, 5})) == 0.5);
  CHECK(s.spec->get(term({4}, {2})) == 2.0);
  CHECK(s.spec->get(term({1}, {5})) == -2.0);
  CHECK(s.spec->get(term({2}, {2})) == 0.0);
  CHECK(s.spec->get(term({}, {1, 2})) == 0.0);
  // 15 Y-Y pairs, 30 Y-M pairs, 12 main effects.
  CHECK(s.spec->terms().size() == 57);
}

TEST_CASE("Y-M interaction NSC") {
  const auto base = main_effect_nsc(0.3);
  const auto zero = ym_interaction_nsc(0.0);
  for (std::size_t c = 0; c < base.table.size(); ++c) CHECK(std::abs(zero.table[c] - base.table[c]) <= 1e-10);
  for (double l3 : {-0.5, -1.0, -2.0}) {
    const auto s = ym_interaction_nsc(l3);
    check_truth(s);
    CHECK(nsc_holds(*s.spec));
    CHECK(s.spec->get(term({1, 2}, {3})) == l3);
    CHECK(s.spec->get(term({5, 6}, {1})) == l3);
    for (int k = 1; k <= 6; ++k) {
      CHECK(std::abs(marginal(s.table, M(k)) - 0.3) <= 1e-8);
      CHECK(self_censoring_deviation(s.table, k).max_abs_deviation <= 1e-10);
    }
  }
  CHECK_THROWS_AS(ym_interaction_nsc(std::nan("")), ValidationError);
}

TEST_CASE("MAR blocks are MAR but not MCAR, and violate NSC") {
  for (double yy : {0.5, 2.0}) {
    for (double rate : {0.2, 0.3, 0.4}) {
      const auto s = mar_blocks(yy, rate);
      check_truth(s);
      CHECK_FALSE(s.spec.has_value());
      for (int k = 1; k <= 6; ++k) CHECK(std::abs(marginal(s.table, M(k)) - rate) <= 1e-8);
      CHECK(mar_deviation(s.table).max_abs_deviation <= 1e-12);
      CHECK(mcar_deviation(s.table).max_abs_deviation > 1e-6);
      double worst = 0.0;
      for (int k = 1; k <= 6; ++k) worst = std::max(worst, self_censoring_deviation(s.table, k).max_abs_deviation);
      CHECK(worst > 1e-6);
    }
  }
}

TEST_CASE("MAR blocks with equal ratios are MCAR") {
  MarBlockOptions opts;
  opts.w_ratio = 1.0;
  opts.v_ratio = 1.0;
  const auto s = mar_blocks(0.5, 0.3, opts);
  CHECK(mcar_deviation(s.table).max_abs_deviation <= 1e-12);
}

TEST_CASE("MAR block validation") {
  CHECK_THROWS_AS(mar_blocks(0.5, 0.5), ValidationError);
  CHECK_THROWS_AS(mar_blocks(0.5, 0.0), ValidationError);
  const std::vector<double> law(4, 0.25);
  const BlockMechanism overlap[] = {{1, 2, 0.1, 0.1, 0.1, 0.1, 0.0}, {2, 1, 0.1, 0.1, 0.1, 0.1, 0.0}};
  CHECK_THROWS_AS(compose_mar_blocks(law, 2, overlap), ValidationError);
  const BlockMechanism too_big[] = {{1, 2, 0.6, 0.6, 0.6, 0.6, 0.0}};
  CHECK_THROWS_AS(compose_mar_blocks(law, 2, too_big), ValidationError);
  const BlockMechanism fine[] = {{1, 2, 0.2, 0.1, 0.3, 0.15, 0.05}};
  const auto t = compose_mar_blocks(law, 2, fine);
  CHECK(mar_deviation(t).max_abs_deviation <= 1e-12);
}

TEST_CASE("make_scenario dispatch") {
  ScenarioParams p;
  p.missing_rate = 0.2;
  CHECK(make_scenario("nsc-main", p).name == "nsc-main");
  CHECK(make_scenario("mar-blocks", p).name == "mar-blocks");
  CHECK_THROWS_AS(make_scenario("nope", p), ValidationError);
  CHECK_THROWS_AS(main_effect_nsc(1.0), ValidationError);
}

}  // TEST_SUITE
