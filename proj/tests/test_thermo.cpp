#include <gtest/gtest.h>

#include <cmath>

#include "oracles/oracles.hpp"
#include "superball/io.hpp"
#include "superball/thermo.hpp"

using namespace superball;

namespace {

ModelParams rods(double length, bool ring, double lambda = 1.0) {
  const SpaceParams s(2.0, BlockSpec::euclidean(1));
  return ModelParams::make(s, ring ? Region::torus(length) : Region::ball(0.5 * length), lambda, 0.5);
}

}  // namespace

TEST(Entropy, CountForDensityFloors) {
  EXPECT_EQ(count_for_density(0.3, 10.0), 3);
  EXPECT_EQ(count_for_density(0.299, 10.0), 2);
  EXPECT_EQ(count_for_density(0.0, 10.0), 0);
  EXPECT_THROW(count_for_density(-0.1, 10.0), InputError);
}

TEST(Entropy, SingleCenterIsFree) {
  const SpaceParams s(1.5, BlockSpec({0, 2, 3}));
  const auto m = ModelParams::make(s, Region::torus(4.0 * s.r_unit()), 1.0);
  EntropyOptions o;
  o.samples = 1000;
  const auto r = entropy_estimate(m, 1, o);
  EXPECT_TRUE(r.defined);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.successes, 1000u);
  ASSERT_TRUE(r.lower_bound_ref.has_value());
  EXPECT_LT(*r.lower_bound_ref, 0.0);
}

TEST(Entropy, UndefinedWhenNothingFits) {
  const SpaceParams s(2.0, BlockSpec::euclidean(2));
  const auto m = ModelParams::make(s, Region::ball(0.9 * s.r_unit()), 1.0);
  EntropyOptions o;
  o.samples = 5000;
  const auto r = entropy_estimate(m, 2, o);
  EXPECT_FALSE(r.defined);
  EXPECT_EQ(r.successes, 0u);
  EXPECT_NEAR(r.upper_bound, std::log(1.0 / 5000.0) / 2.0, 1e-15);
  EXPECT_EQ(to_json(r)["defined"], false);
}

TEST(Entropy, ThreeRodsOnTen) {
  const auto m = rods(10.0, false);
  EntropyOptions o;
  o.samples = 400000;
  o.seed = 5;
  const auto r = entropy_estimate(m, 3, o);
  ASSERT_TRUE(r.defined);
  // (1/3) log(3! Zhat(3) / V^3) = (1/3) log(8^3 / 10^3)
  const double exact = std::log(static_cast<double>(oracle::rods_interval(3, 10.0L, 1.0L)) * 6.0 / 1000.0) / 3.0;
  EXPECT_NEAR(exact, std::log(0.512) / 3.0, 1e-14);
  EXPECT_NEAR(r.value, exact, 4.0 * r.se);
  EXPECT_DOUBLE_EQ(r.alpha, 0.3);
}

TEST(Entropy, ThreadCountDoesNotChangeResult) {
  const auto m = rods(10.0, true);
  EntropyOptions o;
  o.samples = 20000;
  EXPECT_EQ(entropy_estimate(m, 4, o, 1).successes, entropy_estimate(m, 4, o, 3).successes);
}

TEST(Entropy, DecreasingInCount) {
  const auto m = rods(20.0, true);
  EntropyOptions o;
  o.samples = 200000;
  const auto rep = entropy_monotonicity_check(m, {2, 3, 4}, o);
  EXPECT_TRUE(rep.passed());
  ASSERT_EQ(rep.results.size(), 3u);
  for (const auto& r : rep.results) {
    const double exact = std::log(static_cast<double>(oracle::rods_ring(r.t, 20.0L, 1.0L)) *
                                  std::tgamma(r.t + 1.0) / std::pow(20.0, r.t)) / r.t;
    EXPECT_NEAR(r.value, exact, 4.0 * r.se) << r.t;
  }
  EXPECT_THROW(entropy_monotonicity_check(m, {3, 2}, o), InputError);
}

TEST(Pressure, TinyRegion) {
  const SpaceParams s(1.5, BlockSpec({0, 2}));
  const auto m = ModelParams::make(s, Region::ball(0.45 * s.r_unit()), 1.0);
  const double V = m.volume();
  for (double lam : {0.5, 4.0}) {
    PressureOptions o;
    o.chain.steps = 40000;
    o.chain.burn_in = 2000;
    o.chain.probes = 1;  // free volume is not used here
    const auto r = pressure_estimate(m, lam, o);
    const double exact = std::log1p(lam * V) / V;
    EXPECT_NEAR(r.value, exact, 4.0 * r.se + 2e-3 * exact) << lam;
    EXPECT_EQ(r.grid_size, 32);
    EXPECT_DOUBLE_EQ(r.closure, 1e-4 * lam);
  }
}

TEST(Pressure, TonksRing) {
  const auto m = rods(20.0, true);
  PressureOptions o;
  o.chain.steps = 60000;
  o.chain.burn_in = 3000;
  o.chain.seed = 3;
  o.chain.probes = 1;
  const auto r = pressure_estimate(m, 1.0, o);
  const double exact = static_cast<double>(std::log(oracle::rods_grand(1.0L, 20.0L, 1.0L, true).z)) / 20.0;
  EXPECT_NEAR(r.value, exact, 4.0 * r.se + 2e-3 * exact);
  EXPECT_LE(r.value, 1.0 + 4.0 * r.se);  // g(lambda) <= lambda
}

TEST(Pressure, RejectsBadInput) {
  const auto m = rods(20.0, true);
  EXPECT_THROW(pressure_estimate(m, 0.0), InputError);
  PressureOptions o;
  o.grid_size = 1;
  EXPECT_THROW(pressure_estimate(m, 1.0, o), InputError);
}
