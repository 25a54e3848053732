#include <gtest/gtest.h>

#include <cmath>

#include "bessd/battery_model.hpp"
#include "bessd/errors.hpp"
#include "bessd/rng.hpp"

using namespace bessd;

namespace {

// the 100 kWh toy pack with the explicit kappa = -1 fixture
BatteryParams toy() {
  BatteryParams p;
  p.kappa = -1.0;
  return p;
}

}  // namespace

TEST(SocStep, IdleKeepsSoc) {
  EXPECT_DOUBLE_EQ(soc_step({0.5}, 0.0, toy()).soc, 0.5);
}

TEST(SocStep, ChargeUsesChargeEfficiency) {
  EXPECT_NEAR(soc_step({0.5}, -10.0, toy()).soc, 0.59, 1e-12);
}

TEST(SocStep, DischargeUsesDischargeEfficiency) {
  EXPECT_NEAR(soc_step({0.5}, 10.0, toy()).soc, 0.5 - 10.0 / 0.9 / 100.0, 1e-12);
  EXPECT_NEAR(soc_step({0.5}, 10.0, toy()).soc, 0.38889, 1e-5);
}

TEST(SocStep, PowerOutsideLimitsThrows) {
  EXPECT_THROW(soc_step({0.5}, 10.5, toy()), OutOfBounds);
  EXPECT_THROW(soc_step({0.5}, -10.5, toy()), OutOfBounds);
}

TEST(SocStep, SocOutsideBoundsThrows) {
  BatteryParams p = toy();
  p.soc_min = 0.3;
  EXPECT_THROW(soc_step({0.35}, 10.0, p), OutOfBounds);
  p.soc_max = 0.9;
  EXPECT_THROW(soc_step({0.85}, -10.0, p), OutOfBounds);
}

TEST(SocStep, SelfDischargeDecaysIdleSoc) {
  BatteryParams p = toy();
  p.self_discharge = 0.01;
  EXPECT_NEAR(soc_step({0.5}, 0.0, p).soc, 0.495, 1e-15);
}

TEST(SocStep, RoundTripWithEfficiencyScaledPowerIsExact) {
  const BatteryParams p = toy();
  RngStream rng(7, {1});
  for (int i = 0; i < 1000; ++i) {
    const double s = 0.2 + 0.6 * rng.uniform();
    const double power = 9.0 * rng.uniform();
    const double back = power * p.eta_charge / p.eta_discharge;
    const double charged = soc_step({s}, -power, p).soc;
    EXPECT_NEAR(soc_step({charged}, back, p).soc, s, 1e-15);
  }
}

TEST(SocStep, LinearInPowerForFixedSign) {
  const BatteryParams p = toy();
  const double s = 0.5;
  const double d1 = soc_step({s}, 2.0, p).soc - s;
  const double d2 = soc_step({s}, 6.0, p).soc - s;
  EXPECT_NEAR(d2, 3.0 * d1, 1e-15);
  const double c1 = soc_step({s}, -2.0, p).soc - s;
  const double c2 = soc_step({s}, -8.0, p).soc - s;
  EXPECT_NEAR(c2, 4.0 * c1, 1e-15);
}

TEST(SocStep, RecursionMatchesClosedForm) {
  BatteryParams p = toy();
  p.self_discharge = 0.002;
  p.energy_capacity_kwh = 1000.0;
  RngStream rng(11, {2});
  double soc = 0.5;
  double closed = 0.5;
  std::vector<double> powers;
  for (int k = 0; k < 100; ++k) powers.push_back(-10.0 + 20.0 * rng.uniform());
  for (double pb : powers) soc = soc_step({soc}, pb, p).soc;
  // soc_N = a^N soc_0 - sum_k a^(N-1-k) eta_k p_k T / E
  const double a = 1.0 - p.self_discharge;
  const int n = static_cast<int>(powers.size());
  closed = std::pow(a, n) * 0.5;
  for (int k = 0; k < n; ++k) {
    const double eta = powers[k] < 0 ? p.eta_charge : p.eta_discharge;
    closed -= std::pow(a, n - 1 - k) * eta * powers[k] * p.step_hours / p.energy_capacity_kwh;
  }
  EXPECT_NEAR(soc, closed, 1e-12 * std::abs(closed));
}

TEST(LifetimeThroughput, ZeroAtFullCharge) {
  EXPECT_EQ(lifetime_throughput(1.0, toy()), 0.0);
}

TEST(LifetimeThroughput, HalfChargeWithNegativeKappa) {
  EXPECT_NEAR(lifetime_throughput(0.5, toy()), 1000.0 * std::exp(-0.5) * 0.5 * 100.0, 1e-9);
  EXPECT_NEAR(lifetime_throughput(0.5, toy()), 30326.5, 0.1);
}

TEST(LifetimeThroughput, EmptyWithZeroKappa) {
  BatteryParams p = toy();
  p.kappa = 0.0;
  EXPECT_DOUBLE_EQ(lifetime_throughput(0.0, p), 100000.0);
}

TEST(LifetimeThroughput, RejectsSocOutsideUnitInterval) {
  EXPECT_THROW(lifetime_throughput(1.01, toy()), InvalidArgument);
  EXPECT_THROW(lifetime_throughput(-0.01, toy()), InvalidArgument);
}

TEST(LifetimeThroughput, ContinuousNearFullCharge) {
  const BatteryParams p = toy();
  EXPECT_LT(lifetime_throughput(1.0 - 1e-9, p), 1e-3);
  EXPECT_NEAR(lifetime_throughput(0.3 + 1e-12, p), lifetime_throughput(0.3, p), 1e-6);
}

TEST(DegradationCost, ZeroPowerCostsNothing) {
  BatteryParams p = toy();
  p.investment_cost = 200000.0;
  EXPECT_EQ(degradation_cost(0.0, 0.5, p), 0.0);
  // defined even where throughput vanishes, since nothing is used
  EXPECT_EQ(degradation_cost(0.0, 1.0, p), 0.0);
}

TEST(DegradationCost, ToyDischargeAndChargeAreSymmetric) {
  BatteryParams p = toy();
  p.investment_cost = 200000.0;
  EXPECT_NEAR(degradation_cost(10.0, 0.5, p), -32.97, 0.01);
  EXPECT_NEAR(degradation_cost(-10.0, 0.5, p), -32.97, 0.01);
}

TEST(DegradationCost, EvenAndLinearInPowerAndCost) {
  BatteryParams p = toy();
  p.investment_cost = 1000.0;
  RngStream rng(3, {0});
  for (int i = 0; i < 200; ++i) {
    const double s = 0.05 + 0.9 * rng.uniform();
    const double pb = 0.1 + 9.9 * rng.uniform();
    const double c = degradation_cost(pb, s, p);
    EXPECT_NEAR(c, degradation_cost(-pb, s, p), 1e-12 * std::abs(c));
    EXPECT_NEAR(degradation_cost(2.0 * pb, s, p), 2.0 * c, 1e-12 * std::abs(c));
    BatteryParams q = p;
    q.investment_cost = 3000.0;
    EXPECT_NEAR(degradation_cost(pb, s, q), 3.0 * c, 1e-12 * std::abs(c));
  }
}

TEST(DegradationCost, DegenerateThroughputRaises) {
  BatteryParams p = toy();
  p.investment_cost = 1.0;
  EXPECT_THROW(degradation_cost(5.0, 1.0, p), DegenerateThroughput);
}

TEST(BatteryParams, ValidationRejectsBadEfficiencies) {
  BatteryParams p = toy();
  p.eta_charge = 1.1;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = toy();
  p.eta_discharge = 0.9;
  EXPECT_THROW(p.validate(), InvalidArgument);
  EXPECT_NO_THROW(toy().validate());
}
