#include "bessd/battery_model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "bessd/errors.hpp"

namespace bessd {

void BatteryParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(fmt::format("BatteryParams: {}", what));
  };
  require(0.0 <= soc_min && soc_min < soc_max && soc_max <= 1.0,
          "need 0 <= soc_min < soc_max <= 1");
  require(0.0 < eta_charge && eta_charge < 1.0, "need 0 < eta_charge < 1");
  require(eta_discharge > 1.0, "need eta_discharge > 1");
  require(energy_capacity_kwh > 0.0, "energy_capacity_kwh must be positive");
  require(cycles_to_failure > 0.0, "cycles_to_failure must be positive");
  require(p_min_kw < 0.0 && 0.0 < p_max_kw, "need p_min < 0 < p_max");
  require(0.0 <= self_discharge && self_discharge < 1.0, "need 0 <= self_discharge < 1");
  require(step_hours > 0.0, "step_hours must be positive");
  require(investment_cost >= 0.0, "investment_cost must be non-negative");
  require(std::isfinite(kappa), "kappa must be finite");
}

double efficiency_for(double p_b, const BatteryParams& params) noexcept {
  if (p_b < 0.0) return params.eta_charge;
  if (p_b > 0.0) return params.eta_discharge;
  return 1.0;
}

double soc_after(double soc, double p_b, const BatteryParams& params) noexcept {
  const double eta = efficiency_for(p_b, params);
  return soc * (1.0 - params.self_discharge) -
         eta * p_b * params.step_hours / params.energy_capacity_kwh;
}

SocState soc_step(SocState prev, double p_b, const BatteryParams& params) {
  if (p_b < params.p_min_kw - kBoundTolerance || p_b > params.p_max_kw + kBoundTolerance) {
    throw OutOfBounds(fmt::format("battery power {} kW outside [{}, {}]", p_b,
                                  params.p_min_kw, params.p_max_kw));
  }
  const double next = soc_after(prev.soc, p_b, params);
  if (next < params.soc_min - kBoundTolerance || next > params.soc_max + kBoundTolerance) {
    throw OutOfBounds(fmt::format("SOC {} outside [{}, {}] after p_b={} kW", next,
                                  params.soc_min, params.soc_max, p_b));
  }
  return SocState{next};
}

double lifetime_throughput(double soc, const BatteryParams& params) {
  if (!(soc >= 0.0 && soc <= 1.0)) {
    throw InvalidArgument(fmt::format("lifetime_throughput: soc {} outside [0, 1]", soc));
  }
  return params.cycles_to_failure * std::exp(params.kappa * soc) * (1.0 - soc) *
         params.energy_capacity_kwh;
}

double degradation_cost(double p_b, double soc, const BatteryParams& params) {
  if (p_b == 0.0) return 0.0;
  const double throughput = lifetime_throughput(soc, params);
  if (throughput <= 0.0) {
    throw DegenerateThroughput(
        fmt::format("zero lifetime throughput at soc={} with p_b={} kW", soc, p_b));
  }
  return -(std::abs(p_b) * params.step_hours / (2.0 * throughput)) * params.investment_cost;
}

}  // namespace bessd
