#pragma once

namespace bessd {

/// Physical and economic constants of the storage unit.
///
/// Capacity is a single energy figure in kWh (cell capacity times nominal
/// voltage). Power follows the PCC sign convention: positive `p_b` is
/// discharge, negative is charge.
struct BatteryParams {
  double self_discharge = 0.0;   ///< fraction of SOC lost per step
  double eta_charge = 0.9;       ///< applied when p_b < 0, must be < 1
  double eta_discharge = 1.0 / 0.9;  ///< applied when p_b > 0, must be > 1
  double energy_capacity_kwh = 100.0;
  double cycles_to_failure = 1000.0;
  double kappa = 0.0;            ///< empirical throughput exponent, always set explicitly
  double investment_cost = 0.0;  ///< currency
  double soc_min = 0.0;
  double soc_max = 1.0;
  double p_min_kw = -10.0;
  double p_max_kw = 10.0;
  double step_hours = 1.0;

  /// Throws InvalidArgument when any invariant is broken.
  void validate() const;
};

struct SocState {
  double soc = 0.5;
};

/// Efficiency applied to a given battery power.
double efficiency_for(double p_b, const BatteryParams& params) noexcept;

/// One step of the SOC recursion. Throws OutOfBounds if `p_b` is outside
/// the power limits or the resulting SOC leaves [soc_min, soc_max]; the
/// action is rejected rather than clamped.
SocState soc_step(SocState prev, double p_b, const BatteryParams& params);

/// Unchecked SOC recursion, used to probe an action before accepting it.
double soc_after(double soc, double p_b, const BatteryParams& params) noexcept;

/// Lifetime energy throughput in kWh at the given SOC.
double lifetime_throughput(double soc, const BatteryParams& params);

/// Degradation reward term (non-positive). Throws DegenerateThroughput if
/// power is drawn while the lifetime throughput is zero.
double degradation_cost(double p_b, double soc, const BatteryParams& params);

/// Tolerance used for the SOC and power bound checks.
inline constexpr double kBoundTolerance = 1e-12;

}  // namespace bessd
