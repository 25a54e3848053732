#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace bessd {

/// One evaluated interval: the decision at row `t` and what it earned over
/// the interval that follows.
struct TraceRow {
  int t = 0;
  double soc = 0.0;        ///< SOC when the action was taken
  double p_b = 0.0;        ///< kW
  double p_pcc = 0.0;      ///< realized PCC power over the interval, kW
  double p_pcc_set = 0.0;  ///< kW
  double r1 = 0.0;         ///< revenue
  double r2 = 0.0;         ///< degradation (non-positive)
  double r3 = 0.0;         ///< tracking (non-positive)
  double reward = 0.0;     ///< weighted total
  int flow_violations = 0; ///< violated network limits of the applied action
};

struct DispatchMetrics {
  double electricity_revenue = 0.0;  ///< sum of R_1
  double degradation_cost = 0.0;     ///< -sum of R_2
  double net_revenue = 0.0;          ///< revenue minus degradation
  double pcc_sd = 0.0;               ///< RMS deviation of P_PCC from its setpoint, kW
  double total_reward = 0.0;
  int steps = 0;
};

/// sqrt(mean((p_pcc - set)^2)); 0 for empty input.
double pcc_deviation_rms(std::span<const double> p_pcc, std::span<const double> setpoint);

DispatchMetrics compute_metrics(std::span<const TraceRow> trace);

void write_trace_csv(std::span<const TraceRow> trace, const std::filesystem::path& path);
/// Throws SchemaError on a header or cell mismatch.
std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

/// Single-row metrics CSV with a leading `label` column.
void write_metrics_csv(const DispatchMetrics& m, const std::string& label, const std::filesystem::path& path);

}  // namespace bessd
