#include "bessd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "bessd/errors.hpp"

namespace bessd {

namespace {
constexpr const char* kTraceHeader = "t,soc,p_b,p_pcc,p_pcc_set,r1,r2,r3,reward,flow_violations";
}

double pcc_deviation_rms(std::span<const double> p_pcc, std::span<const double> setpoint) {
  if (p_pcc.size() != setpoint.size()) throw InvalidArgument("pcc_deviation_rms: length mismatch");
  if (p_pcc.empty()) return 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < p_pcc.size(); ++i) {
    const double d = p_pcc[i] - setpoint[i];
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(p_pcc.size()));
}

DispatchMetrics compute_metrics(std::span<const TraceRow> trace) {
  DispatchMetrics m;
  std::vector<double> pcc, set;
  for (const auto& r : trace) {
    m.electricity_revenue += r.r1;
    m.degradation_cost -= r.r2;
    m.total_reward += r.reward;
    pcc.push_back(r.p_pcc);
    set.push_back(r.p_pcc_set);
  }
  m.net_revenue = m.electricity_revenue - m.degradation_cost;
  m.pcc_sd = pcc_deviation_rms(pcc, set);
  m.steps = static_cast<int>(trace.size());
  return m;
}

void write_trace_csv(std::span<const TraceRow> trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << kTraceHeader << '\n';
  for (const auto& r : trace) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", r.t, r.soc, r.p_b,
                       r.p_pcc, r.p_pcc_set, r.r1, r.r2, r.r3, r.reward, r.flow_violations);
  }
}

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw SchemaError(fmt::format("{}: bad trace header", path.string()));
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    TraceRow r;
    if (!(ss >> r.t >> r.soc >> r.p_b >> r.p_pcc >> r.p_pcc_set >> r.r1 >> r.r2 >> r.r3 >> r.reward >>
          r.flow_violations)) {
      throw SchemaError(fmt::format("{}: malformed trace row '{}'", path.string(), line));
    }
    rows.push_back(r);
  }
  return rows;
}

void write_metrics_csv(const DispatchMetrics& m, const std::string& label, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << "label,electricity_revenue,degradation_cost,net_revenue,pcc_sd,total_reward,steps\n";
  out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", label, m.electricity_revenue,
                     m.degradation_cost, m.net_revenue, m.pcc_sd, m.total_reward, m.steps);
}

}  // namespace bessd
