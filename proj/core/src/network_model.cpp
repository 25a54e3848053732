#include "bessd/network_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include <fmt/format.h>

#include "bessd/errors.hpp"

namespace bessd {

std::size_t RadialNetwork::index_of(int id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == id) return i;
  }
  throw InvalidArgument(fmt::format("RadialNetwork: unknown node id {}", id));
}

void RadialNetwork::validate() const {
  if (nodes.empty()) throw InvalidArgument("RadialNetwork: no nodes");
  if (branches.size() + 1 != nodes.size()) {
    throw InvalidArgument(fmt::format("RadialNetwork: {} nodes need {} branches, got {}",
                                      nodes.size(), nodes.size() - 1, branches.size()));
  }
  if (!(v_min < v_max)) throw InvalidArgument("RadialNetwork: need v_min < v_max");
  if (!(v_root > 0.0)) throw InvalidArgument("RadialNetwork: v_root must be positive");
  if (!(base_kva > 0.0)) throw InvalidArgument("RadialNetwork: base_kva must be positive");

  std::vector<int> parents(nodes.size(), -1);
  const std::size_t root_idx = index_of(root);
  for (const auto& br : branches) {
    if (br.r_pu < 0.0 || br.x_pu < 0.0) {
      throw InvalidArgument("RadialNetwork: negative branch impedance");
    }
    if (!(br.ap_max_pu > 0.0)) {
      throw InvalidArgument("RadialNetwork: branch ap_max must be positive");
    }
    const std::size_t child = index_of(br.to);
    index_of(br.from);
    if (child == root_idx) throw InvalidArgument("RadialNetwork: branch feeds the root");
    if (parents[child] != -1) {
      throw InvalidArgument(fmt::format("RadialNetwork: node {} has two parents", br.to));
    }
    parents[child] = static_cast<int>(index_of(br.from));
  }

  // every node must reach the root by following parents
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    std::size_t cur = i;
    std::size_t hops = 0;
    while (cur != root_idx) {
      if (parents[cur] < 0 || ++hops > nodes.size()) {
        throw InvalidArgument(
            fmt::format("RadialNetwork: node {} not connected to root", nodes[i].id));
      }
      cur = static_cast<std::size_t>(parents[cur]);
    }
  }
}

void GridLimits::validate() const {
  if (!(p_pcc_min_kw <= p_pcc_max_kw)) throw InvalidArgument("GridLimits: p_pcc_min > p_pcc_max");
  if (!(p_dg_min_kw <= p_dg_max_kw)) throw InvalidArgument("GridLimits: p_dg_min > p_dg_max");
}

namespace {

struct Topology {
  std::vector<std::size_t> order;                  // BFS from the root
  std::vector<int> parent_branch;                  // per node, -1 at root
  std::vector<std::vector<std::size_t>> child_branches;  // per node
  std::vector<std::size_t> from_idx, to_idx;       // per branch
};

Topology build_topology(const RadialNetwork& net) {
  Topology topo;
  const std::size_t n = net.nodes.size();
  topo.parent_branch.assign(n, -1);
  topo.child_branches.resize(n);
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    const std::size_t from = net.index_of(net.branches[b].from);
    const std::size_t to = net.index_of(net.branches[b].to);
    topo.from_idx.push_back(from);
    topo.to_idx.push_back(to);
    topo.parent_branch[to] = static_cast<int>(b);
    topo.child_branches[from].push_back(b);
  }
  std::queue<std::size_t> frontier;
  frontier.push(net.index_of(net.root));
  while (!frontier.empty()) {
    const std::size_t cur = frontier.front();
    frontier.pop();
    topo.order.push_back(cur);
    for (std::size_t b : topo.child_branches[cur]) frontier.push(topo.to_idx[b]);
  }
  return topo;
}

double max_mismatch(const RadialNetwork& net, const Topology& topo,
                    const std::vector<double>& p, const std::vector<double>& q,
                    const std::vector<double>& v) {
  double worst = 0.0;
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    const auto& br = net.branches[b];
    const std::size_t i = topo.from_idx[b];
    const std::size_t j = topo.to_idx[b];
    const auto& node = net.nodes[j];
    const double vi2 = v[i] * v[i];
    const double s2 = p[b] * p[b] + q[b] * q[b];
    double p_out = node.p_demand_kw / net.base_kva;
    double q_out = node.q_demand_kvar / net.base_kva;
    for (std::size_t c : topo.child_branches[j]) {
      p_out += p[c];
      q_out += q[c];
    }
    const double p_in = p[b] + node.p_gen_kw / net.base_kva - br.r_pu * s2 / vi2;
    const double q_in = q[b] + node.q_gen_kvar / net.base_kva - br.x_pu * s2 / vi2;
    const double vj2 = vi2 - 2.0 * (br.r_pu * p[b] + br.x_pu * q[b]) +
                       (br.r_pu * br.r_pu + br.x_pu * br.x_pu) * s2 / vi2;
    worst = std::max({worst, std::abs(p_in - p_out), std::abs(q_in - q_out),
                      std::abs(v[j] * v[j] - vj2)});
  }
  return worst;
}

}  // namespace

FlowSolution solve_distflow(const RadialNetwork& net, const SolverOptions& options) {
  net.validate();
  const Topology topo = build_topology(net);
  const std::size_t nb = net.branches.size();

  FlowSolution sol;
  sol.p_pu.assign(nb, 0.0);
  sol.q_pu.assign(nb, 0.0);
  sol.v_pu.assign(net.nodes.size(), net.v_root);

  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    // backward: accumulate downstream demand plus the previous-iterate loss
    for (auto it = topo.order.rbegin(); it != topo.order.rend(); ++it) {
      const std::size_t j = *it;
      const int b = topo.parent_branch[j];
      if (b < 0) continue;
      const auto& br = net.branches[static_cast<std::size_t>(b)];
      const auto& node = net.nodes[j];
      double p_down = (node.p_demand_kw - node.p_gen_kw) / net.base_kva;
      double q_down = (node.q_demand_kvar - node.q_gen_kvar) / net.base_kva;
      for (std::size_t c : topo.child_branches[j]) {
        p_down += sol.p_pu[c];
        q_down += sol.q_pu[c];
      }
      const double vi = sol.v_pu[topo.from_idx[static_cast<std::size_t>(b)]];
      const double s2 = sol.p_pu[b] * sol.p_pu[b] + sol.q_pu[b] * sol.q_pu[b];
      sol.p_pu[b] = p_down + br.r_pu * s2 / (vi * vi);
      sol.q_pu[b] = q_down + br.x_pu * s2 / (vi * vi);
    }
    // forward: voltage drop along each branch
    for (std::size_t j : topo.order) {
      const int b = topo.parent_branch[j];
      if (b < 0) continue;
      const auto& br = net.branches[static_cast<std::size_t>(b)];
      const double vi = sol.v_pu[topo.from_idx[static_cast<std::size_t>(b)]];
      const double p = sol.p_pu[b];
      const double q = sol.q_pu[b];
      const double vj2 = vi * vi - 2.0 * (br.r_pu * p + br.x_pu * q) +
                         (br.r_pu * br.r_pu + br.x_pu * br.x_pu) * (p * p + q * q) / (vi * vi);
      if (!(vj2 > 0.0) || !std::isfinite(vj2)) {
        throw NonConvergence(fmt::format(
            "distflow: squared voltage {} at node {} after {} sweeps", vj2, net.nodes[j].id, sweep));
      }
      sol.v_pu[j] = std::sqrt(vj2);
    }
    sol.sweeps = sweep;
    sol.residual = max_mismatch(net, topo, sol.p_pu, sol.q_pu, sol.v_pu);
    if (!std::isfinite(sol.residual)) break;
    if (sol.residual < options.tolerance) {
      sol.converged = true;
      return sol;
    }
  }
  throw NonConvergence(fmt::format("distflow: residual {} after {} sweeps", sol.residual,
                                   options.max_sweeps));
}

double root_import_kw(const FlowSolution& sol, const RadialNetwork& net) {
  const std::size_t root_idx = net.index_of(net.root);
  const auto& root = net.nodes[root_idx];
  double total = root.p_demand_kw - root.p_gen_kw;
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    if (net.branches[b].from == net.root) total += sol.p_pu[b] * net.base_kva;
  }
  return total;
}

std::string to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::Voltage: return "voltage";
    case ConstraintKind::ApparentPower: return "apparent_power";
    case ConstraintKind::DgPower: return "dg_power";
    case ConstraintKind::BatteryPower: return "battery_power";
    case ConstraintKind::PccPower: return "pcc_power";
  }
  return "unknown";
}

FeasibilityReport check_operational(const FlowSolution& sol, const RadialNetwork& net,
                                    const GridLimits& limits, double p_pcc_kw,
                                    double p_dg_kw, double p_b_kw,
                                    const BatteryParams& batt) {
  FeasibilityReport report;
  constexpr double tol = 1e-12;
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const double v = sol.v_pu[i];
    if (v < net.v_min - tol || v > net.v_max + tol) {
      report.push_back({ConstraintKind::Voltage, net.nodes[i].id, v, net.v_min, net.v_max});
    }
  }
  for (std::size_t b = 0; b < net.branches.size(); ++b) {
    const double s2 = sol.p_pu[b] * sol.p_pu[b] + sol.q_pu[b] * sol.q_pu[b];
    const double cap = net.branches[b].ap_max_pu;
    if (s2 > cap * cap * (1.0 + tol)) {
      report.push_back({ConstraintKind::ApparentPower, static_cast<int>(b), std::sqrt(s2), 0.0, cap});
    }
  }
  if (p_dg_kw < limits.p_dg_min_kw - tol || p_dg_kw > limits.p_dg_max_kw + tol) {
    report.push_back({ConstraintKind::DgPower, -1, p_dg_kw, limits.p_dg_min_kw, limits.p_dg_max_kw});
  }
  if (p_b_kw < batt.p_min_kw - tol || p_b_kw > batt.p_max_kw + tol) {
    report.push_back({ConstraintKind::BatteryPower, -1, p_b_kw, batt.p_min_kw, batt.p_max_kw});
  }
  if (p_pcc_kw < limits.p_pcc_min_kw - tol || p_pcc_kw > limits.p_pcc_max_kw + tol) {
    report.push_back({ConstraintKind::PccPower, -1, p_pcc_kw, limits.p_pcc_min_kw, limits.p_pcc_max_kw});
  }
  return report;
}

void FeederLayout::validate() const {
  network.validate();
  network.index_of(battery_node);
  if (pv_nodes.size() != pv_shares.size() || ev_nodes.size() != ev_shares.size()) {
    throw InvalidArgument("FeederLayout: node and share lists differ in length");
  }
  for (int id : pv_nodes) network.index_of(id);
  for (int id : ev_nodes) network.index_of(id);
  for (int id : load_nodes) network.index_of(id);
  if (load_nodes.empty()) throw InvalidArgument("FeederLayout: no load nodes");
  if (!(load_power_factor > 0.0 && load_power_factor <= 1.0)) {
    throw InvalidArgument("FeederLayout: load power factor must be in (0, 1]");
  }
}

FeederLayout demo_feeder() {
  FeederLayout layout;
  auto& net = layout.network;
  net.root = 0;
  net.base_kva = 1000.0;
  net.v_min = 0.95;
  net.v_max = 1.05;
  for (int id = 0; id <= 6; ++id) net.nodes.push_back(NetworkNode{id, 0.0, 0.0, 0.0, 0.0});
  net.branches = {
      {0, 1, 0.010, 0.020, 0.30},
      {1, 2, 0.015, 0.025, 0.20},
      {2, 3, 0.020, 0.030, 0.15},
      {1, 4, 0.015, 0.025, 0.20},
      {4, 5, 0.020, 0.030, 0.15},
      {5, 6, 0.025, 0.035, 0.10},
  };
  layout.battery_node = 1;
  layout.pv_nodes = {3, 6};
  layout.pv_shares = {40.0 / 60.0, 20.0 / 60.0};
  layout.ev_nodes = {2, 5};
  layout.ev_shares = {5.0 / 15.0, 10.0 / 15.0};
  layout.load_nodes = {1, 2, 3, 4, 5, 6};
  return layout;
}

RadialNetwork apply_dispatch(const FeederLayout& layout, double p_pv_kw, double p_ev_kw,
                             double p_other_load_kw, double p_b_kw) {
  RadialNetwork net = layout.network;
  const double q_ratio =
      std::sqrt(1.0 - layout.load_power_factor * layout.load_power_factor) / layout.load_power_factor;
  auto node = [&](int id) -> NetworkNode& { return net.nodes[net.index_of(id)]; };
  for (std::size_t k = 0; k < layout.pv_nodes.size(); ++k) {
    node(layout.pv_nodes[k]).p_gen_kw += p_pv_kw * layout.pv_shares[k];
  }
  for (std::size_t k = 0; k < layout.ev_nodes.size(); ++k) {
    auto& n = node(layout.ev_nodes[k]);
    n.p_demand_kw += p_ev_kw * layout.ev_shares[k];
    n.q_demand_kvar += p_ev_kw * layout.ev_shares[k] * q_ratio;
  }
  const double per_load = p_other_load_kw / static_cast<double>(layout.load_nodes.size());
  for (int id : layout.load_nodes) {
    auto& n = node(id);
    n.p_demand_kw += per_load;
    n.q_demand_kvar += per_load * q_ratio;
  }
  auto& bess = node(layout.battery_node);
  if (p_b_kw >= 0.0) {
    bess.p_gen_kw += p_b_kw;
  } else {
    bess.p_demand_kw -= p_b_kw;
  }
  return net;
}

}  // namespace bessd
