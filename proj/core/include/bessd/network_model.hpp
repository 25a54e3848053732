#pragma once

#include <string>
#include <vector>

#include "bessd/battery_model.hpp"

namespace bessd {

struct NetworkNode {
  int id = 0;
  double p_demand_kw = 0.0;
  double q_demand_kvar = 0.0;
  double p_gen_kw = 0.0;
  double q_gen_kvar = 0.0;
};

/// Line from a parent node to a child node; impedances and the apparent
/// power limit are per unit on the network base.
struct NetworkBranch {
  int from = 0;
  int to = 0;
  double r_pu = 0.0;
  double x_pu = 0.0;
  double ap_max_pu = 1.0;
};

/// Radial feeder rooted at the PCC. Powers are kW/kvar at the boundary and
/// converted to per unit with `base_kva` inside the solver.
struct RadialNetwork {
  std::vector<NetworkNode> nodes;
  std::vector<NetworkBranch> branches;
  int root = 0;
  double v_min = 0.95;
  double v_max = 1.05;
  double v_root = 1.0;
  double base_kva = 1000.0;

  /// Throws InvalidArgument unless the branches form a tree over all nodes.
  void validate() const;
  /// Position of the node with `id` in `nodes`; throws InvalidArgument if absent.
  std::size_t index_of(int id) const;
};

/// Branch flows are indexed like `RadialNetwork::branches`, voltages like
/// `RadialNetwork::nodes`. All quantities per unit.
struct FlowSolution {
  std::vector<double> p_pu;
  std::vector<double> q_pu;
  std::vector<double> v_pu;
  bool converged = false;
  double residual = 0.0;
  int sweeps = 0;
};

struct SolverOptions {
  int max_sweeps = 100;
  double tolerance = 1e-10;
};

struct GridLimits {
  double p_pcc_min_kw = 0.0;
  double p_pcc_max_kw = 100.0;
  double p_dg_min_kw = 0.0;
  double p_dg_max_kw = 60.0;

  void validate() const;
};

/// Backward/forward sweep on the branch flow equations. Throws
/// NonConvergence when the sweep does not settle within `max_sweeps` or a
/// squared voltage turns non-positive.
FlowSolution solve_distflow(const RadialNetwork& net, const SolverOptions& options = {});

/// Active power drawn from the grid at the PCC for a net injection `p_sum`
/// and battery power `p_b`.
inline double pcc_power(double p_sum, double p_b) noexcept { return -(p_sum + p_b); }

/// Net active import at the root in kW implied by a solution (root branch
/// head flows plus the root's own net demand).
double root_import_kw(const FlowSolution& sol, const RadialNetwork& net);

enum class ConstraintKind { Voltage, ApparentPower, DgPower, BatteryPower, PccPower };

std::string to_string(ConstraintKind kind);

struct Violation {
  ConstraintKind kind;
  int element = -1;  ///< node id, branch index, or -1 for scalar limits
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

using FeasibilityReport = std::vector<Violation>;

/// Lists every violated operational limit; an empty report means feasible.
FeasibilityReport check_operational(const FlowSolution& sol, const RadialNetwork& net,
                                    const GridLimits& limits, double p_pcc_kw,
                                    double p_dg_kw, double p_b_kw,
                                    const BatteryParams& batt);

/// Placement of the aggregated microgrid components on feeder nodes.
struct FeederLayout {
  RadialNetwork network;
  int battery_node = 1;
  std::vector<int> pv_nodes;
  std::vector<double> pv_shares;
  std::vector<int> ev_nodes;
  std::vector<double> ev_shares;
  std::vector<int> load_nodes;
  double load_power_factor = 0.95;

  void validate() const;
};

/// Seven-node feeder (PCC plus six load points) with two PV plants, two EV
/// charging stations and the battery. Impedances are synthetic placeholders.
FeederLayout demo_feeder();

/// Copy of the layout's network with component powers distributed onto nodes.
RadialNetwork apply_dispatch(const FeederLayout& layout, double p_pv_kw, double p_ev_kw,
                             double p_other_load_kw, double p_b_kw);

}  // namespace bessd
