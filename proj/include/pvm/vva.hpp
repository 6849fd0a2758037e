#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pvm/conic/program.hpp"
#include "pvm/conic/solver.hpp"
#include "pvm/netmodel.hpp"

namespace pvm {

/// Variables of one hour of the branch-flow model. Indexed by bus / branch
/// index of the Network.
struct BranchFlowHour {
  std::vector<conic::Var> v;  // squared voltage
  std::vector<conic::Var> l;  // squared current
  std::vector<conic::Var> p;  // sending-end flows
  std::vector<conic::Var> q;
  conic::Var p_slack;
  conic::Var q_slack;
};

/// Per-bus extra demand terms (p.u.) added to the load side of the balance
/// rows, e.g. storage charging. Empty vectors mean none.
struct BalanceExtras {
  std::vector<conic::LinExpr> p;
  std::vector<conic::LinExpr> q;
};

/// Adds balance, voltage-drop and cone rows of one hour. Loads are in kW /
/// kvar; the slack voltage is fixed through bounds. With `limits` the
/// squared voltages of non-slack buses are bounded too.
BranchFlowHour add_branch_flow_hour(conic::ConicProgram& prog, const Network& net, const LoadProfileSet& profiles,
                                    std::size_t t, const BalanceExtras& extras = {},
                                    const VoltageLimits* limits = nullptr);

/// Objective term sum r * l of an hour.
conic::LinExpr losses_expr(const Network& net, const BranchFlowHour& h);

struct VvaModel {
  conic::ConicProgram prog;
  std::vector<std::size_t> hours;  // horizon index of each block
  std::vector<BranchFlowHour> blocks;
};

/// Loss-minimizing screening model over the given horizon hours. No voltage
/// limits: violations are observed, not prevented.
VvaModel build_vva(const Network& net, const LoadProfileSet& profiles, const std::vector<std::size_t>& hours);

struct FlowSolution {
  Timestamp start{};
  std::size_t hours = 0;
  std::vector<std::vector<double>> v_sq;    // [bus][t]
  std::vector<std::vector<double>> i_sq;    // [branch][t]
  std::vector<std::vector<double>> p_flow;  // [branch][t]
  std::vector<std::vector<double>> q_flow;
  std::vector<double> p_slack;  // [t]
  std::vector<double> q_slack;
  std::vector<double> losses;
  /// max over branches of v*l - (P^2 + Q^2) per hour
  std::vector<double> cone_slack;
  /// hours whose cone slack exceeded the tightness tolerance
  std::vector<std::size_t> slack_hours;

  double voltage(std::size_t bus, std::size_t t) const;
};

/// Reads the values of one hour block out of a solved point into hour slot t.
void extract_hour(const Network& net, const BranchFlowHour& h, const std::vector<double>& x, std::size_t t,
                  FlowSolution& out);
FlowSolution empty_solution(const Network& net, Timestamp start, std::size_t hours);

struct VvaOptions {
  conic::SolverConfig solver;
  unsigned threads = 0;
  double tightness_tolerance = 1e-6;
  /// Raise SolverError on a slack cone instead of only listing the hour.
  bool fail_on_slack = true;
};

/// Solves each hour of the horizon as an independent subproblem.
FlowSolution run_vva(const Network& net, const LoadProfileSet& profiles, const VvaOptions& options = {});

enum class ViolationKind { Under, Over };

struct ViolationRecord {
  BusId bus = 0;
  Timestamp when{};
  double voltage = 0.0;
  double severity = 0.0;
  ViolationKind kind = ViolationKind::Under;
};

/// One record per bus-hour with V outside [lower, upper]; severity is the
/// distance to the violated limit.
std::vector<ViolationRecord> detect_violations(const Network& net, const FlowSolution& sol, VoltageLimits limits);

struct NodeViolationStats {
  BusId bus = 0;
  double p_uv = 0.0;
  double p_ov = 0.0;
  double f_viol = 0.0;
};

std::vector<NodeViolationStats> node_stats(const std::vector<ViolationRecord>& records, std::size_t horizon_hours,
                                           const std::vector<BusId>& buses);

/// timestamp,bus_id,voltage_pu,severity_pu
std::string write_violation_log(const std::vector<ViolationRecord>& records);
/// Kind is recovered by comparing the voltage against the limits.
std::vector<ViolationRecord> read_violation_log(const std::string& text, VoltageLimits limits);

}  // namespace pvm
