#include "pvm/vva.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

namespace pvm {

using conic::LinExpr;
using conic::Var;

BranchFlowHour add_branch_flow_hour(conic::ConicProgram& prog, const Network& net, const LoadProfileSet& profiles,
                                    std::size_t t, const BalanceExtras& extras, const VoltageLimits* limits) {
  const std::size_t nb = net.bus_count();
  const std::size_t nl = net.branch_count();
  const double s_base = net.s_base_kw();
  BranchFlowHour h;
  const double vs = net.slack_voltage().at(t);
  for (std::size_t i = 0; i < nb; ++i) {
    if (i == net.slack_index()) {
      h.v.push_back(prog.add_variable(vs * vs, vs * vs));
    } else if (limits) {
      h.v.push_back(prog.add_variable(limits->lower * limits->lower, limits->upper * limits->upper));
    } else {
      h.v.push_back(prog.add_variable(0.0));
    }
  }
  for (std::size_t k = 0; k < nl; ++k) {
    const auto& cap = net.branches()[k].i_sq_limit;
    h.l.push_back(prog.add_variable(0.0, cap ? *cap : conic::kInfinity));
    h.p.push_back(prog.add_variable());
    h.q.push_back(prog.add_variable());
  }
  h.p_slack = prog.add_variable();
  h.q_slack = prog.add_variable();

  for (std::size_t i = 0; i < nb; ++i) {
    const Bus& bus = net.buses()[i];
    const bool slack = i == net.slack_index();
    const double pl = (slack && !profiles.has(bus.id)) ? 0.0 : profiles.p_at(bus.id, t) / s_base;
    const double ql = (slack && !profiles.has(bus.id)) ? 0.0 : profiles.q_at(bus.id, t) / s_base;
    LinExpr bp, bq;
    if (const auto up = net.parent_branch(i)) {
      const Branch& br = net.branches()[*up];
      bp.add(h.p[*up], 1.0).add(h.l[*up], -br.r);
      bq.add(h.q[*up], 1.0).add(h.l[*up], -br.x);
    } else {
      bp.add(h.p_slack, 1.0);
      bq.add(h.q_slack, 1.0);
    }
    for (std::size_t k : net.child_branches(i)) {
      bp.add(h.p[k], -1.0);
      bq.add(h.q[k], -1.0);
    }
    if (i < extras.p.size()) bp -= extras.p[i];
    if (i < extras.q.size()) bq -= extras.q[i];
    prog.add_equality(bp, pl);
    prog.add_equality(bq, ql);
  }
  for (std::size_t k = 0; k < nl; ++k) {
    const Branch& br = net.branches()[k];
    const std::size_t from = net.branch_from(k), to = net.branch_to(k);
    LinExpr drop;
    drop.add(h.v[from], 1.0).add(h.v[to], -1.0).add(h.p[k], -2.0 * br.r).add(h.q[k], -2.0 * br.x);
    drop.add(h.l[k], br.r * br.r + br.x * br.x);
    prog.add_equality(drop, 0.0);
    prog.add_rotated_cone(h.v[from], h.l[k], {LinExpr(h.p[k]), LinExpr(h.q[k])});
  }
  return h;
}

LinExpr losses_expr(const Network& net, const BranchFlowHour& h) {
  LinExpr e;
  for (std::size_t k = 0; k < net.branch_count(); ++k) e.add(h.l[k], net.branches()[k].r);
  return e;
}

VvaModel build_vva(const Network& net, const LoadProfileSet& profiles, const std::vector<std::size_t>& hours) {
  profiles.check_covers(net);
  VvaModel m;
  LinExpr objective;
  for (std::size_t t : hours) {
    if (t >= profiles.hours()) throw InputError(fmt::format("hour {} outside the profile horizon", t));
    m.blocks.push_back(add_branch_flow_hour(m.prog, net, profiles, t));
    m.hours.push_back(t);
    objective += losses_expr(net, m.blocks.back());
  }
  m.prog.set_objective(objective);
  m.prog.seal();
  return m;
}

double FlowSolution::voltage(std::size_t bus, std::size_t t) const { return std::sqrt(std::max(v_sq[bus][t], 0.0)); }

FlowSolution empty_solution(const Network& net, Timestamp start, std::size_t hours) {
  FlowSolution s;
  s.start = start;
  s.hours = hours;
  s.v_sq.assign(net.bus_count(), std::vector<double>(hours, 0.0));
  s.i_sq.assign(net.branch_count(), std::vector<double>(hours, 0.0));
  s.p_flow = s.i_sq;
  s.q_flow = s.i_sq;
  s.p_slack.assign(hours, 0.0);
  s.q_slack.assign(hours, 0.0);
  s.losses.assign(hours, 0.0);
  s.cone_slack.assign(hours, 0.0);
  return s;
}

void extract_hour(const Network& net, const BranchFlowHour& h, const std::vector<double>& x, std::size_t t,
                  FlowSolution& out) {
  for (std::size_t i = 0; i < net.bus_count(); ++i) out.v_sq[i][t] = x[h.v[i].index];
  double losses = 0.0, worst = 0.0;
  for (std::size_t k = 0; k < net.branch_count(); ++k) {
    const double l = x[h.l[k].index], p = x[h.p[k].index], q = x[h.q[k].index];
    out.i_sq[k][t] = l;
    out.p_flow[k][t] = p;
    out.q_flow[k][t] = q;
    losses += net.branches()[k].r * l;
    worst = std::max(worst, x[h.v[net.branch_from(k)].index] * l - (p * p + q * q));
  }
  out.p_slack[t] = x[h.p_slack.index];
  out.q_slack[t] = x[h.q_slack.index];
  out.losses[t] = losses;
  out.cone_slack[t] = worst;
}

FlowSolution run_vva(const Network& net, const LoadProfileSet& profiles, const VvaOptions& options) {
  profiles.check_covers(net);
  options.solver.validate();
  const std::size_t hours = profiles.hours();
  FlowSolution sol = empty_solution(net, profiles.start(), hours);
  std::vector<std::string> failures(hours);
  parallel_for(hours, options.threads, [&](std::size_t t) {
    VvaModel m = build_vva(net, profiles, {t});
    const conic::SolveResult r = conic::solve_relaxation(m.prog, options.solver);
    if (!r.optimal()) {
      failures[t] = fmt::format("hour {} ({}): {} {}", t, to_string(profiles.timestamp(t)), conic::to_string(r.status),
                                r.message);
      return;
    }
    extract_hour(net, m.blocks[0], r.x, t, sol);
  });
  for (const std::string& f : failures)
    if (!f.empty()) throw SolverError("screening solve failed at " + f);
  // A loose interior-point stop can leave a slack cone on light hours; those
  // get one more solve at a tighter duality gap before being reported.
  std::vector<std::size_t> loose;
  for (std::size_t t = 0; t < hours; ++t)
    if (sol.cone_slack[t] > options.tightness_tolerance) loose.push_back(t);
  if (!loose.empty()) {
    conic::SolverConfig tight = options.solver;
    tight.cone_tolerance = std::max(1e-12, tight.cone_tolerance * 1e-2);
    tight.feasibility_tolerance = std::max(1e-12, tight.feasibility_tolerance * 1e-2);
    parallel_for(loose.size(), options.threads, [&](std::size_t k) {
      VvaModel m = build_vva(net, profiles, {loose[k]});
      const conic::SolveResult r = conic::solve_relaxation(m.prog, tight);
      if (r.optimal()) extract_hour(net, m.blocks[0], r.x, loose[k], sol);
    });
  }
  for (std::size_t t : loose)
    if (sol.cone_slack[t] > options.tightness_tolerance) sol.slack_hours.push_back(t);
  if (options.fail_on_slack && !sol.slack_hours.empty()) {
    const std::size_t t = sol.slack_hours.front();
    throw SolverError(fmt::format("cone relaxation not tight at hour {} (slack {:.3g}); {} hours affected", t,
                                  sol.cone_slack[t], sol.slack_hours.size()));
  }
  return sol;
}

std::vector<ViolationRecord> detect_violations(const Network& net, const FlowSolution& sol, VoltageLimits limits) {
  std::vector<ViolationRecord> out;
  for (std::size_t t = 0; t < sol.hours; ++t) {
    for (std::size_t i = 0; i < net.bus_count(); ++i) {
      const double v = sol.voltage(i, t);
      if (v < limits.lower) {
        out.push_back({net.buses()[i].id, sol.start + static_cast<std::int64_t>(t), v, limits.lower - v,
                       ViolationKind::Under});
      } else if (v > limits.upper) {
        out.push_back({net.buses()[i].id, sol.start + static_cast<std::int64_t>(t), v, v - limits.upper,
                       ViolationKind::Over});
      }
    }
  }
  return out;
}

std::vector<NodeViolationStats> node_stats(const std::vector<ViolationRecord>& records, std::size_t horizon_hours,
                                           const std::vector<BusId>& buses) {
  if (horizon_hours == 0) throw InputError("node_stats needs a non-empty horizon");
  std::map<BusId, std::set<Timestamp>> under, over;
  for (const ViolationRecord& r : records) (r.kind == ViolationKind::Under ? under : over)[r.bus].insert(r.when);
  std::vector<NodeViolationStats> out;
  const double n = static_cast<double>(horizon_hours);
  for (BusId b : buses) {
    NodeViolationStats s;
    s.bus = b;
    s.p_uv = under.contains(b) ? static_cast<double>(under[b].size()) / n : 0.0;
    s.p_ov = over.contains(b) ? static_cast<double>(over[b].size()) / n : 0.0;
    s.f_viol = s.p_uv + s.p_ov;
    out.push_back(s);
  }
  return out;
}

std::string write_violation_log(const std::vector<ViolationRecord>& records) {
  std::string out = "timestamp,bus_id,voltage_pu,severity_pu\n";
  for (const ViolationRecord& r : records)
    out += fmt::format("{},{},{:.17g},{:.17g}\n", to_string(r.when), r.bus, r.voltage, r.severity);
  return out;
}

std::vector<ViolationRecord> read_violation_log(const std::string& text, VoltageLimits limits) {
  std::vector<ViolationRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line.rfind("timestamp", 0) != 0) throw InputError("violation log: missing header");
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 4) throw InputError(fmt::format("violation log line {}: expected 4 fields", line_no));
    ViolationRecord r;
    r.when = parse_timestamp(trim(f[0]));
    r.bus = static_cast<BusId>(parse_int(trim(f[1]), "bus_id"));
    r.voltage = parse_double(trim(f[2]), "voltage_pu");
    r.severity = parse_double(trim(f[3]), "severity_pu");
    if (!(r.severity > 0.0)) throw InputError(fmt::format("violation log line {}: severity must be positive", line_no));
    r.kind = r.voltage < limits.lower ? ViolationKind::Under : ViolationKind::Over;
    out.push_back(r);
  }
  return out;
}

}  // namespace pvm
