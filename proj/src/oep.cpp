#include "pvm/oep.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "pvm/common.hpp"
#include "storage_rows.hpp"

namespace pvm {

using conic::LinExpr;
using conic::Var;

void BessSpec::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw InputError(fmt::format("storage spec: {}", what));
  };
  need(soc_min >= 0.0 && soc_min < soc_max && soc_max <= 1.0, "need 0 <= soc_min < soc_max <= 1");
  need(soc_initial >= soc_min && soc_initial <= soc_max, "soc_initial outside the SOC band");
  need(eta_ch > 0.0 && eta_ch <= 1.0 && eta_dis > 0.0 && eta_dis <= 1.0, "efficiencies must lie in (0, 1]");
  need(e_min_kwh >= 0.0 && e_min_kwh <= e_max_kwh && e_max_kwh > 0.0, "need 0 <= e_min <= e_max, e_max > 0");
  need(c_ch >= 0.0 && c_dis >= 0.0 && k_q_inj >= 0.0 && k_q_abs >= 0.0, "rates must be non-negative");
  need(c_cap > 0.0, "c_cap must be positive");
}

namespace detail {

void add_unit_hour(conic::ConicProgram& prog, BessUnit& u, const BessSpec& spec, const LinExpr& cap, double cap_max,
                   const LinExpr& gate) {
  const auto slot = u.ch.size();
  auto name = [&](const char* what) { return fmt::format("{}[{}]@{}", what, u.bus, slot); };
  struct Flow {
    std::vector<Var>* power;
    std::vector<Var>* on;
    double rate;
    const char* tag;
  };
  const Flow flows[4] = {{&u.ch, &u.u_ch, spec.c_ch, "ch"},
                         {&u.dis, &u.u_dis, spec.c_dis, "dis"},
                         {&u.inj, &u.u_inj, spec.k_q_inj, "qinj"},
                         {&u.abs, &u.u_abs, spec.k_q_abs, "qabs"}};
  for (const Flow& f : flows) {
    const double big_m = f.rate * cap_max;
    const Var p = prog.add_variable(0.0, big_m, name(f.tag));
    const Var on = prog.add_binary(name(f.tag) + ".on");
    // capacity rating, then the big-M gate
    prog.add_less_equal(LinExpr(p) - f.rate * LinExpr(cap), 0.0);
    prog.add_less_equal(LinExpr(p) - big_m * on, 0.0);
    f.power->push_back(p);
    f.on->push_back(on);
  }
  prog.add_less_equal(LinExpr(u.u_ch.back()) + LinExpr(u.u_dis.back()) - gate, 0.0);
  prog.add_less_equal(LinExpr(u.u_inj.back()) + LinExpr(u.u_abs.back()) - gate, 0.0);

  const Var s = prog.add_variable(0.0, cap_max, name("soc"));
  prog.add_less_equal(spec.soc_min * LinExpr(cap) - LinExpr(s), 0.0);
  prog.add_less_equal(LinExpr(s) - spec.soc_max * LinExpr(cap), 0.0);
  u.soc.push_back(s);
}

void add_soc_chain(conic::ConicProgram& prog, const BessUnit& u, const BessSpec& spec, const LinExpr& cap,
                   std::size_t first, std::size_t count) {
  const std::size_t last = first + count - 1;
  for (std::size_t k = first; k <= last; ++k) {
    const std::size_t prev = k == first ? last : k - 1;
    // E_t = E_{t-1} + eta_ch ch_t - dis_t / eta_dis, one-hour steps
    LinExpr row = LinExpr(u.soc[k]) - LinExpr(u.soc[prev]);
    row.add(u.ch[k], -spec.eta_ch).add(u.dis[k], 1.0 / spec.eta_dis);
    prog.add_equality(row, 0.0);
  }
  prog.add_equality(LinExpr(u.soc[last]) - spec.soc_initial * LinExpr(cap), 0.0);
}

void add_to_balance(BalanceExtras& extras, const BessUnit& u, std::size_t k, double s_base_kw,
                    std::size_t bus_count) {
  extras.p.resize(bus_count);
  extras.q.resize(bus_count);
  const double to_pu = 1.0 / s_base_kw;
  // charging and absorbing draw from the grid; the other two support it
  extras.p[u.bus_index].add(u.ch[k], to_pu).add(u.dis[k], -to_pu);
  extras.q[u.bus_index].add(u.abs[k], to_pu).add(u.inj[k], -to_pu);
}

void read_slots(const BessUnit& u, const std::vector<double>& x, std::size_t first, std::size_t count,
                SitePlan& site) {
  for (std::size_t k = first; k < first + count; ++k) {
    site.charge_kw.push_back(x[u.ch[k].index]);
    site.discharge_kw.push_back(x[u.dis[k].index]);
    site.q_inj_kvar.push_back(x[u.inj[k].index]);
    site.q_abs_kvar.push_back(x[u.abs[k].index]);
    site.energy_kwh.push_back(x[u.soc[k].index]);
  }
}

}  // namespace detail

ToepModel build_toep(const Network& net, const LoadProfileSet& profiles, const std::vector<HourWindow>& windows,
                     const std::vector<BusId>& candidates, const BessSpec& spec, VoltageLimits limits,
                     const ToepOptions& options) {
  spec.validate();
  profiles.check_covers(net);
  if (candidates.empty()) throw InputError("storage planning needs at least one candidate bus");
  if (windows.empty()) throw InputError("storage planning needs at least one window");
  std::set<std::size_t> seen;
  for (const HourWindow& w : windows) {
    if (w.count == 0 || w.first + w.count > profiles.hours())
      throw InputError(fmt::format("window [{}, {}) not covered by the {}-hour profiles", w.first, w.first + w.count,
                                   profiles.hours()));
    for (std::size_t t = w.first; t < w.first + w.count; ++t)
      if (!seen.insert(t).second) throw InputError(fmt::format("windows overlap at hour {}", t));
  }

  ToepModel m;
  m.windows = windows;
  m.spec = spec;
  m.start = profiles.start();
  m.s_base_kw = net.s_base_kw();
  const VoltageLimits hard = detail::with_margin(limits);
  m.limits = hard;

  std::set<BusId> unique;
  for (BusId b : candidates) {
    if (!net.has_bus(b)) throw InputError(fmt::format("candidate bus {} is not in the network", b));
    const std::size_t i = net.index_of(b);
    if (i == net.slack_index()) throw InputError(fmt::format("candidate bus {} is the slack bus", b));
    if (!unique.insert(b).second) continue;
    BessUnit u;
    u.bus = b;
    u.bus_index = i;
    u.z = m.prog.add_binary(fmt::format("z[{}]", b));
    u.e_cap = m.prog.add_variable(0.0, spec.e_max_kwh, fmt::format("E[{}]", b));
    m.prog.add_less_equal(LinExpr(*u.e_cap) - spec.e_max_kwh * LinExpr(*u.z), 0.0);
    m.prog.add_less_equal(spec.e_min_kwh * LinExpr(*u.z) - LinExpr(*u.e_cap), 0.0);
    m.units.push_back(std::move(u));
  }

  LinExpr objective;
  for (const BessUnit& u : m.units) objective.add(*u.e_cap, spec.c_cap);

  for (const HourWindow& w : windows) {
    const std::size_t first_slot = m.hours.size();
    for (std::size_t t = w.first; t < w.first + w.count; ++t) {
      BalanceExtras extras;
      for (BessUnit& u : m.units) {
        detail::add_unit_hour(m.prog, u, spec, LinExpr(*u.e_cap), spec.e_max_kwh, LinExpr(*u.z));
        detail::add_to_balance(extras, u, u.ch.size() - 1, m.s_base_kw, net.bus_count());
      }
      m.blocks.push_back(add_branch_flow_hour(m.prog, net, profiles, t, extras, &hard));
      m.hours.push_back(t);
      objective += (options.loss_price * m.s_base_kw) * losses_expr(net, m.blocks.back());
    }
    for (const BessUnit& u : m.units)
      detail::add_soc_chain(m.prog, u, spec, LinExpr(*u.e_cap), first_slot, w.count);
  }
  m.prog.set_objective(objective);
  m.prog.seal();
  return m;
}

conic::IncumbentHeuristic storage_heuristic(const std::vector<BessUnit>& units, double e_max_kwh) {
  return [units, e_max_kwh](const conic::ConicProgram&, std::span<const double> x) {
    std::vector<conic::BoundOverride> fix;
    auto set = [&](Var v, double value) { fix.push_back({v.index, value, value}); };
    for (const BessUnit& u : units) {
      const bool on = !u.e_cap || x[u.e_cap->index] > 1e-6 * e_max_kwh;
      if (u.z) set(*u.z, on ? 1.0 : 0.0);
      for (std::size_t k = 0; k < u.ch.size(); ++k) {
        // pin each hour to the direction of the net flow; ties charge/inject
        const bool charge = x[u.ch[k].index] >= x[u.dis[k].index];
        const bool inject = x[u.inj[k].index] >= x[u.abs[k].index];
        set(u.u_ch[k], on && charge ? 1.0 : 0.0);
        set(u.u_dis[k], on && !charge ? 1.0 : 0.0);
        set(u.u_inj[k], on && inject ? 1.0 : 0.0);
        set(u.u_abs[k], on && !inject ? 1.0 : 0.0);
      }
    }
    return fix;
  };
}

double BessPlan::total_capacity_kwh() const {
  double s = 0.0;
  for (const SitePlan& p : sites) s += p.capacity_kwh;
  return s;
}

const SitePlan* BessPlan::site(BusId bus) const {
  for (const SitePlan& p : sites)
    if (p.bus == bus) return &p;
  return nullptr;
}

bool PlanAudit::ok(double tol) const {
  return max_simultaneous_kw <= tol && max_soc_replay_kwh <= tol && max_cycle_kwh <= tol && max_band_kwh <= tol &&
         max_gating <= tol;
}

PlanAudit audit_plan(const BessPlan& plan, const BessSpec& spec) {
  PlanAudit a;
  for (const SitePlan& s : plan.sites) {
    const double cap = s.installed ? s.capacity_kwh : 0.0;
    for (std::size_t k = 0; k < s.charge_kw.size(); ++k) {
      a.max_simultaneous_kw = std::max({a.max_simultaneous_kw, std::min(s.charge_kw[k], s.discharge_kw[k]),
                                        std::min(s.q_inj_kvar[k], s.q_abs_kvar[k])});
      a.max_band_kwh = std::max({a.max_band_kwh, spec.soc_min * cap - s.energy_kwh[k],
                                 s.energy_kwh[k] - spec.soc_max * cap});
      if (!s.installed)
        a.max_gating = std::max({a.max_gating, s.charge_kw[k], s.discharge_kw[k], s.q_inj_kvar[k], s.q_abs_kvar[k],
                                 std::fabs(s.energy_kwh[k])});
    }
    // replay from the pinned starting state, window by window
    std::size_t first = 0;
    for (const HourWindow& w : plan.windows) {
      if (first + w.count > s.charge_kw.size()) break;
      const double start = spec.soc_initial * cap;
      double e = start;
      for (std::size_t k = first; k < first + w.count; ++k) {
        e += spec.eta_ch * s.charge_kw[k] - s.discharge_kw[k] / spec.eta_dis;
        a.max_soc_replay_kwh = std::max(a.max_soc_replay_kwh, std::fabs(e - s.energy_kwh[k]));
      }
      a.max_cycle_kwh = std::max(a.max_cycle_kwh, std::fabs(s.energy_kwh[first + w.count - 1] - start));
      first += w.count;
    }
  }
  return a;
}

namespace {

// Hours that stay infeasible with every candidate at full size and the SOC
// chain dropped.
std::vector<Timestamp> unfixable_hours(const ToepModel& model, const Network& net, const LoadProfileSet& profiles,
                                       const conic::SolverConfig& cfg) {
  const VoltageLimits hard = model.limits;
  std::vector<Timestamp> out;
  for (std::size_t t : model.hours) {
    conic::ConicProgram prog;
    BalanceExtras extras;
    extras.p.resize(net.bus_count());
    extras.q.resize(net.bus_count());
    const double to_pu = 1.0 / model.s_base_kw;
    const double e = model.spec.e_max_kwh;
    for (const BessUnit& u : model.units) {
      const Var p = prog.add_variable(-model.spec.c_dis * e, model.spec.c_ch * e);
      const Var q = prog.add_variable(-model.spec.k_q_inj * e, model.spec.k_q_abs * e);
      extras.p[u.bus_index].add(p, to_pu);
      extras.q[u.bus_index].add(q, to_pu);
    }
    const BranchFlowHour h = add_branch_flow_hour(prog, net, profiles, t, extras, &hard);
    prog.set_objective(losses_expr(net, h));
    prog.seal();
    if (conic::solve_relaxation(prog, cfg).status == conic::SolveStatus::Infeasible)
      out.push_back(profiles.timestamp(t));
  }
  return out;
}

}  // namespace

BessPlan plan(const ToepModel& model, const Network& net, const LoadProfileSet& profiles,
              const conic::SolverConfig& cfg) {
  cfg.validate();
  conic::MisocpOptions opts;
  opts.heuristic = storage_heuristic(model.units, model.spec.e_max_kwh);
  const conic::SolveResult r = conic::solve_misocp(model.prog, cfg, opts);

  if (r.status == conic::SolveStatus::Infeasible) {
    auto hours = unfixable_hours(model, net, profiles, cfg);
    std::string list;
    for (std::size_t k = 0; k < hours.size() && k < 10; ++k) list += (k ? ", " : "") + to_string(hours[k]);
    if (hours.empty())
      throw PlanInfeasible("storage plan infeasible: every hour is fixable alone, but not within the energy limits "
                           "of the SOC band over the window",
                           {});
    const std::string what =
        fmt::format("storage plan infeasible: {} hour(s) cannot be fixed even with every candidate at {} kWh: {}{}",
                    hours.size(), model.spec.e_max_kwh, list, hours.size() > 10 ? ", ..." : "");
    throw PlanInfeasible(what, std::move(hours));
  }
  if (r.x.empty() || (r.status != conic::SolveStatus::Optimal && r.status != conic::SolveStatus::GapLimit))
    throw SolverError(fmt::format("storage planning solve ended with {}: {}", conic::to_string(r.status), r.message));

  BessPlan out;
  out.windows = model.windows;
  for (std::size_t t : model.hours) out.hours.push_back(profiles.timestamp(t));
  out.gap = r.gap;
  out.nodes = r.nodes;
  out.status = std::string(conic::to_string(r.status));
  for (const BessUnit& u : model.units) {
    SitePlan s;
    s.bus = u.bus;
    s.installed = std::lround(r.x[u.z->index]) == 1;
    s.capacity_kwh = s.installed ? r.x[u.e_cap->index] : 0.0;
    detail::read_slots(u, r.x, 0, u.ch.size(), s);
    out.objective += model.spec.c_cap * s.capacity_kwh;
    out.sites.push_back(std::move(s));
  }
  const PlanAudit a = audit_plan(out, model.spec);
  if (!a.ok())
    throw SolverError(fmt::format("storage plan failed its audit: simultaneous {:.3g}, SOC replay {:.3g}, cycle "
                                  "{:.3g}, band {:.3g}, gating {:.3g}",
                                  a.max_simultaneous_kw, a.max_soc_replay_kwh, a.max_cycle_kwh, a.max_band_kwh,
                                  a.max_gating));
  return out;
}

}  // namespace pvm
