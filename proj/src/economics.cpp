#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "pvm/common.hpp"
#include "pvm/oep.hpp"
#include "storage_rows.hpp"

namespace pvm {

using conic::LinExpr;

// ---- tariff -------------------------------------------------------------------

TouTariff TouTariff::daily(const std::vector<double>& by_hour, Timestamp start, std::size_t hours) {
  if (by_hour.size() != 24) throw InputError(fmt::format("daily tariff needs 24 prices, got {}", by_hour.size()));
  TouTariff t;
  t.start = start;
  for (std::size_t k = 0; k < hours; ++k) t.price.push_back(by_hour[static_cast<std::size_t>(hour_of_day(start + static_cast<std::int64_t>(k)))]);
  for (double p : t.price)
    if (!(p >= 0.0)) throw InputError("tariff prices must be non-negative");
  return t;
}

double TouTariff::at(Timestamp ts) const {
  const std::int64_t k = ts.hours - start.hours;
  if (k < 0 || k >= static_cast<std::int64_t>(price.size()))
    throw InputError(fmt::format("tariff has no price for {}", to_string(ts)));
  return price[static_cast<std::size_t>(k)];
}

void TouTariff::covers(Timestamp first, std::size_t hours) const {
  if (hours == 0) return;
  at(first);
  at(first + static_cast<std::int64_t>(hours - 1));
}

TouTariff read_tariff(const std::string& text, Timestamp start, std::size_t hours) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("tariff file is empty");
  std::vector<std::pair<std::string, double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 2) throw InputError(fmt::format("tariff line {}: expected 2 columns", lineno));
    const double p = parse_double(cols[1], "price");
    if (p < 0.0) throw InputError(fmt::format("tariff line {}: negative price", lineno));
    rows.emplace_back(trim(cols[0]), p);
  }
  if (rows.empty()) throw InputError("tariff file has no rows");
  if (rows.front().first.find('-') == std::string::npos) {
    std::vector<double> by_hour(24, -1.0);
    for (const auto& [h, p] : rows) {
      const auto k = parse_int(h, "hour_of_day");
      if (k < 0 || k > 23) throw InputError(fmt::format("tariff hour {} outside 0..23", k));
      if (by_hour[static_cast<std::size_t>(k)] >= 0.0) throw InputError(fmt::format("tariff hour {} repeated", k));
      by_hour[static_cast<std::size_t>(k)] = p;
    }
    for (std::size_t k = 0; k < 24; ++k)
      if (by_hour[k] < 0.0) throw InputError(fmt::format("tariff lacks hour {}", k));
    return TouTariff::daily(by_hour, start, hours);
  }
  std::map<Timestamp, double> by_ts;
  for (const auto& [ts, p] : rows) by_ts[parse_timestamp(ts)] = p;
  TouTariff t;
  t.start = start;
  for (std::size_t k = 0; k < hours; ++k) {
    const auto it = by_ts.find(start + static_cast<std::int64_t>(k));
    if (it == by_ts.end()) throw InputError(fmt::format("tariff lacks {}", to_string(start + static_cast<std::int64_t>(k))));
    t.price.push_back(it->second);
  }
  return t;
}

// ---- day-by-day operation -------------------------------------------------------

namespace {

struct DayModel {
  conic::ConicProgram prog;
  std::vector<BranchFlowHour> blocks;
  std::vector<BessUnit> units;
};

DayModel build_day(const Network& net, const LoadProfileSet& profiles, std::size_t first, const BessPlan& plan,
                   const BessSpec& spec, const TouTariff* tariff, const VoltageLimits* hard,
                   const DispatchOptions& options) {
  DayModel m;
  for (const SitePlan& s : plan.sites) {
    if (!s.installed || !(s.capacity_kwh > 0.0)) continue;
    BessUnit u;
    u.bus = s.bus;
    u.bus_index = net.index_of(s.bus);
    u.fixed_capacity_kwh = s.capacity_kwh;
    m.units.push_back(std::move(u));
  }
  const double s_base = net.s_base_kw();
  LinExpr objective;
  for (std::size_t k = 0; k < 24; ++k) {
    BalanceExtras extras;
    for (BessUnit& u : m.units) {
      detail::add_unit_hour(m.prog, u, spec, LinExpr(u.fixed_capacity_kwh), u.fixed_capacity_kwh, LinExpr(1.0));
      detail::add_to_balance(extras, u, k, s_base, net.bus_count());
    }
    m.blocks.push_back(add_branch_flow_hour(m.prog, net, profiles, first + k, extras, hard));
    const BranchFlowHour& h = m.blocks.back();
    if (options.objective == DispatchObjective::TouCost) {
      objective.add(h.p_slack, tariff->at(profiles.timestamp(first + k)) * s_base);
      objective += (options.loss_price * s_base) * losses_expr(net, h);
    } else {
      objective += s_base * losses_expr(net, h);
    }
  }
  for (const BessUnit& u : m.units) detail::add_soc_chain(m.prog, u, spec, LinExpr(u.fixed_capacity_kwh), 0, 24);
  m.prog.set_objective(objective);
  m.prog.seal();
  return m;
}

}  // namespace

DispatchResult dispatch_days(const Network& net, const LoadProfileSet& profiles, const BessPlan& plan,
                             const BessSpec& spec, const TouTariff* tariff, VoltageLimits limits,
                             const conic::SolverConfig& cfg, const DispatchOptions& options) {
  spec.validate();
  cfg.validate();
  profiles.check_covers(net);
  if (profiles.hours() == 0 || profiles.hours() % 24 != 0)
    throw InputError(fmt::format("dispatch needs whole days, got {} hours", profiles.hours()));
  if (options.objective == DispatchObjective::TouCost) {
    if (!tariff) throw InputError("cost dispatch needs a tariff");
    tariff->covers(profiles.start(), profiles.hours());
  }
  for (const SitePlan& s : plan.sites)
    if (s.installed && !net.has_bus(s.bus)) throw InputError(fmt::format("plan site {} is not in the network", s.bus));

  const std::size_t ndays = profiles.hours() / 24;
  const VoltageLimits hard = detail::with_margin(limits);
  DispatchResult out;
  out.flows = empty_solution(net, profiles.start(), profiles.hours());
  out.days.resize(ndays);
  for (const SitePlan& s : plan.sites) {
    if (!s.installed || !(s.capacity_kwh > 0.0)) continue;
    SitePlan site;
    site.bus = s.bus;
    site.installed = true;
    site.capacity_kwh = s.capacity_kwh;
    for (auto* v : {&site.charge_kw, &site.discharge_kw, &site.q_inj_kvar, &site.q_abs_kvar, &site.energy_kwh})
      v->assign(profiles.hours(), 0.0);
    out.sites.push_back(std::move(site));
  }
  std::vector<std::string> failures(ndays);
  const double s_base = net.s_base_kw();

  parallel_for(ndays, options.threads, [&](std::size_t d) {
    const std::size_t first = d * 24;
    DayResult& day = out.days[d];
    day.date = date_of(profiles.timestamp(first));
    const DayModel m =
        build_day(net, profiles, first, plan, spec, tariff, options.enforce_limits ? &hard : nullptr, options);
    conic::MisocpOptions opts;
    opts.heuristic = storage_heuristic(m.units, spec.e_max_kwh);
    opts.record_trace = false;
    const conic::SolveResult r = conic::solve_misocp(m.prog, cfg, opts);
    if (r.status == conic::SolveStatus::Infeasible) {
      day.message = "infeasible under the voltage limits";
      return;
    }
    if (r.x.empty() || (r.status != conic::SolveStatus::Optimal && r.status != conic::SolveStatus::GapLimit)) {
      failures[d] = fmt::format("{}: {} {}", to_string(day.date), conic::to_string(r.status), r.message);
      return;
    }
    day.feasible = true;
    for (std::size_t k = 0; k < 24; ++k) {
      extract_hour(net, m.blocks[k], r.x, first + k, out.flows);
      if (tariff) day.cost += tariff->at(profiles.timestamp(first + k)) * out.flows.p_slack[first + k] * s_base;
      day.losses_kwh += out.flows.losses[first + k] * s_base;
    }
    for (std::size_t u = 0; u < m.units.size(); ++u) {
      SitePlan slots;
      detail::read_slots(m.units[u], r.x, 0, 24, slots);
      SitePlan& site = out.sites[u];
      std::copy(slots.charge_kw.begin(), slots.charge_kw.end(), site.charge_kw.begin() + static_cast<std::ptrdiff_t>(first));
      std::copy(slots.discharge_kw.begin(), slots.discharge_kw.end(), site.discharge_kw.begin() + static_cast<std::ptrdiff_t>(first));
      std::copy(slots.q_inj_kvar.begin(), slots.q_inj_kvar.end(), site.q_inj_kvar.begin() + static_cast<std::ptrdiff_t>(first));
      std::copy(slots.q_abs_kvar.begin(), slots.q_abs_kvar.end(), site.q_abs_kvar.begin() + static_cast<std::ptrdiff_t>(first));
      std::copy(slots.energy_kwh.begin(), slots.energy_kwh.end(), site.energy_kwh.begin() + static_cast<std::ptrdiff_t>(first));
    }
  });
  for (const std::string& f : failures)
    if (!f.empty()) throw SolverError("dispatch solve failed on " + f);
  for (const DayResult& d : out.days) {
    if (!d.feasible) {
      out.infeasible_days.push_back(d.date);
      continue;
    }
    out.cost += d.cost;
    out.losses_kwh += d.losses_kwh;
  }
  return out;
}

DispatchResult tou_dispatch(const Network& net, const LoadProfileSet& profiles, const BessPlan& plan,
                            const BessSpec& spec, const TouTariff& tariff, VoltageLimits limits,
                            const conic::SolverConfig& cfg, unsigned threads) {
  DispatchOptions o;
  o.threads = threads;
  return dispatch_days(net, profiles, plan, spec, &tariff, limits, cfg, o);
}

// ---- economics tables -----------------------------------------------------------

EconomicsRow savings_report(const std::string& label, const OperationSummary& without,
                            const OperationSummary& with) {
  if (without.hours != with.hours)
    throw InputError(fmt::format("economics rows compare {} and {} hours", without.hours, with.hours));
  EconomicsRow r;
  r.label = label;
  r.cost_without = without.cost;
  r.cost_with = with.cost;
  r.savings = without.cost - with.cost;
  r.savings_pct = without.cost != 0.0 ? 100.0 * r.savings / without.cost : 0.0;
  r.losses_without_mwh = without.losses_kwh / 1000.0;
  r.losses_with_mwh = with.losses_kwh / 1000.0;
  r.loss_reduction_mwh = r.losses_without_mwh - r.losses_with_mwh;
  r.loss_reduction_pct = r.losses_without_mwh != 0.0 ? 100.0 * r.loss_reduction_mwh / r.losses_without_mwh : 0.0;
  return r;
}

std::string format_cost_table(const std::vector<EconomicsRow>& rows) {
  std::string out = "case,w.o. BESS ($M),w. BESS ($M),Savings ($M),Savings (%)\n";
  for (const EconomicsRow& r : rows)
    out += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.2f}\n", r.label, r.cost_without / 1e6, r.cost_with / 1e6,
                       r.savings / 1e6, r.savings_pct);
  return out;
}

std::string format_loss_table(const std::vector<EconomicsRow>& rows) {
  std::string out = "case,w.o. BESS (MWh),w. BESS (MWh),Reduction (MWh),Reduction (%)\n";
  for (const EconomicsRow& r : rows)
    out += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.2f}\n", r.label, r.losses_without_mwh, r.losses_with_mwh,
                       r.loss_reduction_mwh, r.loss_reduction_pct);
  return out;
}

// ---- plan file --------------------------------------------------------------------

std::string write_plan(const BessPlan& plan, const BessSpec& spec) {
  std::string out = "# storage plan\n";
  out += fmt::format("objective,{:.6f}\ngap,{:.6g}\nnodes,{}\nstatus,{}\n", plan.objective, plan.gap, plan.nodes,
                     plan.status.empty() ? "unknown" : plan.status);
  out += fmt::format(
      "spec,e_min_kwh={},e_max_kwh={},soc_min={},soc_max={},soc_initial={},eta_ch={},eta_dis={},c_ch={},c_dis={},"
      "k_q_inj={},k_q_abs={},c_cap={}\n",
      spec.e_min_kwh, spec.e_max_kwh, spec.soc_min, spec.soc_max, spec.soc_initial, spec.eta_ch, spec.eta_dis,
      spec.c_ch, spec.c_dis, spec.k_q_inj, spec.k_q_abs, spec.c_cap);
  std::size_t k0 = 0;
  for (const HourWindow& w : plan.windows) {
    const std::string first = k0 < plan.hours.size() ? to_string(plan.hours[k0]) : "-";
    out += fmt::format("window,{},{},{}\n", w.first, w.count, first);
    k0 += w.count;
  }
  // capacities at full precision: a plan read back is the same plan
  out += "site,bus,installed,capacity_kwh\n";
  for (const SitePlan& s : plan.sites)
    out += fmt::format("site,{},{},{}\n", s.bus, s.installed ? 1 : 0, s.capacity_kwh);
  out += "dispatch,timestamp,bus,charge_kw,discharge_kw,q_inj_kvar,q_abs_kvar,energy_kwh\n";
  for (std::size_t k = 0; k < plan.hours.size(); ++k)
    for (const SitePlan& s : plan.sites) {
      if (!s.installed || k >= s.charge_kw.size()) continue;
      out += fmt::format("dispatch,{},{},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f}\n", to_string(plan.hours[k]), s.bus,
                         s.charge_kw[k], s.discharge_kw[k], s.q_inj_kvar[k], s.q_abs_kvar[k], s.energy_kwh[k]);
    }
  return out;
}

BessPlan read_plan(const std::string& text) {
  BessPlan plan;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::pair<Timestamp, std::size_t>> starts;
  std::map<BusId, std::size_t> site_of;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || line[0] == '#') continue;
    const auto cols = split(line, ',');
    const std::string tag = trim(cols[0]);
    auto need = [&](std::size_t n) {
      if (cols.size() != n) throw InputError(fmt::format("plan line {}: expected {} columns", lineno, n));
    };
    if (tag == "objective") {
      need(2);
      plan.objective = parse_double(cols[1], "objective");
    } else if (tag == "gap") {
      need(2);
      plan.gap = parse_double(cols[1], "gap");
    } else if (tag == "nodes") {
      need(2);
      plan.nodes = static_cast<std::size_t>(parse_int(cols[1], "nodes"));
    } else if (tag == "status") {
      need(2);
      plan.status = trim(cols[1]);
    } else if (tag == "spec") {
      continue;
    } else if (tag == "window") {
      need(4);
      const HourWindow w{static_cast<std::size_t>(parse_int(cols[1], "window first")),
                         static_cast<std::size_t>(parse_int(cols[2], "window count"))};
      plan.windows.push_back(w);
      if (trim(cols[3]) != "-") starts.emplace_back(parse_timestamp(cols[3]), w.count);
    } else if (tag == "site") {
      need(4);
      if (trim(cols[1]) == "bus") continue;
      SitePlan s;
      s.bus = static_cast<BusId>(parse_int(cols[1], "bus"));
      s.installed = parse_int(cols[2], "installed") != 0;
      s.capacity_kwh = parse_double(cols[3], "capacity_kwh");
      if (s.capacity_kwh < 0.0) throw InputError(fmt::format("plan line {}: negative capacity", lineno));
      if (!site_of.emplace(s.bus, plan.sites.size()).second)
        throw InputError(fmt::format("plan line {}: bus {} listed twice", lineno, s.bus));
      plan.sites.push_back(std::move(s));
    } else if (tag == "dispatch") {
      need(8);
      if (trim(cols[1]) == "timestamp") continue;
      const auto bus = static_cast<BusId>(parse_int(cols[2], "bus"));
      const auto it = site_of.find(bus);
      if (it == site_of.end()) throw InputError(fmt::format("plan line {}: dispatch for unknown bus {}", lineno, bus));
      SitePlan& s = plan.sites[it->second];
      s.charge_kw.push_back(parse_double(cols[3], "charge_kw"));
      s.discharge_kw.push_back(parse_double(cols[4], "discharge_kw"));
      s.q_inj_kvar.push_back(parse_double(cols[5], "q_inj_kvar"));
      s.q_abs_kvar.push_back(parse_double(cols[6], "q_abs_kvar"));
      s.energy_kwh.push_back(parse_double(cols[7], "energy_kwh"));
    } else {
      throw InputError(fmt::format("plan line {}: unknown record '{}'", lineno, tag));
    }
  }
  for (const auto& [ts, count] : starts)
    for (std::size_t k = 0; k < count; ++k) plan.hours.push_back(ts + static_cast<std::int64_t>(k));
  return plan;
}

}  // namespace pvm
