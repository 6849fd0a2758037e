#include "pvm/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace pvm {

namespace {

// Independent streams of the master seed.
enum Stream : std::uint64_t { kBaseLoad = 0, kHouseholds = 1, kScenarios = 2, kOverlay = 3, kClusters = 4 };

template <class F>
auto staged(const char* stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const PlanInfeasible& e) {
    throw PlanInfeasible(fmt::format("{}: {}", stage, e.what()), e.hours());
  } catch (const BacktrackExhausted&) {
    throw;
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", stage, e.what()));
  } catch (const SolverError& e) {
    throw SolverError(fmt::format("{}: {}", stage, e.what()));
  }
}

std::vector<BusId> load_buses(const Network& net) {
  std::vector<BusId> out;
  for (const Bus& b : net.buses())
    if (b.kind != BusKind::Slack) out.push_back(b.id);
  return out;
}

// Copies hour columns [0, src.hours) of `src` into `dst` from `offset` on.
void paste_hours(const FlowSolution& src, FlowSolution& dst, std::size_t offset) {
  auto rows = [&](const std::vector<std::vector<double>>& a, std::vector<std::vector<double>>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) std::copy(a[i].begin(), a[i].end(), b[i].begin() + offset);
  };
  auto cols = [&](const std::vector<double>& a, std::vector<double>& b) {
    std::copy(a.begin(), a.end(), b.begin() + offset);
  };
  rows(src.v_sq, dst.v_sq);
  rows(src.i_sq, dst.i_sq);
  rows(src.p_flow, dst.p_flow);
  rows(src.q_flow, dst.q_flow);
  cols(src.p_slack, dst.p_slack);
  cols(src.q_slack, dst.q_slack);
  cols(src.losses, dst.losses);
  cols(src.cone_slack, dst.cone_slack);
  for (std::size_t t : src.slack_hours) dst.slack_hours.push_back(t + offset);
}

}  // namespace

ScenarioSet build_scenarios(const PvmConfig& cfg) {
  if (!cfg.scenarios.empty()) return read_scenarios(read_text_file(cfg.scenarios));
  HouseholdParams h = cfg.households;
  h.year = cfg.base.year;
  h.days = cfg.base.days;
  const HouseholdData data = synth_households(h, derive_seed(cfg.seed, kHouseholds));
  const std::vector<double> avg = average_baseline(data);
  std::vector<ChargingEvent> events;
  for (const auto& c : data.composite) {
    auto found = detect_events(extract_ev_load(c, avg), data.start);
    events.insert(events.end(), found.begin(), found.end());
  }
  const EventDistributions dist = fit_distributions(events);
  return generate_annual(dist, cfg.n_scenarios, cfg.daily_prob, derive_seed(cfg.seed, kScenarios), cfg.base.year,
                         cfg.base.days, cfg.threads);
}

Demand build_demand(const PvmConfig& cfg, const Network& net, const ScenarioSet& scenarios) {
  LoadProfileSet base;
  if (!cfg.base_profiles.empty()) {
    base = load_profiles_file(cfg.base_profiles);
  } else {
    BaseLoadShape shape = cfg.base;
    shape.seed = derive_seed(cfg.seed, kBaseLoad);
    base = synthesize_base_profiles(net, shape);
  }
  base.check_covers(net);
  Overlay ov = overlay_penetration(net, base, scenarios, cfg.penetration, cfg.growth, derive_seed(cfg.seed, kOverlay));
  return {std::move(ov.profiles), std::move(ov.assignments)};
}

Demand build_demand(const PvmConfig& cfg, const Network& net) {
  // nothing to overlay: skip generating scenarios
  const bool none = std::lround(cfg.penetration * static_cast<double>(load_buses(net).size())) == 0;
  return build_demand(cfg, net, none ? ScenarioSet{} : build_scenarios(cfg));
}

VoltageLimits effective_limits(const PvmConfig& cfg, const Network& net) {
  VoltageLimits l = net.limits();
  if (cfg.v_lower) l.lower = *cfg.v_lower;
  if (cfg.v_upper) l.upper = *cfg.v_upper;
  if (!(l.lower < l.upper)) throw InputError("voltage limits need lower < upper");
  return l;
}

Screening screen(const PvmConfig& cfg, const Network& net, const LoadProfileSet& profiles) {
  VvaOptions o;
  o.solver = cfg.solver;
  o.threads = cfg.threads;
  Screening s;
  s.flows = run_vva(net, profiles, o);
  s.violations = detect_violations(net, s.flows, effective_limits(cfg, net));
  s.stats = node_stats(s.violations, profiles.hours(), load_buses(net));
  return s;
}

Targeting target(const PvmConfig& cfg, const Network& net, const LoadProfileSet& profiles,
                 const std::vector<ViolationRecord>& violations) {
  cfg.stat.validate();
  Targeting out;
  out.scored_days = normalize_and_score(daily_metrics(violations), cfg.stat.weights);
  if (std::all_of(out.scored_days.begin(), out.scored_days.end(),
                  [](const DailyStress& d) { return d.score <= 0.0; }))
    for (DailyStress& d : out.scored_days) d.score = 1.0;
  const Calendar cal{date_of(profiles.start()), profiles.hours() / 24};
  if (cal.days < cfg.stat.window_days)
    throw InputError(fmt::format("horizon of {} days is shorter than the {}-day window", cal.days,
                                 cfg.stat.window_days));
  out.ranked = rank_windows(out.scored_days, cfg.stat.window_days, cal);
  StatParams params = cfg.stat;
  params.seed = derive_seed(cfg.seed, kClusters);
  out.spatial = spatial_targeting(net, profiles, violations, params, cfg.solver, cfg.threads);
  return out;
}

ValidationVerdict validate_plan(const Network& net, const LoadProfileSet& profiles, const BessPlan& plan,
                                const BessSpec& spec, VoltageLimits limits, const conic::SolverConfig& cfg,
                                unsigned threads, FlowSolution* flows) {
  DispatchOptions o;
  o.objective = DispatchObjective::Losses;
  o.enforce_limits = true;
  o.threads = threads;
  DispatchResult r = dispatch_days(net, profiles, plan, spec, nullptr, limits, cfg, o);

  ValidationVerdict v;
  v.infeasible_days = r.infeasible_days;
  v.losses_kwh = r.losses_kwh;

  // failed days: same operation without limits, to see what is left over
  const auto& failed = r.infeasible_days;
  std::vector<FlowSolution> diag(failed.size());
  std::vector<std::size_t> offset(failed.size());
  o.enforce_limits = false;
  o.threads = 1;
  parallel_for(failed.size(), threads, [&](std::size_t k) {
    offset[k] = static_cast<std::size_t>(start_of(failed[k]).hours - profiles.start().hours);
    const DispatchResult d = dispatch_days(net, profiles.slice(offset[k], 24), plan, spec, nullptr, limits, cfg, o);
    if (!d.infeasible_days.empty())
      throw SolverError(fmt::format("diagnostic dispatch of {} failed: {}", to_string(failed[k]),
                                    d.days.front().message));
    diag[k] = d.flows;
  });
  for (std::size_t k = 0; k < failed.size(); ++k) paste_hours(diag[k], r.flows, offset[k]);

  v.residuals = detect_violations(net, r.flows, limits);
  v.pass = v.infeasible_days.empty() && v.residuals.empty();
  if (flows) *flows = std::move(r.flows);
  return v;
}

std::vector<CriticalWindow> backtrack(const std::vector<CriticalWindow>& used,
                                      const std::vector<CriticalWindow>& ranked) {
  auto overlaps = [](const CriticalWindow& a, const CriticalWindow& b) { return a.start <= b.end && b.start <= a.end; };
  for (const CriticalWindow& w : ranked) {
    if (std::any_of(used.begin(), used.end(), [&](const CriticalWindow& u) { return overlaps(u, w); })) continue;
    std::vector<CriticalWindow> out = used;
    out.push_back(w);
    return out;
  }
  throw BacktrackExhausted(fmt::format("no ranked window left to add after {} monitored window(s) of {} ranked",
                                       used.size(), ranked.size()));
}

std::vector<HourWindow> hour_windows(const std::vector<CriticalWindow>& windows, Timestamp start,
                                     std::size_t horizon_hours) {
  std::vector<HourWindow> out;
  for (const CriticalWindow& w : windows) {
    const std::int64_t first = start_of(w.start).hours - start.hours;
    const std::size_t count = w.days * 24;
    if (first < 0 || static_cast<std::size_t>(first) + count > horizon_hours)
      throw InputError(fmt::format("window {}..{} lies outside the horizon", to_string(w.start), to_string(w.end)));
    out.push_back({static_cast<std::size_t>(first), count});
  }
  std::sort(out.begin(), out.end(), [](const HourWindow& a, const HourWindow& b) { return a.first < b.first; });
  return out;
}

FiveNumber five_number(std::vector<double> v) {
  if (v.empty()) return {};
  std::sort(v.begin(), v.end());
  return {v.front(), quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75), v.back()};
}

std::vector<BusVoltageSummary> voltage_summaries(const Network& net, const FlowSolution& before,
                                                 const FlowSolution& after) {
  auto series = [](const FlowSolution& f, std::size_t i) {
    std::vector<double> v(f.hours);
    for (std::size_t t = 0; t < f.hours; ++t) v[t] = f.voltage(i, t);
    return v;
  };
  std::vector<BusVoltageSummary> out;
  for (std::size_t i = 0; i < net.bus_count(); ++i) {
    if (net.buses()[i].kind == BusKind::Slack) continue;
    out.push_back({net.buses()[i].id, five_number(series(before, i)), five_number(series(after, i))});
  }
  return out;
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::NoInvestment: return "no investment needed";
    case Outcome::Pass: return "pass";
    case Outcome::ValidationFailed: return "validation failed";
  }
  return "?";
}

int exit_code(Outcome o) { return o == Outcome::ValidationFailed ? 1 : 0; }

double PvmReport::worst_voltage() const {
  double w = 1.0;
  for (const ViolationRecord& r : violations)
    if (std::fabs(r.voltage - 1.0) > std::fabs(w - 1.0)) w = r.voltage;
  return w;
}

EconomicsRow plan_economics(const std::string& label, const Network& net, const LoadProfileSet& profiles,
                            const BessPlan& plan, const BessSpec& spec, const TouTariff& tariff,
                            const conic::SolverConfig& cfg, unsigned threads) {
  DispatchOptions o;
  o.enforce_limits = false;
  o.threads = threads;
  auto run = [&](const BessPlan& p) {
    o.objective = DispatchObjective::TouCost;
    const DispatchResult cost = dispatch_days(net, profiles, p, spec, &tariff, net.limits(), cfg, o);
    o.objective = DispatchObjective::Losses;
    const DispatchResult loss = dispatch_days(net, profiles, p, spec, nullptr, net.limits(), cfg, o);
    return OperationSummary{profiles.hours(), cost.cost, loss.losses_kwh};
  };
  return savings_report(label, run(BessPlan{}), run(plan));
}

PvmReport run_pvm(const PvmConfig& cfg, const Network& net, const Demand& demand) {
  const LoadProfileSet& profiles = demand.profiles;
  PvmReport rep;
  rep.limits = effective_limits(cfg, net);
  rep.start = profiles.start();
  rep.hours = profiles.hours();
  rep.ev_assignments = demand.ev_assignments;
  rep.spec = cfg.bess;

  const Screening s = staged("vva", [&] { return screen(cfg, net, profiles); });
  rep.violations = s.violations;
  rep.node_stats = s.stats;
  if (s.violations.empty()) {
    rep.outcome = Outcome::NoInvestment;
    rep.message = "no voltage violations over the horizon; no storage planned";
    rep.voltages = voltage_summaries(net, s.flows, s.flows);
    return rep;
  }

  Targeting tg = staged("stat", [&] { return target(cfg, net, profiles, s.violations); });
  rep.scored_days = tg.scored_days;
  rep.ranked_windows = tg.ranked;
  rep.spatial = tg.spatial;
  if (tg.ranked.empty()) throw InputError("stat: no window with positive score");

  FlowSolution after;
  std::vector<CriticalWindow> monitored{tg.ranked.front()};
  for (std::size_t round = 0;; ++round) {
    rep.monitored = monitored;
    const BessPlan p = staged("plan", [&] {
      const ToepModel m = build_toep(net, profiles, hour_windows(monitored, profiles.start(), profiles.hours()),
                                     tg.spatial.candidates.buses, cfg.bess, rep.limits);
      return plan(m, net, profiles, cfg.solver);
    });
    rep.plan = p;
    ValidationVerdict v = staged(
        "validate", [&] { return validate_plan(net, profiles, p, cfg.bess, rep.limits, cfg.solver, cfg.threads, &after); });
    v.round = round;
    rep.verdicts.push_back(std::move(v));
    if (rep.verdicts.back().pass) {
      rep.outcome = Outcome::Pass;
      rep.message = fmt::format("plan validated over the horizon after {} backtrack round(s)", round);
      break;
    }
    if (round == cfg.max_rounds) {
      rep.outcome = Outcome::ValidationFailed;
      rep.message = fmt::format("validation still failing after {} backtrack round(s)", round);
      break;
    }
    try {
      monitored = backtrack(monitored, tg.ranked);
    } catch (const BacktrackExhausted& e) {
      rep.outcome = Outcome::ValidationFailed;
      rep.message = fmt::format("validation failing and backtracking exhausted: {}", e.what());
      break;
    }
  }
  rep.voltages = voltage_summaries(net, s.flows, after);

  if (!cfg.tariff.empty()) {
    rep.economics.push_back(staged("economics", [&] {
      const TouTariff tariff = read_tariff(read_text_file(cfg.tariff), profiles.start(), profiles.hours());
      const std::string label = fmt::format("EV {:g}% growth {:g}", cfg.penetration * 100.0, cfg.growth);
      return plan_economics(label, net, profiles, *rep.plan, cfg.bess, tariff, cfg.solver, cfg.threads);
    }));
  }
  return rep;
}

PvmReport run_pvm(const PvmConfig& cfg) {
  cfg.validate();
  const Network net = staged("network", [&] { return load_network_file(cfg.network); });
  const Demand demand = staged("scenarios", [&] { return build_demand(cfg, net); });
  return run_pvm(cfg, net, demand);
}

}  // namespace pvm
