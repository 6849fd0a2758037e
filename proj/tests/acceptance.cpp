// Acceptance run: one PASS/FAIL line per criterion, measured values alongside.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include <fmt/format.h>

#include "pvm/kmeans.hpp"
#include "pvm/pipeline.hpp"
#include "support/feeders.hpp"
#include "support/oracles.hpp"
#include "support/random_instances.hpp"
#include "support/sweep.hpp"

using namespace pvm;
namespace pt = pvm::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::string detail;
};

const Timestamp kJan1 = make_timestamp(2023, 1, 1);

std::string data(const std::string& name) { return std::string(PVM_DATA_DIR) + "/" + name; }

// 1: branch-flow screening against a forward-backward sweep
Verdict vva_against_sweep() {
  const auto t0 = Clock::now();
  double worst_dv = 0.0, worst_cone = 0.0;
  std::size_t hours = 0;
  std::vector<std::pair<std::string, Network>> feeders{{"2-bus", pt::line_feeder(2)},
                                                       {"4-bus", pt::line_feeder(4)},
                                                       {"6-bus line", pt::line_feeder(6)},
                                                       {"6-bus branched", pt::branched_six()}};
  std::uint64_t seed = 10;
  for (const auto& [name, net] : feeders) {
    const auto prof = pt::random_profiles(net, 24, ++seed);
    const FlowSolution sol = run_vva(net, prof);
    std::vector<double> p, q;
    for (std::size_t t = 0; t < prof.hours(); ++t, ++hours) {
      pt::hour_demand(net, prof, t, p, q);
      const auto ref = pt::sweep_power_flow(net, p, q, net.slack_voltage().at(t));
      for (std::size_t i = 0; i < net.bus_count(); ++i)
        worst_dv = std::max(worst_dv, std::fabs(sol.voltage(i, t) - std::sqrt(ref.v_sq[i])));
      for (std::size_t k = 0; k < net.branch_count(); ++k) {
        const double pk = sol.p_flow[k][t], qk = sol.q_flow[k][t];
        const double r = sol.v_sq[net.branch_from(k)][t] * sol.i_sq[k][t] - (pk * pk + qk * qk);
        worst_cone = std::max(worst_cone, std::fabs(r));
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst_dv <= 1e-6 && worst_cone <= 1e-6 && secs < 5.0,
          fmt::format("{} feeder-hours, max |dV| {:.2e} pu, max cone residual {:.2e}, {:.2f} s", hours, worst_dv,
                      worst_cone, secs)};
}

// 2: branch and bound against enumeration
Verdict misocp_against_enumeration() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2023);
  conic::SolverConfig cfg;
  cfg.mip_gap = 1e-3;
  double worst_rel = 0.0, worst_gap = 0.0;
  int failures = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = pt::random_misocp(rng, 3 + static_cast<std::size_t>(trial % 6));
    const double oracle = pt::enumerate_binaries(inst.prog, inst.binaries, cfg);
    const conic::SolveResult r = conic::solve_misocp(inst.prog, cfg);
    if (!r.optimal() || !std::isfinite(oracle)) {
      ++failures;
      continue;
    }
    worst_rel = std::max(worst_rel, std::fabs(r.objective - oracle) / std::max(1.0, std::fabs(oracle)));
    worst_gap = std::max(worst_gap, r.gap);
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && worst_rel <= 1e-6 && worst_gap <= 1e-3 && secs < 120.0,
          fmt::format("20 instances (3-8 binaries), {} unsolved, max rel diff {:.2e}, max gap {:.2e}, {:.1f} s",
                      failures, worst_rel, worst_gap, secs)};
}

// 3: worst window against brute force, and affine invariance of the choice
Verdict window_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> wdist(1, 14);
  std::uniform_real_distribution<double> a(0.1, 50.0), b(-10.0, 10.0);
  int mismatches = 0, moved = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto log = pt::random_log(rng, kJan1, 365, 400);
    log.push_back({5, kJan1, 0.9, 0.05, ViolationKind::Under});
    log.push_back({5, kJan1 + 364 * 24, 0.93, 0.02, ViolationKind::Under});
    const auto raw = daily_metrics(log);
    const auto days = normalize_and_score(raw, {});
    const std::size_t W = static_cast<std::size_t>(wdist(rng));
    const auto got = select_worst_window(days, W);
    const auto [start, r] = pt::brute_worst(pt::score_series(days, date_of(kJan1), 365), W);
    if (got.start != date_of(kJan1) + static_cast<std::int64_t>(start) || got.score != r) ++mismatches;

    std::array<double, 4> scale{}, shift{};
    for (std::size_t k = 0; k < 4; ++k) {
      scale[k] = a(rng);
      shift[k] = b(rng);
    }
    auto rescaled = raw;
    for (auto& d : rescaled)
      for (std::size_t k = 0; k < 4; ++k) d.raw[k] = scale[k] * d.raw[k] + shift[k];
    const auto w2 = select_worst_window(normalize_and_score(rescaled, {}), W);
    // only windows tied to rounding may trade places
    if (w2.start != got.start && std::fabs(w2.score - got.score) > 1e-10) ++moved;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && moved == 0 && secs < 30.0,
          fmt::format("1000 logs, {} brute-force mismatches, {} windows moved under rescaling, {:.1f} s", mismatches,
                      moved, secs)};
}

// 4: spatial targeting structure
Verdict spatial_structure() {
  const Network net = load_network_file(data("ieee33.json"));
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u;
  int audits = 0, audit_fail = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<PoolEntry> pool;
    for (BusId b = 2; b <= 33; ++b)
      if (u(rng) < 0.5) pool.push_back({b, u(rng), 0});
    if (pool.empty()) continue;
    std::sort(pool.begin(), pool.end(), [](const PoolEntry& x, const PoolEntry& y) { return x.m_comb > y.m_comb; });
    const double th = trial % 2 ? default_distance_threshold(net, pool) : 0.2 * u(rng);
    ++audits;
    if (!pt::spacing_ok(net, diversity_filter(pool, net, th, default_target_count(pool.size())))) ++audit_fail;
  }

  int nondeterministic = 0;
  double s_min = 1.0, s_max = -1.0;
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    Points x(40, std::vector<double>(3));
    for (auto& row : x)
      for (double& v : row) v = g(rng);
    const int k = 2 + trial % 5;
    const auto r1 = kmeans(x, k, static_cast<std::uint64_t>(trial));
    const auto r2 = kmeans(x, k, static_cast<std::uint64_t>(trial));
    if (r1.labels != r2.labels) ++nondeterministic;
    const double s = silhouette(x, r1.labels);
    s_min = std::min(s_min, s);
    s_max = std::max(s_max, s);
  }
  const auto quotas = pool_quotas(3, 5, 1);
  const bool quotas_ok = quotas == std::vector<int>{5, 3, 1};
  return {audit_fail == 0 && nondeterministic == 0 && s_min >= -1.0 && s_max <= 1.0 && quotas_ok,
          fmt::format("{} filter audits, {} failed; {} nondeterministic k-means; silhouette in [{:.3f}, {:.3f}]; "
                      "quotas(3, 5, 1) = {},{},{}",
                      audits, audit_fail, nondeterministic, s_min, s_max, quotas.at(0), quotas.at(1), quotas.at(2))};
}

// 5: 33-bus critical week, planned and validated
Verdict critical_week() {
  PvmConfig cfg = load_config(data("ieee33.conf"));
  cfg.stat.window_days = 7;
  cfg.bess.e_max_kwh = 1000.0;
  const Network net = load_network_file(cfg.network);
  const Demand demand = build_demand(cfg, net);
  const Screening s = screen(cfg, net, demand.profiles);
  if (s.violations.empty()) return {false, "the year shows no violations to plan for"};
  const Targeting t = target(cfg, net, demand.profiles, s.violations);
  if (t.ranked.empty()) return {false, "no ranked window"};
  const CriticalWindow week = t.ranked.front();
  const auto& candidates = t.spatial.candidates.buses;
  const VoltageLimits limits = effective_limits(cfg, net);
  const auto hours = hour_windows({week}, demand.profiles.start(), demand.profiles.hours());

  const auto t0 = Clock::now();
  const ToepModel model = build_toep(net, demand.profiles, hours, candidates, cfg.bess, limits);
  const BessPlan p = plan(model, net, demand.profiles, cfg.solver);
  const double secs = seconds_since(t0);

  double largest = 0.0;
  std::size_t installed = 0;
  for (const SitePlan& site : p.sites) {
    largest = std::max(largest, site.capacity_kwh);
    installed += site.installed;
  }
  const PlanAudit audit = audit_plan(p, cfg.bess);
  const LoadProfileSet week_profiles = demand.profiles.slice(hours.front().first, hours.front().count);
  const ValidationVerdict v = validate_plan(net, week_profiles, p, cfg.bess, limits, cfg.solver, cfg.threads);
  const bool ok = hours.front().count == 168 && candidates.size() <= 10 && largest <= 1000.0 + 1e-6 &&
                  secs < 600.0 && v.pass && v.residuals.empty() && audit.ok(1e-6);
  return {ok, fmt::format("week {}..{} ({} h), {} candidates, {:.1f} kWh over {} site(s), largest {:.1f} kWh, solve {:.1f} s, "
                          "{} residual records, {} infeasible days, audit complementarity {:.1e} kW, "
                          "soc replay {:.1e} kWh, cycle {:.1e} kWh",
                          to_string(week.start), to_string(week.end), hours.front().count, candidates.size(),
                          p.total_capacity_kwh(), installed, largest, secs, v.residuals.size(), v.infeasible_days.size(),
                          audit.max_simultaneous_kw, audit.max_soc_replay_kwh, audit.max_cycle_kwh)};
}

// 6: minimal capacity on a 2-bus feeder against a grid search
Verdict minimal_capacity() {
  const auto t0 = Clock::now();
  const Network net = pt::line_feeder(2);
  const auto prof = pt::one_bad_hour(net, make_timestamp(2023, 7, 1));
  const BessSpec spec;
  const BessPlan p = plan(build_toep(net, prof, {{0, 24}}, {2}, spec, net.limits()), net, prof, {});
  const double planned = p.total_capacity_kwh();
  const double oracle = pt::min_capacity_oracle(net, prof, 2, spec);
  const double rel = std::fabs(planned / oracle - 1.0);
  const double secs = seconds_since(t0);
  return {rel <= 0.01 && secs < 60.0,
          fmt::format("planned {:.3f} kWh, grid oracle {:.3f} kWh, rel diff {:.2e}, {:.1f} s", planned, oracle, rel,
                      secs)};
}

// 7: scenario statistics, detection rules, extraction
Verdict scenario_statistics() {
  PvmConfig cfg = load_config(data("ieee33.conf"));
  cfg.n_scenarios = 1200;
  cfg.daily_prob = 0.9;
  const ScenarioSet set = build_scenarios(cfg);
  double mean = 0.0;
  for (std::size_t s = 0; s < set.size(); ++s) mean += static_cast<double>(set.charging_days(s));
  mean /= static_cast<double>(set.size());
  const double sigma = std::sqrt(365.0 * 0.9 * 0.1 / static_cast<double>(set.size()));
  const bool days_ok = set.size() == 1200 && std::fabs(mean - 328.5) <= 3.0 * sigma;

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> kw(0.0, 10.0);
  std::bernoulli_distribution quiet(0.4);
  int rule_mismatch = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> s(std::uniform_int_distribution<int>(1, 60)(rng));
    for (double& v : s) v = quiet(rng) ? 0.5 : kw(rng);
    const auto got = detect_events(s, kJan1);
    const auto want = pt::expected_events(s);
    bool same = got.size() == want.size();
    for (std::size_t k = 0; same && k < got.size(); ++k)
      same = got[k].start == kJan1 + static_cast<std::int64_t>(want[k].first) &&
             got[k].duration_h == static_cast<double>(want[k].len) &&
             std::fabs(got[k].energy_kwh - want[k].energy) <= 1e-12 &&
             (got[k].cls == EventClass::High) == (want[k].energy / static_cast<double>(want[k].len) > 7.2);
    if (!same) ++rule_mismatch;
  }
  // the thresholds themselves: strict, and the 1 h rule needs more than 7.2 kW
  const bool edges = detect_events({4.0, 4.0, 4.0}, kJan1).empty() && detect_events({7.2}, kJan1).empty() &&
                     detect_events({7.2000001}, kJan1).size() == 1 && detect_events({5.0}, kJan1).empty() &&
                     detect_events({5.0, 5.0}, kJan1).size() == 1;

  const auto homes = synth_households(cfg.households, 12);
  const auto avg = average_baseline(homes);
  double got = 0.0, want = 0.0;
  for (std::size_t i = 0; i < homes.composite.size(); ++i) {
    const auto ev = extract_ev_load(homes.composite[i], avg);
    got += std::accumulate(ev.begin(), ev.end(), 0.0);
    want += std::accumulate(homes.ev_truth[i].begin(), homes.ev_truth[i].end(), 0.0);
  }
  const double recovered = got / want;
  return {days_ok && rule_mismatch == 0 && edges && recovered >= 0.90,
          fmt::format("mean charging days {:.2f} (328.5 +- {:.2f}); {} of 2000 series break the rules, edge cases "
                      "{}; extraction recovers {:.1f}% of embedded energy",
                      mean, 3.0 * sigma, rule_mismatch, edges ? "ok" : "wrong", 100.0 * recovered)};
}

// 8: storage never raises TOU cost or losses
Verdict economics_direction() {
  const Timestamp start = make_timestamp(2023, 7, 1);
  const std::string tou_text = read_text_file(data("tou_tariff.csv"));
  std::vector<std::function<TouTariff(Timestamp, std::size_t)>> tariffs{
      [&](Timestamp t, std::size_t h) { return read_tariff(tou_text, t, h); },
      [](Timestamp t, std::size_t h) { return TouTariff::daily(std::vector<double>(24, 0.15), t, h); },
      [](Timestamp t, std::size_t h) {
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> price(0.02, 0.5);
        std::vector<double> by_hour(24);
        for (double& x : by_hour) x = price(rng);
        return TouTariff::daily(by_hour, t, h);
      }};

  struct Case {
    std::string name;
    Network net;
    LoadProfileSet prof;
    BessPlan plan;
  };
  std::vector<Case> cases;
  {
    Network n = pt::line_feeder(2);
    LoadProfileSet pr = pt::one_bad_hour(n, start);
    cases.push_back({"2-bus", n, pr, pt::fixed_plan(2, 400.0)});
  }
  {
    Network n = pt::line_feeder(4, 0.015, 0.01, 150, 70);
    LoadProfileSet pr = pt::random_profiles(n, 48, 101, 0.3, 1.0);
    cases.push_back({"4-bus", n, pr, pt::fixed_plan(4, 400.0)});
  }
  {
    Network n = pt::branched_six();
    LoadProfileSet pr = pt::random_profiles(n, 48, 100, 0.3, 1.0);
    cases.push_back({"6-bus", n, pr, pt::fixed_plan(6, 400.0)});
  }
  {
    Network n = load_network_file(data("ieee33.json"));
    BaseLoadShape shape;
    shape.days = 200;
    LoadProfileSet pr = synthesize_base_profiles(n, shape).slice(24 * 181, 48);
    BessPlan two;
    two.sites = {pt::fixed_plan(18, 600.0).sites[0], pt::fixed_plan(33, 400.0).sites[0]};
    cases.push_back({"33-bus", n, pr, two});
  }

  int runs = 0, violations = 0;
  double worst_cost = -1e300, worst_loss = -1e300;
  for (const Case& c : cases)
    for (const auto& make : tariffs) {
      const TouTariff tariff = make(c.prof.start(), c.prof.hours());
      const EconomicsRow row = plan_economics(c.name, c.net, c.prof, c.plan, BessSpec{}, tariff, {});
      ++runs;
      const double dc = (row.cost_with - row.cost_without) / std::fabs(row.cost_without);
      const double dl = (row.losses_with_mwh - row.losses_without_mwh) / row.losses_without_mwh;
      worst_cost = std::max(worst_cost, dc);
      worst_loss = std::max(worst_loss, dl);
      if (dc > 1e-6 || dl > 1e-6) ++violations;
    }
  return {violations == 0,
          fmt::format("{} fixture/tariff runs, {} violate; max relative change with storage: cost {:+.2e}, "
                      "losses {:+.2e}",
                      runs, violations, worst_cost, worst_loss)};
}

// 9: default capital cost on the published capacity
Verdict capital_constant() {
  const BessSpec spec;
  const double objective = spec.c_cap * 2281.59;
  const double rel = std::fabs(objective / 0.684e6 - 1.0);
  return {spec.c_cap == 300.0 && rel <= 0.002,
          fmt::format("c_cap {:g} $/kWh x 2281.59 kWh = ${:.2f}, {:.3f}% from $0.684M", spec.c_cap, objective,
                      100.0 * rel)};
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Verdict()>>> criteria{
      {1, vva_against_sweep},   {2, misocp_against_enumeration}, {3, window_oracle},
      {4, spatial_structure},   {5, critical_week},              {6, minimal_capacity},
      {7, scenario_statistics}, {8, economics_direction},        {9, capital_constant}};
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, fmt::format("threw: {}", e.what())};
    }
    if (!v.pass) ++failed;
    fmt::print("criterion {}: {}  {}\n", id, v.pass ? "PASS" : "FAIL", v.detail);
    std::fflush(stdout);
  }
  return failed;
}
