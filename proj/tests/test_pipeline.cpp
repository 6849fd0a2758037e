#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include <fmt/format.h>

#include "pvm/pipeline.hpp"
#include "support/feeders.hpp"

using namespace pvm;
using pvm::testing::line_feeder;

namespace fs = std::filesystem;

namespace {

const Timestamp kJuly1 = make_timestamp(2023, 7, 1);

fs::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  fs::path p = fs::temp_directory_path() / fmt::format("pvm_{}_{}", info->test_suite_name(), info->name());
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Two-bus feeder, four days. Day 2 has twelve mild undervoltage hours, day 4
// one deep hour. Day 2 ranks first, but storage sized for it cannot hold
// day 4.
Demand mild_then_deep() {
  LoadProfileSet prof(kJuly1, 96);
  std::vector<double> p(96, 300.0), q(96);
  for (int h = 8; h < 20; ++h) p[24 + h] = 1800.0;
  p[72 + 18] = 2200.0;
  for (int t = 0; t < 96; ++t) q[t] = p[t] / 2;
  prof.set(2, p, q);
  return {prof, {}};
}

PvmConfig day_windows() {
  PvmConfig cfg;
  cfg.stat.window_days = 1;
  cfg.threads = 1;
  return cfg;
}

CriticalWindow win(int first_day, std::size_t days, double score = 1.0) {
  const Date d = date_of(kJuly1) + first_day;
  return {d, d + static_cast<std::int64_t>(days - 1), days, score};
}

std::string slurp(const fs::path& p) { return read_text_file(p.string()); }

}  // namespace

// ---- config ----------------------------------------------------------------

TEST(Config, WriteParseRoundTrip) {
  PvmConfig c;
  c.network = "/x/net.json";
  c.penetration = 0.3;
  c.growth = 1.1;
  c.seed = 99;
  c.v_lower = 0.94;
  c.stat.weights.w = {0.4, 0.3, 0.2, 0.1};
  c.stat.distance_threshold = 0.125;
  c.stat.target_count = 4;
  c.bess.c_cap = 250.0;
  c.solver.mip_gap = 1e-4;
  c.max_rounds = 2;
  const std::string text = write_config(c);
  const PvmConfig back = parse_config(text);
  EXPECT_EQ(write_config(back), text);
  EXPECT_EQ(back.v_lower, 0.94);
  EXPECT_FALSE(back.v_upper);
  EXPECT_EQ(back.stat.target_count, 4u);
  EXPECT_EQ(back.solver.mip_gap, 1e-4);
  EXPECT_EQ(back.stat.weights.w[3], 0.1);
  // defaults survive too
  EXPECT_EQ(write_config(parse_config(write_config(PvmConfig{}))), write_config(PvmConfig{}));
}

TEST(Config, RejectsUnknownRepeatedAndMalformed) {
  EXPECT_THROW(parse_config("netwrok = a.json\n"), InputError);
  EXPECT_THROW(parse_config("seed = 1\nseed = 2\n"), InputError);
  EXPECT_THROW(parse_config("seed 1\n"), InputError);
  EXPECT_THROW(parse_config("seed = -1\n"), InputError);
  EXPECT_THROW(parse_config("penetration = lots\n"), InputError);
  EXPECT_THROW(parse_config("stat.weights = 0.5,0.5\n"), InputError);
  const PvmConfig c = parse_config("# comment\n\n  seed = 5   # trailing\n");
  EXPECT_EQ(c.seed, 5u);
}

TEST(Config, RelativePathsAndValidation) {
  const PvmConfig c = parse_config("network = ieee33.json\ntariff = /abs/t.csv\n", PVM_DATA_DIR);
  EXPECT_EQ(c.network, std::string(PVM_DATA_DIR) + "/ieee33.json");
  EXPECT_EQ(c.tariff, "/abs/t.csv");
  EXPECT_THROW(c.validate(), InputError);  // tariff missing

  PvmConfig ok = load_config(std::string(PVM_DATA_DIR) + "/ieee33.conf");
  EXPECT_NO_THROW(ok.validate());
  PvmConfig bad = ok;
  bad.penetration = 1.5;
  EXPECT_THROW(bad.validate(), InputError);
  bad = ok;
  bad.network = "/nonexistent/net.json";
  EXPECT_THROW(bad.validate(), InputError);
  bad = ok;
  bad.v_lower = 1.0;
  bad.v_upper = 0.99;
  EXPECT_THROW(bad.validate(), InputError);
  bad.v_upper.reset();
  bad.v_lower = 1.06;  // above the network's upper limit
  EXPECT_THROW(effective_limits(bad, load_network_file(bad.network)), InputError);
  bad = ok;
  bad.bess.c_cap = 0.0;
  EXPECT_THROW(bad.validate(), InputError);
}

// ---- backtracking ----------------------------------------------------------

TEST(Backtrack, AppendsBestUnusedWindow) {
  const std::vector<CriticalWindow> ranked{win(10, 7, 5), win(0, 7, 4), win(20, 7, 3)};
  auto m = backtrack({ranked[0]}, ranked);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[1].start, ranked[1].start);
  m = backtrack(m, ranked);
  EXPECT_EQ(m[2].start, ranked[2].start);
  EXPECT_THROW(backtrack(m, ranked), BacktrackExhausted);
}

TEST(Backtrack, SkipsOverlappingWindows) {
  // a ranked list from another calendar may overlap the monitored set
  const std::vector<CriticalWindow> ranked{win(0, 7), win(5, 7), win(14, 7)};
  const auto m = backtrack({ranked[0]}, ranked);
  EXPECT_EQ(m.back().start, ranked[2].start);
}

TEST(Backtrack, GrowsStrictlyAndTerminates) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    // random non-overlapping windows in random rank order
    std::vector<CriticalWindow> ranked;
    int day = 0;
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    for (int i = 0; i < n; ++i) {
      day += std::uniform_int_distribution<int>(0, 5)(rng);
      const std::size_t len = std::uniform_int_distribution<std::size_t>(1, 7)(rng);
      ranked.push_back(win(day, len));
      day += static_cast<int>(len);
    }
    std::shuffle(ranked.begin(), ranked.end(), rng);
    std::vector<CriticalWindow> m{ranked.front()};
    std::size_t rounds = 0;
    while (true) {
      std::vector<CriticalWindow> next;
      try {
        next = backtrack(m, ranked);
      } catch (const BacktrackExhausted&) {
        break;
      }
      ASSERT_EQ(next.size(), m.size() + 1);
      for (std::size_t a = 0; a < next.size(); ++a)
        for (std::size_t b = a + 1; b < next.size(); ++b)
          ASSERT_TRUE(next[a].end < next[b].start || next[b].end < next[a].start);
      m = next;
      ASSERT_LE(++rounds, ranked.size());
    }
    EXPECT_EQ(m.size(), ranked.size());
  }
}

TEST(HourWindows, SortedBlocksInsideTheHorizon) {
  const auto h = hour_windows({win(3, 2), win(0, 1)}, kJuly1, 24 * 10);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h[0].first, 0u);
  EXPECT_EQ(h[0].count, 24u);
  EXPECT_EQ(h[1].first, 72u);
  EXPECT_EQ(h[1].count, 48u);
  EXPECT_THROW(hour_windows({win(9, 2)}, kJuly1, 24 * 10), InputError);
  EXPECT_THROW(hour_windows({win(-1, 2)}, kJuly1, 24 * 10), InputError);
}

TEST(FiveNumber, MatchesSortedPositions) {
  const auto f = five_number({5, 1, 4, 2, 3});
  EXPECT_EQ(f.min, 1);
  EXPECT_EQ(f.q1, 2);
  EXPECT_EQ(f.median, 3);
  EXPECT_EQ(f.q3, 4);
  EXPECT_EQ(f.max, 5);
  EXPECT_EQ(five_number({1, 2, 3, 4}).median, 2.5);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(std::uniform_int_distribution<int>(1, 60)(rng));
    for (double& x : v) x = std::normal_distribution<double>(1.0, 0.05)(rng);
    const auto s = five_number(v);
    ASSERT_LE(s.min, s.q1);
    ASSERT_LE(s.q1, s.median);
    ASSERT_LE(s.median, s.q3);
    ASSERT_LE(s.q3, s.max);
    const auto at_most = [&](double q) {
      return static_cast<double>(std::count_if(v.begin(), v.end(), [&](double x) { return x <= q + 1e-15; }));
    };
    const double n = static_cast<double>(v.size());
    EXPECT_GE(at_most(s.median), 0.5 * n);
    EXPECT_GE(at_most(s.q1), 0.25 * n);
    EXPECT_EQ(s.min, *std::min_element(v.begin(), v.end()));
  }
}

// ---- validation ------------------------------------------------------------

TEST(Validate, EmptyPlanOnQuietHorizonPasses) {
  const Network net = line_feeder(3, 0.01, 0.008, 100, 50);
  const auto prof = pvm::testing::random_profiles(net, 48, 1);
  const auto v = validate_plan(net, prof, BessPlan{}, BessSpec{}, net.limits(), {});
  EXPECT_TRUE(v.pass);
  EXPECT_TRUE(v.residuals.empty());
  EXPECT_TRUE(v.infeasible_days.empty());
}

TEST(Validate, EmptyPlanReproducesScreeningRecords) {
  const Network net = line_feeder(2);
  const Demand d = mild_then_deep();
  const auto screening = detect_violations(net, run_vva(net, d.profiles), net.limits());
  FlowSolution flows;
  const auto v = validate_plan(net, d.profiles, BessPlan{}, BessSpec{}, net.limits(), {}, 1, &flows);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.infeasible_days, (std::vector<Date>{date_of(kJuly1) + 1, date_of(kJuly1) + 3}));
  ASSERT_EQ(v.residuals.size(), screening.size());
  for (std::size_t i = 0; i < screening.size(); ++i) {
    EXPECT_EQ(v.residuals[i].bus, screening[i].bus);
    EXPECT_EQ(v.residuals[i].when, screening[i].when);
    EXPECT_NEAR(v.residuals[i].voltage, screening[i].voltage, 1e-6);
  }
  EXPECT_EQ(flows.hours, 96u);
}

TEST(Validate, PlanHoldsItsOwnWindow) {
  const Network net = line_feeder(2);
  const Demand d = mild_then_deep();
  const auto p = plan(build_toep(net, d.profiles, {{24, 24}}, {2}, BessSpec{}, net.limits()), net, d.profiles, {});
  const auto v = validate_plan(net, d.profiles, p, BessSpec{}, net.limits(), {});
  EXPECT_FALSE(v.pass);
  // day 2 was planned for; only the deep day is left
  EXPECT_EQ(v.infeasible_days, (std::vector<Date>{date_of(kJuly1) + 3}));
  ASSERT_FALSE(v.residuals.empty());
  for (const auto& r : v.residuals) EXPECT_EQ(date_of(r.when), date_of(kJuly1) + 3);
}

// ---- full runs -------------------------------------------------------------

TEST(RunPvm, QuietFeederNeedsNoInvestment) {
  const Network net = line_feeder(3, 0.01, 0.008, 100, 50);
  const Demand d{pvm::testing::random_profiles(net, 72, 2), {}};
  const PvmReport r = run_pvm(day_windows(), net, d);
  EXPECT_EQ(r.outcome, Outcome::NoInvestment);
  EXPECT_EQ(exit_code(r.outcome), 0);
  EXPECT_FALSE(r.plan);
  EXPECT_TRUE(r.verdicts.empty());
  ASSERT_EQ(r.voltages.size(), 2u);
  EXPECT_EQ(r.voltages[0].before.min, r.voltages[0].after.min);
}

TEST(RunPvm, BacktracksUntilTheYearValidates) {
  const Network net = line_feeder(2);
  const PvmReport r = run_pvm(day_windows(), net, mild_then_deep());
  ASSERT_EQ(r.outcome, Outcome::Pass) << r.message;
  ASSERT_EQ(r.verdicts.size(), 2u);
  EXPECT_FALSE(r.verdicts[0].pass);
  EXPECT_TRUE(r.verdicts[1].pass);
  EXPECT_EQ(r.verdicts[1].round, 1u);
  ASSERT_EQ(r.monitored.size(), 2u);
  EXPECT_EQ(r.monitored[0].start, date_of(kJuly1) + 1);
  EXPECT_EQ(r.monitored[1].start, date_of(kJuly1) + 3);
  ASSERT_TRUE(r.plan);
  EXPECT_EQ(r.plan->windows.size(), 2u);
  EXPECT_EQ(r.plan->hours.size(), 48u);
  for (const auto& s : r.voltages) EXPECT_GE(s.after.min, r.limits.lower);
  EXPECT_LT(r.voltages[0].before.min, r.limits.lower);
}

TEST(RunPvm, RoundCapEndsInFailure) {
  PvmConfig cfg = day_windows();
  cfg.max_rounds = 0;
  const PvmReport r = run_pvm(cfg, line_feeder(2), mild_then_deep());
  EXPECT_EQ(r.outcome, Outcome::ValidationFailed);
  EXPECT_EQ(exit_code(r.outcome), 1);
  EXPECT_EQ(r.verdicts.size(), 1u);
  EXPECT_FALSE(r.verdicts[0].residuals.empty());
}

TEST(RunPvm, ReportsAreByteStable) {
  const fs::path dir = scratch_dir();
  const fs::path tariff = dir / "tariff.csv";
  std::string t = "hour_of_day,price\n";
  for (int h = 0; h < 24; ++h) t += fmt::format("{},{}\n", h, h >= 17 && h < 21 ? 0.3 : 0.1);
  write_text_file(tariff.string(), t);

  PvmConfig cfg = day_windows();
  cfg.tariff = tariff.string();
  const PvmReport a = run_pvm(cfg, line_feeder(2), mild_then_deep());
  const PvmReport b = run_pvm(cfg, line_feeder(2), mild_then_deep());
  emit_reports(a, (dir / "a").string());
  emit_reports(b, (dir / "b").string());
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(dir / "a")) names.insert(e.path().filename().string());
  for (const char* f : {"summary.csv", "violations.csv", "scored_days.csv", "windows.csv", "candidates.csv",
                        "plan.csv", "verdicts.csv", "residuals.csv", "economics_cost.csv", "economics_losses.csv",
                        "voltage_summary.csv", "node_stats.csv"})
    EXPECT_TRUE(names.contains(f)) << f;
  for (const auto& n : names) EXPECT_EQ(slurp(dir / "a" / n), slurp(dir / "b" / n)) << n;

  const std::string cost = slurp(dir / "a" / "economics_cost.csv");
  EXPECT_EQ(cost.substr(0, cost.find('\n')), "case,w.o. BESS ($M),w. BESS ($M),Savings ($M),Savings (%)");
  ASSERT_EQ(a.economics.size(), 1u);
  EXPECT_LE(a.economics[0].cost_with, a.economics[0].cost_without * (1 + 1e-6));
  EXPECT_LE(a.economics[0].losses_with_mwh, a.economics[0].losses_without_mwh * (1 + 1e-6));

  // a later quiet run clears the planning files
  const PvmReport quiet = run_pvm(day_windows(), line_feeder(3, 0.01, 0.008, 100, 50),
                                  Demand{pvm::testing::random_profiles(line_feeder(3, 0.01, 0.008, 100, 50), 48, 2), {}});
  emit_reports(quiet, (dir / "a").string());
  EXPECT_FALSE(fs::exists(dir / "a" / "plan.csv"));
  EXPECT_NE(slurp(dir / "a" / "summary.csv").find("outcome,no investment needed"), std::string::npos);
}

TEST(RunPvm, StageErrorsNameTheStage) {
  const fs::path dir = scratch_dir();
  write_text_file((dir / "net.json").string(), "{ not json");
  PvmConfig cfg;
  cfg.network = (dir / "net.json").string();
  try {
    run_pvm(cfg);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("network:", 0), 0u) << e.what();
  }
  EXPECT_THROW(emit_reports(PvmReport{}, (dir / "net.json" / "sub").string()), InputError);
}

TEST(RunPvm, LightThirtyThreeBusYearWithoutEvs) {
  PvmConfig cfg = load_config(std::string(PVM_DATA_DIR) + "/ieee33.conf");
  cfg.penetration = 0.0;
  cfg.base.peak_fraction = 0.4;
  cfg.base.days = 28;
  cfg.tariff.clear();
  const PvmReport r = run_pvm(cfg);
  EXPECT_EQ(r.outcome, Outcome::NoInvestment);
  EXPECT_TRUE(r.violations.empty());
  EXPECT_TRUE(r.ev_assignments.empty());
}

TEST(RunPvm, ThirtyThreeBusWithEvsPlansAndValidates) {
  PvmConfig cfg = load_config(std::string(PVM_DATA_DIR) + "/ieee33.conf");
  cfg.base.days = 14;
  cfg.stat.window_days = 2;
  cfg.n_scenarios = 50;
  cfg.tariff.clear();
  const PvmReport r = run_pvm(cfg);
  EXPECT_EQ(r.ev_assignments.size(), 32u);
  ASSERT_FALSE(r.violations.empty());
  ASSERT_TRUE(r.spatial);
  ASSERT_TRUE(r.plan);
  ASSERT_FALSE(r.verdicts.empty());
  EXPECT_EQ(r.monitored.front().days, 2u);

  std::set<BusId> violating;
  for (const auto& v : r.violations) violating.insert(v.bus);
  const auto& cands = r.spatial->candidates.buses;
  for (BusId b : cands) EXPECT_TRUE(violating.contains(b)) << b;
  for (const auto& s : r.plan->sites)
    if (s.installed) EXPECT_NE(std::find(cands.begin(), cands.end(), s.bus), cands.end()) << s.bus;
  EXPECT_TRUE(audit_plan(*r.plan, cfg.bess).ok());
  if (r.outcome == Outcome::Pass) {
    EXPECT_TRUE(r.verdicts.back().residuals.empty());
    for (const auto& s : r.voltages) EXPECT_GE(s.after.min, r.limits.lower);
  }
}
