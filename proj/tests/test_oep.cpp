#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pvm/oep.hpp"
#include "support/feeders.hpp"
#include "support/oracles.hpp"

using namespace pvm;
using pvm::testing::line_feeder;
using pvm::testing::random_profiles;
using pvm::testing::feasible_with;
using pvm::testing::fixed_plan;

namespace {

const Timestamp kDay = make_timestamp(2023, 7, 1);

LoadProfileSet one_bad_hour(const Network& net, double peak_kw = 2200.0) {
  return pvm::testing::one_bad_hour(net, kDay, peak_kw);
}

double min_voltage(const FlowSolution& f) {
  double v = 10.0;
  for (std::size_t i = 0; i < f.v_sq.size(); ++i)
    for (std::size_t t = 0; t < f.hours; ++t) v = std::min(v, f.voltage(i, t));
  return v;
}

}  // namespace

TEST(BessSpec, DefaultsAndValidation) {
  BessSpec s;
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(s.e_max_kwh, 1000.0);
  EXPECT_EQ(s.c_cap, 300.0);
  s.soc_min = 0.95;
  EXPECT_THROW(s.validate(), InputError);
  s = {};
  s.eta_ch = 0.0;
  EXPECT_THROW(s.validate(), InputError);
  s = {};
  s.e_min_kwh = 2000.0;
  EXPECT_THROW(s.validate(), InputError);
}

TEST(BuildToep, CountsBinariesAndChain) {
  const Network net = line_feeder(2);
  const auto prof = one_bad_hour(net);
  const auto m = build_toep(net, prof, {{0, 24}}, {2}, BessSpec{}, net.limits());
  EXPECT_EQ(m.prog.binaries().size(), 1u + 24u * 4u);
  ASSERT_EQ(m.units.size(), 1u);
  EXPECT_EQ(m.units[0].soc.size(), 24u);
  EXPECT_EQ(m.hours.size(), 24u);
  // 24 dynamics rows (wrapping) and the pinned start, on top of the network
  std::size_t soc_rows = 0;
  for (const auto& row : m.prog.rows()) {
    if (row.sense != conic::Sense::Equal) continue;
    for (const auto& t : row.terms)
      if (t.var == m.units[0].soc[0].index) {
        ++soc_rows;
        break;
      }
  }
  EXPECT_EQ(soc_rows, 2u);  // its own step and the next hour's
}

TEST(BuildToep, RejectsBadInput) {
  const Network net = line_feeder(3);
  const auto prof = random_profiles(net, 24, 1);
  EXPECT_THROW(build_toep(net, prof, {{0, 24}}, {}, BessSpec{}, net.limits()), InputError);
  EXPECT_THROW(build_toep(net, prof, {{10, 24}}, {2}, BessSpec{}, net.limits()), InputError);
  EXPECT_THROW(build_toep(net, prof, {{0, 12}, {6, 12}}, {2}, BessSpec{}, net.limits()), InputError);
  EXPECT_THROW(build_toep(net, prof, {{0, 24}}, {1}, BessSpec{}, net.limits()), InputError);
  EXPECT_THROW(build_toep(net, prof, {{0, 24}}, {9}, BessSpec{}, net.limits()), InputError);
}

TEST(BuildToep, UnionOfWindowsHasOneChainEach) {
  const Network net = line_feeder(3);
  const auto prof = random_profiles(net, 72, 2);
  const auto m = build_toep(net, prof, {{0, 24}, {48, 12}}, {3}, BessSpec{}, net.limits());
  EXPECT_EQ(m.hours.size(), 36u);
  EXPECT_EQ(m.hours[24], 48u);
  EXPECT_EQ(m.prog.binaries().size(), 1u + 36u * 4u);
}

TEST(SocReplay, ArithmeticExamples) {
  BessSpec spec;
  spec.eta_ch = spec.eta_dis = 1.0;
  BessPlan p;
  p.windows = {{0, 2}};
  const double cap = 1000.0, start = 500.0;
  // lossless: charge 100 kW for an hour, discharge it back
  p.sites.push_back({2, true, cap, {100, 0}, {0, 100}, {0, 0}, {0, 0}, {start + 100, start}});
  EXPECT_TRUE(audit_plan(p, spec).ok());

  spec.eta_ch = 0.95;
  p.sites[0].energy_kwh = {start + 95, start};
  p.sites[0].discharge_kw = {0, 95};
  EXPECT_TRUE(audit_plan(p, spec).ok());
  p.sites[0].energy_kwh = {start + 100, start};
  EXPECT_FALSE(audit_plan(p, spec).ok());

  // simultaneous charge and discharge is flagged
  p.sites[0] = {2, true, cap, {10, 0}, {10, 0}, {0, 0}, {0, 0}, {start + 9.5 - 10, start - 0.5}};
  EXPECT_GT(audit_plan(p, spec).max_simultaneous_kw, 1.0);
}

TEST(Plan, NoViolationsMeansNoInvestment) {
  const Network net = line_feeder(4, 0.01, 0.008, 40, 20);
  const auto prof = random_profiles(net, 24, 3, 0.5, 1.0);
  const auto m = build_toep(net, prof, {{0, 24}}, {3, 4}, BessSpec{}, net.limits());
  const auto p = plan(m, net, prof, {});
  EXPECT_EQ(p.objective, 0.0);
  for (const auto& s : p.sites) {
    EXPECT_FALSE(s.installed);
    EXPECT_EQ(s.capacity_kwh, 0.0);
  }
}

TEST(Plan, MinimalCapacityMatchesGridOracle) {
  const Network net = line_feeder(2);
  const auto prof = one_bad_hour(net);
  const BessSpec spec;
  ASSERT_FALSE(feasible_with(net, prof, 2, 0.0, spec));
  const auto m = build_toep(net, prof, {{0, 24}}, {2}, spec, net.limits());
  const auto p = plan(m, net, prof, {});
  ASSERT_TRUE(p.sites[0].installed);
  const double planned = p.sites[0].capacity_kwh;

  const double hi = pvm::testing::min_capacity_oracle(net, prof, 2, spec);
  EXPECT_NEAR(planned / hi, 1.0, 0.01) << "planned " << planned << " oracle " << hi;
  EXPECT_NEAR(p.objective, 300.0 * planned, 1e-9 * p.objective);
  EXPECT_TRUE(audit_plan(p, spec).ok());
}

TEST(Plan, PlannedWindowValidates) {
  const Network net = line_feeder(2);
  const auto prof = one_bad_hour(net);
  const auto m = build_toep(net, prof, {{0, 24}}, {2}, BessSpec{}, net.limits());
  const auto p = plan(m, net, prof, {});
  DispatchOptions o;
  o.objective = DispatchObjective::Losses;
  const auto r = dispatch_days(net, prof, p, BessSpec{}, nullptr, net.limits(), {}, o);
  EXPECT_TRUE(r.infeasible_days.empty());
  EXPECT_GE(min_voltage(r.flows), net.limits().lower);
}

TEST(Plan, TighterLowerLimitNeverCostsLess) {
  const Network net = line_feeder(4, 0.02, 0.015, 300, 150);
  const auto prof = random_profiles(net, 24, 4, 0.6, 1.5);
  double prev = -1.0;
  for (double vl : {0.90, 0.92, 0.93}) {
    VoltageLimits lim = net.limits();
    lim.lower = vl;
    const auto p = plan(build_toep(net, prof, {{0, 24}}, {3, 4}, BessSpec{}, lim), net, prof, {});
    EXPECT_GE(p.objective, prev * (1.0 - 2e-3)) << "V_L " << vl;
    prev = p.objective;
  }
  EXPECT_GT(prev, 0.0);
}

TEST(Plan, InfeasibleReportsTheHour) {
  const Network net = line_feeder(2);
  const auto prof = one_bad_hour(net, 3500.0);
  BessSpec spec;
  spec.e_max_kwh = 50.0;
  try {
    plan(build_toep(net, prof, {{0, 24}}, {2}, spec, net.limits()), net, prof, {});
    FAIL() << "expected an infeasible plan";
  } catch (const PlanInfeasible& e) {
    ASSERT_EQ(e.hours().size(), 1u);
    EXPECT_EQ(e.hours()[0], kDay + 18);
  }
}

TEST(Tariff, DailyAndFiles) {
  std::vector<double> by_hour(24, 0.1);
  by_hour[18] = 0.3;
  const auto t = TouTariff::daily(by_hour, kDay, 48);
  EXPECT_EQ(t.at(kDay + 42), 0.3);
  EXPECT_THROW(t.at(kDay + 48), InputError);
  std::string text = "hour_of_day,price\n";
  for (int h = 0; h < 24; ++h) text += std::to_string(h) + "," + (h == 18 ? "0.3" : "0.1") + "\n";
  EXPECT_EQ(read_tariff(text, kDay, 48).price, t.price);
  EXPECT_THROW(read_tariff("hour_of_day,price\n0,0.1\n", kDay, 24), InputError);
  EXPECT_THROW(read_tariff("hour_of_day,price\n0,-1\n", kDay, 24), InputError);
  const auto ts = read_tariff("timestamp,price\n2023-07-01T00:00,0.2\n2023-07-01T01:00,0.4\n", kDay, 2);
  EXPECT_EQ(ts.price, (std::vector<double>{0.2, 0.4}));
  EXPECT_THROW(read_tariff("timestamp,price\n2023-07-01T00:00,0.2\n", kDay, 2), InputError);
}

TEST(TouDispatch, ZeroCapacityEqualsBaseline) {
  const Network net = pvm::testing::branched_six();
  const auto prof = random_profiles(net, 48, 5, 0.3, 1.0);
  const auto tariff = TouTariff::daily(std::vector<double>(24, 0.12), prof.start(), 48);
  const auto none = tou_dispatch(net, prof, BessPlan{}, BessSpec{}, tariff, net.limits(), {});
  const auto zero = tou_dispatch(net, prof, fixed_plan(4, 0.0), BessSpec{}, tariff, net.limits(), {});
  EXPECT_EQ(none.cost, zero.cost);
  EXPECT_EQ(none.losses_kwh, zero.losses_kwh);
  EXPECT_TRUE(none.infeasible_days.empty());
  EXPECT_EQ(none.days.size(), 2u);
  EXPECT_THROW(tou_dispatch(net, prof.slice(0, 30), BessPlan{}, BessSpec{}, tariff, net.limits(), {}), InputError);
}

TEST(TouDispatch, FlatTariffLosslessHasNoArbitrage) {
  const Network net = line_feeder(2, 0.01, 0.008, 200, 100);
  const auto prof = random_profiles(net, 24, 6, 0.5, 1.0);
  BessSpec spec;
  spec.eta_ch = spec.eta_dis = 1.0;
  const auto tariff = TouTariff::daily(std::vector<double>(24, 0.15), prof.start(), 24);
  const auto base = tou_dispatch(net, prof, BessPlan{}, spec, tariff, net.limits(), {});
  const auto with = tou_dispatch(net, prof, fixed_plan(2, 500.0), spec, tariff, net.limits(), {});
  EXPECT_LE(with.cost, base.cost * (1 + 1e-6));
  // only loss shaping is left to gain
  EXPECT_NEAR(with.cost, base.cost, 0.01 * base.cost);
}

TEST(TouDispatch, StorageNeverCostsMore) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> price(0.02, 0.5);
  for (int trial = 0; trial < 6; ++trial) {
    const Network net = trial % 2 ? line_feeder(4, 0.015, 0.01, 150, 70) : pvm::testing::branched_six();
    const auto prof = random_profiles(net, 24, 100 + trial, 0.3, 1.0);
    std::vector<double> by_hour(24);
    for (double& p : by_hour) p = price(rng);
    const auto tariff = TouTariff::daily(by_hour, prof.start(), 24);
    const BusId site = trial % 2 ? 4 : 6;
    const auto base = tou_dispatch(net, prof, BessPlan{}, BessSpec{}, tariff, net.limits(), {});
    const auto with = tou_dispatch(net, prof, fixed_plan(site, 400.0), BessSpec{}, tariff, net.limits(), {});
    ASSERT_TRUE(with.infeasible_days.empty());
    EXPECT_LE(with.cost, base.cost + 1e-6 * std::fabs(base.cost)) << "trial " << trial;

    DispatchOptions o;
    o.objective = DispatchObjective::Losses;
    const auto lb = dispatch_days(net, prof, BessPlan{}, BessSpec{}, nullptr, net.limits(), {}, o);
    const auto lw = dispatch_days(net, prof, fixed_plan(site, 400.0), BessSpec{}, nullptr, net.limits(), {}, o);
    EXPECT_LE(lw.losses_kwh, lb.losses_kwh * (1 + 1e-6)) << "trial " << trial;
    // operated storage respects the same bookkeeping as planned storage
    BessPlan as_run;
    as_run.windows = {{0, 24}};
    as_run.sites = lw.sites;
    EXPECT_TRUE(audit_plan(as_run, BessSpec{}).ok());
  }
}

TEST(Economics, TableRows) {
  const auto r = savings_report("10%", {8760, 0.97e6, 150410.0}, {8760, 0.83e6, 132050.0});
  EXPECT_NEAR(r.savings, 0.14e6, 1e-6);
  EXPECT_NEAR(r.savings_pct, 14.43, 0.005);
  EXPECT_NEAR(r.loss_reduction_mwh, 18.36, 1e-9);
  EXPECT_NEAR(r.loss_reduction_pct, 12.21, 0.005);
  const auto same = savings_report("x", {24, 5.0, 1.0}, {24, 5.0, 1.0});
  EXPECT_EQ(same.savings_pct, 0.0);
  EXPECT_EQ(same.loss_reduction_pct, 0.0);
  EXPECT_THROW(savings_report("x", {24, 1, 1}, {48, 1, 1}), InputError);
  const auto table = format_cost_table({r});
  EXPECT_EQ(table.substr(0, table.find('\n')), "case,w.o. BESS ($M),w. BESS ($M),Savings ($M),Savings (%)");
  EXPECT_NE(table.find("10%,0.970000,0.830000,0.140000,14.43"), std::string::npos);
  EXPECT_NE(format_loss_table({r}).find("10%,150.410000,132.050000,18.360000,12.21"), std::string::npos);
}

TEST(PlanFile, RoundTrip) {
  const Network net = line_feeder(2);
  const auto prof = one_bad_hour(net);
  const auto p = plan(build_toep(net, prof, {{0, 24}}, {2}, BessSpec{}, net.limits()), net, prof, {});
  const std::string text = write_plan(p, BessSpec{});
  const auto back = read_plan(text);
  EXPECT_EQ(write_plan(back, BessSpec{}), text);
  ASSERT_EQ(back.sites.size(), 1u);
  EXPECT_EQ(back.sites[0].capacity_kwh, p.sites[0].capacity_kwh);
  EXPECT_EQ(back.hours, p.hours);
  EXPECT_THROW(read_plan("bogus,1\n"), InputError);
  EXPECT_THROW(read_plan("dispatch,2023-07-01T00:00,7,0,0,0,0,0\n"), InputError);
}
