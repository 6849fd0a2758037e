#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pvm/conic/program.hpp"
#include "pvm/conic/solver.hpp"
#include "pvm/netmodel.hpp"
#include "pvm/vva.hpp"

namespace pvm {

/// Storage parameters shared by every candidate site. Energies in kWh,
/// powers in kW, C-rates in 1/h, K_Q in kvar per kWh, c_cap in $/kWh.
struct BessSpec {
  double e_min_kwh = 0.0;
  double e_max_kwh = 1000.0;
  double soc_min = 0.1;
  double soc_max = 0.9;
  double soc_initial = 0.5;
  double eta_ch = 0.95;
  double eta_dis = 0.95;
  double c_ch = 0.5;
  double c_dis = 0.5;
  double k_q_inj = 0.5;
  double k_q_abs = 0.5;
  double c_cap = 300.0;

  void validate() const;
};

/// Hard voltage limits are tightened by this much (p.u.) inside models so a
/// solver point at the bound still reads as compliant.
inline constexpr double kLimitMargin = 1e-6;

/// Contiguous block of horizon hours [first, first + count) of a profile set.
struct HourWindow {
  std::size_t first = 0;
  std::size_t count = 0;
};

/// Per-site storage variables of a model. Powers kW, energy kWh.
struct BessUnit {
  BusId bus = 0;
  std::size_t bus_index = 0;
  std::optional<conic::Var> z;  // absent in operational models
  std::optional<conic::Var> e_cap;
  double fixed_capacity_kwh = 0.0;
  std::vector<conic::Var> ch, dis, inj, abs, soc;
  std::vector<conic::Var> u_ch, u_dis, u_inj, u_abs;
};

struct ToepOptions {
  /// Small price ($ per kWh of feeder losses) that keeps the cone relaxation
  /// tight; not part of the reported capital cost.
  double loss_price = 0.01;
};

struct ToepModel {
  conic::ConicProgram prog;
  std::vector<std::size_t> hours;   // profile hour of each block
  std::vector<HourWindow> windows;  // as given, one cyclic SOC chain each
  std::vector<BranchFlowHour> blocks;
  std::vector<BessUnit> units;
  BessSpec spec;
  Timestamp start{};
  double s_base_kw = 1.0;
  /// limits as enforced (margin applied)
  VoltageLimits limits;
};

/// Capital-cost-minimizing sizing and placement over the windows. Each
/// window carries its own cyclic SOC chain starting and ending at
/// soc_initial * capacity. Voltage limits are hard.
ToepModel build_toep(const Network& net, const LoadProfileSet& profiles, const std::vector<HourWindow>& windows,
                     const std::vector<BusId>& candidates, const BessSpec& spec, VoltageLimits limits,
                     const ToepOptions& options = {});

/// Proposes binary fixings from a relaxed point: sites with capacity are
/// installed and each hour is pinned to the dominant direction.
conic::IncumbentHeuristic storage_heuristic(const std::vector<BessUnit>& units, double e_max_kwh);

struct SitePlan {
  BusId bus = 0;
  bool installed = false;
  double capacity_kwh = 0.0;
  // per planned hour
  std::vector<double> charge_kw, discharge_kw, q_inj_kvar, q_abs_kvar, energy_kwh;
};

struct BessPlan {
  std::vector<SitePlan> sites;
  /// Timestamps of the planned hours, window by window.
  std::vector<Timestamp> hours;
  std::vector<HourWindow> windows;
  /// capital cost, $
  double objective = 0.0;
  double gap = 0.0;
  std::size_t nodes = 0;
  std::string status;

  double total_capacity_kwh() const;
  const SitePlan* site(BusId bus) const;
};

/// Storage planning failed because no allowed capacity removes the
/// violations. `hours` lists the hours that stay infeasible even with every
/// candidate at full size and a free state of charge.
class PlanInfeasible : public SolverError {
 public:
  PlanInfeasible(const std::string& what, std::vector<Timestamp> hours)
      : SolverError(what), hours_(std::move(hours)) {}
  const std::vector<Timestamp>& hours() const { return hours_; }

 private:
  std::vector<Timestamp> hours_;
};

struct PlanAudit {
  double max_simultaneous_kw = 0.0;    // max min(ch, dis) and min(inj, abs)
  double max_soc_replay_kwh = 0.0;     // replayed vs solver trajectory
  double max_cycle_kwh = 0.0;          // |start - end| per window
  double max_band_kwh = 0.0;           // SOC band excess
  double max_gating = 0.0;             // dispatch on sites without capacity
  bool ok(double tol = 1e-6) const;
};

PlanAudit audit_plan(const BessPlan& plan, const BessSpec& spec);

/// Solves the planning model (mip gap from cfg), extracts and audits the plan.
/// Throws PlanInfeasible or SolverError.
BessPlan plan(const ToepModel& model, const Network& net, const LoadProfileSet& profiles,
              const conic::SolverConfig& cfg);

// ---- operation of a fixed plan -------------------------------------------------

struct TouTariff {
  Timestamp start{};
  std::vector<double> price;  // $/kWh per hour

  /// Repeats a 24-entry hour-of-day schedule over the horizon.
  static TouTariff daily(const std::vector<double>& by_hour, Timestamp start, std::size_t hours);
  double at(Timestamp ts) const;
  void covers(Timestamp first, std::size_t hours) const;
};

/// Rows "hour_of_day,price" (24 rows) or "timestamp,price"; header required.
TouTariff read_tariff(const std::string& text, Timestamp start, std::size_t hours);

enum class DispatchObjective { TouCost, Losses };

struct DispatchOptions {
  DispatchObjective objective = DispatchObjective::TouCost;
  bool enforce_limits = true;
  double loss_price = 0.01;
  unsigned threads = 0;
};

struct DayResult {
  Date date{};
  bool feasible = false;
  double cost = 0.0;        // $, sum c_t * P_slack
  double losses_kwh = 0.0;
  std::string message;
};

struct DispatchResult {
  std::vector<DayResult> days;
  /// Flows of feasible days; infeasible days are left zero.
  FlowSolution flows;
  /// [site][hour] kW / kWh for the installed sites of the plan.
  std::vector<SitePlan> sites;
  double cost = 0.0;
  double losses_kwh = 0.0;
  std::vector<Date> infeasible_days;
};

/// Re-optimizes storage dispatch day by day with the plan's capacities
/// frozen, a daily cyclic SOC and the mutual-exclusion binaries kept.
/// The horizon must consist of whole days. `tariff` may be null for the
/// loss objective.
DispatchResult dispatch_days(const Network& net, const LoadProfileSet& profiles, const BessPlan& plan,
                             const BessSpec& spec, const TouTariff* tariff, VoltageLimits limits,
                             const conic::SolverConfig& cfg, const DispatchOptions& options);

DispatchResult tou_dispatch(const Network& net, const LoadProfileSet& profiles, const BessPlan& plan,
                            const BessSpec& spec, const TouTariff& tariff, VoltageLimits limits,
                            const conic::SolverConfig& cfg, unsigned threads = 0);

struct OperationSummary {
  std::size_t hours = 0;
  double cost = 0.0;
  double losses_kwh = 0.0;
};

struct EconomicsRow {
  std::string label;
  double cost_without = 0.0;
  double cost_with = 0.0;
  double savings = 0.0;
  double savings_pct = 0.0;
  double losses_without_mwh = 0.0;
  double losses_with_mwh = 0.0;
  double loss_reduction_mwh = 0.0;
  double loss_reduction_pct = 0.0;
};

EconomicsRow savings_report(const std::string& label, const OperationSummary& without,
                            const OperationSummary& with);
/// label, w.o. BESS ($M), w. BESS ($M), Savings ($M), Savings (%)
std::string format_cost_table(const std::vector<EconomicsRow>& rows);
/// label, w.o. BESS (MWh), w. BESS (MWh), Reduction (MWh), Reduction (%)
std::string format_loss_table(const std::vector<EconomicsRow>& rows);

/// Structured text: sites, per-hour dispatch, objective, gap, spec echo.
std::string write_plan(const BessPlan& plan, const BessSpec& spec);
BessPlan read_plan(const std::string& text);

}  // namespace pvm
