#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pvm/conic/solver.hpp"
#include "pvm/netmodel.hpp"
#include "pvm/oep.hpp"
#include "pvm/scenarios.hpp"
#include "pvm/stat.hpp"
#include "pvm/vva.hpp"

namespace pvm {

/// Everything a run needs. Relative paths in a config file resolve against
/// the file's directory. Seeds of the base load, households, scenarios,
/// overlay and clustering all derive from `seed`.
struct PvmConfig {
  std::string network;
  /// hourly CSV; empty synthesizes from `base`
  std::string base_profiles;
  BaseLoadShape base;
  /// scenario file; empty generates from synthetic households
  std::string scenarios;
  HouseholdParams households;
  std::size_t n_scenarios = 1200;
  double daily_prob = 0.9;
  double penetration = 1.0;
  double growth = 1.0;
  std::uint64_t seed = 2023;
  /// overrides of the network's limits
  std::optional<double> v_lower;
  std::optional<double> v_upper;
  StatParams stat;
  BessSpec bess;
  conic::SolverConfig solver;
  /// empty skips the economics stage
  std::string tariff;
  std::string output_dir = "pvm_out";
  std::size_t max_rounds = 5;
  unsigned threads = 0;

  /// Throws InputError on missing files or out-of-range parameters.
  void validate() const;
};

/// "key = value" lines, '#' comments. Keys mirror the fields, nested ones
/// dotted (stat.window_days, bess.c_cap, solver.mip_gap, ...). Unknown or
/// repeated keys are rejected.
PvmConfig parse_config(const std::string& text, const std::string& base_dir = "");
PvmConfig load_config(const std::string& path);
/// Every key, in table order; parse_config(write_config(c)) == c.
std::string write_config(const PvmConfig& cfg);

/// Annual demand with the EV overlay, plus how it was built.
struct Demand {
  LoadProfileSet profiles;
  std::vector<std::pair<BusId, std::size_t>> ev_assignments;
};

ScenarioSet build_scenarios(const PvmConfig& cfg);
Demand build_demand(const PvmConfig& cfg, const Network& net);
Demand build_demand(const PvmConfig& cfg, const Network& net, const ScenarioSet& scenarios);
VoltageLimits effective_limits(const PvmConfig& cfg, const Network& net);

struct Screening {
  FlowSolution flows;
  std::vector<ViolationRecord> violations;
  std::vector<NodeViolationStats> stats;
};
Screening screen(const PvmConfig& cfg, const Network& net, const LoadProfileSet& profiles);

struct Targeting {
  std::vector<DailyStress> scored_days;
  std::vector<CriticalWindow> ranked;
  SpatialResult spatial;
};
/// Scored days, ranked windows over the whole horizon and the candidate
/// buses. When every day normalizes to the same score (a single violating
/// day, say) each violating day counts 1 so windows still rank.
Targeting target(const PvmConfig& cfg, const Network& net, const LoadProfileSet& profiles,
                 const std::vector<ViolationRecord>& violations);

struct ValidationVerdict {
  bool pass = false;
  /// from the limit-free re-solve of failed days, and any stray reading of
  /// the enforced days
  std::vector<ViolationRecord> residuals;
  std::vector<Date> infeasible_days;
  std::size_t round = 0;
  double losses_kwh = 0.0;
};

/// Loss-minimizing day-by-day dispatch of the fixed plan with hard limits
/// over the whole horizon. `flows`, when given, receives the validated
/// year (diagnostic flows on failed days).
ValidationVerdict validate_plan(const Network& net, const LoadProfileSet& profiles, const BessPlan& plan,
                                const BessSpec& spec, VoltageLimits limits, const conic::SolverConfig& cfg,
                                unsigned threads = 0, FlowSolution* flows = nullptr);

class BacktrackExhausted : public Error {
 public:
  using Error::Error;
};

/// Monitored set plus the best-ranked window that is unused and overlaps
/// none of it. Throws BacktrackExhausted when none is left.
std::vector<CriticalWindow> backtrack(const std::vector<CriticalWindow>& used,
                                      const std::vector<CriticalWindow>& ranked);

/// Windows as sorted hour blocks of a horizon starting at `start`.
std::vector<HourWindow> hour_windows(const std::vector<CriticalWindow>& windows, Timestamp start,
                                     std::size_t horizon_hours);

struct FiveNumber {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};
FiveNumber five_number(std::vector<double> values);

struct BusVoltageSummary {
  BusId bus = 0;
  FiveNumber before;
  FiveNumber after;
};

enum class Outcome { NoInvestment, Pass, ValidationFailed };
std::string_view to_string(Outcome o);

struct PvmReport {
  Outcome outcome = Outcome::NoInvestment;
  std::string message;
  VoltageLimits limits;
  Timestamp start{};
  std::size_t hours = 0;
  std::vector<std::pair<BusId, std::size_t>> ev_assignments;

  std::vector<ViolationRecord> violations;
  std::vector<NodeViolationStats> node_stats;
  std::vector<DailyStress> scored_days;
  std::vector<CriticalWindow> ranked_windows;
  /// final monitored set, in the order the rounds added them
  std::vector<CriticalWindow> monitored;
  std::optional<SpatialResult> spatial;
  std::optional<BessPlan> plan;
  BessSpec spec;
  std::vector<ValidationVerdict> verdicts;
  std::vector<EconomicsRow> economics;
  std::vector<BusVoltageSummary> voltages;

  double worst_voltage() const;
};

/// Screening, window and candidate selection, planning and validation with
/// backtracking, then economics when a tariff is configured. Stage errors
/// carry the stage name.
PvmReport run_pvm(const PvmConfig& cfg);

/// Same, on prepared inputs.
PvmReport run_pvm(const PvmConfig& cfg, const Network& net, const Demand& demand);

/// Exit status of a finished run: 0 pass or no investment, 1 failed validation.
int exit_code(Outcome o);

/// TOU cost and losses of the year without and with the plan, both operated
/// without voltage limits so the two cases face the same constraints.
EconomicsRow plan_economics(const std::string& label, const Network& net, const LoadProfileSet& profiles,
                            const BessPlan& plan, const BessSpec& spec, const TouTariff& tariff,
                            const conic::SolverConfig& cfg, unsigned threads = 0);

/// Writes the report files into `outdir` (created if missing). Output is
/// byte-identical for identical reports.
void emit_reports(const PvmReport& report, const std::string& outdir);

// file bodies, also used by the CLI stages
std::string format_scored_days(const std::vector<DailyStress>& days);
std::string format_windows(const std::vector<CriticalWindow>& ranked, const std::vector<CriticalWindow>& monitored);
std::string format_candidates(const SpatialResult& spatial);
std::string format_verdicts(const std::vector<ValidationVerdict>& verdicts);
std::string format_residuals(const std::vector<ValidationVerdict>& verdicts);
std::string format_voltage_summary(const std::vector<BusVoltageSummary>& rows);
std::string format_summary(const PvmReport& report);

/// Per-bus five-number summaries of two flow solutions over the same buses.
std::vector<BusVoltageSummary> voltage_summaries(const Network& net, const FlowSolution& before,
                                                 const FlowSolution& after);

}  // namespace pvm
