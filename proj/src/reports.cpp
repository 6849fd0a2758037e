#include <algorithm>
#include <filesystem>
#include <set>
#include <system_error>

#include <fmt/format.h>

#include "pvm/pipeline.hpp"

namespace pvm {

namespace {

namespace fs = std::filesystem;

std::string five(const FiveNumber& f) {
  return fmt::format("{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}", f.min, f.q1, f.median, f.q3, f.max);
}

std::string join_buses(const std::vector<BusId>& buses) {
  std::string out;
  for (BusId b : buses) out += (out.empty() ? "" : " ") + std::to_string(b);
  return out;
}

}  // namespace

std::string format_scored_days(const std::vector<DailyStress>& days) {
  std::string out = "date,count,total_severity,max_severity,duration_h,score\n";
  for (const DailyStress& d : days)
    out += fmt::format("{},{:.0f},{:.9f},{:.9f},{:.0f},{:.9f}\n", to_string(d.date), d.raw[kCount],
                       d.raw[kTotalSeverity], d.raw[kMaxSeverity], d.raw[kDuration], d.score);
  return out;
}

std::string format_windows(const std::vector<CriticalWindow>& ranked, const std::vector<CriticalWindow>& monitored) {
  std::string out = "rank,start,end,days,score,monitored_round\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const CriticalWindow& w = ranked[i];
    std::string round;
    for (std::size_t k = 0; k < monitored.size(); ++k)
      if (monitored[k].start == w.start) round = std::to_string(k);
    out += fmt::format("{},{},{},{},{:.9f},{}\n", i + 1, to_string(w.start), to_string(w.end), w.days, w.score, round);
  }
  return out;
}

std::string format_candidates(const SpatialResult& s) {
  std::string out = fmt::format("# k={},snapshot_hour={},threshold={:.9f},accepted={}\n", s.clusters.k,
                                s.snapshot_hour, s.candidates.threshold, join_buses(s.candidates.buses));
  out += "bus,s_mean_abs,f_viol,e_topo,s_eol,m_comb,cluster,pool_rank,accepted,reason\n";
  for (const NodeFeatures& f : s.features) {
    std::string rank, accepted, reason;
    for (const CandidateDecision& d : s.candidates.trail)
      if (d.bus == f.bus) {
        rank = std::to_string(d.rank);
        accepted = d.accepted ? "1" : "0";
        reason = d.reason;
      }
    out += fmt::format("{},{:.9f},{:.9f},{},{:.9f},{:.9f},{},{},{},{}\n", f.bus, f.s_mean_abs, f.f_viol, f.e_topo,
                       f.s_eol, f.m_comb, f.cluster, rank, accepted, reason);
  }
  return out;
}

std::string format_verdicts(const std::vector<ValidationVerdict>& verdicts) {
  std::string out = "round,verdict,residual_records,infeasible_days,losses_kwh\n";
  for (const ValidationVerdict& v : verdicts) {
    std::string days;
    for (Date d : v.infeasible_days) days += (days.empty() ? "" : " ") + to_string(d);
    out += fmt::format("{},{},{},{},{:.6f}\n", v.round, v.pass ? "pass" : "fail", v.residuals.size(), days,
                       v.losses_kwh);
  }
  return out;
}

std::string format_residuals(const std::vector<ValidationVerdict>& verdicts) {
  std::string out = "round,timestamp,bus_id,voltage_pu,severity_pu\n";
  for (const ValidationVerdict& v : verdicts)
    for (const ViolationRecord& r : v.residuals)
      out += fmt::format("{},{},{},{:.9f},{:.9f}\n", v.round, to_string(r.when), r.bus, r.voltage, r.severity);
  return out;
}

std::string format_voltage_summary(const std::vector<BusVoltageSummary>& rows) {
  std::string out =
      "bus,before_min,before_q1,before_median,before_q3,before_max,after_min,after_q1,after_median,after_q3,"
      "after_max\n";
  for (const BusVoltageSummary& r : rows) out += fmt::format("{},{},{}\n", r.bus, five(r.before), five(r.after));
  return out;
}

std::string format_summary(const PvmReport& r) {
  std::string out;
  out += fmt::format("outcome,{}\n", to_string(r.outcome));
  out += fmt::format("message,{}\n", r.message);
  out += fmt::format("horizon,{},{}\n", to_string(r.start), r.hours);
  out += fmt::format("limits,{:.6f},{:.6f}\n", r.limits.lower, r.limits.upper);
  out += fmt::format("ev_buses,{}\n", r.ev_assignments.size());
  out += fmt::format("violation_records,{}\n", r.violations.size());
  std::set<Date> days;
  std::set<BusId> buses;
  for (const ViolationRecord& v : r.violations) {
    days.insert(date_of(v.when));
    buses.insert(v.bus);
  }
  out += fmt::format("violating_days,{}\n", days.size());
  out += fmt::format("violating_buses,{}\n", buses.size());
  out += fmt::format("worst_voltage,{:.6f}\n", r.worst_voltage());
  if (r.spatial) out += fmt::format("candidates,{}\n", join_buses(r.spatial->candidates.buses));
  for (const CriticalWindow& w : r.monitored)
    out += fmt::format("monitored_window,{},{}\n", to_string(w.start), to_string(w.end));
  if (r.plan) {
    std::vector<BusId> sites;
    for (const SitePlan& s : r.plan->sites)
      if (s.installed) sites.push_back(s.bus);
    out += fmt::format("installed,{}\n", join_buses(sites));
    out += fmt::format("capacity_kwh,{:.6f}\n", r.plan->total_capacity_kwh());
    out += fmt::format("capital_cost,{:.2f}\n", r.plan->objective);
    out += fmt::format("mip_gap,{:.3g}\n", r.plan->gap);
  }
  out += fmt::format("validation_rounds,{}\n", r.verdicts.size());
  return out;
}

void emit_reports(const PvmReport& r, const std::string& outdir) {
  std::error_code ec;
  fs::create_directories(outdir, ec);
  if (ec || !fs::is_directory(outdir))
    throw InputError(fmt::format("output directory '{}' is not writable: {}", outdir, ec.message()));

  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("summary.csv", format_summary(r));
  files.emplace_back("violations.csv", write_violation_log(r.violations));
  std::string stats = "bus,p_uv,p_ov,f_viol\n";
  for (const NodeViolationStats& s : r.node_stats)
    stats += fmt::format("{},{:.9f},{:.9f},{:.9f}\n", s.bus, s.p_uv, s.p_ov, s.f_viol);
  files.emplace_back("node_stats.csv", stats);
  std::string ev = "bus,scenario\n";
  for (const auto& [bus, s] : r.ev_assignments) ev += fmt::format("{},{}\n", bus, s);
  files.emplace_back("ev_assignments.csv", ev);
  files.emplace_back("voltage_summary.csv", format_voltage_summary(r.voltages));
  if (!r.scored_days.empty()) files.emplace_back("scored_days.csv", format_scored_days(r.scored_days));
  if (!r.ranked_windows.empty()) files.emplace_back("windows.csv", format_windows(r.ranked_windows, r.monitored));
  if (r.spatial) files.emplace_back("candidates.csv", format_candidates(*r.spatial));
  if (r.plan) files.emplace_back("plan.csv", write_plan(*r.plan, r.spec));
  if (!r.verdicts.empty()) {
    files.emplace_back("verdicts.csv", format_verdicts(r.verdicts));
    files.emplace_back("residuals.csv", format_residuals(r.verdicts));
  }
  if (!r.economics.empty()) {
    files.emplace_back("economics_cost.csv", format_cost_table(r.economics));
    files.emplace_back("economics_losses.csv", format_loss_table(r.economics));
  }

  // drop files a previous run left behind so the directory reflects this report only
  for (const char* name : {"scored_days.csv", "windows.csv", "candidates.csv", "plan.csv", "verdicts.csv",
                           "residuals.csv", "economics_cost.csv", "economics_losses.csv"}) {
    const bool written = std::any_of(files.begin(), files.end(), [&](const auto& f) { return f.first == name; });
    if (!written) fs::remove(fs::path(outdir) / name, ec);
  }
  for (const auto& [name, body] : files) write_text_file((fs::path(outdir) / name).string(), body);
}

}  // namespace pvm
