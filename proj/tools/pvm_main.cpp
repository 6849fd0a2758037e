// pvm command line: stage subcommands plus `run` for the whole flow.
// Exit codes: 0 pass / no investment, 1 validation failed, 2 input error,
// 3 solver failure.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pvm/pipeline.hpp"

using namespace pvm;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::string plan;
};

PvmConfig prepare(const Common& c) {
  PvmConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.output_dir = *c.out;
  if (c.threads) cfg.threads = *c.threads;
  if (cfg.threads > 0) set_default_threads(cfg.threads);
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  return cfg;
}

void put(const PvmConfig& cfg, const std::string& name, const std::string& body) {
  const std::string path = (std::filesystem::path(cfg.output_dir) / name).string();
  write_text_file(path, body);
  fmt::print("wrote {}\n", path);
}

BessPlan plan_from(const Common& c) {
  if (c.plan.empty()) throw InputError("--plan <file> is required");
  return read_plan(read_text_file(c.plan));
}

int cmd_scenarios(const Common& c) {
  const PvmConfig cfg = prepare(c);
  const Network net = load_network_file(cfg.network);
  const ScenarioSet set = build_scenarios(cfg);
  const Demand d = build_demand(cfg, net, set);
  put(cfg, "scenarios.csv", write_scenarios(set));
  put(cfg, "profiles.csv", write_profiles_csv(d.profiles));
  std::string ev = "bus,scenario\n";
  for (const auto& [bus, s] : d.ev_assignments) ev += fmt::format("{},{}\n", bus, s);
  put(cfg, "ev_assignments.csv", ev);
  return 0;
}

int cmd_vva(const Common& c) {
  const PvmConfig cfg = prepare(c);
  const Network net = load_network_file(cfg.network);
  const Demand d = build_demand(cfg, net);
  const Screening s = screen(cfg, net, d.profiles);
  put(cfg, "violations.csv", write_violation_log(s.violations));
  std::string stats = "bus,p_uv,p_ov,f_viol\n";
  for (const NodeViolationStats& n : s.stats)
    stats += fmt::format("{},{:.9f},{:.9f},{:.9f}\n", n.bus, n.p_uv, n.p_ov, n.f_viol);
  put(cfg, "node_stats.csv", stats);
  put(cfg, "voltage_summary.csv", format_voltage_summary(voltage_summaries(net, s.flows, s.flows)));
  fmt::print("{} violation records\n", s.violations.size());
  return 0;
}

int cmd_stat(const Common& c) {
  const PvmConfig cfg = prepare(c);
  const Network net = load_network_file(cfg.network);
  const Demand d = build_demand(cfg, net);
  const Screening s = screen(cfg, net, d.profiles);
  if (s.violations.empty()) {
    fmt::print("no violations; nothing to rank\n");
    return 0;
  }
  const Targeting t = target(cfg, net, d.profiles, s.violations);
  put(cfg, "scored_days.csv", format_scored_days(t.scored_days));
  put(cfg, "windows.csv", format_windows(t.ranked, {}));
  put(cfg, "candidates.csv", format_candidates(t.spatial));
  return 0;
}

int cmd_plan(const Common& c) {
  const PvmConfig cfg = prepare(c);
  const Network net = load_network_file(cfg.network);
  const Demand d = build_demand(cfg, net);
  const Screening s = screen(cfg, net, d.profiles);
  if (s.violations.empty()) {
    fmt::print("no violations; no storage planned\n");
    return 0;
  }
  const Targeting t = target(cfg, net, d.profiles, s.violations);
  if (t.ranked.empty()) throw InputError("no window with positive score");
  const ToepModel m = build_toep(net, d.profiles, hour_windows({t.ranked.front()}, d.profiles.start(), d.profiles.hours()),
                                 t.spatial.candidates.buses, cfg.bess, effective_limits(cfg, net));
  const BessPlan p = plan(m, net, d.profiles, cfg.solver);
  put(cfg, "plan.csv", write_plan(p, cfg.bess));
  fmt::print("capacity {:.3f} kWh, capital cost ${:.2f}\n", p.total_capacity_kwh(), p.objective);
  return 0;
}

int cmd_validate(const Common& c) {
  const PvmConfig cfg = prepare(c);
  const BessPlan p = plan_from(c);
  const Network net = load_network_file(cfg.network);
  const Demand d = build_demand(cfg, net);
  const ValidationVerdict v =
      validate_plan(net, d.profiles, p, cfg.bess, effective_limits(cfg, net), cfg.solver, cfg.threads);
  put(cfg, "verdicts.csv", format_verdicts({v}));
  put(cfg, "residuals.csv", format_residuals({v}));
  fmt::print("{}\n", v.pass ? "pass" : "fail");
  return v.pass ? 0 : 1;
}

int cmd_economics(const Common& c) {
  const PvmConfig cfg = prepare(c);
  if (cfg.tariff.empty()) throw InputError("economics needs a tariff in the config");
  const BessPlan p = plan_from(c);
  const Network net = load_network_file(cfg.network);
  const Demand d = build_demand(cfg, net);
  const TouTariff tariff = read_tariff(read_text_file(cfg.tariff), d.profiles.start(), d.profiles.hours());
  const std::string label = fmt::format("EV {:g}% growth {:g}", cfg.penetration * 100.0, cfg.growth);
  const EconomicsRow row = plan_economics(label, net, d.profiles, p, cfg.bess, tariff, cfg.solver, cfg.threads);
  put(cfg, "economics_cost.csv", format_cost_table({row}));
  put(cfg, "economics_losses.csv", format_loss_table({row}));
  return 0;
}

int cmd_run(const Common& c) {
  const PvmConfig cfg = prepare(c);
  const PvmReport r = run_pvm(cfg);
  emit_reports(r, cfg.output_dir);
  fmt::print("{}", format_summary(r));
  return exit_code(r.outcome);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"voltage violation screening and storage planning"};
  app.require_subcommand(1);
  Common common;
  int (*chosen)(const Common&) = nullptr;

  auto add = [&](const char* name, const char* help, int (*fn)(const Common&), bool needs_plan) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", common.config, "config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "master seed (overrides the config)");
    sub->add_option("--out", common.out, "output directory (overrides the config)");
    sub->add_option("--threads", common.threads, "worker threads, 0 = all cores");
    if (needs_plan) sub->add_option("--plan", common.plan, "plan file")->required()->check(CLI::ExistingFile);
    sub->callback([&chosen, fn] { chosen = fn; });
  };
  add("scenarios", "generate charging scenarios and the overlaid demand", cmd_scenarios, false);
  add("vva", "screen the horizon for voltage violations", cmd_vva, false);
  add("stat", "rank critical windows and select candidate buses", cmd_stat, false);
  add("plan", "size and place storage on the worst window", cmd_plan, false);
  add("validate", "check a plan over the whole horizon", cmd_validate, true);
  add("economics", "TOU cost and losses with and without a plan", cmd_economics, true);
  add("run", "full flow with backtracking and reports", cmd_run, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    return chosen(common);
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return 3;
  }
}
