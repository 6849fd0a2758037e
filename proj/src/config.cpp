#include <algorithm>
#include <filesystem>
#include <functional>
#include <set>

#include <fmt/format.h>

#include "pvm/pipeline.hpp"

namespace pvm {

namespace {

namespace fs = std::filesystem;

struct Field {
  const char* key;
  std::function<void(PvmConfig&, const std::string&)> set;
  std::function<std::string(const PvmConfig&)> get;
};

std::string num(double v) { return fmt::format("{}", v); }

template <class T>
T parse_count(const std::string& s, const char* key) {
  const long long v = parse_int(s, key);
  if (v < 0) throw InputError(fmt::format("{} must be non-negative", key));
  return static_cast<T>(v);
}

// Helpers keep the table below one line per key.
#define PVM_DOUBLE(name, member) \
  Field { name, [](PvmConfig& c, const std::string& s) { c.member = parse_double(s, name); }, \
          [](const PvmConfig& c) { return num(c.member); } }
#define PVM_COUNT(name, member, T) \
  Field { name, [](PvmConfig& c, const std::string& s) { c.member = parse_count<T>(s, name); }, \
          [](const PvmConfig& c) { return fmt::format("{}", c.member); } }
#define PVM_INT(name, member) \
  Field { name, [](PvmConfig& c, const std::string& s) { c.member = static_cast<int>(parse_int(s, name)); }, \
          [](const PvmConfig& c) { return fmt::format("{}", c.member); } }
#define PVM_TEXT(name, member) \
  Field { name, [](PvmConfig& c, const std::string& s) { c.member = s; }, \
          [](const PvmConfig& c) { return c.member; } }
#define PVM_OPT_DOUBLE(name, member) \
  Field { name, [](PvmConfig& c, const std::string& s) { \
           if (s.empty()) c.member.reset(); else c.member = parse_double(s, name); }, \
          [](const PvmConfig& c) { return c.member ? num(*c.member) : std::string(); } }

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      PVM_TEXT("network", network),
      PVM_TEXT("base_profiles", base_profiles),
      PVM_INT("base.year", base.year),
      PVM_COUNT("base.days", base.days, std::size_t),
      PVM_DOUBLE("base.peak_fraction", base.peak_fraction),
      PVM_DOUBLE("base.noise", base.noise),
      PVM_TEXT("scenarios", scenarios),
      PVM_COUNT("households.ev_homes", households.ev_homes, std::size_t),
      PVM_COUNT("households.base_homes", households.base_homes, std::size_t),
      PVM_DOUBLE("households.base_kw", households.base_kw),
      PVM_DOUBLE("households.home_spread", households.home_spread),
      PVM_DOUBLE("households.noise", households.noise),
      PVM_DOUBLE("households.event_rate", households.event_rate),
      PVM_DOUBLE("households.energy_mode_kwh", households.energy_mode_kwh),
      PVM_DOUBLE("households.energy_sigma", households.energy_sigma),
      PVM_DOUBLE("households.energy_cap_kwh", households.energy_cap_kwh),
      PVM_COUNT("n_scenarios", n_scenarios, std::size_t),
      PVM_DOUBLE("daily_prob", daily_prob),
      PVM_DOUBLE("penetration", penetration),
      PVM_DOUBLE("growth", growth),
      PVM_COUNT("seed", seed, std::uint64_t),
      PVM_OPT_DOUBLE("v_lower", v_lower),
      PVM_OPT_DOUBLE("v_upper", v_upper),
      Field{"stat.weights",
            [](PvmConfig& c, const std::string& s) {
              const auto parts = split(s, ',');
              if (parts.size() != 4) throw InputError("stat.weights needs four comma-separated values");
              for (std::size_t i = 0; i < 4; ++i) c.stat.weights.w[i] = parse_double(trim(parts[i]), "stat.weights");
            },
            [](const PvmConfig& c) {
              const auto& w = c.stat.weights.w;
              return fmt::format("{},{},{},{}", w[0], w[1], w[2], w[3]);
            }},
      PVM_COUNT("stat.window_days", stat.window_days, std::size_t),
      PVM_DOUBLE("stat.alpha_eol", stat.alpha_eol),
      PVM_INT("stat.n_max_top", stat.n_max_top),
      PVM_INT("stat.n_min_bottom", stat.n_min_bottom),
      PVM_INT("stat.k_max", stat.k_max),
      PVM_OPT_DOUBLE("stat.distance_threshold", stat.distance_threshold),
      Field{"stat.target_count",
            [](PvmConfig& c, const std::string& s) {
              if (s.empty()) c.stat.target_count.reset();
              else c.stat.target_count = parse_count<std::size_t>(s, "stat.target_count");
            },
            [](const PvmConfig& c) {
              return c.stat.target_count ? fmt::format("{}", *c.stat.target_count) : std::string();
            }},
      PVM_DOUBLE("bess.e_min_kwh", bess.e_min_kwh),
      PVM_DOUBLE("bess.e_max_kwh", bess.e_max_kwh),
      PVM_DOUBLE("bess.soc_min", bess.soc_min),
      PVM_DOUBLE("bess.soc_max", bess.soc_max),
      PVM_DOUBLE("bess.soc_initial", bess.soc_initial),
      PVM_DOUBLE("bess.eta_ch", bess.eta_ch),
      PVM_DOUBLE("bess.eta_dis", bess.eta_dis),
      PVM_DOUBLE("bess.c_ch", bess.c_ch),
      PVM_DOUBLE("bess.c_dis", bess.c_dis),
      PVM_DOUBLE("bess.k_q_inj", bess.k_q_inj),
      PVM_DOUBLE("bess.k_q_abs", bess.k_q_abs),
      PVM_DOUBLE("bess.c_cap", bess.c_cap),
      PVM_DOUBLE("solver.feasibility_tolerance", solver.feasibility_tolerance),
      PVM_DOUBLE("solver.cone_tolerance", solver.cone_tolerance),
      PVM_DOUBLE("solver.mip_gap", solver.mip_gap),
      PVM_DOUBLE("solver.absolute_mip_gap", solver.absolute_mip_gap),
      PVM_COUNT("solver.node_limit", solver.node_limit, std::size_t),
      PVM_DOUBLE("solver.time_limit_s", solver.time_limit_s),
      PVM_INT("solver.max_iterations", solver.max_iterations),
      PVM_DOUBLE("solver.residual_tolerance", solver.residual_tolerance),
      PVM_DOUBLE("solver.integrality_tolerance", solver.integrality_tolerance),
      PVM_TEXT("tariff", tariff),
      PVM_TEXT("output_dir", output_dir),
      PVM_COUNT("max_rounds", max_rounds, std::size_t),
      PVM_COUNT("threads", threads, unsigned),
  };
  return table;
}

#undef PVM_DOUBLE
#undef PVM_COUNT
#undef PVM_INT
#undef PVM_TEXT
#undef PVM_OPT_DOUBLE

void need_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw InputError(fmt::format("{} file not found: '{}'", what, path));
}

}  // namespace

PvmConfig parse_config(const std::string& text, const std::string& base_dir) {
  PvmConfig cfg;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(fmt::format("config line {}: expected key = value", line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return key == f.key; });
    if (it == table.end()) throw InputError(fmt::format("config line {}: unknown key '{}'", line_no, key));
    if (!seen.insert(key).second) throw InputError(fmt::format("config line {}: '{}' given twice", line_no, key));
    it->set(cfg, value);
  }
  if (!base_dir.empty()) {
    for (std::string* p : {&cfg.network, &cfg.base_profiles, &cfg.scenarios, &cfg.tariff})
      if (!p->empty() && fs::path(*p).is_relative()) *p = (fs::path(base_dir) / *p).lexically_normal().string();
  }
  return cfg;
}

PvmConfig load_config(const std::string& path) {
  return parse_config(read_text_file(path), fs::path(path).parent_path().string());
}

std::string write_config(const PvmConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) out += fmt::format("{} = {}\n", f.key, f.get(cfg));
  return out;
}

void PvmConfig::validate() const {
  if (network.empty()) throw InputError("config: network is required");
  need_file(network, "network");
  if (!base_profiles.empty()) need_file(base_profiles, "base profile");
  if (!scenarios.empty()) need_file(scenarios, "scenario");
  if (!tariff.empty()) need_file(tariff, "tariff");
  if (base.days == 0) throw InputError("config: base.days must be positive");
  if (!(base.peak_fraction > 0.0) || !(base.noise >= 0.0)) throw InputError("config: bad base load shape");
  if (households.ev_homes == 0) throw InputError("config: households.ev_homes must be positive");
  if (!(households.event_rate > 0.0 && households.event_rate <= 1.0))
    throw InputError("config: households.event_rate must lie in (0, 1]");
  if (n_scenarios == 0) throw InputError("config: n_scenarios must be positive");
  if (!(daily_prob >= 0.0 && daily_prob <= 1.0)) throw InputError("config: daily_prob must lie in [0, 1]");
  if (!(penetration >= 0.0 && penetration <= 1.0)) throw InputError("config: penetration must lie in [0, 1]");
  if (!(growth > 0.0)) throw InputError("config: growth must be positive");
  if ((v_lower && !(*v_lower > 0.0)) || (v_upper && !(*v_upper > 0.0)))
    throw InputError("config: voltage limits must be positive");
  if (v_lower && v_upper && !(*v_lower < *v_upper)) throw InputError("config: need v_lower < v_upper");
  if (max_rounds == 0) throw InputError("config: max_rounds must be positive");
  stat.validate();
  bess.validate();
  solver.validate();
}

}  // namespace pvm
