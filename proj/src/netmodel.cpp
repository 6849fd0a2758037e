#include "pvm/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace pvm {

std::string_view to_string(NetworkDefect defect) {
  switch (defect) {
    case NetworkDefect::Schema: return "schema";
    case NetworkDefect::MissingSlack: return "missing-slack";
    case NetworkDefect::MultipleSlack: return "multiple-slack";
    case NetworkDefect::DuplicateBus: return "duplicate-bus";
    case NetworkDefect::DuplicateBranch: return "duplicate-branch";
    case NetworkDefect::UnknownBus: return "unknown-bus";
    case NetworkDefect::SelfLoop: return "self-loop";
    case NetworkDefect::NegativeImpedance: return "negative-impedance";
    case NetworkDefect::NonRadial: return "non-radial";
    case NetworkDefect::Disconnected: return "disconnected";
    case NetworkDefect::InvalidLimits: return "invalid-limits";
  }
  return "unknown";
}

NetworkError::NetworkError(NetworkDefect defect, const std::string& detail)
    : InputError(fmt::format("network rejected ({}): {}", to_string(defect), detail)), defect_(defect) {}

Network::Network(std::vector<Bus> buses, std::vector<Branch> branches, double s_base_mva, double v_base_kv,
                 VoltageLimits limits, SlackVoltage slack)
    : buses_(std::move(buses)),
      s_base_mva_(s_base_mva),
      v_base_kv_(v_base_kv),
      limits_(limits),
      slack_v_(std::move(slack)) {
  if (!(s_base_mva_ > 0.0) || !(v_base_kv_ > 0.0))
    throw NetworkError(NetworkDefect::Schema, "bases must be positive");
  if (!(limits_.lower > 0.0) || !(limits_.lower < limits_.upper))
    throw NetworkError(NetworkDefect::InvalidLimits,
                       fmt::format("need 0 < v_lower < v_upper, got {} / {}", limits_.lower, limits_.upper));
  if (!(slack_v_.constant > 0.0)) throw NetworkError(NetworkDefect::InvalidLimits, "slack voltage must be positive");
  for (double v : slack_v_.hourly)
    if (!(v > 0.0)) throw NetworkError(NetworkDefect::InvalidLimits, "slack voltage schedule must be positive");

  std::optional<std::size_t> slack_idx;
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    if (!index_.emplace(buses_[i].id, i).second)
      throw NetworkError(NetworkDefect::DuplicateBus, fmt::format("bus id {} appears twice", buses_[i].id));
    if (buses_[i].kind == BusKind::Slack) {
      if (slack_idx) throw NetworkError(NetworkDefect::MultipleSlack, "more than one slack bus");
      slack_idx = i;
    }
  }
  if (!slack_idx) throw NetworkError(NetworkDefect::MissingSlack, "no slack bus declared");
  slack_ = *slack_idx;

  const std::size_t n = buses_.size();
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency(n);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const Branch& br = branches[k];
    const auto a = index_.find(br.from);
    const auto b = index_.find(br.to);
    if (a == index_.end() || b == index_.end())
      throw NetworkError(NetworkDefect::UnknownBus, fmt::format("branch {}-{} references an unknown bus", br.from, br.to));
    if (a->second == b->second) throw NetworkError(NetworkDefect::SelfLoop, fmt::format("branch {}-{}", br.from, br.to));
    if (br.r < 0.0 || br.x < 0.0 || !std::isfinite(br.r) || !std::isfinite(br.x))
      throw NetworkError(NetworkDefect::NegativeImpedance, fmt::format("branch {}-{}", br.from, br.to));
    if (br.i_sq_limit && !(*br.i_sq_limit > 0.0))
      throw NetworkError(NetworkDefect::Schema, fmt::format("branch {}-{} has a non-positive current limit", br.from, br.to));
    const auto key = std::minmax(a->second, b->second);
    if (!seen.insert(key).second)
      throw NetworkError(NetworkDefect::DuplicateBranch, fmt::format("branch {}-{} appears twice", br.from, br.to));
    adjacency[a->second].emplace_back(b->second, k);
    adjacency[b->second].emplace_back(a->second, k);
  }
  if (branches.size() != n - 1) {
    // Too many branches means a cycle exists somewhere; too few means some bus is cut off.
    if (branches.size() >= n)
      throw NetworkError(NetworkDefect::NonRadial,
                         fmt::format("{} branches for {} buses; a radial feeder has exactly {}", branches.size(), n, n - 1));
  }

  parent_.assign(n, std::nullopt);
  parent_branch_.assign(n, std::nullopt);
  children_.assign(n, {});
  child_branches_.assign(n, {});
  depth_.assign(n, 0);
  branches_.resize(branches.size());
  branch_from_.assign(branches.size(), 0);
  branch_to_.assign(branches.size(), 0);

  std::vector<bool> visited(n, false);
  std::vector<std::size_t> order{slack_};
  visited[slack_] = true;
  for (std::size_t head = 0; head < order.size(); ++head) {
    const std::size_t u = order[head];
    for (const auto& [v, k] : adjacency[u]) {
      if (parent_branch_[u] && *parent_branch_[u] == k) continue;
      if (visited[v])
        throw NetworkError(NetworkDefect::NonRadial, fmt::format("loop closes at bus {}", buses_[v].id));
      visited[v] = true;
      parent_[v] = u;
      parent_branch_[v] = k;
      depth_[v] = depth_[u] + 1;
      children_[u].push_back(v);
      child_branches_[u].push_back(k);
      Branch oriented = branches[k];
      oriented.from = buses_[u].id;
      oriented.to = buses_[v].id;
      branches_[k] = oriented;
      branch_from_[k] = u;
      branch_to_[k] = v;
      order.push_back(v);
    }
  }
  if (order.size() != n) {
    for (std::size_t i = 0; i < n; ++i)
      if (!visited[i])
        throw NetworkError(NetworkDefect::Disconnected, fmt::format("bus {} is not reachable from the slack", buses_[i].id));
  }
}

std::size_t Network::index_of(BusId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw InputError(fmt::format("unknown bus id {}", id));
  return it->second;
}

std::size_t Network::degree(std::size_t bus) const { return children_[bus].size() + (parent_[bus] ? 1 : 0); }

bool Network::adjacent(std::size_t a, std::size_t b) const {
  return (parent_[a] && *parent_[a] == b) || (parent_[b] && *parent_[b] == a);
}

Network Network::with_limits(VoltageLimits limits) const {
  return Network(buses_, branches_, s_base_mva_, v_base_kv_, limits, slack_v_);
}

Network Network::with_slack_voltage(SlackVoltage slack) const {
  return Network(buses_, branches_, s_base_mva_, v_base_kv_, limits_, std::move(slack));
}

namespace {

using nlohmann::json;

double require_number(const json& obj, const char* key, const char* where) {
  if (!obj.contains(key) || !obj.at(key).is_number())
    throw NetworkError(NetworkDefect::Schema, fmt::format("{} needs numeric '{}'", where, key));
  return obj.at(key).get<double>();
}

}  // namespace

Network load_network(const std::string& document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw NetworkError(NetworkDefect::Schema, e.what());
  }
  if (!doc.is_object() || !doc.contains("buses") || !doc.contains("branches") || !doc.contains("bases"))
    throw NetworkError(NetworkDefect::Schema, "document needs 'buses', 'branches' and 'bases'");

  const json& bases = doc.at("bases");
  const double s_mva = require_number(bases, "s_mva", "bases");
  const double v_kv = require_number(bases, "v_kv", "bases");
  if (!(s_mva > 0.0) || !(v_kv > 0.0)) throw NetworkError(NetworkDefect::Schema, "bases must be positive");
  const double z_base = v_kv * v_kv / s_mva;
  const double i_base_a = s_mva * 1e6 / (std::sqrt(3.0) * v_kv * 1e3);

  std::vector<Bus> buses;
  for (const json& b : doc.at("buses")) {
    Bus bus;
    if (!b.contains("id") || !b.at("id").is_number_integer())
      throw NetworkError(NetworkDefect::Schema, "bus needs integer 'id'");
    bus.id = b.at("id").get<int>();
    const std::string kind = b.value("kind", "load");
    if (kind == "slack") {
      bus.kind = BusKind::Slack;
    } else if (kind == "load") {
      bus.kind = BusKind::Load;
    } else {
      throw NetworkError(NetworkDefect::Schema, fmt::format("bus {} has unknown kind '{}'", bus.id, kind));
    }
    bus.p_base_kw = b.value("p_base_kw", 0.0);
    bus.q_base_kvar = b.value("q_base_kvar", 0.0);
    buses.push_back(bus);
  }

  std::vector<Branch> branches;
  for (const json& e : doc.at("branches")) {
    Branch br;
    br.from = static_cast<BusId>(require_number(e, "from", "branch"));
    br.to = static_cast<BusId>(require_number(e, "to", "branch"));
    if (e.contains("r_pu")) {
      br.r = require_number(e, "r_pu", "branch");
    } else {
      br.r = require_number(e, "r_ohm", "branch") / z_base;
    }
    if (e.contains("x_pu")) {
      br.x = require_number(e, "x_pu", "branch");
    } else {
      br.x = require_number(e, "x_ohm", "branch") / z_base;
    }
    if (e.contains("i_limit_a")) {
      const double i_pu = require_number(e, "i_limit_a", "branch") / i_base_a;
      br.i_sq_limit = i_pu * i_pu;
    }
    branches.push_back(br);
  }

  VoltageLimits limits;
  if (doc.contains("limits")) {
    const json& l = doc.at("limits");
    limits.lower = l.value("v_lower_pu", limits.lower);
    limits.upper = l.value("v_upper_pu", limits.upper);
  }
  SlackVoltage slack;
  if (doc.contains("slack_voltage_pu")) {
    const json& s = doc.at("slack_voltage_pu");
    if (s.is_number()) {
      slack.constant = s.get<double>();
    } else if (s.is_array()) {
      slack.hourly = s.get<std::vector<double>>();
    } else {
      throw NetworkError(NetworkDefect::Schema, "slack_voltage_pu must be a number or an array");
    }
  }
  return Network(std::move(buses), std::move(branches), s_mva, v_kv, limits, std::move(slack));
}

Network load_network_file(const std::string& path) { return load_network(read_text_file(path)); }

double electrical_distance_by_index(const Network& net, std::size_t a, std::size_t b) {
  std::complex<double> z{0.0, 0.0};
  while (a != b) {
    std::size_t& deeper = net.depth(a) >= net.depth(b) ? a : b;
    const std::size_t k = *net.parent_branch(deeper);
    z += std::complex<double>(net.branches()[k].r, net.branches()[k].x);
    deeper = *net.parent(deeper);
  }
  return std::abs(z);
}

double electrical_distance(const Network& net, BusId a, BusId b) {
  return electrical_distance_by_index(net, net.index_of(a), net.index_of(b));
}

std::vector<BusId> leaf_buses(const Network& net) {
  std::vector<BusId> out;
  for (std::size_t i = 0; i < net.bus_count(); ++i)
    if (i != net.slack_index() && net.degree(i) == 1) out.push_back(net.buses()[i].id);
  std::sort(out.begin(), out.end());
  return out;
}

LoadProfileSet::LoadProfileSet(Timestamp start, std::size_t hours) : start_(start), hours_(hours) {}

void LoadProfileSet::set(BusId bus, std::vector<double> p_kw, std::vector<double> q_kvar) {
  if (p_kw.size() != hours_ || q_kvar.size() != hours_)
    throw InputError(fmt::format("profile for bus {} has {} / {} entries, horizon is {} h", bus, p_kw.size(),
                                 q_kvar.size(), hours_));
  p_[bus] = std::move(p_kw);
  q_[bus] = std::move(q_kvar);
}

const std::vector<double>& LoadProfileSet::p_kw(BusId bus) const {
  const auto it = p_.find(bus);
  if (it == p_.end()) throw InputError(fmt::format("no profile for bus {}", bus));
  return it->second;
}

const std::vector<double>& LoadProfileSet::q_kvar(BusId bus) const {
  const auto it = q_.find(bus);
  if (it == q_.end()) throw InputError(fmt::format("no profile for bus {}", bus));
  return it->second;
}

double LoadProfileSet::p_at(BusId bus, std::size_t t) const {
  const auto it = p_.find(bus);
  return it == p_.end() ? 0.0 : it->second.at(t);
}

double LoadProfileSet::q_at(BusId bus, std::size_t t) const {
  const auto it = q_.find(bus);
  return it == q_.end() ? 0.0 : it->second.at(t);
}

std::vector<BusId> LoadProfileSet::bus_ids() const {
  std::vector<BusId> ids;
  for (const auto& [id, _] : p_) ids.push_back(id);
  return ids;
}

void LoadProfileSet::add_p(BusId bus, const std::vector<double>& extra_kw) {
  auto it = p_.find(bus);
  if (it == p_.end()) throw InputError(fmt::format("no profile for bus {}", bus));
  if (extra_kw.size() != hours_) throw InputError("overlay length does not match horizon");
  for (std::size_t t = 0; t < hours_; ++t) it->second[t] += extra_kw[t];
}

void LoadProfileSet::check_covers(const Network& net) const {
  for (const Bus& b : net.buses()) {
    if (b.kind == BusKind::Slack) continue;
    if (!has(b.id)) throw InputError(fmt::format("profiles miss bus {}", b.id));
  }
}

LoadProfileSet LoadProfileSet::slice(std::size_t first, std::size_t count) const {
  if (first + count > hours_) throw InputError("profile slice outside horizon");
  LoadProfileSet out(timestamp(first), count);
  for (const auto& [id, p] : p_) {
    const auto& q = q_.at(id);
    out.set(id, std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(first),
                                    p.begin() + static_cast<std::ptrdiff_t>(first + count)),
            std::vector<double>(q.begin() + static_cast<std::ptrdiff_t>(first),
                                q.begin() + static_cast<std::ptrdiff_t>(first + count)));
  }
  return out;
}

LoadProfileSet scale_profiles(const LoadProfileSet& profiles, double growth) {
  if (!(growth > 0.0)) throw InputError(fmt::format("growth factor must be positive, got {}", growth));
  LoadProfileSet out(profiles.start(), profiles.hours());
  for (BusId id : profiles.bus_ids()) {
    std::vector<double> p = profiles.p_kw(id);
    std::vector<double> q = profiles.q_kvar(id);
    for (double& v : p) v *= growth;
    for (double& v : q) v *= growth;
    out.set(id, std::move(p), std::move(q));
  }
  return out;
}

LoadProfileSet read_profiles_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("profile file is empty");
  struct Row {
    Timestamp ts;
    double p;
    double q;
  };
  std::map<BusId, std::vector<Row>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 4) throw InputError(fmt::format("profile line {}: expected 4 columns", line_no));
    rows[static_cast<BusId>(parse_int(cells[1], "bus_id"))].push_back(
        Row{parse_timestamp(cells[0]), parse_double(cells[2], "p_kw"), parse_double(cells[3], "q_kvar")});
  }
  if (rows.empty()) throw InputError("profile file has no data rows");
  std::optional<Timestamp> start;
  std::size_t hours = 0;
  for (auto& [id, series] : rows) {
    std::stable_sort(series.begin(), series.end(), [](const Row& a, const Row& b) { return a.ts < b.ts; });
    for (std::size_t t = 1; t < series.size(); ++t)
      if (series[t].ts.hours != series[t - 1].ts.hours + 1)
        throw InputError(fmt::format("bus {}: timestamps must be strictly increasing with hourly spacing (at {})", id,
                                     to_string(series[t].ts)));
    if (!start) {
      start = series.front().ts;
      hours = series.size();
    } else if (series.front().ts != *start || series.size() != hours) {
      throw InputError(fmt::format("bus {} covers a different horizon than the other buses", id));
    }
  }
  LoadProfileSet out(*start, hours);
  for (auto& [id, series] : rows) {
    std::vector<double> p(hours), q(hours);
    for (std::size_t t = 0; t < hours; ++t) {
      p[t] = series[t].p;
      q[t] = series[t].q;
    }
    out.set(id, std::move(p), std::move(q));
  }
  return out;
}

LoadProfileSet load_profiles_file(const std::string& path) { return read_profiles_csv(read_text_file(path)); }

std::string write_profiles_csv(const LoadProfileSet& profiles) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "timestamp,bus_id,p_kw,q_kvar\n");
  for (std::size_t t = 0; t < profiles.hours(); ++t) {
    const std::string ts = to_string(profiles.timestamp(t));
    for (BusId id : profiles.bus_ids())
      fmt::format_to(std::back_inserter(buf), "{},{},{:.6f},{:.6f}\n", ts, id, profiles.p_kw(id)[t],
                     profiles.q_kvar(id)[t]);
  }
  return fmt::to_string(buf);
}

namespace {

double diurnal_factor(double hour) {
  auto bump = [](double h, double centre, double width) {
    double d = std::fabs(h - centre);
    d = std::min(d, 24.0 - d);
    return std::exp(-(d * d) / (2.0 * width * width));
  };
  return 0.50 + 0.18 * bump(hour, 8.0, 1.5) + 0.50 * bump(hour, 19.5, 2.5) - 0.12 * bump(hour, 4.0, 2.0);
}

double seasonal_factor(double day_of_year) {
  const double summer = std::exp(-std::pow((day_of_year - 196.0) / 40.0, 2));
  const double winter = std::exp(-std::pow(std::min(day_of_year, 365.0 - day_of_year) / 30.0, 2));
  return 0.78 + 0.22 * summer + 0.06 * winter;
}

}  // namespace

LoadProfileSet synthesize_base_profiles(const Network& net, const BaseLoadShape& shape) {
  const std::size_t hours = shape.days * 24;
  LoadProfileSet out(make_timestamp(shape.year, 1, 1, 0), hours);
  double peak_shape = 0.0;
  for (int h = 0; h < 24; ++h) peak_shape = std::max(peak_shape, diurnal_factor(h));
  peak_shape *= 1.06;

  std::mt19937_64 weather_rng(derive_seed(shape.seed, 0));
  std::normal_distribution<double> weather(0.0, 0.04);
  std::vector<double> day_factor(shape.days);
  for (double& f : day_factor) f = 1.0 + weather(weather_rng);

  for (const Bus& bus : net.buses()) {
    if (bus.kind == BusKind::Slack && bus.p_base_kw == 0.0 && bus.q_base_kvar == 0.0) continue;
    std::mt19937_64 rng(derive_seed(shape.seed, static_cast<std::uint64_t>(bus.id) + 1));
    std::normal_distribution<double> noise(0.0, shape.noise);
    std::vector<double> p(hours), q(hours);
    for (std::size_t t = 0; t < hours; ++t) {
      const double hour = static_cast<double>(t % 24);
      const double day = static_cast<double>(t / 24);
      const double f = shape.peak_fraction * diurnal_factor(hour) / peak_shape * seasonal_factor(day) *
                       day_factor[t / 24] * std::max(0.0, 1.0 + noise(rng));
      p[t] = bus.p_base_kw * f;
      q[t] = bus.q_base_kvar * f;
    }
    out.set(bus.id, std::move(p), std::move(q));
  }
  return out;
}

}  // namespace pvm
