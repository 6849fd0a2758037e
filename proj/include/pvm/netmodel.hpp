#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pvm/common.hpp"

namespace pvm {

using BusId = int;

enum class BusKind { Slack, Load };

struct Bus {
  BusId id = 0;
  BusKind kind = BusKind::Load;
  double p_base_kw = 0.0;
  double q_base_kvar = 0.0;
};

/// Impedances are per-unit on the network base. After a Network is built,
/// `from` is always the upstream end (towards the slack bus).
struct Branch {
  BusId from = 0;
  BusId to = 0;
  double r = 0.0;
  double x = 0.0;
  std::optional<double> i_sq_limit;
};

struct VoltageLimits {
  double lower = 0.95;
  double upper = 1.05;
};

/// Slack voltage magnitude V_s (p.u.): a constant, optionally overridden per
/// horizon hour.
struct SlackVoltage {
  double constant = 1.0;
  std::vector<double> hourly;

  double at(std::size_t hour) const { return hour < hourly.size() ? hourly[hour] : constant; }
};

enum class NetworkDefect {
  Schema,
  MissingSlack,
  MultipleSlack,
  DuplicateBus,
  DuplicateBranch,
  UnknownBus,
  SelfLoop,
  NegativeImpedance,
  NonRadial,
  Disconnected,
  InvalidLimits,
};

std::string_view to_string(NetworkDefect defect);

/// Rejection raised while building a Network; `defect()` names the reason.
class NetworkError : public InputError {
 public:
  NetworkError(NetworkDefect defect, const std::string& detail);
  NetworkDefect defect() const { return defect_; }

 private:
  NetworkDefect defect_;
};

/// Radial feeder rooted at its slack bus. Immutable once constructed.
class Network {
 public:
  Network(std::vector<Bus> buses, std::vector<Branch> branches, double s_base_mva, double v_base_kv,
          VoltageLimits limits = {}, SlackVoltage slack = {});

  const std::vector<Bus>& buses() const { return buses_; }
  /// Branches oriented upstream -> downstream.
  const std::vector<Branch>& branches() const { return branches_; }
  std::size_t bus_count() const { return buses_.size(); }
  std::size_t branch_count() const { return branches_.size(); }

  std::size_t slack_index() const { return slack_; }
  BusId slack_id() const { return buses_[slack_].id; }
  bool has_bus(BusId id) const { return index_.contains(id); }
  std::size_t index_of(BusId id) const;

  /// Upstream set U(i): holds the single parent of a non-slack bus, empty for the slack.
  std::optional<std::size_t> parent(std::size_t bus) const { return parent_[bus]; }
  /// Branch feeding `bus` from its parent.
  std::optional<std::size_t> parent_branch(std::size_t bus) const { return parent_branch_[bus]; }
  /// Downstream set D(i) as bus indices.
  const std::vector<std::size_t>& children(std::size_t bus) const { return children_[bus]; }
  /// Branch indices leaving `bus` downstream.
  const std::vector<std::size_t>& child_branches(std::size_t bus) const { return child_branches_[bus]; }
  std::size_t branch_from(std::size_t branch) const { return branch_from_[branch]; }
  std::size_t branch_to(std::size_t branch) const { return branch_to_[branch]; }
  std::size_t depth(std::size_t bus) const { return depth_[bus]; }
  std::size_t degree(std::size_t bus) const;
  bool adjacent(std::size_t a, std::size_t b) const;

  double s_base_mva() const { return s_base_mva_; }
  double s_base_kw() const { return s_base_mva_ * 1000.0; }
  double v_base_kv() const { return v_base_kv_; }
  const VoltageLimits& limits() const { return limits_; }
  const SlackVoltage& slack_voltage() const { return slack_v_; }

  Network with_limits(VoltageLimits limits) const;
  Network with_slack_voltage(SlackVoltage slack) const;

 private:
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  double s_base_mva_;
  double v_base_kv_;
  VoltageLimits limits_;
  SlackVoltage slack_v_;

  std::size_t slack_ = 0;
  std::map<BusId, std::size_t> index_;
  std::vector<std::optional<std::size_t>> parent_;
  std::vector<std::optional<std::size_t>> parent_branch_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::vector<std::size_t>> child_branches_;
  std::vector<std::size_t> branch_from_;
  std::vector<std::size_t> branch_to_;
  std::vector<std::size_t> depth_;
};

/// Parses the JSON network document. Ohmic impedances and ampere limits are
/// converted to per-unit on the document's bases.
Network load_network(const std::string& document);
Network load_network_file(const std::string& path);

/// |sum of (r + jx)| along the unique path between two buses (p.u.).
double electrical_distance(const Network& net, BusId a, BusId b);
double electrical_distance_by_index(const Network& net, std::size_t a, std::size_t b);

/// Non-slack buses of degree one.
std::vector<BusId> leaf_buses(const Network& net);

/// Hourly demand per bus over a contiguous horizon. kW / kvar.
class LoadProfileSet {
 public:
  LoadProfileSet() = default;
  LoadProfileSet(Timestamp start, std::size_t hours);

  Timestamp start() const { return start_; }
  std::size_t hours() const { return hours_; }
  Timestamp timestamp(std::size_t t) const { return start_ + static_cast<std::int64_t>(t); }

  void set(BusId bus, std::vector<double> p_kw, std::vector<double> q_kvar);
  bool has(BusId bus) const { return p_.contains(bus); }
  const std::vector<double>& p_kw(BusId bus) const;
  const std::vector<double>& q_kvar(BusId bus) const;
  double p_at(BusId bus, std::size_t t) const;
  double q_at(BusId bus, std::size_t t) const;
  std::vector<BusId> bus_ids() const;

  void add_p(BusId bus, const std::vector<double>& extra_kw);

  /// Throws InputError unless every non-slack bus of `net` has a full series.
  void check_covers(const Network& net) const;

  /// Sub-horizon [first, first + count).
  LoadProfileSet slice(std::size_t first, std::size_t count) const;

 private:
  Timestamp start_{};
  std::size_t hours_ = 0;
  std::map<BusId, std::vector<double>> p_;
  std::map<BusId, std::vector<double>> q_;
};

LoadProfileSet scale_profiles(const LoadProfileSet& profiles, double growth);

/// Rows: timestamp,bus_id,p_kw,q_kvar (header line required). Rows may come in
/// any order; each bus must cover the same strictly hourly horizon.
LoadProfileSet read_profiles_csv(const std::string& text);
LoadProfileSet load_profiles_file(const std::string& path);
std::string write_profiles_csv(const LoadProfileSet& profiles);

/// Residential base-load shape applied to each bus's nominal demand:
/// diurnal pattern with an evening peak, seasonal amplitude with a summer
/// maximum, and seeded multiplicative noise. Peak factor is `peak_fraction`.
struct BaseLoadShape {
  int year = 2023;
  std::size_t days = 365;
  double peak_fraction = 0.85;
  double noise = 0.03;
  std::uint64_t seed = 7;
};

LoadProfileSet synthesize_base_profiles(const Network& net, const BaseLoadShape& shape);

}  // namespace pvm
