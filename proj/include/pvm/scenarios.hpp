#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pvm/kde.hpp"
#include "pvm/netmodel.hpp"

namespace pvm {

enum class EventClass { Low, Normal, High };

std::string_view to_string(EventClass c);

inline constexpr double kLowPowerKw = 4.0;
inline constexpr double kHighPowerKw = 7.2;

/// low below 4 kW, high above 7.2 kW, normal otherwise.
EventClass classify(double p_avg_kw);

struct ChargingEvent {
  /// Absolute start for detected events. Sampled events only carry the hour
  /// of day (day 0 of the epoch).
  Timestamp start{};
  double duration_h = 0.0;
  double energy_kwh = 0.0;
  double p_avg_kw = 0.0;
  EventClass cls = EventClass::Normal;
};

// ---- synthetic smart-meter data -------------------------------------------

struct HouseholdParams {
  std::size_t ev_homes = 20;
  std::size_t base_homes = 20;
  int year = 2023;
  std::size_t days = 365;
  /// mean household demand (kW) and its spread across homes
  double base_kw = 0.9;
  double home_spread = 0.2;
  /// multiplicative hourly noise (standard deviation)
  double noise = 0.03;
  /// probability that an EV home charges on a given day
  double event_rate = 0.7;
  /// lognormal energy with this mode (kWh), capped at `energy_cap_kwh`
  double energy_mode_kwh = 10.0;
  double energy_sigma = 0.45;
  double energy_cap_kwh = 60.0;
};

struct HouseholdData {
  Timestamp start{};
  /// [home][hour] kW of homes without a charger
  std::vector<std::vector<double>> baseline_homes;
  /// [home][hour] household part of the EV homes
  std::vector<std::vector<double>> ev_home_base;
  /// [home][hour] kW of homes with a charger (base + charging)
  std::vector<std::vector<double>> composite;
  /// [home][hour] kW of charging alone
  std::vector<std::vector<double>> ev_truth;
  std::vector<std::vector<ChargingEvent>> events;
};

/// Homes share one diurnal/seasonal shape; EV homes add charging sessions
/// whose start hours peak in the evening.
HouseholdData synth_households(const HouseholdParams& params, std::uint64_t seed);

/// Average of the baseline homes, hour by hour.
std::vector<double> average_baseline(const HouseholdData& data);

/// Hour-of-day index of the trough of the series' 95th-percentile daily
/// profile.
std::size_t trough_hour(const std::vector<double>& series);

/// Estimated charging load of one home. Stages: normalize the baseline,
/// scale the composite to the baseline amplitude, align troughs, subtract,
/// undo the scaling, clip at zero.
std::vector<double> extract_ev_load(const std::vector<double>& composite, const std::vector<double>& baseline);

/// Maximal runs above 4 kW lasting at least 2 h, or single samples above
/// 7.2 kW. `step_h` is the sample spacing.
std::vector<ChargingEvent> detect_events(const std::vector<double>& load_kw, Timestamp start, double step_h = 1.0);

// ---- distributions and sampling ---------------------------------------------

struct EventDistributions {
  /// (duration h, energy kWh)
  Kde joint;
  /// start hour of day, in [0, 24)
  Kde start_hour;
};

EventDistributions fit_distributions(const std::vector<ChargingEvent>& events);

/// Draws n events. Non-positive (duration, energy) draws are rejected; more
/// than `max_rejections` consecutive rejections raise SolverError.
std::vector<ChargingEvent> sample_events(const EventDistributions& dist, std::size_t n, std::uint64_t seed,
                                         std::size_t max_rejections = 1000);

struct ScenarioSet {
  std::uint64_t seed = 0;
  double daily_prob = 0.0;
  Timestamp start{};
  std::size_t hours = 0;
  /// [scenario][hour] kW
  std::vector<std::vector<double>> kw;
  std::vector<std::vector<ChargingEvent>> events;

  std::size_t size() const { return kw.size(); }
  std::size_t charging_days(std::size_t s) const { return events[s].size(); }
};

/// One Bernoulli(daily_prob) draw per day; on a charging day one sampled
/// event starts at its sampled hour. Charging past midnight continues into
/// the next day; past the end of the horizon it wraps to the first hours.
/// A session that would start before the previous one ends is delayed to
/// the next free hour. Scenarios use streams derived from `seed`.
ScenarioSet generate_annual(const EventDistributions& dist, std::size_t n_scenarios, double daily_prob,
                            std::uint64_t seed, int year = 2023, std::size_t days = 365, unsigned threads = 0);

struct Overlay {
  LoadProfileSet profiles;
  /// (bus, scenario index) per augmented bus, ascending by bus
  std::vector<std::pair<BusId, std::size_t>> assignments;
};

/// Scales the base profiles by `growth` and adds one scenario's charging
/// (active power only) to round(penetration * load buses) seeded buses.
Overlay overlay_penetration(const Network& net, const LoadProfileSet& base, const ScenarioSet& scenarios,
                            double penetration, double growth, std::uint64_t seed);

/// "# seed=..,daily_prob=..,n=..,start=.." header, then scenario,day,hour,kw
/// rows with nonzero kw only.
std::string write_scenarios(const ScenarioSet& set);
ScenarioSet read_scenarios(const std::string& text);

/// Support points and bandwidths of both densities.
std::string write_distributions(const EventDistributions& dist);
EventDistributions read_distributions(const std::string& text);

}  // namespace pvm
