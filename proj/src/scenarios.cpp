#include "pvm/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "pvm/common.hpp"

namespace pvm {

std::string_view to_string(EventClass c) {
  switch (c) {
    case EventClass::Low: return "low";
    case EventClass::Normal: return "normal";
    case EventClass::High: return "high";
  }
  return "?";
}

EventClass classify(double p_avg_kw) {
  if (p_avg_kw < kLowPowerKw) return EventClass::Low;
  if (p_avg_kw > kHighPowerKw) return EventClass::High;
  return EventClass::Normal;
}

namespace {

ChargingEvent make_event(Timestamp start, double duration_h, double energy_kwh) {
  ChargingEvent e;
  e.start = start;
  e.duration_h = duration_h;
  e.energy_kwh = energy_kwh;
  e.p_avg_kw = energy_kwh / duration_h;
  e.cls = classify(e.p_avg_kw);
  return e;
}

// Household shape: overnight trough near 04:00, small morning bump, evening
// peak around 19:30; summer a bit heavier than spring/autumn.
double household_shape(std::size_t hour_of_year) {
  const double h = static_cast<double>(hour_of_year % 24);
  const double doy = static_cast<double>(hour_of_year / 24);
  const auto bump = [](double x, double mu, double w) { return std::exp(-(x - mu) * (x - mu) / (2.0 * w * w)); };
  const double diurnal = 0.55 + 0.35 * bump(h, 8.0, 1.5) + 0.75 * bump(h, 19.5, 2.0) + 0.2 * bump(h, 13.0, 3.0);
  const double season = 1.0 + 0.15 * std::cos(2.0 * std::numbers::pi * (doy - 200.0) / 365.0);
  return diurnal * season;
}

// start-hour weights, evening heavy
constexpr double kStartWeights[24] = {1.0, 0.4, 0.2, 0.1, 0.1, 0.1, 0.2, 0.3, 0.3, 0.3, 0.3, 0.3,
                                      0.3, 0.3, 0.3, 0.4, 0.6, 0.9, 1.5, 3.5, 5.0, 5.0, 4.0, 2.5};

std::vector<double> home_series(const HouseholdParams& params, double scale, std::mt19937_64& rng) {
  const std::size_t hours = params.days * 24;
  std::normal_distribution<double> noise(0.0, params.noise);
  std::vector<double> s(hours);
  for (std::size_t t = 0; t < hours; ++t)
    s[t] = std::max(0.0, params.base_kw * scale * household_shape(t) * (1.0 + noise(rng)));
  return s;
}

// Spreads `energy` at `power` from hour `first` on, cyclically over the
// series. Returns the number of hours touched.
std::size_t place(std::vector<double>& series, std::size_t first, double duration_h, double power) {
  const auto span = static_cast<std::size_t>(std::ceil(duration_h));
  for (std::size_t k = 0; k < span; ++k) {
    const double frac = std::min(1.0, duration_h - static_cast<double>(k));
    series[(first + k) % series.size()] += power * frac;
  }
  return span;
}

ChargingEvent draw_event(const EventDistributions& dist, std::mt19937_64& rng, std::size_t max_rejections) {
  std::vector<double> de;
  std::size_t rejected = 0;
  for (;;) {
    de = dist.joint.sample(rng);
    if (de[0] > 0.0 && de[1] > 0.0) break;
    if (++rejected > max_rejections)
      throw InputError(fmt::format("event sampler rejected {} consecutive draws; distribution is degenerate",
                                   rejected));
  }
  double h = std::fmod(dist.start_hour.sample(rng)[0], 24.0);
  if (h < 0.0) h += 24.0;
  const int hour = std::min(23, static_cast<int>(std::floor(h)));
  return make_event(Timestamp{hour}, de[0], de[1]);
}

}  // namespace

HouseholdData synth_households(const HouseholdParams& params, std::uint64_t seed) {
  if (params.days == 0) throw InputError("household synthesis needs at least one day");
  if (params.event_rate < 0.0 || params.event_rate > 1.0) throw InputError("event rate must lie in [0, 1]");
  HouseholdData out;
  out.start = make_timestamp(params.year, 1, 1);
  const std::size_t hours = params.days * 24;

  std::uniform_real_distribution<double> spread(1.0 - params.home_spread, 1.0 + params.home_spread);
  for (std::size_t i = 0; i < params.base_homes; ++i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    out.baseline_homes.push_back(home_series(params, spread(rng), rng));
  }

  const double mu = std::log(params.energy_mode_kwh) + params.energy_sigma * params.energy_sigma;
  std::lognormal_distribution<double> energy(mu, params.energy_sigma);
  std::discrete_distribution<int> start_hour(std::begin(kStartWeights), std::end(kStartWeights));
  std::discrete_distribution<int> level({0.7, 0.15, 0.15});
  constexpr double kLevels[3] = {7.4, 11.0, 3.7};
  std::bernoulli_distribution charges(params.event_rate);

  for (std::size_t i = 0; i < params.ev_homes; ++i) {
    std::mt19937_64 rng(derive_seed(seed, 1'000'000 + i));
    auto base = home_series(params, spread(rng), rng);
    std::vector<double> ev(hours, 0.0);
    std::vector<ChargingEvent> events;
    std::size_t next_free = 0;
    for (std::size_t d = 0; d < params.days; ++d) {
      if (!charges(rng)) continue;
      const double e = std::min(energy(rng), params.energy_cap_kwh);
      const double p = kLevels[level(rng)];
      std::size_t first = d * 24 + static_cast<std::size_t>(start_hour(rng));
      first = std::max(first, next_free);
      if (first >= hours) break;
      const double dur = e / p;
      // the last session of the year is cut at the horizon
      const double room = static_cast<double>(hours - first);
      const double kept = std::min(dur, room);
      next_free = first + place(ev, first, kept, p);
      events.push_back(make_event(out.start + static_cast<std::int64_t>(first), kept, kept * p));
    }
    std::vector<double> comp(hours);
    for (std::size_t t = 0; t < hours; ++t) comp[t] = base[t] + ev[t];
    out.ev_home_base.push_back(std::move(base));
    out.composite.push_back(std::move(comp));
    out.ev_truth.push_back(std::move(ev));
    out.events.push_back(std::move(events));
  }
  return out;
}

std::vector<double> average_baseline(const HouseholdData& data) {
  if (data.baseline_homes.empty()) throw InputError("no baseline homes to average");
  std::vector<double> avg(data.baseline_homes[0].size(), 0.0);
  for (const auto& h : data.baseline_homes)
    for (std::size_t t = 0; t < avg.size(); ++t) avg[t] += h[t];
  for (double& v : avg) v /= static_cast<double>(data.baseline_homes.size());
  return avg;
}

std::size_t trough_hour(const std::vector<double>& series) {
  if (series.size() < 24) throw InputError("trough detection needs at least one full day");
  const std::size_t days = series.size() / 24;
  std::size_t best = 0;
  double best_v = 0.0;
  for (std::size_t h = 0; h < 24; ++h) {
    std::vector<double> at(days);
    for (std::size_t d = 0; d < days; ++d) at[d] = series[d * 24 + h];
    const double q = quantile(std::move(at), 0.95);
    if (h == 0 || q < best_v) {
      best = h;
      best_v = q;
    }
  }
  return best;
}

std::vector<double> extract_ev_load(const std::vector<double>& composite, const std::vector<double>& baseline) {
  if (composite.size() != baseline.size())
    throw InputError(fmt::format("composite has {} samples, baseline {}", composite.size(), baseline.size()));
  const std::size_t n = composite.size();
  if (n == 0) return {};

  // (1) baseline to unit mean
  double mean = 0.0;
  for (double b : baseline) mean += b;
  mean /= static_cast<double>(n);
  if (!(mean > 0.0)) throw InputError("baseline has no positive demand");
  std::vector<double> b_hat(n);
  for (std::size_t t = 0; t < n; ++t) b_hat[t] = baseline[t] / mean;

  // (2) composite to the baseline amplitude; the lower quartile is mostly
  // free of charging so it carries the household level
  const double qb = quantile(b_hat, 0.25);
  const double qc = quantile(composite, 0.25);
  const double k = qb > 0.0 && qc > 0.0 ? qc / qb : 1.0;
  std::vector<double> c_hat(n);
  for (std::size_t t = 0; t < n; ++t) c_hat[t] = composite[t] / k;

  // (3) phase alignment on the 95th-percentile troughs
  std::vector<double> aligned = c_hat;
  if (n >= 24) {
    const auto shift = static_cast<std::ptrdiff_t>(trough_hour(c_hat)) - static_cast<std::ptrdiff_t>(trough_hour(b_hat));
    const auto nn = static_cast<std::ptrdiff_t>(n);
    for (std::ptrdiff_t t = 0; t < nn; ++t) aligned[static_cast<std::size_t>(t)] = c_hat[static_cast<std::size_t>(((t + shift) % nn + nn) % nn)];
  }

  // (4) subtract, (5) undo the scaling, clip
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = std::max(0.0, (aligned[t] - b_hat[t]) * k);
  return out;
}

std::vector<ChargingEvent> detect_events(const std::vector<double>& load_kw, Timestamp start, double step_h) {
  if (!(step_h > 0.0) || step_h > 1.0) throw InputError("detection needs hourly or finer samples");
  std::vector<ChargingEvent> out;
  const std::size_t n = load_kw.size();
  std::size_t i = 0;
  while (i < n) {
    if (!(load_kw[i] > kLowPowerKw)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    double energy = 0.0;
    bool high = true;
    while (j < n && load_kw[j] > kLowPowerKw) {
      energy += load_kw[j] * step_h;
      high = high && load_kw[j] > kHighPowerKw;
      ++j;
    }
    const double dur = static_cast<double>(j - i) * step_h;
    // rule 1: above 4 kW for 2 h; rule 2: above 7.2 kW for 1 h
    const bool rule1 = dur >= 2.0 - 1e-9;
    const bool rule2 = high && dur >= 1.0 - 1e-9;
    if (rule1 || rule2) {
      const auto offset = static_cast<std::int64_t>(std::floor(static_cast<double>(i) * step_h + 1e-9));
      out.push_back(make_event(start + offset, dur, energy));
    }
    i = j;
  }
  return out;
}

EventDistributions fit_distributions(const std::vector<ChargingEvent>& events) {
  std::vector<std::vector<double>> joint, hour;
  for (const auto& e : events) {
    joint.push_back({e.duration_h, e.energy_kwh});
    hour.push_back({static_cast<double>(hour_of_day(e.start))});
  }
  return EventDistributions{Kde(std::move(joint)), Kde(std::move(hour))};
}

std::vector<ChargingEvent> sample_events(const EventDistributions& dist, std::size_t n, std::uint64_t seed,
                                         std::size_t max_rejections) {
  std::mt19937_64 rng(seed);
  std::vector<ChargingEvent> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw_event(dist, rng, max_rejections));
  return out;
}

ScenarioSet generate_annual(const EventDistributions& dist, std::size_t n_scenarios, double daily_prob,
                            std::uint64_t seed, int year, std::size_t days, unsigned threads) {
  if (!(daily_prob >= 0.0 && daily_prob <= 1.0)) throw InputError("daily charging probability must lie in [0, 1]");
  if (days == 0) throw InputError("scenario horizon needs at least one day");
  ScenarioSet set;
  set.seed = seed;
  set.daily_prob = daily_prob;
  set.start = make_timestamp(year, 1, 1);
  set.hours = days * 24;
  set.kw.assign(n_scenarios, {});
  set.events.assign(n_scenarios, {});

  parallel_for(n_scenarios, threads, [&](std::size_t s) {
    std::mt19937_64 rng(derive_seed(seed, s));
    std::bernoulli_distribution charges(daily_prob);
    std::vector<double> kw(set.hours, 0.0);
    std::vector<ChargingEvent> events;
    std::size_t next_free = 0;
    for (std::size_t d = 0; d < days; ++d) {
      if (!charges(rng)) continue;
      ChargingEvent e = draw_event(dist, rng, 1000);
      std::size_t first = d * 24 + static_cast<std::size_t>(e.start.hours);
      first = std::max(first, next_free);
      next_free = first + place(kw, first, e.duration_h, e.p_avg_kw);
      e.start = set.start + static_cast<std::int64_t>(first % set.hours);
      events.push_back(e);
    }
    set.kw[s] = std::move(kw);
    set.events[s] = std::move(events);
  });
  return set;
}

Overlay overlay_penetration(const Network& net, const LoadProfileSet& base, const ScenarioSet& scenarios,
                            double penetration, double growth, std::uint64_t seed) {
  if (!(penetration >= 0.0 && penetration <= 1.0))
    throw InputError(fmt::format("penetration {} outside [0, 1]", penetration));
  Overlay out{scale_profiles(base, growth), {}};
  std::vector<BusId> eligible;
  for (const auto& b : net.buses())
    if (b.kind == BusKind::Load) eligible.push_back(b.id);
  const auto count = static_cast<std::size_t>(std::lround(penetration * static_cast<double>(eligible.size())));
  if (count == 0) return out;
  if (scenarios.size() == 0 || scenarios.hours == 0) throw InputError("overlay needs at least one scenario");

  std::mt19937_64 rng(seed);
  for (std::size_t i = eligible.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(eligible[i - 1], eligible[pick(rng)]);
  }
  eligible.resize(count);
  std::sort(eligible.begin(), eligible.end());

  std::uniform_int_distribution<std::size_t> which(0, scenarios.size() - 1);
  const auto period = static_cast<std::int64_t>(scenarios.hours);
  for (BusId bus : eligible) {
    const std::size_t s = which(rng);
    std::vector<double> extra(out.profiles.hours());
    for (std::size_t t = 0; t < extra.size(); ++t) {
      const std::int64_t off = out.profiles.timestamp(t).hours - scenarios.start.hours;
      extra[t] = scenarios.kw[s][static_cast<std::size_t>((off % period + period) % period)];
    }
    out.profiles.add_p(bus, extra);
    out.assignments.emplace_back(bus, s);
  }
  return out;
}

// ---- files ------------------------------------------------------------------

namespace {

std::map<std::string, std::string> header_fields(const std::string& line) {
  std::map<std::string, std::string> kv;
  for (const auto& part : split(trim(std::string_view(line).substr(1)), ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw InputError(fmt::format("bad header field '{}'", part));
    kv[trim(std::string_view(part).substr(0, eq))] = trim(std::string_view(part).substr(eq + 1));
  }
  return kv;
}

const std::string& field(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw InputError(fmt::format("scenario header lacks '{}'", key));
  return it->second;
}

}  // namespace

std::string write_scenarios(const ScenarioSet& set) {
  std::string out = fmt::format("# seed={},daily_prob={:.17g},n={},start={},hours={}\n", set.seed, set.daily_prob,
                                set.size(), to_string(set.start), set.hours);
  out += "scenario,day,hour,kw\n";
  for (std::size_t s = 0; s < set.size(); ++s)
    for (std::size_t t = 0; t < set.hours; ++t)
      if (set.kw[s][t] != 0.0) out += fmt::format("{},{},{},{:.17g}\n", s, t / 24, t % 24, set.kw[s][t]);
  return out;
}

ScenarioSet read_scenarios(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#') throw InputError("scenario file lacks its header");
  const auto kv = header_fields(line);
  ScenarioSet set;
  set.seed = static_cast<std::uint64_t>(std::stoull(field(kv, "seed")));
  set.daily_prob = parse_double(field(kv, "daily_prob"), "daily_prob");
  const auto n = parse_int(field(kv, "n"), "n");
  set.start = parse_timestamp(field(kv, "start"));
  const auto hours = parse_int(field(kv, "hours"), "hours");
  if (n < 0 || hours <= 0 || hours % 24 != 0) throw InputError("scenario header has bad sizes");
  set.hours = static_cast<std::size_t>(hours);
  set.kw.assign(static_cast<std::size_t>(n), std::vector<double>(set.hours, 0.0));
  set.events.assign(static_cast<std::size_t>(n), {});
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || line.rfind("scenario,", 0) == 0) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 4) throw InputError(fmt::format("scenario file line {}: expected 4 columns", lineno));
    const auto s = parse_int(cols[0], "scenario");
    const auto d = parse_int(cols[1], "day");
    const auto h = parse_int(cols[2], "hour");
    const double kw = parse_double(cols[3], "kw");
    const long long t = d * 24 + h;
    if (s < 0 || s >= n || h < 0 || h > 23 || t < 0 || t >= hours)
      throw InputError(fmt::format("scenario file line {}: index out of range", lineno));
    if (kw < 0.0) throw InputError(fmt::format("scenario file line {}: negative kw", lineno));
    set.kw[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)] = kw;
  }
  return set;
}

namespace {

void write_kde(std::string& out, const char* name, const Kde& k) {
  out += fmt::format("{},{},{}\n", name, k.dimension(), k.samples().size());
  out += "bandwidth";
  for (double h : k.bandwidths()) out += fmt::format(",{:.17g}", h);
  out += "\n";
  for (const auto& p : k.samples()) {
    for (std::size_t j = 0; j < p.size(); ++j) out += fmt::format("{}{:.17g}", j ? "," : "", p[j]);
    out += "\n";
  }
}

Kde read_kde(std::istringstream& in, const char* name) {
  std::string line;
  while (std::getline(in, line) && (trim(line).empty() || line[0] == '#')) {
  }
  const auto head = split(line, ',');
  if (head.size() != 3 || trim(head[0]) != name) throw InputError(fmt::format("snapshot: expected '{}' block", name));
  const auto d = static_cast<std::size_t>(parse_int(head[1], "dimension"));
  const auto n = static_cast<std::size_t>(parse_int(head[2], "count"));
  if (!std::getline(in, line)) throw InputError("snapshot: missing bandwidths");
  const auto bw = split(line, ',');
  if (bw.size() != d + 1 || trim(bw[0]) != "bandwidth") throw InputError("snapshot: bad bandwidth row");
  std::vector<double> h;
  for (std::size_t j = 1; j <= d; ++j) h.push_back(parse_double(bw[j], "bandwidth"));
  std::vector<std::vector<double>> pts;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw InputError("snapshot: truncated support points");
    const auto cols = split(line, ',');
    if (cols.size() != d) throw InputError("snapshot: support point has wrong dimension");
    std::vector<double> p;
    for (const auto& c : cols) p.push_back(parse_double(c, "support point"));
    pts.push_back(std::move(p));
  }
  return Kde(std::move(pts), std::move(h));
}

}  // namespace

std::string write_distributions(const EventDistributions& dist) {
  std::string out = "# event distributions: (duration h, energy kWh) and start hour\n";
  write_kde(out, "joint", dist.joint);
  write_kde(out, "start_hour", dist.start_hour);
  return out;
}

EventDistributions read_distributions(const std::string& text) {
  std::istringstream in(text);
  Kde joint = read_kde(in, "joint");
  Kde start = read_kde(in, "start_hour");
  if (joint.dimension() != 2 || start.dimension() != 1) throw InputError("snapshot: unexpected dimensions");
  return EventDistributions{std::move(joint), std::move(start)};
}

}  // namespace pvm
