#pragma once

// Brute-force references shared by the unit tests and the acceptance run.

#include <cstddef>
#include <random>
#include <utility>
#include <vector>

#include "pvm/oep.hpp"
#include "pvm/stat.hpp"

namespace pvm::testing {

inline std::vector<ViolationRecord> random_log(std::mt19937_64& rng, Timestamp start, int days, int max_records) {
  std::uniform_int_distribution<int> n(0, max_records), day(0, days - 1), hour(0, 23), bus(2, 33);
  std::uniform_real_distribution<double> sev(0.001, 0.08);
  std::vector<ViolationRecord> out;
  const int count = n(rng);
  for (int k = 0; k < count; ++k) {
    const double s = sev(rng);
    out.push_back({bus(rng), start + (day(rng) * 24 + hour(rng)), 0.95 - s, s, ViolationKind::Under});
  }
  return out;
}

/// Every window of every start, summed left to right. Returns (start, sum).
inline std::pair<std::size_t, double> brute_worst(const std::vector<double>& s, std::size_t W) {
  std::size_t best = 0;
  double best_r = -1.0;
  for (std::size_t start = 0; start + W <= s.size(); ++start) {
    double r = 0.0;
    for (std::size_t k = 0; k < W; ++k) r += s[start + k];
    if (r > best_r) {
      best_r = r;
      best = start;
    }
  }
  return {best, best_r};
}

/// Dense day series of scores, zero on days without violations.
inline std::vector<double> score_series(const std::vector<DailyStress>& days, Date first, int ndays) {
  std::vector<double> s(static_cast<std::size_t>(ndays), 0.0);
  for (const auto& d : days) s[static_cast<std::size_t>(d.date.days - first.days)] = d.score;
  return s;
}

/// Exhaustive audit of the spatial criterion over all accepted pairs.
inline bool spacing_ok(const Network& net, const CandidateSet& c) {
  for (std::size_t a = 0; a < c.buses.size(); ++a)
    for (std::size_t b = a + 1; b < c.buses.size(); ++b) {
      const std::size_t i = net.index_of(c.buses[a]), j = net.index_of(c.buses[b]);
      if (net.adjacent(i, j) && electrical_distance_by_index(net, i, j) <= c.threshold) return false;
    }
  return true;
}

// Detection oracle: mark every sample above 4 kW, then read off runs.
struct AboveRun {
  std::size_t first, len;
  double energy;
  bool all_high;
};

inline std::vector<AboveRun> runs_above(const std::vector<double>& s) {
  std::vector<AboveRun> out;
  std::vector<bool> mark(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) mark[i] = s[i] > 4.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!mark[i] || (i > 0 && mark[i - 1])) continue;
    AboveRun r{i, 0, 0.0, true};
    for (std::size_t j = i; j < s.size() && mark[j]; ++j) {
      ++r.len;
      r.energy += s[j];
      r.all_high = r.all_high && s[j] > 7.2;
    }
    out.push_back(r);
  }
  return out;
}

/// Events the 4 kW / 2 h and 7.2 kW / 1 h rules keep.
inline std::vector<AboveRun> expected_events(const std::vector<double>& s) {
  std::vector<AboveRun> want;
  for (const auto& r : runs_above(s))
    if (r.len >= 2 || r.all_high) want.push_back(r);
  return want;
}

// Two buses at 300/150 kW; hour `bad` pulls bus 2 below 0.95 p.u.
inline LoadProfileSet one_bad_hour(const Network& net, Timestamp start, double peak_kw = 2200.0,
                                   std::size_t bad = 18) {
  LoadProfileSet prof(start, 24);
  std::vector<double> p(24, 300.0), q(24, 150.0);
  p[bad] = peak_kw;
  q[bad] = peak_kw / 2;
  prof.set(net.buses()[1].id, p, q);
  return prof;
}

inline BessPlan fixed_plan(BusId bus, double capacity) {
  BessPlan p;
  p.sites.push_back({bus, capacity > 0.0, capacity, {}, {}, {}, {}, {}});
  return p;
}

inline bool feasible_with(const Network& net, const LoadProfileSet& prof, BusId bus, double capacity,
                          const BessSpec& spec) {
  DispatchOptions o;
  o.objective = DispatchObjective::Losses;
  const auto r = dispatch_days(net, prof, fixed_plan(bus, capacity), spec, nullptr, net.limits(), {}, o);
  return r.infeasible_days.empty();
}

/// Smallest capacity at `bus` that dispatches without violations: coarse
/// grid for the first feasible size, then bisection inside the bracketing
/// cell (feasibility is monotone in capacity). Returns e_max + 1 if none.
inline double min_capacity_oracle(const Network& net, const LoadProfileSet& prof, BusId bus, const BessSpec& spec,
                                  double step = 50.0) {
  double lo = 0.0, hi = -1.0;
  for (double e = 0.0; e <= spec.e_max_kwh; e += step) {
    if (feasible_with(net, prof, bus, e, spec)) {
      hi = e;
      break;
    }
    lo = e;
  }
  if (hi < 0.0) return spec.e_max_kwh + 1.0;
  while (hi - lo > 1e-3 * hi) {
    const double mid = 0.5 * (lo + hi);
    (feasible_with(net, prof, bus, mid, spec) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace pvm::testing
