#include "pvm/stat.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "pvm/kmeans.hpp"

namespace pvm {

void StressWeights::validate() const {
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("stress weights must be finite and non-negative");
    sum += v;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw InputError(fmt::format("stress weights must sum to 1 (got {})", sum));
}

std::vector<DailyStress> daily_metrics(const std::vector<ViolationRecord>& records) {
  std::map<Date, DailyStress> by_day;
  std::map<Date, std::set<Timestamp>> hours;
  for (const ViolationRecord& r : records) {
    const Date d = date_of(r.when);
    DailyStress& s = by_day[d];
    s.date = d;
    s.raw[kCount] += 1.0;
    s.raw[kTotalSeverity] += r.severity;
    s.raw[kMaxSeverity] = std::max(s.raw[kMaxSeverity], r.severity);
    hours[d].insert(r.when);
  }
  std::vector<DailyStress> out;
  for (auto& [d, s] : by_day) {
    s.raw[kDuration] = static_cast<double>(hours[d].size());
    out.push_back(s);
  }
  return out;
}

std::vector<DailyStress> normalize_and_score(std::vector<DailyStress> days, const StressWeights& weights) {
  weights.validate();
  if (days.empty()) throw InputError("normalize_and_score needs at least one day");
  for (std::size_t k = 0; k < 4; ++k) {
    double lo = days[0].raw[k], hi = days[0].raw[k];
    for (const DailyStress& d : days) {
      lo = std::min(lo, d.raw[k]);
      hi = std::max(hi, d.raw[k]);
    }
    for (DailyStress& d : days) d.normalized[k] = hi > lo ? (d.raw[k] - lo) / (hi - lo) : 0.0;
  }
  for (DailyStress& d : days) {
    d.score = 0.0;
    for (std::size_t k = 0; k < 4; ++k) d.score += weights.w[k] * d.normalized[k];
  }
  return days;
}

Calendar calendar_of(const std::vector<DailyStress>& days) {
  if (days.empty()) return {};
  Date lo = days[0].date, hi = days[0].date;
  for (const DailyStress& d : days) {
    lo = std::min(lo, d.date);
    hi = std::max(hi, d.date);
  }
  return {lo, static_cast<std::size_t>(hi.days - lo.days + 1)};
}

namespace {

std::vector<double> daily_series(const std::vector<DailyStress>& days, const Calendar& cal) {
  std::vector<double> s(cal.days, 0.0);
  for (const DailyStress& d : days) {
    const std::int64_t k = d.date.days - cal.first.days;
    if (k >= 0 && static_cast<std::size_t>(k) < cal.days) s[static_cast<std::size_t>(k)] += d.score;
  }
  return s;
}

// R_p for every start. Each window is summed from scratch, left to right, so
// windows holding the same nonzero days compare bitwise equal.
std::vector<double> window_scores(const std::vector<double>& s, std::size_t W) {
  std::vector<double> out;
  for (std::size_t start = 0; W > 0 && start + W <= s.size(); ++start) {
    double r = 0.0;
    for (std::size_t k = start; k < start + W; ++k) r += s[k];
    out.push_back(r);
  }
  return out;
}

CriticalWindow make_window(const Calendar& cal, std::size_t start, std::size_t W, double score) {
  CriticalWindow w;
  w.start = cal.first + static_cast<std::int64_t>(start);
  w.end = w.start + (static_cast<std::int64_t>(W) - 1);
  w.days = W;
  w.score = score;
  return w;
}

}  // namespace

CriticalWindow select_worst_window(const std::vector<DailyStress>& days, std::size_t W,
                                   std::optional<Calendar> calendar) {
  if (W == 0) throw InputError("window length must be positive");
  const Calendar cal = calendar ? *calendar : calendar_of(days);
  if (cal.days < W) throw InputError(fmt::format("need at least {} days, calendar has {}", W, cal.days));
  const std::vector<double> r = window_scores(daily_series(days, cal), W);
  std::size_t best = 0;
  for (std::size_t k = 1; k < r.size(); ++k)
    if (r[k] > r[best]) best = k;
  return make_window(cal, best, W, r[best]);
}

std::vector<CriticalWindow> rank_windows(const std::vector<DailyStress>& days, std::size_t W,
                                         std::optional<Calendar> calendar) {
  if (W == 0) throw InputError("window length must be positive");
  const Calendar cal = calendar ? *calendar : calendar_of(days);
  const std::vector<double> r = window_scores(daily_series(days, cal), W);
  std::vector<std::size_t> order(r.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r[a] > r[b]; });
  std::vector<CriticalWindow> out;
  std::vector<bool> taken(cal.days, false);
  for (std::size_t start : order) {
    if (!(r[start] > 0.0)) break;
    bool free = true;
    for (std::size_t k = start; k < start + W; ++k) free = free && !taken[k];
    if (!free) continue;
    for (std::size_t k = start; k < start + W; ++k) taken[k] = true;
    out.push_back(make_window(cal, start, W, r[start]));
  }
  return out;
}

namespace {

std::vector<double> hour_voltages(const Network& net, const LoadProfileSet& profiles, std::size_t t,
                                  std::optional<std::size_t> probe, const conic::SolverConfig& cfg) {
  conic::ConicProgram prog;
  BalanceExtras extras;
  if (probe) {
    extras.p.assign(net.bus_count(), conic::LinExpr());
    extras.p[*probe] = conic::LinExpr(-kProbeInjection);
  }
  const BranchFlowHour h = add_branch_flow_hour(prog, net, profiles, t, extras);
  prog.set_objective(losses_expr(net, h));
  prog.seal();
  const conic::SolveResult r = conic::solve_relaxation(prog, cfg);
  if (!r.optimal())
    throw SolverError(fmt::format("sensitivity solve at hour {} failed: {} {}", t, conic::to_string(r.status), r.message));
  std::vector<double> v(net.bus_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sqrt(std::max(0.0, r.x[h.v[i].index]));
  return v;
}

double mean_abs_change(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace

std::vector<double> sensitivities(const Network& net, const LoadProfileSet& profiles, std::size_t t,
                                  const std::vector<BusId>& buses, const conic::SolverConfig& cfg, unsigned threads) {
  profiles.check_covers(net);
  if (t >= profiles.hours()) throw InputError(fmt::format("snapshot hour {} outside the horizon", t));
  const std::vector<double> base = hour_voltages(net, profiles, t, std::nullopt, cfg);
  std::vector<double> out(buses.size());
  parallel_for(buses.size(), threads, [&](std::size_t k) {
    out[k] = mean_abs_change(base, hour_voltages(net, profiles, t, net.index_of(buses[k]), cfg));
  });
  return out;
}

double sensitivity(const Network& net, const LoadProfileSet& profiles, std::size_t t, BusId bus,
                   const conic::SolverConfig& cfg) {
  return sensitivities(net, profiles, t, {bus}, cfg, 1).front();
}

void combined_metric(std::vector<NodeFeatures>& features, double alpha_eol) {
  const auto normalized = [&](auto get) {
    std::vector<double> out(features.size(), 0.0);
    if (features.empty()) return out;
    double lo = get(features[0]), hi = lo;
    for (const auto& f : features) {
      lo = std::min(lo, get(f));
      hi = std::max(hi, get(f));
    }
    if (hi > lo)
      for (std::size_t i = 0; i < features.size(); ++i) out[i] = (get(features[i]) - lo) / (hi - lo);
    return out;
  };
  const auto s = normalized([](const NodeFeatures& f) { return f.s_mean_abs; });
  const auto v = normalized([](const NodeFeatures& f) { return f.f_viol; });
  for (std::size_t i = 0; i < features.size(); ++i) {
    features[i].s_eol = alpha_eol * features[i].e_topo;
    features[i].m_comb = s[i] + v[i] + features[i].s_eol;
  }
}

ClusterResult cluster(const std::vector<NodeFeatures>& features, int k_max, std::uint64_t seed) {
  ClusterResult out;
  out.labels.assign(features.size(), 0);
  if (k_max < 2) throw InputError("k_max must be at least 2");
  const std::size_t n = features.size();
  if (n < 3) return out;
  Points raw;
  for (const NodeFeatures& f : features) raw.push_back({f.s_mean_abs, f.f_viol, f.s_eol});
  const Points x = standardize(raw);
  // identical rows leave nothing to separate
  std::set<std::vector<double>> distinct(x.begin(), x.end());
  if (distinct.size() < 2) return out;
  const int k_hi = std::min<int>(k_max, static_cast<int>(std::min(n - 1, distinct.size())));
  double best = -2.0;
  for (int k = 2; k <= k_hi; ++k) {
    const KMeansResult r = kmeans(x, k, derive_seed(seed, static_cast<std::uint64_t>(k)));
    // k-means may leave a cluster empty on duplicate-heavy data; relabel densely
    std::map<int, int> dense;
    std::vector<int> labels = r.labels;
    for (int& l : labels) l = dense.try_emplace(l, static_cast<int>(dense.size())).first->second;
    if (dense.size() < 2) continue;
    const double s = silhouette(x, labels);
    out.scores.emplace_back(k, s);
    if (s > best) {
      best = s;
      out.k = static_cast<int>(dense.size());
      out.labels = labels;
      out.silhouette = s;
    }
  }
  return out;
}

std::vector<int> pool_quotas(int k, int n_max_top, int n_min_bottom) {
  if (k < 1) throw InputError("need at least one cluster");
  if (n_min_bottom < 0 || n_max_top < n_min_bottom) throw InputError("need 0 <= n_min_bottom <= n_max_top");
  if (k == 1) return {n_max_top};
  std::vector<int> q;
  for (int j = 0; j < k; ++j) {
    const double v = n_max_top - static_cast<double>(j) * (n_max_top - n_min_bottom) / (k - 1);
    q.push_back(static_cast<int>(std::lround(v)));
  }
  return q;
}

namespace {

bool by_metric(const PoolEntry& a, const PoolEntry& b) {
  if (a.m_comb != b.m_comb) return a.m_comb > b.m_comb;
  return a.bus < b.bus;
}

}  // namespace

std::vector<PoolEntry> build_pool(const std::vector<NodeFeatures>& features, const std::vector<int>& labels,
                                  int n_max_top, int n_min_bottom) {
  if (labels.size() != features.size()) throw InputError("build_pool: label count mismatch");
  std::vector<PoolEntry> all;
  for (std::size_t i = 0; i < features.size(); ++i) all.push_back({features[i].bus, features[i].m_comb, labels[i]});
  std::set<int> ids(labels.begin(), labels.end());
  std::vector<PoolEntry> out;
  if (ids.size() < 2) {
    std::sort(all.begin(), all.end(), by_metric);
    for (std::size_t i = 0; i < all.size() && i < static_cast<std::size_t>(n_max_top); ++i) out.push_back(all[i]);
    return out;
  }
  struct Group {
    int label;
    double mean;
    std::vector<PoolEntry> members;
  };
  std::vector<Group> groups;
  for (int id : ids) {
    Group g{id, 0.0, {}};
    for (const PoolEntry& e : all)
      if (e.cluster == id) g.members.push_back(e);
    for (const PoolEntry& e : g.members) g.mean += e.m_comb;
    g.mean /= static_cast<double>(g.members.size());
    std::sort(g.members.begin(), g.members.end(), by_metric);
    groups.push_back(std::move(g));
  }
  std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) { return a.mean > b.mean; });
  const std::vector<int> quota = pool_quotas(static_cast<int>(groups.size()), n_max_top, n_min_bottom);
  std::set<BusId> seen;
  for (std::size_t j = 0; j < groups.size(); ++j) {
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(quota[j]), groups[j].members.size());
    for (std::size_t i = 0; i < take; ++i)
      if (seen.insert(groups[j].members[i].bus).second) out.push_back(groups[j].members[i]);
  }
  std::sort(out.begin(), out.end(), by_metric);
  return out;
}

double default_distance_threshold(const Network& net, const std::vector<PoolEntry>& pool) {
  std::vector<double> d;
  for (std::size_t a = 0; a < pool.size(); ++a)
    for (std::size_t b = a + 1; b < pool.size(); ++b) d.push_back(electrical_distance(net, pool[a].bus, pool[b].bus));
  if (d.empty()) return 0.0;
  std::sort(d.begin(), d.end());
  // linear interpolation between order statistics
  const double pos = 0.25 * static_cast<double>(d.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, d.size() - 1);
  return d[lo] + (pos - static_cast<double>(lo)) * (d[hi] - d[lo]);
}

std::size_t default_target_count(std::size_t pool_size) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.6 * static_cast<double>(pool_size))));
}

CandidateSet diversity_filter(const std::vector<PoolEntry>& pool, const Network& net, double threshold,
                              std::size_t target) {
  if (pool.empty()) throw InputError("diversity_filter: empty pool");
  CandidateSet out;
  out.threshold = threshold;
  for (std::size_t rank = 0; rank < pool.size(); ++rank) {
    const PoolEntry& e = pool[rank];
    CandidateDecision d{e.bus, e.m_comb, e.cluster, rank, false, {}};
    if (out.buses.size() >= target) {
      d.reason = "target count reached";
      out.trail.push_back(d);
      continue;
    }
    const std::size_t i = net.index_of(e.bus);
    std::optional<BusId> clash;
    for (BusId a : out.buses) {
      const std::size_t j = net.index_of(a);
      if (net.adjacent(i, j) && !(electrical_distance_by_index(net, i, j) > threshold)) {
        clash = a;
        break;
      }
    }
    if (clash) {
      d.reason = fmt::format("adjacent to bus {} within distance threshold", *clash);
    } else {
      d.accepted = true;
      d.reason = "accepted";
      out.buses.push_back(e.bus);
    }
    out.trail.push_back(d);
  }
  return out;
}

void StatParams::validate() const {
  weights.validate();
  if (window_days == 0) throw InputError("window length must be positive");
  if (!(alpha_eol >= 0.0)) throw InputError("alpha_eol must be non-negative");
  if (n_min_bottom < 0 || n_max_top < n_min_bottom || n_max_top < 1)
    throw InputError("need 0 <= n_min_bottom <= n_max_top and n_max_top >= 1");
  if (k_max < 2) throw InputError("k_max must be at least 2");
  if (distance_threshold && !(*distance_threshold >= 0.0)) throw InputError("distance threshold must be >= 0");
  if (target_count && *target_count == 0) throw InputError("target count must be positive");
}

SpatialResult spatial_targeting(const Network& net, const LoadProfileSet& profiles,
                                const std::vector<ViolationRecord>& records, const StatParams& params,
                                const conic::SolverConfig& cfg, unsigned threads) {
  params.validate();
  if (records.empty()) throw InputError("spatial targeting needs at least one violation record");
  SpatialResult out;

  std::map<std::int64_t, double> severity_by_hour;
  std::set<BusId> violating;
  for (const ViolationRecord& r : records) {
    if (!net.has_bus(r.bus)) throw InputError(fmt::format("violation record names unknown bus {}", r.bus));
    if (net.index_of(r.bus) == net.slack_index()) continue;
    const std::int64_t t = r.when.hours - profiles.start().hours;
    if (t < 0 || static_cast<std::size_t>(t) >= profiles.hours())
      throw InputError(fmt::format("violation at {} outside the profile horizon", to_string(r.when)));
    severity_by_hour[t] += r.severity;
    violating.insert(r.bus);
  }
  if (violating.empty()) throw InputError("no violating load buses");
  double worst = -1.0;
  for (const auto& [t, s] : severity_by_hour)
    if (s > worst) {
      worst = s;
      out.snapshot_hour = static_cast<std::size_t>(t);
    }

  const std::vector<BusId> buses(violating.begin(), violating.end());
  const auto stats = node_stats(records, profiles.hours(), buses);
  const auto sens = sensitivities(net, profiles, out.snapshot_hour, buses, cfg, threads);
  const auto leaves = leaf_buses(net);
  for (std::size_t k = 0; k < buses.size(); ++k) {
    NodeFeatures f;
    f.bus = buses[k];
    f.s_mean_abs = sens[k];
    f.f_viol = stats[k].f_viol;
    f.e_topo = std::find(leaves.begin(), leaves.end(), buses[k]) != leaves.end() ? 1 : 0;
    out.features.push_back(f);
  }
  combined_metric(out.features, params.alpha_eol);
  out.clusters = cluster(out.features, params.k_max, params.seed);
  for (std::size_t k = 0; k < out.features.size(); ++k) out.features[k].cluster = out.clusters.labels[k];
  out.pool = build_pool(out.features, out.clusters.labels, params.n_max_top, params.n_min_bottom);
  const double threshold =
      params.distance_threshold ? *params.distance_threshold : default_distance_threshold(net, out.pool);
  const std::size_t target = params.target_count ? *params.target_count : default_target_count(out.pool.size());
  out.candidates = diversity_filter(out.pool, net, threshold, target);
  return out;
}

}  // namespace pvm
