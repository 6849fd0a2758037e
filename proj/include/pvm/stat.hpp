#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pvm/conic/solver.hpp"
#include "pvm/netmodel.hpp"
#include "pvm/vva.hpp"

namespace pvm {

// ---- temporal criticality -------------------------------------------------

enum Metric : std::size_t { kCount = 0, kTotalSeverity = 1, kMaxSeverity = 2, kDuration = 3 };

struct DailyStress {
  Date date{};
  /// count, total severity, max severity, distinct violation hours
  std::array<double, 4> raw{};
  std::array<double, 4> normalized{};
  double score = 0.0;
};

struct StressWeights {
  std::array<double, 4> w{0.25, 0.25, 0.25, 0.25};
  /// Throws InputError unless all weights are >= 0 and sum to 1.
  void validate() const;
};

/// Per-date aggregation of a violation log, ascending by date. Dates without
/// records are omitted.
std::vector<DailyStress> daily_metrics(const std::vector<ViolationRecord>& records);

/// Min-max normalization of each metric across the given days (constant
/// metric maps to 0), then the weighted score.
std::vector<DailyStress> normalize_and_score(std::vector<DailyStress> days, const StressWeights& weights);

struct CriticalWindow {
  Date start{};
  Date end{};
  std::size_t days = 0;
  double score = 0.0;
};

/// Consecutive calendar dates the windows slide over. Scored days outside it
/// are ignored; calendar dates without an entry score 0.
struct Calendar {
  Date first{};
  std::size_t days = 0;
};

/// Calendar spanning the first to the last scored day.
Calendar calendar_of(const std::vector<DailyStress>& days);

/// Length-W window of maximal cumulative score; ties go to the earliest start.
CriticalWindow select_worst_window(const std::vector<DailyStress>& days, std::size_t W,
                                   std::optional<Calendar> calendar = std::nullopt);

/// Non-overlapping windows with positive score, best first (greedy).
std::vector<CriticalWindow> rank_windows(const std::vector<DailyStress>& days, std::size_t W,
                                         std::optional<Calendar> calendar = std::nullopt);

// ---- spatial targeting ----------------------------------------------------

/// Active injection used for the sensitivity probe (p.u.).
inline constexpr double kProbeInjection = 0.01;

/// Mean over all buses of |V after - V before| when `bus` injects 0.01 p.u.
/// of active power at hour t of `profiles`.
double sensitivity(const Network& net, const LoadProfileSet& profiles, std::size_t t, BusId bus,
                   const conic::SolverConfig& cfg = {});

/// Same for many buses, sharing the base solve; runs in parallel.
std::vector<double> sensitivities(const Network& net, const LoadProfileSet& profiles, std::size_t t,
                                  const std::vector<BusId>& buses, const conic::SolverConfig& cfg = {},
                                  unsigned threads = 0);

struct NodeFeatures {
  BusId bus = 0;
  double s_mean_abs = 0.0;
  double f_viol = 0.0;
  int e_topo = 0;
  double s_eol = 0.0;
  double m_comb = 0.0;
  int cluster = -1;
};

/// M_comb = S' + F' + alpha * E_topo, where S' and F' are min-max normalized
/// over the given buses. E_topo is already on a 0/1 scale, so alpha keeps its
/// meaning as the weight of the end-of-line term.
void combined_metric(std::vector<NodeFeatures>& features, double alpha_eol);

struct ClusterResult {
  std::vector<int> labels;
  int k = 1;
  /// silhouette of the chosen k; empty on the single-cluster path
  std::optional<double> silhouette;
  /// (k, silhouette) for every k tried
  std::vector<std::pair<int, double>> scores;
};

/// K-means on standardized (S_mean_abs, F_viol, S_eol); k chosen by
/// silhouette over 2..min(k_max, n-1). Fewer than 3 buses or identical
/// feature rows give one cluster.
ClusterResult cluster(const std::vector<NodeFeatures>& features, int k_max, std::uint64_t seed);

/// Per-cluster quotas interpolated from n_max_top (best cluster) down to
/// n_min_bottom (worst).
std::vector<int> pool_quotas(int k, int n_max_top, int n_min_bottom);

struct PoolEntry {
  BusId bus = 0;
  double m_comb = 0.0;
  int cluster = -1;
};

/// Clusters ranked by mean M_comb; each contributes its best buses up to its
/// quota. Returned sorted by M_comb descending (ties by bus id).
std::vector<PoolEntry> build_pool(const std::vector<NodeFeatures>& features, const std::vector<int>& labels,
                                  int n_max_top, int n_min_bottom);

struct CandidateDecision {
  BusId bus = 0;
  double m_comb = 0.0;
  int cluster = -1;
  std::size_t rank = 0;
  bool accepted = false;
  std::string reason;
};

struct CandidateSet {
  std::vector<BusId> buses;
  std::vector<CandidateDecision> trail;
  double threshold = 0.0;
};

/// 25th percentile of pairwise electrical distances within the pool.
double default_distance_threshold(const Network& net, const std::vector<PoolEntry>& pool);
/// 60% of the pool, at least one.
std::size_t default_target_count(std::size_t pool_size);

/// Greedy scan in pool order: a bus is accepted iff against every accepted
/// bus it is either not adjacent or farther than the threshold.
CandidateSet diversity_filter(const std::vector<PoolEntry>& pool, const Network& net, double threshold,
                              std::size_t target);

struct StatParams {
  StressWeights weights;
  std::size_t window_days = 7;
  double alpha_eol = 1.0;
  int n_max_top = 5;
  int n_min_bottom = 1;
  int k_max = 10;
  std::optional<double> distance_threshold;
  std::optional<std::size_t> target_count;
  std::uint64_t seed = 42;

  void validate() const;
};

struct SpatialResult {
  std::vector<NodeFeatures> features;
  ClusterResult clusters;
  std::vector<PoolEntry> pool;
  CandidateSet candidates;
  std::size_t snapshot_hour = 0;
};

/// Features for every violating bus, clustering, pool and diversity filter.
/// The sensitivity snapshot is the hour of maximum total severity.
SpatialResult spatial_targeting(const Network& net, const LoadProfileSet& profiles,
                                const std::vector<ViolationRecord>& records, const StatParams& params,
                                const conic::SolverConfig& cfg = {}, unsigned threads = 0);

}  // namespace pvm
