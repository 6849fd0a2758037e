#include "pvm/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "pvm/common.hpp"

namespace pvm {

namespace {

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

Points seed_plus_plus(const Points& x, int k, std::mt19937_64& rng) {
  const std::size_t n = x.size();
  Points centers;
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  centers.push_back(x[first(rng)]);
  std::vector<double> d(n, std::numeric_limits<double>::infinity());
  while (centers.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = std::min(d[i], dist2(x[i], centers.back()));
      total += d[i];
    }
    if (total <= 0.0) {
      // every point already coincides with a center
      centers.push_back(x[first(rng)]);
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= d[i];
      if (target < 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(x[pick]);
  }
  return centers;
}

KMeansResult lloyd(const Points& x, Points centers, int max_iter) {
  const std::size_t n = x.size(), dim = x[0].size();
  const std::size_t k = centers.size();
  KMeansResult r;
  r.labels.assign(n, -1);
  for (int it = 0; it < max_iter; ++it) {
    bool moved = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = dist2(x[i], centers[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = dist2(x[i], centers[c]);
        if (d < bd) {
          bd = d;
          best = static_cast<int>(c);
        }
      }
      if (r.labels[i] != best) moved = true;
      r.labels[i] = best;
      inertia += bd;
    }
    r.inertia_trace.push_back(inertia);
    if (!moved && it > 0) break;
    Points sum(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[static_cast<std::size_t>(r.labels[i])];
      for (std::size_t j = 0; j < dim; ++j) sum[static_cast<std::size_t>(r.labels[i])][j] += x[i][j];
    }
    // an emptied cluster keeps its previous center
    for (std::size_t c = 0; c < k; ++c)
      if (count[c] > 0)
        for (std::size_t j = 0; j < dim; ++j) centers[c][j] = sum[c][j] / static_cast<double>(count[c]);
  }
  r.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) r.inertia += dist2(x[i], centers[static_cast<std::size_t>(r.labels[i])]);
  r.centers = std::move(centers);
  return r;
}

}  // namespace

KMeansResult kmeans(const Points& x, int k, std::uint64_t seed, int restarts, int max_iter) {
  if (x.empty()) throw InputError("kmeans: no points");
  if (k < 1 || static_cast<std::size_t>(k) > x.size()) throw InputError("kmeans: k must lie in [1, n]");
  if (restarts < 1) throw InputError("kmeans: need at least one restart");
  std::mt19937_64 rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int run = 0; run < restarts; ++run) {
    KMeansResult r = lloyd(x, seed_plus_plus(x, k, rng), max_iter);
    if (r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

double silhouette(const Points& x, const std::vector<int>& labels) {
  const std::size_t n = x.size();
  if (labels.size() != n) throw InputError("silhouette: label count mismatch");
  const int k = n == 0 ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  if (k < 2) throw InputError("silhouette needs at least two clusters");
  std::vector<std::size_t> size(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++size[static_cast<std::size_t>(l)];
  double total = 0.0;
  std::vector<double> sum(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(labels[i]);
    if (size[own] <= 1) continue;
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sum[static_cast<std::size_t>(labels[j])] += std::sqrt(dist2(x[i], x[j]));
    const double a = sum[own] / static_cast<double>(size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sum.size(); ++c)
      if (c != own && size[c] > 0) b = std::min(b, sum[c] / static_cast<double>(size[c]));
    const double m = std::max(a, b);
    total += m > 0.0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

Points standardize(const Points& x) {
  if (x.empty()) return {};
  const std::size_t n = x.size(), dim = x[0].size();
  Points out(n, std::vector<double>(dim, 0.0));
  for (std::size_t j = 0; j < dim; ++j) {
    double mean = 0.0;
    for (const auto& row : x) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& row : x) var += (row[j] - mean) * (row[j] - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    if (sd <= 1e-12 * std::max(1.0, std::fabs(mean))) continue;
    for (std::size_t i = 0; i < n; ++i) out[i][j] = (x[i][j] - mean) / sd;
  }
  return out;
}

}  // namespace pvm
