#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pvm {

using Points = std::vector<std::vector<double>>;

struct KMeansResult {
  std::vector<int> labels;
  Points centers;
  double inertia = 0.0;
  /// inertia after each Lloyd iteration of the returned run
  std::vector<double> inertia_trace;
};

/// Lloyd's algorithm from k-means++ seeds. `restarts` independent seedings
/// are drawn from one seeded stream; the lowest-inertia run is kept.
KMeansResult kmeans(const Points& x, int k, std::uint64_t seed, int restarts = 10, int max_iter = 300);

/// Mean silhouette over all points. Points in singleton clusters score 0.
double silhouette(const Points& x, const std::vector<int>& labels);

/// Column-wise z-score; constant columns become 0.
Points standardize(const Points& x);

}  // namespace pvm
