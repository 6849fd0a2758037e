#pragma once

#include <cstddef>
#include <random>
#include <vector>

namespace pvm {

/// Gaussian product-kernel density with a per-dimension Silverman bandwidth.
class Kde {
 public:
  Kde() = default;
  /// Needs at least `kMinSamples` points of equal dimension. A dimension
  /// with zero spread gets `bandwidth_floor` instead of a zero bandwidth.
  explicit Kde(std::vector<std::vector<double>> samples, double bandwidth_floor = 1e-3);
  /// Rebuilds from stored support points and bandwidths (snapshot files).
  Kde(std::vector<std::vector<double>> samples, std::vector<double> bandwidths);

  static constexpr std::size_t kMinSamples = 10;

  std::size_t dimension() const { return h_.size(); }
  const std::vector<double>& bandwidths() const { return h_; }
  const std::vector<std::vector<double>>& samples() const { return x_; }

  double density(const std::vector<double>& at) const;
  /// Picks a support point uniformly, then adds kernel noise.
  std::vector<double> sample(std::mt19937_64& rng) const;

 private:
  std::vector<std::vector<double>> x_;
  std::vector<double> h_;
};

}  // namespace pvm
