#include "pvm/kde.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "pvm/common.hpp"

namespace pvm {

Kde::Kde(std::vector<std::vector<double>> samples, double bandwidth_floor) : x_(std::move(samples)) {
  if (x_.size() < kMinSamples)
    throw InputError(fmt::format("density fit needs at least {} samples, got {}", kMinSamples, x_.size()));
  const std::size_t d = x_[0].size();
  if (d == 0) throw InputError("density fit needs at least one dimension");
  for (const auto& p : x_)
    if (p.size() != d) throw InputError("density fit: samples differ in dimension");
  if (!(bandwidth_floor > 0.0)) throw InputError("bandwidth floor must be positive");
  const double n = static_cast<double>(x_.size());
  // Silverman: sigma * (4 / ((d + 2) n))^(1 / (d + 4))
  const double factor = std::pow(4.0 / ((static_cast<double>(d) + 2.0) * n), 1.0 / (static_cast<double>(d) + 4.0));
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (const auto& p : x_) mean += p[j];
    mean /= n;
    double var = 0.0;
    for (const auto& p : x_) var += (p[j] - mean) * (p[j] - mean);
    const double sd = std::sqrt(var / (n - 1.0));
    h_.push_back(std::max(sd * factor, bandwidth_floor));
  }
}

Kde::Kde(std::vector<std::vector<double>> samples, std::vector<double> bandwidths)
    : x_(std::move(samples)), h_(std::move(bandwidths)) {
  if (x_.empty() || h_.empty()) throw InputError("density snapshot is empty");
  for (const auto& p : x_)
    if (p.size() != h_.size()) throw InputError("density snapshot: dimension mismatch");
  for (double h : h_)
    if (!(h > 0.0)) throw InputError("density snapshot: bandwidths must be positive");
}

double Kde::density(const std::vector<double>& at) const {
  if (at.size() != h_.size()) throw InputError("density: dimension mismatch");
  double norm = 1.0;
  for (double h : h_) norm *= h * std::sqrt(2.0 * std::numbers::pi);
  double sum = 0.0;
  for (const auto& p : x_) {
    double e = 0.0;
    for (std::size_t j = 0; j < h_.size(); ++j) {
      const double z = (at[j] - p[j]) / h_[j];
      e += z * z;
    }
    sum += std::exp(-0.5 * e);
  }
  return sum / (static_cast<double>(x_.size()) * norm);
}

std::vector<double> Kde::sample(std::mt19937_64& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, x_.size() - 1);
  std::normal_distribution<double> g;
  std::vector<double> out = x_[pick(rng)];
  for (std::size_t j = 0; j < h_.size(); ++j) out[j] += h_[j] * g(rng);
  return out;
}

}  // namespace pvm
