#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "spqa/core/types.hpp"

namespace spqa {

/// Piecewise-constant random bias eta(t): an independent uniform draw from
/// [-amplitude, amplitude) on every interval [k*dt, (k+1)*dt).
struct NoiseProcess {
  double amplitude = 0.0;
  double resample_interval = 1.0;
  std::uint64_t seed = 0;
  double horizon = 0.0;
  std::vector<double> samples;

  double at(double t) const {
    if (samples.empty()) return 0.0;
    const auto k = static_cast<std::size_t>(std::max(0.0, std::floor(t / resample_interval)));
    return samples[std::min(k, samples.size() - 1)];
  }

  /// First switching time strictly after t, or +inf.
  double next_switch(double t) const {
    if (amplitude == 0.0) return INFINITY;
    return (std::floor(t / resample_interval) + 1.0) * resample_interval;
  }
};

inline NoiseProcess sample_noise(double amplitude, double resample_interval, std::uint64_t seed, double horizon) {
  if (!(amplitude >= 0.0)) throw ConfigurationError("must be non-negative", "noise.amplitude");
  if (!(resample_interval > 0.0)) throw ConfigurationError("must be positive", "noise.interval");
  NoiseProcess p{amplitude, resample_interval, seed, horizon, {}};
  const auto count = static_cast<std::size_t>(std::ceil(std::max(horizon, 0.0) / resample_interval)) + 1;
  p.samples.resize(count, 0.0);
  if (amplitude == 0.0) return p;
  // Raw 64-bit draws mapped to [0,1) by hand: std::uniform_real_distribution
  // is not specified bit-for-bit across standard libraries.
  std::mt19937_64 rng(seed);
  for (auto& s : p.samples) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    s = amplitude * (2.0 * u - 1.0);
  }
  return p;
}

}  // namespace spqa
