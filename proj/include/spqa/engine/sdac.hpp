#pragma once

// Symmetry-dependent adiabatic condition. With hbar = 1 and a single swept
// parameter R with rate v,
//   eps(t) = max_n |v <phi_m| dH/dR |phi_n>| / (E_m - E_n)^2
// where n only runs over levels in the same symmetry sector as m. The rate
// that holds eps fixed is the inverse relation, minimized over targets.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "spqa/core/sectors.hpp"

namespace spqa {

struct TargetPolicy {
  enum class Kind { nearest_same_sector, k_nearest_same_sector };
  Kind kind = Kind::nearest_same_sector;
  int k = 1;

  static TargetPolicy nearest() { return {}; }
  static TargetPolicy k_nearest(int k) { return {Kind::k_nearest_same_sector, k}; }

  std::string describe() const {
    return kind == Kind::nearest_same_sector ? "nearest_same_sector"
                                             : "k_nearest_same_sector(" + std::to_string(k) + ")";
  }
};

inline constexpr double kMinTargetGap = 1e-12;
inline constexpr double kMinCoupling = 1e-14;

/// Same-sector levels entering the max/min for source level m.
inline std::vector<int> select_targets(const SectorSpectrum& spectrum, int source, const TargetPolicy& policy) {
  const double e_src = spectrum.level(source).energy;
  std::vector<int> candidates = spectrum.same_sector_levels(source);
  if (candidates.empty()) {
    throw DegenerateTargetError("no same-sector level besides " + std::to_string(source) +
                                " was computed; increase the number of levels per sector");
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    return std::abs(spectrum.level(a).energy - e_src) < std::abs(spectrum.level(b).energy - e_src);
  });
  const std::size_t keep =
      policy.kind == TargetPolicy::Kind::nearest_same_sector ? 1 : static_cast<std::size_t>(std::max(policy.k, 1));
  candidates.resize(std::min(keep, candidates.size()));
  for (int n : candidates) {
    if (std::abs(spectrum.level(n).energy - e_src) < kMinTargetGap) {
      throw DegenerateTargetError("levels " + std::to_string(source) + " and " + std::to_string(n) +
                                  " share a sector and are degenerate; the adiabatic parameter is undefined");
    }
  }
  return candidates;
}

inline double sdac_epsilon(const SectorSpectrum& spectrum, const HermitianOperator& dh_dr, double rate, int source,
                           const TargetPolicy& policy = {}) {
  const Eigenpair& m = spectrum.level(source);
  double eps = 0.0;
  for (int n : select_targets(spectrum, source, policy)) {
    const Eigenpair& t = spectrum.level(n);
    const double gap = m.energy - t.energy;
    eps = std::max(eps, std::abs(rate * dh_dr.element(m.vector, t.vector)) / (gap * gap));
  }
  return eps;
}

inline double sdac_epsilon(const SectorSolver& solver, double param, double rate, int source,
                           const TargetPolicy& policy = {}) {
  return sdac_epsilon(solver.solve(param), solver.hamiltonian().derivative(0), rate, source, policy);
}

struct RateResult {
  double rate = 0.0;  // signed, pointing towards the sweep end
  bool capped = false;
};

/// v = eps * min_n (E_m - E_n)^2 / |<phi_m| dH/dR |phi_n>|, capped at rate_cap
/// where the coupling vanishes. `direction` is +1 or -1.
inline RateResult rate_for_epsilon(const SectorSpectrum& spectrum, const HermitianOperator& dh_dr, double epsilon,
                                   int source, const TargetPolicy& policy, double direction,
                                   double rate_cap = 1e3) {
  if (!(epsilon > 0.0)) throw ConfigurationError("must be positive", "schedule.epsilon");
  const Eigenpair& m = spectrum.level(source);
  double best = std::numeric_limits<double>::infinity();
  for (int n : select_targets(spectrum, source, policy)) {
    const Eigenpair& t = spectrum.level(n);
    const double coupling = std::abs(dh_dr.element(m.vector, t.vector));
    if (coupling < kMinCoupling) continue;
    const double gap = m.energy - t.energy;
    best = std::min(best, epsilon * gap * gap / coupling);
  }
  RateResult out;
  if (!(best <= rate_cap)) {
    best = rate_cap;
    out.capped = true;
  }
  out.rate = (direction < 0 ? -1.0 : 1.0) * best;
  return out;
}

inline RateResult rate_for_epsilon(const SectorSolver& solver, double param, double epsilon, int source,
                                   const TargetPolicy& policy, double direction, double rate_cap = 1e3) {
  return rate_for_epsilon(solver.solve(param), solver.hamiltonian().derivative(0), epsilon, source, policy, direction,
                          rate_cap);
}

}  // namespace spqa
