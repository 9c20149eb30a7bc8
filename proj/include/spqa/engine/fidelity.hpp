#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "spqa/engine/propagator.hpp"
#include "spqa/engine/sdac.hpp"

namespace spqa {

struct AnalyticBounds {
  double f1_lower = 1.0;  // floor on the ground-state fidelity
  double f3_upper = 0.0;  // ceiling on the leak into the nearest same-sector level
};

inline AnalyticBounds analytic_bounds(double eps) {
  if (!(eps >= 0.0)) throw ConfigurationError("must be non-negative", "epsilon");
  const double e2 = eps * eps;
  const double d = 1.0 + 4.0 * e2;
  const double a = 1.0 - 8.0 * e2 / d;
  return {a * a, 16.0 * e2 / (d * d)};
}

struct FidelityOptions {
  int source_level = 1;
  TargetPolicy targets;
  int energy_levels = 6;  // E_1..E_k recorded per sample
};

struct FidelityTrace {
  std::vector<double> times, params, rates, eps_inst;
  std::vector<int> tracked;            // global level numbers
  std::vector<double> tracked_labels;  // sector label of each tracked level at t = 0
  std::vector<std::vector<double>> fidelity;  // [sample][tracked k]
  std::vector<std::vector<double>> energies;  // [sample][level - 1]
  std::vector<double> off_sector_weight;      // weight of psi outside the initial sector
  int source_level = 1;
  double source_label = 1.0;

  std::size_t size() const noexcept { return times.size(); }

  std::size_t column_of(int level) const {
    const auto it = std::find(tracked.begin(), tracked.end(), level);
    if (it == tracked.end()) throw ConfigurationError("level " + std::to_string(level) + " is not tracked");
    return static_cast<std::size_t>(it - tracked.begin());
  }

  std::vector<double> column(int level) const {
    const std::size_t k = column_of(level);
    std::vector<double> out;
    for (const auto& row : fidelity) out.push_back(row[k]);
    return out;
  }

  double min_of(int level) const {
    const auto c = column(level);
    return *std::min_element(c.begin(), c.end());
  }
  double max_of(int level) const {
    const auto c = column(level);
    return *std::max_element(c.begin(), c.end());
  }
};

inline int fidelity_levels_needed(const std::vector<int>& tracked, const FidelityOptions& opt) {
  const int top = tracked.empty() ? 1 : *std::max_element(tracked.begin(), tracked.end());
  return std::max({top, opt.energy_levels, opt.source_level + 1}) + 2;
}

/// Projects every stored state on the instantaneous eigenstates of the
/// bias-free model at R(t). `solver` must resolve enough levels.
inline FidelityTrace fidelity_trace(const EvolutionTrajectory& traj, const SectorSolver& solver,
                                    std::vector<int> tracked, const FidelityOptions& opt = {}) {
  if (tracked.empty()) throw ConfigurationError("no tracked levels", "tracking.levels");
  for (int n : tracked) {
    if (n < 1) throw ConfigurationError("levels are numbered from 1", "tracking.levels");
  }
  if (!traj.states.empty() && traj.states.front().size() != solver.hamiltonian().dim()) {
    throw ConfigurationError("trajectory and model dimensions differ");
  }
  if (solver.levels_per_sector() > 0 && solver.levels_per_sector() < fidelity_levels_needed(tracked, opt) - 2) {
    throw ConfigurationError("sector solver resolves too few levels for the tracked set");
  }
  const HermitianOperator& dh = solver.hamiltonian().derivative(0);

  FidelityTrace out;
  out.tracked = std::move(tracked);
  out.source_level = opt.source_level;
  SectorSpectrum prev;
  std::size_t source_sector = 0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double t = traj.times[i];
    const double r = traj.schedule.param_at(t);
    const double v = traj.schedule.rate_at(t);
    SectorSpectrum spec = solver.solve(r, i == 0 ? nullptr : &prev);
    const CVector& psi = traj.states[i];
    if (i == 0) {
      source_sector = spec.level(opt.source_level).sector;
      out.source_label = spec.level(opt.source_level).label;
      for (int n : out.tracked) out.tracked_labels.push_back(spec.level(n).label);
    }
    out.times.push_back(t);
    out.params.push_back(r);
    out.rates.push_back(v);
    out.eps_inst.push_back(sdac_epsilon(spec, dh, v, opt.source_level, opt.targets));
    std::vector<double> f;
    for (int n : out.tracked) f.push_back(std::norm(spec.level(n).vector.dot(psi)));
    out.fidelity.push_back(std::move(f));
    std::vector<double> e;
    for (int n = 1; n <= opt.energy_levels; ++n) e.push_back(spec.level(n).energy);
    out.energies.push_back(std::move(e));
    out.off_sector_weight.push_back(std::max(0.0, psi.squaredNorm() - solver.basis().weight(psi, source_sector)));
    prev = std::move(spec);
  }
  return out;
}

inline FidelityTrace fidelity_trace(const EvolutionTrajectory& traj, const DrivenModel& model, std::vector<int> tracked,
                                    const FidelityOptions& opt = {}) {
  const SectorSolver solver = model.sector_solver(fidelity_levels_needed(tracked, opt));
  return fidelity_trace(traj, solver, std::move(tracked), opt);
}

/// Trapezoidal time average of samples over [t_star, times.back()].
inline double average_fidelity(const std::vector<double>& times, const std::vector<double>& values, double t_star) {
  if (times.size() != values.size() || times.size() < 2) throw ConfigurationError("need >= 2 samples to average");
  const double t_end = times.back();
  if (!(t_star >= times.front() && t_star < t_end)) throw ConfigurationError("averaging start must lie in [0, T)");
  std::size_t i = 0;
  while (times[i + 1] <= t_star) ++i;
  // Linear value at t_star, then whole intervals.
  const double w = (t_star - times[i]) / (times[i + 1] - times[i]);
  double prev_t = t_star, prev_f = values[i] + w * (values[i + 1] - values[i]);
  double area = 0.0;
  for (std::size_t k = i + 1; k < times.size(); ++k) {
    area += 0.5 * (times[k] - prev_t) * (values[k] + prev_f);
    prev_t = times[k];
    prev_f = values[k];
  }
  return area / (t_end - t_star);
}

inline double average_fidelity(const FidelityTrace& trace, double t_star, int level = 1) {
  return average_fidelity(trace.times, trace.column(level), t_star);
}

inline std::vector<double> median5(const std::vector<double>& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t lo = i >= 2 ? i - 2 : 0, hi = std::min(x.size(), i + 3);
    std::vector<double> w(x.begin() + static_cast<std::ptrdiff_t>(lo), x.begin() + static_cast<std::ptrdiff_t>(hi));
    std::nth_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(w.size() / 2), w.end());
    out[i] = w[w.size() / 2];
  }
  return out;
}

struct TStar {
  double t_star = 0.0;
  double crossing_time = 0.0;
  bool flagged = false;  // no post-crossing oscillation found
};

inline constexpr const char* kTStarRule =
    "midpoint of first local min and next local max of median-5 smoothed F_1 after R crosses the transition";

/// Averaging onset: after R(t) passes `transition`, the smoothed fidelity's
/// first local minimum t_a and the next local maximum t_b give (t_a + t_b)/2.
inline TStar detect_t_star(const std::vector<double>& times, const std::vector<double>& params,
                           const std::vector<double>& f, double transition) {
  if (times.size() != f.size() || params.size() != f.size() || f.size() < 3) {
    throw ConfigurationError("T* detection needs >= 3 aligned samples");
  }
  const double dir = params.back() >= params.front() ? 1.0 : -1.0;
  std::size_t c = 0;
  while (c < params.size() && (params[c] - transition) * dir < 0.0) ++c;
  if (c == params.size()) throw ConfigurationError("the sweep never reaches the transition value");
  TStar out;
  out.crossing_time = times[c];
  const std::vector<double> s = median5(f);
  const std::size_t n = s.size();
  std::size_t a = n;
  for (std::size_t i = std::max<std::size_t>(c, 1); i + 1 < n; ++i) {
    if (s[i] < s[i - 1] && s[i] <= s[i + 1]) {
      a = i;
      break;
    }
  }
  std::size_t b = n;
  if (a < n) {
    for (std::size_t i = a + 1; i + 1 < n; ++i) {
      if (s[i] > s[i - 1] && s[i] >= s[i + 1]) {
        b = i;
        break;
      }
    }
  }
  if (b == n) {
    out.flagged = true;
    out.t_star = out.crossing_time;
  } else {
    out.t_star = 0.5 * (times[a] + times[b]);
  }
  return out;
}

inline TStar detect_t_star(const FidelityTrace& trace, double transition, int level = 1) {
  return detect_t_star(trace.times, trace.params, trace.column(level), transition);
}

}  // namespace spqa
