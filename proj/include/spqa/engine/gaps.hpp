#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "spqa/core/sectors.hpp"
#include "spqa/models/collective_spin.hpp"

namespace spqa {

struct GapMinimum {
  double param = 0.0;
  double gap = 0.0;
};

/// Minimum of E_upper - E_lower over [lo, hi]: coarse scan, then golden
/// section on the bracketing cells down to `tol` in R.
inline GapMinimum min_gap(const SectorSolver& solver, int lower, int upper, double lo, double hi, int coarse = 400,
                          double tol = 1e-6) {
  if (lower < 1 || upper < 1 || lower == upper) throw ConfigurationError("need two distinct levels", "gap.levels");
  if (!(hi > lo)) throw ConfigurationError("empty parameter range", "gap.range");
  if (coarse < 3) throw ConfigurationError("need at least 3 scan points", "gap.coarse");
  auto gap = [&](double r) {
    const SectorSpectrum s = solver.solve(r);
    return s.level(upper).energy - s.level(lower).energy;
  };
  std::vector<double> rs(static_cast<std::size_t>(coarse)), gs(rs.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    rs[i] = i + 1 == rs.size() ? hi : lo + (hi - lo) * static_cast<double>(i) / (coarse - 1);
    gs[i] = gap(rs[i]);
    if (gs[i] < gs[best]) best = i;
  }
  double a = rs[best > 0 ? best - 1 : 0];
  double b = rs[std::min(best + 1, rs.size() - 1)];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double gc = gap(c), gd = gap(d);
  while (b - a > tol) {
    if (gc < gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - inv_phi * (b - a);
      gc = gap(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + inv_phi * (b - a);
      gd = gap(d);
    }
  }
  GapMinimum out{0.5 * (a + b), gap(0.5 * (a + b))};
  if (gs[best] < out.gap) out = {rs[best], gs[best]};
  return out;
}

/// Least-squares slope of log(y) against log(x).
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigurationError("need >= 2 matching points for a fit");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw ConfigurationError("log-log fit needs positive data");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw ConfigurationError("log-log fit needs at least two distinct x values");
  return sxy / sxx;
}

struct GapScaling {
  std::vector<int> sizes;
  std::vector<GapMinimum> minima;
  double exponent = 0.0;
};

/// Exponent of min_B (E_upper - E_lower) against N for the collective Ising model,
/// B scanned over [b_lo, b_hi].
inline GapScaling gap_scaling_exponent(const std::vector<int>& sizes, double coupling, double b_lo = -2.0,
                                       double b_hi = 0.0, int coarse = 400, int lower = 1, int upper = 3) {
  if (sizes.size() < 5) throw ConfigurationError("need at least 5 sizes", "gap.sizes");
  const auto [mn, mx] = std::minmax_element(sizes.begin(), sizes.end());
  if (*mx < 10 * *mn) throw ConfigurationError("sizes must span at least one decade", "gap.sizes");
  GapScaling out;
  std::vector<double> xs, ys;
  for (int n : sizes) {
    const CollectiveSpinModel m = build_collective_ising(n, coupling, 0.0);
    const GapMinimum g = min_gap(m.driven.sector_solver(std::max(lower, upper) + 1), lower, upper, b_lo, b_hi, coarse);
    out.sizes.push_back(n);
    out.minima.push_back(g);
    xs.push_back(n);
    ys.push_back(g.gap);
  }
  out.exponent = log_log_slope(xs, ys);
  return out;
}

}  // namespace spqa
