#pragma once

// Adaptive Dormand-Prince 5(4) integrator for real-valued systems.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spqa/core/types.hpp"

namespace spqa {

struct OdeOptions {
  double rtol = 1e-8;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0 = pick from the tolerance
  double max_step = std::numeric_limits<double>::infinity();
  double min_step = 1e-14;
  std::size_t max_steps = 2'000'000;
};

struct OdeStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Integrates y' = f(t, y) from t0 towards t_end. After every accepted step
/// observer(t, y) is called; returning false stops the integration early.
/// Steps never cross t_end.
template <class Rhs, class Observer>
OdeStats integrate_dopri5(Rhs&& f, double t0, RVector y, double t_end, const OdeOptions& opt, Observer&& observer) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  OdeStats stats;
  double t = t0;
  RVector k1 = f(t, y);
  double h = opt.initial_step;
  if (h <= 0.0) {
    const double scale = opt.atol + opt.rtol * y.cwiseAbs().maxCoeff();
    const double slope = std::max(k1.cwiseAbs().maxCoeff(), 1e-300);
    h = 0.01 * scale / slope;
    h = std::clamp(h, 1e-10 * std::max(1.0, std::abs(t_end - t0)), std::abs(t_end - t0));
  }
  h = std::min(h, opt.max_step);

  while (t < t_end) {
    if (stats.accepted + stats.rejected >= opt.max_steps) {
      throw NumericalError("ODE integration exceeded the step budget");
    }
    h = std::min(h, t_end - t);
    const RVector k2 = f(t + c2 * h, y + h * a21 * k1);
    const RVector k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const RVector k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const RVector k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const RVector k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const RVector y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const RVector k7 = f(t + h, y_new);
    const RVector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double norm = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y(i)), std::abs(y_new(i)));
      norm += (err(i) / sc) * (err(i) / sc);
    }
    norm = std::sqrt(norm / static_cast<double>(y.size()));

    if (norm <= 1.0) {
      const bool last = (t + h >= t_end);
      t = last ? t_end : t + h;
      y = y_new;
      k1 = k7;
      ++stats.accepted;
      if (!observer(t, static_cast<const RVector&>(y))) break;
      const double grow = norm == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(norm, -0.2));
      h = std::min(h * grow, opt.max_step);
    } else {
      ++stats.rejected;
      h *= std::max(0.2, 0.9 * std::pow(norm, -0.2));
      if (h < opt.min_step) {
        throw NumericalError("ODE step size underflow at t = " + std::to_string(t));
      }
    }
  }
  return stats;
}

}  // namespace spqa
