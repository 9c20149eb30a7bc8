#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "spqa/core/types.hpp"

namespace spqa {

namespace detail {

inline std::size_t bracket(const std::vector<double>& x, double at) {
  if (at <= x.front()) return 0;
  if (at >= x.back()) return x.size() - 2;
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  return static_cast<std::size_t>(it - x.begin()) - 1;
}

inline double hermite(double x0, double x1, double y0, double y1, double d0, double d1, double at) {
  const double h = x1 - x0;
  const double s = (at - x0) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1;
}

inline double hermite_slope(double x0, double x1, double y0, double y1, double d0, double d1, double at) {
  const double h = x1 - x0;
  const double s = (at - x0) / h;
  const double s2 = s * s;
  return ((6 * s2 - 6 * s) * y0 + (6 * s - 6 * s2) * y1) / h + (3 * s2 - 4 * s + 1) * d0 + (3 * s2 - 2 * s) * d1;
}

}  // namespace detail

/// Piecewise cubic Hermite interpolant with given node slopes.
class CubicHermite {
 public:
  CubicHermite() = default;
  CubicHermite(std::vector<double> x, std::vector<double> y, std::vector<double> slopes)
      : x_(std::move(x)), y_(std::move(y)), d_(std::move(slopes)) {
    if (x_.size() < 2 || y_.size() != x_.size() || d_.size() != x_.size()) {
      throw ConfigurationError("Hermite interpolation needs >= 2 nodes with values and slopes");
    }
    for (std::size_t i = 1; i < x_.size(); ++i) {
      if (!(x_[i] > x_[i - 1])) throw ConfigurationError("interpolation nodes must be strictly increasing");
    }
  }

  double operator()(double at) const {
    const std::size_t i = detail::bracket(x_, at);
    return detail::hermite(x_[i], x_[i + 1], y_[i], y_[i + 1], d_[i], d_[i + 1], at);
  }

  double derivative(double at) const {
    const std::size_t i = detail::bracket(x_, at);
    return detail::hermite_slope(x_[i], x_[i + 1], y_[i], y_[i + 1], d_[i], d_[i + 1], at);
  }

  const std::vector<double>& nodes() const noexcept { return x_; }
  const std::vector<double>& values() const noexcept { return y_; }
  const std::vector<double>& slopes() const noexcept { return d_; }

 private:
  std::vector<double> x_, y_, d_;
};

/// Monotone piecewise-cubic interpolation (Fritsch-Carlson slopes with the
/// weighted harmonic mean, as in SciPy's PchipInterpolator). Never
/// overshoots the data, so positive samples give a positive interpolant.
inline CubicHermite pchip(std::vector<double> x, std::vector<double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw ConfigurationError("pchip needs >= 2 nodes");
  std::vector<double> h(n - 1), delta(n - 1), d(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x[i + 1] - x[i];
    delta[i] = (y[i + 1] - y[i]) / h[i];
  }
  if (n == 2) {
    d[0] = d[1] = delta[0];
    return CubicHermite(std::move(x), std::move(y), std::move(d));
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      d[i] = 0.0;
    } else {
      const double w1 = 2 * h[i] + h[i - 1];
      const double w2 = h[i] + 2 * h[i - 1];
      d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  auto end_slope = [](double h0, double h1, double m0, double m1) {
    double s = ((2 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if (s * m0 <= 0.0) {
      s = 0.0;
    } else if (m0 * m1 < 0.0 && std::abs(s) > std::abs(3 * m0)) {
      s = 3 * m0;
    }
    return s;
  };
  d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  return CubicHermite(std::move(x), std::move(y), std::move(d));
}

}  // namespace spqa
