#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "spqa/engine/interpolation.hpp"
#include "spqa/engine/ode.hpp"
#include "spqa/engine/sdac.hpp"
#include "spqa/models/driven_model.hpp"

namespace spqa {

enum class ScheduleKind { linear, epsilon_fixed };

inline std::string to_string(ScheduleKind k) { return k == ScheduleKind::linear ? "linear" : "epsilon_fixed"; }

struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::epsilon_fixed;
  double start = 0.0;
  double end = 1.0;
  double epsilon = 0.1;   // epsilon_fixed
  double duration = 1.0;  // linear
  TargetPolicy targets;
  double tolerance = 1e-8;  // relative per-step error of the R(t) integration
  double rate_cap = 1e3;
  int source_level = 1;
  int initial_knots = 33;
  int max_knots = 8193;
  double knot_agreement = 0.005;  // interpolated vs direct rate
  int min_samples = 400;          // lower bound on stored (t, R, v) samples

  void validate() const {
    if (kind == ScheduleKind::epsilon_fixed && !(epsilon > 0.0)) {
      throw ConfigurationError("must be positive for epsilon_fixed schedules", "schedule.epsilon");
    }
    if (kind == ScheduleKind::linear && !(duration > 0.0)) {
      throw ConfigurationError("must be positive for linear schedules", "schedule.duration");
    }
    if (!(tolerance > 0.0)) throw ConfigurationError("must be positive", "schedule.tolerance");
    if (!(rate_cap > 0.0)) throw ConfigurationError("must be positive", "schedule.rate_cap");
    if (source_level < 1) throw ConfigurationError("levels are numbered from 1", "schedule.source_level");
    if (initial_knots < 3) throw ConfigurationError("need at least 3 knots", "schedule.initial_knots");
    if (!std::isfinite(start) || !std::isfinite(end)) throw ConfigurationError("must be finite", "schedule.start/end");
  }
};

struct ScheduleSample {
  double t = 0.0;
  double param = 0.0;
  double rate = 0.0;
};

/// Sampled sweep R(t) on [0, T]; R(t) between samples is the cubic Hermite
/// interpolant through (t_k, R_k) with slopes v_k.
class SweepSchedule {
 public:
  SweepSchedule() = default;
  SweepSchedule(ScheduleConfig config, std::vector<ScheduleSample> samples)
      : config_(std::move(config)), samples_(std::move(samples)) {
    if (samples_.empty()) throw ConfigurationError("schedule has no samples");
    if (samples_.front().t != 0.0) throw ConfigurationError("schedule must start at t = 0");
    for (std::size_t i = 1; i < samples_.size(); ++i) {
      if (!(samples_[i].t > samples_[i - 1].t)) throw ConfigurationError("schedule times must increase strictly");
    }
    if (samples_.size() >= 2) {
      std::vector<double> t, r, v;
      for (const auto& s : samples_) {
        t.push_back(s.t);
        r.push_back(s.param);
        v.push_back(s.rate);
      }
      curve_ = CubicHermite(std::move(t), std::move(r), std::move(v));
    }
  }

  /// Zero-duration schedule parked at one parameter value.
  static SweepSchedule stationary(double param) {
    ScheduleConfig cfg;
    cfg.kind = ScheduleKind::linear;
    cfg.start = cfg.end = param;
    cfg.duration = 0.0;
    return SweepSchedule(cfg, {{0.0, param, 0.0}});
  }

  const ScheduleConfig& config() const noexcept { return config_; }
  const std::vector<ScheduleSample>& samples() const noexcept { return samples_; }
  double duration() const noexcept { return samples_.back().t; }
  double start() const noexcept { return samples_.front().param; }
  double end() const noexcept { return samples_.back().param; }

  double param_at(double t) const {
    if (samples_.size() == 1) return samples_.front().param;
    return curve_(std::clamp(t, 0.0, duration()));
  }

  double rate_at(double t) const {
    if (samples_.size() == 1) return 0.0;
    return curve_.derivative(std::clamp(t, 0.0, duration()));
  }

  // Set by the epsilon-fixed builder.
  bool rate_capped = false;
  double capped_fraction = 0.0;  // share of rate knots hitting the cap
  std::size_t knot_count = 0;

 private:
  ScheduleConfig config_;
  std::vector<ScheduleSample> samples_;
  CubicHermite curve_;
};

inline SweepSchedule build_linear_schedule(const ScheduleConfig& cfg) {
  cfg.validate();
  if (cfg.kind != ScheduleKind::linear) throw ConfigurationError("expected kind = linear", "schedule.kind");
  const double v = (cfg.end - cfg.start) / cfg.duration;
  const int n = std::max(cfg.min_samples, 1);
  std::vector<ScheduleSample> samples;
  for (int k = 0; k <= n; ++k) {
    const double t = cfg.duration * k / n;
    samples.push_back({t, k == n ? cfg.end : cfg.start + v * t, v});
  }
  return SweepSchedule(cfg, std::move(samples));
}

namespace detail {

/// 8-point Gauss-Legendre on [a, b].
template <class F>
double gauss_legendre(F&& f, double a, double b) {
  static constexpr std::array<double, 4> x = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                              0.9602898564975363};
  static constexpr std::array<double, 4> w = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                              0.1012285362903763};
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += w[i] * (f(mid - half * x[i]) + f(mid + half * x[i]));
  return half * sum;
}

}  // namespace detail

/// Integrates dR/dt = v(R) with v from the fixed-epsilon rule, so that the
/// adiabatic parameter stays at cfg.epsilon along the whole sweep.
inline SweepSchedule build_epsilon_fixed_schedule(const SectorSolver& solver, const ScheduleConfig& cfg) {
  cfg.validate();
  if (cfg.kind != ScheduleKind::epsilon_fixed) {
    throw ConfigurationError("expected kind = epsilon_fixed", "schedule.kind");
  }
  if (cfg.start == cfg.end) {
    SweepSchedule s = SweepSchedule::stationary(cfg.start);
    return s;
  }
  const double direction = cfg.end > cfg.start ? 1.0 : -1.0;
  const double lo = std::min(cfg.start, cfg.end), hi = std::max(cfg.start, cfg.end);
  const HermitianOperator& dh = solver.hamiltonian().derivative(0);

  std::map<double, RateResult> cache;
  auto direct_rate = [&](double r) {
    auto it = cache.find(r);
    if (it != cache.end()) return it->second;
    const RateResult res = rate_for_epsilon(solver.solve(r), dh, cfg.epsilon, cfg.source_level, cfg.targets,
                                            direction, cfg.rate_cap);
    if (!(std::abs(res.rate) > 0.0) || res.rate * direction <= 0.0) {
      throw OrientationError("sweeping rate vanishes or points away from the end value at R = " +
                             std::to_string(r));
    }
    cache.emplace(r, res);
    return res;
  };

  // Knot density is doubled until interpolated and direct rates agree.
  std::vector<double> knots(static_cast<std::size_t>(cfg.initial_knots));
  for (int i = 0; i < cfg.initial_knots; ++i) {
    knots[static_cast<std::size_t>(i)] = i == cfg.initial_knots - 1 ? hi : lo + (hi - lo) * i / (cfg.initial_knots - 1);
  }
  CubicHermite speed;
  while (true) {
    std::vector<double> v;
    for (double r : knots) v.push_back(std::abs(direct_rate(r).rate));
    speed = pchip(knots, v);
    std::vector<double> refined;
    bool agree = true;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
      const double mid = 0.5 * (knots[i] + knots[i + 1]);
      const double exact = std::abs(direct_rate(mid).rate);
      if (std::abs(speed(mid) - exact) > cfg.knot_agreement * exact) agree = false;
      refined.push_back(knots[i]);
      refined.push_back(mid);
    }
    refined.push_back(knots.back());
    if (agree) break;
    if (static_cast<int>(refined.size()) > cfg.max_knots) {
      throw NumericalError("rate interpolation did not converge within " + std::to_string(cfg.max_knots) + " knots");
    }
    knots = std::move(refined);
  }

  std::size_t capped = 0;
  for (double r : knots) capped += cache.at(r).capped ? 1 : 0;

  const double max_speed = *std::max_element(speed.values().begin(), speed.values().end());
  OdeOptions opt;
  opt.rtol = cfg.tolerance;
  opt.atol = cfg.tolerance * (hi - lo);
  opt.max_step = (hi - lo) / (std::max(cfg.min_samples, 1) * max_speed);

  auto rate_of = [&](double r) { return direction * speed(std::clamp(r, lo, hi)); };
  std::vector<ScheduleSample> samples{{0.0, cfg.start, rate_of(cfg.start)}};
  RVector y0(1);
  y0(0) = cfg.start;
  integrate_dopri5([&](double, const RVector& y) { return RVector::Constant(1, rate_of(y(0))); }, 0.0, y0,
                   std::numeric_limits<double>::infinity(), opt, [&](double t, const RVector& y) {
                     if ((y(0) - cfg.end) * direction >= 0.0) return false;
                     samples.push_back({t, y(0), rate_of(y(0))});
                     return true;
                   });
  // Remaining time from the last sample to the end value.
  const ScheduleSample& last = samples.back();
  const double a = std::min(last.param, cfg.end), b = std::max(last.param, cfg.end);
  const double t_end =
      last.t + detail::gauss_legendre([&](double r) { return 1.0 / speed(std::clamp(r, lo, hi)); }, a, b);
  samples.push_back({t_end, cfg.end, rate_of(cfg.end)});

  SweepSchedule out(cfg, std::move(samples));
  out.rate_capped = capped > 0;
  out.capped_fraction = static_cast<double>(capped) / static_cast<double>(knots.size());
  out.knot_count = knots.size();
  return out;
}

inline SweepSchedule build_epsilon_fixed_schedule(const DrivenModel& model, const ScheduleConfig& cfg) {
  return build_epsilon_fixed_schedule(model.sector_solver(8), cfg);
}

inline SweepSchedule build_schedule(const SectorSolver& solver, const ScheduleConfig& cfg) {
  return cfg.kind == ScheduleKind::linear ? build_linear_schedule(cfg) : build_epsilon_fixed_schedule(solver, cfg);
}

}  // namespace spqa
