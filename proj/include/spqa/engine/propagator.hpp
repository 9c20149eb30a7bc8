#pragma once

// Time stepping of i dpsi/dt = H(t) psi. Each step applies exp(-i H(t_mid) h)
// exactly up to a Chebyshev truncation at round-off level, so the step is
// unitary and second order in h for time-dependent H.

#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "spqa/engine/schedule.hpp"
#include "spqa/models/driven_model.hpp"
#include "spqa/models/noise.hpp"

namespace spqa {

using SparseCMatrix = Eigen::SparseMatrix<Complex>;

inline SparseCMatrix to_sparse(const CMatrix& m) { return m.sparseView(0.0, 1.0); }

struct StepControl {
  enum class Mode { adaptive, fixed };
  Mode mode = Mode::adaptive;
  double tolerance = 1e-8;  // local error per step (adaptive)
  double fixed_step = 0.0;  // upper bound on the step (fixed)
  double initial_step = 0.0;
  double min_step = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  double norm_drift_limit = 1e-10;

  static StepControl fixed(double h) {
    StepControl c;
    c.mode = Mode::fixed;
    c.fixed_step = h;
    return c;
  }

  void validate() const {
    if (mode == Mode::adaptive && !(tolerance > 0.0)) throw ConfigurationError("must be positive", "propagation.tolerance");
    if (mode == Mode::fixed && !(fixed_step > 0.0)) throw ConfigurationError("must be positive", "propagation.fixed_step");
    if (!(min_step > 0.0)) throw ConfigurationError("must be positive", "propagation.min_step");
  }
};

struct PropagationStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t matvecs = 0;
  double max_step_drift = 0.0;  // largest | |psi'| - |psi| | of a single step
  double max_norm_error = 0.0;  // largest | |psi(t)| - 1 | at any step
};

struct EvolutionTrajectory {
  std::vector<double> times;
  std::vector<CVector> states;
  SweepSchedule schedule;
  PropagationStats stats;
};

/// Sparse H(t) = C + R(t) D + eta(t) B with the matrices converted once.
class SparseHamiltonian {
 public:
  explicit SparseHamiltonian(const DrivenModel& model)
      : constant_(to_sparse(model.hamiltonian.constant_part().matrix())),
        driven_(to_sparse(model.hamiltonian.derivative(0).matrix())),
        bias_(to_sparse(model.bias_operator.matrix())) {
    if (model.hamiltonian.param_count() != 1) {
      throw ConfigurationError("the propagator sweeps exactly one parameter");
    }
  }

  SparseCMatrix at(double param, double eta) const {
    SparseCMatrix h = constant_ + param * driven_;
    if (eta != 0.0) h += eta * bias_;
    return h;
  }

  Eigen::Index dim() const { return constant_.rows(); }

 private:
  SparseCMatrix constant_, driven_, bias_;
};

namespace detail {

/// Gershgorin enclosure [lo, hi] of a Hermitian sparse matrix.
inline std::pair<double, double> gershgorin(const SparseCMatrix& h) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::vector<double> centre(static_cast<std::size_t>(h.rows()), 0.0), radius(centre.size(), 0.0);
  for (Eigen::Index k = 0; k < h.outerSize(); ++k) {
    for (SparseCMatrix::InnerIterator it(h, k); it; ++it) {
      const auto r = static_cast<std::size_t>(it.row());
      if (it.row() == it.col()) {
        centre[r] += it.value().real();
      } else {
        radius[r] += std::abs(it.value());
      }
    }
  }
  for (std::size_t i = 0; i < centre.size(); ++i) {
    lo = std::min(lo, centre[i] - radius[i]);
    hi = std::max(hi, centre[i] + radius[i]);
  }
  return {lo, hi};
}

/// psi <- exp(-i h tau) psi by Chebyshev expansion on the Gershgorin interval.
inline CVector chebyshev_exp(const SparseCMatrix& h, const CVector& psi, double tau, std::size_t& matvecs) {
  auto [lo, hi] = gershgorin(h);
  const double centre = 0.5 * (hi + lo);
  const double radius = std::max(0.5 * (hi - lo), 1e-300);
  const double z = radius * tau;
  // Bessel coefficients decay superexponentially once k > z.
  const int max_terms = static_cast<int>(z + 20.0 * std::cbrt(std::max(z, 1.0)) + 40.0);

  auto apply = [&](const CVector& v) {
    ++matvecs;
    return CVector((h * v - centre * v) / radius);
  };

  CVector t_prev = psi;
  CVector t_cur = apply(psi);
  CVector sum = std::cyl_bessel_j(0.0, z) * psi;
  const Complex minus_i(0.0, -1.0);
  Complex phase = minus_i;
  sum += 2.0 * phase * std::cyl_bessel_j(1.0, z) * t_cur;
  int k = 2;
  for (; k <= max_terms; ++k) {
    CVector t_next = 2.0 * apply(t_cur) - t_prev;
    phase *= minus_i;
    const double c = std::cyl_bessel_j(static_cast<double>(k), z);
    sum += 2.0 * phase * c * t_next;
    t_prev = std::move(t_cur);
    t_cur = std::move(t_next);
    if (k > z && std::abs(c) < 1e-17) break;
  }
  if (k > max_terms) throw NumericalError("Chebyshev expansion did not converge");
  return std::exp(Complex(0.0, -centre * tau)) * sum;
}

}  // namespace detail

inline std::vector<double> uniform_times(double duration, int count) {
  if (count < 1) throw ConfigurationError("need at least one sample", "output.samples");
  if (count == 1 || duration == 0.0) return {0.0};
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) out[static_cast<std::size_t>(k)] = duration * k / (count - 1);
  out.back() = duration;
  return out;
}

/// Lowest-lying eigenvector `level` (1-based) of the bias-free model at R.
inline CVector initial_state(const DrivenModel& model, double param, int level = 1) {
  const SectorSolver solver = model.sector_solver(level + 1);
  return solver.solve(param).level(level).vector;
}

/// Propagates psi0 along the schedule. States are stored at `sample_times`
/// (sorted, within [0, T]); steps never straddle a sample time or a noise
/// switching time.
inline EvolutionTrajectory propagate(const DrivenModel& model, const SweepSchedule& schedule, const CVector& psi0,
                                     const std::vector<double>& sample_times, const NoiseProcess* noise = nullptr,
                                     const StepControl& control = {}) {
  control.validate();
  if (psi0.size() != model.dim()) throw ConfigurationError("initial state has the wrong dimension");
  if (std::abs(psi0.norm() - 1.0) > 1e-12) throw ConfigurationError("initial state is not normalized");
  const double T = schedule.duration();
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    if (sample_times[i] < 0.0 || sample_times[i] > T || (i > 0 && !(sample_times[i] > sample_times[i - 1]))) {
      throw ConfigurationError("sample times must increase within [0, T]");
    }
  }

  const SparseHamiltonian ham(model);
  EvolutionTrajectory traj{{}, {}, schedule, {}};
  CVector psi = psi0;
  double t = 0.0;
  std::size_t next_sample = 0;
  auto store_due = [&] {
    while (next_sample < sample_times.size() && sample_times[next_sample] <= t) {
      traj.times.push_back(sample_times[next_sample]);
      traj.states.push_back(psi);
      ++next_sample;
    }
  };
  store_due();

  auto eta_at = [&](double time) { return noise ? noise->at(time) : 0.0; };
  auto step = [&](const CVector& v, double t0, double h) {
    const double mid = t0 + 0.5 * h;
    return detail::chebyshev_exp(ham.at(schedule.param_at(mid), eta_at(mid)), v, h, traj.stats.matvecs);
  };
  auto check_norm = [&](const CVector& before, const CVector& after) {
    const double drift = std::abs(after.norm() - before.norm());
    traj.stats.max_step_drift = std::max(traj.stats.max_step_drift, drift);
    traj.stats.max_norm_error = std::max(traj.stats.max_norm_error, std::abs(after.norm() - 1.0));
    if (drift > control.norm_drift_limit) {
      throw PropagationAccuracyError("norm drift " + std::to_string(drift) + " in one step at t = " + std::to_string(t));
    }
  };

  // Next point a step must not cross.
  auto next_stop = [&] {
    double stop = T;
    if (next_sample < sample_times.size()) stop = std::min(stop, sample_times[next_sample]);
    if (noise) {
      double sw = noise->next_switch(t);
      // t may sit a rounding error below a switch it already reached
      if (sw - t < 1e-12 * noise->resample_interval) sw = noise->next_switch(t + 0.5 * noise->resample_interval);
      stop = std::min(stop, sw);
    }
    return stop;
  };

  if (control.mode == StepControl::Mode::fixed) {
    while (t < T) {
      const double stop = next_stop();
      const double span = stop - t;
      const auto n = static_cast<long>(std::ceil(span / control.fixed_step - 1e-9));
      const double h = span / static_cast<double>(std::max(n, 1L));
      for (long k = 0; k < std::max(n, 1L); ++k) {
        const double t0 = t;
        CVector next = step(psi, t0, h);
        check_norm(psi, next);
        psi = std::move(next);
        t = k + 1 == std::max(n, 1L) ? stop : t0 + h;
        ++traj.stats.accepted;
      }
      store_due();
    }
    return traj;
  }

  double h = control.initial_step > 0.0 ? control.initial_step : T / 1000.0;
  while (t < T) {
    const double stop = next_stop();
    const double h_try = std::min({h, stop - t, control.max_step});
    const bool lands = h_try >= stop - t;
    const CVector full = step(psi, t, h_try);
    const CVector half = step(step(psi, t, 0.5 * h_try), t + 0.5 * h_try, 0.5 * h_try);
    const double err = (full - half).norm() / 3.0;
    if (err <= control.tolerance || h_try <= control.min_step) {
      if (err > control.tolerance) {
        throw PropagationAccuracyError("step size underflow at t = " + std::to_string(t));
      }
      check_norm(psi, half);
      psi = half;
      t = lands ? stop : t + h_try;
      ++traj.stats.accepted;
      store_due();
      const double grow = err == 0.0 ? 2.0 : std::min(2.0, 0.9 * std::cbrt(control.tolerance / err));
      // A step cut short to land on a stop says little about the usable size.
      const bool truncated = lands && h_try < h;
      h = truncated ? h * std::min(grow, 1.0) : h_try * grow;
    } else {
      ++traj.stats.rejected;
      h = std::max(h_try * std::max(0.2, 0.9 * std::cbrt(control.tolerance / err)), 0.5 * control.min_step);
    }
  }
  return traj;
}

}  // namespace spqa
