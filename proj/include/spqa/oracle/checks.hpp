#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "spqa/engine/fidelity.hpp"
#include "spqa/engine/ode.hpp"
#include "spqa/engine/propagator.hpp"
#include "spqa/models/collective_spin.hpp"
#include "spqa/oracle/full_space.hpp"

namespace spqa {

struct ValidationReport {
  std::string check;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::vector<std::pair<std::string, double>> parameters;

  ValidationReport(std::string name, double res, double tol, std::vector<std::pair<std::string, double>> params = {})
      : check(std::move(name)), residual(res), tolerance(tol), pass(res < tol), parameters(std::move(params)) {}
};

/// Every collective-sector eigenvalue, shifted by -J/4, must appear in the
/// full product-space spectrum. Residual: worst distance to the nearest
/// full-space eigenvalue.
inline ValidationReport dicke_vs_full_spectrum(int n, double coupling, double field, double bias,
                                               double tolerance = 1e-10) {
  const CollectiveSpinModel coll = build_collective_ising(n, coupling, bias);
  const HermitianOperator hc = assemble(coll.driven.hamiltonian, field);
  const RVector dicke = hermitian_eigen(hc.matrix()).values.array() - coupling / 4.0;

  const HermitianOperator hf = full_space_ising(n, coupling, field, bias);
  Eigen::SelfAdjointEigenSolver<RMatrix> es(hf.matrix().real(), Eigen::EigenvaluesOnly);
  std::vector<double> full(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());

  double worst = 0.0;
  for (Eigen::Index k = 0; k < dicke.size(); ++k) {
    const auto it = std::lower_bound(full.begin(), full.end(), dicke(k));
    double d = std::numeric_limits<double>::infinity();
    if (it != full.end()) d = std::min(d, std::abs(*it - dicke(k)));
    if (it != full.begin()) d = std::min(d, std::abs(*std::prev(it) - dicke(k)));
    worst = std::max(worst, d);
  }
  return {"dicke_vs_full_spectrum", worst, tolerance, {{"N", n}, {"J", coupling}, {"B", field}, {"eta", bias}}};
}

struct HellmannFeynman {
  double finite_difference = 0.0;  // |<phi_m(R)| d phi_n / dR>| by central differences
  double identity = 0.0;           // |<phi_m| dH/dR |phi_n> / (E_n - E_m)|
  double residual = 0.0;           // |difference| of the signed values
};

/// Central-difference check of <phi_m|d phi_n/dR> = <phi_m|dH/dR|phi_n>/(E_n - E_m).
inline HellmannFeynman hellmann_feynman_residual(const SectorSolver& solver, double param, int m, int n,
                                                 double step) {
  if (m == n) throw ConfigurationError("need two different levels");
  if (!(step > 0.0)) throw ConfigurationError("finite-difference step must be positive");
  const SectorSpectrum centre = solver.solve(param);
  const SectorSpectrum plus = solver.solve(param + step, &centre);
  const SectorSpectrum minus = solver.solve(param - step, &centre);
  const Eigenpair& pm = centre.level(m);
  const Eigenpair& pn = centre.level(n);
  const double gap = pn.energy - pm.energy;
  if (std::abs(gap) <= 1e-8) throw ConfigurationError("levels are degenerate; the identity does not apply");
  const Eigenpair* np = plus.find(pn.sector, pn.local_index);
  const Eigenpair* nm = minus.find(pn.sector, pn.local_index);
  if (!np || !nm) throw NumericalError("level lost between neighbouring parameter values");
  for (const Eigenpair* e : {np, nm}) {
    if (std::abs(pn.vector.dot(e->vector)) < 0.5) {
      throw NumericalError("gauge alignment failed (overlap < 0.5); reduce the finite-difference step");
    }
  }
  const Complex fd = pm.vector.dot(np->vector - nm->vector) / (2.0 * step);
  const Complex id = solver.hamiltonian().derivative(0).element(pm.vector, pn.vector) / gap;
  return {std::abs(fd), std::abs(id), std::abs(fd - id)};
}

struct TwoLevelResult {
  std::vector<double> times;
  std::vector<double> p1, pl;  // |a_1|^2, |a_l|^2
  double max_norm_error = 0.0;
};

/// Coefficient equations restricted to {phi_1, phi_l}:
///   a1' = -kappa e^{-i theta} a_l,  a_l' = kappa* e^{i theta} a_1,
///   kappa = v <phi_1|dH/dR|phi_l>/(E_l - E_1),  theta' = E_l - E_1,
/// with eigenvectors carried along in a continuous gauge. Returns the
/// populations at `times`.
inline TwoLevelResult two_level_reduction(const DrivenModel& model, const SweepSchedule& schedule,
                                          const std::vector<double>& times, int level_l = 3, int grid = 801) {
  TwoLevelResult out;
  out.times = times;
  const double T = schedule.duration();
  if (T == 0.0) {
    out.p1.assign(times.size(), 1.0);
    out.pl.assign(times.size(), 0.0);
    return out;
  }
  const SectorSolver solver = model.sector_solver(level_l + 2);
  const HermitianOperator& dh = solver.hamiltonian().derivative(0);
  std::vector<double> tg(static_cast<std::size_t>(grid)), gap(tg.size()), kre(tg.size()), kim(tg.size());
  SectorSpectrum prev;
  for (int k = 0; k < grid; ++k) {
    const auto i = static_cast<std::size_t>(k);
    tg[i] = k + 1 == grid ? T : T * k / (grid - 1);
    SectorSpectrum s = solver.solve(schedule.param_at(tg[i]), k == 0 ? nullptr : &prev);
    const Eigenpair& a = s.level(1);
    const Eigenpair& b = s.level(level_l);
    if (a.sector != b.sector) throw ConfigurationError("the reduction pairs two levels of the same sector");
    gap[i] = b.energy - a.energy;
    const Complex kappa = schedule.rate_at(tg[i]) * dh.element(a.vector, b.vector) / gap[i];
    kre[i] = kappa.real();
    kim[i] = kappa.imag();
    prev = std::move(s);
  }
  const CubicHermite gap_of = pchip(tg, gap), kre_of = pchip(tg, kre), kim_of = pchip(tg, kim);

  auto rhs = [&](double t, const RVector& y) {
    const Complex a1(y(0), y(1)), al(y(2), y(3));
    const Complex kappa(kre_of(t), kim_of(t));
    const Complex ph = std::polar(1.0, -y(4));
    const Complex d1 = -kappa * ph * al;
    const Complex dl = std::conj(kappa) * std::conj(ph) * a1;
    RVector dy(5);
    dy << d1.real(), d1.imag(), dl.real(), dl.imag(), gap_of(t);
    return dy;
  };
  OdeOptions opt;
  opt.rtol = 1e-10;
  opt.atol = 1e-12;
  opt.max_step = T / 400.0;
  RVector y(5);
  y << 1.0, 0.0, 0.0, 0.0, 0.0;
  double t = 0.0;
  for (double target : times) {
    if (target > t) {
      integrate_dopri5(rhs, t, y, target, opt, [&](double tt, const RVector& yy) {
        if (tt >= target) y = yy;
        return true;
      });
      t = target;
    }
    const double p1 = y(0) * y(0) + y(1) * y(1), pl = y(2) * y(2) + y(3) * y(3);
    out.p1.push_back(p1);
    out.pl.push_back(pl);
    out.max_norm_error = std::max(out.max_norm_error, std::abs(p1 + pl - 1.0));
  }
  return out;
}

/// Max deviation of the reduced populations from the full-engine F_1, F_l.
inline ValidationReport two_level_reduction_check(const DrivenModel& model, const FidelityTrace& trace,
                                                  const SweepSchedule& schedule, double eps, int level_l = 3,
                                                  double tolerance = 5e-3) {
  const TwoLevelResult red = two_level_reduction(model, schedule, trace.times, level_l);
  const auto f1 = trace.column(1), fl = trace.column(level_l);
  double dev = 0.0;
  for (std::size_t i = 0; i < red.times.size(); ++i) {
    dev = std::max({dev, std::abs(red.p1[i] - f1[i]), std::abs(red.pl[i] - fl[i])});
  }
  return {"two_level_reduction", dev, tolerance,
          {{"epsilon", eps}, {"level_l", level_l}, {"T", schedule.duration()}, {"norm_error", red.max_norm_error}}};
}

/// Propagates the same initial state in the collective sector and in the
/// full product space with identical fixed time steps and compares F_1.
inline ValidationReport dicke_vs_full_dynamics(int n, double coupling, double bias, const SweepSchedule& schedule,
                                               int samples = 400, double step = 0.0, double tolerance = 1e-8) {
  if (n > 8) throw ConfigurationError("dynamics comparison is limited to N <= 8", "N");
  const CollectiveSpinModel coll = build_collective_ising(n, coupling, bias);
  const DrivenModel full = full_space_model(n, coupling, bias);
  const std::vector<double> times = uniform_times(schedule.duration(), samples);

  const CVector psi_c = initial_state(coll.driven, schedule.start());
  const CVector psi_f = dicke_embedding(n).cast<Complex>() * psi_c;
  const double h = step > 0.0 ? step : std::max(schedule.duration(), 1.0) / 4000.0;
  const StepControl ctl = StepControl::fixed(h);
  const EvolutionTrajectory tc = propagate(coll.driven, schedule, psi_c, times, nullptr, ctl);
  const EvolutionTrajectory tf = propagate(full, schedule, psi_f, times, nullptr, ctl);
  // Full spectra: the product space hides the next even level behind many
  // odd non-symmetric states, and the traces need a same-sector partner.
  const FidelityTrace fc = fidelity_trace(tc, coll.driven.sector_solver(0), {1}, {1, {}, 1});
  const FidelityTrace ff = fidelity_trace(tf, full.sector_solver(0), {1}, {1, {}, 1});
  double dev = 0.0;
  for (std::size_t i = 0; i < fc.size(); ++i) dev = std::max(dev, std::abs(fc.fidelity[i][0] - ff.fidelity[i][0]));
  return {"dicke_vs_full_dynamics", dev, tolerance,
          {{"N", n}, {"J", coupling}, {"eta", bias}, {"T", schedule.duration()}, {"step", h}}};
}

}  // namespace spqa
