#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "spqa/engine/fidelity.hpp"
#include "spqa/engine/gaps.hpp"
#include "spqa/engine/interpolation.hpp"
#include "spqa/engine/ode.hpp"
#include "spqa/engine/propagator.hpp"
#include "spqa/engine/schedule.hpp"
#include "spqa/engine/sdac.hpp"
#include "spqa/models/collective_spin.hpp"
#include "spqa/models/single_particle.hpp"

using namespace spqa;

namespace {

// <0| exp(-l x^2) |2> for unit-frequency oscillator states, closed form
double gaussian_element_02(double l) { return -l / std::sqrt(2.0) * std::pow(1.0 + l, -1.5); }

SingleParticleModel particle() { return build_single_particle(GridConfig{}, 1.0, std::sqrt(2.0), 0.0); }

ScheduleConfig eps_config(double start, double end, double eps) {
  ScheduleConfig c;
  c.kind = ScheduleKind::epsilon_fixed;
  c.start = start;
  c.end = end;
  c.epsilon = eps;
  return c;
}

ScheduleConfig linear_config(double start, double end, double duration) {
  ScheduleConfig c;
  c.kind = ScheduleKind::linear;
  c.start = start;
  c.end = end;
  c.duration = duration;
  return c;
}

DrivenModel two_level(double omega) {
  CMatrix sx = CMatrix::Zero(2, 2), sz = CMatrix::Zero(2, 2);
  sx(0, 1) = sx(1, 0) = 1.0;
  sz(0, 0) = 1.0;
  sz(1, 1) = -1.0;
  DrivenModel m;
  m.name = "two_level";
  m.hamiltonian = ParametricHamiltonian(HermitianOperator(CMatrix(0.5 * omega * sx)), {HermitianOperator(sz)});
  m.symmetric = m.hamiltonian;
  m.symmetry = SymmetryOperator{HermitianOperator::identity(2)};
  m.bias_operator = HermitianOperator(sz);
  return m;
}

}  // namespace

TEST(Sdac, ZeroRateGivesZero) {
  const auto m = particle();
  EXPECT_EQ(sdac_epsilon(m.driven.sector_solver(4), 3.0, 0.0, 1), 0.0);
}

TEST(Sdac, HarmonicLimitMatchesGaussianIntegral) {
  const auto m = particle();
  const SectorSolver solver = m.driven.sector_solver(4);
  const SectorSpectrum s = solver.solve(0.0);
  EXPECT_EQ(select_targets(s, 1, {}), std::vector<int>{3});
  const double element = std::abs(gaussian_element_02(0.25));
  EXPECT_NEAR(element, 0.126491, 1e-6);
  // the 513-point stencil shifts E_3 - E_1 by ~1e-3, hence the relative slack
  const double eps = sdac_epsilon(solver, 0.0, 1.0, 1);
  EXPECT_NEAR(eps, element / 4.0, 1e-3 * eps);
  EXPECT_NEAR(eps, 0.031623, 1e-3 * eps);
  // and it converges to the oracle as the grid is refined
  const auto fine = build_single_particle(GridConfig{10.0, 2049}, 1.0, std::sqrt(2.0), 0.0);
  const double eps_fine = sdac_epsilon(fine.driven.sector_solver(4), 0.0, 1.0, 1);
  EXPECT_LT(std::abs(eps_fine - element / 4.0), 0.1 * std::abs(eps - element / 4.0));
}

TEST(Sdac, LinearInRate) {
  const auto m = particle();
  const SectorSolver solver = m.driven.sector_solver(4);
  const double e1 = sdac_epsilon(solver, 6.0, 0.3, 1);
  EXPECT_NEAR(sdac_epsilon(solver, 6.0, 0.6, 1), 2.0 * e1, 1e-15 * e1 + 1e-300);
  EXPECT_DOUBLE_EQ(sdac_epsilon(solver, 6.0, -0.3, 1), e1);
}

TEST(Sdac, IdentitySymmetryFallsBackToConventionalCondition) {
  // with one sector the nearest target is the first excited state
  const auto coll = build_collective_ising(6, -1.0, 0.0);
  DrivenModel plain = coll.driven;
  plain.symmetry = SymmetryOperator{HermitianOperator::identity(plain.dim())};
  const SectorSpectrum s = plain.sector_solver().solve(-2.0);
  EXPECT_EQ(select_targets(s, 1, {}), std::vector<int>{2});
}

TEST(RateForEpsilon, HarmonicLimit) {
  const auto m = particle();
  const SectorSolver solver = m.driven.sector_solver(4);
  const RateResult r = rate_for_epsilon(solver, 0.0, 0.1, 1, {}, +1.0);
  EXPECT_FALSE(r.capped);
  EXPECT_NEAR(r.rate, 0.1 * 4.0 / std::abs(gaussian_element_02(0.25)), 1e-3 * r.rate);
  EXPECT_NEAR(r.rate, 3.1623, 1e-3 * r.rate);
  // consistency with the forward map at the same point
  EXPECT_NEAR(sdac_epsilon(solver, 0.0, r.rate, 1), 0.1, 1e-9);
}

TEST(RateForEpsilon, LinearInEpsilonAndOriented) {
  const auto m = build_collective_ising(20, -1.0, 0.0);
  const SectorSolver solver = m.driven.sector_solver(4);
  const RateResult a = rate_for_epsilon(solver, -1.3, 0.05, 1, {}, -1.0);
  const RateResult b = rate_for_epsilon(solver, -1.3, 0.10, 1, {}, -1.0);
  EXPECT_LT(a.rate, 0.0);
  EXPECT_NEAR(b.rate, 2.0 * a.rate, 1e-14 * std::abs(a.rate));
  EXPECT_THROW(rate_for_epsilon(solver, -1.3, 0.0, 1, {}, 1.0), ConfigurationError);
  // and the rate reproduces its epsilon
  EXPECT_NEAR(sdac_epsilon(solver, -1.3, a.rate, 1), 0.05, 1e-12);
}

TEST(RateForEpsilon, CapWhereCouplingVanishes) {
  // dH/dR = identity couples no pair of eigenstates
  CMatrix c = CMatrix::Zero(3, 3);
  c(0, 0) = 0.0;
  c(1, 1) = 1.0;
  c(2, 2) = 2.0;
  const ParametricHamiltonian ph(HermitianOperator(c), {HermitianOperator::diagonal(RVector::Ones(3))});
  SectorBasis basis = sector_decompose(SymmetryOperator{HermitianOperator::identity(3)});
  const SectorSolver solver(ph, basis);
  const RateResult r = rate_for_epsilon(solver, 0.0, 0.1, 1, {}, 1.0, 50.0);
  EXPECT_TRUE(r.capped);
  EXPECT_EQ(r.rate, 50.0);
}

TEST(Sdac, DegenerateSameSectorTargetIsAnError) {
  RVector d(3);
  d << 0.0, 0.0, 1.0;
  const ParametricHamiltonian ph(HermitianOperator::diagonal(d), {HermitianOperator::identity(3)});
  const SectorSolver solver(ph, sector_decompose(SymmetryOperator{HermitianOperator::identity(3)}));
  EXPECT_THROW(sdac_epsilon(solver, 0.0, 1.0, 1), DegenerateTargetError);
}

TEST(RateForEpsilon, CollectiveRateDipsNearTransition) {
  const auto m = build_collective_ising(100, -1.0, 0.0);
  const SectorSolver solver = m.driven.sector_solver(4);
  double best_b = 0.0, best = INFINITY;
  for (int k = 0; k <= 200; ++k) {
    const double b = -2.0 + 0.01 * k;
    const double v = std::abs(rate_for_epsilon(solver, b, 0.05, 1, {}, 1.0).rate);
    if (v < best) {
      best = v;
      best_b = b;
    }
  }
  EXPECT_NEAR(best_b, -1.0, 0.2);
}

TEST(LinearSchedule, ConstantRate) {
  const SweepSchedule s = build_linear_schedule(linear_config(0.0, 20.0, 17.0));
  EXPECT_DOUBLE_EQ(s.duration(), 17.0);
  EXPECT_EQ(s.samples().size(), 401u);
  for (const auto& p : s.samples()) EXPECT_NEAR(p.rate, 20.0 / 17.0, 1e-15);
  EXPECT_NEAR(s.param_at(8.5), 10.0, 1e-12);
  EXPECT_NEAR(s.rate_at(3.3), 20.0 / 17.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.param_at(17.0), 20.0);
}

TEST(LinearSchedule, LongDurationSlowRate) {
  const SweepSchedule s = build_linear_schedule(linear_config(0.0, 20.0, 1e9));
  EXPECT_LT(std::abs(s.rate_at(1.0)), 1e-7);
}

TEST(LinearSchedule, InvalidDurationRejected) {
  EXPECT_THROW(build_linear_schedule(linear_config(0.0, 1.0, 0.0)), ConfigurationError);
  EXPECT_THROW(build_linear_schedule(eps_config(0.0, 1.0, 0.1)), ConfigurationError);
}

TEST(EpsilonSchedule, MonotoneAndReachesEnd) {
  const auto m = build_collective_ising(10, -1.0, 0.0);
  const SweepSchedule s = build_epsilon_fixed_schedule(m.driven, eps_config(-2.0, 0.0, 0.05));
  EXPECT_GE(s.samples().size(), 400u);
  EXPECT_DOUBLE_EQ(s.start(), -2.0);
  EXPECT_DOUBLE_EQ(s.end(), 0.0);
  for (std::size_t i = 1; i < s.samples().size(); ++i) {
    EXPECT_GT(s.samples()[i].param, s.samples()[i - 1].param);
    EXPECT_GT(s.samples()[i].rate, 0.0);
  }
  EXPECT_FALSE(s.rate_capped);
}

TEST(EpsilonSchedule, RateHoldsEpsilonAlongTheSweep) {
  const auto m = build_collective_ising(10, -1.0, 0.0);
  const SectorSolver solver = m.driven.sector_solver(8);
  const SweepSchedule s = build_epsilon_fixed_schedule(solver, eps_config(-2.0, 0.0, 0.05));
  for (std::size_t i = 0; i < s.samples().size(); i += 25) {
    const auto& p = s.samples()[i];
    EXPECT_NEAR(sdac_epsilon(solver, p.param, p.rate, 1), 0.05, 0.05 * 0.01) << p.param;
  }
}

TEST(EpsilonSchedule, DurationScalesInverselyWithEpsilon) {
  const auto m = build_collective_ising(10, -1.0, 0.0);
  const SectorSolver solver = m.driven.sector_solver(8);
  const double t1 = build_epsilon_fixed_schedule(solver, eps_config(-2.0, 0.0, 0.04)).duration();
  const double t2 = build_epsilon_fixed_schedule(solver, eps_config(-2.0, 0.0, 0.02)).duration();
  EXPECT_NEAR(t2 / t1, 2.0, 2e-3);
}

TEST(EpsilonSchedule, DecreasingSweep) {
  const auto m = build_collective_ising(10, -1.0, 0.0);
  const SweepSchedule s = build_epsilon_fixed_schedule(m.driven, eps_config(0.0, -2.0, 0.05));
  EXPECT_DOUBLE_EQ(s.end(), -2.0);
  for (const auto& p : s.samples()) EXPECT_LT(p.rate, 0.0);
}

TEST(EpsilonSchedule, LinearWithSameDurationSharesEndpointsOnly) {
  const auto m = build_collective_ising(10, -1.0, 0.0);
  const SweepSchedule e = build_epsilon_fixed_schedule(m.driven, eps_config(-2.0, 0.0, 0.05));
  const SweepSchedule l = build_linear_schedule(linear_config(-2.0, 0.0, e.duration()));
  EXPECT_DOUBLE_EQ(l.param_at(l.duration()), e.param_at(e.duration()));
  EXPECT_DOUBLE_EQ(l.param_at(0.0), e.param_at(0.0));
  double diff = 0.0;
  for (int k = 1; k < 100; ++k) {
    const double t = e.duration() * k / 100.0;
    diff = std::max(diff, std::abs(l.param_at(t) - e.param_at(t)));
  }
  EXPECT_GT(diff, 0.05);
}

TEST(Propagator, RabiOscillation) {
  const double omega = 1.7;
  const DrivenModel m = two_level(omega);
  const SweepSchedule s = build_linear_schedule(linear_config(0.0, 0.0, 20.0));
  CVector psi0 = CVector::Zero(2);
  psi0(0) = 1.0;
  const auto times = uniform_times(20.0, 81);
  const EvolutionTrajectory tr = propagate(m, s, psi0, times);
  ASSERT_EQ(tr.states.size(), times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double want = std::pow(std::sin(omega * times[i] / 2.0), 2);
    EXPECT_NEAR(std::norm(tr.states[i](1)), want, 1e-8) << times[i];
  }
}

TEST(Propagator, EigenstateIsStationary) {
  const auto m = build_collective_ising(20, -1.0, 0.0);
  const SweepSchedule s = build_linear_schedule(linear_config(-1.2, -1.2, 50.0));
  const CVector psi0 = initial_state(m.driven, -1.2, 3);
  const EvolutionTrajectory tr = propagate(m.driven, s, psi0, uniform_times(50.0, 26));
  for (const auto& psi : tr.states) EXPECT_NEAR(std::norm(psi0.dot(psi)), 1.0, 1e-9);
}

TEST(Propagator, NormPreservedAlongSweep) {
  const auto m = build_collective_ising(30, -1.0, 0.0);
  const SweepSchedule s = build_epsilon_fixed_schedule(m.driven, eps_config(-2.0, 0.0, 0.1));
  const EvolutionTrajectory tr = propagate(m.driven, s, initial_state(m.driven, -2.0), uniform_times(s.duration(), 50));
  EXPECT_NEAR(tr.states.back().norm(), 1.0, 1e-9);
  EXPECT_LT(tr.stats.max_step_drift, 1e-10);
  EXPECT_LT(tr.stats.max_norm_error, 1e-9);
}

TEST(Propagator, SecondOrderInFixedStep) {
  const auto m = build_collective_ising(10, -1.0, 0.0);
  const SweepSchedule s = build_linear_schedule(linear_config(-2.0, 0.0, 20.0));
  const CVector psi0 = initial_state(m.driven, -2.0);
  const std::vector<double> times{0.0, 20.0};
  auto final_state = [&](double h) { return propagate(m.driven, s, psi0, times, nullptr, StepControl::fixed(h)).states.back(); };
  const CVector ref = final_state(0.2 / 32);
  const double e1 = (final_state(0.2) - ref).norm();
  const double e2 = (final_state(0.1) - ref).norm();
  EXPECT_GE(e1 / e2, 3.5);
  EXPECT_LE(e1 / e2, 4.5);
}

TEST(Propagator, ZeroNoiseMatchesNoNoiseAndSeedsAreReproducible) {
  const auto m = build_collective_ising(10, -0.05, 0.0);
  const SweepSchedule s = build_linear_schedule(linear_config(-0.1, 0.0, 30.0));
  const CVector psi0 = initial_state(m.driven, -0.1);
  const auto times = uniform_times(30.0, 31);
  const NoiseProcess quiet = sample_noise(0.0, 1.0, 1, 30.0);
  const auto a = propagate(m.driven, s, psi0, times);
  const auto b = propagate(m.driven, s, psi0, times, &quiet);
  for (std::size_t i = 0; i < times.size(); ++i) EXPECT_EQ(a.states[i], b.states[i]);

  const NoiseProcess loud = sample_noise(0.5, 1.0, 77, 30.0);
  const auto c = propagate(m.driven, s, psi0, times, &loud);
  const auto d = propagate(m.driven, s, psi0, times, &loud);
  for (std::size_t i = 0; i < times.size(); ++i) EXPECT_EQ(c.states[i], d.states[i]);
  EXPECT_GT((c.states.back() - a.states.back()).norm(), 1e-3);
}

TEST(Propagator, BadInitialStateRejected) {
  const auto m = build_collective_ising(4, -1.0, 0.0);
  const SweepSchedule s = build_linear_schedule(linear_config(-1.0, 0.0, 1.0));
  EXPECT_THROW(propagate(m.driven, s, CVector::Ones(5), {0.0, 1.0}), ConfigurationError);
  EXPECT_THROW(propagate(m.driven, s, CVector::Ones(3) / std::sqrt(3.0), {0.0, 1.0}), ConfigurationError);
}

TEST(Chebyshev, MatchesDenseExponential) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  CMatrix a(24, 24);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = Complex(g(rng), g(rng));
  }
  const CMatrix h = 0.5 * (a + a.adjoint());
  CVector psi(24);
  for (Eigen::Index i = 0; i < psi.size(); ++i) psi(i) = Complex(g(rng), g(rng));
  psi.normalize();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const double tau = 0.7;
  CVector phases(24);
  for (Eigen::Index k = 0; k < 24; ++k) phases(k) = std::polar(1.0, -es.eigenvalues()(k) * tau);
  const CVector want = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint() * psi;
  std::size_t matvecs = 0;
  const CVector got = detail::chebyshev_exp(to_sparse(h), psi, tau, matvecs);
  EXPECT_LT((got - want).norm(), 1e-12);
  EXPECT_GT(matvecs, 0u);
}

TEST(FidelityTrace, InitialSampleAndForbiddenLevel) {
  const auto m = build_collective_ising(20, -1.0, 0.0);
  const SweepSchedule s = build_epsilon_fixed_schedule(m.driven, eps_config(-2.0, 0.0, 0.05));
  const EvolutionTrajectory tr = propagate(m.driven, s, initial_state(m.driven, -2.0), uniform_times(s.duration(), 120));
  const FidelityTrace f = fidelity_trace(tr, m.driven, {1, 2, 3});
  ASSERT_EQ(f.size(), 120u);
  EXPECT_NEAR(f.fidelity[0][0], 1.0, 1e-12);
  EXPECT_LT(f.fidelity[0][1], 1e-12);
  EXPECT_LT(f.fidelity[0][2], 1e-12);
  EXPECT_LT(f.max_of(2), 1e-9);
  EXPECT_DOUBLE_EQ(f.tracked_labels[1], -1.0);
  for (double w : f.off_sector_weight) EXPECT_LT(w, 1e-9);
  for (const auto& row : f.energies) EXPECT_EQ(row.size(), 6u);
  const AnalyticBounds b = analytic_bounds(0.05);
  EXPECT_GE(f.min_of(1), b.f1_lower);
  EXPECT_LE(f.max_of(3), b.f3_upper);
}

TEST(FidelityTrace, TruncatedSolverRejected) {
  const auto m = build_collective_ising(10, -1.0, 0.0);
  const SweepSchedule s = build_linear_schedule(linear_config(-2.0, 0.0, 5.0));
  const EvolutionTrajectory tr = propagate(m.driven, s, initial_state(m.driven, -2.0), uniform_times(5.0, 5));
  EXPECT_THROW(fidelity_trace(tr, m.driven.sector_solver(2), {1, 2, 3}, {}), ConfigurationError);
  EXPECT_THROW(fidelity_trace(tr, m.driven, {}), ConfigurationError);
}

TEST(AnalyticBounds, KnownValues) {
  const AnalyticBounds z = analytic_bounds(0.0);
  EXPECT_EQ(z.f1_lower, 1.0);
  EXPECT_EQ(z.f3_upper, 0.0);
  const AnalyticBounds a = analytic_bounds(0.1);
  // eps = 0.1: (1 - 0.08/1.04)^2 = (12/13)^2, 0.16/1.04^2
  EXPECT_NEAR(a.f1_lower, 144.0 / 169.0, 1e-15);
  EXPECT_NEAR(a.f3_upper, 0.16 / 1.0816, 1e-15);
  EXPECT_NEAR(a.f1_lower, 0.85200, 1e-4);
  EXPECT_NEAR(a.f3_upper, 0.14793, 5e-6);
  const AnalyticBounds b = analytic_bounds(0.02);
  EXPECT_NEAR(b.f1_lower, 0.99362, 5e-6);
  EXPECT_NEAR(b.f3_upper, 0.00638, 5e-6);
  EXPECT_THROW(analytic_bounds(-0.1), ConfigurationError);
}

TEST(AverageFidelity, TrapezoidRule) {
  const std::vector<double> t{0.0, 0.5, 1.0, 1.5, 2.0};
  EXPECT_DOUBLE_EQ(average_fidelity(t, {0.7, 0.7, 0.7, 0.7, 0.7}, 0.0), 0.7);
  EXPECT_NEAR(average_fidelity(t, t, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(average_fidelity(t, t, 0.75), 1.375, 1e-15);
  EXPECT_THROW(average_fidelity(t, t, 2.0), ConfigurationError);
  EXPECT_THROW(average_fidelity(t, t, -0.1), ConfigurationError);
}

TEST(Median5, RemovesSpikes) {
  const std::vector<double> x{1, 1, 9, 1, 1, 1, -7, 1};
  for (double v : median5(x)) EXPECT_EQ(v, 1.0);
}

TEST(TStar, SyntheticOscillation) {
  const double tc = 5.0;
  std::vector<double> t, r, f;
  for (int k = 0; k <= 2000; ++k) {
    const double tt = 0.01 * k;
    t.push_back(tt);
    r.push_back(tt);
    f.push_back(tt < tc ? 1.0 : 1.0 - 0.01 * std::pow(std::sin(tt - tc), 2));
  }
  const TStar s = detect_t_star(t, r, f, tc);
  EXPECT_FALSE(s.flagged);
  EXPECT_NEAR(s.crossing_time, tc, 0.01);
  EXPECT_NEAR(s.t_star, tc + 3.0 * M_PI / 4.0, 0.02);
}

TEST(TStar, MonotoneAfterCrossingIsFlagged) {
  std::vector<double> t, r, f;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(k);
    r.push_back(-k);  // decreasing sweep
    f.push_back(1.0 - 1e-3 * k);
  }
  const TStar s = detect_t_star(t, r, f, -40.0);
  EXPECT_TRUE(s.flagged);
  EXPECT_DOUBLE_EQ(s.t_star, 40.0);
  EXPECT_THROW(detect_t_star(t, r, f, -200.0), ConfigurationError);
}

TEST(MinGap, HarmonicGapAndCrossSectorPair) {
  const auto m = particle();
  const SectorSpectrum s = m.driven.sector_solver(4).solve(0.0);
  EXPECT_NEAR(s.level(3).energy - s.level(1).energy, 2.0, 2e-3);
  const GapMinimum g = min_gap(m.driven.sector_solver(3), 1, 2, 19.0, 20.0, 11);
  EXPECT_LT(g.gap, 1e-3);
  EXPECT_THROW(min_gap(m.driven.sector_solver(3), 2, 2, 0.0, 1.0), ConfigurationError);
  EXPECT_THROW(min_gap(m.driven.sector_solver(3), 1, 2, 1.0, 0.0), ConfigurationError);
}

TEST(MinGap, CollectiveMinimumAgainstDenseScan) {
  const auto m = build_collective_ising(100, -1.0, 0.0);
  const SectorSolver solver = m.driven.sector_solver(4);
  const GapMinimum g = min_gap(solver, 1, 3, -2.0, 0.0);
  EXPECT_NEAR(g.param, -1.0, 0.2);
  double dense = INFINITY;
  for (int k = 0; k <= 2000; ++k) {
    const SectorSpectrum s = solver.solve(-2.0 + 0.001 * k);
    dense = std::min(dense, s.level(3).energy - s.level(1).energy);
  }
  EXPECT_LE(g.gap, dense + 1e-12);
  EXPECT_GT(g.gap, dense - 1e-4);
}

TEST(LogLogSlope, SyntheticData) {
  const std::vector<double> n{20, 40, 80, 160, 320};
  EXPECT_NEAR(log_log_slope(n, {2, 2, 2, 2, 2}), 0.0, 1e-14);
  std::vector<double> inv;
  for (double x : n) inv.push_back(3.0 / x);
  EXPECT_NEAR(log_log_slope(n, inv), -1.0, 1e-10);
  EXPECT_THROW(log_log_slope({1.0}, {1.0}), ConfigurationError);
  EXPECT_THROW(log_log_slope({1.0, 2.0}, {1.0, -1.0}), ConfigurationError);
}

TEST(GapScaling, InputValidation) {
  EXPECT_THROW(gap_scaling_exponent({10, 20, 40, 80}, -1.0), ConfigurationError);
  EXPECT_THROW(gap_scaling_exponent({10, 20, 30, 40, 50}, -1.0), ConfigurationError);
}

TEST(Pchip, MonotoneWithoutOvershoot) {
  const std::vector<double> x{0, 1, 2, 3, 4, 5}, y{0, 0.1, 0.2, 5.0, 5.1, 5.2};
  const CubicHermite p = pchip(x, y);
  double prev = -1.0;
  for (int k = 0; k <= 500; ++k) {
    const double v = p(0.01 * k);
    EXPECT_GE(v, prev - 1e-15);
    EXPECT_GE(v, 0.0 - 1e-15);
    EXPECT_LE(v, 5.2 + 1e-15);
    prev = v;
  }
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(p(x[i]), y[i]);
}

TEST(Pchip, ReproducesLinearData) {
  const CubicHermite p = pchip({0, 0.5, 2, 3}, {1, 2, 5, 7});
  for (double t : {0.1, 0.9, 1.7, 2.5}) {
    EXPECT_NEAR(p(t), 1.0 + 2.0 * t, 1e-14);
    EXPECT_NEAR(p.derivative(t), 2.0, 1e-13);
  }
}

TEST(Dopri5, ExponentialDecay) {
  RVector y0(1);
  y0(0) = 1.0;
  RVector last = y0;
  OdeOptions opt;
  opt.rtol = 1e-10;
  opt.atol = 1e-14;
  const OdeStats st = integrate_dopri5([](double, const RVector& y) { return RVector(-y); }, 0.0, y0, 5.0, opt,
                                       [&](double, const RVector& y) {
                                         last = y;
                                         return true;
                                       });
  EXPECT_NEAR(last(0), std::exp(-5.0), 1e-9 * std::exp(-5.0));
  EXPECT_GT(st.accepted, 5u);
}
