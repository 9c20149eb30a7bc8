#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <numeric>
#include <random>

#include "spqa/models/collective_spin.hpp"
#include "spqa/models/noise.hpp"
#include "spqa/models/single_particle.hpp"

using namespace spqa;

namespace {

double ground_energy(const SingleParticleModel& m, double a) {
  return m.driven.sector_solver(2).solve(a).level(1).energy;
}

}  // namespace

TEST(SingleParticle, DefaultGridHarmonicGround) {
  const auto m = build_single_particle(GridConfig{}, 1.0, std::sqrt(2.0), 0.0);
  EXPECT_EQ(m.driven.dim(), 513);
  EXPECT_NEAR(ground_energy(m, 0.0), 0.5, 2e-4);
}

TEST(SingleParticle, EvenPointCountRejected) {
  EXPECT_THROW(build_single_particle(GridConfig{10.0, 512}, 1.0, std::sqrt(2.0), 0.0), ConfigurationError);
  EXPECT_THROW(build_single_particle(GridConfig{10.0, 1}, 1.0, std::sqrt(2.0), 0.0), ConfigurationError);
}

TEST(SingleParticle, BadPhysicalParametersRejected) {
  EXPECT_THROW(build_single_particle(GridConfig{}, 0.0, 1.0, 0.0), ConfigurationError);
  EXPECT_THROW(build_single_particle(GridConfig{}, 1.0, -1.0, 0.0), ConfigurationError);
  EXPECT_THROW(build_single_particle(GridConfig{-1.0, 101}, 1.0, 1.0, 0.0), ConfigurationError);
}

TEST(SingleParticle, GridIsExactlySymmetric) {
  const GridConfig g{9.0, 257};
  const RVector x = g.nodes();
  for (int i = 0; i < g.n_points; ++i) EXPECT_EQ(x(i), -x(g.n_points - 1 - i));
  EXPECT_EQ(x(g.n_points / 2), 0.0);
}

TEST(SingleParticle, PotentialOnDiagonal) {
  const double tilt = 3e-3;
  const auto m = build_single_particle(GridConfig{}, 1.3, 0.9, tilt);
  const double h = m.grid.spacing();
  for (double a : {0.0, 7.0, 20.0}) {
    const CMatrix hm = assemble(m.driven.hamiltonian, a).matrix();
    for (int i = 0; i < m.grid.n_points; ++i) {
      const double x = m.x(i);
      const double want = 0.5 * 1.3 * 1.3 * x * x + a * std::exp(-x * x / (2 * 0.9 * 0.9)) + tilt * x;
      EXPECT_NEAR(hm(i, i).real() - 1.0 / (h * h), want, 1e-14 * std::max(1.0, std::abs(want)) + 1e-12);
    }
    EXPECT_NEAR((m.potential(a) - (hm.diagonal().real().array() - 1.0 / (h * h)).matrix()).cwiseAbs().maxCoeff(), 0.0,
                1e-10);
  }
}

TEST(SingleParticle, BarrierDerivativeIsGaussian) {
  const auto m = build_single_particle(GridConfig{}, 1.0, std::sqrt(2.0), 0.0);
  const CMatrix d = m.driven.symmetric.derivative(0).matrix();
  for (int i = 0; i < m.grid.n_points; i += 37) {
    // 2 d^2 = 4 up to one rounding of sqrt(2)^2
    EXPECT_NEAR(d(i, i).real(), std::exp(-m.x(i) * m.x(i) / 4.0), 1e-14);
  }
  EXPECT_EQ(max_abs(d - CMatrix(d.diagonal().asDiagonal())), 0.0);
}

TEST(SingleParticle, QuasiDegeneratePairAtHighBarrier) {
  const auto m = build_single_particle(GridConfig{}, 1.0, std::sqrt(2.0), 0.0);
  const SectorSpectrum s = m.driven.sector_solver(4).solve(20.0);
  EXPECT_LT(s.level(2).energy - s.level(1).energy, 1e-3 * (s.level(3).energy - s.level(1).energy));
}

TEST(SingleParticle, TiltLocalizesGroundState) {
  const auto m = build_single_particle(GridConfig{}, 1.0, std::sqrt(2.0), 1e-3);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(assemble(m.driven.hamiltonian, 20.0).matrix());
  const CVector g = es.eigenvectors().col(0);
  const double mean_x = (g.cwiseAbs2().transpose() * m.x).value();
  // positive tilt raises x > 0, so the particle sits in the left well
  EXPECT_LT(mean_x, -1.0);

  const auto flat = build_single_particle(GridConfig{}, 1.0, std::sqrt(2.0), 0.0);
  const CVector g0 = flat.driven.sector_solver(2).solve(20.0).level(1).vector;
  EXPECT_LT(std::abs((g0.cwiseAbs2().transpose() * flat.x).value()), 1e-10);
}

TEST(SingleParticle, UnbiasedCommutesForAnyBarrier) {
  const auto m = build_single_particle(GridConfig{8.0, 201}, 1.0, std::sqrt(2.0), 0.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 40.0);
  for (int k = 0; k < 20; ++k) {
    EXPECT_LT(commutator_residual(assemble(m.driven.hamiltonian, u(rng)), m.driven.symmetry), 1e-12);
  }
}

TEST(SingleParticle, SecondOrderDiscretization) {
  // E_1(A = 0) error against 1/2 when the spacing halves
  std::vector<double> err;
  for (int n : {101, 201, 401}) {
    const auto m = build_single_particle(GridConfig{10.0, n}, 1.0, std::sqrt(2.0), 0.0);
    err.push_back(std::abs(ground_energy(m, 0.0) - 0.5));
  }
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    const double order = std::log2(err[i] / err[i + 1]);
    EXPECT_GE(order, 1.8) << i;
    EXPECT_LE(order, 2.2) << i;
  }
}

TEST(CollectiveIsing, DimensionAndOperators) {
  const auto m = build_collective_ising(100, -1.0, 0.0);
  EXPECT_EQ(m.dim(), 101);
  EXPECT_EQ(m.driven.dim(), 101);
  EXPECT_EQ(max_abs(m.driven.symmetric.derivative(0).matrix() - m.spin.sx.cast<Complex>()), 0.0);
}

TEST(CollectiveIsing, HamiltonianStructure) {
  const int n = 7;
  const double j = -0.8, eta = 0.013, b = -0.4;
  const auto m = build_collective_ising(n, j, eta);
  const RMatrix want = b * m.spin.sx + (j / n) * m.spin.sz * m.spin.sz + 2.0 * eta * m.spin.sz;
  EXPECT_LT(max_abs(assemble(m.driven.hamiltonian, b).matrix() - want.cast<Complex>()), 1e-14);
  EXPECT_LT(max_abs(assemble(m.driven.symmetric, b).matrix() - (want - 2.0 * eta * m.spin.sz).cast<Complex>()), 1e-14);
}

TEST(CollectiveIsing, SpinAlgebra) {
  for (int n : {2, 5, 12}) {
    const SpinMatrices s = spin_matrices(n);
    const double ss = 0.5 * n * (0.5 * n + 1.0);
    // Sx^2 + Sy^2 + Sz^2 = S(S+1), with Sy^2 = -(S+ - S-)^2/4 recovered from [Sz, Sx] = i Sy
    const CMatrix sx = s.sx.cast<Complex>(), sz = s.sz.cast<Complex>();
    const CMatrix sy = (sz * sx - sx * sz) / Complex(0.0, 1.0);
    const CMatrix cas = sx * sx + sy * sy + sz * sz;
    EXPECT_LT(max_abs(cas - ss * CMatrix::Identity(n + 1, n + 1)), 1e-12) << n;
  }
}

TEST(CollectiveIsing, TooFewSpinsRejected) {
  EXPECT_THROW(build_collective_ising(1, -1.0, 0.0), ConfigurationError);
  EXPECT_THROW(parity_collective(0), ConfigurationError);
}

TEST(CollectiveIsing, UnbiasedCommutesWithParity) {
  const auto m = build_collective_ising(40, -1.0, 0.0);
  for (double b : {-3.0, -1.0, -0.2, 0.0, 1.5}) {
    EXPECT_LT(commutator_residual(assemble(m.driven.hamiltonian, b), m.driven.symmetry), 1e-12) << b;
  }
}

TEST(CollectiveParity, InvolutionAndSpectrum) {
  for (int n : {3, 4, 10, 100}) {
    const SymmetryOperator p = parity_collective(n);
    const auto [sq, herm] = p.involution_residuals();
    EXPECT_LT(sq, 1e-10) << n;
    EXPECT_LT(herm, 1e-10) << n;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(p.op.matrix());
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
      EXPECT_LT(std::min(std::abs(es.eigenvalues()(k) - 1.0), std::abs(es.eigenvalues()(k) + 1.0)), 1e-10);
    }
  }
}

TEST(CollectiveParity, FlipsMagnetization) {
  const int n = 9;
  const SymmetryOperator p = parity_collective(n);
  const SpinMatrices s = spin_matrices(n);
  const CMatrix sz = s.sz.cast<Complex>();
  EXPECT_LT(max_abs(p.op.matrix() * sz * p.op.matrix() + sz), 1e-12);
}

TEST(CollectiveParity, GroundStateIsEven) {
  for (int n : {3, 4, 11}) {
    const auto m = build_collective_ising(n, -1.0, 0.0);
    EXPECT_DOUBLE_EQ(m.driven.sector_solver(2).solve(-2.0).level(1).label, 1.0) << n;
  }
}

TEST(Noise, ZeroAmplitudeIsZero) {
  const NoiseProcess p = sample_noise(0.0, 1.0, 99, 50.0);
  for (double s : p.samples) EXPECT_EQ(s, 0.0);
  EXPECT_EQ(p.at(12.3), 0.0);
  EXPECT_TRUE(std::isinf(p.next_switch(3.0)));
}

TEST(Noise, SameSeedSamePath) {
  const NoiseProcess a = sample_noise(0.7, 0.5, 1234, 100.0);
  const NoiseProcess b = sample_noise(0.7, 0.5, 1234, 100.0);
  EXPECT_EQ(a.samples, b.samples);
  const NoiseProcess c = sample_noise(0.7, 0.5, 1235, 100.0);
  EXPECT_NE(a.samples, c.samples);
}

TEST(Noise, BoundedAndCentred) {
  const NoiseProcess p = sample_noise(1.0, 1.0, 2024, 500.0);
  ASSERT_GE(p.samples.size(), 500u);
  for (double s : p.samples) {
    EXPECT_GE(s, -1.0);
    EXPECT_LT(s, 1.0);
  }
  const double mean = std::accumulate(p.samples.begin(), p.samples.end(), 0.0) / static_cast<double>(p.samples.size());
  EXPECT_GE(mean, -0.15);
  EXPECT_LE(mean, 0.15);
}

TEST(Noise, PiecewiseConstant) {
  const NoiseProcess p = sample_noise(2.0, 0.25, 5, 10.0);
  EXPECT_EQ(p.at(0.0), p.samples[0]);
  EXPECT_EQ(p.at(0.2499), p.samples[0]);
  EXPECT_EQ(p.at(0.25), p.samples[1]);
  EXPECT_DOUBLE_EQ(p.next_switch(0.3), 0.5);
  EXPECT_EQ(p.at(1e6), p.samples.back());
}

TEST(Noise, InvalidParametersRejected) {
  EXPECT_THROW(sample_noise(-1.0, 1.0, 0, 1.0), ConfigurationError);
  EXPECT_THROW(sample_noise(1.0, 0.0, 0, 1.0), ConfigurationError);
}
