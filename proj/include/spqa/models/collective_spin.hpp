#pragma once

// Homogeneous transverse-field Ising model restricted to the maximal-spin
// (Dicke) sector S = N/2:
//   H(B) = B Sx + (J/N) Sz^2 + 2 eta Sz
// which is (B/2) sum sx_i + (J/2N) sum_{i<j} sz_i sz_j + eta sum sz_i up to the
// constant -J/4. Basis order: M = -S, ..., +S.

#include <cmath>
#include <string>

#include "spqa/core/eigensolver.hpp"
#include "spqa/models/driven_model.hpp"

namespace spqa {

struct SpinMatrices {
  RMatrix sx;
  RMatrix sz;
};

inline SpinMatrices spin_matrices(int n_spins) {
  const double s = 0.5 * n_spins;
  const int d = n_spins + 1;
  SpinMatrices out{RMatrix::Zero(d, d), RMatrix::Zero(d, d)};
  for (int k = 0; k < d; ++k) {
    const double m = -s + k;
    out.sz(k, k) = m;
    if (k + 1 < d) {
      // <m+1| S+ |m> = sqrt(S(S+1) - m(m+1)); Sx = (S+ + S-)/2
      const double up = std::sqrt(s * (s + 1.0) - m * (m + 1.0));
      out.sx(k + 1, k) = 0.5 * up;
      out.sx(k, k + 1) = 0.5 * up;
    }
  }
  return out;
}

/// Spin-inversion parity e^{i pi S} exp(-i pi Sx) on the Dicke sector.
///
/// exp(-i pi Sx) is built from the eigendecomposition of Sx; the global
/// phase e^{i pi S} makes it real with eigenvalues +-1 and assigns +1 to the
/// fully x-polarized state for every N. The exact result is the signed
/// permutation |M> -> |-M>, so entries are snapped to {-1, 0, 1} once they
/// agree to 1e-8.
inline SymmetryOperator parity_collective(int n_spins) {
  if (n_spins < 2) throw ConfigurationError("need at least two spins", "N");
  const double s = 0.5 * n_spins;
  const SpinMatrices ops = spin_matrices(n_spins);
  const EigenDecomposition eig = hermitian_eigen(ops.sx.cast<Complex>());
  CVector phases(eig.values.size());
  for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
    const double m = std::round(2.0 * eig.values(k)) / 2.0;
    // e^{i pi S} e^{-i pi m} = e^{i pi (S - m)}, S - m integer
    phases(k) = std::polar(1.0, M_PI * (s - m));
  }
  CMatrix p = eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double re = std::round(p(i, j).real());
      if (std::abs(p(i, j) - Complex(re, 0.0)) < 1e-8) p(i, j) = re;
    }
  }
  return SymmetryOperator{HermitianOperator(std::move(p))};
}

struct CollectiveSpinModel {
  int n_spins = 0;
  double coupling = -1.0;  // J
  double bias = 0.0;       // eta
  SpinMatrices spin;
  DrivenModel driven;

  Eigen::Index dim() const { return n_spins + 1; }
};

inline CollectiveSpinModel build_collective_ising(int n_spins, double coupling, double bias) {
  if (n_spins < 2) throw ConfigurationError("need at least two spins", "N");
  CollectiveSpinModel m;
  m.n_spins = n_spins;
  m.coupling = coupling;
  m.bias = bias;
  m.spin = spin_matrices(n_spins);

  const RMatrix ising = (coupling / n_spins) * m.spin.sz * m.spin.sz;
  const HermitianOperator field(m.spin.sx);
  m.driven.name = "collective_ising";
  m.driven.parameter_name = "B";
  m.driven.symmetric = ParametricHamiltonian(HermitianOperator(ising), {field});
  m.driven.hamiltonian = ParametricHamiltonian(HermitianOperator(RMatrix(ising + 2.0 * bias * m.spin.sz)), {field});
  m.driven.symmetry = parity_collective(n_spins);
  m.driven.bias_operator = HermitianOperator(RMatrix(2.0 * m.spin.sz));
  m.driven.static_bias = bias;
  return m;
}

}  // namespace spqa
