#pragma once

// Brute-force Ising model on the full 2^N product space, built from explicit
// Kronecker products of Pauli matrices. Shares no code with the collective
// spin algebra, so agreement between the two is a real check.
//
// Product basis index bits, most significant first, give spins 1..N with
// bit 0 = up (sz = +1).

#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>
#include <cmath>
#include <string>

#include "spqa/models/driven_model.hpp"

namespace spqa {

inline constexpr int kFullSpaceMaxSpins = 12;

namespace oracle {

using SparseRMatrix = Eigen::SparseMatrix<double>;

inline SparseRMatrix pauli(char which) {
  SparseRMatrix p(2, 2);
  if (which == 'x') {
    p.insert(0, 1) = 1.0;
    p.insert(1, 0) = 1.0;
  } else if (which == 'z') {
    p.insert(0, 0) = 1.0;
    p.insert(1, 1) = -1.0;
  } else {
    p.insert(0, 0) = 1.0;
    p.insert(1, 1) = 1.0;
  }
  return p;
}

/// sigma_{which} acting on spin `site` (0-based) of n.
inline SparseRMatrix site_operator(int n, int site, char which) {
  SparseRMatrix out = site == 0 ? pauli(which) : pauli('1');
  for (int k = 1; k < n; ++k) {
    const SparseRMatrix next = Eigen::kroneckerProduct(out, k == site ? pauli(which) : pauli('1')).eval();
    out = next;
  }
  return out;
}

inline void check_size(int n) {
  if (n < 2) throw ConfigurationError("need at least two spins", "N");
  if (n > kFullSpaceMaxSpins) {
    throw ConfigurationError("full-space oracle refuses N > " + std::to_string(kFullSpaceMaxSpins), "N");
  }
}

struct FullSpaceTerms {
  SparseRMatrix sum_x;   // sum_i sx_i
  SparseRMatrix sum_z;   // sum_i sz_i
  SparseRMatrix sum_zz;  // sum_{i<j} sz_i sz_j
  SparseRMatrix flip;    // prod_i sx_i
};

inline FullSpaceTerms full_space_terms(int n) {
  check_size(n);
  const auto dim = static_cast<Eigen::Index>(1) << n;
  FullSpaceTerms t{SparseRMatrix(dim, dim), SparseRMatrix(dim, dim), SparseRMatrix(dim, dim), {}};
  std::vector<SparseRMatrix> z;
  for (int i = 0; i < n; ++i) {
    t.sum_x += site_operator(n, i, 'x');
    z.push_back(site_operator(n, i, 'z'));
    t.sum_z += z.back();
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) t.sum_zz += SparseRMatrix(z[i] * z[j]);
  }
  t.flip = pauli('x');
  for (int k = 1; k < n; ++k) {
    const SparseRMatrix next = Eigen::kroneckerProduct(t.flip, pauli('x')).eval();
    t.flip = next;
  }
  return t;
}

}  // namespace oracle

/// H = (B/2) sum sx_i + (J/2N) sum_{i<j} sz_i sz_j + eta sum sz_i.
inline HermitianOperator full_space_ising(int n, double coupling, double field, double bias) {
  const oracle::FullSpaceTerms t = oracle::full_space_terms(n);
  const oracle::SparseRMatrix h =
      0.5 * field * t.sum_x + (coupling / (2.0 * n)) * t.sum_zz + bias * t.sum_z;
  return HermitianOperator(RMatrix(h));
}

/// prod_i sx_i, the global spin flip.
inline SymmetryOperator full_space_parity(int n) {
  return SymmetryOperator{HermitianOperator(RMatrix(oracle::full_space_terms(n).flip))};
}

/// The same Ising family as a driven model on the product space, swept in B.
inline DrivenModel full_space_model(int n, double coupling, double bias) {
  const oracle::FullSpaceTerms t = oracle::full_space_terms(n);
  const RMatrix zz = RMatrix(t.sum_zz) * (coupling / (2.0 * n));
  const RMatrix z = RMatrix(t.sum_z);
  const std::vector<HermitianOperator> terms{HermitianOperator(RMatrix(0.5 * RMatrix(t.sum_x)))};
  DrivenModel m{"full_space_ising",
                ParametricHamiltonian(HermitianOperator(RMatrix(zz + bias * z)), terms),
                ParametricHamiltonian(HermitianOperator(zz), terms),
                SymmetryOperator{HermitianOperator(RMatrix(t.flip))},
                HermitianOperator(z),
                bias,
                "B"};
  return m;
}

/// Isometry (2^N x (N+1)) taking |S = N/2, M> to the symmetric product-space
/// state, column k <-> M = -S + k (k spins up).
inline RMatrix dicke_embedding(int n) {
  oracle::check_size(n);
  const auto dim = static_cast<Eigen::Index>(1) << n;
  RMatrix e = RMatrix::Zero(dim, n + 1);
  for (Eigen::Index idx = 0; idx < dim; ++idx) {
    const int down = __builtin_popcountll(static_cast<unsigned long long>(idx));
    e(idx, n - down) = 1.0;
  }
  for (int k = 0; k <= n; ++k) e.col(k).normalize();
  return e;
}

}  // namespace spqa
