#pragma once

// Symmetry-sector decomposition and sector-resolved eigensolves.
//
// Diagonalizing inside each eigenspace of the conserved operator (rather than
// diagonalizing H and labeling afterwards) keeps sector labels exact even when
// partner levels of different symmetry are degenerate to machine precision.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spqa/core/eigensolver.hpp"
#include "spqa/core/hermitian.hpp"

namespace spqa {

struct Sector {
  double label = 0.0;
  CMatrix isometry;  // dim x d_alpha, orthonormal columns
  Eigen::Index size() const noexcept { return isometry.cols(); }
};

/// Sectors are stored by descending label, so for parity the even (+1)
/// sector comes first. That position is the tie-break key for degenerate
/// levels of different symmetry.
struct SectorBasis {
  std::vector<Sector> sectors;

  Eigen::Index dim() const { return sectors.empty() ? 0 : sectors.front().isometry.rows(); }

  std::size_t find(double label, double tol = 1e-6) const {
    for (std::size_t s = 0; s < sectors.size(); ++s) {
      if (std::abs(sectors[s].label - label) <= tol) return s;
    }
    throw ConfigurationError("no sector with label " + std::to_string(label));
  }

  /// Squared norm of the projection of psi onto sector s.
  double weight(const CVector& psi, std::size_t s) const {
    return (sectors.at(s).isometry.adjoint() * psi).squaredNorm();
  }
};

namespace detail {

/// For a real signed permutation (one entry +-1 per column) returns the
/// target row of every column, otherwise an empty vector.
inline std::vector<Eigen::Index> signed_permutation(const CMatrix& y) {
  std::vector<Eigen::Index> target(static_cast<std::size_t>(y.cols()), -1);
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const Complex v = y(i, j);
      if (v == Complex(0.0, 0.0)) continue;
      if ((v != Complex(1.0, 0.0) && v != Complex(-1.0, 0.0)) || target[static_cast<std::size_t>(j)] >= 0) return {};
      target[static_cast<std::size_t>(j)] = i;
    }
    if (target[static_cast<std::size_t>(j)] < 0) return {};
  }
  return target;
}

/// Sector basis of a signed-permutation involution from its orbits:
/// e_i for fixed points, (e_i +- s e_j)/sqrt(2) for swapped pairs, ordered
/// by the lower index so that banded operators stay banded in each block.
inline SectorBasis orbit_sectors(const CMatrix& y, const std::vector<Eigen::Index>& target) {
  const Eigen::Index n = y.rows();
  std::vector<RVector> even, odd;
  const double r = std::sqrt(0.5);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = target[static_cast<std::size_t>(i)];
    const double sign = y(j, i).real();
    if (target[static_cast<std::size_t>(j)] != i) throw AmbiguousSectorError("symmetry operator is not an involution");
    if (j < i) continue;
    if (j == i) {
      (sign > 0 ? even : odd).push_back(RVector::Unit(n, i));
      continue;
    }
    RVector plus = RVector::Zero(n), minus = RVector::Zero(n);
    plus(i) = r;
    plus(j) = sign * r;
    minus(i) = r;
    minus(j) = -sign * r;
    even.push_back(std::move(plus));
    odd.push_back(std::move(minus));
  }
  SectorBasis basis;
  for (auto* set : {&even, &odd}) {
    if (set->empty()) continue;
    Sector s;
    s.label = set == &even ? 1.0 : -1.0;
    s.isometry = CMatrix::Zero(n, static_cast<Eigen::Index>(set->size()));
    for (std::size_t c = 0; c < set->size(); ++c) s.isometry.col(static_cast<Eigen::Index>(c)) = (*set)[c].cast<Complex>();
    basis.sectors.push_back(std::move(s));
  }
  return basis;
}

}  // namespace detail

/// Eigen-decomposes Y and groups its eigenvalues into sectors. Signed
/// permutations (reflections, spin flips) get the exact orbit basis instead.
inline SectorBasis sector_decompose(const SymmetryOperator& y) {
  if (const auto target = detail::signed_permutation(y.op.matrix()); !target.empty()) {
    return detail::orbit_sectors(y.op.matrix(), target);
  }
  const EigenDecomposition eig = hermitian_eigen(y.op.matrix());
  const Eigen::Index n = eig.values.size();
  const double scale = std::max(1.0, eig.values.cwiseAbs().maxCoeff());
  const double tol = y.eigenvalue_tolerance * scale;

  std::vector<std::pair<Eigen::Index, Eigen::Index>> clusters;  // [begin, end)
  Eigen::Index begin = 0;
  for (Eigen::Index i = 1; i <= n; ++i) {
    if (i < n) {
      const double gap = eig.values(i) - eig.values(i - 1);
      if (gap <= tol) continue;
      if (gap <= 100.0 * tol) {
        throw AmbiguousSectorError("symmetry eigenvalues " + std::to_string(eig.values(i - 1)) + " and " +
                                   std::to_string(eig.values(i)) + " are neither equal nor separated");
      }
    }
    if (eig.values(i - 1) - eig.values(begin) > 2.0 * tol) {
      throw AmbiguousSectorError("symmetry eigenvalue cluster wider than the tolerance");
    }
    clusters.emplace_back(begin, i);
    begin = i;
  }

  SectorBasis basis;
  for (auto it = clusters.rbegin(); it != clusters.rend(); ++it) {
    const auto [b, e] = *it;
    Sector s;
    s.label = eig.values.segment(b, e - b).mean();
    s.isometry = eig.vectors.middleCols(b, e - b);
    basis.sectors.push_back(std::move(s));
  }
  return basis;
}

struct Eigenpair {
  int index = 0;            // global level number, 1 = ground state
  double label = 0.0;       // symmetry eigenvalue lambda_alpha
  std::size_t sector = 0;   // position in the SectorBasis
  int local_index = 0;      // 0-based rank inside its sector
  double energy = 0.0;
  CVector vector;
};

struct SectorSpectrum {
  std::vector<double> parameters;
  std::vector<Eigenpair> entries;  // ascending energy, entries[n-1].index == n

  static constexpr double kTieTolerance = 1e-9;

  static bool tied(double a, double b) {
    return std::abs(a - b) <= kTieTolerance * std::max({1.0, std::abs(a), std::abs(b)});
  }

  std::size_t size() const noexcept { return entries.size(); }

  const Eigenpair& level(int n) const {
    if (n < 1 || static_cast<std::size_t>(n) > entries.size()) {
      throw ConfigurationError("level " + std::to_string(n) + " not available (have " +
                               std::to_string(entries.size()) + ")");
    }
    return entries[static_cast<std::size_t>(n - 1)];
  }

  /// Global indices of the other computed levels sharing level n's sector.
  std::vector<int> same_sector_levels(int n) const {
    const auto& src = level(n);
    std::vector<int> out;
    for (const auto& e : entries) {
      if (e.sector == src.sector && e.index != n) out.push_back(e.index);
    }
    return out;
  }

  /// Number of computed levels degenerate with level n (including itself).
  int degeneracy(int n) const {
    const double e = level(n).energy;
    return static_cast<int>(std::count_if(entries.begin(), entries.end(),
                                          [&](const Eigenpair& p) { return tied(p.energy, e); }));
  }

  /// Entry with the given sector and in-sector rank, if computed.
  const Eigenpair* find(std::size_t sector, int local_index) const {
    for (const auto& e : entries) {
      if (e.sector == sector && e.local_index == local_index) return &e;
    }
    return nullptr;
  }
};

namespace detail {

inline void phase_to_largest_component(CVector& v) {
  const double top = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) >= (1.0 - 1e-9) * top) {
      v *= std::conj(v(i)) / std::abs(v(i));
      return;
    }
  }
}

/// Ascending energy; within a cluster of tied energies, ascending sector position.
inline void order_levels(std::vector<Eigenpair>& levels) {
  std::stable_sort(levels.begin(), levels.end(),
                   [](const Eigenpair& a, const Eigenpair& b) { return a.energy < b.energy; });
  std::size_t begin = 0;
  while (begin < levels.size()) {
    std::size_t end = begin + 1;
    while (end < levels.size() && SectorSpectrum::tied(levels[end - 1].energy, levels[end].energy)) ++end;
    std::stable_sort(levels.begin() + static_cast<std::ptrdiff_t>(begin),
                     levels.begin() + static_cast<std::ptrdiff_t>(end),
                     [](const Eigenpair& a, const Eigenpair& b) {
                       return a.sector != b.sector ? a.sector < b.sector : a.local_index < b.local_index;
                     });
    begin = end;
  }
  for (std::size_t i = 0; i < levels.size(); ++i) levels[i].index = static_cast<int>(i + 1);
}

}  // namespace detail

/// Gauge rule: overlap with the same state of the previous sample is made real
/// and non-negative; without a previous sample the largest-magnitude component
/// is made real positive. States are matched by (sector, in-sector rank).
inline void fix_gauge(SectorSpectrum& spectrum, const SectorSpectrum* prev) {
  for (auto& e : spectrum.entries) {
    const Eigenpair* before = prev ? prev->find(e.sector, e.local_index) : nullptr;
    if (before != nullptr && before->vector.size() == e.vector.size()) {
      const Complex overlap = before->vector.dot(e.vector);
      if (std::abs(overlap) > 1e-12) {
        e.vector *= std::conj(overlap) / std::abs(overlap);
        continue;
      }
    }
    detail::phase_to_largest_component(e.vector);
  }
}

namespace detail {

inline void check_block_hermitian(const CMatrix& block, double scale) {
  const double asym = max_abs(block - block.adjoint());
  if (asym > 1e-10 * std::max(1.0, scale)) {
    throw NumericalError("projected block lost Hermiticity (residual " + std::to_string(asym) + ")");
  }
}

inline void check_sector_leakage(const CMatrix& op, const SectorBasis& basis) {
  const double scale = std::max(1.0, max_abs(op));
  for (std::size_t a = 0; a < basis.sectors.size(); ++a) {
    for (std::size_t b = a + 1; b < basis.sectors.size(); ++b) {
      const CMatrix cross = basis.sectors[a].isometry.adjoint() * op * basis.sectors[b].isometry;
      const double leak = max_abs(cross);
      if (leak > 1e-8 * scale) {
        throw NumericalError("operator couples symmetry sectors (max element " + std::to_string(leak) +
                             "); it does not conserve the symmetry");
      }
    }
  }
}

inline std::vector<Eigenpair> diagonalize_blocks(const std::vector<CMatrix>& blocks, const SectorBasis& basis,
                                                 Eigen::Index levels_per_sector) {
  std::vector<Eigenpair> levels;
  for (std::size_t s = 0; s < blocks.size(); ++s) {
    if (blocks[s].rows() == 0) continue;
    const EigenDecomposition eig = hermitian_eigen(blocks[s], levels_per_sector);
    for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
      Eigenpair p;
      p.label = basis.sectors[s].label;
      p.sector = s;
      p.local_index = static_cast<int>(k);
      p.energy = eig.values(k);
      p.vector = basis.sectors[s].isometry * eig.vectors.col(k);
      p.vector.normalize();
      levels.push_back(std::move(p));
    }
  }
  order_levels(levels);
  // Beyond the first k global levels a lower level of some sector may not
  // have been computed, so only that prefix carries valid global indices.
  if (levels_per_sector > 0 && levels.size() > static_cast<std::size_t>(levels_per_sector)) {
    levels.resize(static_cast<std::size_t>(levels_per_sector));
  }
  return levels;
}

}  // namespace detail

/// Diagonalizes H inside each sector and merges the results with global
/// ascending indices. `levels_per_sector` = 0 keeps every level.
inline SectorSpectrum eigensolve_in_sectors(const HermitianOperator& h, const SectorBasis& basis,
                                            const SectorSpectrum* prev = nullptr,
                                            Eigen::Index levels_per_sector = 0) {
  if (h.dim() != basis.dim()) {
    throw ConfigurationError("Hamiltonian and sector basis dimensions differ");
  }
  const double scale = max_abs(h.matrix());
  detail::check_sector_leakage(h.matrix(), basis);
  std::vector<CMatrix> blocks;
  for (const auto& s : basis.sectors) {
    CMatrix block = s.isometry.adjoint() * h.matrix() * s.isometry;
    detail::check_block_hermitian(block, scale);
    blocks.push_back((0.5 * (block + block.adjoint())).eval());
  }
  SectorSpectrum out;
  out.entries = detail::diagonalize_blocks(blocks, basis, levels_per_sector);
  fix_gauge(out, prev);
  return out;
}

/// Sector solver for a parametric family: every operator is projected onto
/// each sector once, so a solve at a new R only costs the block eigensolves.
class SectorSolver {
 public:
  SectorSolver(ParametricHamiltonian ph, SectorBasis basis, Eigen::Index levels_per_sector = 0)
      : ph_(std::move(ph)), basis_(std::move(basis)), levels_(levels_per_sector) {
    if (ph_.dim() != basis_.dim()) {
      throw ConfigurationError("Hamiltonian and sector basis dimensions differ");
    }
    auto project = [&](const HermitianOperator& op) {
      detail::check_sector_leakage(op.matrix(), basis_);
      std::vector<CMatrix> blocks;
      for (const auto& s : basis_.sectors) {
        CMatrix block = s.isometry.adjoint() * op.matrix() * s.isometry;
        detail::check_block_hermitian(block, max_abs(op.matrix()));
        blocks.push_back((0.5 * (block + block.adjoint())).eval());
      }
      return blocks;
    };
    constant_blocks_ = project(ph_.constant_part());
    for (const auto& t : ph_.terms()) term_blocks_.push_back(project(t));
  }

  const ParametricHamiltonian& hamiltonian() const noexcept { return ph_; }
  const SectorBasis& basis() const noexcept { return basis_; }
  Eigen::Index levels_per_sector() const noexcept { return levels_; }

  SectorSpectrum solve(std::span<const double> params, const SectorSpectrum* prev = nullptr) const {
    if (params.size() != ph_.param_count()) {
      throw ConfigurationError("expected " + std::to_string(ph_.param_count()) + " parameters");
    }
    std::vector<CMatrix> blocks = constant_blocks_;
    for (std::size_t s = 0; s < blocks.size(); ++s) {
      for (std::size_t i = 0; i < params.size(); ++i) blocks[s].noalias() += params[i] * term_blocks_[i][s];
    }
    SectorSpectrum out;
    out.parameters.assign(params.begin(), params.end());
    out.entries = detail::diagonalize_blocks(blocks, basis_, levels_);
    fix_gauge(out, prev);
    return out;
  }

  SectorSpectrum solve(double param, const SectorSpectrum* prev = nullptr) const {
    return solve(std::span<const double>(&param, 1), prev);
  }

 private:
  ParametricHamiltonian ph_;
  SectorBasis basis_;
  Eigen::Index levels_;
  std::vector<CMatrix> constant_blocks_;
  std::vector<std::vector<CMatrix>> term_blocks_;  // [term][sector]
};

/// <bra| op |ket> for two eigenvectors of different sectors. For a
/// symmetry-conserving op this vanishes identically.
inline Complex cross_sector_element(const HermitianOperator& op, const Eigenpair& bra, const Eigenpair& ket) {
  if (bra.sector == ket.sector) {
    throw ConfigurationError("cross_sector_element needs eigenvectors from different sectors");
  }
  return op.element(bra.vector, ket.vector);
}

}  // namespace spqa
