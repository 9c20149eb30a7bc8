#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spqa/core/types.hpp"

namespace spqa {

/// Largest entry magnitude of a dense matrix (the max-norm used throughout).
inline double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Dense Hermitian matrix in units where hbar = 1.
///
/// Construction checks the Hermiticity invariant to 1e-12 absolute and then
/// symmetrizes, so downstream code can rely on exact Hermitian storage.
class HermitianOperator {
 public:
  static constexpr double kHermiticityTolerance = 1e-12;

  HermitianOperator() = default;

  explicit HermitianOperator(CMatrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols()) {
      throw ConfigurationError("operator must be square");
    }
    if (entries_.rows() < 2) {
      throw ConfigurationError("operator dimension must be at least 2");
    }
    const double asym = max_abs(entries_ - entries_.adjoint());
    if (asym > kHermiticityTolerance) {
      throw ConfigurationError("operator is not Hermitian (residual " + std::to_string(asym) + ")");
    }
    entries_ = (0.5 * (entries_ + entries_.adjoint())).eval();
  }

  explicit HermitianOperator(const RMatrix& entries)
      : HermitianOperator(CMatrix(entries.cast<Complex>())) {}

  static HermitianOperator identity(Eigen::Index dim) {
    return HermitianOperator(CMatrix(CMatrix::Identity(dim, dim)));
  }

  static HermitianOperator diagonal(const RVector& diag) {
    return HermitianOperator(CMatrix(diag.cast<Complex>().asDiagonal()));
  }

  Eigen::Index dim() const noexcept { return entries_.rows(); }
  const CMatrix& matrix() const noexcept { return entries_; }

  /// True when every entry has an exactly vanishing imaginary part.
  bool is_real() const { return entries_.imag().cwiseAbs().maxCoeff() == 0.0; }

  Complex element(const CVector& bra, const CVector& ket) const {
    return bra.dot(entries_ * ket);  // Eigen's dot conjugates the left operand
  }

 private:
  CMatrix entries_;
};

/// H(R) = constant_part + sum_i R_i * terms[i].
class ParametricHamiltonian {
 public:
  ParametricHamiltonian() = default;

  ParametricHamiltonian(HermitianOperator constant_part, std::vector<HermitianOperator> terms)
      : constant_(std::move(constant_part)), terms_(std::move(terms)) {
    if (terms_.empty()) {
      throw ConfigurationError("parametric Hamiltonian needs at least one driven term");
    }
    for (const auto& t : terms_) {
      if (t.dim() != constant_.dim()) {
        throw ConfigurationError("all operators of a parametric Hamiltonian must share one dimension");
      }
    }
  }

  Eigen::Index dim() const noexcept { return constant_.dim(); }
  std::size_t param_count() const noexcept { return terms_.size(); }
  const HermitianOperator& constant_part() const noexcept { return constant_; }
  const std::vector<HermitianOperator>& terms() const noexcept { return terms_; }

  /// dH/dR_i, independent of R for this linear family.
  const HermitianOperator& derivative(std::size_t i = 0) const { return terms_.at(i); }

  bool is_real() const {
    if (!constant_.is_real()) return false;
    for (const auto& t : terms_) {
      if (!t.is_real()) return false;
    }
    return true;
  }

 private:
  HermitianOperator constant_;
  std::vector<HermitianOperator> terms_;
};

inline HermitianOperator assemble(const ParametricHamiltonian& ph, std::span<const double> params) {
  if (params.size() != ph.param_count()) {
    throw ConfigurationError("expected " + std::to_string(ph.param_count()) + " parameters, got " +
                             std::to_string(params.size()));
  }
  CMatrix h = ph.constant_part().matrix();
  for (std::size_t i = 0; i < params.size(); ++i) {
    h.noalias() += params[i] * ph.terms()[i].matrix();
  }
  return HermitianOperator(std::move(h));
}

inline HermitianOperator assemble(const ParametricHamiltonian& ph, double param) {
  return assemble(ph, std::span<const double>(&param, 1));
}

/// A conserved operator Y. For the parity-type symmetries used here Y is a
/// Hermitian involution, which is all sector_decompose needs.
struct SymmetryOperator {
  HermitianOperator op;
  double eigenvalue_tolerance = 1e-8;

  Eigen::Index dim() const noexcept { return op.dim(); }

  /// max |Y^2 - 1| and max |Y - Y^dagger|; both vanish for a parity operator.
  std::pair<double, double> involution_residuals() const {
    const CMatrix& y = op.matrix();
    const double sq = max_abs(y * y - CMatrix::Identity(y.rows(), y.cols()));
    return {sq, max_abs(y - y.adjoint())};
  }
};

inline double commutator_residual(const HermitianOperator& h, const SymmetryOperator& y) {
  if (h.dim() != y.dim()) {
    throw ConfigurationError("commutator of operators with different dimensions");
  }
  const CMatrix& a = h.matrix();
  const CMatrix& b = y.op.matrix();
  return max_abs(a * b - b * a);
}

}  // namespace spqa
