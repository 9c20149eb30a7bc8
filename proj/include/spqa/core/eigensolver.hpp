#pragma once

// Dense Hermitian eigensolver backed by LAPACK's MRRR driver (?syevr / ?heevr).
// Only the lowest `levels` eigenpairs are computed when requested, which is
// what the sweep machinery needs almost everywhere.

#include <lapacke.h>

#include <algorithm>
#include <string>
#include <vector>

#include "spqa/core/types.hpp"

namespace spqa {

struct EigenDecomposition {
  RVector values;   // ascending
  CMatrix vectors;  // unit-norm columns
};

namespace detail {

inline void check_lapack(lapack_int info, const char* routine) {
  if (info != 0) {
    throw NumericalError(std::string(routine) + " failed with info = " + std::to_string(info));
  }
}

/// True when every entry off the three central diagonals is exactly zero.
inline bool is_tridiagonal(const RMatrix& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if ((i > j + 1 || j > i + 1) && a(i, j) != 0.0) return false;
    }
  }
  return true;
}

inline EigenDecomposition tridiagonal_eigen(const RMatrix& a, Eigen::Index levels) {
  const auto n = static_cast<lapack_int>(a.rows());
  const auto k = static_cast<lapack_int>(levels);
  RVector d = a.diagonal();
  RVector e = RVector::Zero(n);
  for (lapack_int i = 0; i + 1 < n; ++i) e(i) = 0.5 * (a(i + 1, i) + a(i, i + 1));
  RVector w(n);
  RMatrix z(n, std::max<lapack_int>(k, 1));
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  lapack_int found = 0;
  const char range = (k == n) ? 'A' : 'I';
  check_lapack(LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', range, n, d.data(), e.data(), 0.0, 0.0, 1, k, 0.0, &found,
                              w.data(), z.data(), n, support.data()),
               "dstevr");
  return {w.head(found), z.leftCols(found).cast<Complex>()};
}

inline EigenDecomposition real_symmetric_eigen(RMatrix a, Eigen::Index levels) {
  if (a.rows() > 2 && is_tridiagonal(a)) return tridiagonal_eigen(a, levels);
  const auto n = static_cast<lapack_int>(a.rows());
  const auto k = static_cast<lapack_int>(levels);
  RVector w(n);
  RMatrix z(n, std::max<lapack_int>(k, 1));
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  lapack_int found = 0;
  const char range = (k == n) ? 'A' : 'I';
  check_lapack(LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', range, 'L', n, a.data(), n, 0.0, 0.0, 1, k, 0.0,
                              &found, w.data(), z.data(), n, support.data()),
               "dsyevr");
  return {w.head(found), z.leftCols(found).cast<Complex>()};
}

// std::complex<double> and lapack_complex_double share layout
inline lapack_complex_double* as_lapack(Complex* p) { return reinterpret_cast<lapack_complex_double*>(p); }

inline EigenDecomposition complex_hermitian_eigen(CMatrix a, Eigen::Index levels) {
  const auto n = static_cast<lapack_int>(a.rows());
  const auto k = static_cast<lapack_int>(levels);
  RVector w(n);
  CMatrix z(n, std::max<lapack_int>(k, 1));
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  lapack_int found = 0;
  const char range = (k == n) ? 'A' : 'I';
  check_lapack(LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', range, 'L', n, as_lapack(a.data()), n, 0.0, 0.0, 1, k, 0.0,
                              &found, w.data(), as_lapack(z.data()), n, support.data()),
               "zheevr");
  return {w.head(found), z.leftCols(found)};
}

}  // namespace detail

/// Lowest `levels` eigenpairs of a Hermitian matrix (all of them when levels
/// is 0 or exceeds the dimension). Real input takes the cheaper real path.
inline EigenDecomposition hermitian_eigen(const CMatrix& a, Eigen::Index levels = 0) {
  const Eigen::Index n = a.rows();
  if (n == 0) return {};
  if (levels <= 0 || levels > n) levels = n;
  if (a.imag().cwiseAbs().maxCoeff() == 0.0) {
    return detail::real_symmetric_eigen(a.real(), levels);
  }
  return detail::complex_hermitian_eigen(a, levels);
}

}  // namespace spqa
