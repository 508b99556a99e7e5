#pragma once

// Thin wrappers over the LAPACK complex Schur routines used by the Galerkin solver.

#include <complex>
#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include <Eigen/Dense>

#include "hillriesz/common.hpp"

namespace hillriesz::lapack {

struct Schur {
  Eigen::MatrixXcd T;  // upper triangular
  Eigen::MatrixXcd U;  // unitary, A = U T U^H
};

inline Schur complex_schur(const Eigen::MatrixXcd& A) {
  const auto n = static_cast<lapack_int>(A.rows());
  Schur s{A, Eigen::MatrixXcd(A.rows(), A.cols())};
  Eigen::VectorXcd w(A.rows());
  lapack_int sdim = 0;
  const lapack_int info = LAPACKE_zgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, n, s.T.data(), n, &sdim, w.data(),
                                        s.U.data(), n);
  if (info != 0) throw SolverFailure("zgees failed with info=" + std::to_string(info), -1.0);
  s.T.triangularView<Eigen::StrictlyLower>().setZero();
  return s;
}

/// Right eigenvectors of A from its Schur form, one per column.
inline Eigen::MatrixXcd schur_eigenvectors(const Schur& s) {
  const auto n = static_cast<lapack_int>(s.T.rows());
  Eigen::MatrixXcd T = s.T;
  Eigen::MatrixXcd V = s.U;
  lapack_int used = 0;
  const lapack_int info = LAPACKE_ztrevc(LAPACK_COL_MAJOR, 'R', 'B', nullptr, n, T.data(), n, nullptr, 1,
                                         V.data(), n, n, &used);
  if (info != 0) throw SolverFailure("ztrevc failed with info=" + std::to_string(info), -1.0);
  return V;
}

/// Moves diagonal entry `from` to position `to` (0-based), updating T and U in place.
inline void reorder(Schur& s, int from, int to) {
  if (from == to) return;
  const auto n = static_cast<lapack_int>(s.T.rows());
  const lapack_int info =
      LAPACKE_ztrexc(LAPACK_COL_MAJOR, 'V', n, s.T.data(), n, s.U.data(), n, from + 1, to + 1);
  if (info != 0) throw SolverFailure("ztrexc failed with info=" + std::to_string(info), -1.0);
}

}  // namespace hillriesz::lapack
