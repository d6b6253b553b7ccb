#pragma once

// Structural block operators on state-space data: reachability and
// observability stacks, block-Hankel matrices of Markov parameters, and a
// dense Kronecker product. These are assembly-only and work on any dense
// Eigen expression.

#include <Eigen/Dense>

#include "iohlqg/types.hpp"

namespace iohlqg {

template <typename Derived>
using PlainMatrix = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// [A^{L-1}B, ..., AB, B], highest power leftmost.
template <typename DA, typename DB>
PlainMatrix<DA> reachability(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& B,
                             Index L) {
  if (L < 1) throw InvalidInput("reachability: L must be >= 1");
  if (A.rows() != A.cols()) throw InvalidInput("reachability: A must be square");
  if (B.rows() != A.rows()) throw InvalidInput("reachability: A and B row counts differ");
  const Index n = A.rows();
  const Index m = B.cols();
  PlainMatrix<DA> R(n, L * m);
  PlainMatrix<DA> block = B;
  for (Index j = L - 1; j >= 0; --j) {
    R.middleCols(j * m, m) = block;
    if (j > 0) block = A * block;
  }
  return R;
}

// [C; CA; ...; CA^{L-1}], increasing power top to bottom.
template <typename DA, typename DC>
PlainMatrix<DA> observability(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DC>& C,
                              Index L) {
  if (L < 1) throw InvalidInput("observability: L must be >= 1");
  if (A.rows() != A.cols()) throw InvalidInput("observability: A must be square");
  if (C.cols() != A.rows()) throw InvalidInput("observability: A and C column counts differ");
  const Index n = A.rows();
  const Index p = C.rows();
  PlainMatrix<DA> O(L * p, n);
  PlainMatrix<DA> block = C;
  for (Index i = 0; i < L; ++i) {
    O.middleRows(i * p, p) = block;
    if (i + 1 < L) block = block * A;
  }
  return O;
}

// Strictly block-lower-triangular Toeplitz matrix of Markov parameters:
// block (i,j) is zero for i <= j and CA^{i-j-1}B otherwise (1-based blocks).
template <typename DA, typename DB, typename DC>
PlainMatrix<DA> block_hankel(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& B,
                             const Eigen::MatrixBase<DC>& C, Index L) {
  if (L < 1) throw InvalidInput("block_hankel: L must be >= 1");
  if (A.rows() != A.cols()) throw InvalidInput("block_hankel: A must be square");
  if (B.rows() != A.rows() || C.cols() != A.rows())
    throw InvalidInput("block_hankel: incompatible dimensions");
  const Index p = C.rows();
  const Index m = B.cols();
  PlainMatrix<DA> H = PlainMatrix<DA>::Zero(L * p, L * m);
  // Markov parameter for offset k >= 1 is CA^{k-1}B; constant along block diagonals.
  PlainMatrix<DA> CAk = C;  // holds C A^{k-1}
  for (Index k = 1; k < L; ++k) {
    const PlainMatrix<DA> markov = CAk * B;
    for (Index i = k; i < L; ++i) H.block(i * p, (i - k) * m, p, m) = markov;
    if (k + 1 < L) CAk = CAk * A;
  }
  return H;
}

// Dense Kronecker product.
template <typename DA, typename DB>
PlainMatrix<DA> kron(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& B) {
  PlainMatrix<DA> K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

// A^p by repeated multiplication (p is small everywhere in this library).
template <typename DA>
PlainMatrix<DA> matrix_power(const Eigen::MatrixBase<DA>& A, Index p) {
  if (A.rows() != A.cols()) throw InvalidInput("matrix_power: A must be square");
  if (p < 0) throw InvalidInput("matrix_power: negative power");
  PlainMatrix<DA> P = PlainMatrix<DA>::Identity(A.rows(), A.cols());
  for (Index k = 0; k < p; ++k) P = P * A;
  return P;
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& M, const char* name) {
  if (!M.allFinite()) throw InvalidInput(std::string(name) + ": non-finite entries");
}

}  // namespace iohlqg
