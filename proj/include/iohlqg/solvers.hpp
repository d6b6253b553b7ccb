#pragma once

// Dense solvers for discrete-time Lyapunov (Stein) equations, the discrete
// algebraic Riccati equation, Moore-Penrose pseudoinverse, spectral radius,
// Hankel singular values and balanced truncation.
//
// Lyapunov equations go through the Kronecker-vectorized linear system for
// n <= 40 (exact at these sizes) and through a complex-Schur Bartels-Stewart
// sweep above that. SchurStein exposes the Schur path directly so that a hot
// loop can factor the closed-loop matrix once and solve both equation
// orientations against it.

#include <Eigen/Dense>

#include <complex>

#include "iohlqg/types.hpp"

namespace iohlqg {

double spectral_radius(const Eigen::Ref<const Matrix>& M);

// Moore-Penrose pseudoinverse; singular values below cutoff * sigma_max are
// treated as zero. Total function.
Matrix pinv(const Eigen::Ref<const Matrix>& M, double cutoff = 1e-10);

// Numerical rank with the same relative cutoff convention as pinv.
Index rank_svd(const Eigen::Ref<const Matrix>& M, double cutoff = 1e-10);

// A X A^T - X + Q = 0 (controllability orientation). Requires rho(A) < 1.
Matrix solve_dlyap(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& Q,
                   const SolverTolerances& tol = {});

// A^T X A - X + Q = 0 (observability orientation).
Matrix solve_dlyap_transpose(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& Q,
                             const SolverTolerances& tol = {});

// Kronecker-vectorized reference path: solves (I - A (x) A) vec(X) = vec(Q)
// for A X A^T - X + Q = 0. No stability or residual gate; test/oracle use.
Matrix solve_dlyap_kron(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& Q);

// One complex Schur factorization of A, reusable for both Stein orientations
// and for the spectral radius.
class SchurStein {
 public:
  explicit SchurStein(const Eigen::Ref<const Matrix>& A);

  double rho() const { return rho_; }

  // A X A^T - X + Q = 0; Q symmetric.
  Matrix solve_forward(const Eigen::Ref<const Matrix>& Q) const;

  // A^T X A - X + Q = 0; Q symmetric.
  Matrix solve_adjoint(const Eigen::Ref<const Matrix>& Q) const;

 private:
  Eigen::MatrixXcd u_, t_, t_adj_;  // A = U T U^*
  double rho_ = 0.0;
};

// Stabilizing solution of A^T P A - P - A^T P B (R + B^T P B)^{-1} B^T P A + Q = 0
// via the structured doubling algorithm.
Matrix solve_dare(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& B,
                  const Eigen::Ref<const Matrix>& Q, const Eigen::Ref<const Matrix>& R,
                  const SolverTolerances& tol = {});

// Symmetric PSD square root; eigenvalues in [-clamp, 0) are flushed to zero,
// anything below -clamp is rejected.
Matrix sym_sqrt_psd(const Eigen::Ref<const Matrix>& M, double clamp = 1e-12);

// Square roots of the eigenvalues of Wc * Wo, descending. Requires rho(A) < 1.
Vector hankel_singular_values(const Eigen::Ref<const Matrix>& A,
                              const Eigen::Ref<const Matrix>& B,
                              const Eigen::Ref<const Matrix>& C,
                              const SolverTolerances& tol = {});

struct StateSpace {
  Matrix A, B, C;
  Vector hsv;  // Hankel singular values retained by a truncation; empty otherwise
};

// Square-root balanced truncation to the given order. The returned hsv holds
// the retained balanced-Gramian values, i.e. the largest `order` Hankel
// singular values of the input system.
StateSpace balanced_truncation(const Eigen::Ref<const Matrix>& A,
                               const Eigen::Ref<const Matrix>& B,
                               const Eigen::Ref<const Matrix>& C, Index order,
                               const SolverTolerances& tol = {});

// C (e^{i omega} I - A)^{-1} B at a single normalized frequency (rad/sample).
Eigen::MatrixXcd freq_response(const Eigen::Ref<const Matrix>& A,
                               const Eigen::Ref<const Matrix>& B,
                               const Eigen::Ref<const Matrix>& C, double omega);

}  // namespace iohlqg
