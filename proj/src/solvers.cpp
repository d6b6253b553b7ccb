#include "iohlqg/solvers.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "iohlqg/block_ops.hpp"

namespace iohlqg {

namespace {

void require_square(const Eigen::Ref<const Matrix>& M, const char* name) {
  if (M.rows() != M.cols()) throw InvalidInput(std::string(name) + ": matrix must be square");
}

void require_symmetric(const Eigen::Ref<const Matrix>& M, const char* name) {
  require_square(M, name);
  const double scale = std::max(1.0, M.norm());
  if ((M - M.transpose()).norm() > 1e-10 * scale)
    throw InvalidInput(std::string(name) + ": matrix must be symmetric");
}

Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

void check_stein_residual(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& Q,
                          const Matrix& X, bool transposed, const SolverTolerances& tol) {
  const Matrix res = transposed ? Matrix(A.transpose() * X * A - X + Q)
                                : Matrix(A * X * A.transpose() - X + Q);
  if (res.norm() > tol.lyap_residual * (1.0 + Q.norm()))
    throw SolverError("dlyap: residual " + std::to_string(res.norm()) +
                      " exceeds tolerance gate");
}

Matrix solve_stein(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& Q,
                   bool transposed, const SolverTolerances& tol) {
  require_square(A, "dlyap");
  require_symmetric(Q, "dlyap Q");
  if (A.rows() != Q.rows()) throw InvalidInput("dlyap: A and Q dimensions differ");
  require_finite(A, "dlyap A");
  require_finite(Q, "dlyap Q");
  tol.validate();

  const double rho = spectral_radius(A);
  if (!(rho < 1.0 - tol.stability_margin))
    throw InstabilityError("dlyap: spectral radius " + std::to_string(rho) +
                           " violates the stability gate");

  Matrix X;
  if (A.rows() <= 40) {
    X = transposed ? solve_dlyap_kron(A.transpose(), Q) : solve_dlyap_kron(A, Q);
  } else {
    const SchurStein schur(A);
    X = transposed ? schur.solve_adjoint(Q) : schur.solve_forward(Q);
  }
  X = symmetrize(X);
  check_stein_residual(A, Q, X, transposed, tol);
  return X;
}

}  // namespace

double spectral_radius(const Eigen::Ref<const Matrix>& M) {
  require_square(M, "spectral_radius");
  if (M.rows() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw SolverError("spectral_radius: eigensolver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix pinv(const Eigen::Ref<const Matrix>& M, double cutoff) {
  if (M.size() == 0) return Matrix(M.cols(), M.rows());
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  Vector sinv = Vector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff * smax && s(i) > 0.0) sinv(i) = 1.0 / s(i);
  return svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose();
}

Index rank_svd(const Eigen::Ref<const Matrix>& M, double cutoff) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const Vector& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff * smax && s(i) > 0.0) ++r;
  return r;
}

Matrix solve_dlyap(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& Q,
                   const SolverTolerances& tol) {
  return solve_stein(A, Q, /*transposed=*/false, tol);
}

Matrix solve_dlyap_transpose(const Eigen::Ref<const Matrix>& A,
                             const Eigen::Ref<const Matrix>& Q, const SolverTolerances& tol) {
  return solve_stein(A, Q, /*transposed=*/true, tol);
}

Matrix solve_dlyap_kron(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& Q) {
  const Index n = A.rows();
  // vec(A X A^T) = (A (x) A) vec(X), so (I - A (x) A) vec(X) = vec(Q).
  Matrix S = Matrix::Identity(n * n, n * n) - kron(A, A);
  const Matrix Qc = Q;
  Eigen::Map<const Vector> q(Qc.data(), n * n);
  Vector x = S.partialPivLu().solve(q);
  return Eigen::Map<const Matrix>(x.data(), n, n);
}

SchurStein::SchurStein(const Eigen::Ref<const Matrix>& A) {
  require_square(A, "SchurStein");
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(A.cast<std::complex<double>>());
  if (schur.info() != Eigen::Success) throw SolverError("SchurStein: factorization failed");
  u_ = schur.matrixU();
  t_ = schur.matrixT();
  t_adj_ = t_.adjoint();
  rho_ = t_.diagonal().cwiseAbs().maxCoeff();
}

// T Xt T^* - Xt + Qt = 0 with T upper triangular: column j couples only to
// columns l >= j, so sweep j = n-1 .. 0 with one triangular solve each.
Matrix SchurStein::solve_forward(const Eigen::Ref<const Matrix>& Q) const {
  const Index n = t_.rows();
  if (Q.rows() != n || Q.cols() != n) throw InvalidInput("SchurStein: Q dimension mismatch");
  Eigen::MatrixXcd qt = u_.adjoint() * Q * u_;
  Eigen::MatrixXcd xt = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd m(n, n);
  for (Index j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd rhs = -qt.col(j);
    if (j + 1 < n) {
      // accumulated coupling: T * sum_{l>j} conj(T_jl) Xt_col(l)
      Eigen::VectorXcd c = xt.rightCols(n - 1 - j) * t_.row(j).tail(n - 1 - j).adjoint();
      rhs -= t_ * c;
    }
    m = std::conj(t_(j, j)) * t_;
    m.diagonal().array() -= 1.0;
    xt.col(j) = m.triangularView<Eigen::Upper>().solve(rhs);
  }
  Matrix X = (u_ * xt * u_.adjoint()).real();
  return 0.5 * (X + X.transpose());
}

// T^* Xt T - Xt + Qt = 0: lower-triangular coefficient, sweep j = 0 .. n-1.
Matrix SchurStein::solve_adjoint(const Eigen::Ref<const Matrix>& Q) const {
  const Index n = t_.rows();
  if (Q.rows() != n || Q.cols() != n) throw InvalidInput("SchurStein: Q dimension mismatch");
  Eigen::MatrixXcd qt = u_.adjoint() * Q * u_;
  Eigen::MatrixXcd xt = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd m(n, n);
  for (Index j = 0; j < n; ++j) {
    Eigen::VectorXcd rhs = -qt.col(j);
    if (j > 0) {
      // accumulated coupling: T^* * sum_{l<j} T_lj Xt_col(l)
      Eigen::VectorXcd c = xt.leftCols(j) * t_.col(j).head(j);
      rhs -= t_adj_ * c;
    }
    m = t_(j, j) * t_adj_;
    m.diagonal().array() -= 1.0;
    xt.col(j) = m.triangularView<Eigen::Lower>().solve(rhs);
  }
  Matrix X = (u_ * xt * u_.adjoint()).real();
  return 0.5 * (X + X.transpose());
}

Matrix solve_dare(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& B,
                  const Eigen::Ref<const Matrix>& Q, const Eigen::Ref<const Matrix>& R,
                  const SolverTolerances& tol) {
  require_square(A, "dare A");
  require_symmetric(Q, "dare Q");
  require_symmetric(R, "dare R");
  if (B.rows() != A.rows() || Q.rows() != A.rows() || R.rows() != B.cols())
    throw InvalidInput("dare: incompatible dimensions");
  require_finite(A, "dare A");
  require_finite(B, "dare B");
  tol.validate();

  Eigen::LLT<Matrix> lltR(R);
  if (lltR.info() != Eigen::Success) throw InvalidInput("dare: R must be positive definite");

  const Index n = A.rows();
  // Structured doubling on P = Q + A^T P (I + G P)^{-1} A with G = B R^{-1} B^T.
  Matrix Ak = A;
  Matrix G = B * lltR.solve(B.transpose());
  Matrix H = symmetrize(Q);
  const int max_iters = 200;
  for (int k = 0; k < max_iters; ++k) {
    Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(n, n) + G * H);
    const Matrix W = lu.solve(Ak);        // (I + GH)^{-1} Ak
    const Matrix GW = lu.solve(G);        // (I + GH)^{-1} G
    const Matrix H_next = symmetrize(H + Ak.transpose() * H * W);
    const Matrix G_next = symmetrize(G + Ak * GW * Ak.transpose());
    const Matrix A_next = Ak * W;
    const double step = (H_next - H).norm();
    H = H_next;
    G = G_next;
    Ak = A_next;
    if (!H.allFinite() || H.norm() > 1e100)
      throw SolverError("dare: doubling iteration diverged (pair may not be stabilizable)");
    if (step <= 1e-12 * std::max(1.0, H.norm())) break;
    if (k + 1 == max_iters)
      throw SolverError("dare: doubling iteration did not converge");
  }

  const Matrix P = symmetrize(H);
  const Matrix Rb = R + B.transpose() * P * B;
  const Matrix K = Rb.ldlt().solve(B.transpose() * P * A);
  const Matrix res = A.transpose() * P * A - P + Q - (B.transpose() * P * A).transpose() * K;
  const double scale = 1.0 + Q.norm() + P.norm();
  if (res.norm() > tol.lyap_residual * scale)
    throw SolverError("dare: residual " + std::to_string(res.norm()) + " exceeds gate");
  const double rho_cl = spectral_radius(A - B * K);
  if (!(rho_cl < 1.0))
    throw SolverError("dare: solution is not stabilizing (rho = " + std::to_string(rho_cl) + ")");
  return P;
}

Matrix sym_sqrt_psd(const Eigen::Ref<const Matrix>& M, double clamp) {
  require_symmetric(M, "sym_sqrt_psd");
  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  if (es.info() != Eigen::Success) throw SolverError("sym_sqrt_psd: eigensolver failed");
  Vector lam = es.eigenvalues();
  for (Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < -clamp * std::max(1.0, M.norm()))
      throw InvalidInput("sym_sqrt_psd: matrix is not positive semidefinite");
    lam(i) = std::sqrt(std::max(lam(i), 0.0));
  }
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

Vector hankel_singular_values(const Eigen::Ref<const Matrix>& A,
                              const Eigen::Ref<const Matrix>& B,
                              const Eigen::Ref<const Matrix>& C, const SolverTolerances& tol) {
  const Matrix Wc = solve_dlyap(A, Matrix(B * B.transpose()), tol);
  const Matrix Wo = solve_dlyap_transpose(A, Matrix(C.transpose() * C), tol);
  const Matrix Sc = sym_sqrt_psd(Wc);
  Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(Sc * Wo * Sc));
  if (es.info() != Eigen::Success) throw SolverError("hankel_singular_values: eigensolver failed");
  Vector hsv = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  std::sort(hsv.data(), hsv.data() + hsv.size(), std::greater<double>());
  return hsv;
}

StateSpace balanced_truncation(const Eigen::Ref<const Matrix>& A,
                               const Eigen::Ref<const Matrix>& B,
                               const Eigen::Ref<const Matrix>& C, Index order,
                               const SolverTolerances& tol) {
  const Index n = A.rows();
  if (order < 1 || order > n) throw InvalidInput("balanced_truncation: order out of range");
  const Matrix Wc = solve_dlyap(A, Matrix(B * B.transpose()), tol);
  const Matrix Wo = solve_dlyap_transpose(A, Matrix(C.transpose() * C), tol);
  const Matrix Sc = sym_sqrt_psd(Wc);
  const Matrix So = sym_sqrt_psd(Wo);
  Eigen::JacobiSVD<Matrix> svd(Matrix(So * Sc), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  if (!(sigma(order - 1) > tol.pinv_cutoff * sigma(0)))
    throw SolverError("balanced_truncation: retained Hankel singular value is numerically zero");
  const Vector sinv_sqrt = sigma.head(order).cwiseSqrt().cwiseInverse();
  const Matrix Tr = Sc * svd.matrixV().leftCols(order) * sinv_sqrt.asDiagonal();
  const Matrix Lr = sinv_sqrt.asDiagonal() * svd.matrixU().leftCols(order).transpose() * So;
  StateSpace out;
  out.A = Lr * A * Tr;
  out.B = Lr * B;
  out.C = C * Tr;
  out.hsv = sigma.head(order);
  return out;
}

Eigen::MatrixXcd freq_response(const Eigen::Ref<const Matrix>& A,
                               const Eigen::Ref<const Matrix>& B,
                               const Eigen::Ref<const Matrix>& C, double omega) {
  const Index n = A.rows();
  const std::complex<double> z = std::polar(1.0, omega);
  Eigen::MatrixXcd M = z * Eigen::MatrixXcd::Identity(n, n) - A.cast<std::complex<double>>();
  return C.cast<std::complex<double>>() * M.partialPivLu().solve(B.cast<std::complex<double>>());
}

}  // namespace iohlqg
