#include "iohlqg/plant.hpp"

#include <Eigen/Eigenvalues>

#include "iohlqg/block_ops.hpp"
#include "iohlqg/solvers.hpp"

namespace iohlqg {

Matrix NoiseSpec::Vd() const {
  const Index nw = Vw.rows();
  const Index nv = Vv.rows();
  Matrix V = Matrix::Zero(nw + nv, nw + nv);
  V.topLeftCorner(nw, nw) = Vw;
  V.bottomRightCorner(nv, nv) = Vv;
  return V;
}

void validate_plant(const Plant& plant, const SolverTolerances& tol) {
  require_finite(plant.A, "Plant.A");
  require_finite(plant.B, "Plant.B");
  require_finite(plant.C, "Plant.C");
  const Index n = plant.nx();
  if (plant.A.rows() != plant.A.cols()) throw InvalidInput("Plant: A must be square");
  if (plant.B.rows() != n) throw InvalidInput("Plant: B row count must match A");
  if (plant.C.cols() != n) throw InvalidInput("Plant: C column count must match A");
  if (plant.nu() < 1 || plant.ny() < 1) throw InvalidInput("Plant: empty input or output map");
  if (rank_svd(reachability(plant.A, plant.B, n), tol.pinv_cutoff) != n)
    throw InvalidInput("Plant: (A, B) fails the reachability rank test");
  if (rank_svd(observability(plant.A, plant.C, n), tol.pinv_cutoff) != n)
    throw InvalidInput("Plant: (A, C) fails the observability rank test");
}

namespace {

double min_sym_eigenvalue(const Matrix& M, const char* name) {
  if (M.rows() != M.cols()) throw InvalidInput(std::string(name) + ": must be square");
  if ((M - M.transpose()).norm() > 1e-10 * std::max(1.0, M.norm()))
    throw InvalidInput(std::string(name) + ": must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

void validate_noise(const NoiseSpec& noise, const Plant& plant) {
  require_finite(noise.Vw, "NoiseSpec.Vw");
  require_finite(noise.Vv, "NoiseSpec.Vv");
  if (noise.Vw.rows() != plant.nx()) throw InvalidInput("NoiseSpec: Vw must be n_x x n_x");
  if (noise.Vv.rows() != plant.ny()) throw InvalidInput("NoiseSpec: Vv must be n_y x n_y");
  if (min_sym_eigenvalue(noise.Vw, "NoiseSpec.Vw") < -1e-12)
    throw InvalidInput("NoiseSpec: Vw must be positive semidefinite");
  if (!(min_sym_eigenvalue(noise.Vv, "NoiseSpec.Vv") > 0.0))
    throw InvalidInput("NoiseSpec: Vv must be positive definite");
}

void validate_weights(const CostWeights& weights, const Plant& plant) {
  require_finite(weights.Q, "CostWeights.Q");
  require_finite(weights.R, "CostWeights.R");
  if (weights.Q.rows() != plant.ny()) throw InvalidInput("CostWeights: Q must be n_y x n_y");
  if (weights.R.rows() != plant.nu()) throw InvalidInput("CostWeights: R must be n_u x n_u");
  if (!(min_sym_eigenvalue(weights.Q, "CostWeights.Q") > 0.0))
    throw InvalidInput("CostWeights: Q must be positive definite");
  if (!(min_sym_eigenvalue(weights.R, "CostWeights.R") > 0.0))
    throw InvalidInput("CostWeights: R must be positive definite");
}

void validate_controller(const DynController& ctl, const Plant& plant) {
  require_finite(ctl.G, "DynController.G");
  require_finite(ctl.H, "DynController.H");
  require_finite(ctl.F, "DynController.F");
  const Index nxi = ctl.nxi();
  if (ctl.G.rows() != ctl.G.cols()) throw InvalidInput("DynController: G must be square");
  if (ctl.H.rows() != nxi || ctl.F.cols() != nxi)
    throw InvalidInput("DynController: internal dimensions inconsistent");
  if (ctl.H.cols() != plant.ny()) throw InvalidInput("DynController: H must accept plant outputs");
  if (ctl.F.rows() != plant.nu()) throw InvalidInput("DynController: F must produce plant inputs");
  if (ctl.xi0.size() != 0 && ctl.xi0.size() != nxi)
    throw InvalidInput("DynController: xi0 size mismatch");
  require_finite(ctl.xi0, "DynController.xi0");
}

bool check_l_step_observable(const Eigen::Ref<const Matrix>& A,
                             const Eigen::Ref<const Matrix>& C, Index L, double cutoff) {
  return rank_svd(observability(A, C, L), cutoff) == A.rows();
}

ClosedLoop closed_loop(const Plant& plant, const DynController& ctl) {
  validate_controller(ctl, plant);
  const Index nx = plant.nx(), nxi = ctl.nxi(), nu = plant.nu(), ny = plant.ny();
  ClosedLoop cl;
  cl.A = Matrix::Zero(nx + nxi, nx + nxi);
  cl.A.topLeftCorner(nx, nx) = plant.A;
  cl.A.topRightCorner(nx, nxi) = plant.B * ctl.F;
  cl.A.bottomLeftCorner(nxi, nx) = ctl.H * plant.C;
  cl.A.bottomRightCorner(nxi, nxi) = ctl.G;
  cl.Bd = Matrix::Zero(nx + nxi, nx + ny);
  cl.Bd.topLeftCorner(nx, nx) = Matrix::Identity(nx, nx);
  cl.Bd.bottomRightCorner(nxi, ny) = ctl.H;
  cl.Cy = Matrix::Zero(ny, nx + nxi);
  cl.Cy.leftCols(nx) = plant.C;
  cl.Cu = Matrix::Zero(nu, nx + nxi);
  cl.Cu.rightCols(nxi) = ctl.F;
  return cl;
}

DynController lqg_baseline(const Plant& plant, const NoiseSpec& noise, const CostWeights& weights,
                           const SolverTolerances& tol) {
  validate_plant(plant, tol);
  validate_noise(noise, plant);
  validate_weights(weights, plant);

  // Control Riccati with output weight folded into the state: C^T Q C.
  const Matrix Qx = plant.C.transpose() * weights.Q * plant.C;
  const Matrix P = solve_dare(plant.A, plant.B, Qx, weights.R, tol);
  const Matrix F =
      -(weights.R + plant.B.transpose() * P * plant.B)
           .ldlt()
           .solve(plant.B.transpose() * P * plant.A);

  // Filter Riccati by duality; H is the one-step Kalman predictor gain.
  const Matrix S =
      solve_dare(plant.A.transpose(), plant.C.transpose(), noise.Vw, noise.Vv, tol);
  const Matrix H =
      plant.A * S * plant.C.transpose() *
      (noise.Vv + plant.C * S * plant.C.transpose()).ldlt().solve(Matrix::Identity(plant.ny(), plant.ny()));

  DynController ctl;
  ctl.F = F;
  ctl.H = H;
  ctl.G = plant.A + plant.B * F - H * plant.C;
  ctl.xi0 = Vector::Zero(plant.nx());
  return ctl;
}

SimPath simulate_dyn(const Plant& plant, const DynController& ctl,
                     const Eigen::Ref<const Matrix>& W, const Eigen::Ref<const Matrix>& V,
                     const Eigen::Ref<const Matrix>& U_ext) {
  validate_controller(ctl, plant);
  const Index T = W.cols();
  if (V.cols() != T || W.rows() != plant.nx() || V.rows() != plant.ny())
    throw InvalidInput("simulate_dyn: disturbance dimensions inconsistent");
  SimPath path;
  path.Y.resize(plant.ny(), T);
  path.U.resize(plant.nu(), T);
  Vector x = Vector::Zero(plant.nx());
  Vector xi = ctl.xi0.size() == ctl.nxi() ? ctl.xi0 : Vector::Zero(ctl.nxi());
  for (Index t = 0; t < T; ++t) {
    const Vector y = plant.C * x + V.col(t);
    const Vector u = t < U_ext.cols() ? Vector(U_ext.col(t)) : Vector(ctl.F * xi);
    path.Y.col(t) = y;
    path.U.col(t) = u;
    x = plant.A * x + plant.B * u + W.col(t);
    xi = ctl.G * xi + ctl.H * y;
  }
  return path;
}

}  // namespace iohlqg
