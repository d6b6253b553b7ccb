#pragma once

// Plant, noise and cost-weight value types, dynamic output-feedback
// controllers, their interconnection, and the Riccati-based LQG baseline.
//
// Conventions: the plant is x(t+1) = A x + B u + w, y = C x + v with
// process-noise dimension equal to n_x and measurement-noise dimension equal
// to n_y. Controllers are strictly proper: xi(t+1) = G xi + H y, u = F xi.

#include <Eigen/Dense>

#include "iohlqg/types.hpp"

namespace iohlqg {

struct Plant {
  Matrix A;  // n_x x n_x
  Matrix B;  // n_x x n_u
  Matrix C;  // n_y x n_x

  Index nx() const { return A.rows(); }
  Index nu() const { return B.cols(); }
  Index ny() const { return C.rows(); }
};

struct NoiseSpec {
  Matrix Vw;  // n_x x n_x, symmetric >= 0
  Matrix Vv;  // n_y x n_y, symmetric > 0

  // diag(Vw, Vv), the covariance of the stacked disturbance d = [w; v].
  Matrix Vd() const;
};

struct CostWeights {
  Matrix Q;  // n_y x n_y, symmetric > 0
  Matrix R;  // n_u x n_u, symmetric > 0
};

struct DynController {
  Matrix G;    // n_xi x n_xi
  Matrix H;    // n_xi x n_y
  Matrix F;    // n_u x n_xi
  Vector xi0;  // n_xi

  Index nxi() const { return G.rows(); }
};

// Dimension, finiteness and controllability/observability rank checks.
void validate_plant(const Plant& plant, const SolverTolerances& tol = {});
void validate_noise(const NoiseSpec& noise, const Plant& plant);
void validate_weights(const CostWeights& weights, const Plant& plant);
void validate_controller(const DynController& ctl, const Plant& plant);

// rank O_L(A, C) == n, rank via SVD with the pinv cutoff.
bool check_l_step_observable(const Eigen::Ref<const Matrix>& A,
                             const Eigen::Ref<const Matrix>& C, Index L,
                             double cutoff = 1e-10);

// Closed loop of plant and controller with state s = [x; xi] and inputs
// d = [w; v]: s+ = A s + Bd d, y = Cy s + [0, I] d, u = Cu s.
struct ClosedLoop {
  Matrix A;   // (n_x+n_xi) square
  Matrix Bd;  // maps [w; v]
  Matrix Cy;  // y = Cy s + v
  Matrix Cu;  // u = Cu s
};

ClosedLoop closed_loop(const Plant& plant, const DynController& ctl);

// Optimal LQG controller: state-feedback gain from the control Riccati
// equation with state weight C^T Q C, Kalman predictor gain from the filter
// Riccati equation, G = A + B F - H C, xi0 = 0.
DynController lqg_baseline(const Plant& plant, const NoiseSpec& noise, const CostWeights& weights,
                           const SolverTolerances& tol = {});

// Closed-loop rollout under given disturbance sequences. W is n_x x T and
// V is n_y x T, one column per step; optional external input override U_ext
// replaces u = F xi for the first U_ext.cols() steps.
struct SimPath {
  Matrix Y;  // n_y x T
  Matrix U;  // n_u x T
};

SimPath simulate_dyn(const Plant& plant, const DynController& ctl,
                     const Eigen::Ref<const Matrix>& W, const Eigen::Ref<const Matrix>& V,
                     const Eigen::Ref<const Matrix>& U_ext = Matrix(0, 0));

}  // namespace iohlqg
