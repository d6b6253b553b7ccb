#pragma once

// Shared fixtures: the bundled three-state demo system and random test-system
// generators used across the unit and acceptance suites.

#include "iohlqg/plant.hpp"
#include "iohlqg/rng.hpp"
#include "iohlqg/solvers.hpp"

namespace iohlqg::testing {

inline Plant demo_plant() {
  Plant p;
  p.A.resize(3, 3);
  p.A << 0.7349, 0.1195, 0.3545,
         0.08005, 0.961, -0.1506,
         0.3654, -0.1217, 0.5076;
  p.B.resize(3, 1);
  p.B << -0.1158, 0.0, -0.5297;
  p.C.resize(2, 3);
  p.C << -0.2326, -0.5851, 0.9771,
         -0.1116, 0.0, 0.6755;
  return p;
}

inline NoiseSpec demo_noise() {
  NoiseSpec n;
  n.Vw = 0.1 * Matrix::Identity(3, 3);
  n.Vv = 0.1 * Matrix::Identity(2, 2);
  return n;
}

inline CostWeights demo_weights() {
  CostWeights w;
  w.Q = 100.0 * Matrix::Identity(2, 2);
  w.R = 10.0 * Matrix::Identity(1, 1);
  return w;
}

inline Matrix random_matrix(Rng& rng, Index rows, Index cols) {
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) M(i, j) = rng.uniform_pm1();
  return M;
}

inline Matrix random_stable(Rng& rng, Index n, double rho_target) {
  Matrix A = random_matrix(rng, n, n);
  const double rho = spectral_radius(A);
  if (rho > 0.0) A *= rho_target / rho;
  return A;
}

inline Matrix random_psd(Rng& rng, Index n) {
  const Matrix M = random_matrix(rng, n, n);
  return M * M.transpose();
}

// Random plant passing the reachability/observability rank checks, with a
// stable A so that the zero gain is often stabilizing.
inline Plant random_plant(Rng& rng, Index nx, Index nu, Index ny, double rho_target = 0.8) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    Plant p;
    p.A = random_stable(rng, nx, rho_target);
    p.B = random_matrix(rng, nx, nu);
    p.C = random_matrix(rng, ny, nx);
    try {
      validate_plant(p);
      return p;
    } catch (const InvalidInput&) {
    }
  }
  throw std::logic_error("random_plant: generation failed repeatedly");
}

// Random controller with a stable G, observable at the given order.
inline DynController random_observable_controller(Rng& rng, Index nxi, Index nu, Index ny,
                                                  Index L, double rho_target = 0.7) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    DynController c;
    c.G = random_stable(rng, nxi, rho_target);
    c.H = random_matrix(rng, nxi, ny);
    c.F = random_matrix(rng, nu, nxi);
    c.xi0 = Vector::Zero(nxi);
    if (check_l_step_observable(c.G, c.F, L)) return c;
  }
  throw std::logic_error("random_observable_controller: generation failed repeatedly");
}

}  // namespace iohlqg::testing
