#include "iohlqg/lqg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

#include "iohlqg/block_ops.hpp"
#include "iohlqg/solvers.hpp"

namespace iohlqg {

RelaxedProblem make_relaxed_problem(const HistorySystem& sys, const NoiseSpec& noise,
                                    const CostWeights& weights, double epsilon,
                                    const SolverTolerances& tol) {
  if (epsilon < 0.0) throw InvalidInput("RelaxedProblem: epsilon must be >= 0");
  tol.validate();
  if (noise.Vw.rows() != sys.dims.nw || noise.Vv.rows() != sys.dims.nv)
    throw InvalidInput("RelaxedProblem: noise dimensions do not match the history system");
  if (weights.Q.rows() != sys.dims.ny || weights.R.rows() != sys.dims.nu)
    throw InvalidInput("RelaxedProblem: weight dimensions do not match the history system");

  RelaxedProblem prob;
  prob.sys = sys;
  prob.noise = noise;
  prob.weights = weights;
  prob.epsilon = epsilon;
  prob.tol = tol;
  prob.noise_gram = sys.Pi_d * noise.Vd() * sys.Pi_d.transpose();
  prob.obs_gram = sys.Psi.transpose() * weights.Q * sys.Psi;
  prob.const_term = (weights.Q * noise.Vv).trace();
  Eigen::SelfAdjointEigenSolver<Matrix> es(weights.R, Eigen::EigenvaluesOnly);
  prob.sigma_min_R = es.eigenvalues().minCoeff();
  return prob;
}

Matrix theta_closed(const HistorySystem& sys, const IohGain& K) {
  K.validate();
  if (K.nz() != sys.dims.nz() || K.nu != sys.dims.nu)
    throw InvalidInput("theta_closed: gain does not match the history dimensions");
  Matrix Th = sys.Theta;
  // Pi_u K Gamma only touches the newest u-slot rows and the z columns.
  Th.block(sys.dims.off_u() + (K.L - 1) * K.nu, 0, K.nu, K.nz()) += K.K;
  return Th;
}

bool is_stabilizing(const RelaxedProblem& prob, const IohGain& K) {
  return spectral_radius(theta_closed(prob.sys, K)) < 1.0 - prob.tol.stability_margin;
}

Evaluation evaluate_gain(const RelaxedProblem& prob, const IohGain& K, bool with_gradient) {
  const HistorySystem& sys = prob.sys;
  const Matrix Th = theta_closed(sys, K);
  const SchurStein schur(Th);

  Evaluation ev;
  ev.rho = schur.rho();
  ev.stable = ev.rho < 1.0 - prob.tol.stability_margin;
  if (!ev.stable) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    ev.J = ev.J_eps = ev.gamma = ev.grad_norm = nan;
    return ev;
  }

  // Phi: Th^T Phi Th - Phi + Psi^T Q Psi + Gamma^T K^T R K Gamma = 0
  Matrix Qobs = prob.obs_gram;
  Qobs.topLeftCorner(K.nz(), K.nz()) += K.K.transpose() * prob.weights.R * K.K;
  const Matrix Phi = schur.solve_adjoint(Qobs);
  const double res_phi = (Th.transpose() * Phi * Th - Phi + Qobs).norm();
  if (res_phi > prob.tol.lyap_residual * (1.0 + Qobs.norm()))
    throw SolverError("evaluate_gain: Phi residual exceeds tolerance gate");

  ev.gamma = Phi.trace();
  ev.J = (Phi * prob.noise_gram).trace() + prob.const_term;
  ev.J_eps = ev.J + prob.epsilon * ev.gamma;

  if (with_gradient) {
    Matrix Qctr = prob.noise_gram;
    Qctr.diagonal().array() += prob.epsilon;
    const Matrix Y = schur.solve_forward(Qctr);
    const double res_y = (Th * Y * Th.transpose() - Y + Qctr).norm();
    if (res_y > prob.tol.lyap_residual * (1.0 + Qctr.norm()))
      throw SolverError("evaluate_gain: Y residual exceeds tolerance gate");
    const Matrix PhiPi = Phi * sys.Pi_u;  // nh x nu
    const Matrix W = (PhiPi.transpose() * sys.Pi_u + prob.weights.R) * K.K * sys.Gamma +
                     PhiPi.transpose() * sys.Theta;
    ev.grad = 2.0 * (W * Y).leftCols(K.nz());  // (2 W Y) Gamma^T
    ev.grad_norm = ev.grad.norm();
  }
  return ev;
}

CostReport cost(const RelaxedProblem& prob, const IohGain& K) {
  const Evaluation ev = evaluate_gain(prob, K, /*with_gradient=*/false);
  if (!ev.stable)
    throw InstabilityError("cost: unbounded, rho(Theta_K) = " + std::to_string(ev.rho));
  CostReport report;
  report.J = ev.J;
  report.J_eps = ev.J_eps;
  report.gamma_K = ev.gamma;
  report.const_term = prob.const_term;
  report.stable = true;
  return report;
}

Matrix gradient(const RelaxedProblem& prob, const IohGain& K) {
  const Evaluation ev = evaluate_gain(prob, K, /*with_gradient=*/true);
  if (!ev.stable)
    throw InstabilityError("gradient: unbounded cost, rho(Theta_K) = " + std::to_string(ev.rho));
  return ev.grad;
}

double cost_of_dyn_controller(const Plant& plant, const NoiseSpec& noise,
                              const CostWeights& weights, const DynController& ctl,
                              const SolverTolerances& tol) {
  const ClosedLoop cl = closed_loop(plant, ctl);
  const double rho = spectral_radius(cl.A);
  if (!(rho < 1.0 - tol.stability_margin))
    throw InstabilityError("cost_of_dyn_controller: closed loop unstable, rho = " +
                           std::to_string(rho));
  // stage cost splits as s^T (Cy^T Q Cy + Cu^T R Cu) s + tr(Q Vv); the cross
  // term vanishes because v(t) is independent of the current loop state
  const Matrix Qcl =
      cl.Cy.transpose() * weights.Q * cl.Cy + cl.Cu.transpose() * weights.R * cl.Cu;
  const Matrix Vcl = cl.Bd * noise.Vd() * cl.Bd.transpose();
  const Matrix Phi = solve_dlyap_transpose(cl.A, Qcl, tol);
  return (Phi * Vcl).trace() + (weights.Q * noise.Vv).trace();
}

double coercivity_lower_bound(const RelaxedProblem& prob, const IohGain& K) {
  return prob.sigma_min_R * prob.epsilon * K.K.squaredNorm();
}

StationarityCert epsilon_stationarity_cert(const RelaxedProblem& prob, const IohGain& K,
                                           double beta_estimate) {
  const HistorySystem& sys = prob.sys;
  const Matrix Th = theta_closed(sys, K);
  const SchurStein schur(Th);
  if (!(schur.rho() < 1.0 - prob.tol.stability_margin))
    throw InstabilityError("epsilon_stationarity_cert: rho(Theta_K) = " +
                           std::to_string(schur.rho()));

  Matrix Qobs = prob.obs_gram;
  Qobs.topLeftCorner(K.nz(), K.nz()) += K.K.transpose() * prob.weights.R * K.K;
  const Matrix Phi = schur.solve_adjoint(Qobs);
  const Matrix PhiPi = Phi * sys.Pi_u;
  const Matrix W = (PhiPi.transpose() * sys.Pi_u + prob.weights.R) * K.K * sys.Gamma +
                   PhiPi.transpose() * sys.Theta;

  StationarityCert cert;
  // grad J at epsilon = 0: Y driven by the physical noise alone
  const Matrix Y0 = schur.solve_forward(prob.noise_gram);
  cert.grad_norm_J = 2.0 * (W * Y0).leftCols(K.nz()).norm();
  if (beta_estimate > 0.0) {
    cert.bound = prob.epsilon * beta_estimate;
  } else {
    // grad gamma_K: same machinery with identity input covariance
    const Matrix Yi = schur.solve_forward(Matrix::Identity(Th.rows(), Th.cols()));
    cert.bound = prob.epsilon * 2.0 * (W * Yi).leftCols(K.nz()).norm();
  }
  return cert;
}

}  // namespace iohlqg
