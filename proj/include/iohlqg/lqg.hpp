#pragma once

// Analytic evaluation of the LQG cost over history gains: the relaxed cost
// J_eps = tr(Phi V_h^eps) + tr(Q Vv), its exact gradient 2 W Y Gamma^T from a
// pair of Stein equations, the stability gate, the coercivity lower bound and
// the epsilon-stationarity certificate.

#include <Eigen/Dense>

#include "iohlqg/history.hpp"
#include "iohlqg/plant.hpp"
#include "iohlqg/types.hpp"

namespace iohlqg {

struct RelaxedProblem {
  HistorySystem sys;
  NoiseSpec noise;
  CostWeights weights;
  double epsilon = 0.0;
  SolverTolerances tol;

  // cached data, filled by make_relaxed_problem
  Matrix noise_gram;       // Pi_d Vd Pi_d^T
  Matrix obs_gram;         // Psi^T Q Psi
  double const_term = 0.0; // tr(Q Vv)
  double sigma_min_R = 0.0;
};

RelaxedProblem make_relaxed_problem(const HistorySystem& sys, const NoiseSpec& noise,
                                    const CostWeights& weights, double epsilon,
                                    const SolverTolerances& tol = {});

// Theta + Pi_u K Gamma.
Matrix theta_closed(const HistorySystem& sys, const IohGain& K);

bool is_stabilizing(const RelaxedProblem& prob, const IohGain& K);

struct CostReport {
  double J = 0.0;          // cost at epsilon = 0
  double J_eps = 0.0;      // relaxed cost, J + epsilon * gamma_K
  double gamma_K = 0.0;    // tr(Phi_K)
  double const_term = 0.0; // tr(Q Vv)
  bool stable = false;
};

CostReport cost(const RelaxedProblem& prob, const IohGain& K);

Matrix gradient(const RelaxedProblem& prob, const IohGain& K);

// Everything one gradient iteration needs, from a single Schur factorization
// of the closed-loop matrix. Does not throw on instability: stable == false
// leaves the cost fields NaN.
struct Evaluation {
  double rho = 0.0;
  bool stable = false;
  double J = 0.0;
  double J_eps = 0.0;
  double gamma = 0.0;
  double grad_norm = 0.0;
  Matrix grad;
};

Evaluation evaluate_gain(const RelaxedProblem& prob, const IohGain& K, bool with_gradient);

// Steady-state cost of the plant/controller interconnection:
// tr(Phi_cl V_cl) + tr(Q Vv).
double cost_of_dyn_controller(const Plant& plant, const NoiseSpec& noise,
                              const CostWeights& weights, const DynController& ctl,
                              const SolverTolerances& tol = {});

// sigma_min(R) * epsilon * ||K||_F^2; the relaxed cost can never go below it.
double coercivity_lower_bound(const RelaxedProblem& prob, const IohGain& K);

struct StationarityCert {
  double grad_norm_J = 0.0;  // ||grad J(K)||_F at epsilon = 0
  double bound = 0.0;        // epsilon * ||grad gamma_K||_F (or epsilon * beta if supplied)
};

// At an exact stationary point of J_eps, grad J = -epsilon * grad gamma_K, so
// grad_norm_J <= bound up to solver slack. beta_estimate > 0 overrides the
// computed ||grad gamma_K||_F with a caller-supplied constant.
StationarityCert epsilon_stationarity_cert(const RelaxedProblem& prob, const IohGain& K,
                                           double beta_estimate = 0.0);

}  // namespace iohlqg
