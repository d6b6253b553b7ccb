#pragma once

// Independent stochastic oracle: Monte-Carlo closed-loop rollouts estimating
// the steady-state quadratic cost, for both the plant/controller loop and the
// history dynamics, plus the windowed block-cost identity check.

#include <cstdint>

#include "iohlqg/lqg.hpp"

namespace iohlqg {

struct SimConfig {
  long T = 100000;
  long n_rollouts = 20;
  long burn_in = -1;  // negative means T / 10
  std::uint64_t seed = 0;

  long effective_burn_in() const { return burn_in < 0 ? T / 10 : burn_in; }
  void validate() const;
};

struct CostEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  long n_samples = 0;  // rollout count
};

// Time-averaged stage cost over [burn_in, T), averaged over rollouts, with
// Gaussian draws from the noise spec. Deterministic under seed.
CostEstimate estimate_cost_dyn(const Plant& plant, const NoiseSpec& noise,
                               const CostWeights& weights, const DynController& ctl,
                               const SimConfig& cfg);

// Same estimator over the history dynamics under u = K z; with_delta adds the
// extra process noise with covariance epsilon * I from the problem.
CostEstimate estimate_cost_ioh(const RelaxedProblem& prob, const IohGain& K, const SimConfig& cfg,
                               bool with_delta);

// lhs: Monte-Carlo stage-cost average; rhs: average of z^T S z / L along the
// same trajectories with S = diag(I_L (x) R, I_L (x) Q).
struct BlockCostCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_std_err = 0.0;
  double rhs_std_err = 0.0;
  double diff_std_err = 0.0;  // std err of the per-rollout lhs - rhs
  long n_samples = 0;
};

BlockCostCheck block_cost_identity_check(const RelaxedProblem& prob, const IohGain& K,
                                         const SimConfig& cfg);

}  // namespace iohlqg
