#pragma once

// Vanilla policy gradient over stabilizing history gains on the relaxed
// problem: K_{i+1} = K_i - alpha * grad J_eps(K_i), with rejection-sampled
// stabilizing initialization, per-iteration descent/coercivity monitoring and
// trace recording.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iohlqg/lqg.hpp"

namespace iohlqg {

struct PgmConfig {
  double alpha = 1e-3;
  double epsilon = 1e-8;  // informational; the bound problem's epsilon governs
  long max_iters = 100000;
  double grad_tol = 1e-9;
  long record_every = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TraceRow {
  long iter = 0;
  double J = 0.0;
  double J_eps = 0.0;
  double grad_norm = 0.0;
  double rho = 0.0;
  Vector hankel_svs;  // of the realized controller; NaN when it is unstable
  double wall_ms = 0.0;
};

struct PgmTrace {
  std::vector<TraceRow> rows;
};

struct DescentCheck {
  double delta_J_eps = 0.0;    // J_eps(K_i) - J_eps(K_{i+1}), >= 0 on a descent step
  double alpha_grad_sq = 0.0;  // alpha * ||grad J_eps(K_i)||_F^2
};

struct RunResult {
  IohGain K_final;
  PgmTrace trace;
  long iters = 0;
  bool hit_grad_tol = false;
  double final_J = 0.0;
  double final_J_eps = 0.0;
  double final_grad_norm = 0.0;
  double final_rho = 0.0;
  // per-iteration monitors over the whole run
  double max_jeps_increase = 0.0;      // max of J_eps(K_{i+1}) - J_eps(K_i)
  long max_jeps_increase_iter = -1;    // iteration where that maximum occurred
  double min_coercivity_slack = 0.0;   // min of J_eps(K) - sigma_min(R) eps ||K||_F^2
  long backoff_events = 0;             // step-size halvings after destabilizing steps
};

// K drawn entrywise uniform on [-1, 1), rescaled to ||K||_F = norm, rejection
// sampled until stabilizing. Deterministic under seed.
IohGain random_stabilizing_gain(const RelaxedProblem& prob, double norm, std::uint64_t seed,
                                long budget = 10000);

// One gradient step with destabilization reported as StepDestabilized.
std::pair<IohGain, DescentCheck> step(const RelaxedProblem& prob, const IohGain& K, double alpha);

RunResult run(const RelaxedProblem& prob, const IohGain& K0, const PgmConfig& config);

struct RunOutcome {
  std::uint64_t seed = 0;
  std::optional<RunResult> result;
  std::string error;  // empty on success
};

// Independent runs from derived seeds; order-deterministic, parallel up to
// the IOHLQG_THREADS cap.
std::vector<RunOutcome> multi_seed_study(const RelaxedProblem& prob, int n_seeds,
                                         const PgmConfig& config, double init_norm = 1.0);

// Parallelism cap shared by the multi-seed study and the simulators.
unsigned thread_cap();

}  // namespace iohlqg
