#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace iohlqg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Tolerances shared by all dense solvers.
struct SolverTolerances {
  double stability_margin = 1e-9;  // Schur-stability gate: accept rho < 1 - margin
  double pinv_cutoff = 1e-10;      // relative singular-value cutoff
  double lyap_residual = 1e-8;     // max acceptable Lyapunov/Riccati residual (relative)

  void validate() const;
};

// Base type for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rejected input: dimension mismatch, non-finite entries, bad configuration.
struct InvalidInput : Error {
  using Error::Error;
};

// A spectral-radius gate failed, or a cost was requested for an unstable loop.
struct InstabilityError : Error {
  using Error::Error;
};

// An iterative solver diverged or left an unacceptable residual.
struct SolverError : Error {
  using Error::Error;
};

// A system or controller is not L-step observable where the construction needs it.
struct ObservabilityError : Error {
  using Error::Error;
};

// A gradient step left the stabilizing set even after backoff.
struct StepDestabilized : Error {
  StepDestabilized(const std::string& what, double rho_arg) : Error(what), rho(rho_arg) {}
  double rho;  // spectral radius of the rejected closed loop
};

// A Monte-Carlo rollout exceeded the state-norm guard.
struct SimulationDiverged : Error {
  using Error::Error;
};

// Rejection sampling exhausted its budget without finding a stabilizing gain.
struct NoStabilizerFound : Error {
  using Error::Error;
};

inline void SolverTolerances::validate() const {
  if (!(stability_margin > 0.0 && stability_margin < 1.0))
    throw InvalidInput("SolverTolerances: stability_margin must be in (0, 1)");
  if (!(pinv_cutoff > 0.0)) throw InvalidInput("SolverTolerances: pinv_cutoff must be > 0");
  if (!(lyap_residual > 0.0)) throw InvalidInput("SolverTolerances: lyap_residual must be > 0");
}

}  // namespace iohlqg
