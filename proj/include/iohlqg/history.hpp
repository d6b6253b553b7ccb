#pragma once

// Input-output-history lift: the history dynamics built from a plant, the
// static history-feedback gain, and the conversions between dynamic
// controllers and history gains.
//
// Stacking convention (used everywhere): windows are oldest-first, so the
// history z(t) stacks [u(t-L); ...; u(t-1); y(t-L); ...; y(t-1)] and the
// noise history e(t) stacks the w- and v-windows the same way. The full
// history is h = [z; e]. Gain blocks follow the same convention: the lag-i
// block of K^u multiplies u(t-i), and K^u is stored as [K^u_L, ..., K^u_1].

#include <Eigen/Dense>

#include <optional>

#include "iohlqg/plant.hpp"
#include "iohlqg/types.hpp"

namespace iohlqg {

struct HistoryDims {
  Index nu = 0, ny = 0, nw = 0, nv = 0, L = 0;

  Index nz() const { return L * (nu + ny); }
  Index ne() const { return L * (nw + nv); }
  Index nh() const { return nz() + ne(); }

  // offsets of the four history blocks inside h
  Index off_u() const { return 0; }
  Index off_y() const { return L * nu; }
  Index off_w() const { return nz(); }
  Index off_v() const { return nz() + L * nw; }
};

struct HistorySystem {
  Matrix Theta;    // nh x nh
  Matrix Pi_d;     // nh x (nw+nv)
  Matrix Pi_u;     // nh x nu
  Matrix Psi;      // ny x nh
  Matrix Gamma;    // nz x nh, [I 0]
  Matrix Upsilon;  // ny x (nw+nv), [0 I]
  HistoryDims dims;

  // One open-loop step: h+ = Theta h + Pi_d d + Pi_u u (+ delta).
  Vector step(const Eigen::Ref<const Vector>& h, const Eigen::Ref<const Vector>& u,
              const Eigen::Ref<const Vector>& d) const {
    return Theta * h + Pi_d * d + Pi_u * u;
  }
};

struct IohGain {
  Matrix K;  // nu x L(nu+ny)
  Index L = 0, nu = 0, ny = 0;

  Index nz() const { return L * (nu + ny); }
  Matrix Ku() const { return K.leftCols(L * nu); }
  Matrix Ky() const { return K.rightCols(L * ny); }
  // lag in 1..L; lag L is the oldest sample and sits leftmost
  Matrix Ku_lag(Index lag) const { return K.middleCols((L - lag) * nu, nu); }
  Matrix Ky_lag(Index lag) const { return K.middleCols(L * nu + (L - lag) * ny, ny); }

  void validate() const;
};

struct HistoryState {
  Vector z;  // nz
  Vector e;  // ne

  Vector h() const {
    Vector full(z.size() + e.size());
    full << z, e;
    return full;
  }
};

// Oldest-first window stack: [S.col(t0); ...; S.col(t0+L-1)].
Vector stack_window(const Eigen::Ref<const Matrix>& signal, Index t0, Index L);

// History state at time t0 + L from the signal windows [t0, t0+L).
HistoryState make_history_state(const Eigen::Ref<const Matrix>& U,
                                const Eigen::Ref<const Matrix>& Y,
                                const Eigen::Ref<const Matrix>& W,
                                const Eigen::Ref<const Matrix>& V, Index t0, Index L);

// Lift the plant to history dynamics of window length L. Requires the plant
// to be L-step observable.
HistorySystem build_history_system(const Plant& plant, Index L, const SolverTolerances& tol = {});

// Closed-loop rollout of the history dynamics under u = K z for T steps.
// D has one column per step; Delta (optional) adds extra process noise.
struct HistoryPath {
  Matrix Y;  // ny x T
  Matrix U;  // nu x T
  Matrix H;  // nh x (T+1), H.col(0) is the initial history
};

HistoryPath simulate_history(const HistorySystem& sys, const IohGain& K,
                             const Eigen::Ref<const Matrix>& D, const HistoryState& h_init,
                             Index T, const Eigen::Ref<const Matrix>& Delta = Matrix(0, 0));

// Rollout of the plant itself under the history-feedback law: u(t) comes from
// U_prefix for t < U_prefix.cols() and from K z(t) afterwards.
SimPath simulate_plant_ioh(const Plant& plant, const IohGain& K,
                           const Eigen::Ref<const Matrix>& W, const Eigen::Ref<const Matrix>& V,
                           const Eigen::Ref<const Matrix>& U_prefix);

// Exact minimal realization by successive reachable/observable restrictions.
DynController minimal_realization(const DynController& ctl, double cutoff = 1e-10);

// Dynamic controller -> equivalent history gain. The controller (or its
// minimal realization) must be L-step observable.
IohGain lift_controller(const DynController& ctl, Index L, const SolverTolerances& tol = {});

// History gain -> dynamic controller on L*nu states, with the initial state
// matched to the given history z_L (pass empty for xi0 = 0).
DynController realize_controller(const IohGain& K, const Eigen::Ref<const Vector>& z_L = Vector(),
                                 const SolverTolerances& tol = {});

// K padded with zeros over the noise-history block; equals K * Gamma.
Matrix structured_gain(const HistorySystem& sys, const IohGain& K);

}  // namespace iohlqg
