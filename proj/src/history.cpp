#include "iohlqg/history.hpp"

#include "iohlqg/block_ops.hpp"
#include "iohlqg/solvers.hpp"

namespace iohlqg {

namespace {

// Block upshift J_n: maps the oldest-first window one step forward,
// [x1; ...; xL] -> [x2; ...; xL; 0].
Matrix block_shift(Index n, Index L) {
  Matrix J = Matrix::Zero(L * n, L * n);
  for (Index i = 0; i + 1 < L; ++i) J.block(i * n, (i + 1) * n, n, n).setIdentity();
  return J;
}

// Selector E_n = [0; ...; 0; I_n]: writes into the newest slot.
Matrix last_slot(Index n, Index L) {
  Matrix E = Matrix::Zero(L * n, n);
  E.bottomRows(n).setIdentity();
  return E;
}

}  // namespace

void IohGain::validate() const {
  require_finite(K, "IohGain.K");
  if (L < 1 || nu < 1 || ny < 1) throw InvalidInput("IohGain: L, nu, ny must be positive");
  if (K.rows() != nu || K.cols() != nz())
    throw InvalidInput("IohGain: K must be nu x L(nu+ny)");
}

Vector stack_window(const Eigen::Ref<const Matrix>& signal, Index t0, Index L) {
  if (t0 < 0 || t0 + L > signal.cols()) throw InvalidInput("stack_window: window out of range");
  const Index n = signal.rows();
  Vector out(L * n);
  for (Index i = 0; i < L; ++i) out.segment(i * n, n) = signal.col(t0 + i);
  return out;
}

HistoryState make_history_state(const Eigen::Ref<const Matrix>& U,
                                const Eigen::Ref<const Matrix>& Y,
                                const Eigen::Ref<const Matrix>& W,
                                const Eigen::Ref<const Matrix>& V, Index t0, Index L) {
  HistoryState s;
  s.z.resize(L * (U.rows() + Y.rows()));
  s.z << stack_window(U, t0, L), stack_window(Y, t0, L);
  s.e.resize(L * (W.rows() + V.rows()));
  s.e << stack_window(W, t0, L), stack_window(V, t0, L);
  return s;
}

HistorySystem build_history_system(const Plant& plant, Index L, const SolverTolerances& tol) {
  if (L < 1) throw InvalidInput("build_history_system: L must be >= 1");
  if (!check_l_step_observable(plant.A, plant.C, L, tol.pinv_cutoff))
    throw ObservabilityError("build_history_system: plant is not L-step observable at L = " +
                             std::to_string(L));

  HistorySystem sys;
  sys.dims = HistoryDims{plant.nu(), plant.ny(), plant.nx(), plant.ny(), L};
  const HistoryDims& d = sys.dims;
  const Matrix I_nx = Matrix::Identity(plant.nx(), plant.nx());

  const Matrix O = observability(plant.A, plant.C, L);
  const Matrix O_pinv = pinv(O, tol.pinv_cutoff);
  const Matrix AL = matrix_power(plant.A, L);
  const Matrix AL_Opinv = AL * O_pinv;

  // x(t) = [M1 M2] z(t) + [M3 M4] e(t)
  const Matrix M1 = reachability(plant.A, plant.B, L) - AL_Opinv * block_hankel(plant.A, plant.B, plant.C, L);
  const Matrix M2 = AL_Opinv;
  const Matrix M3 = reachability(plant.A, I_nx, L) - AL_Opinv * block_hankel(plant.A, I_nx, plant.C, L);
  const Matrix M4 = -AL_Opinv;

  Matrix M(plant.nx(), d.nh());
  M << M1, M2, M3, M4;
  sys.Psi = plant.C * M;

  sys.Theta = Matrix::Zero(d.nh(), d.nh());
  sys.Theta.block(d.off_u(), d.off_u(), L * d.nu, L * d.nu) = block_shift(d.nu, L);
  sys.Theta.block(d.off_y(), d.off_y(), L * d.ny, L * d.ny) = block_shift(d.ny, L);
  sys.Theta.block(d.off_w(), d.off_w(), L * d.nw, L * d.nw) = block_shift(d.nw, L);
  sys.Theta.block(d.off_v(), d.off_v(), L * d.nv, L * d.nv) = block_shift(d.nv, L);
  // the newest y-slot receives y(t) = Psi h(t) + Upsilon d(t)
  sys.Theta.middleRows(d.off_y() + (L - 1) * d.ny, d.ny) += sys.Psi;

  sys.Pi_d = Matrix::Zero(d.nh(), d.nw + d.nv);
  sys.Pi_d.block(d.off_y(), d.nw, L * d.ny, d.nv) = last_slot(d.ny, L);
  sys.Pi_d.block(d.off_w(), 0, L * d.nw, d.nw) = last_slot(d.nw, L);
  sys.Pi_d.block(d.off_v(), d.nw, L * d.nv, d.nv) = last_slot(d.nv, L);

  sys.Pi_u = Matrix::Zero(d.nh(), d.nu);
  sys.Pi_u.topRows(L * d.nu) = last_slot(d.nu, L);

  sys.Gamma = Matrix::Zero(d.nz(), d.nh());
  sys.Gamma.leftCols(d.nz()).setIdentity();

  sys.Upsilon = Matrix::Zero(d.ny, d.nw + d.nv);
  sys.Upsilon.rightCols(d.nv).setIdentity();
  return sys;
}

HistoryPath simulate_history(const HistorySystem& sys, const IohGain& K,
                             const Eigen::Ref<const Matrix>& D, const HistoryState& h_init,
                             Index T, const Eigen::Ref<const Matrix>& Delta) {
  K.validate();
  const HistoryDims& d = sys.dims;
  if (T < 1) throw InvalidInput("simulate_history: T must be >= 1");
  if (K.nz() != d.nz() || K.nu != d.nu)
    throw InvalidInput("simulate_history: gain does not match the history dimensions");
  if (D.rows() != d.nw + d.nv || D.cols() < T)
    throw InvalidInput("simulate_history: disturbance sequence too short or mis-sized");
  if (Delta.cols() > 0 && (Delta.rows() != d.nh() || Delta.cols() < T))
    throw InvalidInput("simulate_history: delta sequence mis-sized");

  HistoryPath path;
  path.Y.resize(d.ny, T);
  path.U.resize(d.nu, T);
  path.H.resize(d.nh(), T + 1);
  Vector h = h_init.h();
  if (h.size() != d.nh()) throw InvalidInput("simulate_history: initial history mis-sized");
  path.H.col(0) = h;
  for (Index t = 0; t < T; ++t) {
    const Vector y = sys.Psi * h + sys.Upsilon * D.col(t);
    const Vector u = K.K * (sys.Gamma * h);
    path.Y.col(t) = y;
    path.U.col(t) = u;
    h = sys.step(h, u, D.col(t));
    if (Delta.cols() > 0) h += Delta.col(t);
    path.H.col(t + 1) = h;
  }
  return path;
}

SimPath simulate_plant_ioh(const Plant& plant, const IohGain& K,
                           const Eigen::Ref<const Matrix>& W, const Eigen::Ref<const Matrix>& V,
                           const Eigen::Ref<const Matrix>& U_prefix) {
  K.validate();
  const Index T = W.cols();
  const Index L = K.L;
  if (U_prefix.cols() < L)
    throw InvalidInput("simulate_plant_ioh: need at least L prefix inputs");
  if (V.cols() != T) throw InvalidInput("simulate_plant_ioh: W and V lengths differ");
  SimPath path;
  path.Y.resize(plant.ny(), T);
  path.U.resize(plant.nu(), T);
  Vector x = Vector::Zero(plant.nx());
  for (Index t = 0; t < T; ++t) {
    const Vector y = plant.C * x + V.col(t);
    path.Y.col(t) = y;
    Vector u;
    if (t < U_prefix.cols()) {
      u = U_prefix.col(t);
    } else {
      Vector z(K.nz());
      z << stack_window(path.U, t - L, L), stack_window(path.Y, t - L, L);
      u = K.K * z;
    }
    path.U.col(t) = u;
    x = plant.A * x + plant.B * u + W.col(t);
  }
  return path;
}

DynController minimal_realization(const DynController& ctl, double cutoff) {
  // reachable restriction: orthonormal basis of im R_n(G, H)
  Matrix G = ctl.G, H = ctl.H, F = ctl.F;
  {
    const Index n = G.rows();
    if (n == 0) return ctl;
    Eigen::JacobiSVD<Matrix> svd(reachability(G, H, n), Eigen::ComputeThinU);
    const Vector& s = svd.singularValues();
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i)
      if (s(i) > cutoff * s(0) && s(i) > 0.0) ++r;
    const Matrix Vb = svd.matrixU().leftCols(r);
    G = Vb.transpose() * G * Vb;
    H = Vb.transpose() * H;
    F = F * Vb;
  }
  // observable restriction: orthonormal basis of the row space of O_n(G, F)
  {
    const Index n = G.rows();
    if (n > 0) {
      Eigen::JacobiSVD<Matrix> svd(observability(G, F, n), Eigen::ComputeThinV);
      const Vector& s = svd.singularValues();
      Index r = 0;
      for (Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff * s(0) && s(i) > 0.0) ++r;
      const Matrix Wb = svd.matrixV().leftCols(r);
      G = Wb.transpose() * G * Wb;
      H = Wb.transpose() * H;
      F = F * Wb;
    }
  }
  DynController out;
  out.G = G;
  out.H = H;
  out.F = F;
  out.xi0 = Vector::Zero(G.rows());
  return out;
}

IohGain lift_controller(const DynController& ctl, Index L, const SolverTolerances& tol) {
  if (L < 1) throw InvalidInput("lift_controller: L must be >= 1");
  DynController m = ctl;
  if (!check_l_step_observable(ctl.G, ctl.F, L, tol.pinv_cutoff)) {
    // the lift only needs the input-output behavior; retry on the minimal realization
    m = minimal_realization(ctl, tol.pinv_cutoff);
    if (!check_l_step_observable(m.G, m.F, L, tol.pinv_cutoff))
      throw ObservabilityError("lift_controller: controller is not L-step observable at L = " +
                               std::to_string(L));
  }
  const Matrix O = observability(m.G, m.F, L);
  const Matrix O_pinv = pinv(O, tol.pinv_cutoff);
  const Matrix FGL = m.F * matrix_power(m.G, L);
  const Matrix Ku = FGL * O_pinv;
  const Matrix Ky = m.F * reachability(m.G, m.H, L) - Ku * block_hankel(m.G, m.H, m.F, L);

  IohGain K;
  K.L = L;
  K.nu = m.F.rows();
  K.ny = m.H.cols();
  K.K.resize(K.nu, K.nz());
  K.K << Ku, Ky;
  return K;
}

DynController realize_controller(const IohGain& K, const Eigen::Ref<const Vector>& z_L,
                                 const SolverTolerances& tol) {
  K.validate();
  const Index L = K.L, nu = K.nu, ny = K.ny;
  const Index nxi = L * nu;
  DynController ctl;
  ctl.G = Matrix::Zero(nxi, nxi);
  for (Index i = 0; i + 1 < L; ++i) ctl.G.block((i + 1) * nu, i * nu, nu, nu).setIdentity();
  for (Index i = 0; i < L; ++i) ctl.G.block(i * nu, (L - 1) * nu, nu, nu) = K.Ku_lag(L - i);
  ctl.H.resize(nxi, ny);
  for (Index i = 0; i < L; ++i) ctl.H.middleRows(i * nu, nu) = K.Ky_lag(L - i);
  ctl.F = Matrix::Zero(nu, nxi);
  ctl.F.rightCols(nu).setIdentity();

  if (z_L.size() == 0) {
    ctl.xi0 = Vector::Zero(nxi);
    return ctl;
  }
  if (z_L.size() != K.nz()) throw InvalidInput("realize_controller: z_L size mismatch");
  const Matrix O = observability(ctl.G, ctl.F, L);
  Eigen::FullPivLU<Matrix> lu(O);
  if (!lu.isInvertible())
    throw SolverError("realize_controller: O_L(G, F) is numerically singular");
  const Vector rhs =
      z_L.head(L * nu) - block_hankel(ctl.G, ctl.H, ctl.F, L) * z_L.tail(L * ny);
  ctl.xi0 = lu.solve(rhs);
  // cross-check against the pseudoinverse route
  const Vector xi0_pinv = pinv(O, tol.pinv_cutoff) * rhs;
  if ((ctl.xi0 - xi0_pinv).norm() > 1e-10 * (1.0 + ctl.xi0.norm()))
    throw SolverError("realize_controller: inverse and pseudoinverse routes disagree");
  return ctl;
}

Matrix structured_gain(const HistorySystem& sys, const IohGain& K) {
  K.validate();
  if (K.nz() != sys.dims.nz() || K.nu != sys.dims.nu)
    throw InvalidInput("structured_gain: gain does not match the history dimensions");
  return K.K * sys.Gamma;
}

}  // namespace iohlqg
