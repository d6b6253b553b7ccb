#include "iohlqg/sim.hpp"

#include <Eigen/Eigenvalues>

#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "iohlqg/block_ops.hpp"
#include "iohlqg/pgm.hpp"
#include "iohlqg/rng.hpp"

namespace iohlqg {

void SimConfig::validate() const {
  if (T < 1) throw InvalidInput("SimConfig: T must be >= 1");
  if (n_rollouts < 1) throw InvalidInput("SimConfig: n_rollouts must be >= 1");
  const long b = effective_burn_in();
  if (!(T > b && b >= 0)) throw InvalidInput("SimConfig: need T > burn_in >= 0");
}

namespace {

constexpr double kNormGuard = 1e12;

// Draws x ~ N(0, V) through the symmetric eigendecomposition square root;
// eigenvalues in [-1e-12, 0) are flushed to zero.
class GaussianSampler {
 public:
  explicit GaussianSampler(const Matrix& V) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(V);
    if (es.info() != Eigen::Success) throw SolverError("GaussianSampler: eigensolver failed");
    Vector lam = es.eigenvalues();
    for (Index i = 0; i < lam.size(); ++i) {
      if (lam(i) < -1e-12 * std::max(1.0, V.norm()))
        throw InvalidInput("GaussianSampler: covariance is not positive semidefinite");
      lam(i) = std::sqrt(std::max(lam(i), 0.0));
    }
    factor_ = es.eigenvectors() * lam.asDiagonal();
  }

  Vector sample(Rng& rng) const {
    Vector xi(factor_.cols());
    for (Index i = 0; i < xi.size(); ++i) xi(i) = rng.normal();
    return factor_ * xi;
  }

 private:
  Matrix factor_;
};

struct RolloutStats {
  double mean = 0.0;
  double std_err = 0.0;
};

RolloutStats aggregate(const std::vector<double>& means) {
  RolloutStats s;
  const long n = static_cast<long>(means.size());
  for (double m : means) s.mean += m;
  s.mean /= static_cast<double>(n);
  if (n >= 2) {
    double ss = 0.0;
    for (double m : means) ss += (m - s.mean) * (m - s.mean);
    s.std_err = std::sqrt(ss / (static_cast<double>(n) * static_cast<double>(n - 1)));
  }
  return s;
}

// Runs `body(rollout_index)` over [0, n) on up to thread_cap() threads.
void parallel_rollouts(long n, const std::function<void(long)>& body) {
  const unsigned n_threads =
      std::min<unsigned>(thread_cap(), static_cast<unsigned>(std::max<long>(n, 1)));
  if (n_threads <= 1) {
    for (long r = 0; r < n; ++r) body(r);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const long r = next.fetch_add(1);
      if (r >= n) return;
      try {
        body(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

CostEstimate estimate_cost_dyn(const Plant& plant, const NoiseSpec& noise,
                               const CostWeights& weights, const DynController& ctl,
                               const SimConfig& cfg) {
  cfg.validate();
  validate_controller(ctl, plant);
  const GaussianSampler w_sampler(noise.Vw);
  const GaussianSampler v_sampler(noise.Vv);
  const long burn = cfg.effective_burn_in();
  std::vector<double> means(cfg.n_rollouts, 0.0);
  parallel_rollouts(cfg.n_rollouts, [&](long r) {
    Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(r)));
    Vector x = Vector::Zero(plant.nx());
    Vector xi = ctl.xi0.size() == ctl.nxi() ? ctl.xi0 : Vector::Zero(ctl.nxi());
    double acc = 0.0;
    for (long t = 0; t < cfg.T; ++t) {
      const Vector w = w_sampler.sample(rng);
      const Vector v = v_sampler.sample(rng);
      const Vector y = plant.C * x + v;
      const Vector u = ctl.F * xi;
      if (t >= burn) acc += y.dot(weights.Q * y) + u.dot(weights.R * u);
      x = plant.A * x + plant.B * u + w;
      xi = ctl.G * xi + ctl.H * y;
      if (x.norm() > kNormGuard || xi.norm() > kNormGuard)
        throw SimulationDiverged("estimate_cost_dyn: rollout " + std::to_string(r) +
                                 " exceeded the state-norm guard");
    }
    means[r] = acc / static_cast<double>(cfg.T - burn);
  });
  const RolloutStats s = aggregate(means);
  return CostEstimate{s.mean, s.std_err, cfg.n_rollouts};
}

CostEstimate estimate_cost_ioh(const RelaxedProblem& prob, const IohGain& K, const SimConfig& cfg,
                               bool with_delta) {
  cfg.validate();
  K.validate();
  if (!is_stabilizing(prob, K))
    throw InstabilityError("estimate_cost_ioh: gain is not stabilizing");
  const HistorySystem& sys = prob.sys;
  const GaussianSampler d_sampler(prob.noise.Vd());
  const double delta_std = std::sqrt(prob.epsilon);
  const long burn = cfg.effective_burn_in();
  std::vector<double> means(cfg.n_rollouts, 0.0);
  parallel_rollouts(cfg.n_rollouts, [&](long r) {
    Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(r)));
    Vector h = Vector::Zero(sys.dims.nh());
    double acc = 0.0;
    for (long t = 0; t < cfg.T; ++t) {
      const Vector d = d_sampler.sample(rng);
      const Vector y = sys.Psi * h + sys.Upsilon * d;
      const Vector u = K.K * (sys.Gamma * h);
      if (t >= burn) acc += y.dot(prob.weights.Q * y) + u.dot(prob.weights.R * u);
      h = sys.step(h, u, d);
      if (with_delta)
        for (Index i = 0; i < h.size(); ++i) h(i) += delta_std * rng.normal();
      if (h.norm() > kNormGuard)
        throw SimulationDiverged("estimate_cost_ioh: rollout " + std::to_string(r) +
                                 " exceeded the state-norm guard");
    }
    means[r] = acc / static_cast<double>(cfg.T - burn);
  });
  const RolloutStats s = aggregate(means);
  return CostEstimate{s.mean, s.std_err, cfg.n_rollouts};
}

BlockCostCheck block_cost_identity_check(const RelaxedProblem& prob, const IohGain& K,
                                         const SimConfig& cfg) {
  cfg.validate();
  K.validate();
  if (!is_stabilizing(prob, K))
    throw InstabilityError("block_cost_identity_check: gain is not stabilizing");
  const HistorySystem& sys = prob.sys;
  const Index L = sys.dims.L;
  // S = diag(I_L (x) R, I_L (x) Q), matching the oldest-first z stacking
  Matrix S = Matrix::Zero(sys.dims.nz(), sys.dims.nz());
  S.topLeftCorner(L * sys.dims.nu, L * sys.dims.nu) =
      kron(Matrix::Identity(L, L), prob.weights.R);
  S.bottomRightCorner(L * sys.dims.ny, L * sys.dims.ny) =
      kron(Matrix::Identity(L, L), prob.weights.Q);

  const GaussianSampler d_sampler(prob.noise.Vd());
  const long burn = cfg.effective_burn_in();
  std::vector<double> lhs_means(cfg.n_rollouts, 0.0), rhs_means(cfg.n_rollouts, 0.0);
  parallel_rollouts(cfg.n_rollouts, [&](long r) {
    Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(r)));
    Vector h = Vector::Zero(sys.dims.nh());
    double lhs = 0.0, rhs = 0.0;
    for (long t = 0; t < cfg.T; ++t) {
      const Vector d = d_sampler.sample(rng);
      const Vector y = sys.Psi * h + sys.Upsilon * d;
      const Vector z = sys.Gamma * h;
      const Vector u = K.K * z;
      if (t >= burn) {
        lhs += y.dot(prob.weights.Q * y) + u.dot(prob.weights.R * u);
        rhs += z.dot(S * z) / static_cast<double>(L);
      }
      h = sys.step(h, u, d);
      if (h.norm() > kNormGuard)
        throw SimulationDiverged("block_cost_identity_check: rollout " + std::to_string(r) +
                                 " exceeded the state-norm guard");
    }
    lhs_means[r] = lhs / static_cast<double>(cfg.T - burn);
    rhs_means[r] = rhs / static_cast<double>(cfg.T - burn);
  });

  BlockCostCheck out;
  const RolloutStats ls = aggregate(lhs_means);
  const RolloutStats rs = aggregate(rhs_means);
  std::vector<double> diff(cfg.n_rollouts);
  for (long r = 0; r < cfg.n_rollouts; ++r) diff[r] = lhs_means[r] - rhs_means[r];
  const RolloutStats ds = aggregate(diff);
  out.lhs = ls.mean;
  out.rhs = rs.mean;
  out.lhs_std_err = ls.std_err;
  out.rhs_std_err = rs.std_err;
  out.diff_std_err = ds.std_err;
  out.n_samples = cfg.n_rollouts;
  return out;
}

}  // namespace iohlqg
