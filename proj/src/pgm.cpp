#include "iohlqg/pgm.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "iohlqg/rng.hpp"
#include "iohlqg/solvers.hpp"

namespace iohlqg {

void PgmConfig::validate() const {
  if (!(alpha > 0.0)) throw InvalidInput("PgmConfig: alpha must be > 0");
  if (!(epsilon > 0.0)) throw InvalidInput("PgmConfig: epsilon must be > 0");
  if (!(grad_tol > 0.0)) throw InvalidInput("PgmConfig: grad_tol must be > 0");
  if (max_iters < 1) throw InvalidInput("PgmConfig: max_iters must be >= 1");
  if (record_every < 1) throw InvalidInput("PgmConfig: record_every must be >= 1");
}

IohGain random_stabilizing_gain(const RelaxedProblem& prob, double norm, std::uint64_t seed,
                                long budget) {
  if (!(norm > 0.0)) throw InvalidInput("random_stabilizing_gain: norm must be > 0");
  Rng rng(seed);
  IohGain K;
  K.L = prob.sys.dims.L;
  K.nu = prob.sys.dims.nu;
  K.ny = prob.sys.dims.ny;
  K.K.resize(K.nu, K.nz());
  for (long draw = 0; draw < budget; ++draw) {
    for (Index i = 0; i < K.K.rows(); ++i)
      for (Index j = 0; j < K.K.cols(); ++j) K.K(i, j) = rng.uniform_pm1();
    const double f = K.K.norm();
    if (f == 0.0) continue;
    K.K *= norm / f;
    if (is_stabilizing(prob, K)) return K;
  }
  throw NoStabilizerFound("random_stabilizing_gain: no stabilizing gain in " +
                          std::to_string(budget) + " draws");
}

std::pair<IohGain, DescentCheck> step(const RelaxedProblem& prob, const IohGain& K, double alpha) {
  if (!(alpha > 0.0)) throw InvalidInput("step: alpha must be > 0");
  const Evaluation ev = evaluate_gain(prob, K, /*with_gradient=*/true);
  if (!ev.stable)
    throw InstabilityError("step: current gain is not stabilizing, rho = " +
                           std::to_string(ev.rho));
  IohGain next = K;
  next.K = K.K - alpha * ev.grad;
  const Evaluation ev_next = evaluate_gain(prob, next, /*with_gradient=*/false);
  if (!ev_next.stable)
    throw StepDestabilized("step: update left the stabilizing set", ev_next.rho);
  DescentCheck check;
  check.delta_J_eps = ev.J_eps - ev_next.J_eps;
  check.alpha_grad_sq = alpha * ev.grad_norm * ev.grad_norm;
  return {next, check};
}

namespace {

Vector trace_hankel_svs(const IohGain& K, const SolverTolerances& tol) {
  const Index n = K.L * K.nu;
  Vector svs = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
  try {
    const DynController ctl = realize_controller(K, Vector(), tol);
    if (spectral_radius(ctl.G) < 1.0 - tol.stability_margin)
      svs = hankel_singular_values(ctl.G, ctl.H, ctl.F, tol);
  } catch (const Error&) {
    // leave NaN; an unstable realization has no Hankel spectrum
  }
  return svs;
}

}  // namespace

RunResult run(const RelaxedProblem& prob, const IohGain& K0, const PgmConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto wall_ms = [&t0]() {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  IohGain K = K0;
  Evaluation ev = evaluate_gain(prob, K, /*with_gradient=*/true);
  if (!ev.stable)
    throw InstabilityError("run: initial gain is not stabilizing, rho = " +
                           std::to_string(ev.rho));

  RunResult res;
  res.max_jeps_increase = -std::numeric_limits<double>::infinity();
  res.min_coercivity_slack = ev.J_eps - coercivity_lower_bound(prob, K);

  auto record = [&](long iter) {
    TraceRow row;
    row.iter = iter;
    row.J = ev.J;
    row.J_eps = ev.J_eps;
    row.grad_norm = ev.grad_norm;
    row.rho = ev.rho;
    row.hankel_svs = trace_hankel_svs(K, prob.tol);
    row.wall_ms = wall_ms();
    res.trace.rows.push_back(row);
  };
  record(0);

  long iter = 0;
  while (iter < config.max_iters) {
    if (ev.grad_norm < config.grad_tol) {
      res.hit_grad_tol = true;
      break;
    }
    double alpha = config.alpha;
    IohGain next = K;
    bool accepted = false;
    double last_rho = 0.0;
    for (int backoff = 0; backoff <= 30; ++backoff) {
      next.K = K.K - alpha * ev.grad;
      // cheap stability probe; the full evaluation runs only on acceptance
      last_rho = spectral_radius(theta_closed(prob.sys, next));
      if (last_rho < 1.0 - prob.tol.stability_margin) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
      ++res.backoff_events;
    }
    if (!accepted)
      throw StepDestabilized("run: step destabilized after 30 halvings at iteration " +
                                 std::to_string(iter),
                             last_rho);
    Evaluation ev_next = evaluate_gain(prob, next, /*with_gradient=*/true);
    if (!ev_next.stable)
      throw StepDestabilized("run: accepted step failed the full stability gate", ev_next.rho);

    if (ev_next.J_eps - ev.J_eps > res.max_jeps_increase) {
      res.max_jeps_increase = ev_next.J_eps - ev.J_eps;
      res.max_jeps_increase_iter = iter;
    }
    res.min_coercivity_slack =
        std::min(res.min_coercivity_slack, ev_next.J_eps - coercivity_lower_bound(prob, next));
    K = next;
    ev = ev_next;
    ++iter;
    if (iter % config.record_every == 0) record(iter);
  }

  if (res.trace.rows.empty() || res.trace.rows.back().iter != iter) record(iter);
  res.K_final = K;
  res.iters = iter;
  res.final_J = ev.J;
  res.final_J_eps = ev.J_eps;
  res.final_grad_norm = ev.grad_norm;
  res.final_rho = ev.rho;
  return res;
}

unsigned thread_cap() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("IOHLQG_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1 && static_cast<unsigned>(v) < hw) hw = static_cast<unsigned>(v);
  }
  return hw;
}

std::vector<RunOutcome> multi_seed_study(const RelaxedProblem& prob, int n_seeds,
                                         const PgmConfig& config, double init_norm) {
  if (n_seeds < 1) throw InvalidInput("multi_seed_study: n_seeds must be >= 1");
  config.validate();
  std::vector<RunOutcome> outcomes(n_seeds);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int k = next.fetch_add(1);
      if (k >= n_seeds) return;
      RunOutcome& out = outcomes[k];
      out.seed = Rng::derive(config.seed, static_cast<std::uint64_t>(k));
      try {
        const IohGain K0 = random_stabilizing_gain(prob, init_norm, out.seed);
        out.result = run(prob, K0, config);
      } catch (const Error& e) {
        out.error = e.what();
      }
    }
  };
  const unsigned n_threads = std::min<unsigned>(thread_cap(), static_cast<unsigned>(n_seeds));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return outcomes;
}

}  // namespace iohlqg
