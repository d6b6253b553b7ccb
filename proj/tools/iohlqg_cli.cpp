// Command-line front end: LQG synthesis over input-output-history gains.
//
// Subcommands:
//   synth     policy-gradient synthesis, trace/gain/controller/summary outputs
//   baseline  Riccati LQG controller, optionally balanced-truncated
//   gradcheck analytic vs central-difference gradient at a random gain
//   bode      frequency response of a controller over a log grid
//   simulate  Monte-Carlo cost estimate, optionally checked against analytic
//
// Exit codes: 0 success, 1 domain/solver failure, 2 usage error.

#include "CLI11.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "iohlqg/json_io.hpp"
#include "iohlqg/pgm.hpp"
#include "iohlqg/rng.hpp"
#include "iohlqg/sim.hpp"
#include "iohlqg/solvers.hpp"

namespace fs = std::filesystem;
using namespace iohlqg;

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

struct CommonOpts {
  std::string plant_file;
  std::string out_dir = ".";
  Index L = 3;
  double alpha = 1e-3;
  double epsilon = 1e-8;
  long iters = 100000;
  int seeds = 1;
  std::uint64_t seed = 0;
  double grad_tol = 1e-9;
  long record_every = 100;
  double q_scale = -1.0, r_scale = -1.0, vw_scale = -1.0, vv_scale = -1.0;
};

Problem load_with_overrides(const CommonOpts& opt) {
  Problem prob = load_problem(opt.plant_file);
  // scalar overrides replace the matrix with scale * I
  if (opt.q_scale > 0.0)
    prob.weights.Q = opt.q_scale * Matrix::Identity(prob.plant.ny(), prob.plant.ny());
  if (opt.r_scale > 0.0)
    prob.weights.R = opt.r_scale * Matrix::Identity(prob.plant.nu(), prob.plant.nu());
  if (opt.vw_scale >= 0.0)
    prob.noise.Vw = opt.vw_scale * Matrix::Identity(prob.plant.nx(), prob.plant.nx());
  if (opt.vv_scale > 0.0)
    prob.noise.Vv = opt.vv_scale * Matrix::Identity(prob.plant.ny(), prob.plant.ny());
  validate_noise(prob.noise, prob.plant);
  validate_weights(prob.weights, prob.plant);
  return prob;
}

void write_trace_csv(const fs::path& path, const PgmTrace& trace, Index n_svs) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open for writing: " + path.string());
  out << "iter,J,J_eps,grad_norm,rho";
  for (Index i = 1; i <= n_svs; ++i) out << ",hsv_" << i;
  out << ",wall_ms\n";
  for (const TraceRow& row : trace.rows) {
    out << row.iter << ',' << fmt(row.J) << ',' << fmt(row.J_eps) << ',' << fmt(row.grad_norm)
        << ',' << fmt(row.rho);
    for (Index i = 0; i < n_svs; ++i)
      out << ',' << (i < row.hankel_svs.size() ? fmt(row.hankel_svs(i)) : "nan");
    out << ',' << fmt(row.wall_ms) << "\n";
  }
}

int cmd_synth(const CommonOpts& opt) {
  const Problem data = load_with_overrides(opt);
  fs::create_directories(opt.out_dir);

  const HistorySystem sys = build_history_system(data.plant, opt.L);
  const RelaxedProblem prob = make_relaxed_problem(sys, data.noise, data.weights, opt.epsilon);

  PgmConfig cfg;
  cfg.alpha = opt.alpha;
  cfg.epsilon = opt.epsilon;
  cfg.max_iters = opt.iters;
  cfg.grad_tol = opt.grad_tol;
  cfg.record_every = opt.record_every;
  cfg.seed = opt.seed;

  const DynController baseline = lqg_baseline(data.plant, data.noise, data.weights);
  const double J_baseline = cost_of_dyn_controller(data.plant, data.noise, data.weights, baseline);

  const auto outcomes = multi_seed_study(prob, opt.seeds, cfg);

  nlohmann::json summary;
  summary["L"] = opt.L;
  summary["alpha"] = opt.alpha;
  summary["epsilon"] = opt.epsilon;
  summary["max_iters"] = opt.iters;
  summary["baseline_J"] = J_baseline;
  summary["seeds"] = nlohmann::json::array();

  bool any_failed = false;
  double best_J = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < outcomes.size(); ++k) {
    const RunOutcome& out = outcomes[k];
    char tag[32];
    std::snprintf(tag, sizeof(tag), "_s%02zu", k);
    nlohmann::json entry;
    entry["seed"] = out.seed;
    if (out.result) {
      const RunResult& r = *out.result;
      write_trace_csv(fs::path(opt.out_dir) / ("trace" + std::string(tag) + ".csv"), r.trace,
                      opt.L * prob.sys.dims.nu);
      write_json_file(fs::path(opt.out_dir) / ("gain" + std::string(tag) + ".json"),
                      gain_to_json(r.K_final));
      write_json_file(fs::path(opt.out_dir) / ("controller" + std::string(tag) + ".json"),
                      controller_to_json(realize_controller(r.K_final)));
      entry["final_J"] = r.final_J;
      entry["final_J_eps"] = r.final_J_eps;
      entry["final_grad_norm"] = r.final_grad_norm;
      entry["iters"] = r.iters;
      entry["hit_grad_tol"] = r.hit_grad_tol;
      entry["gap_rel"] = (r.final_J - J_baseline) / J_baseline;
      entry["max_jeps_increase"] = r.max_jeps_increase;
      entry["backoff_events"] = r.backoff_events;
      best_J = std::min(best_J, r.final_J);
    } else {
      entry["error"] = out.error;
      any_failed = true;
    }
    summary["seeds"].push_back(entry);
  }
  if (std::isfinite(best_J)) {
    summary["best_final_J"] = best_J;
    summary["gap_rel"] = (best_J - J_baseline) / J_baseline;
  }
  write_json_file(fs::path(opt.out_dir) / "summary.json", summary);
  std::cout << "baseline_J " << fmt(J_baseline) << "\n";
  if (std::isfinite(best_J))
    std::cout << "best_final_J " << fmt(best_J) << "  gap_rel "
              << fmt((best_J - J_baseline) / J_baseline) << "\n";
  if (any_failed || !std::isfinite(best_J)) {
    std::cerr << "synth: one or more runs failed\n";
    return 1;
  }
  return 0;
}

int cmd_baseline(const CommonOpts& opt, Index order) {
  const Problem data = load_with_overrides(opt);
  fs::create_directories(opt.out_dir);
  const DynController lqg = lqg_baseline(data.plant, data.noise, data.weights);
  const double J = cost_of_dyn_controller(data.plant, data.noise, data.weights, lqg);

  nlohmann::json out;
  out["controller"] = controller_to_json(lqg);
  out["cost"] = J;
  write_json_file(fs::path(opt.out_dir) / "baseline.json", out);
  std::cout << "baseline cost " << fmt(J) << "\n";

  if (order > 0) {
    const StateSpace red = balanced_truncation(lqg.G, lqg.H, lqg.F, order);
    DynController rctl;
    rctl.G = red.A;
    rctl.H = red.B;
    rctl.F = red.C;
    rctl.xi0 = Vector::Zero(order);
    const double Jr = cost_of_dyn_controller(data.plant, data.noise, data.weights, rctl);
    nlohmann::json rj;
    rj["controller"] = controller_to_json(rctl);
    rj["cost"] = Jr;
    rj["order"] = order;
    rj["retained_hsv"] = vector_to_json(red.hsv);
    write_json_file(fs::path(opt.out_dir) / "reduced.json", rj);
    std::cout << "order-" << order << " cost " << fmt(Jr) << "\n";
  }
  return 0;
}

int cmd_gradcheck(const CommonOpts& opt) {
  const Problem data = load_with_overrides(opt);
  const RelaxedProblem prob = make_relaxed_problem(build_history_system(data.plant, opt.L),
                                                   data.noise, data.weights, opt.epsilon);
  const IohGain K = random_stabilizing_gain(prob, 1.0, opt.seed);
  const Matrix g = gradient(prob, K);
  const double scale = std::max(g.cwiseAbs().maxCoeff(), 1e-12);

  double max_rel = 0.0;
  const double h = 1e-6;
  for (Index i = 0; i < K.K.rows(); ++i) {
    for (Index j = 0; j < K.K.cols(); ++j) {
      IohGain Kp = K, Km = K;
      Kp.K(i, j) += h;
      Km.K(i, j) -= h;
      const double fd = (cost(prob, Kp).J_eps - cost(prob, Km).J_eps) / (2.0 * h);
      max_rel = std::max(max_rel, std::abs(fd - g(i, j)) / scale);
    }
  }
  // an exactly zero analytic gradient must also difference to zero
  if (g.cwiseAbs().maxCoeff() == 0.0 && max_rel < 1e-8) max_rel = 0.0;
  std::cout << "max relative gradient error " << fmt(max_rel) << "\n";
  return max_rel <= 1e-5 ? 0 : 1;
}

int cmd_bode(const std::string& controller_file, int points, const std::string& out_dir) {
  const DynController ctl = load_controller(controller_file);
  fs::create_directories(out_dir);
  const double w_lo = 1e-3, w_hi = M_PI;
  std::ofstream out(fs::path(out_dir) / "bode.csv");
  if (!out) throw InvalidInput("cannot open bode.csv for writing");
  const Index n_out = ctl.F.rows(), n_in = ctl.H.cols();
  out << "omega";
  for (Index i = 0; i < n_out; ++i)
    for (Index j = 0; j < n_in; ++j)
      out << ",mag_db_" << (i + 1) << "_" << (j + 1) << ",phase_deg_" << (i + 1) << "_" << (j + 1);
  out << "\n";
  for (int k = 0; k < points; ++k) {
    const double t = points == 1 ? 0.0 : static_cast<double>(k) / (points - 1);
    const double w = std::pow(10.0, std::log10(w_lo) + t * (std::log10(w_hi) - std::log10(w_lo)));
    const Eigen::MatrixXcd G = freq_response(ctl.G, ctl.H, ctl.F, w);
    out << fmt(w);
    for (Index i = 0; i < n_out; ++i)
      for (Index j = 0; j < n_in; ++j)
        out << ',' << fmt(20.0 * std::log10(std::abs(G(i, j)))) << ','
            << fmt(std::arg(G(i, j)) * 180.0 / M_PI);
    out << "\n";
  }
  return 0;
}

// one-rollout trajectory dump: t, y_1.., u_1..
void dump_trajectory(const Problem& data, const DynController& ctl, long T, std::uint64_t seed,
                     const fs::path& path) {
  Rng rng(Rng::derive(seed, 0));
  Matrix W(data.plant.nx(), T), V(data.plant.ny(), T);
  const Matrix Sw = sym_sqrt_psd(data.noise.Vw);
  const Matrix Sv = sym_sqrt_psd(data.noise.Vv);
  for (long t = 0; t < T; ++t) {
    for (Index i = 0; i < W.rows(); ++i) W(i, t) = rng.normal();
    for (Index i = 0; i < V.rows(); ++i) V(i, t) = rng.normal();
  }
  W = Sw * W;
  V = Sv * V;
  const SimPath traj = simulate_dyn(data.plant, ctl, W, V);
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open for writing: " + path.string());
  out << "t";
  for (Index i = 1; i <= traj.Y.rows(); ++i) out << ",y_" << i;
  for (Index i = 1; i <= traj.U.rows(); ++i) out << ",u_" << i;
  out << "\n";
  for (long t = 0; t < T; ++t) {
    out << t;
    for (Index i = 0; i < traj.Y.rows(); ++i) out << ',' << fmt(traj.Y(i, t));
    for (Index i = 0; i < traj.U.rows(); ++i) out << ',' << fmt(traj.U(i, t));
    out << "\n";
  }
}

int cmd_simulate(const CommonOpts& opt, const std::string& controller_file,
                 const std::string& gain_file, long T, long rollouts, bool check,
                 long dump_steps) {
  const Problem data = load_with_overrides(opt);
  fs::create_directories(opt.out_dir);
  SimConfig cfg;
  cfg.T = T;
  cfg.n_rollouts = rollouts;
  cfg.seed = opt.seed;

  CostEstimate est;
  double analytic = 0.0;
  if (!gain_file.empty()) {
    const IohGain K = load_gain(gain_file);
    const RelaxedProblem prob = make_relaxed_problem(build_history_system(data.plant, K.L),
                                                     data.noise, data.weights, opt.epsilon);
    est = estimate_cost_ioh(prob, K, cfg, /*with_delta=*/false);
    if (check) analytic = cost(prob, K).J;
  } else {
    const DynController ctl = controller_file.empty()
                                  ? lqg_baseline(data.plant, data.noise, data.weights)
                                  : load_controller(controller_file);
    est = estimate_cost_dyn(data.plant, data.noise, data.weights, ctl, cfg);
    if (check) analytic = cost_of_dyn_controller(data.plant, data.noise, data.weights, ctl);
    if (dump_steps > 0)
      dump_trajectory(data, ctl, dump_steps, opt.seed, fs::path(opt.out_dir) / "trajectory.csv");
  }

  nlohmann::json out = cost_estimate_to_json(est);
  if (check) out["analytic"] = analytic;
  write_json_file(fs::path(opt.out_dir) / "cost_estimate.json", out);
  std::cout << "mean " << fmt(est.mean) << "  std_err " << fmt(est.std_err) << "\n";
  if (check) {
    const double gap = std::abs(est.mean - analytic);
    std::cout << "analytic " << fmt(analytic) << "  |gap| " << fmt(gap) << "  3*std_err "
              << fmt(3.0 * est.std_err) << "\n";
    return gap <= 3.0 * est.std_err ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LQG controller synthesis via policy gradient over input-output-history gains"};
  app.require_subcommand(1);

  CommonOpts opt;
  Index order = 0;
  std::string controller_file, gain_file;
  long sim_T = 100000, sim_rollouts = 20, dump_steps = 0;
  bool check = false;
  int bode_points = 200;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--plant", opt.plant_file, "problem JSON file")->required();
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--seed", opt.seed, "RNG seed");
    sub->add_option("--epsilon", opt.epsilon, "relaxation noise covariance scale");
    sub->add_option("--L", opt.L, "history window length");
    sub->add_option("--Q", opt.q_scale, "override Q with scale * I");
    sub->add_option("--R", opt.r_scale, "override R with scale * I");
    sub->add_option("--Vw", opt.vw_scale, "override Vw with scale * I");
    sub->add_option("--Vv", opt.vv_scale, "override Vv with scale * I");
  };

  CLI::App* synth = app.add_subcommand("synth", "policy-gradient synthesis");
  add_common(synth);
  synth->add_option("--alpha", opt.alpha, "gradient step size");
  synth->add_option("--iters", opt.iters, "iteration budget");
  synth->add_option("--seeds", opt.seeds, "number of independent runs");
  synth->add_option("--grad-tol", opt.grad_tol, "gradient-norm stopping tolerance");
  synth->add_option("--record-every", opt.record_every, "trace recording stride");

  CLI::App* baseline = app.add_subcommand("baseline", "Riccati LQG baseline");
  add_common(baseline);
  baseline->add_option("--order", order, "balanced-truncation order");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  add_common(gradcheck);

  CLI::App* bode = app.add_subcommand("bode", "controller frequency response");
  bode->add_option("--controller", controller_file, "controller JSON file")->required();
  bode->add_option("--points", bode_points, "frequency grid size");
  bode->add_option("--out", opt.out_dir, "output directory");

  CLI::App* simulate = app.add_subcommand("simulate", "Monte-Carlo cost estimate");
  add_common(simulate);
  simulate->add_option("--controller", controller_file, "controller JSON (default: baseline)");
  simulate->add_option("--gain", gain_file, "history-gain JSON (simulates the lifted loop)");
  simulate->add_option("--T", sim_T, "rollout horizon");
  simulate->add_option("--rollouts", sim_rollouts, "number of rollouts");
  simulate->add_flag("--check", check, "exit nonzero unless within 3 std errors of analytic");
  simulate->add_option("--dump", dump_steps, "also dump one rollout of this length as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(opt);
    if (baseline->parsed()) return cmd_baseline(opt, order);
    if (gradcheck->parsed()) return cmd_gradcheck(opt);
    if (bode->parsed()) return cmd_bode(controller_file, bode_points, opt.out_dir);
    if (simulate->parsed())
      return cmd_simulate(opt, controller_file, gain_file, sim_T, sim_rollouts, check,
                          dump_steps);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
