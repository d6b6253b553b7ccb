#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "iohlqg/json_io.hpp"
#include "test_fixtures.hpp"

namespace fs = std::filesystem;

namespace {

const char* cli_path() { return IOHLQG_CLI_PATH; }
const fs::path data_dir{IOHLQG_DATA_DIR};

struct CliResult {
  int code;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path log = fs::temp_directory_path() / ("iohlqg_cli_" + std::to_string(counter++));
  const std::string cmd = std::string(cli_path()) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  CliResult res;
  res.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  res.out = ss.str();
  fs::remove(log);
  return res;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string strip_wall_fields(const std::string& csv) {
  // drop the trailing wall_ms column from every row
  std::stringstream in(csv), out;
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.rfind(',');
    out << (pos == std::string::npos ? line : line.substr(0, pos)) << "\n";
  }
  return out.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli: baseline computes the demo cost and writes JSON") {
  const fs::path out = fresh_dir("iohlqg_test_baseline");
  const CliResult r = run_cli("baseline --plant " + (data_dir / "demo_plant.json").string() +
                              " --order 2 --out " + out.string());
  CHECK(r.code == 0);
  const auto base = iohlqg::read_json_file(out / "baseline.json");
  CHECK(base["cost"].get<double>() == doctest::Approx(77.408545).epsilon(1e-6));
  const auto red = iohlqg::read_json_file(out / "reduced.json");
  CHECK(red["cost"].get<double>() == doctest::Approx(78.555122).epsilon(1e-5));
  CHECK(red["order"].get<int>() == 2);
  // the written controller parses back
  CHECK_NOTHROW(iohlqg::controller_from_json(base["controller"]));
}

TEST_CASE("cli: missing plant file exits 1, bad flag exits 2") {
  const CliResult missing = run_cli("baseline --plant /nonexistent/plant.json");
  CHECK(missing.code == 1);
  const CliResult usage = run_cli("baseline --no-such-flag");
  CHECK(usage.code == 2);
  const CliResult no_sub = run_cli("");
  CHECK(no_sub.code == 2);
}

TEST_CASE("cli: gradcheck passes on the demo plant across seeds") {
  for (int seed : {1, 2, 3}) {
    const CliResult r = run_cli("gradcheck --plant " + (data_dir / "demo_plant.json").string() +
                                " --L 3 --epsilon 1e-6 --seed " + std::to_string(seed));
    CAPTURE(r.out);
    CHECK(r.code == 0);
  }
}

TEST_CASE("cli: synth writes trace, gain, controller and summary") {
  const fs::path out = fresh_dir("iohlqg_test_synth");
  const CliResult r = run_cli("synth --plant " + (data_dir / "demo_plant.json").string() +
                              " --L 3 --alpha 1.5e-4 --iters 300 --seeds 2 --seed 5 " +
                              "--record-every 100 --out " + out.string());
  CHECK(r.code == 0);
  for (const char* name :
       {"trace_s00.csv", "gain_s00.json", "controller_s00.json", "trace_s01.csv", "summary.json"})
    CHECK(fs::exists(out / name));

  const auto summary = iohlqg::read_json_file(out / "summary.json");
  CHECK(summary["seeds"].size() == 2);
  CHECK(summary["baseline_J"].get<double>() == doctest::Approx(77.408545).epsilon(1e-6));
  // the gain round-trips and realizes
  const iohlqg::IohGain K = iohlqg::load_gain(out / "gain_s00.json");
  CHECK(K.L == 3);
  CHECK(K.nz() == 9);

  // trace header carries the Hankel columns
  std::ifstream trace(out / "trace_s00.csv");
  std::string header;
  std::getline(trace, header);
  CHECK(header == "iter,J,J_eps,grad_norm,rho,hsv_1,hsv_2,hsv_3,wall_ms");
}

TEST_CASE("cli: reruns are byte-identical apart from wall-time fields") {
  const fs::path out1 = fresh_dir("iohlqg_test_det1");
  const fs::path out2 = fresh_dir("iohlqg_test_det2");
  const std::string common = "synth --plant " + (data_dir / "demo_plant.json").string() +
                             " --L 2 --alpha 1e-4 --iters 200 --seeds 1 --seed 11 --out ";
  CHECK(run_cli(common + out1.string()).code == 0);
  CHECK(run_cli(common + out2.string()).code == 0);
  CHECK(strip_wall_fields(slurp(out1 / "trace_s00.csv")) ==
        strip_wall_fields(slurp(out2 / "trace_s00.csv")));
  CHECK(slurp(out1 / "gain_s00.json") == slurp(out2 / "gain_s00.json"));
}

TEST_CASE("cli: bode emits the requested grid") {
  const fs::path out = fresh_dir("iohlqg_test_bode");
  // static-gain controller through a one-state realization with G = 0
  iohlqg::DynController ctl;
  ctl.G = iohlqg::Matrix::Zero(1, 1);
  ctl.H.resize(1, 2);
  ctl.H << 0.4, -0.2;
  ctl.F = iohlqg::Matrix::Identity(1, 1);
  ctl.xi0 = iohlqg::Vector::Zero(1);
  iohlqg::write_json_file(out / "ctl.json", iohlqg::controller_to_json(ctl));

  const CliResult single = run_cli("bode --controller " + (out / "ctl.json").string() +
                                   " --points 1 --out " + out.string());
  CHECK(single.code == 0);
  {
    std::ifstream csv(out / "bode.csv");
    std::string line;
    int rows = 0;
    while (std::getline(csv, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 2);  // header + one grid point
  }

  const CliResult r = run_cli("bode --controller " + (out / "ctl.json").string() +
                              " --points 40 --out " + out.string());
  CHECK(r.code == 0);
  // a one-step-delay static gain has flat magnitude across frequencies
  std::ifstream csv(out / "bode.csv");
  std::string header, first, last, line;
  std::getline(csv, header);
  std::getline(csv, first);
  while (std::getline(csv, line))
    if (!line.empty()) last = line;
  auto second_field = [](const std::string& s) {
    const auto a = s.find(','), b = s.find(',', s.find(',') + 1);
    return std::stod(s.substr(a + 1, b - a - 1));
  };
  CHECK(second_field(first) == doctest::Approx(second_field(last)).epsilon(1e-9));
}

TEST_CASE("cli: simulate against the analytic value") {
  const fs::path out = fresh_dir("iohlqg_test_sim");
  const CliResult r = run_cli("simulate --plant " + (data_dir / "demo_plant.json").string() +
                              " --T 40000 --rollouts 10 --seed 3 --check --out " + out.string());
  CAPTURE(r.out);
  CHECK(r.code == 0);
  const auto est = iohlqg::read_json_file(out / "cost_estimate.json");
  CHECK(est["n_samples"].get<int>() == 10);
  CHECK(est.contains("analytic"));
}

TEST_CASE("cli: simulate --dump writes a trajectory CSV") {
  const fs::path out = fresh_dir("iohlqg_test_dump");
  const CliResult r = run_cli("simulate --plant " + (data_dir / "demo_plant.json").string() +
                              " --T 2000 --rollouts 2 --seed 8 --dump 50 --out " + out.string());
  CHECK(r.code == 0);
  std::ifstream csv(out / "trajectory.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "t,y_1,y_2,u_1");
  int rows = 0;
  std::string line;
  while (std::getline(csv, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 50);
}

TEST_CASE("json round trips preserve problems, controllers, gains and reports") {
  using namespace iohlqg;
  const Problem p{testing::demo_plant(), testing::demo_noise(), testing::demo_weights()};
  const Problem back = problem_from_json(problem_to_json(p));
  CHECK((back.plant.A - p.plant.A).norm() == 0.0);
  CHECK((back.noise.Vv - p.noise.Vv).norm() == 0.0);
  CHECK((back.weights.R - p.weights.R).norm() == 0.0);

  const DynController lqg = lqg_baseline(p.plant, p.noise, p.weights);
  const DynController ctl_back = controller_from_json(controller_to_json(lqg));
  CHECK((ctl_back.G - lqg.G).norm() == 0.0);
  CHECK((ctl_back.xi0 - lqg.xi0).norm() == 0.0);

  const IohGain K = lift_controller(lqg, 3);
  const IohGain gain_back = gain_from_json(gain_to_json(K));
  CHECK(gain_back.L == 3);
  CHECK((gain_back.K - K.K).norm() == 0.0);

  const RelaxedProblem prob =
      make_relaxed_problem(build_history_system(p.plant, 3), p.noise, p.weights, 1e-8);
  const CostReport report = cost(prob, K);
  const auto j = cost_report_to_json(report);
  CHECK(j["J"].get<double>() == report.J);
  CHECK(j["J_eps"].get<double>() == report.J_eps);
  CHECK(j["gamma_K"].get<double>() == report.gamma_K);
  CHECK(j["const_term"].get<double>() == report.const_term);
  CHECK(j["stable"].get<bool>() == true);

  // malformed documents are rejected
  nlohmann::json bad = problem_to_json(p);
  bad.erase("Q");
  CHECK_THROWS_AS(problem_from_json(bad), InvalidInput);
  nlohmann::json ragged = nlohmann::json::array({{1.0, 2.0}, {3.0}});
  CHECK_THROWS_AS(matrix_from_json(ragged, "M"), InvalidInput);
}
