#include "iohlqg/json_io.hpp"

#include <fstream>

#include "iohlqg/block_ops.hpp"

namespace iohlqg {

nlohmann::json matrix_to_json(const Eigen::Ref<const Matrix>& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw InvalidInput(name + ": expected a nested array of rows");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = static_cast<Index>(j[0].size());
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (static_cast<Index>(j[i].size()) != cols)
      throw InvalidInput(name + ": ragged rows");
    for (Index k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw InvalidInput(name + ": non-numeric entry");
      M(i, k) = j[i][k].get<double>();
    }
  }
  require_finite(M, name.c_str());
  return M;
}

nlohmann::json vector_to_json(const Eigen::Ref<const Vector>& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vector vector_from_json(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array()) throw InvalidInput(name + ": expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) {
    if (!j[i].is_number()) throw InvalidInput(name + ": non-numeric entry");
    v(i) = j[i].get<double>();
  }
  require_finite(v, name.c_str());
  return v;
}

nlohmann::json problem_to_json(const Problem& p) {
  return nlohmann::json{{"A", matrix_to_json(p.plant.A)},    {"B", matrix_to_json(p.plant.B)},
                        {"C", matrix_to_json(p.plant.C)},    {"Vw", matrix_to_json(p.noise.Vw)},
                        {"Vv", matrix_to_json(p.noise.Vv)},  {"Q", matrix_to_json(p.weights.Q)},
                        {"R", matrix_to_json(p.weights.R)}};
}

Problem problem_from_json(const nlohmann::json& j) {
  Problem p;
  for (const char* key : {"A", "B", "C", "Vw", "Vv", "Q", "R"})
    if (!j.contains(key)) throw InvalidInput(std::string("problem: missing field ") + key);
  p.plant.A = matrix_from_json(j["A"], "A");
  p.plant.B = matrix_from_json(j["B"], "B");
  p.plant.C = matrix_from_json(j["C"], "C");
  p.noise.Vw = matrix_from_json(j["Vw"], "Vw");
  p.noise.Vv = matrix_from_json(j["Vv"], "Vv");
  p.weights.Q = matrix_from_json(j["Q"], "Q");
  p.weights.R = matrix_from_json(j["R"], "R");
  validate_plant(p.plant);
  validate_noise(p.noise, p.plant);
  validate_weights(p.weights, p.plant);
  return p;
}

Problem load_problem(const std::filesystem::path& path) {
  return problem_from_json(read_json_file(path));
}

nlohmann::json controller_to_json(const DynController& ctl) {
  return nlohmann::json{{"G", matrix_to_json(ctl.G)},
                        {"H", matrix_to_json(ctl.H)},
                        {"F", matrix_to_json(ctl.F)},
                        {"xi0", vector_to_json(ctl.xi0)}};
}

DynController controller_from_json(const nlohmann::json& j) {
  DynController ctl;
  ctl.G = matrix_from_json(j.at("G"), "G");
  ctl.H = matrix_from_json(j.at("H"), "H");
  ctl.F = matrix_from_json(j.at("F"), "F");
  ctl.xi0 = j.contains("xi0") ? vector_from_json(j["xi0"], "xi0") : Vector::Zero(ctl.G.rows());
  if (ctl.G.rows() != ctl.G.cols() || ctl.H.rows() != ctl.G.rows() ||
      ctl.F.cols() != ctl.G.rows() || ctl.xi0.size() != ctl.G.rows())
    throw InvalidInput("controller: inconsistent dimensions");
  return ctl;
}

DynController load_controller(const std::filesystem::path& path) {
  return controller_from_json(read_json_file(path));
}

nlohmann::json gain_to_json(const IohGain& K) {
  return nlohmann::json{
      {"L", K.L}, {"nu", K.nu}, {"ny", K.ny}, {"K", matrix_to_json(K.K)}};
}

IohGain gain_from_json(const nlohmann::json& j) {
  IohGain K;
  K.L = j.at("L").get<Index>();
  K.nu = j.at("nu").get<Index>();
  K.ny = j.at("ny").get<Index>();
  K.K = matrix_from_json(j.at("K"), "K");
  K.validate();
  return K;
}

IohGain load_gain(const std::filesystem::path& path) {
  return gain_from_json(read_json_file(path));
}

nlohmann::json cost_report_to_json(const CostReport& report) {
  return nlohmann::json{{"J", report.J},
                        {"J_eps", report.J_eps},
                        {"gamma_K", report.gamma_K},
                        {"const_term", report.const_term},
                        {"stable", report.stable}};
}

nlohmann::json cost_estimate_to_json(const CostEstimate& est) {
  return nlohmann::json{
      {"mean", est.mean}, {"std_err", est.std_err}, {"n_samples", est.n_samples}};
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw InvalidInput("write failed: " + path.string());
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("JSON parse error in " + path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace iohlqg
