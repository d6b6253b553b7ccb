#pragma once

// JSON (de)serialization for the problem data and results. Matrices are
// row-major nested arrays of decimal floats.

#include <filesystem>
#include <string>

#include "json.hpp"

#include "iohlqg/history.hpp"
#include "iohlqg/lqg.hpp"
#include "iohlqg/plant.hpp"
#include "iohlqg/sim.hpp"

namespace iohlqg {

nlohmann::json matrix_to_json(const Eigen::Ref<const Matrix>& M);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& name);
nlohmann::json vector_to_json(const Eigen::Ref<const Vector>& v);
Vector vector_from_json(const nlohmann::json& j, const std::string& name);

// One file carries the whole synthesis problem:
// {"A": [[...]], "B": ..., "C": ..., "Vw": ..., "Vv": ..., "Q": ..., "R": ...}
struct Problem {
  Plant plant;
  NoiseSpec noise;
  CostWeights weights;
};

nlohmann::json problem_to_json(const Problem& p);
Problem problem_from_json(const nlohmann::json& j);
Problem load_problem(const std::filesystem::path& path);

// {"G": ..., "H": ..., "F": ..., "xi0": [...]}
nlohmann::json controller_to_json(const DynController& ctl);
DynController controller_from_json(const nlohmann::json& j);
DynController load_controller(const std::filesystem::path& path);

// {"L": int, "nu": int, "ny": int, "K": [[...]]}
nlohmann::json gain_to_json(const IohGain& K);
IohGain gain_from_json(const nlohmann::json& j);
IohGain load_gain(const std::filesystem::path& path);

nlohmann::json cost_report_to_json(const CostReport& report);
nlohmann::json cost_estimate_to_json(const CostEstimate& est);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace iohlqg
