#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rqhj/physics.hpp"
#include "rqhj/reduced_action.hpp"
#include "rqhj/residual.hpp"

namespace rqhj::cli {

inline constexpr int kSchemaVersion = 1;

enum class OutputFormat { csv, json };

struct Tolerances {
  double eps_sing{0};  // 0: 1e-6 * m0 c^2
  double rel_tol{1e-10};
  double residual{1e-6};
};

struct NonrelativisticSweep {
  double e_prime{0};
  std::vector<double> c_values;
};

/// Validated scenario. `source` keeps the JSON document (after overrides) for echoing.
struct ScenarioConfig {
  PhysicsSetup<double> setup;
  PotentialSpec<double> potential;
  Grid<double> grid;
  MixingConstants<double> mixing;
  std::vector<EquationId> run;
  Tolerances tolerances;
  NonrelativisticSweep nonrel;
  OutputFormat format{OutputFormat::csv};
  std::string path;
  nlohmann::json source;
};

nlohmann::json load_config_file(const std::filesystem::path& path);

/// Applies "dotted.key=value"; the value is parsed as JSON when possible, else kept as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

ScenarioConfig parse_config(const nlohmann::json& doc);

PotentialSpec<double> parse_potential(const nlohmann::json& node);

}  // namespace rqhj::cli
