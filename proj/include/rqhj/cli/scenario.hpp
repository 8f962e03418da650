#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rqhj/cli/config.hpp"

namespace rqhj::cli {

/// Exit statuses of `run`.
inline constexpr int kExitOk = 0;
inline constexpr int kExitResidualFailed = 1;
inline constexpr int kExitConfigError = 2;

/// Named columns of equal length; NaN renders as NA (csv) or null (json).
struct Table {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  void add(std::string name, std::vector<double> values);
};

struct SummaryRow {
  std::string equation_id;
  double c{0};
  double linf{0};
  double l2{0};
  double scale{0};
  double tolerance{0};
  bool pass{false};
};

struct ScenarioOutcome {
  int exit_status{kExitOk};
  std::string diagnostic;
  Table pointwise;
  std::vector<SummaryRow> summary;
  nlohmann::json meta;
};

/// Runs solve -> build -> verify without touching the filesystem.
ScenarioOutcome evaluate_scenario(const ScenarioConfig& config);

/// evaluate_scenario plus output files. Returns the exit status.
int run_scenario(const ScenarioConfig& config, std::ostream& diagnostics);

/// 17 significant digits, NA for NaN.
std::string format_number(double value);

std::string render_csv(const Table& table);
std::string render_summary_csv(const std::vector<SummaryRow>& rows);
std::string render_json(const ScenarioOutcome& outcome);

/// "out.csv" -> "out.summary.csv"
std::filesystem::path summary_path(const std::filesystem::path& path);

/// Writes via a temporary file in the same directory and renames it into place.
void write_atomically(const std::filesystem::path& path, const std::string& contents);

}  // namespace rqhj::cli
