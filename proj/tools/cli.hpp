#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ssnsm/aft_fit.hpp"
#include "ssnsm/dataset.hpp"
#include "ssnsm/estimators.hpp"

namespace ssnsm::cli {

enum class Command { fit, simulate, predict, evaluate };

struct ColumnMapping {
  std::string time = "time";
  std::string status = "status";
  /// Empty means every other column.
  std::vector<std::string> covariates;
};

struct RunConfig {
  Command command = Command::fit;
  std::filesystem::path input;
  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  ColumnMapping columns;
  std::uint64_t seed = 20240101;
  std::optional<int> reps;
  int bootstrap = 500;
  std::optional<double> tmax;
  std::filesystem::path out = "ssnsm_out";
  unsigned workers = 0;
  std::string preset;
  /// Covariate profiles for survival curves, "name:v1,v2,..." or "v1,v2,...".
  std::vector<std::string> profiles;
  int curve_points = 100;
  int ibs_grid = 200;
};

struct IngestResult {
  SurvivalDataset data;
  std::vector<std::string> covariate_names;
  /// Rows skipped because a mapped value was missing.
  std::size_t dropped = 0;
};

/// Reads a comma-separated file with a header row. Cells that are empty, NA,
/// NaN or "." count as missing; rows with a missing mapped value are
/// dropped. Throws std::runtime_error naming the line for malformed rows,
/// non-positive times or status values outside {0, 1}, and when no events
/// remain.
IngestResult ingest_csv(const std::filesystem::path& path, const ColumnMapping& mapping);

/// Writes data in the same layout ingest_csv reads (time, status, covariates).
void write_dataset_csv(const std::filesystem::path& path, const SurvivalDataset& data,
                       const std::vector<std::string>& covariate_names);

/// 6 significant digits, as used for every CSV cell.
std::string format_csv_number(double v);

nlohmann::json model_to_json(const FittedModel& model);

/// Each command returns a process exit code; diagnostics go to `err`.
int cmd_fit(const RunConfig& config, std::ostream& log, std::ostream& err);
int cmd_simulate(const RunConfig& config, std::ostream& log, std::ostream& err);
int cmd_predict(const RunConfig& config, std::ostream& log, std::ostream& err);
int cmd_evaluate(const RunConfig& config, std::ostream& log, std::ostream& err);

int run(const RunConfig& config, std::ostream& log, std::ostream& err);

/// Parses argv (flags, optional --config file, SSNSM_AFT_SEED fallback) and
/// runs the command.
int main_entry(int argc, char** argv);

}  // namespace ssnsm::cli
