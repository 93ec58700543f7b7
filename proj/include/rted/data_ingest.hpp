#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rted {

enum class PlantKind { Wind, Solar };

struct PlantId {
  int index = 0;
  PlantKind kind = PlantKind::Wind;
  double capacity_mw = 0.0;
  int bus = 0;  // external bus id, matched against the network when one is attached
  std::string name;
};

/// Synchronized forecast/actual series, sample x plant, in p.u. of capacity.
struct HistoricalDataset {
  std::vector<PlantId> plants;
  std::vector<std::int64_t> timestamps;  // minutes since 1970-01-01T00:00
  int step_minutes = 5;
  Eigen::MatrixXd forecast;
  Eigen::MatrixXd actual;

  Eigen::Index samples() const { return actual.rows(); }
  Eigen::Index plant_count() const { return actual.cols(); }
  double total_capacity_mw() const;

  /// Throws Data/Format errors when an invariant does not hold.
  void validate() const;
};

/// Column names inside each plant CSV. The manifest may override them per plant.
struct ColumnSchema {
  std::string timestamp = "timestamp";
  std::string forecast = "forecast_pu";
  std::string actual = "actual_pu";
};

/// Load a corpus from a manifest file (or a directory holding `manifest.json`).
///
/// Manifest layout:
/// {
///   "step_minutes": 5, "units": "pu" | "mw",
///   "plants": [{"name": "W1", "kind": "wind", "capacity_mw": 100, "bus": 4,
///               "file": "W1.csv", "columns": {"forecast": "...", ...}}]
/// }
/// Several plants may share one wide CSV by pointing at different columns.
HistoricalDataset load_historical(const std::filesystem::path& path, const ColumnSchema& schema = {});

/// Write the canonical layout: manifest.json plus one `<name>.csv` per plant
/// with `timestamp,forecast_pu,actual_pu`. Values use shortest round-trip
/// decimals so reloading is bit-identical.
void write_canonical(const HistoricalDataset& data, const std::filesystem::path& dir);

struct PersistencePair {
  Eigen::MatrixXd forecast;
  Eigen::MatrixXd actual;
};

/// forecast[t] = actual[t - horizon_steps]; the first horizon_steps rows are
/// dropped from both outputs.
PersistencePair persistence_forecast(const Eigen::MatrixXd& actual, int horizon_steps);

/// Replace the dataset's forecast columns with persistence forecasts.
HistoricalDataset with_persistence_forecast(const HistoricalDataset& data, int horizon_steps);

std::string format_timestamp(std::int64_t minutes);
std::int64_t parse_timestamp(const std::string& text);

const char* to_string(PlantKind kind);
PlantKind plant_kind_from_string(const std::string& s);

}  // namespace rted
