#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "rted/dispatch.hpp"
#include "rted/error.hpp"

namespace rted {

enum class RunMode { DistributionEd, ScenarioEd };
// Where scenario-mode schedules get their scenarios from.
enum class ScenarioSource { Dynamic, Static, Independent };

const char* to_string(RunMode m);
const char* to_string(ScenarioSource s);

/// One batch run. Relative paths resolve against `base_dir` (the directory of
/// the config file). The hash covers everything that changes results, so it
/// leaves out `threads`, `output_dir` and `base_dir`.
struct RunConfig {
  std::string name = "run";
  std::filesystem::path base_dir;
  std::filesystem::path data_dir, network, case_file, output_dir;
  RunMode mode = RunMode::DistributionEd;
  bool forecast_lines = false;
  ScenarioSource source = ScenarioSource::Dynamic;
  // First dispatch interval. Only history strictly before it is fitted.
  std::string origin;
  Eigen::Index n_scenarios = 2000;
  Eigen::Index burn_in = 1000;
  // Re-burn between recorded scenarios, for every generated set.
  Eigen::Index sweeps_per_scenario = 10;
  std::vector<Eigen::Index> reduced_targets{500};
  std::vector<double> epsilon_grid{3.0, 6.0, 12.0, 24.0, 48.0, 96.0};
  std::optional<double> epsilon;  // fixed range parameter, skips tuning
  Eigen::Index eval_scenarios = 2000;
  Eigen::Index eval_burn_in = 1000;
  bool compare_cases = false;              // distribution, forecast lines and the three scenario sources
  std::vector<double> curtailment_sweep;  // extra distribution solves, one per c_rec
  std::uint64_t seed = 1;
  int threads = 1;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  void validate() const;
  nlohmann::json canonical() const;
  std::string hash() const;  // 16 hex digits of FNV-1a over canonical().dump()
};

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

enum class Stage { Fit, Generate, Reduce, Dispatch, Evaluate, Report };
const char* to_string(Stage s);
const std::vector<Stage>& all_stages();

/// An Error raised inside a stage, tagged with the stage.
class StageError : public Error {
 public:
  StageError(Stage stage, const Error& e) : Error(e.kind(), std::string(to_string(stage)) + ": " + e.what()), stage_(stage) {}
  Stage stage() const noexcept { return stage_; }

 private:
  Stage stage_;
};

/// 2 configuration, 3 data, 4 solver.
int exit_code(ErrorKind kind);

struct PlannedSchedule {
  std::string label;
  DispatchMode mode = DispatchMode::Distribution;
  ScenarioSource source = ScenarioSource::Dynamic;
  Eigen::Index reduced = 0;  // scenario mode only
  double c_rec = 0.0;
};

/// Schedules a config asks for, primary first, without duplicates.
std::vector<PlannedSchedule> planned_schedules(const RunConfig& cfg, const DispatchCase& c);

/// Progress notes; the CLI turns them into text or JSON lines.
using PipelineLog = std::function<void(Stage, const std::string&)>;

/// Runs one stage against the artifacts earlier stages left in output_dir.
void run_stage(Stage stage, const RunConfig& cfg, const PipelineLog& log = {});
void run_pipeline(const RunConfig& cfg, const PipelineLog& log = {});

// Artifact locations inside output_dir.
std::filesystem::path model_path(const RunConfig& cfg);
std::filesystem::path scenario_path(const RunConfig& cfg, ScenarioSource source, Eigen::Index reduced = 0);
std::filesystem::path test_scenario_path(const RunConfig& cfg);
std::filesystem::path solution_path(const RunConfig& cfg, const std::string& label);
std::filesystem::path evaluation_path(const RunConfig& cfg, const std::string& label);
std::filesystem::path report_dir(const RunConfig& cfg);

/// Paired comparison of two evaluations on the same test set: the mean
/// penalty difference a - b and its standard error.
struct PairedDifference {
  double difference = 0.0;
  double standard_error = 0.0;
  bool not_worse_at_2sigma() const { return difference <= 2.0 * standard_error; }
};
PairedDifference paired_difference(double total_a, const Eigen::VectorXd& penalty_a, double total_b,
                                   const Eigen::VectorXd& penalty_b, const Eigen::VectorXd& probabilities);

}  // namespace rted
