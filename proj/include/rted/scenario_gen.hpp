#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "rted/copula_model.hpp"
#include "rted/data_ingest.hpp"

namespace rted {

struct GibbsConfig {
  enum class Init { Forecast, Custom };
  Eigen::Index n_scenarios = 5000;
  Eigen::Index n_burn_in = 1000;
  // Gibbs sweeps between recorded scenarios; above one thins the chain.
  Eigen::Index sweeps_per_scenario = 1;
  std::uint64_t seed = 1;
  Init init = Init::Forecast;
  Eigen::VectorXd custom_init;  // p.u. per plant when init == Custom
  int threads = 1;

  void validate(Eigen::Index plants) const;
};

/// Exponential temporal covariance exp(-|m - n| / epsilon_j) per plant.
struct TemporalModel {
  Eigen::VectorXd epsilon;
  Eigen::Index horizon = 1;

  static TemporalModel uniform(double epsilon, Eigen::Index plants, Eigen::Index horizon);

  Eigen::MatrixXd covariance(Eigen::Index plant) const;
  /// Lag-one correlation exp(-1/epsilon_j).
  double lag_one(Eigen::Index plant) const;
  void validate(Eigen::Index plants) const;
};

/// Scenario x time x plant values in p.u. with scenario probabilities.
struct ScenarioSet {
  Eigen::Index scenarios = 0;
  Eigen::Index horizon = 0;
  Eigen::Index plants = 0;
  std::vector<double> values;
  Eigen::VectorXd probabilities;
  Eigen::MatrixXd forecasts;  // horizon x plant
  std::uint64_t seed = 0;
  std::string origin;  // "static", "dynamic", "reduced", ...

  ScenarioSet() = default;
  ScenarioSet(Eigen::Index s, Eigen::Index t, Eigen::Index p);

  double& at(Eigen::Index s, Eigen::Index t, Eigen::Index j) {
    return values[static_cast<std::size_t>((s * horizon + t) * plants + j)];
  }
  double at(Eigen::Index s, Eigen::Index t, Eigen::Index j) const {
    return values[static_cast<std::size_t>((s * horizon + t) * plants + j)];
  }
  /// horizon x plant matrix of one scenario.
  Eigen::MatrixXd trajectory(Eigen::Index s) const;
  /// All scenarios of one plant at one time.
  Eigen::VectorXd cross_section(Eigen::Index t, Eigen::Index j) const;

  /// Probabilities sum to one within 1e-12 and values lie in [0, 1].
  void validate() const;
};

/// Per-plant latent regression of the plant's actual on all other actuals
/// and on the modeled forecasts. One Gibbs update of plant j is
/// z_j = coeffs_actual . z_(-j) + coeffs_forecast . z_f + std * noise.
class GibbsKernel {
 public:
  explicit GibbsKernel(const CopulaModel& model);

  Eigen::Index plants() const { return static_cast<Eigen::Index>(sd_.size()); }
  /// plant x plant, zero diagonal.
  const Eigen::MatrixXd& actual_coeffs() const { return actual_; }
  /// plant x modeled-forecast.
  const Eigen::MatrixXd& forecast_coeffs() const { return forecast_; }
  const Eigen::VectorXd& conditional_std() const { return sd_; }
  /// Forecast latents for a p.u. forecast vector (one entry per plant).
  Eigen::VectorXd forecast_latent(const CopulaModel& model, const Eigen::VectorXd& forecasts) const;

 private:
  Eigen::MatrixXd actual_;
  Eigen::MatrixXd forecast_;
  Eigen::VectorXd sd_;
};

/// Static scenarios for one interval by round-robin Gibbs sweeps.
ScenarioSet gibbs_static(const CopulaModel& model, const Eigen::VectorXd& forecasts, const GibbsConfig& cfg);

/// Temporally correlated scenarios over a forecast trajectory (T x plant).
ScenarioSet dynamic_generate(const CopulaModel& model, const Eigen::MatrixXd& forecast_traj,
                             const TemporalModel& temporal, const GibbsConfig& cfg);

/// Scenarios from independent static chains per interval: the same sampler as
/// dynamic_generate with an identity temporal covariance.
ScenarioSet static_horizon(const CopulaModel& model, const Eigen::MatrixXd& forecast_traj, const GibbsConfig& cfg);

struct TuneOptions {
  Eigen::Index window = 12;        // pilot trajectory length
  Eigen::Index windows = 16;       // pilot trajectories drawn from history
  Eigen::Index pilot_scenarios = 200;
  Eigen::Index pilot_burn_in = 100;
  std::uint64_t seed = 17;
  double quantum = 0.01;           // differences are measured on this grid
};

struct TuneResult {
  double epsilon = 0.0;
  std::vector<double> grid;
  std::vector<double> ks;  // per grid entry
};

/// Grid search for the range parameter of one plant by matching the
/// distribution of one-step output changes (KS distance).
TuneResult tune_range_parameter_detailed(const CopulaModel& model, const HistoricalDataset& historical,
                                         Eigen::Index plant, const std::vector<double>& grid,
                                         const TuneOptions& options = {});
double tune_range_parameter(const CopulaModel& model, const HistoricalDataset& historical, Eigen::Index plant,
                            const std::vector<double>& grid, const TuneOptions& options = {});

struct ReductionOptions {
  /// Swap refinement after each forward step, used while the input has at
  /// most this many scenarios.
  Eigen::Index exchange_limit = 2000;
};

struct ReductionResult {
  ScenarioSet set;
  std::vector<Eigen::Index> selected;  // indices into the input, in selection order
  double distance = 0.0;               // Kantorovich distance to the input
};

/// L1 distance between two scenario trajectories.
double trajectory_distance(const ScenarioSet& set, Eigen::Index a, Eigen::Index b);

/// Kantorovich distance between the set and the subset `selected` with the
/// optimal (nearest-neighbour) transport.
double kantorovich_distance(const ScenarioSet& set, const std::vector<Eigen::Index>& selected);

ReductionResult reduce_scenarios_detailed(const ScenarioSet& set, Eigen::Index target,
                                          const ReductionOptions& options = {});
ScenarioSet reduce_scenarios(const ScenarioSet& set, Eigen::Index target, const ReductionOptions& options = {});

/// `scenario,time,plant,value_pu` rows plus a JSON sidecar with probabilities.
void write_scenarios(const ScenarioSet& set, const std::vector<PlantId>& plants, const std::filesystem::path& csv,
                     const nlohmann::json& extra = {});
ScenarioSet read_scenarios(const std::filesystem::path& csv);

}  // namespace rted
