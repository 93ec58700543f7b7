#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "rted/data_ingest.hpp"
#include "rted/marginals.hpp"

namespace rted {

/// A weighted sum of plant outputs modeled as one more copula dimension.
/// `weights` are MW per p.u. of each plant (capacity times shift factor for a
/// line flow, capacity alone for the system sum).
struct DerivedVariableSpec {
  std::string label;
  Eigen::VectorXd weights;

  /// Normalizing scale sum |w|, so the derived value lives in [-1, 1].
  double scale_mw() const { return weights.cwiseAbs().sum(); }

  static DerivedVariableSpec sum(const std::vector<PlantId>& plants);
  /// One spec per line from a line x plant shift-factor matrix.
  static std::vector<DerivedVariableSpec> lines(const Eigen::MatrixXd& plant_shift_factors,
                                                const std::vector<PlantId>& plants);
  static std::string line_label(Eigen::Index line) { return "line:" + std::to_string(line); }
};

enum class VariableRole { Actual, Forecast, Derived };

struct VariableInfo {
  std::string label;
  VariableRole role = VariableRole::Actual;
  int plant = -1;     // plant position for Actual / Forecast
  int derived = -1;   // position in derived specs for Derived
  double scale_mw = 1.0;  // MW represented by one unit of the variable
};

struct FitOptions {
  HistogramGrid grid{};
  /// Plant positions whose forecasts enter the model; empty means all.
  std::vector<int> forecast_plants;
  /// Ridge weight blended into the latent correlation when samples < variables.
  double ridge = 0.05;
  double eigen_floor = 1e-10;
};

/// Gaussian copula over plant actuals, plant forecasts and derived sums.
/// Variable order: actuals, forecasts, derived.
class CopulaModel {
 public:
  CopulaModel() = default;

  /// Assemble from parts. Validates shapes, symmetry and unit diagonal.
  CopulaModel(std::vector<PlantId> plants, std::vector<int> forecast_plants,
              std::vector<DerivedVariableSpec> derived, std::vector<EmpiricalMarginal> marginals,
              Eigen::MatrixXd corr, Eigen::Index sample_count);

  const std::vector<VariableInfo>& variables() const { return variables_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(variables_.size()); }
  const Eigen::MatrixXd& correlation() const { return corr_; }
  const std::vector<EmpiricalMarginal>& marginals() const { return marginals_; }
  const EmpiricalMarginal& marginal(Eigen::Index var) const { return marginals_[static_cast<std::size_t>(var)]; }
  const std::vector<PlantId>& plants() const { return plants_; }
  Eigen::Index plant_count() const { return static_cast<Eigen::Index>(plants_.size()); }
  const std::vector<int>& forecast_plants() const { return forecast_plants_; }
  const std::vector<DerivedVariableSpec>& derived() const { return derived_; }
  Eigen::Index sample_count() const { return sample_count_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

  Eigen::Index actual_index(Eigen::Index plant) const { return plant; }
  std::optional<Eigen::Index> forecast_index(Eigen::Index plant) const;
  std::optional<Eigen::Index> find(const std::string& label) const;

  /// Latent coordinate of a conditioning value: Phi^-1 of the marginal CDF,
  /// clamped to the fitted pseudo-observation range [1/(N+1), N/(N+1)].
  double latent(Eigen::Index var, double value) const;

  /// Same marginals and derived variables, identity correlation across plants
  /// (each actual keeps only its link to its own forecast).
  CopulaModel without_spatial_correlation() const;

 private:
  void build_variables();

  std::vector<PlantId> plants_;
  std::vector<int> forecast_plants_;
  std::vector<DerivedVariableSpec> derived_;
  std::vector<VariableInfo> variables_;
  std::vector<EmpiricalMarginal> marginals_;
  Eigen::MatrixXd corr_;
  Eigen::Index sample_count_ = 0;
  std::vector<std::string> warnings_;
};

/// Fit marginals and the latent correlation from synchronized history.
CopulaModel fit_copula(const HistoricalDataset& data, const std::vector<DerivedVariableSpec>& derived = {},
                       const FitOptions& options = {});

/// Conditional law of one variable: x = F^-1(Phi(mean + std * z)), z ~ N(0,1).
class UnivariateConditional {
 public:
  UnivariateConditional() = default;
  UnivariateConditional(EmpiricalMarginal base, double cond_mean, double cond_std, double scale_mw = 1.0);

  const EmpiricalMarginal& base() const { return base_; }
  double cond_mean() const { return mean_; }
  double cond_std() const { return std_; }
  double scale_mw() const { return scale_mw_; }
  bool near_deterministic() const { return near_deterministic_; }

  double cdf(double x) const;
  double pdf(double x) const;
  double quantile(double beta) const;
  /// Conditional probability of each base bin (a point mass has one entry).
  Eigen::VectorXd bin_masses() const;
  double mean() const;

 private:
  EmpiricalMarginal base_;
  double mean_ = 0.0;
  double std_ = 1.0;
  double scale_mw_ = 1.0;
  bool near_deterministic_ = false;
};

inline double quantile(const UnivariateConditional& c, double beta) { return c.quantile(beta); }

/// Conditional of `target` given values (in the variables' own units).
UnivariateConditional full_conditional(const CopulaModel& model, Eigen::Index target,
                                       const std::map<Eigen::Index, double>& given);

/// Per-plant forecasts in p.u.; only plants with forecast variables are used.
UnivariateConditional conditional_sum(const CopulaModel& model, const Eigen::VectorXd& forecasts);
UnivariateConditional conditional_line(const CopulaModel& model, Eigen::Index line, const Eigen::VectorXd& forecasts);

void to_json(nlohmann::json& j, const CopulaModel& m);
CopulaModel copula_from_json(const nlohmann::json& j);

}  // namespace rted
