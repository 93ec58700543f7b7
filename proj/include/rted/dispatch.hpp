#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "rted/copula_model.hpp"
#include "rted/lp_solver.hpp"
#include "rted/network.hpp"
#include "rted/scenario_gen.hpp"

namespace rted {

/// One conventional unit. Cost rates are per hour and are scaled by the
/// interval length when the LP is built.
struct CppParams {
  std::string name;
  int bus = 0;
  double fuel_slope = 0.0;         // $/MWh
  double fuel_fixed = 0.0;         // $/h
  double reserve_up_cost = 10.0;   // $/MW per hour
  double reserve_down_cost = 10.0;
  double p_min = 0.0;
  double p_max = 0.0;
  double ramp_up = kInf;  // MW per interval
  double ramp_down = kInf;
  double reserve_up_max = kInf;
  double reserve_down_max = kInf;
  double p0 = 0.0;  // output before the first interval

  void validate() const;
};

struct DispatchCase {
  std::string name = "case";
  std::vector<CppParams> cpps;
  Eigen::Index horizon = 12;
  int step_minutes = 5;
  Eigen::VectorXd load_mw;  // system load per interval, spread over buses by load shares
  double c_ls = 1000.0;     // $/MW per hour of shed load
  double c_rec = 80.0;      // $/MW per hour of curtailed renewable output
  double beta_line = 0.999;
  int breakpoint_stride = 2;  // histogram bins per chord of the shortfall functions

  double hours() const { return static_cast<double>(step_minutes) / 60.0; }
  Eigen::Index cpp_count() const { return static_cast<Eigen::Index>(cpps.size()); }
  void validate() const;
};

void to_json(nlohmann::json& j, const DispatchCase& c);
DispatchCase dispatch_case_from_json(const nlohmann::json& j);
DispatchCase load_dispatch_case(const std::filesystem::path& path);

/// bus x time load in MW.
Eigen::MatrixXd bus_load(const DispatchCase& c, const NetworkModel& net);

// ---------------------------------------------------------------------------
// Expected shortfall of a renewable total against a cover level r:
//   Below: g(r) = E[(r - R)+]  (energy the reserves cannot supply)
//   Above: h(r) = E[(R - r)+]  (energy that must be spilled)

enum class ShortfallSide { Below, Above };

/// Exact value in MW for the histogram form of the conditional: uniform
/// density inside each bin with the conditional bin masses.
double expected_shortfall(const UnivariateConditional& cond, ShortfallSide side, double r_mw);

/// Chord interpolation of the exact convex function between breakpoints
/// (MW), with the exact linear tails outside the conditional's support.
class ShortfallPwl {
 public:
  ShortfallPwl(ShortfallSide side, std::vector<double> x, std::vector<double> y, double lower, double upper,
               double mean);

  ShortfallSide side() const { return side_; }
  double support_lower() const { return lower_; }
  double support_upper() const { return upper_; }
  double mean() const { return mean_; }
  const std::vector<double>& breakpoints() const { return x_; }
  const std::vector<double>& values() const { return y_; }
  double operator()(double r) const;

  struct Cut {
    double slope;
    double intercept;  // epigraph: e >= slope * r + intercept
  };
  /// Supporting lines whose maximum equals the interpolant; collinear chords
  /// are merged.
  std::vector<Cut> cuts() const;

 private:
  ShortfallSide side_;
  std::vector<double> x_, y_;
  double lower_, upper_, mean_;
};

ShortfallPwl expected_shortfall_pwl(const UnivariateConditional& cond, ShortfallSide side,
                                    const std::vector<double>& breakpoints_mw);

/// Bin edges every `stride` bins across the support, in MW.
std::vector<double> default_breakpoints(const UnivariateConditional& cond, int stride);

// ---------------------------------------------------------------------------

enum class DispatchMode { Distribution, DistributionForecastLines, Scenario };
const char* to_string(DispatchMode m);

struct CostBreakdown {
  double fuel = 0.0;
  double reserve = 0.0;
  double load_shedding = 0.0;
  double curtailment = 0.0;
  double total() const { return fuel + reserve + load_shedding + curtailment; }
  CostBreakdown& operator+=(const CostBreakdown& o);
};

/// Recourse actions of one scenario (MW).
struct RecourseDecision {
  Eigen::MatrixXd reserve_deployed;  // cpp x T
  Eigen::MatrixXd curtailment;       // plant x T
  Eigen::MatrixXd shed;              // bus x T
  Eigen::VectorXd excess;            // T, generation above load that nothing could absorb
  Eigen::VectorXd overload;          // T, total line overload that could not be relieved
  CostBreakdown cost;                // penalty parts only
};

struct DispatchSolution {
  DispatchMode mode = DispatchMode::Distribution;
  LpStatus status = LpStatus::Optimal;
  Eigen::MatrixXd p, r_up, r_down;  // cpp x T
  // Distribution modes.
  Eigen::VectorXd scheduled_renewable, lower_cover, upper_cover, confidence;
  // Scenario mode.
  std::vector<RecourseDecision> recourse;
  CostBreakdown cost;
  std::vector<CostBreakdown> per_interval;
  double objective = 0.0;
  int iterations = 0;
  std::vector<std::string> infeasible_rows;

  Eigen::Index horizon() const { return p.cols(); }
};

void to_json(nlohmann::json& j, const DispatchSolution& s);
DispatchSolution dispatch_solution_from_json(const nlohmann::json& j);

/// Fuel and reserve cost of a schedule per interval.
std::vector<CostBreakdown> schedule_costs(const DispatchCase& c, const DispatchSolution& s);

struct DistributionEdProblem {
  LinearProgram lp;
  DispatchMode mode = DispatchMode::Distribution;
  Eigen::Index horizon = 0, cpps = 0;
  std::vector<Eigen::Index> p, r_up, r_down;  // [t * cpps + i]
  std::vector<Eigen::Index> scheduled, lower, upper, e_ls, e_rec;  // [t]
  std::vector<UnivariateConditional> sum_conditionals;  // [t]
  double hours = 1.0, c_ls = 0.0, c_rec = 0.0;
  std::vector<CppParams> units;

  DispatchSolution decode(const LpSolution& sol) const;
};

/// `forecasts` is T x plant in p.u. With `forecast_lines` the line limits use
/// the forecast renewable flow instead of the conditional quantiles.
DistributionEdProblem build_distribution_ed(const DispatchCase& c, const CopulaModel& model, const NetworkModel& net,
                                            const Eigen::MatrixXd& forecasts, bool forecast_lines = false);
DispatchSolution solve_distribution_ed(const DispatchCase& c, const CopulaModel& model, const NetworkModel& net,
                                       const Eigen::MatrixXd& forecasts, bool forecast_lines = false);

struct ScenarioEdProblem {
  LinearProgram lp;
  Eigen::Index horizon = 0, cpps = 0, plants = 0, scenarios = 0;
  std::vector<Eigen::Index> p, r_up, r_down;  // [t * cpps + i]
  // First variable of the recourse block of scenario s at interval t, at
  // [s * horizon + t]. Block layout: deployed reserve per unit, curtailment
  // per plant, shed load per bus, excess generation, then overload above and
  // below per monitored line.
  std::vector<Eigen::Index> block;
  Eigen::Index buses = 0, lines = 0;
  Eigen::VectorXd probabilities;
  double hours = 1.0, c_ls = 0.0, c_rec = 0.0;
  std::vector<CppParams> units;

  DispatchSolution decode(const LpSolution& sol) const;
};

/// Extensive form with every scenario's recourse. Intended for small sets and
/// for export; solve_scenario_ed decomposes by scenario instead.
ScenarioEdProblem build_scenario_ed(const DispatchCase& c, const ScenarioSet& scenarios, const NetworkModel& net,
                                    const std::vector<PlantId>& plants);

struct ScenarioEdOptions {
  int max_iterations = 300;
  double rel_gap = 1e-7;
  int threads = 1;
  bool keep_recourse = false;  // store per-scenario recourse in the solution
};

/// L-shaped decomposition: a master over the schedule with one aggregated
/// optimality cut per interval and iteration.
DispatchSolution solve_scenario_ed(const DispatchCase& c, const ScenarioSet& scenarios, const NetworkModel& net,
                                   const std::vector<PlantId>& plants, const ScenarioEdOptions& options = {});

/// Recourse of one realized trajectory (T x plant, p.u.) against a fixed
/// schedule. Always feasible: load can be shed up to the full bus load,
/// renewable output curtailed to zero, and line overload the remaining
/// actions cannot relieve is priced like shed load.
RecourseDecision solve_recourse(const DispatchSolution& schedule, const Eigen::MatrixXd& realized,
                                const DispatchCase& c, const NetworkModel& net, const std::vector<PlantId>& plants);

}  // namespace rted
