#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "rted/dispatch.hpp"

namespace rted {

/// Out-of-sample cost of a schedule. Fuel and reserve are the schedule's own
/// charges; load shedding and curtailment are probability-weighted recourse.
struct CostReport {
  double fuel = 0.0;
  double reserve = 0.0;
  double expected_ls = 0.0;
  double expected_rec = 0.0;
  double total = 0.0;
  std::vector<CostBreakdown> per_interval;
  // F(upper cover) for distribution schedules, otherwise the share of test
  // scenarios needing no curtailment.
  Eigen::VectorXd confidence_levels;
  Eigen::VectorXd scenario_penalty;  // LS + REC of each test scenario, $
  Eigen::VectorXd probabilities;
  double penalty_std = 0.0;     // weighted standard deviation of scenario_penalty
  double standard_error = 0.0;  // of the total, penalty_std / sqrt(effective count)
  Eigen::Index scenarios = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const CostReport& r);

struct EvaluationOptions {
  int threads = 1;
};

/// Recourse of every test scenario against a fixed schedule. The reduction runs
/// in scenario order, so the report does not depend on the thread count.
CostReport monte_carlo_evaluate(const DispatchSolution& schedule, const ScenarioSet& test, const DispatchCase& c,
                                const NetworkModel& net, const std::vector<PlantId>& plants,
                                const EvaluationOptions& options = {});

/// Conditional probability, per interval, that the renewable total stays
/// below the upper cover. Needs a distribution-mode schedule.
Eigen::VectorXd confidence_table(const DispatchSolution& schedule, const CopulaModel& model,
                                 const Eigen::MatrixXd& forecasts);

/// Seed for held-out test scenarios, kept apart from optimization seeds.
std::uint64_t evaluation_seed(std::uint64_t seed);

}  // namespace rted
