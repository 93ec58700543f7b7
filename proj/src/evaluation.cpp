#include "rted/evaluation.hpp"

#include <cmath>
#include <thread>

#include "rted/error.hpp"
#include "rted/rng.hpp"

namespace rted {

void CostReport::validate() const {
  for (double v : {fuel, reserve, expected_ls, expected_rec})
    if (!(v >= 0.0)) throw Error(ErrorKind::Numerical, "cost report has a negative component");
  if (std::abs(fuel + reserve + expected_ls + expected_rec - total) > 1e-6 * (1.0 + std::abs(total)))
    throw Error(ErrorKind::Numerical, "cost report components do not add up");
}

void to_json(nlohmann::json& j, const CostReport& r) {
  auto parts = [](const CostBreakdown& c) {
    return nlohmann::json{{"fuel", c.fuel},
                          {"reserve", c.reserve},
                          {"load_shedding", c.load_shedding},
                          {"curtailment", c.curtailment},
                          {"total", c.total()}};
  };
  nlohmann::json per = nlohmann::json::array();
  for (const auto& c : r.per_interval) per.push_back(parts(c));
  j = {{"fuel", r.fuel},
       {"reserve", r.reserve},
       {"load_shedding", r.expected_ls},
       {"curtailment", r.expected_rec},
       {"total", r.total},
       {"standard_error", r.standard_error},
       {"penalty_std", r.penalty_std},
       {"scenarios", r.scenarios},
       {"confidence", std::vector<double>(r.confidence_levels.data(),
                                          r.confidence_levels.data() + r.confidence_levels.size())},
       {"per_interval", per}};
}

CostReport monte_carlo_evaluate(const DispatchSolution& schedule, const ScenarioSet& test, const DispatchCase& c,
                                const NetworkModel& net, const std::vector<PlantId>& plants,
                                const EvaluationOptions& options) {
  if (schedule.status != LpStatus::Optimal)
    throw Error(ErrorKind::Domain, "cannot evaluate a schedule whose solve was not optimal");
  if (test.horizon != schedule.horizon() || test.horizon != c.horizon)
    throw Error(ErrorKind::Config, "test scenarios and schedule have different horizons");
  if (test.plants != static_cast<Eigen::Index>(plants.size()))
    throw Error(ErrorKind::Config, "test scenarios and plant list disagree");
  const auto n = test.scenarios, horizon = test.horizon;

  std::vector<RecourseDecision> rec(static_cast<std::size_t>(n));
  const auto workers = std::clamp<Eigen::Index>(options.threads, 1, std::max<Eigen::Index>(n, 1));
  auto work = [&](Eigen::Index w) {
    for (Eigen::Index s = w; s < n; s += workers)
      rec[static_cast<std::size_t>(s)] = solve_recourse(schedule, test.trajectory(s), c, net, plants);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (Eigen::Index w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }

  CostReport r;
  r.scenarios = n;
  r.probabilities = test.probabilities;
  r.per_interval = schedule_costs(c, schedule);
  r.scenario_penalty = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd covered = Eigen::VectorXd::Zero(horizon);
  const double h = c.hours();
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto& d = rec[static_cast<std::size_t>(s)];
    const double w = test.probabilities(s);
    for (Eigen::Index t = 0; t < horizon; ++t) {
      auto& pc = r.per_interval[static_cast<std::size_t>(t)];
      pc.load_shedding += w * h * c.c_ls * (d.shed.col(t).sum() + d.excess(t) + d.overload(t));
      pc.curtailment += w * h * c.c_rec * d.curtailment.col(t).sum();
      if (d.curtailment.col(t).sum() <= 1e-9) covered(t) += w;
    }
    r.scenario_penalty(s) = d.cost.total();
  }
  CostBreakdown sum;
  for (const auto& pc : r.per_interval) sum += pc;
  r.fuel = sum.fuel;
  r.reserve = sum.reserve;
  r.expected_ls = sum.load_shedding;
  r.expected_rec = sum.curtailment;
  r.total = sum.total();

  const double mean = r.probabilities.dot(r.scenario_penalty);
  const double var = r.probabilities.dot((r.scenario_penalty.array() - mean).square().matrix());
  const double eff = 1.0 / r.probabilities.squaredNorm();
  r.penalty_std = std::sqrt(var);
  r.standard_error = r.penalty_std / std::sqrt(eff);

  if (schedule.mode != DispatchMode::Scenario && schedule.confidence.size() == horizon)
    r.confidence_levels = schedule.confidence;
  else
    r.confidence_levels = covered;
  return r;
}

Eigen::VectorXd confidence_table(const DispatchSolution& schedule, const CopulaModel& model,
                                 const Eigen::MatrixXd& forecasts) {
  if (schedule.mode == DispatchMode::Scenario || schedule.upper_cover.size() != schedule.horizon())
    throw Error(ErrorKind::UnsupportedMode, "confidence levels need a distribution-mode schedule");
  if (forecasts.rows() != schedule.horizon() || forecasts.cols() != model.plant_count())
    throw Error(ErrorKind::Config, "forecasts must be horizon x plant");
  Eigen::VectorXd out(schedule.horizon());
  for (Eigen::Index t = 0; t < schedule.horizon(); ++t) {
    const auto cond = conditional_sum(model, forecasts.row(t).transpose());
    out(t) = std::clamp(cond.cdf(schedule.upper_cover(t) / cond.scale_mw()), 0.0, 1.0);
  }
  return out;
}

std::uint64_t evaluation_seed(std::uint64_t seed) { return derive_seed("eval:", seed); }

}  // namespace rted
