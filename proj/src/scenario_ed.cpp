#include <algorithm>
#include <cmath>
#include <thread>

#include "dispatch_internal.hpp"
#include "rted/dispatch.hpp"
#include "rted/error.hpp"

namespace rted {

using detail::tag;

namespace {

// One interval's recourse against fixed unit outputs and reserves.
class RecourseModel {
 public:
  RecourseModel(const DispatchCase& c, const NetworkModel& net, const std::vector<PlantId>& plants)
      : c_(c), units_(c.cpp_count()), plants_(static_cast<Eigen::Index>(plants.size())) {
    check_plant_buses(net, plants);
    k_unit_ = detail::unit_shift_factors(c, net);
    k_plant_ = plant_shift_factors(net, plants);
    k_bus_ = net.ptdf();
    loads_ = bus_load(c, net);
    for (auto l : net.monitored_lines()) {
      monitored_.push_back(l);
      limits_.push_back(net.lines()[static_cast<std::size_t>(l)].limit_mw);
    }
    for (const auto& p : plants) capacity_.push_back(p.capacity_mw);
  }

  Eigen::Index units() const { return units_; }
  Eigen::Index plants() const { return plants_; }
  Eigen::Index buses() const { return loads_.rows(); }
  Eigen::Index lines() const { return static_cast<Eigen::Index>(monitored_.size()); }
  Eigen::Index block_size() const { return units_ + plants_ + buses() + 1 + 2 * lines(); }
  double capacity(Eigen::Index j) const { return capacity_[static_cast<std::size_t>(j)]; }
  const Eigen::MatrixXd& loads() const { return loads_; }

  struct Result {
    double ls = 0.0, rec = 0.0;  // $ for the interval
    Eigen::VectorXd grad_p, grad_ru, grad_rd;
    Eigen::VectorXd deployed, curtailed, shed;
    double excess = 0.0, overload = 0.0;
  };

  // Variables of one recourse block added to `lp`, costs scaled by `weight`.
  // Returns the first variable index.
  Eigen::Index add_block(LinearProgram& lp, const std::string& sfx, Eigen::Index t, const Eigen::VectorXd& avail,
                         double weight, const std::vector<Eigen::Index>* p, const std::vector<Eigen::Index>* ru,
                         const std::vector<Eigen::Index>* rd, const Eigen::VectorXd* p_val,
                         const Eigen::VectorXd* ru_val, const Eigen::VectorXd* rd_val) const {
    const double h = c_.hours();
    const auto first = lp.num_vars();
    for (Eigen::Index i = 0; i < units_; ++i) {
      // Solver output can carry -1e-13 style noise on zero reserves.
      const double lo = rd_val ? -std::max(0.0, (*rd_val)(i)) : -kInf, hi = ru_val ? std::max(0.0, (*ru_val)(i)) : kInf;
      lp.add_variable("ra" + sfx + std::to_string(i), lo, hi, 0.0);
    }
    for (Eigen::Index j = 0; j < plants_; ++j)
      lp.add_variable("wc" + sfx + std::to_string(j), 0.0, avail(j), weight * h * c_.c_rec);
    for (Eigen::Index b = 0; b < buses(); ++b)
      lp.add_variable("ls" + sfx + std::to_string(b), 0.0, loads_(b, t), weight * h * c_.c_ls);
    lp.add_variable("ex" + sfx, 0.0, kInf, weight * h * c_.c_ls);
    for (Eigen::Index q = 0; q < lines(); ++q) {
      lp.add_variable("ou" + sfx + std::to_string(q), 0.0, kInf, weight * h * c_.c_ls);
      lp.add_variable("od" + sfx + std::to_string(q), 0.0, kInf, weight * h * c_.c_ls);
    }
    const auto ra = first, wc = first + units_, ls = wc + plants_, ex = ls + buses(), ov = ex + 1;

    if (p) {
      for (Eigen::Index i = 0; i < units_; ++i) {
        const auto k = static_cast<std::size_t>(t * units_ + i);
        lp.add_row("ra_up" + sfx + std::to_string(i), {{ra + i, 1.0}, {(*ru)[k], -1.0}}, RowSense::Le, 0.0);
        lp.add_row("ra_dn" + sfx + std::to_string(i), {{ra + i, 1.0}, {(*rd)[k], 1.0}}, RowSense::Ge, 0.0);
      }
    }
    // Balance: units plus deployed reserve plus delivered renewable meets the
    // load that is not shed.
    std::vector<Term> bal;
    double rhs = c_.load_mw(t) - avail.sum();
    for (Eigen::Index i = 0; i < units_; ++i) {
      bal.push_back({ra + i, 1.0});
      if (p)
        bal.push_back({(*p)[static_cast<std::size_t>(t * units_ + i)], 1.0});
      else
        rhs -= (*p_val)(i);
    }
    for (Eigen::Index j = 0; j < plants_; ++j) bal.push_back({wc + j, -1.0});
    for (Eigen::Index b = 0; b < buses(); ++b) bal.push_back({ls + b, 1.0});
    bal.push_back({ex, -1.0});
    lp.add_row("bal" + sfx, bal, RowSense::Eq, rhs);

    for (Eigen::Index q = 0; q < lines(); ++q) {
      const auto l = monitored_[static_cast<std::size_t>(q)];
      std::vector<Term> terms;
      double base = -k_bus_.row(l).dot(loads_.col(t));
      for (Eigen::Index j = 0; j < plants_; ++j) {
        base += k_plant_(l, j) * avail(j);
        if (k_plant_(l, j) != 0.0) terms.push_back({wc + j, -k_plant_(l, j)});
      }
      for (Eigen::Index i = 0; i < units_; ++i) {
        if (k_unit_(l, i) == 0.0) continue;
        terms.push_back({ra + i, k_unit_(l, i)});
        if (p)
          terms.push_back({(*p)[static_cast<std::size_t>(t * units_ + i)], k_unit_(l, i)});
        else
          base += k_unit_(l, i) * (*p_val)(i);
      }
      for (Eigen::Index b = 0; b < buses(); ++b)
        if (k_bus_(l, b) != 0.0 && loads_(b, t) > 0.0) terms.push_back({ls + b, k_bus_(l, b)});
      auto hi = terms, lo = terms;
      hi.push_back({ov + 2 * q, -1.0});
      lo.push_back({ov + 2 * q + 1, 1.0});
      const double lim = limits_[static_cast<std::size_t>(q)];
      lp.add_row("lhi" + sfx + std::to_string(q), hi, RowSense::Le, lim - base);
      lp.add_row("llo" + sfx + std::to_string(q), lo, RowSense::Ge, -lim - base);
    }
    return first;
  }

  Result solve(Eigen::Index t, const Eigen::VectorXd& p, const Eigen::VectorXd& ru, const Eigen::VectorXd& rd,
               const Eigen::VectorXd& avail) const {
    LinearProgram lp("recourse");
    const auto first = add_block(lp, "", t, avail, 1.0, nullptr, nullptr, nullptr, &p, &ru, &rd);
    const auto sol = rted::solve(lp);
    if (sol.status != LpStatus::Optimal)
      throw Error(ErrorKind::Numerical, "recourse problem at interval " + std::to_string(t) + " returned " +
                                            to_string(sol.status));
    const double h = c_.hours();
    Result r;
    const auto wc = first + units_, ls = wc + plants_, ex = ls + buses(), ov = ex + 1;
    r.deployed = sol.x.segment(first, units_);
    r.curtailed = sol.x.segment(wc, plants_);
    r.shed = sol.x.segment(ls, buses());
    r.excess = sol.x(ex);
    r.overload = sol.x.segment(ov, 2 * lines()).sum();
    r.rec = h * c_.c_rec * r.curtailed.sum();
    r.ls = h * c_.c_ls * (r.shed.sum() + r.excess + r.overload);

    // Sensitivities: balance and line rows carry p on their right-hand side;
    // the deployed-reserve bounds carry r_up and -r_down.
    r.grad_p = Eigen::VectorXd::Constant(units_, -sol.row_duals(0));
    for (Eigen::Index q = 0; q < lines(); ++q) {
      const auto l = monitored_[static_cast<std::size_t>(q)];
      const double y = sol.row_duals(1 + 2 * q) + sol.row_duals(2 + 2 * q);
      for (Eigen::Index i = 0; i < units_; ++i) r.grad_p(i) -= k_unit_(l, i) * y;
    }
    r.grad_ru = Eigen::VectorXd::Zero(units_);
    r.grad_rd = Eigen::VectorXd::Zero(units_);
    for (Eigen::Index i = 0; i < units_; ++i) {
      const double d = sol.reduced_costs(first + i);
      if (d < 0.0) r.grad_ru(i) = d;
      if (d > 0.0) r.grad_rd(i) = -d;
    }
    return r;
  }

 private:
  const DispatchCase& c_;
  Eigen::Index units_, plants_;
  Eigen::MatrixXd k_unit_, k_plant_, k_bus_, loads_;
  std::vector<Eigen::Index> monitored_;
  std::vector<double> limits_;
  std::vector<double> capacity_;
};

Eigen::VectorXd availability(const RecourseModel& rm, const ScenarioSet& set, Eigen::Index s, Eigen::Index t) {
  Eigen::VectorXd a(rm.plants());
  for (Eigen::Index j = 0; j < rm.plants(); ++j) a(j) = rm.capacity(j) * set.at(s, t, j);
  return a;
}

void check_scenarios(const DispatchCase& c, const ScenarioSet& set, const std::vector<PlantId>& plants) {
  c.validate();
  if (set.horizon != c.horizon)
    throw Error(ErrorKind::Config, "scenario horizon " + std::to_string(set.horizon) + " differs from case horizon " +
                                       std::to_string(c.horizon));
  if (set.plants != static_cast<Eigen::Index>(plants.size()))
    throw Error(ErrorKind::Config, "scenario set and plant list disagree");
  if (set.scenarios < 1 || std::abs(set.probabilities.sum() - 1.0) > 1e-9)
    throw Error(ErrorKind::Data, "scenario probabilities must sum to one");
}

template <typename Fn>
void parallel_for(Eigen::Index n, int threads, Fn&& fn) {
  const auto workers = std::clamp<Eigen::Index>(threads, 1, std::max<Eigen::Index>(n, 1));
  if (workers == 1) {
    for (Eigen::Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (Eigen::Index w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (Eigen::Index i = w; i < n; i += workers) fn(i);
    });
  for (auto& th : pool) th.join();
}

// Keeps scheduled generation net of downward reserve below load, which every
// scenario's balance needs once all load is served and renewables spill.
void add_downward_room(LinearProgram& lp, const DispatchCase& c, const std::vector<Eigen::Index>& p,
                       const std::vector<Eigen::Index>& rd) {
  const auto n = c.cpp_count();
  for (Eigen::Index t = 0; t < c.horizon; ++t) {
    std::vector<Term> terms;
    for (Eigen::Index i = 0; i < n; ++i) {
      terms.push_back({p[static_cast<std::size_t>(t * n + i)], 1.0});
      terms.push_back({rd[static_cast<std::size_t>(t * n + i)], -1.0});
    }
    lp.add_row("down_room" + tag(t), terms, RowSense::Le, c.load_mw(t));
  }
}

DispatchSolution schedule_from(const DispatchCase& c, const LpSolution& sol, const std::vector<Eigen::Index>& p,
                               const std::vector<Eigen::Index>& ru, const std::vector<Eigen::Index>& rd) {
  DispatchSolution s;
  s.mode = DispatchMode::Scenario;
  s.status = sol.status;
  const auto n = c.cpp_count();
  s.p = s.r_up = s.r_down = Eigen::MatrixXd::Zero(n, c.horizon);
  if (sol.status != LpStatus::Optimal) return s;
  for (Eigen::Index t = 0; t < c.horizon; ++t)
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(t * n + i);
      s.p(i, t) = sol.x(p[k]);
      s.r_up(i, t) = sol.x(ru[k]);
      s.r_down(i, t) = sol.x(rd[k]);
    }
  return s;
}

}  // namespace

ScenarioEdProblem build_scenario_ed(const DispatchCase& c, const ScenarioSet& scenarios, const NetworkModel& net,
                                    const std::vector<PlantId>& plants) {
  check_scenarios(c, scenarios, plants);
  const RecourseModel rm(c, net, plants);
  ScenarioEdProblem prob;
  prob.lp = LinearProgram("scenario_ed");
  prob.horizon = c.horizon;
  prob.cpps = c.cpp_count();
  prob.plants = rm.plants();
  prob.scenarios = scenarios.scenarios;
  prob.buses = rm.buses();
  prob.lines = rm.lines();
  prob.hours = c.hours();
  prob.c_ls = c.c_ls;
  prob.c_rec = c.c_rec;
  prob.units = c.cpps;
  prob.probabilities = scenarios.probabilities;
  detail::add_schedule_block(prob.lp, c, prob.p, prob.r_up, prob.r_down);
  add_downward_room(prob.lp, c, prob.p, prob.r_down);
  for (Eigen::Index s = 0; s < scenarios.scenarios; ++s)
    for (Eigen::Index t = 0; t < c.horizon; ++t) {
      const auto sfx = "[s" + std::to_string(s) + ",t" + std::to_string(t) + "]";
      prob.block.push_back(rm.add_block(prob.lp, sfx, t, availability(rm, scenarios, s, t), scenarios.probabilities(s),
                                        &prob.p, &prob.r_up, &prob.r_down, nullptr, nullptr, nullptr));
    }
  return prob;
}

DispatchSolution ScenarioEdProblem::decode(const LpSolution& sol) const {
  DispatchCase shape;
  shape.horizon = horizon;
  shape.cpps = units;
  DispatchSolution s = schedule_from(shape, sol, p, r_up, r_down);
  if (sol.status != LpStatus::Optimal) {
    s.infeasible_rows = sol.infeasible_rows;
    return s;
  }
  s.iterations = sol.iterations;
  s.per_interval.assign(static_cast<std::size_t>(horizon), {});
  for (Eigen::Index t = 0; t < horizon; ++t)
    for (Eigen::Index i = 0; i < cpps; ++i) {
      const auto& u = units[static_cast<std::size_t>(i)];
      auto& pc = s.per_interval[static_cast<std::size_t>(t)];
      pc.fuel += hours * (u.fuel_slope * s.p(i, t) + u.fuel_fixed);
      pc.reserve += hours * (u.reserve_up_cost * s.r_up(i, t) + u.reserve_down_cost * s.r_down(i, t));
    }
  for (Eigen::Index sc = 0; sc < scenarios; ++sc) {
    RecourseDecision d;
    d.reserve_deployed = Eigen::MatrixXd::Zero(cpps, horizon);
    d.curtailment = Eigen::MatrixXd::Zero(plants, horizon);
    d.shed = Eigen::MatrixXd::Zero(buses, horizon);
    d.overload = d.excess = Eigen::VectorXd::Zero(horizon);
    for (Eigen::Index t = 0; t < horizon; ++t) {
      const auto b = block[static_cast<std::size_t>(sc * horizon + t)];
      d.reserve_deployed.col(t) = sol.x.segment(b, cpps);
      d.curtailment.col(t) = sol.x.segment(b + cpps, plants);
      d.shed.col(t) = sol.x.segment(b + cpps + plants, buses);
      d.excess(t) = sol.x(b + cpps + plants + buses);
      d.overload(t) = sol.x.segment(b + cpps + plants + buses + 1, 2 * lines).sum();
      const double ls = hours * c_ls * (d.shed.col(t).sum() + d.excess(t) + d.overload(t));
      const double rec = hours * c_rec * d.curtailment.col(t).sum();
      d.cost.load_shedding += ls;
      d.cost.curtailment += rec;
      auto& pc = s.per_interval[static_cast<std::size_t>(t)];
      pc.load_shedding += probabilities(sc) * ls;
      pc.curtailment += probabilities(sc) * rec;
    }
    s.recourse.push_back(std::move(d));
  }
  for (const auto& pc : s.per_interval) s.cost += pc;
  s.objective = sol.objective_value;
  return s;
}

DispatchSolution solve_scenario_ed(const DispatchCase& c, const ScenarioSet& scenarios, const NetworkModel& net,
                                   const std::vector<PlantId>& plants, const ScenarioEdOptions& options) {
  check_scenarios(c, scenarios, plants);
  const RecourseModel rm(c, net, plants);
  const auto n = c.cpp_count();
  const auto horizon = c.horizon;
  const auto nsc = scenarios.scenarios;

  LinearProgram master("scenario_ed_master");
  std::vector<Eigen::Index> p, ru, rd, theta;
  detail::add_schedule_block(master, c, p, ru, rd);
  add_downward_room(master, c, p, rd);
  for (Eigen::Index t = 0; t < horizon; ++t) theta.push_back(master.add_variable("theta" + tag(t), 0.0, kInf, 1.0));

  struct Eval {
    double ls = 0.0, rec = 0.0;
    Eigen::VectorXd gp, gu, gd;
  };
  // Expected recourse per interval at a schedule, with aggregated gradients.
  // Summation runs in scenario order, so threads do not change the result.
  auto evaluate = [&](const DispatchSolution& x, std::vector<RecourseDecision>* keep) {
    std::vector<RecourseModel::Result> res(static_cast<std::size_t>(nsc * horizon));
    parallel_for(nsc * horizon, options.threads, [&](Eigen::Index k) {
      const auto s = k / horizon, t = k % horizon;
      res[static_cast<std::size_t>(k)] =
          rm.solve(t, x.p.col(t), x.r_up.col(t), x.r_down.col(t), availability(rm, scenarios, s, t));
    });
    std::vector<Eval> out(static_cast<std::size_t>(horizon));
    for (auto& e : out) e.gp = e.gu = e.gd = Eigen::VectorXd::Zero(n);
    for (Eigen::Index s = 0; s < nsc; ++s) {
      const double w = scenarios.probabilities(s);
      RecourseDecision d;
      if (keep) {
        d.reserve_deployed = Eigen::MatrixXd::Zero(n, horizon);
        d.curtailment = Eigen::MatrixXd::Zero(rm.plants(), horizon);
        d.shed = Eigen::MatrixXd::Zero(rm.buses(), horizon);
        d.overload = d.excess = Eigen::VectorXd::Zero(horizon);
      }
      for (Eigen::Index t = 0; t < horizon; ++t) {
        const auto& r = res[static_cast<std::size_t>(s * horizon + t)];
        auto& e = out[static_cast<std::size_t>(t)];
        e.ls += w * r.ls;
        e.rec += w * r.rec;
        e.gp += w * r.grad_p;
        e.gu += w * r.grad_ru;
        e.gd += w * r.grad_rd;
        if (keep) {
          d.reserve_deployed.col(t) = r.deployed;
          d.curtailment.col(t) = r.curtailed;
          d.shed.col(t) = r.shed;
          d.excess(t) = r.excess;
          d.overload(t) = r.overload;
          d.cost.load_shedding += r.ls;
          d.cost.curtailment += r.rec;
        }
      }
      if (keep) keep->push_back(std::move(d));
    }
    return out;
  };

  DispatchSolution best;
  double best_ub = kInf, lb = -kInf;
  int iter = 0, lp_iters = 0;
  for (; iter < options.max_iterations; ++iter) {
    const auto sol = solve(master);
    lp_iters += sol.iterations;
    if (sol.status != LpStatus::Optimal) {
      auto s = schedule_from(c, sol, p, ru, rd);
      s.infeasible_rows = sol.infeasible_rows;
      s.iterations = lp_iters;
      return s;
    }
    lb = sol.objective_value;
    auto x = schedule_from(c, sol, p, ru, rd);
    const auto ev = evaluate(x, nullptr);
    double first_stage = sol.objective_value;
    for (auto th : theta) first_stage -= sol.x(th);
    double ub = first_stage;
    for (const auto& e : ev) ub += e.ls + e.rec;
    if (ub < best_ub) {
      best_ub = ub;
      best = std::move(x);
    }
    if (best_ub - lb <= options.rel_gap * (1.0 + std::abs(best_ub))) break;
    for (Eigen::Index t = 0; t < horizon; ++t) {
      const auto& e = ev[static_cast<std::size_t>(t)];
      const double q = e.ls + e.rec;
      const auto th = theta[static_cast<std::size_t>(t)];
      if (q <= sol.x(th) + 1e-9 * (1.0 + q)) continue;
      std::vector<Term> terms{{th, 1.0}};
      double rhs = q;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(t * n + i);
        for (auto [var, g] : {std::pair{p[k], e.gp(i)}, std::pair{ru[k], e.gu(i)}, std::pair{rd[k], e.gd(i)}}) {
          if (g == 0.0) continue;
          terms.push_back({var, -g});
          rhs -= g * sol.x(var);
        }
      }
      master.add_row("cut" + tag(t) + std::to_string(iter), terms, RowSense::Ge, rhs);
    }
  }

  std::vector<RecourseDecision> keep;
  const auto ev = evaluate(best, options.keep_recourse ? &keep : nullptr);
  best.mode = DispatchMode::Scenario;
  best.status = LpStatus::Optimal;
  best.iterations = iter + 1;
  best.per_interval = schedule_costs(c, best);
  for (Eigen::Index t = 0; t < horizon; ++t) {
    best.per_interval[static_cast<std::size_t>(t)].load_shedding = ev[static_cast<std::size_t>(t)].ls;
    best.per_interval[static_cast<std::size_t>(t)].curtailment = ev[static_cast<std::size_t>(t)].rec;
  }
  best.cost = {};
  for (const auto& pc : best.per_interval) best.cost += pc;
  best.objective = best.cost.total();
  best.recourse = std::move(keep);
  return best;
}

RecourseDecision solve_recourse(const DispatchSolution& schedule, const Eigen::MatrixXd& realized,
                                const DispatchCase& c, const NetworkModel& net, const std::vector<PlantId>& plants) {
  const RecourseModel rm(c, net, plants);
  if (realized.rows() != schedule.horizon() || realized.cols() != rm.plants())
    throw Error(ErrorKind::Domain, "realized trajectory must be horizon x plant");
  RecourseDecision d;
  d.reserve_deployed = Eigen::MatrixXd::Zero(rm.units(), schedule.horizon());
  d.curtailment = Eigen::MatrixXd::Zero(rm.plants(), schedule.horizon());
  d.shed = Eigen::MatrixXd::Zero(rm.buses(), schedule.horizon());
  d.overload = d.excess = Eigen::VectorXd::Zero(schedule.horizon());
  for (Eigen::Index t = 0; t < schedule.horizon(); ++t) {
    Eigen::VectorXd avail(rm.plants());
    for (Eigen::Index j = 0; j < rm.plants(); ++j) avail(j) = rm.capacity(j) * realized(t, j);
    const auto r = rm.solve(t, schedule.p.col(t), schedule.r_up.col(t), schedule.r_down.col(t), avail);
    d.reserve_deployed.col(t) = r.deployed;
    d.curtailment.col(t) = r.curtailed;
    d.shed.col(t) = r.shed;
    d.excess(t) = r.excess;
    d.overload(t) = r.overload;
    d.cost.load_shedding += r.ls;
    d.cost.curtailment += r.rec;
  }
  return d;
}

}  // namespace rted
