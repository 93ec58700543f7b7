#include "rted/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "rted/error.hpp"
#include "dispatch_internal.hpp"

using nlohmann::json;

namespace rted {

void CppParams::validate() const {
  auto bad = [&](const std::string& what) { throw Error(ErrorKind::Config, "unit " + name + ": " + what); };
  if (!(p_min <= p_max)) bad("p_min exceeds p_max");
  if (p_min < 0.0) bad("p_min is negative");
  if (fuel_slope < 0.0 || fuel_fixed < 0.0 || reserve_up_cost < 0.0 || reserve_down_cost < 0.0) bad("negative cost");
  if (!(ramp_up > 0.0) || !(ramp_down > 0.0)) bad("ramp limits must be positive");
  if (reserve_up_max < 0.0 || reserve_down_max < 0.0) bad("negative reserve limit");
}

void DispatchCase::validate() const {
  if (horizon < 1) throw Error(ErrorKind::Config, "horizon must be at least 1");
  if (step_minutes < 1) throw Error(ErrorKind::Config, "step_minutes must be positive");
  if (cpps.empty()) throw Error(ErrorKind::Config, "case has no conventional units");
  if (load_mw.size() != horizon)
    throw Error(ErrorKind::Config, "load has " + std::to_string(load_mw.size()) + " intervals, horizon is " +
                                       std::to_string(horizon));
  if (load_mw.minCoeff() < 0.0) throw Error(ErrorKind::Config, "load must be non-negative");
  if (!(c_rec >= 0.0) || !(c_ls > c_rec))
    throw Error(ErrorKind::Config, "penalties need c_ls > c_rec >= 0");
  if (!(beta_line > 0.5 && beta_line < 1.0)) throw Error(ErrorKind::Config, "beta_line must lie in (0.5, 1)");
  if (breakpoint_stride < 1) throw Error(ErrorKind::Config, "breakpoint_stride must be at least 1");
  for (const auto& u : cpps) u.validate();
}

namespace {

json limit_json(double v) { return std::isinf(v) ? json(nullptr) : json(v); }
double limit_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return kInf;
  return j.at(key).get<double>();
}

}  // namespace

void to_json(json& j, const DispatchCase& c) {
  json units = json::array();
  for (const auto& u : c.cpps)
    units.push_back({{"name", u.name},
                     {"bus", u.bus},
                     {"fuel_slope", u.fuel_slope},
                     {"fuel_fixed", u.fuel_fixed},
                     {"reserve_up_cost", u.reserve_up_cost},
                     {"reserve_down_cost", u.reserve_down_cost},
                     {"p_min", u.p_min},
                     {"p_max", u.p_max},
                     {"ramp_up", limit_json(u.ramp_up)},
                     {"ramp_down", limit_json(u.ramp_down)},
                     {"reserve_up_max", limit_json(u.reserve_up_max)},
                     {"reserve_down_max", limit_json(u.reserve_down_max)},
                     {"p0", u.p0}});
  j = {{"name", c.name},
       {"horizon", c.horizon},
       {"step_minutes", c.step_minutes},
       {"load_mw", std::vector<double>(c.load_mw.data(), c.load_mw.data() + c.load_mw.size())},
       {"penalties", {{"load_shedding", c.c_ls}, {"curtailment", c.c_rec}}},
       {"beta_line", c.beta_line},
       {"breakpoint_stride", c.breakpoint_stride},
       {"cpps", units}};
}

DispatchCase dispatch_case_from_json(const json& j) {
  DispatchCase c;
  try {
    c.name = j.value("name", std::string("case"));
    c.horizon = j.value("horizon", Eigen::Index{12});
    c.step_minutes = j.value("step_minutes", 5);
    const auto load = j.at("load_mw").get<std::vector<double>>();
    c.load_mw = Eigen::Map<const Eigen::VectorXd>(load.data(), static_cast<Eigen::Index>(load.size()));
    if (j.contains("penalties")) {
      c.c_ls = j.at("penalties").value("load_shedding", c.c_ls);
      c.c_rec = j.at("penalties").value("curtailment", c.c_rec);
    }
    c.beta_line = j.value("beta_line", c.beta_line);
    c.breakpoint_stride = j.value("breakpoint_stride", c.breakpoint_stride);
    for (const auto& u : j.at("cpps")) {
      CppParams p;
      p.name = u.at("name").get<std::string>();
      p.bus = u.at("bus").get<int>();
      p.fuel_slope = u.value("fuel_slope", 0.0);
      p.fuel_fixed = u.value("fuel_fixed", 0.0);
      p.reserve_up_cost = u.value("reserve_up_cost", 10.0);
      p.reserve_down_cost = u.value("reserve_down_cost", 10.0);
      p.p_min = u.value("p_min", 0.0);
      p.p_max = u.at("p_max").get<double>();
      p.ramp_up = limit_from(u, "ramp_up");
      p.ramp_down = limit_from(u, "ramp_down");
      p.reserve_up_max = limit_from(u, "reserve_up_max");
      p.reserve_down_max = limit_from(u, "reserve_down_max");
      p.p0 = u.value("p0", p.p_min);
      c.cpps.push_back(p);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("case file: ") + e.what());
  }
  c.validate();
  return c;
}

DispatchCase load_dispatch_case(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open case file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, path.string() + ": " + e.what());
  }
  return dispatch_case_from_json(j);
}

Eigen::MatrixXd bus_load(const DispatchCase& c, const NetworkModel& net) {
  const Eigen::VectorXd shares = net.load_shares();
  const double total = shares.sum();
  if (!(total > 0.0)) throw Error(ErrorKind::Config, "network '" + net.name() + "' has no load shares");
  return (shares / total) * c.load_mw.transpose();
}

// ---------------------------------------------------------------------------

namespace {

// Histogram form of a conditional in normalized units.
struct BinnedLaw {
  double lower, width;
  Eigen::VectorXd mass;
  bool point;
};

BinnedLaw binned(const UnivariateConditional& cond) {
  const auto& b = cond.base();
  return {b.lower(), b.bin_width(), cond.bin_masses(), b.is_point_mass()};
}

double below_normalized(const BinnedLaw& law, double x) {
  if (law.point) return std::max(0.0, x - law.lower);
  double g = 0.0;
  for (Eigen::Index k = 0; k < law.mass.size(); ++k) {
    const double a = law.lower + static_cast<double>(k) * law.width, b = a + law.width;
    if (x >= b)
      g += law.mass(k) * (x - 0.5 * (a + b));
    else if (x > a)
      g += law.mass(k) * (x - a) * (x - a) / (2.0 * law.width);
    else
      break;
  }
  return g;
}

double above_normalized(const BinnedLaw& law, double x) {
  if (law.point) return std::max(0.0, law.lower - x);
  double h = 0.0;
  for (Eigen::Index k = law.mass.size() - 1; k >= 0; --k) {
    const double a = law.lower + static_cast<double>(k) * law.width, b = a + law.width;
    if (x <= a)
      h += law.mass(k) * (0.5 * (a + b) - x);
    else if (x < b)
      h += law.mass(k) * (b - x) * (b - x) / (2.0 * law.width);
    else
      break;
  }
  return h;
}

double binned_mean(const BinnedLaw& law) {
  if (law.point) return law.lower;
  double m = 0.0;
  for (Eigen::Index k = 0; k < law.mass.size(); ++k)
    m += law.mass(k) * (law.lower + (static_cast<double>(k) + 0.5) * law.width);
  return m;
}

}  // namespace

double expected_shortfall(const UnivariateConditional& cond, ShortfallSide side, double r_mw) {
  const double s = cond.scale_mw();
  const auto law = binned(cond);
  return s * (side == ShortfallSide::Below ? below_normalized(law, r_mw / s) : above_normalized(law, r_mw / s));
}

ShortfallPwl::ShortfallPwl(ShortfallSide side, std::vector<double> x, std::vector<double> y, double lower,
                           double upper, double mean)
    : side_(side), x_(std::move(x)), y_(std::move(y)), lower_(lower), upper_(upper), mean_(mean) {}

double ShortfallPwl::operator()(double r) const {
  if (r <= x_.front()) return side_ == ShortfallSide::Below ? 0.0 : y_.front() + (x_.front() - r);
  if (r >= x_.back()) return side_ == ShortfallSide::Below ? y_.back() + (r - x_.back()) : 0.0;
  const auto it = std::upper_bound(x_.begin(), x_.end(), r);
  const auto k = static_cast<std::size_t>(it - x_.begin()) - 1;
  const double w = (r - x_[k]) / (x_[k + 1] - x_[k]);
  return (1.0 - w) * y_[k] + w * y_[k + 1];
}

std::vector<ShortfallPwl::Cut> ShortfallPwl::cuts() const {
  constexpr double kSlopeTol = 1e-9;
  const bool below = side_ == ShortfallSide::Below;
  const double tail = below ? 1.0 : -1.0;
  std::vector<Cut> out;
  // Exact tail beyond the support: slope +1 right of it (Below), -1 left of
  // it (Above). The zero side is the epigraph variable's lower bound.
  if (!below) out.push_back({tail, y_.front() + x_.front()});
  // Breakpoints where the slope actually changes. The chord across merged
  // segments lies above both pieces, so merging keeps the bound conservative.
  std::vector<std::size_t> keep{0};
  for (std::size_t k = 1; k + 1 < x_.size(); ++k) {
    const auto a = keep.back();
    const double s_in = (y_[k] - y_[a]) / (x_[k] - x_[a]);
    const double s_out = (y_[k + 1] - y_[k]) / (x_[k + 1] - x_[k]);
    if (s_out - s_in > kSlopeTol) keep.push_back(k);
  }
  if (x_.size() > 1) keep.push_back(x_.size() - 1);
  for (std::size_t q = 0; q + 1 < keep.size(); ++q) {
    const auto a = keep[q], b = keep[q + 1];
    const double s = (y_[b] - y_[a]) / (x_[b] - x_[a]);
    if (std::abs(s) <= kSlopeTol && std::max(y_[a], y_[b]) <= kSlopeTol) continue;
    if (std::abs(s - tail) <= kSlopeTol) continue;
    out.push_back({s, y_[a] - s * x_[a]});
  }
  if (below) out.push_back({tail, y_.back() - x_.back()});
  return out;
}

ShortfallPwl expected_shortfall_pwl(const UnivariateConditional& cond, ShortfallSide side,
                                    const std::vector<double>& breakpoints_mw) {
  const double s = cond.scale_mw();
  const auto law = binned(cond);
  const double lo = s * law.lower;
  const double hi = law.point ? lo : s * (law.lower + static_cast<double>(law.mass.size()) * law.width);
  const double tol = 1e-9 * std::max(1.0, s);
  for (std::size_t k = 0; k < breakpoints_mw.size(); ++k) {
    if (breakpoints_mw[k] < lo - tol || breakpoints_mw[k] > hi + tol)
      throw Error(ErrorKind::Domain, "breakpoint " + std::to_string(breakpoints_mw[k]) + " MW outside support [" +
                                         std::to_string(lo) + ", " + std::to_string(hi) + "]");
    if (k > 0 && !(breakpoints_mw[k] > breakpoints_mw[k - 1]))
      throw Error(ErrorKind::Domain, "breakpoints must be strictly increasing");
  }
  // The support ends anchor the exact linear tails.
  std::vector<double> x;
  x.push_back(lo);
  for (double b : breakpoints_mw)
    if (b > x.back() + tol) x.push_back(std::min(b, hi));
  if (hi > x.back() + tol) x.push_back(hi);
  else x.back() = hi;
  std::vector<double> y;
  for (double v : x)
    y.push_back(s * (side == ShortfallSide::Below ? below_normalized(law, v / s) : above_normalized(law, v / s)));
  return ShortfallPwl(side, std::move(x), std::move(y), lo, hi, s * binned_mean(law));
}

std::vector<double> default_breakpoints(const UnivariateConditional& cond, int stride) {
  const auto& b = cond.base();
  const double s = cond.scale_mw();
  if (b.is_point_mass()) return {s * b.lower()};
  std::vector<double> out;
  for (Eigen::Index k = 0; k < b.bins(); k += std::max(1, stride)) out.push_back(s * b.edge(k));
  out.push_back(s * b.upper());
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(DispatchMode m) {
  switch (m) {
    case DispatchMode::Distribution: return "distribution";
    case DispatchMode::DistributionForecastLines: return "distribution-forecast-lines";
    case DispatchMode::Scenario: return "scenario";
  }
  return "unknown";
}

CostBreakdown& CostBreakdown::operator+=(const CostBreakdown& o) {
  fuel += o.fuel;
  reserve += o.reserve;
  load_shedding += o.load_shedding;
  curtailment += o.curtailment;
  return *this;
}

std::vector<CostBreakdown> schedule_costs(const DispatchCase& c, const DispatchSolution& s) {
  std::vector<CostBreakdown> out(static_cast<std::size_t>(s.horizon()));
  const double h = c.hours();
  for (Eigen::Index t = 0; t < s.horizon(); ++t)
    for (Eigen::Index i = 0; i < c.cpp_count(); ++i) {
      const auto& u = c.cpps[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(t)].fuel += h * (u.fuel_slope * s.p(i, t) + u.fuel_fixed);
      out[static_cast<std::size_t>(t)].reserve +=
          h * (u.reserve_up_cost * s.r_up(i, t) + u.reserve_down_cost * s.r_down(i, t));
    }
  return out;
}

namespace {


json matrix_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
  return m;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json cost_json(const CostBreakdown& c) {
  return {{"fuel", c.fuel},
          {"reserve", c.reserve},
          {"load_shedding", c.load_shedding},
          {"curtailment", c.curtailment},
          {"total", c.total()}};
}

CostBreakdown cost_from(const json& j) {
  return {j.at("fuel").get<double>(), j.at("reserve").get<double>(), j.at("load_shedding").get<double>(),
          j.at("curtailment").get<double>()};
}

}  // namespace

void to_json(json& j, const DispatchSolution& s) {
  j = {{"mode", to_string(s.mode)},
       {"status", to_string(s.status)},
       {"p", matrix_json(s.p)},
       {"r_up", matrix_json(s.r_up)},
       {"r_down", matrix_json(s.r_down)},
       {"cost", cost_json(s.cost)},
       {"objective", s.objective},
       {"iterations", s.iterations}};
  json per = json::array();
  for (const auto& c : s.per_interval) per.push_back(cost_json(c));
  j["per_interval"] = per;
  if (s.scheduled_renewable.size()) {
    j["scheduled_renewable"] = vector_json(s.scheduled_renewable);
    j["lower_cover"] = vector_json(s.lower_cover);
    j["upper_cover"] = vector_json(s.upper_cover);
    j["confidence"] = vector_json(s.confidence);
  }
  if (!s.infeasible_rows.empty()) j["infeasible_rows"] = s.infeasible_rows;
}

DispatchSolution dispatch_solution_from_json(const json& j) {
  DispatchSolution s;
  try {
    const auto mode = j.at("mode").get<std::string>();
    s.mode = mode == "scenario" ? DispatchMode::Scenario
             : mode == "distribution-forecast-lines" ? DispatchMode::DistributionForecastLines
                                                     : DispatchMode::Distribution;
    const auto status = j.at("status").get<std::string>();
    s.status = status == "optimal" ? LpStatus::Optimal : status == "unbounded" ? LpStatus::Unbounded : LpStatus::Infeasible;
    s.p = matrix_from(j.at("p"));
    s.r_up = matrix_from(j.at("r_up"));
    s.r_down = matrix_from(j.at("r_down"));
    s.cost = cost_from(j.at("cost"));
    s.objective = j.value("objective", 0.0);
    s.iterations = j.value("iterations", 0);
    for (const auto& c : j.at("per_interval")) s.per_interval.push_back(cost_from(c));
    if (j.contains("scheduled_renewable")) {
      s.scheduled_renewable = vector_from(j.at("scheduled_renewable"));
      s.lower_cover = vector_from(j.at("lower_cover"));
      s.upper_cover = vector_from(j.at("upper_cover"));
      s.confidence = vector_from(j.at("confidence"));
    }
    if (j.contains("infeasible_rows")) s.infeasible_rows = j.at("infeasible_rows").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("dispatch solution: ") + e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------

namespace detail {

// Unit schedule variables and the constraints every mode shares: output plus
// reserve within the unit range, ramp limits anchored at p0, reserve limits.
void add_schedule_block(LinearProgram& lp, const DispatchCase& c, std::vector<Eigen::Index>& p,
                        std::vector<Eigen::Index>& ru, std::vector<Eigen::Index>& rd) {
  const double h = c.hours();
  const auto n = c.cpp_count();
  p.assign(static_cast<std::size_t>(c.horizon * n), -1);
  ru = rd = p;
  for (Eigen::Index t = 0; t < c.horizon; ++t)
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& u = c.cpps[static_cast<std::size_t>(i)];
      const auto k = static_cast<std::size_t>(t * n + i);
      p[k] = lp.add_variable("p" + tag(u.name, t), u.p_min, u.p_max, h * u.fuel_slope);
      ru[k] = lp.add_variable("ru" + tag(u.name, t), 0.0, u.reserve_up_max, h * u.reserve_up_cost);
      rd[k] = lp.add_variable("rd" + tag(u.name, t), 0.0, u.reserve_down_max, h * u.reserve_down_cost);
      lp.add_offset(h * u.fuel_fixed);
      lp.add_row("cap_up" + tag(u.name, t), {{p[k], 1.0}, {ru[k], 1.0}}, RowSense::Le, u.p_max);
      lp.add_row("cap_dn" + tag(u.name, t), {{p[k], 1.0}, {rd[k], -1.0}}, RowSense::Ge, u.p_min);
    }
  for (Eigen::Index t = 0; t < c.horizon; ++t)
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& u = c.cpps[static_cast<std::size_t>(i)];
      const auto k = static_cast<std::size_t>(t * n + i);
      std::vector<Term> up{{p[k], 1.0}}, dn{{p[k], -1.0}};
      double up_rhs = u.ramp_up, dn_rhs = u.ramp_down;
      if (t == 0) {
        up_rhs += u.p0;
        dn_rhs -= u.p0;
      } else {
        const auto prev = p[static_cast<std::size_t>((t - 1) * n + i)];
        up.push_back({prev, -1.0});
        dn.push_back({prev, 1.0});
      }
      if (std::isfinite(u.ramp_up)) lp.add_row("ramp_up" + tag(u.name, t), up, RowSense::Le, up_rhs);
      if (std::isfinite(u.ramp_down)) lp.add_row("ramp_dn" + tag(u.name, t), dn, RowSense::Le, dn_rhs);
    }
}

Eigen::MatrixXd unit_shift_factors(const DispatchCase& c, const NetworkModel& net) {
  Eigen::MatrixXd k(net.line_count(), c.cpp_count());
  for (Eigen::Index i = 0; i < c.cpp_count(); ++i) k.col(i) = net.ptdf().col(net.bus_index(c.cpps[static_cast<std::size_t>(i)].bus));
  return k;
}

}  // namespace detail

using detail::add_schedule_block;
using detail::tag;
using detail::unit_shift_factors;

DistributionEdProblem build_distribution_ed(const DispatchCase& c, const CopulaModel& model, const NetworkModel& net,
                                            const Eigen::MatrixXd& forecasts, bool forecast_lines) {
  c.validate();
  if (forecasts.rows() != c.horizon || forecasts.cols() != model.plant_count())
    throw Error(ErrorKind::Config, "forecasts must be horizon x plant (" + std::to_string(c.horizon) + " x " +
                                       std::to_string(model.plant_count()) + ")");
  check_plant_buses(net, model.plants());

  DistributionEdProblem prob;
  prob.lp = LinearProgram(forecast_lines ? "distribution_ed_forecast_lines" : "distribution_ed");
  prob.mode = forecast_lines ? DispatchMode::DistributionForecastLines : DispatchMode::Distribution;
  prob.horizon = c.horizon;
  prob.cpps = c.cpp_count();
  prob.hours = c.hours();
  prob.c_ls = c.c_ls;
  prob.c_rec = c.c_rec;
  prob.units = c.cpps;
  auto& lp = prob.lp;
  const double h = c.hours();
  const auto n = c.cpp_count();
  double capacity = 0.0;
  for (const auto& pl : model.plants()) capacity += pl.capacity_mw;

  add_schedule_block(lp, c, prob.p, prob.r_up, prob.r_down);

  const Eigen::MatrixXd k_unit = unit_shift_factors(c, net);
  const Eigen::MatrixXd k_plant = plant_shift_factors(net, model.plants());
  const Eigen::MatrixXd loads = bus_load(c, net);
  const auto monitored = net.monitored_lines();

  for (Eigen::Index t = 0; t < c.horizon; ++t) {
    const Eigen::VectorXd f = forecasts.row(t).transpose();
    const auto sched = lp.add_variable("rsum" + tag(t), -kInf, kInf);
    const auto lo = lp.add_variable("rlo" + tag(t), 0.0, capacity);
    const auto hi = lp.add_variable("rhi" + tag(t), 0.0, capacity);
    const auto els = lp.add_variable("els" + tag(t), 0.0, kInf, h * c.c_ls);
    const auto erec = lp.add_variable("erec" + tag(t), 0.0, kInf, h * c.c_rec);
    prob.scheduled.push_back(sched);
    prob.lower.push_back(lo);
    prob.upper.push_back(hi);
    prob.e_ls.push_back(els);
    prob.e_rec.push_back(erec);

    std::vector<Term> bal{{sched, 1.0}}, lower{{sched, 1.0}, {lo, -1.0}}, upper{{sched, 1.0}, {hi, -1.0}};
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(t * n + i);
      bal.push_back({prob.p[k], 1.0});
      lower.push_back({prob.r_up[k], -1.0});
      upper.push_back({prob.r_down[k], 1.0});
    }
    lp.add_row("balance" + tag(t), bal, RowSense::Eq, c.load_mw(t));
    lp.add_row("cover_lo" + tag(t), lower, RowSense::Eq, 0.0);
    lp.add_row("cover_hi" + tag(t), upper, RowSense::Eq, 0.0);

    const auto cond = conditional_sum(model, f);
    prob.sum_conditionals.push_back(cond);
    const auto bp = default_breakpoints(cond, c.breakpoint_stride);
    const auto g = expected_shortfall_pwl(cond, ShortfallSide::Below, bp);
    const auto hfun = expected_shortfall_pwl(cond, ShortfallSide::Above, bp);
    int q = 0;
    for (const auto& cut : g.cuts())
      lp.add_row("ls_cut" + tag(t) + std::to_string(q++), {{els, 1.0}, {lo, -cut.slope}}, RowSense::Ge, cut.intercept);
    q = 0;
    for (const auto& cut : hfun.cuts())
      lp.add_row("rec_cut" + tag(t) + std::to_string(q++), {{erec, 1.0}, {hi, -cut.slope}}, RowSense::Ge,
                 cut.intercept);

    for (auto l : monitored) {
      const auto& line = net.lines()[static_cast<std::size_t>(l)];
      double ren_lo, ren_hi;
      if (forecast_lines) {
        ren_lo = 0.0;
        for (Eigen::Index j = 0; j < model.plant_count(); ++j)
          ren_lo += k_plant(l, j) * model.plants()[static_cast<std::size_t>(j)].capacity_mw * f(j);
        ren_hi = ren_lo;
      } else {
        const auto lc = conditional_line(model, l, f);
        ren_lo = lc.scale_mw() * lc.quantile(1.0 - c.beta_line);
        ren_hi = lc.scale_mw() * lc.quantile(c.beta_line);
      }
      const double load_flow = net.ptdf().row(l).dot(loads.col(t));
      std::vector<Term> terms;
      for (Eigen::Index i = 0; i < n; ++i)
        if (k_unit(l, i) != 0.0) terms.push_back({prob.p[static_cast<std::size_t>(t * n + i)], k_unit(l, i)});
      const std::string name = "[" + line.name + ",t" + std::to_string(t) + "]";
      lp.add_row("line_lo" + name, terms, RowSense::Ge, -line.limit_mw - ren_lo + load_flow);
      lp.add_row("line_hi" + name, terms, RowSense::Le, line.limit_mw - ren_hi + load_flow);
    }
  }
  return prob;
}

DispatchSolution DistributionEdProblem::decode(const LpSolution& sol) const {
  DispatchSolution s;
  s.mode = mode;
  s.status = sol.status;
  s.iterations = sol.iterations;
  s.p = s.r_up = s.r_down = Eigen::MatrixXd::Zero(cpps, horizon);
  s.scheduled_renewable = s.lower_cover = s.upper_cover = s.confidence = Eigen::VectorXd::Zero(horizon);
  if (sol.status != LpStatus::Optimal) {
    s.infeasible_rows = sol.infeasible_rows;
    return s;
  }
  for (Eigen::Index t = 0; t < horizon; ++t) {
    for (Eigen::Index i = 0; i < cpps; ++i) {
      const auto k = static_cast<std::size_t>(t * cpps + i);
      s.p(i, t) = sol.x(p[k]);
      s.r_up(i, t) = sol.x(r_up[k]);
      s.r_down(i, t) = sol.x(r_down[k]);
    }
    const auto tt = static_cast<std::size_t>(t);
    s.scheduled_renewable(t) = sol.x(scheduled[tt]);
    s.lower_cover(t) = sol.x(lower[tt]);
    s.upper_cover(t) = sol.x(upper[tt]);
    const auto& cond = sum_conditionals[tt];
    s.confidence(t) = std::clamp(cond.cdf(s.upper_cover(t) / cond.scale_mw()), 0.0, 1.0);
  }
  s.per_interval.assign(static_cast<std::size_t>(horizon), {});
  for (Eigen::Index t = 0; t < horizon; ++t) {
    auto& pc = s.per_interval[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < cpps; ++i) {
      const auto& u = units[static_cast<std::size_t>(i)];
      pc.fuel += hours * (u.fuel_slope * s.p(i, t) + u.fuel_fixed);
      pc.reserve += hours * (u.reserve_up_cost * s.r_up(i, t) + u.reserve_down_cost * s.r_down(i, t));
    }
    pc.load_shedding = hours * c_ls * sol.x(e_ls[static_cast<std::size_t>(t)]);
    pc.curtailment = hours * c_rec * sol.x(e_rec[static_cast<std::size_t>(t)]);
    s.cost += pc;
  }
  s.objective = sol.objective_value;
  return s;
}

DispatchSolution solve_distribution_ed(const DispatchCase& c, const CopulaModel& model, const NetworkModel& net,
                                       const Eigen::MatrixXd& forecasts, bool forecast_lines) {
  const auto prob = build_distribution_ed(c, model, net, forecasts, forecast_lines);
  return prob.decode(solve(prob.lp));
}

}  // namespace rted
