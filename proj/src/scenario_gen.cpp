#include "rted/scenario_gen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "rted/error.hpp"
#include "rted/gaussian.hpp"
#include "rted/normal.hpp"
#include "rted/rng.hpp"
#include "rted/stats.hpp"

using nlohmann::json;

namespace rted {

void GibbsConfig::validate(Eigen::Index plants) const {
  if (n_scenarios < 1) throw Error(ErrorKind::Config, "n_scenarios must be at least 1");
  if (n_burn_in < 0) throw Error(ErrorKind::Config, "n_burn_in must be non-negative");
  if (sweeps_per_scenario < 1) throw Error(ErrorKind::Config, "sweeps_per_scenario must be at least 1");
  if (init == Init::Custom && custom_init.size() != plants)
    throw Error(ErrorKind::Config, "custom initial state needs one value per plant");
}

TemporalModel TemporalModel::uniform(double epsilon, Eigen::Index plants, Eigen::Index horizon) {
  return {Eigen::VectorXd::Constant(plants, epsilon), horizon};
}

double TemporalModel::lag_one(Eigen::Index plant) const { return std::exp(-1.0 / epsilon(plant)); }

Eigen::MatrixXd TemporalModel::covariance(Eigen::Index plant) const {
  Eigen::MatrixXd s(horizon, horizon);
  for (Eigen::Index m = 0; m < horizon; ++m)
    for (Eigen::Index n = 0; n < horizon; ++n)
      s(m, n) = std::exp(-static_cast<double>(std::abs(m - n)) / epsilon(plant));
  return s;
}

void TemporalModel::validate(Eigen::Index plants) const {
  if (horizon < 1) throw Error(ErrorKind::Config, "temporal horizon must be at least 1");
  if (epsilon.size() != plants)
    throw Error(ErrorKind::Config, "range parameter needed for each of " + std::to_string(plants) + " plants");
  for (Eigen::Index j = 0; j < plants; ++j)
    if (!(epsilon(j) > 0.0) || std::isnan(epsilon(j)))
      throw Error(ErrorKind::Domain, "range parameter of plant " + std::to_string(j) + " must be positive");
}

ScenarioSet::ScenarioSet(Eigen::Index s, Eigen::Index t, Eigen::Index p)
    : scenarios(s), horizon(t), plants(p), values(static_cast<std::size_t>(s * t * p), 0.0),
      probabilities(Eigen::VectorXd::Constant(s, 1.0 / static_cast<double>(s))),
      forecasts(Eigen::MatrixXd::Zero(t, p)) {}

Eigen::MatrixXd ScenarioSet::trajectory(Eigen::Index s) const {
  Eigen::MatrixXd out(horizon, plants);
  for (Eigen::Index t = 0; t < horizon; ++t)
    for (Eigen::Index j = 0; j < plants; ++j) out(t, j) = at(s, t, j);
  return out;
}

Eigen::VectorXd ScenarioSet::cross_section(Eigen::Index t, Eigen::Index j) const {
  Eigen::VectorXd out(scenarios);
  for (Eigen::Index s = 0; s < scenarios; ++s) out(s) = at(s, t, j);
  return out;
}

void ScenarioSet::validate() const {
  if (static_cast<Eigen::Index>(values.size()) != scenarios * horizon * plants || probabilities.size() != scenarios)
    throw Error(ErrorKind::Data, "scenario set dimensions are inconsistent");
  if (std::abs(probabilities.sum() - 1.0) > 1e-12 || probabilities.minCoeff() < 0.0)
    throw Error(ErrorKind::Data, "scenario probabilities must be non-negative and sum to one");
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::Data, "scenario value outside [0, 1]");
}

GibbsKernel::GibbsKernel(const CopulaModel& model) {
  const auto p = model.plant_count();
  const auto f = static_cast<Eigen::Index>(model.forecast_plants().size());
  const Eigen::MatrixXd c = model.correlation().topLeftCorner(p + f, p + f);
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::Fit, "latent correlation of plants and forecasts is not positive definite");
  actual_ = Eigen::MatrixXd::Zero(p, p);
  forecast_ = Eigen::MatrixXd::Zero(p, f);
  sd_.resize(p);
  std::vector<Eigen::Index> given;
  for (Eigen::Index j = 0; j < p; ++j) {
    given.clear();
    for (Eigen::Index k = 0; k < p + f; ++k)
      if (k != j) given.push_back(k);
    const auto reg = gaussian_regression(c, j, std::span<const Eigen::Index>(given));
    for (std::size_t a = 0; a < given.size(); ++a) {
      const auto k = given[a];
      if (k < p)
        actual_(j, k) = reg.coeffs(static_cast<Eigen::Index>(a));
      else
        forecast_(j, k - p) = reg.coeffs(static_cast<Eigen::Index>(a));
    }
    sd_(j) = std::sqrt(std::max(reg.variance, 0.0));
  }
}

Eigen::VectorXd GibbsKernel::forecast_latent(const CopulaModel& model, const Eigen::VectorXd& forecasts) const {
  const auto& fp = model.forecast_plants();
  Eigen::VectorXd zf(static_cast<Eigen::Index>(fp.size()));
  for (std::size_t i = 0; i < fp.size(); ++i) {
    const auto var = *model.forecast_index(fp[i]);
    zf(static_cast<Eigen::Index>(i)) = model.latent(var, forecasts(fp[i]));
  }
  return zf;
}

namespace {

void check_forecasts(const CopulaModel& model, const Eigen::MatrixXd& traj) {
  if (traj.cols() != model.plant_count())
    throw Error(ErrorKind::Domain, "forecasts cover " + std::to_string(traj.cols()) + " plants, model has " +
                                       std::to_string(model.plant_count()));
  if (traj.rows() < 1) throw Error(ErrorKind::Domain, "forecast trajectory is empty");
  if (!traj.allFinite()) throw Error(ErrorKind::Domain, "forecast values must be finite");
}

template <typename Fn>
void parallel_for(Eigen::Index n, int threads, Fn&& fn) {
  const auto workers = static_cast<Eigen::Index>(std::clamp<Eigen::Index>(threads, 1, std::max<Eigen::Index>(n, 1)));
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

// One chain per interval. Sweep i of every chain draws its noise from the
// same substream, so the noise of plant j across intervals is one AR(1)
// path (the Cholesky factor of the exponential covariance in closed form)
// with lag-one correlation phi_j. The output at interval t is recorded after
// every sweeps_per_scenario-th post-burn-in sweep.
ScenarioSet run_chains(const CopulaModel& model, const Eigen::MatrixXd& traj, const Eigen::VectorXd& phi,
                       const GibbsConfig& cfg, const char* origin) {
  check_forecasts(model, traj);
  const auto p = model.plant_count();
  cfg.validate(p);
  const GibbsKernel kernel(model);
  const auto horizon = traj.rows();
  const auto sweeps = cfg.n_burn_in + cfg.n_scenarios * cfg.sweeps_per_scenario;

  const auto stride = p * horizon;
  std::vector<double> noise(static_cast<std::size_t>(sweeps * stride));
  Eigen::VectorXd innov(p);
  for (Eigen::Index j = 0; j < p; ++j) innov(j) = std::sqrt(std::max(0.0, 1.0 - phi(j) * phi(j)));
  parallel_for(sweeps, cfg.threads, [&](Eigen::Index i) {
    Rng rng(substream_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    double* z = noise.data() + i * stride;
    for (Eigen::Index j = 0; j < p; ++j) {
      double prev = 0.0;
      for (Eigen::Index t = 0; t < horizon; ++t) {
        const double xi = rng.normal();
        prev = t == 0 ? xi : phi(j) * prev + innov(j) * xi;
        z[j * horizon + t] = prev;
      }
    }
  });

  ScenarioSet out(cfg.n_scenarios, horizon, p);
  out.forecasts = traj;
  out.seed = cfg.seed;
  out.origin = origin;

  parallel_for(horizon, cfg.threads, [&](Eigen::Index t) {
    const Eigen::VectorXd f = traj.row(t).transpose();
    const Eigen::VectorXd shift = kernel.forecast_coeffs() * kernel.forecast_latent(model, f);
    Eigen::VectorXd z(p);
    for (Eigen::Index j = 0; j < p; ++j)
      z(j) = model.latent(j, cfg.init == GibbsConfig::Init::Custom ? cfg.custom_init(j) : f(j));
    for (Eigen::Index i = 0; i < sweeps; ++i) {
      const double* xi = noise.data() + i * stride;
      for (Eigen::Index j = 0; j < p; ++j) {
        const double mu = kernel.actual_coeffs().row(j).dot(z) + shift(j);
        z(j) = mu + kernel.conditional_std()(j) * xi[j * horizon + t];
      }
      const auto past = i - cfg.n_burn_in + 1;
      if (past < 1 || past % cfg.sweeps_per_scenario != 0) continue;
      const auto s = past / cfg.sweeps_per_scenario - 1;
      for (Eigen::Index j = 0; j < p; ++j) out.at(s, t, j) = model.marginal(j).inverse_cdf(normal_cdf(z(j)));
    }
  });
  return out;
}

}  // namespace

ScenarioSet gibbs_static(const CopulaModel& model, const Eigen::VectorXd& forecasts, const GibbsConfig& cfg) {
  if (forecasts.size() != model.plant_count())
    throw Error(ErrorKind::Domain, "forecasts cover " + std::to_string(forecasts.size()) + " plants, model has " +
                                       std::to_string(model.plant_count()));
  return run_chains(model, forecasts.transpose(), Eigen::VectorXd::Zero(model.plant_count()), cfg, "static");
}

ScenarioSet dynamic_generate(const CopulaModel& model, const Eigen::MatrixXd& forecast_traj,
                             const TemporalModel& temporal, const GibbsConfig& cfg) {
  temporal.validate(model.plant_count());
  if (temporal.horizon != forecast_traj.rows())
    throw Error(ErrorKind::Config, "temporal horizon " + std::to_string(temporal.horizon) +
                                       " differs from forecast trajectory length " +
                                       std::to_string(forecast_traj.rows()));
  Eigen::VectorXd phi(model.plant_count());
  for (Eigen::Index j = 0; j < phi.size(); ++j) phi(j) = temporal.lag_one(j);
  return run_chains(model, forecast_traj, phi, cfg, "dynamic");
}

ScenarioSet static_horizon(const CopulaModel& model, const Eigen::MatrixXd& forecast_traj, const GibbsConfig& cfg) {
  return run_chains(model, forecast_traj, Eigen::VectorXd::Zero(model.plant_count()), cfg, "static");
}

namespace {

void quantized_steps(const Eigen::Ref<const Eigen::VectorXd>& x, double quantum, std::vector<double>& out) {
  for (Eigen::Index t = 0; t + 1 < x.size(); ++t)
    out.push_back(std::round(x(t + 1) / quantum) - std::round(x(t) / quantum));
}

}  // namespace

TuneResult tune_range_parameter_detailed(const CopulaModel& model, const HistoricalDataset& historical,
                                         Eigen::Index plant, const std::vector<double>& grid,
                                         const TuneOptions& options) {
  if (grid.empty()) throw Error(ErrorKind::Config, "range parameter grid is empty");
  for (double e : grid)
    if (!(e > 0.0)) throw Error(ErrorKind::Domain, "range parameter grid entries must be positive");
  if (plant < 0 || plant >= model.plant_count()) throw Error(ErrorKind::Domain, "plant index out of range");
  if (historical.plant_count() != model.plant_count())
    throw Error(ErrorKind::Config, "historical data and model disagree on plant count");
  const auto n = historical.samples();
  const auto window = std::min(options.window, n);
  if (window < 2) throw Error(ErrorKind::Data, "historical series too short to measure variability");

  std::vector<double> hist;
  quantized_steps(historical.actual.col(plant), options.quantum, hist);

  std::vector<Eigen::Index> starts;
  const auto windows = std::max<Eigen::Index>(1, options.windows);
  for (Eigen::Index w = 0; w < windows; ++w)
    starts.push_back(windows == 1 ? 0 : (n - window) * w / (windows - 1));

  TuneResult out;
  out.grid = grid;
  for (double eps : grid) {
    std::vector<double> gen;
    for (std::size_t w = 0; w < starts.size(); ++w) {
      const Eigen::MatrixXd traj = historical.forecast.middleRows(starts[w], window).cwiseMax(0.0).cwiseMin(1.0);
      GibbsConfig cfg;
      cfg.n_scenarios = options.pilot_scenarios;
      cfg.n_burn_in = options.pilot_burn_in;
      cfg.seed = substream_seed(options.seed, w);
      const auto set = dynamic_generate(model, traj, TemporalModel::uniform(eps, model.plant_count(), window), cfg);
      Eigen::VectorXd path(window);
      for (Eigen::Index s = 0; s < set.scenarios; ++s) {
        for (Eigen::Index t = 0; t < window; ++t) path(t) = set.at(s, t, plant);
        quantized_steps(path, options.quantum, gen);
      }
    }
    out.ks.push_back(stats::ks_two_sample(gen, hist));
  }
  // Ties favour the smoother (larger) range parameter.
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double d = out.ks[i] - out.ks[best];
    if (d < -1e-12 || (std::abs(d) <= 1e-12 && grid[i] > grid[best])) best = i;
  }
  out.epsilon = grid[best];
  return out;
}

double tune_range_parameter(const CopulaModel& model, const HistoricalDataset& historical, Eigen::Index plant,
                            const std::vector<double>& grid, const TuneOptions& options) {
  return tune_range_parameter_detailed(model, historical, plant, grid, options).epsilon;
}

double trajectory_distance(const ScenarioSet& set, Eigen::Index a, Eigen::Index b) {
  const auto len = set.horizon * set.plants;
  const double* x = set.values.data() + a * len;
  const double* y = set.values.data() + b * len;
  double d = 0.0;
  for (Eigen::Index k = 0; k < len; ++k) d += std::abs(x[k] - y[k]);
  return d;
}

double kantorovich_distance(const ScenarioSet& set, const std::vector<Eigen::Index>& selected) {
  if (selected.empty()) throw Error(ErrorKind::Domain, "empty selection");
  double total = 0.0;
  for (Eigen::Index k = 0; k < set.scenarios; ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (auto s : selected) best = std::min(best, trajectory_distance(set, k, s));
    total += set.probabilities(k) * best;
  }
  return total;
}

namespace {

class Reducer {
 public:
  explicit Reducer(const ScenarioSet& set) : n_(set.scenarios), p_(set.probabilities), c_(static_cast<std::size_t>(n_ * n_)) {
    for (Eigen::Index a = 0; a < n_; ++a) {
      c_[idx(a, a)] = 0.0f;
      for (Eigen::Index b = a + 1; b < n_; ++b) {
        const auto d = static_cast<float>(trajectory_distance(set, a, b));
        c_[idx(a, b)] = d;
        c_[idx(b, a)] = d;
      }
    }
    in_.assign(static_cast<std::size_t>(n_), false);
  }

  // Greedy addition: the scenario whose inclusion minimizes the weighted
  // distance of all scenarios to the selection.
  void add_best() {
    Eigen::Index best = -1;
    double best_val = std::numeric_limits<double>::infinity();
    for (Eigen::Index u = 0; u < n_; ++u) {
      if (in_[static_cast<std::size_t>(u)]) continue;
      const float* cu = &c_[idx(u, 0)];
      double v = 0.0;
      for (Eigen::Index k = 0; k < n_; ++k) v += p_(k) * std::min(d1(k), static_cast<double>(cu[k]));
      if (v < best_val) {
        best_val = v;
        best = u;
      }
    }
    sel_.push_back(best);
    in_[static_cast<std::size_t>(best)] = true;
    assign();
  }

  // Best-improvement swaps of one selected and one unselected scenario until
  // none lowers the distance. Per candidate one pass over all scenarios
  // prices every swap partner through nearest and second-nearest distances.
  void refine() {
    if (sel_.size() < 1 || static_cast<Eigen::Index>(sel_.size()) == n_) return;
    for (int pass = 0; pass < 1000; ++pass) {
      const double current = objective();
      double best_gain = 1e-12 * (1.0 + current);
      Eigen::Index best_u = -1, best_slot = -1;
      std::vector<double> delta(sel_.size());
      for (Eigen::Index u = 0; u < n_; ++u) {
        if (in_[static_cast<std::size_t>(u)]) continue;
        const float* cu = &c_[idx(u, 0)];
        std::fill(delta.begin(), delta.end(), 0.0);
        double shared = 0.0;
        for (Eigen::Index k = 0; k < n_; ++k) {
          const double c = cu[k];
          const double a = d1_[static_cast<std::size_t>(k)];
          const double base = std::min(c - a, 0.0);
          shared += p_(k) * base;
          const double alt = std::min(c, d2_[static_cast<std::size_t>(k)]) - a;
          delta[static_cast<std::size_t>(n1_[static_cast<std::size_t>(k)])] += p_(k) * (alt - base);
        }
        for (std::size_t slot = 0; slot < sel_.size(); ++slot) {
          const double gain = -(shared + delta[slot]);
          if (gain > best_gain) {
            best_gain = gain;
            best_u = u;
            best_slot = static_cast<Eigen::Index>(slot);
          }
        }
      }
      if (best_u < 0) return;
      in_[static_cast<std::size_t>(sel_[static_cast<std::size_t>(best_slot)])] = false;
      sel_[static_cast<std::size_t>(best_slot)] = best_u;
      in_[static_cast<std::size_t>(best_u)] = true;
      assign();
    }
  }

  double objective() const {
    double v = 0.0;
    for (Eigen::Index k = 0; k < n_; ++k) v += p_(k) * d1_[static_cast<std::size_t>(k)];
    return v;
  }

  const std::vector<Eigen::Index>& selected() const { return sel_; }
  Eigen::Index nearest_slot(Eigen::Index k) const { return n1_[static_cast<std::size_t>(k)]; }

 private:
  std::size_t idx(Eigen::Index a, Eigen::Index b) const { return static_cast<std::size_t>(a * n_ + b); }
  double d1(Eigen::Index k) const {
    return d1_.empty() ? std::numeric_limits<double>::infinity() : d1_[static_cast<std::size_t>(k)];
  }

  // Nearest and second-nearest selected scenario of every scenario; ties go
  // to the earlier slot.
  void assign() {
    const auto n = static_cast<std::size_t>(n_);
    d1_.assign(n, std::numeric_limits<double>::infinity());
    d2_.assign(n, std::numeric_limits<double>::infinity());
    n1_.assign(n, 0);
    for (std::size_t slot = 0; slot < sel_.size(); ++slot) {
      const float* cs = &c_[idx(sel_[slot], 0)];
      for (std::size_t k = 0; k < n; ++k) {
        const double c = cs[k];
        if (c < d1_[k]) {
          d2_[k] = d1_[k];
          d1_[k] = c;
          n1_[k] = static_cast<Eigen::Index>(slot);
        } else if (c < d2_[k]) {
          d2_[k] = c;
        }
      }
    }
  }

  Eigen::Index n_;
  Eigen::VectorXd p_;
  std::vector<float> c_;
  std::vector<bool> in_;
  std::vector<Eigen::Index> sel_;
  std::vector<double> d1_, d2_;
  std::vector<Eigen::Index> n1_;
};

}  // namespace

ReductionResult reduce_scenarios_detailed(const ScenarioSet& set, Eigen::Index target,
                                          const ReductionOptions& options) {
  if (target < 1) throw Error(ErrorKind::Domain, "reduction target must be at least 1");
  if (target > set.scenarios)
    throw Error(ErrorKind::Domain, "reduction target " + std::to_string(target) + " exceeds " +
                                       std::to_string(set.scenarios) + " scenarios");
  ReductionResult out;
  if (target == set.scenarios) {
    out.set = set;
    for (Eigen::Index s = 0; s < set.scenarios; ++s) out.selected.push_back(s);
    return out;
  }
  Reducer r(set);
  const bool exchange = set.scenarios <= options.exchange_limit;
  for (Eigen::Index k = 0; k < target; ++k) {
    r.add_best();
    if (exchange) r.refine();
  }
  out.selected = r.selected();

  std::vector<Eigen::Index> order(out.selected.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    return out.selected[static_cast<std::size_t>(a)] < out.selected[static_cast<std::size_t>(b)];
  });
  std::vector<Eigen::Index> position(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) position[static_cast<std::size_t>(order[i])] = static_cast<Eigen::Index>(i);

  ScenarioSet red(target, set.horizon, set.plants);
  red.forecasts = set.forecasts;
  red.seed = set.seed;
  red.origin = "reduced";
  red.probabilities.setZero();
  const auto len = static_cast<std::size_t>(set.horizon * set.plants);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto src = out.selected[static_cast<std::size_t>(order[i])];
    std::copy_n(set.values.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(src) * len), len,
                red.values.begin() + static_cast<std::ptrdiff_t>(i * len));
  }
  for (Eigen::Index k = 0; k < set.scenarios; ++k)
    red.probabilities(position[static_cast<std::size_t>(r.nearest_slot(k))]) += set.probabilities(k);
  red.probabilities /= red.probabilities.sum();
  out.set = std::move(red);
  out.distance = kantorovich_distance(set, out.selected);
  return out;
}

ScenarioSet reduce_scenarios(const ScenarioSet& set, Eigen::Index target, const ReductionOptions& options) {
  return reduce_scenarios_detailed(set, target, options).set;
}

namespace {

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".json");
  return p;
}

}  // namespace

void write_scenarios(const ScenarioSet& set, const std::vector<PlantId>& plants, const std::filesystem::path& csv,
                     const json& extra) {
  if (static_cast<Eigen::Index>(plants.size()) != set.plants)
    throw Error(ErrorKind::Config, "plant list does not match the scenario set");
  std::ofstream out(csv);
  if (!out) throw Error(ErrorKind::Config, "cannot write " + csv.string());
  out << "scenario,time,plant,value_pu\n";
  for (Eigen::Index s = 0; s < set.scenarios; ++s)
    for (Eigen::Index t = 0; t < set.horizon; ++t)
      for (Eigen::Index j = 0; j < set.plants; ++j)
        out << s << ',' << t << ',' << plants[static_cast<std::size_t>(j)].name << ',' << exact_decimal(set.at(s, t, j))
            << '\n';

  json side;
  side["scenarios"] = set.scenarios;
  side["horizon"] = set.horizon;
  json names = json::array();
  for (const auto& p : plants) names.push_back(p.name);
  side["plants"] = names;
  json probs = json::array();
  for (Eigen::Index s = 0; s < set.scenarios; ++s) probs.push_back(exact_decimal(set.probabilities(s)));
  side["probabilities"] = probs;
  json fc = json::array();
  for (Eigen::Index t = 0; t < set.forecasts.rows(); ++t) {
    json row = json::array();
    for (Eigen::Index j = 0; j < set.forecasts.cols(); ++j) row.push_back(exact_decimal(set.forecasts(t, j)));
    fc.push_back(row);
  }
  side["forecasts"] = fc;
  side["seed"] = set.seed;
  side["origin"] = set.origin;
  if (!extra.is_null()) side["config"] = extra;
  std::ofstream js(sidecar_path(csv));
  js << side.dump(2) << '\n';
}

ScenarioSet read_scenarios(const std::filesystem::path& csv) {
  std::ifstream js(sidecar_path(csv));
  if (!js) throw Error(ErrorKind::Config, "missing scenario sidecar " + sidecar_path(csv).string());
  json side;
  try {
    side = json::parse(js);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, sidecar_path(csv).string() + ": " + e.what());
  }
  try {
    const auto names = side.at("plants").get<std::vector<std::string>>();
    ScenarioSet set(side.at("scenarios").get<Eigen::Index>(), side.at("horizon").get<Eigen::Index>(),
                    static_cast<Eigen::Index>(names.size()));
    const auto& probs = side.at("probabilities");
    for (Eigen::Index s = 0; s < set.scenarios; ++s)
      set.probabilities(s) = parse_exact_decimal(probs.at(static_cast<std::size_t>(s)).get<std::string>());
    const auto& fc = side.at("forecasts");
    for (Eigen::Index t = 0; t < set.horizon; ++t)
      for (Eigen::Index j = 0; j < set.plants; ++j)
        set.forecasts(t, j) = parse_exact_decimal(
            fc.at(static_cast<std::size_t>(t)).at(static_cast<std::size_t>(j)).get<std::string>());
    set.seed = side.value("seed", std::uint64_t{0});
    set.origin = side.value("origin", std::string());

    std::ifstream in(csv);
    if (!in) throw Error(ErrorKind::Config, "cannot open " + csv.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("scenario,time,plant,value_pu", 0) != 0)
      throw Error(ErrorKind::Schema, csv.string() + ": expected header scenario,time,plant,value_pu");
    std::size_t count = 0;
    for (std::size_t ln = 2; std::getline(in, line); ++ln) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string a, b, c, d;
      std::getline(ss, a, ',');
      std::getline(ss, b, ',');
      std::getline(ss, c, ',');
      std::getline(ss, d);
      const auto s = std::stol(a), t = std::stol(b);
      const auto it = std::find(names.begin(), names.end(), c);
      if (it == names.end() || s < 0 || s >= set.scenarios || t < 0 || t >= set.horizon)
        throw Error(ErrorKind::Data, csv.string() + ":" + std::to_string(ln) + ": row outside the declared set");
      set.at(s, t, it - names.begin()) = parse_exact_decimal(d);
      ++count;
    }
    if (count != set.values.size()) throw Error(ErrorKind::Data, csv.string() + ": scenario rows missing");
    return set;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, sidecar_path(csv).string() + ": " + e.what());
  } catch (const std::invalid_argument&) {
    throw Error(ErrorKind::Format, csv.string() + ": malformed number");
  }
}

}  // namespace rted
