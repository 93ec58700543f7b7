#include "rted/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rted/copula_model.hpp"
#include "rted/data_ingest.hpp"
#include "rted/evaluation.hpp"
#include "rted/marginals.hpp"
#include "rted/network.hpp"
#include "rted/rng.hpp"
#include "rted/scenario_gen.hpp"

namespace rted {

namespace fs = std::filesystem;
using json = nlohmann::json;

const char* to_string(RunMode m) { return m == RunMode::DistributionEd ? "distribution" : "scenario"; }

const char* to_string(ScenarioSource s) {
  switch (s) {
    case ScenarioSource::Dynamic: return "dynamic";
    case ScenarioSource::Static: return "static";
    case ScenarioSource::Independent: return "independent";
  }
  return "unknown";
}

const char* to_string(Stage s) {
  switch (s) {
    case Stage::Fit: return "fit";
    case Stage::Generate: return "generate";
    case Stage::Reduce: return "reduce";
    case Stage::Dispatch: return "dispatch";
    case Stage::Evaluate: return "evaluate";
    case Stage::Report: return "report";
  }
  return "unknown";
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> s{Stage::Fit,      Stage::Generate, Stage::Reduce,
                                    Stage::Dispatch, Stage::Evaluate, Stage::Report};
  return s;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::UnsupportedMode:
      return 2;
    case ErrorKind::Numerical:
    case ErrorKind::Resource:
      return 4;
    default:
      return 3;
  }
}

namespace {

ScenarioSource source_from_string(const std::string& s) {
  if (s == "dynamic") return ScenarioSource::Dynamic;
  if (s == "static") return ScenarioSource::Static;
  if (s == "independent") return ScenarioSource::Independent;
  throw Error(ErrorKind::Config, "unknown scenario source '" + s + "' (dynamic, static, independent)");
}

std::string number_label(double v) {
  // 40 -> "40", 62.5 -> "62.5"
  std::string s = exact_decimal(v);
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

}  // namespace

fs::path RunConfig::resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }

void RunConfig::validate() const {
  auto need_file = [&](const fs::path& p, const char* what) {
    if (p.empty()) throw Error(ErrorKind::Config, std::string("config is missing '") + what + "'");
    if (!fs::exists(resolve(p))) throw Error(ErrorKind::Config, std::string(what) + " not found: " + resolve(p).string());
  };
  need_file(data_dir, "data_dir");
  need_file(network, "network");
  need_file(case_file, "case");
  if (output_dir.empty()) throw Error(ErrorKind::Config, "config is missing 'output_dir'");
  if (origin.empty()) throw Error(ErrorKind::Config, "config is missing 'origin'");
  parse_timestamp(origin);
  if (n_scenarios < 1 || burn_in < 0 || eval_scenarios < 1 || eval_burn_in < 0 || sweeps_per_scenario < 1)
    throw Error(ErrorKind::Config, "scenario counts and sweeps per scenario must be positive, burn-in non-negative");
  if (mode == RunMode::ScenarioEd || compare_cases) {
    if (reduced_targets.empty()) throw Error(ErrorKind::Config, "scenario mode needs at least one reduced target");
    for (auto n : reduced_targets)
      if (n < 1 || n > n_scenarios)
        throw Error(ErrorKind::Config, "reduced target " + std::to_string(n) + " outside [1, " +
                                           std::to_string(n_scenarios) + "]");
  }
  if (epsilon) {
    if (!(*epsilon > 0.0)) throw Error(ErrorKind::Config, "epsilon must be positive");
  } else {
    if (epsilon_grid.empty()) throw Error(ErrorKind::Config, "epsilon grid is empty");
    for (double e : epsilon_grid)
      if (!(e > 0.0)) throw Error(ErrorKind::Config, "epsilon grid entries must be positive");
  }
  for (double v : curtailment_sweep)
    if (!(v >= 0.0)) throw Error(ErrorKind::Config, "curtailment sweep entries must be non-negative");
  if (threads < 1) throw Error(ErrorKind::Config, "threads must be at least 1");
}

json RunConfig::canonical() const {
  json j;
  j["name"] = name;
  j["data_dir"] = data_dir.generic_string();
  j["network"] = network.generic_string();
  j["case"] = case_file.generic_string();
  j["mode"] = to_string(mode);
  j["forecast_lines"] = forecast_lines;
  j["scenario_source"] = to_string(source);
  j["origin"] = origin;
  j["scenarios"] = {{"count", n_scenarios},
                    {"burn_in", burn_in},
                    {"sweeps_per_scenario", sweeps_per_scenario},
                    {"reduced", reduced_targets}};
  if (epsilon)
    j["epsilon"] = {{"value", *epsilon}};
  else
    j["epsilon"] = {{"grid", epsilon_grid}};
  j["evaluation"] = {{"count", eval_scenarios}, {"burn_in", eval_burn_in}};
  j["compare_cases"] = compare_cases;
  j["curtailment_sweep"] = curtailment_sweep;
  j["seed"] = seed;
  return j;
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical().dump())));
  return buf;
}

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  try {
    c.name = j.value("name", c.name);
    c.data_dir = j.value("data_dir", std::string());
    c.network = j.value("network", std::string());
    c.case_file = j.value("case", std::string());
    c.output_dir = j.value("output_dir", std::string());
    const auto mode = j.value("mode", std::string("distribution"));
    if (mode == "distribution")
      c.mode = RunMode::DistributionEd;
    else if (mode == "scenario")
      c.mode = RunMode::ScenarioEd;
    else
      throw Error(ErrorKind::Config, "unknown mode '" + mode + "' (distribution, scenario)");
    c.forecast_lines = j.value("forecast_lines", false);
    c.source = source_from_string(j.value("scenario_source", std::string("dynamic")));
    c.origin = j.value("origin", std::string());
    if (j.contains("scenarios")) {
      const auto& s = j.at("scenarios");
      c.n_scenarios = s.value("count", c.n_scenarios);
      c.burn_in = s.value("burn_in", c.burn_in);
      c.sweeps_per_scenario = s.value("sweeps_per_scenario", c.sweeps_per_scenario);
      if (s.contains("reduced")) c.reduced_targets = s.at("reduced").get<std::vector<Eigen::Index>>();
    }
    if (j.contains("epsilon")) {
      const auto& e = j.at("epsilon");
      if (e.is_number())
        c.epsilon = e.get<double>();
      else if (e.contains("value"))
        c.epsilon = e.at("value").get<double>();
      else
        c.epsilon_grid = e.at("grid").get<std::vector<double>>();
    }
    if (j.contains("evaluation")) {
      c.eval_scenarios = j.at("evaluation").value("count", c.eval_scenarios);
      c.eval_burn_in = j.at("evaluation").value("burn_in", c.eval_burn_in);
    }
    c.compare_cases = j.value("compare_cases", false);
    if (j.contains("curtailment_sweep")) c.curtailment_sweep = j.at("curtailment_sweep").get<std::vector<double>>();
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, path.string() + ": " + e.what());
  }
  return run_config_from_json(j, fs::absolute(path).parent_path());
}

std::vector<PlannedSchedule> planned_schedules(const RunConfig& cfg, const DispatchCase& c) {
  std::vector<PlannedSchedule> out;
  auto add = [&](PlannedSchedule s) {
    for (const auto& o : out)
      if (o.label == s.label) return;
    out.push_back(std::move(s));
  };
  auto distribution = [&](bool lines) {
    return PlannedSchedule{lines ? "distribution_forecast_lines" : "distribution",
                           lines ? DispatchMode::DistributionForecastLines : DispatchMode::Distribution,
                           ScenarioSource::Dynamic, 0, c.c_rec};
  };
  auto scenario = [&](ScenarioSource src, Eigen::Index n) {
    return PlannedSchedule{std::string("scenario_") + to_string(src) + "_" + std::to_string(n), DispatchMode::Scenario,
                           src, n, c.c_rec};
  };
  if (cfg.mode == RunMode::DistributionEd) {
    add(distribution(cfg.forecast_lines));
  } else {
    // Largest set first so it is the primary schedule.
    auto targets = cfg.reduced_targets;
    std::sort(targets.rbegin(), targets.rend());
    for (auto n : targets) add(scenario(cfg.source, n));
  }
  if (cfg.compare_cases) {
    const auto n = *std::max_element(cfg.reduced_targets.begin(), cfg.reduced_targets.end());
    add(distribution(false));
    add(distribution(true));
    for (auto src : {ScenarioSource::Dynamic, ScenarioSource::Static, ScenarioSource::Independent})
      add(scenario(src, n));
  }
  for (double v : cfg.curtailment_sweep)
    add({"distribution_crec" + number_label(v), DispatchMode::Distribution, ScenarioSource::Dynamic, 0, v});
  return out;
}

fs::path model_path(const RunConfig& cfg) { return cfg.resolve(cfg.output_dir) / "model" / "model.json"; }

fs::path scenario_path(const RunConfig& cfg, ScenarioSource source, Eigen::Index reduced) {
  std::string name = to_string(source);
  if (reduced > 0) name += "_reduced_" + std::to_string(reduced);
  return cfg.resolve(cfg.output_dir) / "scenarios" / (name + ".csv");
}

fs::path test_scenario_path(const RunConfig& cfg) { return cfg.resolve(cfg.output_dir) / "scenarios" / "test.csv"; }

fs::path solution_path(const RunConfig& cfg, const std::string& label) {
  return cfg.resolve(cfg.output_dir) / "solution" / (label + ".json");
}

fs::path evaluation_path(const RunConfig& cfg, const std::string& label) {
  return cfg.resolve(cfg.output_dir) / "report" / "evaluation" / (label + ".json");
}

fs::path report_dir(const RunConfig& cfg) { return cfg.resolve(cfg.output_dir) / "report"; }

PairedDifference paired_difference(double total_a, const Eigen::VectorXd& penalty_a, double total_b,
                                   const Eigen::VectorXd& penalty_b, const Eigen::VectorXd& probabilities) {
  if (penalty_a.size() != penalty_b.size() || penalty_a.size() != probabilities.size())
    throw Error(ErrorKind::Config, "paired comparison needs evaluations on the same test set");
  const Eigen::VectorXd d = penalty_a - penalty_b;
  const double mean = probabilities.dot(d);
  const double var = probabilities.dot((d.array() - mean).square().matrix());
  PairedDifference r;
  r.difference = total_a - total_b;
  r.standard_error = std::sqrt(var * probabilities.squaredNorm());
  return r;
}

namespace {

// Everything the later stages share, loaded from the config's inputs.
struct Inputs {
  HistoricalDataset data;
  NetworkModel net;
  DispatchCase dispatch_case;
  Eigen::Index origin_index = 0;
  Eigen::MatrixXd forecasts;  // horizon x plant, p.u.
};

Inputs load_inputs(const RunConfig& cfg) {
  Inputs in;
  in.data = load_historical(cfg.resolve(cfg.data_dir));
  in.net = load_network(cfg.resolve(cfg.network));
  in.dispatch_case = load_dispatch_case(cfg.resolve(cfg.case_file));
  check_plant_buses(in.net, in.data.plants);
  const auto t0 = parse_timestamp(cfg.origin);
  const auto it = std::lower_bound(in.data.timestamps.begin(), in.data.timestamps.end(), t0);
  if (it == in.data.timestamps.end() || *it != t0)
    throw Error(ErrorKind::Config, "origin " + cfg.origin + " is not a timestamp of the corpus");
  in.origin_index = it - in.data.timestamps.begin();
  const auto horizon = in.dispatch_case.horizon;
  if (in.origin_index + horizon > in.data.samples())
    throw Error(ErrorKind::Config, "origin " + cfg.origin + " leaves fewer than " + std::to_string(horizon) +
                                       " forecast intervals in the corpus");
  in.forecasts = in.data.forecast.middleRows(in.origin_index, horizon);
  return in;
}

json stamp(const RunConfig& cfg) { return {{"config_hash", cfg.hash()}, {"seed", cfg.seed}}; }

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Config, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path, Stage needed_from) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::Config, "missing artifact " + path.filename().string() + "; run the '" +
                                       to_string(needed_from) + "' stage first");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, path.string() + ": " + e.what());
  }
}

// Artifacts from an older config would silently mix runs.
void check_stamp(const RunConfig& cfg, const json& j, const fs::path& path) {
  if (j.value("config_hash", std::string()) != cfg.hash())
    throw Error(ErrorKind::Config, path.filename().string() + " was written by a different config; rerun earlier stages");
}

ScenarioSet read_stamped_scenarios(const RunConfig& cfg, const fs::path& path, Stage from) {
  const auto side = fs::path(path).replace_extension(".json");
  const auto meta = read_json(side, from);
  if (!meta.contains("config")) throw Error(ErrorKind::Config, side.filename().string() + " carries no config stamp");
  check_stamp(cfg, meta.at("config"), side);
  return read_scenarios(path);
}

struct FittedModel {
  CopulaModel copula;
  Eigen::VectorXd epsilon;
};

FittedModel read_model(const RunConfig& cfg) {
  const auto path = model_path(cfg);
  const auto j = read_json(path, Stage::Fit);
  check_stamp(cfg, j, path);
  FittedModel m;
  m.copula = copula_from_json(j.at("copula"));
  const auto eps = j.at("epsilon").get<std::vector<double>>();
  m.epsilon = Eigen::Map<const Eigen::VectorXd>(eps.data(), static_cast<Eigen::Index>(eps.size()));
  return m;
}

std::vector<ScenarioSource> sources_needed(const std::vector<PlannedSchedule>& plan) {
  std::vector<ScenarioSource> out;
  for (const auto& s : plan)
    if (s.mode == DispatchMode::Scenario && std::find(out.begin(), out.end(), s.source) == out.end())
      out.push_back(s.source);
  return out;
}

DispatchCase case_for(const Inputs& in, const PlannedSchedule& s) {
  DispatchCase c = in.dispatch_case;
  c.c_rec = s.c_rec;
  return c;
}

void note(const PipelineLog& log, Stage s, const std::string& msg) {
  if (log) log(s, msg);
}

// ---------------------------------------------------------------------------

void fit_stage(const RunConfig& cfg, const PipelineLog& log) {
  const auto in = load_inputs(cfg);
  HistoricalDataset hist = in.data;
  const auto n = in.origin_index;
  hist.timestamps.resize(static_cast<std::size_t>(n));
  hist.actual = in.data.actual.topRows(n).eval();
  hist.forecast = in.data.forecast.topRows(n).eval();
  hist.validate();
  note(log, Stage::Fit, "fitting on " + std::to_string(n) + " samples before " + cfg.origin);

  std::vector<DerivedVariableSpec> derived{DerivedVariableSpec::sum(hist.plants)};
  for (auto& d : DerivedVariableSpec::lines(plant_shift_factors(in.net, hist.plants), hist.plants))
    derived.push_back(std::move(d));
  const auto model = fit_copula(hist, derived);

  const auto plants = model.plant_count();
  Eigen::VectorXd eps(plants);
  json tuning = json::array();
  if (cfg.epsilon) {
    eps.setConstant(*cfg.epsilon);
  } else {
    TuneOptions opt;
    opt.seed = derive_seed("tune:", cfg.seed);
    for (Eigen::Index j = 0; j < plants; ++j) {
      const auto r = tune_range_parameter_detailed(model, hist, j, cfg.epsilon_grid, opt);
      eps(j) = r.epsilon;
      tuning.push_back({{"plant", hist.plants[static_cast<std::size_t>(j)].name}, {"grid", r.grid}, {"ks", r.ks},
                        {"epsilon", r.epsilon}});
      note(log, Stage::Fit, "range parameter of " + hist.plants[static_cast<std::size_t>(j)].name + ": " +
                                exact_decimal(r.epsilon) + " steps");
    }
  }

  json j = stamp(cfg);
  j["origin"] = cfg.origin;
  j["fit_samples"] = n;
  j["epsilon"] = std::vector<double>(eps.data(), eps.data() + eps.size());
  j["tuning"] = tuning;
  j["warnings"] = model.warnings();
  j["copula"] = model;
  write_json(model_path(cfg), j);
}

void generate_stage(const RunConfig& cfg, const PipelineLog& log) {
  const auto in = load_inputs(cfg);
  const auto m = read_model(cfg);
  const auto plan = planned_schedules(cfg, in.dispatch_case);
  const TemporalModel temporal{m.epsilon, in.dispatch_case.horizon};
  auto gibbs = [&](Eigen::Index count, Eigen::Index burn, std::uint64_t seed) {
    GibbsConfig g;
    g.n_scenarios = count;
    g.n_burn_in = burn;
    g.sweeps_per_scenario = cfg.sweeps_per_scenario;
    g.seed = seed;
    g.threads = cfg.threads;
    return g;
  };
  json extra = stamp(cfg);

  for (auto src : sources_needed(plan)) {
    const auto g = gibbs(cfg.n_scenarios, cfg.burn_in, cfg.seed);
    ScenarioSet set;
    switch (src) {
      case ScenarioSource::Dynamic: set = dynamic_generate(m.copula, in.forecasts, temporal, g); break;
      case ScenarioSource::Static: set = static_horizon(m.copula, in.forecasts, g); break;
      case ScenarioSource::Independent:
        set = dynamic_generate(m.copula.without_spatial_correlation(), in.forecasts, temporal, g);
        set.origin = "independent";
        break;
    }
    extra["role"] = "optimization";
    fs::create_directories(scenario_path(cfg, src).parent_path());
    write_scenarios(set, in.data.plants, scenario_path(cfg, src), extra);
    note(log, Stage::Generate, std::to_string(set.scenarios) + " " + to_string(src) + " scenarios");
  }

  // Held out: its own seed namespace, always dynamic.
  const auto test = dynamic_generate(m.copula, in.forecasts, temporal,
                                     gibbs(cfg.eval_scenarios, cfg.eval_burn_in, evaluation_seed(cfg.seed)));
  extra["role"] = "evaluation";
  fs::create_directories(test_scenario_path(cfg).parent_path());
  write_scenarios(test, in.data.plants, test_scenario_path(cfg), extra);
  note(log, Stage::Generate, std::to_string(test.scenarios) + " held-out test scenarios");
}

void reduce_stage(const RunConfig& cfg, const PipelineLog& log) {
  const auto in = load_inputs(cfg);
  const auto plan = planned_schedules(cfg, in.dispatch_case);
  json extra = stamp(cfg);
  extra["role"] = "optimization";
  for (auto src : sources_needed(plan)) {
    const auto full = read_stamped_scenarios(cfg, scenario_path(cfg, src), Stage::Generate);
    std::vector<Eigen::Index> targets;
    for (const auto& s : plan)
      if (s.mode == DispatchMode::Scenario && s.source == src &&
          std::find(targets.begin(), targets.end(), s.reduced) == targets.end())
        targets.push_back(s.reduced);
    for (auto n : targets) {
      const auto r = reduce_scenarios_detailed(full, n);
      extra["kantorovich_distance"] = r.distance;
      write_scenarios(r.set, in.data.plants, scenario_path(cfg, src, n), extra);
      note(log, Stage::Reduce, std::string(to_string(src)) + " " + std::to_string(full.scenarios) + " -> " +
                                   std::to_string(n) + ", distance " + exact_decimal(r.distance));
    }
  }
}

void dispatch_stage(const RunConfig& cfg, const PipelineLog& log) {
  const auto in = load_inputs(cfg);
  const auto plan = planned_schedules(cfg, in.dispatch_case);
  std::optional<FittedModel> m;
  for (const auto& s : plan) {
    const auto c = case_for(in, s);
    DispatchSolution sol;
    if (s.mode == DispatchMode::Scenario) {
      const auto set = read_stamped_scenarios(cfg, scenario_path(cfg, s.source, s.reduced), Stage::Reduce);
      ScenarioEdOptions opt;
      opt.threads = cfg.threads;
      sol = solve_scenario_ed(c, set, in.net, in.data.plants, opt);
    } else {
      if (!m) m = read_model(cfg);
      sol = solve_distribution_ed(c, m->copula, in.net, in.forecasts, s.mode == DispatchMode::DistributionForecastLines);
    }
    json j = stamp(cfg);
    j["label"] = s.label;
    j["c_rec"] = s.c_rec;
    j["solution"] = sol;
    write_json(solution_path(cfg, s.label), j);
    if (sol.status != LpStatus::Optimal) {
      std::string rows;
      for (std::size_t k = 0; k < sol.infeasible_rows.size() && k < 8; ++k) rows += (k ? ", " : "") + sol.infeasible_rows[k];
      throw Error(ErrorKind::Numerical, s.label + " is " + to_string(sol.status) +
                                            (rows.empty() ? std::string() : " (rows involved: " + rows + ")"));
    }
    note(log, Stage::Dispatch, s.label + ": objective " + exact_decimal(sol.objective));
  }
}

void evaluate_stage(const RunConfig& cfg, const PipelineLog& log) {
  const auto in = load_inputs(cfg);
  const auto plan = planned_schedules(cfg, in.dispatch_case);
  const auto test = read_stamped_scenarios(cfg, test_scenario_path(cfg), Stage::Generate);
  EvaluationOptions opt;
  opt.threads = cfg.threads;
  for (const auto& s : plan) {
    const auto path = solution_path(cfg, s.label);
    const auto sj = read_json(path, Stage::Dispatch);
    check_stamp(cfg, sj, path);
    const auto sol = dispatch_solution_from_json(sj.at("solution"));
    const auto report = monte_carlo_evaluate(sol, test, case_for(in, s), in.net, in.data.plants, opt);
    report.validate();
    json j = stamp(cfg);
    j["label"] = s.label;
    j["report"] = report;
    j["scenario_penalty"] = std::vector<double>(report.scenario_penalty.data(),
                                                report.scenario_penalty.data() + report.scenario_penalty.size());
    write_json(evaluation_path(cfg, s.label), j);
    note(log, Stage::Evaluate, s.label + ": total " + exact_decimal(report.total) + " +- " +
                                   exact_decimal(report.standard_error));
  }
}

// ---------------------------------------------------------------------------

struct Evaluated {
  PlannedSchedule plan;
  json report;
  Eigen::VectorXd penalty;
  DispatchSolution solution;
  double total() const { return report.at("total").get<double>(); }
};

class Csv {
 public:
  Csv(const fs::path& path, const RunConfig& cfg) : out_(path) {
    if (!out_) throw Error(ErrorKind::Config, "cannot write " + path.string());
    out_ << "# config_hash=" << cfg.hash() << " seed=" << cfg.seed << '\n';
  }
  Csv& row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
    out_ << '\n';
    return *this;
  }

 private:
  std::ofstream out_;
};

std::string num(double v) { return exact_decimal(v); }

json comparison(const Evaluated& a, const Evaluated& b, const Eigen::VectorXd& probs) {
  const auto d = paired_difference(a.total(), a.penalty, b.total(), b.penalty, probs);
  return {{"lower", a.plan.label},
          {"higher", b.plan.label},
          {"difference", d.difference},
          {"standard_error", d.standard_error},
          {"holds_at_2sigma", d.not_worse_at_2sigma()}};
}

void report_stage(const RunConfig& cfg, const PipelineLog& log) {
  const auto in = load_inputs(cfg);
  const auto plan = planned_schedules(cfg, in.dispatch_case);
  const auto m = read_model(cfg);
  const auto test = read_stamped_scenarios(cfg, test_scenario_path(cfg), Stage::Generate);

  std::vector<Evaluated> ev;
  for (const auto& s : plan) {
    const auto ep = evaluation_path(cfg, s.label);
    const auto ej = read_json(ep, Stage::Evaluate);
    check_stamp(cfg, ej, ep);
    const auto sj = read_json(solution_path(cfg, s.label), Stage::Dispatch);
    const auto pen = ej.at("scenario_penalty").get<std::vector<double>>();
    ev.push_back({s, ej.at("report"),
                  Eigen::Map<const Eigen::VectorXd>(pen.data(), static_cast<Eigen::Index>(pen.size())),
                  dispatch_solution_from_json(sj.at("solution"))});
  }
  auto find = [&](const std::string& label) -> const Evaluated* {
    for (const auto& e : ev)
      if (e.plan.label == label) return &e;
    return nullptr;
  };

  const auto dir = report_dir(cfg);
  fs::create_directories(dir);
  json summary = stamp(cfg);
  summary["name"] = cfg.name;
  summary["config"] = cfg.canonical();
  summary["test_scenarios"] = test.scenarios;

  {
    Csv csv(dir / "costs.csv", cfg);
    csv.row({"schedule", "mode", "fuel", "reserve", "load_shedding", "curtailment", "total", "standard_error"});
    json costs = json::array();
    for (const auto& e : ev) {
      const auto& r = e.report;
      csv.row({e.plan.label, to_string(e.plan.mode), num(r.at("fuel")), num(r.at("reserve")),
               num(r.at("load_shedding")), num(r.at("curtailment")), num(r.at("total")), num(r.at("standard_error"))});
      costs.push_back({{"schedule", e.plan.label},
                       {"fuel", r.at("fuel")},
                       {"reserve", r.at("reserve")},
                       {"load_shedding", r.at("load_shedding")},
                       {"curtailment", r.at("curtailment")},
                       {"total", r.at("total")},
                       {"standard_error", r.at("standard_error")}});
    }
    summary["costs"] = costs;
  }

  json checks = json::array();
  auto compare = [&](const std::string& lo, const std::string& hi) {
    const auto *a = find(lo), *b = find(hi);
    if (a && b) checks.push_back(comparison(*a, *b, test.probabilities));
  };
  if (cfg.compare_cases) {
    const auto n = std::to_string(*std::max_element(cfg.reduced_targets.begin(), cfg.reduced_targets.end()));
    compare("distribution", "distribution_forecast_lines");
    compare("scenario_dynamic_" + n, "scenario_static_" + n);
    compare("scenario_static_" + n, "scenario_independent_" + n);
  }

  // Reduced-set sweep of the configured source, largest set last.
  if (cfg.mode == RunMode::ScenarioEd && cfg.reduced_targets.size() > 1) {
    auto targets = cfg.reduced_targets;
    std::sort(targets.begin(), targets.end());
    Csv csv(dir / "reduction.csv", cfg);
    csv.row({"scenarios", "total", "standard_error", "change_from_previous", "paired_standard_error"});
    const Evaluated* prev = nullptr;
    for (auto n : targets) {
      const auto* e = find(std::string("scenario_") + to_string(cfg.source) + "_" + std::to_string(n));
      if (!e) continue;
      std::string change, se;
      if (prev) {
        const auto d = paired_difference(e->total(), e->penalty, prev->total(), prev->penalty, test.probabilities);
        change = num(d.difference);
        se = num(d.standard_error);
        checks.push_back(comparison(*e, *prev, test.probabilities));
      }
      csv.row({std::to_string(n), num(e->total()), num(e->report.at("standard_error")), change, se});
      prev = e;
    }
    if (const auto* d = find("distribution"); d && prev)
      summary["largest_reduced_vs_distribution"] = prev->total() / d->total() - 1.0;
  }

  if (!cfg.curtailment_sweep.empty()) {
    auto sweep = cfg.curtailment_sweep;
    std::sort(sweep.begin(), sweep.end());
    std::vector<std::string> header{"interval", "time"};
    std::vector<const Evaluated*> cols;
    for (double v : sweep) {
      header.push_back("c_rec_" + num(v));
      cols.push_back(find("distribution_crec" + number_label(v)));
    }
    Csv csv(dir / "confidence.csv", cfg);
    csv.row(header);
    json table = json::array();
    for (Eigen::Index t = 0; t < in.dispatch_case.horizon; ++t) {
      std::vector<std::string> row{std::to_string(t),
                                   format_timestamp(in.data.timestamps[static_cast<std::size_t>(in.origin_index + t)])};
      json jr = json::array();
      for (const auto* e : cols) {
        const double level = e->solution.confidence(t);
        row.push_back(num(level));
        jr.push_back(level);
      }
      csv.row(row);
      table.push_back(jr);
    }
    summary["confidence"] = {{"c_rec", sweep}, {"levels", table}};
  }
  summary["comparisons"] = checks;

  // Plot series: forecast, a 5-95% band of the conditional total and the
  // primary schedule.
  {
    const auto& primary = ev.front();
    Csv csv(dir / "series.csv", cfg);
    csv.row({"interval", "time", "forecast_mw", "quantile_05_mw", "median_mw", "quantile_95_mw", "lower_cover_mw",
             "upper_cover_mw", "generation_mw", "reserve_up_mw", "reserve_down_mw", "load_mw"});
    const auto& plants = in.data.plants;
    for (Eigen::Index t = 0; t < in.dispatch_case.horizon; ++t) {
      double fc = 0.0;
      for (std::size_t j = 0; j < plants.size(); ++j) fc += plants[j].capacity_mw * in.forecasts(t, static_cast<Eigen::Index>(j));
      const auto cond = conditional_sum(m.copula, in.forecasts.row(t).transpose());
      const double s = cond.scale_mw();
      const auto& sol = primary.solution;
      const bool covers = sol.lower_cover.size() == sol.horizon();
      csv.row({std::to_string(t), format_timestamp(in.data.timestamps[static_cast<std::size_t>(in.origin_index + t)]),
               num(fc), num(s * cond.quantile(0.05)), num(s * cond.quantile(0.5)), num(s * cond.quantile(0.95)),
               covers ? num(sol.lower_cover(t)) : "", covers ? num(sol.upper_cover(t)) : "",
               num(sol.p.col(t).sum()), num(sol.r_up.col(t).sum()), num(sol.r_down.col(t).sum()),
               num(in.dispatch_case.load_mw(t))});
    }
    summary["primary"] = primary.plan.label;
  }

  write_json(dir / "report.json", summary);
  note(log, Stage::Report, "wrote " + std::to_string(ev.size()) + " schedules, " + std::to_string(checks.size()) +
                               " comparisons");
}

}  // namespace

void run_stage(Stage stage, const RunConfig& cfg, const PipelineLog& log) {
  try {
    cfg.validate();
    switch (stage) {
      case Stage::Fit: fit_stage(cfg, log); break;
      case Stage::Generate: generate_stage(cfg, log); break;
      case Stage::Reduce: reduce_stage(cfg, log); break;
      case Stage::Dispatch: dispatch_stage(cfg, log); break;
      case Stage::Evaluate: evaluate_stage(cfg, log); break;
      case Stage::Report: report_stage(cfg, log); break;
    }
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  } catch (const fs::filesystem_error& e) {
    throw StageError(stage, Error(ErrorKind::Config, e.what()));
  } catch (const nlohmann::json::exception& e) {
    throw StageError(stage, Error(ErrorKind::Format, e.what()));
  }
}

void run_pipeline(const RunConfig& cfg, const PipelineLog& log) {
  for (auto s : all_stages()) run_stage(s, cfg, log);
}

}  // namespace rted
