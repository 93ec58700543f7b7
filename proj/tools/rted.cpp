// rted: batch front end for fit -> generate -> reduce -> dispatch -> evaluate -> report.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rted/data_ingest.hpp"
#include "rted/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  bool json = false;
  std::optional<int> threads;
  std::optional<std::string> data_dir, output_dir;
  std::optional<long> n_scenarios, burn_in;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "run config (JSON)")->required();
  sub->add_flag("--json", o.json, "log one JSON object per line");
  sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--data-dir", o.data_dir, "corpus directory or manifest");
  sub->add_option("--output-dir", o.output_dir, "artifact directory");
  sub->add_option("--n-scenarios", o.n_scenarios, "scenarios to generate")->check(CLI::PositiveNumber);
  sub->add_option("--burn-in", o.burn_in, "Gibbs burn-in sweeps")->check(CLI::NonNegativeNumber);
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("--epsilon", o.epsilon, "fixed temporal range parameter in intervals (skips tuning)");
}

rted::RunConfig apply(const Overrides& o) {
  auto cfg = rted::load_run_config(o.config);
  // Command-line paths are relative to the working directory, not the config.
  auto here = [](const std::string& p) { return std::filesystem::absolute(p); };
  if (o.threads) cfg.threads = *o.threads;
  if (o.data_dir) cfg.data_dir = here(*o.data_dir);
  if (o.output_dir) cfg.output_dir = here(*o.output_dir);
  if (o.n_scenarios) cfg.n_scenarios = *o.n_scenarios;
  if (o.burn_in) cfg.burn_in = *o.burn_in;
  if (o.seed) cfg.seed = *o.seed;
  if (o.epsilon) cfg.epsilon = *o.epsilon;
  return cfg;
}

void emit(bool as_json, const std::string& stage, const std::string& level, const std::string& msg,
          const std::string& kind = {}) {
  if (as_json) {
    nlohmann::json j{{"stage", stage}, {"level", level}, {"message", msg}};
    if (!kind.empty()) j["kind"] = kind;
    (level == "error" ? std::cerr : std::cout) << j.dump() << std::endl;
  } else if (level == "error") {
    std::cerr << "rted " << stage << ": " << msg << std::endl;
  } else {
    std::cout << "[" << stage << "] " << msg << std::endl;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic real-time economic dispatch with copula scenarios"};
  app.require_subcommand(1);
  Overrides o;

  struct Command {
    const char* name;
    const char* help;
    std::vector<rted::Stage> stages;
  };
  const std::vector<Command> commands{
      {"fit", "fit marginals, the copula and temporal range parameters", {rted::Stage::Fit}},
      {"generate", "draw optimization and held-out test scenarios", {rted::Stage::Generate}},
      {"reduce", "reduce scenario sets to the configured targets", {rted::Stage::Reduce}},
      {"dispatch", "solve the planned dispatch problems", {rted::Stage::Dispatch}},
      {"evaluate", "Monte Carlo evaluation on the held-out scenarios", {rted::Stage::Evaluate}},
      {"report", "cost, reduction and confidence tables plus plot series", {rted::Stage::Report}},
      {"pipeline", "all stages in order", rted::all_stages()},
  };
  std::vector<rted::Stage> chosen;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, o);
    sub->callback([&chosen, &c] { chosen = c.stages; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  rted::RunConfig cfg;
  try {
    cfg = apply(o);
    cfg.validate();
  } catch (const rted::Error& e) {
    emit(o.json, "config", "error", e.what(), rted::to_string(e.kind()));
    return rted::exit_code(e.kind());
  }

  const auto log = [&](rted::Stage s, const std::string& msg) { emit(o.json, rted::to_string(s), "info", msg); };
  for (auto stage : chosen) {
    try {
      rted::run_stage(stage, cfg, log);
    } catch (const rted::Error& e) {
      emit(o.json, rted::to_string(stage), "error", e.what(), rted::to_string(e.kind()));
      return rted::exit_code(e.kind());
    } catch (const std::exception& e) {
      emit(o.json, rted::to_string(stage), "error", e.what(), "internal");
      return 1;
    }
  }
  return 0;
}
