// pidrl: fleet generation, training, baseline tuning and evaluation.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pidrl/commands.hpp"
#include "pidrl/config.hpp"
#include "pidrl/io.hpp"

namespace fs = std::filesystem;
using namespace pidrl;

namespace {

struct Cli {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string out;
  bool strict = false;
  bool quiet = false;

  std::string fleet_dir;
  std::optional<int> n_train;
  std::optional<int> n_test;
  std::optional<std::int64_t> max_episodes;
  std::optional<int> batch_size;
  std::optional<int> points;
  std::optional<int> events;
  std::vector<double> temperatures;
  std::vector<double> margins;
  std::string snapshot;
  std::string gains;
  std::vector<std::string> runs;
};

ExperimentConfig resolve_config(const Cli& cli) {
  ExperimentConfig c = cli.config_path.empty() ? ExperimentConfig{} : load_config(cli.config_path);
  if (cli.seed) c.seed = *cli.seed;
  if (cli.n_train) c.fleet.n_train = *cli.n_train;
  if (cli.n_test) c.fleet.n_test = *cli.n_test;
  if (cli.max_episodes) c.training.ppo.max_episodes = *cli.max_episodes;
  if (cli.batch_size) c.training.ppo.batch_size = *cli.batch_size;
  if (cli.points) c.baseline.points_p = c.baseline.points_i = c.baseline.points_d = *cli.points;
  if (cli.events) c.eval.events = *cli.events;
  if (!cli.margins.empty()) c.eval.margins = cli.margins;
  if (!cli.temperatures.empty()) {
    c.eval.temperatures = cli.temperatures;
    c.eval.sweep_temperatures = cli.temperatures;
  }
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-actuator PID gains by one-step reinforcement learning, with a grid-search "
               "baseline and evaluation harness"};
  app.require_subcommand(1);
  Cli cli;
  app.add_option("--config", cli.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", cli.seed, "Master seed (overrides the config)");
  app.add_option("--workers", cli.workers, "Worker threads")->check(CLI::Range(1, 256));
  app.add_option("--out", cli.out, "Output directory (default <io.out_dir>/<command>)");
  app.add_flag("--strict", cli.strict, "Exit with code 4 on divergence or tuning warnings");
  app.add_flag("-q,--quiet", cli.quiet, "Suppress progress output");

  auto* fleet = app.add_subcommand("fleet", "Sample and write the train/test fleets");
  fleet->add_option("--n-train", cli.n_train, "Train actuators")->check(CLI::PositiveNumber);
  fleet->add_option("--n-test", cli.n_test, "Test actuators")->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train", "Train a policy on the train fleet");
  train->add_option("--max-episodes", cli.max_episodes, "Episode budget")->check(CLI::PositiveNumber);
  train->add_option("--batch-size", cli.batch_size, "Episodes per batch")->check(CLI::PositiveNumber);

  auto* tune = app.add_subcommand("tune-baseline", "Grid-search one generic gain set");
  tune->add_option("--points", cli.points, "Grid points per gain kind")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval", "Evaluate on the test fleet");
  auto* sweep = app.add_subcommand("sweep", "Evaluate across the sweep temperatures");
  for (CLI::App* sub : {eval, sweep}) {
    sub->add_option("--snapshot", cli.snapshot, "Policy snapshot (DRL)")->check(CLI::ExistingFile);
    sub->add_option("--gains", cli.gains, "Baseline gains.json (DEFAULT)")->check(CLI::ExistingFile);
    sub->add_option("--temperatures", cli.temperatures, "Comma-separated temperatures, C")
        ->delimiter(',');
    sub->add_option("--margins", cli.margins, "Comma-separated CDF margins, mm")->delimiter(',');
    sub->add_option("--events", cli.events, "Number of shared events")->check(CLI::PositiveNumber);
  }
  for (CLI::App* sub : {train, tune, eval, sweep}) {
    sub->add_option("--fleet", cli.fleet_dir, "Directory holding the fleet files");
  }

  auto* report = app.add_subcommand("report", "Combine summaries of eval directories");
  report->add_option("runs", cli.runs, "Eval run directories")->required();

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    RunContext ctx;
    ctx.config = resolve_config(cli);
    ctx.workers = cli.workers;
    ctx.quiet = cli.quiet;
    const std::string name = cmd->get_name();
    ctx.out = cli.out.empty() ? fs::path(ctx.config.out_dir) / name : fs::path(cli.out);
    const fs::path fleet_dir =
        cli.fleet_dir.empty() ? fs::path(ctx.config.out_dir) / "fleet" : fs::path(cli.fleet_dir);

    CommandOutcome outcome;
    if (cmd == fleet) {
      outcome = cmd_fleet(ctx);
    } else if (cmd == train) {
      outcome = cmd_train(ctx, fleet_dir);
    } else if (cmd == tune) {
      outcome = cmd_tune_baseline(ctx, fleet_dir);
    } else if (cmd == eval || cmd == sweep) {
      EvalInputs in;
      in.fleet_dir = fleet_dir;
      if (!cli.snapshot.empty()) in.snapshot = cli.snapshot;
      if (!cli.gains.empty()) in.gains = cli.gains;
      const auto& temps =
          cmd == eval ? ctx.config.eval.temperatures : ctx.config.eval.sweep_temperatures;
      outcome = cmd_eval(ctx, in, temps);
    } else {
      std::vector<fs::path> runs(cli.runs.begin(), cli.runs.end());
      outcome = cmd_report(ctx, runs);
    }
    if (cli.strict && !outcome.warnings.empty()) {
      std::cerr << "pidrl: " << outcome.warnings.size() << " warning(s) with --strict\n";
      return kExitStrictWarning;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "pidrl: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "pidrl: missing input: " << e.what() << '\n';
    return kExitMissingInput;
  } catch (const InvalidArgument& e) {
    std::cerr << "pidrl: invalid input: " << e.what() << '\n';
    return kExitMissingInput;
  } catch (const std::exception& e) {
    std::cerr << "pidrl: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
