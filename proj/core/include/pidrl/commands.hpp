#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pidrl/config.hpp"

namespace pidrl {

/// Process exit codes shared by every command.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitMissingInput = 3,
  kExitStrictWarning = 4,
};

struct RunContext {
  ExperimentConfig config;
  std::filesystem::path out;  // output directory for this command
  int workers = 1;
  bool quiet = false;
};

/// Warnings a command wants surfaced; `--strict` turns any into exit code 4.
struct CommandOutcome {
  std::vector<std::string> warnings;
};

inline constexpr const char* kTrainFleetFile = "train_fleet.csv";
inline constexpr const char* kTestFleetFile = "test_fleet.csv";

/// Samples the train/test fleets from the config and writes them.
CommandOutcome cmd_fleet(const RunContext& ctx);

/// Trains a policy on the train fleet found in `fleet_dir`.
CommandOutcome cmd_train(const RunContext& ctx, const std::filesystem::path& fleet_dir);

/// ZN-seeded grid search for one generic gain set.
CommandOutcome cmd_tune_baseline(const RunContext& ctx, const std::filesystem::path& fleet_dir);

struct EvalInputs {
  std::filesystem::path fleet_dir;
  std::optional<std::filesystem::path> snapshot;  // DRL
  std::optional<std::filesystem::path> gains;     // DEFAULT (baseline gains.json)
};

/// Evaluates every given source on the test fleet at each temperature.
CommandOutcome cmd_eval(const RunContext& ctx, const EvalInputs& inputs,
                        const std::vector<double>& temperatures);

/// Side-by-side comparison of the summaries in several eval directories.
CommandOutcome cmd_report(const RunContext& ctx, const std::vector<std::filesystem::path>& runs);

}  // namespace pidrl
