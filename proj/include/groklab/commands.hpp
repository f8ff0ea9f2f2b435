#pragma once

// The five command-line operations, writing their artifacts under an output
// directory. Each returns the relative paths it wrote; the caller adds the
// manifest.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "groklab/config.hpp"

namespace groklab {

struct CommandResult {
  std::vector<std::string> outputs;  // relative to the output directory
  std::vector<std::string> messages;  // lines for stdout
  std::vector<std::string> warnings;  // lines for stderr
};

/// Seed stream for the initial flow embeddings.
inline constexpr std::uint64_t kFlowInitStream = 101;

/// Initial embeddings of an effective-theory flow: the seeded uniform
/// initialization configured in settings.flow.
Representation flow_initial(const Settings& settings);

/// Trajectory CSV (and parallelograms.txt) for the configured split.
CommandResult cmd_efftheory(const Settings& settings, const std::filesystem::path& out);
/// critical.csv from the Monte-Carlo nullity test.
CommandResult cmd_mc_critical(const Settings& settings, const std::filesystem::path& out);
/// metrics.csv and run.json; reports the phase.
CommandResult cmd_train(const Settings& settings, const std::filesystem::path& out);
/// runs.csv, aggregate.csv and sweep.json. Without `resume` an existing
/// store is discarded first.
CommandResult cmd_sweep(const Settings& settings, const std::filesystem::path& out, bool resume);
/// table.csv (and pca.csv) over every run.json found below the inputs.
/// Throws ConfigError when no run records are found.
CommandResult cmd_analyze(const Settings& settings, const std::vector<std::filesystem::path>& inputs,
                          const std::filesystem::path& out, bool with_pca);

/// Atomically writes manifest.json: command, resolved config, seed, version,
/// outputs and UTC timestamps.
void write_manifest(const std::filesystem::path& out, const std::string& command, const Settings& settings,
                    const std::vector<std::string>& outputs, const std::string& started, const std::string& finished);

/// Current UTC time as ISO 8601.
std::string utc_timestamp();

}  // namespace groklab
