#pragma once

// Flat JSON configuration with dotted keys ("optim.dec_lr": 1e-3). Nested
// objects are flattened on load, so {"optim": {"dec_lr": 1e-3}} is accepted
// too. Unknown keys are configuration errors.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "groklab/efftheory.hpp"
#include "groklab/sweep.hpp"
#include "groklab/trainer.hpp"

namespace groklab {

using FlatConfig = std::map<std::string, nlohmann::json>;

/// Flattens nested objects into dotted keys. Throws ConfigError unless `j` is an object.
FlatConfig flatten_config(const nlohmann::json& j);
/// Reads and flattens a JSON file. Throws ConfigError on I/O or parse failure.
FlatConfig load_config(const std::filesystem::path& path);
/// Sets `key` from command-line text: valid JSON is used as-is, anything else as a string.
void set_from_text(FlatConfig& config, const std::string& key, const std::string& text);

struct FlowSettings {
  FlowOptions options;
  double init_scale = 1.0;
  /// Shift the initial embeddings to zero mean (C = 0).
  bool centered = true;
  int dim = 1;
};

struct McSettings {
  std::vector<double> fractions;  // default 0.1:1.0:19
  int trials = 500;
};

struct SweepSettings {
  /// decoder (dec_lr x dec_wd), competition (dec_lr x repr_lr), batch_size,
  /// init_scale or repr_wd; each with dec_lr on the x axis.
  std::string preset = "decoder";
  /// desk (2e4 steps) or full (1e5 steps); sets optim.max_steps unless given.
  std::string scale = "desk";
  int size = 5;  // values per preset axis
  int seeds = 3;
  long gap_threshold = 1000;
  int workers = 0;
};

struct Settings {
  std::optional<std::uint64_t> seed;
  ModelConfig model;
  OptimConfig optim;
  Fraction fraction = Fraction::exact(45, 55);
  FlowSettings flow;
  McSettings mc;
  SweepSettings sweep;
  std::optional<Axis> x_axis;  // explicit sweep axes override the preset
  std::optional<Axis> y_axis;
  double delta = 0.01;
  bool max_steps_given = false;

  /// Throws ConfigError("missing required key 'seed'") when unset.
  std::uint64_t master_seed() const;
};

/// Applies every key; throws ConfigError naming the first unknown or ill-typed key.
Settings parse_settings(const FlatConfig& config);

/// The complete resolved configuration, defaults included, as flat dotted keys.
nlohmann::json resolved_config(const Settings& settings);

/// "a:b:n" -> n evenly spaced values from a to b inclusive.
std::vector<double> parse_range(const std::string& text);

/// Grid for the configured preset (or explicit axes) with the base model/optim.
GridSpec make_grid(const Settings& settings);

}  // namespace groklab
