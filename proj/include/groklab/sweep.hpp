#pragma once

// Hyperparameter grids producing phase-diagram data.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "groklab/trainer.hpp"

namespace groklab {

struct Axis {
  std::string name;  // dec_lr, dec_wd, repr_lr, repr_wd, batch_size, init_scale
  std::vector<double> values;
  bool log_scale = false;

  /// count values log-spaced from lo to hi inclusive.
  static Axis log_spaced(std::string name, double lo, double hi, int count);
  /// count values evenly spaced from lo to hi inclusive.
  static Axis linear(std::string name, double lo, double hi, int count);
};

/// Sets the named hyperparameter. Throws ConfigError for unknown names.
void apply_axis(ModelConfig& model, OptimConfig& optim, const std::string& name, double value);
bool is_axis_name(const std::string& name);

struct GridSpec {
  Axis x;
  Axis y;
  ModelConfig model;
  OptimConfig optim;
  Fraction fraction = Fraction::exact(45, 55);
  std::uint64_t master_seed = 0;
  int seeds = 3;
  long gap_threshold = 1000;
  /// 0 picks the hardware concurrency, capped by GROKLAB_WORKERS.
  int workers = 0;

  void validate() const;
  /// Seed of the k-th replicate; identical in every cell.
  std::uint64_t replicate_seed(int k) const;
};

struct SweepRun {
  double x = 0.0;
  double y = 0.0;
  std::uint64_t seed = 0;
  std::optional<Phase> phase;  // empty when the run failed
  std::optional<long> step_train90;
  std::optional<long> step_val90;
  std::string error;
};

struct PhaseCell {
  double x = 0.0;
  double y = 0.0;
  std::vector<SweepRun> runs;  // replicate order
  std::optional<Phase> modal_phase;
  std::optional<double> median_train90;
  std::optional<double> median_val90;
};

struct SweepOptions {
  /// runs.csv store; rows already present are reused instead of retrained.
  std::optional<std::filesystem::path> store;
  std::function<void(const SweepRun&)> on_run_done;
};

struct SweepOutcome {
  std::vector<PhaseCell> cells;  // y-major grid order: for y, for x
  int runs_executed = 0;
  int runs_reused = 0;
};

/// Trains every (cell, replicate), classifies phases and aggregates per cell.
/// Failed runs are recorded and never abort the sweep. With a store the
/// final file is rewritten in grid order, so reruns reproduce it exactly.
SweepOutcome run_sweep(const GridSpec& grid, const SweepOptions& options = {});

/// Most frequent phase; ties go to the earlier of comprehension, grokking,
/// memorization, confusion.
std::optional<Phase> modal_phase(const std::vector<SweepRun>& runs);

inline constexpr std::string_view kSweepRunsHeader = "x,y,seed,phase,step_train90,step_val90";
inline constexpr std::string_view kSweepAggregateHeader = "x,y,modal_phase,median_train90,median_val90";

std::string sweep_runs_csv(const std::vector<PhaseCell>& cells);
std::string sweep_aggregate_csv(const std::vector<PhaseCell>& cells);

/// Worker count: requested (0 = hardware), capped by GROKLAB_WORKERS when set.
int resolve_workers(int requested);

}  // namespace groklab
