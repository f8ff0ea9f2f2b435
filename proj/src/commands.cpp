#include "groklab/commands.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <sstream>

#include "groklab/analysis.hpp"
#include "groklab/error.hpp"
#include "groklab/io.hpp"
#include "groklab/lintheory.hpp"
#include "groklab/rng.hpp"

namespace groklab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string steps_text(const std::optional<long>& v) { return v ? std::to_string(*v) : std::string("never"); }

std::vector<fs::path> find_run_records(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_regular_file(in)) {
      out.push_back(in);
      continue;
    }
    if (!fs::is_directory(in)) throw ConfigError("input does not exist: " + in.string());
    for (const auto& entry : fs::recursive_directory_iterator(in))
      if (entry.is_regular_file() && entry.path().filename() == "run.json") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

json axis_json(const Axis& a) {
  return {{"name", a.name}, {"values", a.values}, {"scale", a.log_scale ? "log" : "linear"}};
}

}  // namespace

Representation flow_initial(const Settings& s) {
  if (!s.model.task.commutative()) throw ConfigError("the effective theory needs a commutative task");
  return uniform_init(s.model.task.p(), s.flow.dim, s.flow.init_scale, derive_seed(s.master_seed(), kFlowInitStream),
                      s.flow.centered);
}

CommandResult cmd_efftheory(const Settings& s, const fs::path& out) {
  CommandResult r;
  const auto data = split(s.model.task, s.fraction, s.master_seed());
  const auto p0 = permissible_set(data.train, s.model.task);
  const auto result = flow(flow_initial(s), p0, s.flow.options);

  write_file_atomic(out / "trajectory.csv", trajectory_csv(result));
  r.outputs.push_back("trajectory.csv");
  std::ostringstream text;
  write_text(text, p0);
  write_file_atomic(out / "parallelograms.txt", text.str());
  r.outputs.push_back("parallelograms.txt");
  if (s.flow.options.keep_embeddings) {
    write_file_atomic(out / "embeddings.csv", embedding_snapshots_csv(result));
    r.outputs.push_back("embeddings.csv");
  }

  const int null = nullity(build_A(p0, s.model.task.p()));
  r.messages.push_back("parallelograms: " + std::to_string(p0.size()) + ", nullity: " + std::to_string(null));
  r.messages.push_back("final rqi: " + format_number(result.snapshots.back().rqi) +
                       ", first step with rqi > " + format_number(s.flow.options.rqi_threshold) + ": " +
                       (result.first_rqi_step < 0 ? std::string("never") : std::to_string(result.first_rqi_step)));
  return r;
}

CommandResult cmd_mc_critical(const Settings& s, const fs::path& out) {
  CommandResult r;
  const auto points = critical_fraction_mc(s.model.task, s.mc.fractions, s.mc.trials, s.master_seed());
  write_file_atomic(out / "critical.csv", critical_csv(points));
  r.outputs.push_back("critical.csv");
  for (std::size_t k = 1; k < points.size(); ++k) {
    if (points[k - 1].probability < 0.5 && points[k].probability >= 0.5) {
      r.messages.push_back("probability crosses 0.5 between fractions " + format_number(points[k - 1].fraction) +
                           " and " + format_number(points[k].fraction));
      break;
    }
  }
  return r;
}

CommandResult cmd_train(const Settings& s, const fs::path& out) {
  CommandResult r;
  OptimConfig optim = s.optim;
  optim.seed = s.master_seed();
  const auto data = split(s.model.task, s.fraction, optim.seed);
  const auto record = train(s.model, optim, data);

  write_file_atomic(out / "metrics.csv", metrics_csv(record));
  r.outputs.push_back("metrics.csv");
  write_file_atomic(out / "run.json", run_record_json(record).dump(1) + "\n");
  r.outputs.push_back("run.json");

  r.messages.push_back("steps: " + std::to_string(record.steps_run) + (record.early_stopped ? " (early stop)" : ""));
  r.messages.push_back("train90: " + steps_text(record.step_train90) + ", val90: " + steps_text(record.step_val90));
  r.messages.push_back("final train acc: " + format_number(record.final_train_acc) +
                       ", val acc: " + format_number(record.final_val_acc));
  for (const auto& a : record.anomalies) r.warnings.push_back("warning: " + a);
  if (const auto phase = classify_phase(record)) {
    r.messages.push_back("phase: " + std::string(to_string(*phase)));
  } else {
    r.warnings.push_back("warning: no validation data (fraction 1); phase not classified");
  }
  return r;
}

CommandResult cmd_sweep(const Settings& s, const fs::path& out, bool resume) {
  CommandResult r;
  const GridSpec grid = make_grid(s);
  const fs::path store = out / "runs.csv";
  if (!resume && fs::exists(store)) fs::remove(store);

  SweepOptions options;
  options.store = store;
  const auto outcome = run_sweep(grid, options);

  write_file_atomic(out / "aggregate.csv", sweep_aggregate_csv(outcome.cells));
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < grid.seeds; ++k) seeds.push_back(grid.replicate_seed(k));
  json manifest = {{"version", std::string(version_string())},
                   {"config", resolved_config(s)},
                   {"grid",
                    {{"x", axis_json(grid.x)},
                     {"y", axis_json(grid.y)},
                     {"seeds", seeds},
                     {"fraction", grid.fraction.to_string()},
                     {"max_steps", grid.optim.max_steps},
                     {"gap_threshold", grid.gap_threshold}}},
                   {"outputs", {"runs.csv", "aggregate.csv"}}};
  write_file_atomic(out / "sweep.json", manifest.dump(2) + "\n");
  r.outputs = {"runs.csv", "aggregate.csv", "sweep.json"};

  int failed = 0;
  for (const auto& c : outcome.cells)
    for (const auto& run : c.runs)
      if (!run.phase) ++failed;
  r.messages.push_back("runs executed: " + std::to_string(outcome.runs_executed) +
                       ", reused: " + std::to_string(outcome.runs_reused));
  if (failed) r.warnings.push_back("warning: " + std::to_string(failed) + " runs failed (phase 'error')");
  return r;
}

CommandResult cmd_analyze(const Settings& s, const std::vector<fs::path>& inputs, const fs::path& out, bool with_pca) {
  CommandResult r;
  const auto files = find_run_records(inputs);
  if (files.empty()) throw ConfigError("no run records (run.json) found in the inputs");

  std::vector<RunRecord> runs;
  for (const auto& f : files) {
    try {
      runs.push_back(run_record_from_json(json::parse(read_file(f))));
    } catch (const json::parse_error& e) {
      throw ConfigError("cannot parse " + f.string() + ": " + e.what());
    }
  }
  write_file_atomic(out / "table.csv", table_csv(rqi_accuracy_table(runs, s.delta)));
  r.outputs.push_back("table.csv");

  if (with_pca) {
    std::string csv(kPcaHeader);
    csv += '\n';
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const auto res = pca(flatten(runs[k].embeddings));
      const std::string name = files[k].parent_path().filename().generic_string();
      for (Eigen::Index c = 0; c < res.explained_ratio.size(); ++c)
        csv += name + "," + std::to_string(c) + "," + format_number(res.explained_ratio[c]) + "," +
               format_number(res.entropy) + "," + format_number(res.effective_dim) + "\n";
    }
    write_file_atomic(out / "pca.csv", csv);
    r.outputs.push_back("pca.csv");
  }
  r.messages.push_back("runs analyzed: " + std::to_string(runs.size()));
  return r;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const fs::path& out, const std::string& command, const Settings& s,
                    const std::vector<std::string>& outputs, const std::string& started, const std::string& finished) {
  json j = {{"command", command},
            {"config", resolved_config(s)},
            {"seed", s.seed ? json(*s.seed) : json(nullptr)},
            {"version", std::string(version_string())},
            {"outputs", outputs},
            {"started", started},
            {"finished", finished}};
  write_file_atomic(out / "manifest.json", j.dump(2) + "\n");
}

}  // namespace groklab
