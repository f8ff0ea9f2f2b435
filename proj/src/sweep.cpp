#include "groklab/sweep.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "groklab/error.hpp"
#include "groklab/io.hpp"
#include "groklab/rng.hpp"

namespace groklab {

namespace {

const std::vector<std::string> kAxisNames = {"dec_lr", "dec_wd", "repr_lr", "repr_wd", "batch_size", "init_scale"};

std::string optional_field(const std::optional<long>& v) { return v ? std::to_string(*v) : std::string(); }
std::string optional_field(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::string run_line(const SweepRun& r) {
  std::string phase = r.phase ? std::string(to_string(*r.phase)) : std::string("error");
  return format_number(r.x) + "," + format_number(r.y) + "," + std::to_string(r.seed) + "," + phase + "," +
         optional_field(r.step_train90) + "," + optional_field(r.step_val90) + "\n";
}

using RunKey = std::tuple<std::string, std::string, std::uint64_t>;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::map<RunKey, SweepRun> load_store(const std::filesystem::path& path) {
  std::map<RunKey, SweepRun> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  if (!std::getline(in, line) || line != kSweepRunsHeader) throw ConfigError("sweep store has an unexpected header: " + path.string());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) continue;  // truncated append from an interrupted sweep
    SweepRun r;
    r.x = std::stod(f[0]);
    r.y = std::stod(f[1]);
    r.seed = std::stoull(f[2]);
    if (f[3] != "error") r.phase = parse_phase(f[3]);
    if (!f[4].empty()) r.step_train90 = std::stol(f[4]);
    if (!f[5].empty()) r.step_val90 = std::stol(f[5]);
    if (f[3] == "error") r.error = "recorded failure";
    out[{f[0], f[1], r.seed}] = r;
  }
  return out;
}

std::optional<double> median(std::vector<long> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  if (n % 2 == 1) return static_cast<double>(v[n / 2]);
  return 0.5 * (static_cast<double>(v[n / 2 - 1]) + static_cast<double>(v[n / 2]));
}

}  // namespace

Axis Axis::log_spaced(std::string name, double lo, double hi, int count) {
  if (count < 1 || !(lo > 0.0) || !(hi > 0.0)) throw ConfigError("log axis needs count >= 1 and positive bounds");
  Axis a{std::move(name), {}, true};
  for (int k = 0; k < count; ++k) {
    const double u = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
    // Endpoints exact; interior points via powers of ten so decades stay clean.
    if (k == 0) a.values.push_back(lo);
    else if (k == count - 1) a.values.push_back(hi);
    else a.values.push_back(std::pow(10.0, std::log10(lo) + u * (std::log10(hi) - std::log10(lo))));
  }
  return a;
}

Axis Axis::linear(std::string name, double lo, double hi, int count) {
  if (count < 1) throw ConfigError("linear axis needs count >= 1");
  Axis a{std::move(name), {}, false};
  for (int k = 0; k < count; ++k) {
    const double u = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
    a.values.push_back(lo + u * (hi - lo));
  }
  return a;
}

bool is_axis_name(const std::string& name) {
  return std::find(kAxisNames.begin(), kAxisNames.end(), name) != kAxisNames.end();
}

void apply_axis(ModelConfig& model, OptimConfig& optim, const std::string& name, double value) {
  if (name == "dec_lr") optim.dec_lr = value;
  else if (name == "dec_wd") optim.dec_wd = value;
  else if (name == "repr_lr") optim.repr_lr = value;
  else if (name == "repr_wd") optim.repr_wd = value;
  else if (name == "batch_size") optim.batch_size = static_cast<int>(std::lround(value));
  else if (name == "init_scale") model.init_scale = value;
  else throw ConfigError("unknown sweep axis '" + name + "'");
}

void GridSpec::validate() const {
  for (const Axis* a : {&x, &y}) {
    if (!is_axis_name(a->name)) throw ConfigError("unknown sweep axis '" + a->name + "'");
    if (a->values.empty()) throw ConfigError("sweep axis '" + a->name + "' has no values");
  }
  if (seeds < 1) throw ConfigError("sweep.seeds must be >= 1");
  model.validate();
  optim.validate();
}

std::uint64_t GridSpec::replicate_seed(int k) const { return derive_seed(master_seed, static_cast<std::uint64_t>(k)); }

std::optional<Phase> modal_phase(const std::vector<SweepRun>& runs) {
  std::array<int, 4> counts{};
  for (const auto& r : runs)
    if (r.phase) ++counts[static_cast<std::size_t>(*r.phase)];
  const auto best = std::max_element(counts.begin(), counts.end());
  if (*best == 0) return std::nullopt;
  return static_cast<Phase>(best - counts.begin());
}

int resolve_workers(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("GROKLAB_WORKERS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, n);
}

SweepOutcome run_sweep(const GridSpec& grid, const SweepOptions& options) {
  grid.validate();

  struct Job {
    std::size_t cell;
    int replicate;
  };
  SweepOutcome out;
  std::vector<Job> jobs;
  std::map<RunKey, SweepRun> stored;
  if (options.store) stored = load_store(*options.store);

  for (double yv : grid.y.values)
    for (double xv : grid.x.values) {
      PhaseCell cell;
      cell.x = xv;
      cell.y = yv;
      cell.runs.resize(static_cast<std::size_t>(grid.seeds));
      out.cells.push_back(std::move(cell));
    }
  for (std::size_t c = 0; c < out.cells.size(); ++c)
    for (int k = 0; k < grid.seeds; ++k) {
      auto& slot = out.cells[c].runs[static_cast<std::size_t>(k)];
      slot.x = out.cells[c].x;
      slot.y = out.cells[c].y;
      slot.seed = grid.replicate_seed(k);
      auto it = stored.find({format_number(slot.x), format_number(slot.y), slot.seed});
      if (it != stored.end()) {
        slot = it->second;
        ++out.runs_reused;
      } else {
        jobs.push_back({c, k});
      }
    }

  std::ofstream append;
  if (options.store) {
    const bool fresh = !std::filesystem::exists(*options.store);
    if (options.store->has_parent_path()) std::filesystem::create_directories(options.store->parent_path());
    append.open(*options.store, std::ios::app);
    if (!append) throw Error("cannot open sweep store " + options.store->string());
    if (fresh) append << kSweepRunsHeader << '\n' << std::flush;
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= jobs.size()) return;
      const Job job = jobs[idx];
      SweepRun result = out.cells[job.cell].runs[static_cast<std::size_t>(job.replicate)];
      try {
        ModelConfig model = grid.model;
        OptimConfig optim = grid.optim;
        apply_axis(model, optim, grid.x.name, result.x);
        apply_axis(model, optim, grid.y.name, result.y);
        optim.seed = result.seed;
        const auto split_data = split(model.task, grid.fraction, result.seed);
        const auto record = train(model, optim, split_data);
        result.step_train90 = record.step_train90;
        result.step_val90 = record.step_val90;
        result.phase = classify_phase(record, grid.gap_threshold);
        if (!result.phase) result.error = "no validation data";
      } catch (const std::exception& e) {
        result.phase.reset();
        result.error = e.what();
      }
      std::lock_guard lock(mu);
      out.cells[job.cell].runs[static_cast<std::size_t>(job.replicate)] = result;
      if (append.is_open()) append << run_line(result) << std::flush;
      if (options.on_run_done) options.on_run_done(result);
    }
  };

  const int n_workers = std::min<int>(resolve_workers(grid.workers), static_cast<int>(std::max<std::size_t>(jobs.size(), 1)));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  out.runs_executed = static_cast<int>(jobs.size());

  for (auto& cell : out.cells) {
    cell.modal_phase = modal_phase(cell.runs);
    std::vector<long> t90, v90;
    for (const auto& r : cell.runs) {
      if (r.step_train90) t90.push_back(*r.step_train90);
      if (r.step_val90) v90.push_back(*r.step_val90);
    }
    cell.median_train90 = median(t90);
    cell.median_val90 = median(v90);
  }

  if (options.store) {
    append.close();
    write_file_atomic(*options.store, sweep_runs_csv(out.cells));
  }
  return out;
}

std::string sweep_runs_csv(const std::vector<PhaseCell>& cells) {
  std::string s(kSweepRunsHeader);
  s += '\n';
  for (const auto& c : cells)
    for (const auto& r : c.runs) s += run_line(r);
  return s;
}

std::string sweep_aggregate_csv(const std::vector<PhaseCell>& cells) {
  std::string s(kSweepAggregateHeader);
  s += '\n';
  for (const auto& c : cells) {
    s += format_number(c.x) + "," + format_number(c.y) + "," +
         (c.modal_phase ? std::string(to_string(*c.modal_phase)) : std::string("error")) + "," +
         optional_field(c.median_train90) + "," + optional_field(c.median_val90) + "\n";
  }
  return s;
}

}  // namespace groklab
