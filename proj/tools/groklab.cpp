// groklab: command-line front end.
//
// Every subcommand reads an optional flat JSON config (--config), then
// --set KEY=VALUE overrides, then the dedicated flags, and writes its
// artifacts plus manifest.json under --out.
//
// Exit codes: 0 success, 1 runtime or numeric failure, 2 configuration error.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "groklab/commands.hpp"
#include "groklab/error.hpp"
#include "groklab/io.hpp"

namespace {

using namespace groklab;

struct Invocation {
  std::string config_path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
  std::string out;
};

void add_common(CLI::App* sub, Invocation& inv, bool needs_seed_flag = true) {
  sub->add_option("-c,--config", inv.config_path, "flat JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--set", inv.sets, "override a config key, KEY=VALUE (repeatable)");
  sub->add_option("-o,--out", inv.out, "output directory")->required();
  if (needs_seed_flag)
    sub->add_option_function<std::string>(
        "--seed", [&inv](const std::string& v) { inv.flags["seed"] = v; }, "master seed (mandatory)");
}

void flag(CLI::App* sub, Invocation& inv, const std::string& name, const std::string& key, const std::string& help) {
  sub->add_option_function<std::string>(name, [&inv, key](const std::string& v) { inv.flags[key] = v; }, help);
}

void add_task_flags(CLI::App* sub, Invocation& inv) {
  flag(sub, inv, "--task", "task.kind", "addition, modular_addition or s3");
  flag(sub, inv, "--p", "task.p", "alphabet size");
  flag(sub, inv, "--fraction", "data.fraction", "training fraction, k/n or decimal");
}

void add_optim_flags(CLI::App* sub, Invocation& inv) {
  flag(sub, inv, "--mode", "model.mode", "regression or classification");
  flag(sub, inv, "--repr-lr", "optim.repr_lr", "embedding learning rate");
  flag(sub, inv, "--dec-lr", "optim.dec_lr", "decoder learning rate");
  flag(sub, inv, "--repr-wd", "optim.repr_wd", "embedding weight decay");
  flag(sub, inv, "--dec-wd", "optim.dec_wd", "decoder weight decay");
  flag(sub, inv, "--batch-size", "optim.batch_size", "minibatch size, 0 or \"full\" for full batch");
  flag(sub, inv, "--max-steps", "optim.max_steps", "step budget");
  flag(sub, inv, "--init-scale", "model.init_scale", "embedding initialization scale");
}

Settings resolve(const Invocation& inv) {
  FlatConfig config;
  if (!inv.config_path.empty()) config = load_config(inv.config_path);
  for (const auto& kv : inv.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    set_from_text(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  for (const auto& [key, value] : inv.flags) set_from_text(config, key, value);
  return parse_settings(config);
}

void report(const CommandResult& r) {
  for (const auto& w : r.warnings) std::cerr << w << '\n';
  for (const auto& m : r.messages) std::cout << m << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"groklab: effective theory, toy-model training and phase-diagram sweeps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(groklab::version_string()));

  Invocation inv;
  bool resume = false;
  bool with_pca = false;
  std::vector<std::string> inputs;

  auto* eff = app.add_subcommand("efftheory", "integrate the effective-theory flow (or, with --fractions, the critical-fraction curve)");
  add_common(eff, inv);
  add_task_flags(eff, inv);
  flag(eff, inv, "--steps", "flow.steps", "Euler steps");
  flag(eff, inv, "--dt", "flow.dt", "Euler step size");
  flag(eff, inv, "--stride", "flow.stride", "snapshot stride");
  flag(eff, inv, "--dynamics", "flow.dynamics", "effective or linear");
  flag(eff, inv, "--fractions", "mc.fractions", "a:b:n fractions for the critical-fraction curve");
  flag(eff, inv, "--trials", "mc.trials", "Monte-Carlo trials per fraction");

  auto* mc = app.add_subcommand("mc-critical", "Monte-Carlo probability that the training set pins the linear structure");
  add_common(mc, inv);
  add_task_flags(mc, inv);
  flag(mc, inv, "--fractions", "mc.fractions", "a:b:n fractions");
  flag(mc, inv, "--trials", "mc.trials", "trials per fraction");

  auto* tr = app.add_subcommand("train", "train the toy encoder-decoder model and classify its phase");
  add_common(tr, inv);
  add_task_flags(tr, inv);
  add_optim_flags(tr, inv);

  auto* sw = app.add_subcommand("sweep", "phase-diagram sweep over a hyperparameter grid");
  add_common(sw, inv);
  add_task_flags(sw, inv);
  add_optim_flags(sw, inv);
  flag(sw, inv, "--preset", "sweep.preset", "decoder, competition, batch_size, init_scale or repr_wd");
  flag(sw, inv, "--scale", "sweep.scale", "desk (2e4 steps) or full (1e5 steps)");
  flag(sw, inv, "--seeds", "sweep.seeds", "seeds per cell");
  flag(sw, inv, "--workers", "sweep.workers", "worker threads (capped by GROKLAB_WORKERS)");
  sw->add_flag("--resume", resume, "reuse runs already in OUT/runs.csv");

  auto* an = app.add_subcommand("analyze", "RQI/accuracy table and PCA over stored runs");
  add_common(an, inv);
  an->add_option("-i,--in", inputs, "run directories, searched recursively for run.json")->required();
  flag(an, inv, "--delta", "analysis.delta", "parallelogram tolerance");
  an->add_flag("--pca", with_pca, "also write pca.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const Settings settings = resolve(inv);
    const std::filesystem::path out = inv.out;
    const std::string started = utc_timestamp();
    CommandResult result;
    std::string command;
    if (eff->parsed()) {
      const bool mc_mode = inv.flags.count("mc.fractions") > 0;
      command = mc_mode ? "efftheory --fractions" : "efftheory";
      result = mc_mode ? cmd_mc_critical(settings, out) : cmd_efftheory(settings, out);
    } else if (mc->parsed()) {
      command = "mc-critical";
      result = cmd_mc_critical(settings, out);
    } else if (tr->parsed()) {
      command = "train";
      result = cmd_train(settings, out);
    } else if (sw->parsed()) {
      command = "sweep";
      result = cmd_sweep(settings, out, resume);
    } else {
      command = "analyze";
      std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
      result = cmd_analyze(settings, paths, out, with_pca);
    }
    write_manifest(out, command, settings, result.outputs, started, utc_timestamp());
    report(result);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
