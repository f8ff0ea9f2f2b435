// Acceptance suite: one pass/fail line per criterion.
//
//   groklab_acceptance            run everything
//   groklab_acceptance --only X   run one criterion
//   groklab_acceptance --list     print criterion names

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "groklab/analysis.hpp"
#include "groklab/commands.hpp"
#include "groklab/config.hpp"
#include "groklab/efftheory.hpp"
#include "groklab/io.hpp"
#include "groklab/lintheory.hpp"
#include "groklab/sweep.hpp"
#include "oracles.hpp"

using namespace groklab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

ParallelogramSet train_parallelograms(const TaskSpec& spec, const Fraction& f, std::uint64_t seed) {
  return permissible_set(split(spec, f, seed).train, spec);
}

// Nullity law for p = 4..12.
Outcome nullity_law() {
  const auto t0 = Clock::now();
  std::string bad;
  for (int p = 4; p <= 12; ++p) {
    const int n = nullity(build_A(full_permissible_set(TaskSpec::addition(p))));
    if (n != 2) bad += " p=" + std::to_string(p) + ":" + std::to_string(n);
  }
  const double secs = seconds_since(t0);
  return {bad.empty() && secs < 1.0, "nullity 2 for p=4..12" + (bad.empty() ? "" : ", mismatches" + bad) +
                                          ", " + fmt(secs) + " s"};
}

// Monte-Carlo crossing of P(nullity = 2) through 0.5.
Outcome critical_fraction() {
  const auto t0 = Clock::now();
  std::vector<double> fractions;
  for (int k = 0; k < 19; ++k) fractions.push_back(0.1 + 0.05 * k);
  const auto pts = critical_fraction_mc(TaskSpec::addition(10), fractions, 500, 2024);
  const double secs = seconds_since(t0);
  double crossing = std::nan("");
  for (std::size_t k = 1; k < pts.size(); ++k)
    if (pts[k - 1].probability < 0.5 && pts[k].probability >= 0.5) {
      const double a = pts[k - 1].probability, b = pts[k].probability;
      crossing = pts[k - 1].fraction + (0.5 - a) / (b - a) * (pts[k].fraction - pts[k - 1].fraction);
      break;
    }
  const bool ok = std::abs(crossing - 0.4) <= 0.1 && secs < 60.0;
  return {ok, "crossing at fraction " + fmt(crossing) + " (target 0.4 +- 0.1), " + fmt(secs) + " s"};
}

// Z0 and C drift along the Euler flow, and their first-order decrease with dt.
Outcome conservation() {
  const auto spec = TaskSpec::addition(10);
  const auto p = train_parallelograms(spec, Fraction::parse("45/55"), 1);
  const auto r0 = uniform_init(10, 1, 1.0, derive_seed(1, kFlowInitStream), true);
  auto run = [&](double dt, long steps) {
    FlowOptions o;
    o.dt = dt;
    o.steps = steps;
    o.stride = steps;
    const auto res = flow(r0, p, o);
    // C starts at 0, so its drift is measured relative to the embedding scale sqrt(Z0).
    return std::pair{res.max_z0_drift, res.max_c_drift / std::sqrt(res.initial.z0)};
  };
  const auto [z1, c1] = run(1e-3, 10000);
  const auto [z2, c2] = run(5e-4, 20000);
  const bool small = z1 < 1e-6 && c1 < 1e-6;
  // Drift at rounding level has no truncation error left to shrink.
  constexpr double kRoundoff = 1e-12;
  const bool z_exact = z1 < kRoundoff && z2 < kRoundoff, c_exact = c1 < kRoundoff && c2 < kRoundoff;
  const bool z_order = z_exact || (z2 > 0.0 && z1 / z2 >= 3.0);
  const bool c_order = c_exact || (c2 > 0.0 && c1 / c2 >= 3.0);
  return {small && z_order && c_order,
          "dt=1e-3: Z0 drift " + fmt(z1) + ", C drift " + fmt(c1) + "; halving dt: Z0 ratio " +
              (z_exact ? std::string("roundoff") : fmt(z1 / z2)) + ", C ratio " +
              (c_exact ? std::string("roundoff") : fmt(c1 / c2))};
}

double rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& n) {
  return (a - n).cwiseAbs().maxCoeff() / std::max(1e-8, n.cwiseAbs().maxCoeff());
}

template <class F>
Eigen::VectorXd central_difference(double* x, Eigen::Index n, F loss) {
  const double h = 1e-6;
  Eigen::VectorXd out(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double keep = x[k];
    x[k] = keep + h;
    const double up = loss();
    x[k] = keep - h;
    const double dn = loss();
    x[k] = keep;
    out(k) = (up - dn) / (2 * h);
  }
  return out;
}

double model_error(ToyModel model, const std::vector<Sample>& batch) {
  const auto g = model.loss_and_grads(batch);
  auto loss = [&] { return model.loss_and_grads(batch).loss; };
  const auto ne = central_difference(model.embeddings().data.data(), model.embeddings().data.size(), loss);
  const auto nd = central_difference(model.decoder().params().data(), model.decoder().num_params(), loss);
  const Eigen::VectorXd ge = Eigen::Map<const Eigen::VectorXd>(g.embeddings.data(), g.embeddings.size());
  return std::max(rel_error(ge, ne), rel_error(g.decoder, nd));
}

// Analytic gradients against central differences.
Outcome gradient_oracles() {
  double eff = 0.0, mlp = 0.0, mat = 0.0;
  const auto spec = TaskSpec::addition(10);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto p = train_parallelograms(spec, Fraction::parse("45/55"), s);
    auto r = uniform_init(10, 2, 1.0, s + 1, false);
    const auto g = eff_grad(r, p);
    const auto n = central_difference(r.data.data(), r.data.size(), [&] { return eff_loss(r, p).l_eff; });
    eff = std::max(eff, rel_error(Eigen::Map<const Eigen::VectorXd>(g.data(), g.size()), n));
  }
  for (std::uint64_t s = 0; s < 20; ++s) {
    ModelConfig m;
    m.hidden = {24, 24};
    m.regression_dim = 6;
    m.embedding_dim = 2;
    m.mode = s % 2 ? TrainMode::Classification : TrainMode::Regression;
    m.activation = s % 4 < 2 ? Activation::Tanh : Activation::Relu;
    mlp = std::max(mlp, model_error(ToyModel(m, s), split(spec, Fraction::real(0.3), s).train));
  }
  for (std::uint64_t s = 0; s < 20; ++s) {
    ModelConfig m;
    m.task = TaskSpec::s3();
    m.hidden = {24, 24};
    m.regression_dim = 6;
    m.embedding_dim = 3;
    m.mode = s % 2 ? TrainMode::Classification : TrainMode::Regression;
    mat = std::max(mat, model_error(ToyModel(m, s), split(m.task, Fraction::real(0.5), s).train));
  }
  return {eff < 1e-4 && mlp < 1e-4 && mat < 1e-4,
          "max relative error: eff_grad " + fmt(eff) + ", mlp " + fmt(mlp) + ", matrix mode " + fmt(mat)};
}

// Euler flow reaches RQI > 0.95 within 3 n_h steps, up to a factor of 2.
Outcome spectral_timescale() {
  const auto spec = TaskSpec::addition(10);
  const double dt = 1e-3;
  std::string detail;
  bool ok = true;
  int found = 0;
  for (std::uint64_t seed = 0; found < 3 && seed < 1000; ++seed) {
    const auto p = train_parallelograms(spec, Fraction::parse("45/55"), seed);
    if (nullity(build_A(p, 10)) != 2) continue;
    ++found;
    const auto r0 = uniform_init(10, 1, 1.0, derive_seed(seed, kFlowInitStream), true);
    const auto ts = slowest_timescale(hessian(p, 10, r0.data.squaredNorm()), dt);
    FlowOptions o;
    o.dt = dt;
    o.steps = static_cast<long>(std::ceil(12.0 * ts.n_h));
    o.stride = o.steps;
    const auto res = flow(r0, p, o);
    const double target = 3.0 * ts.n_h;
    const double reached = res.first_rqi_step < 0 ? std::nan("") : static_cast<double>(res.first_rqi_step);
    const bool hit = reached >= target / 2.0 && reached <= target * 2.0;
    ok = ok && hit;
    detail += (detail.empty() ? "" : "; ") + std::string("seed ") + std::to_string(seed) + ": reached " +
              (res.first_rqi_step < 0 ? std::string("never") : std::to_string(res.first_rqi_step)) + " vs 3n_h " +
              fmt(target);
  }
  return {ok && found == 3, detail};
}

// Linear representation has RQI 1; random ones almost never realize a parallelogram.
Outcome rqi_extremes() {
  const auto spec = TaskSpec::addition(10);
  const double lin = rqi(Representation::linear(10, Eigen::VectorXd::Constant(1, 0.4), Eigen::VectorXd::Constant(1, 1.1)), spec);
  int zero = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng rng(s);
    Representation::Storage e(10, 1);
    for (int k = 0; k < 10; ++k) e(k, 0) = rng.normal();
    if (rqi(Representation::vectors(e), spec, {0.01, false}) == 0.0) ++zero;
  }
  return {lin == 1.0 && zero >= 95, "linear RQI " + fmt(lin) + ", random RQI = 0 in " + std::to_string(zero) + "/100"};
}

// Closure bounds on trained runs.
Outcome bounds() {
  int add_ok = 0, s3_ok = 0;
  std::string worst;
  const auto add = TaskSpec::addition(10);
  ModelConfig m;
  OptimConfig o;
  o.max_steps = 3000;
  const std::vector<double> fractions{0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  for (std::size_t f = 0; f < fractions.size(); ++f)
    for (std::uint64_t s = 0; s < 5; ++s) {
      o.seed = 100 + s;
      const auto row = rqi_accuracy_row(train(m, o, split(add, Fraction::real(fractions[f]), o.seed)));
      if (row.rqi <= row.rqi_upper && row.acc_pred <= row.acc_upper)
        ++add_ok;
      else
        worst = "fraction " + fmt(row.fraction) + " seed " + std::to_string(row.seed);
    }
  ModelConfig ms;
  ms.task = TaskSpec::s3();
  ms.embedding_dim = 3;
  for (std::uint64_t s = 0; s < 10; ++s) {
    o.seed = 200 + s;
    const auto row = rqi_accuracy_row(train(ms, o, split(ms.task, Fraction::real(0.5 + 0.04 * s), o.seed)));
    if (row.acc_pred <= row.acc + 1e-12)
      ++s3_ok;
    else
      worst = "S3 seed " + std::to_string(row.seed) + " acc_pred " + fmt(row.acc_pred) + " > acc " + fmt(row.acc);
  }
  return {add_ok == 30 && s3_ok == 10, "addition within bounds " + std::to_string(add_ok) + "/30, S3 lower bound " +
                                           std::to_string(s3_ok) + "/10" + (worst.empty() ? "" : ", failing " + worst)};
}

// Closures against brute-force oracles.
Outcome closure_oracle() {
  Rng rng(31337);
  int lin_ok = 0, s3_ok = 0;
  for (int t = 0; t < 100; ++t) {
    const int p = 5 + t % 4;
    const auto spec = TaskSpec::addition(p);
    const auto d = split(spec, Fraction::real(0.2 + 0.6 * rng.uniform()), rng.next()).train;
    if (oracle::as_set(ideal_closure(d, spec)) == oracle::lstsq_closure(d, spec)) ++lin_ok;
  }
  const auto s3 = TaskSpec::s3();
  for (int t = 0; t < 50; ++t) {
    const auto d = split(s3, Fraction::real(0.2 + 0.6 * rng.uniform()), rng.next()).train;
    if (oracle::as_set(nonabelian_closure(d, s3)) == oracle::s3_assignment_closure(d)) ++s3_ok;
  }
  return {lin_ok == 100 && s3_ok == 50, "ideal_closure = least-squares oracle on " + std::to_string(lin_ok) +
                                            "/100, nonabelian_closure = S3 assignment oracle on " +
                                            std::to_string(s3_ok) + "/50"};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("groklab_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Settings settings_of(FlatConfig c) { return parse_settings(c); }

// Validation accuracy above 90% on a 10-sample validation set needs every
// validation sample to be reachable through the training parallelograms; a
// sample whose label never occurs in training (such as (0,1) for addition)
// caps it at 0.9 whatever the hyperparameters. The first master seed whose
// replicate splits all admit full generalization is used, a property of the
// data split alone, fixed before any training.
void use_admissible_seed(GridSpec& grid) {
  for (std::uint64_t m = 0;; ++m) {
    grid.master_seed = m;
    bool ok = true;
    for (int k = 0; k < grid.seeds && ok; ++k)
      ok = acc_upper(split(grid.model.task, grid.fraction, grid.replicate_seed(k)).train, grid.model.task) == 1.0;
    if (ok) return;
  }
}

// 5x5 decoder sweep at desk scale shows all four phases.
Outcome four_phases() {
  const auto t0 = Clock::now();
  auto s = settings_of({{"seed", 0}, {"sweep.preset", "decoder"}, {"sweep.scale", "desk"}, {"sweep.seeds", 1}});
  auto grid = make_grid(s);
  use_admissible_seed(grid);
  const auto outcome = run_sweep(grid);
  std::map<Phase, int> counts;
  double best_gap = -1.0;
  for (const auto& c : outcome.cells) {
    if (!c.modal_phase) continue;
    ++counts[*c.modal_phase];
    if (*c.modal_phase == Phase::Grokking && c.median_train90 && c.median_val90)
      best_gap = std::max(best_gap, *c.median_val90 - *c.median_train90);
  }
  std::string detail;
  for (auto ph : {Phase::Comprehension, Phase::Grokking, Phase::Memorization, Phase::Confusion})
    detail += std::string(to_string(ph)) + " " + std::to_string(counts[ph]) + ", ";
  const double secs = seconds_since(t0);
  detail += "master seed " + std::to_string(grid.master_seed) + ", largest grokking gap " + (best_gap < 0 ? std::string("none") : fmt(best_gap)) + ", " + fmt(secs) + " s";
  const bool ok = counts.size() == 4 && best_gap >= 1000.0 && secs <= 7200.0;
  return {ok, detail};
}

// Slow representation with a fast decoder memorizes.
Outcome placement() {
  auto s = settings_of({{"seed", 0}, {"sweep.preset", "competition"}, {"sweep.scale", "desk"}, {"sweep.seeds", 1}});
  auto grid = make_grid(s);
  use_admissible_seed(grid);
  // Only the corner cell is trained; replicate seeds are shared by all cells,
  // so it is identical to that cell of the full grid.
  const double max_dec = grid.x.values.back(), min_repr = grid.y.values.front();
  grid.x.values = {max_dec};
  grid.y.values = {min_repr};
  const auto outcome = run_sweep(grid);
  const auto& cell = outcome.cells.front();
  const std::string got = cell.modal_phase ? std::string(to_string(*cell.modal_phase)) : "error";
  return {cell.modal_phase == Phase::Memorization,
          "dec_lr " + fmt(max_dec) + ", repr_lr " + fmt(min_repr) + ": " + got};
}

std::map<std::string, std::string> csv_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv")
      out[fs::relative(e.path(), dir).generic_string()] = read_file(e.path());
  return out;
}

// Every command twice with the same config and seed.
Outcome determinism() {
  const FlatConfig base{{"seed", 13}};
  std::string detail;
  bool ok = true;
  auto check = [&](const std::string& name, const std::function<void(const fs::path&)>& cmd) {
    const auto a = scratch("det_" + name + "_a"), b = scratch("det_" + name + "_b");
    cmd(a);
    cmd(b);
    const auto fa = csv_files(a), fb = csv_files(b);
    const bool same = !fa.empty() && fa == fb;
    ok = ok && same;
    detail += name + (same ? " ok (" + std::to_string(fa.size()) + " csv)" : " DIFFERS") + "; ";
  };
  auto with = [&](FlatConfig extra) {
    FlatConfig c = base;
    for (auto& [k, v] : extra) c[k] = v;
    return parse_settings(c);
  };
  const auto flow_s = with({{"flow.steps", 3000}, {"flow.keep_embeddings", true}});
  check("efftheory", [&](const fs::path& d) { cmd_efftheory(flow_s, d); });
  const auto mc_s = with({{"mc.trials", 50}});
  check("mc-critical", [&](const fs::path& d) { cmd_mc_critical(mc_s, d); });
  const auto train_s = with({{"optim.max_steps", 400}, {"optim.batch_size", 16}});
  check("train", [&](const fs::path& d) { cmd_train(train_s, d); });
  const auto sweep_s = with({{"optim.max_steps", 60}, {"sweep.size", 2}, {"sweep.seeds", 2}, {"model.hidden", {16}}});
  check("sweep", [&](const fs::path& d) { cmd_sweep(sweep_s, d, false); });
  const auto runs = scratch("det_runs");
  for (int k = 0; k < 2; ++k) {
    fs::create_directories(runs / std::to_string(k));
    cmd_train(with({{"optim.max_steps", 200}, {"seed", 20 + k}}), runs / std::to_string(k));
  }
  check("analyze", [&](const fs::path& d) { cmd_analyze(flow_s, {runs}, d, true); });
  return {ok, detail.substr(0, detail.size() - 2)};
}

struct Criterion {
  std::string name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"nullity_law", nullity_law},
      {"critical_fraction", critical_fraction},
      {"conservation", conservation},
      {"gradient_oracles", gradient_oracles},
      {"spectral_timescale", spectral_timescale},
      {"rqi_extremes", rqi_extremes},
      {"bounds", bounds},
      {"closure_oracle", closure_oracle},
      {"four_phases", four_phases},
      {"placement", placement},
      {"determinism", determinism},
  };
  std::set<std::string> only;
  for (int k = 1; k < argc; ++k) {
    const std::string arg = argv[k];
    if (arg == "--list") {
      for (const auto& c : all) std::printf("%s\n", c.name.c_str());
      return 0;
    }
    if (arg == "--only" && k + 1 < argc) {
      only.insert(argv[++k]);
      continue;
    }
    std::fprintf(stderr, "usage: %s [--list] [--only NAME]...\n", argv[0]);
    return 2;
  }
  for (const auto& name : only) {
    bool known = false;
    for (const auto& c : all) known = known || c.name == name;
    if (!known) {
      std::fprintf(stderr, "unknown criterion '%s'\n", name.c_str());
      return 2;
    }
  }

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.name)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
