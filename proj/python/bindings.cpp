#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <chrono>
#include <filesystem>

#include "groklab/analysis.hpp"
#include "groklab/commands.hpp"
#include "groklab/config.hpp"
#include "groklab/efftheory.hpp"
#include "groklab/error.hpp"
#include "groklab/io.hpp"
#include "groklab/lintheory.hpp"
#include "groklab/parallelogram.hpp"

namespace py = pybind11;
using namespace groklab;

namespace {

using Pair = std::pair<int, int>;
using Quad = std::tuple<int, int, int, int>;
using Matrix = Representation::Storage;

std::vector<Sample> to_samples(const TaskSpec& spec, const std::vector<Pair>& pairs) {
  std::vector<Sample> out;
  out.reserve(pairs.size());
  for (auto [i, j] : pairs) out.push_back(make_sample(spec, i, j));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Pair> to_pairs(const std::vector<Sample>& samples) {
  std::vector<Pair> out;
  for (const auto& s : samples) out.emplace_back(s.i, s.j);
  return out;
}

ParallelogramSet to_set(const TaskSpec& spec, const std::vector<Quad>& quads) {
  ParallelogramSet out(spec);
  for (auto [i, j, m, n] : quads) out.insert({i, j, m, n});
  return out;
}

std::vector<Quad> to_quads(const ParallelogramSet& set) {
  std::vector<Quad> out;
  for (const auto& q : set) out.emplace_back(q.i, q.j, q.m, q.n);
  return out;
}

Representation to_rep(const TaskSpec& spec, const Matrix& e) {
  if (spec.commutative()) return Representation::vectors(e);
  return Representation::matrices(3, e);
}

Fraction to_fraction(const py::object& f) {
  if (py::isinstance<py::str>(f)) return Fraction::parse(f.cast<std::string>());
  return Fraction::real(f.cast<double>());
}

Settings to_settings(const std::string& config_json) {
  return parse_settings(flatten_config(nlohmann::json::parse(config_json)));
}

py::dict run_command(const std::string& command, const std::string& config_json, const std::filesystem::path& out,
                     const std::vector<std::filesystem::path>& inputs, bool resume, bool pca) {
  const auto settings = to_settings(config_json);
  settings.master_seed();
  std::filesystem::create_directories(out);
  const auto started = utc_timestamp();
  CommandResult r;
  {
    py::gil_scoped_release release;
    if (command == "efftheory")
      r = cmd_efftheory(settings, out);
    else if (command == "mc-critical")
      r = cmd_mc_critical(settings, out);
    else if (command == "train")
      r = cmd_train(settings, out);
    else if (command == "sweep")
      r = cmd_sweep(settings, out, resume);
    else if (command == "analyze")
      r = cmd_analyze(settings, inputs, out, pca);
    else
      throw ConfigError("unknown command '" + command + "'");
  }
  write_manifest(out, command, settings, r.outputs, started, utc_timestamp());
  py::dict d;
  d["outputs"] = r.outputs;
  d["messages"] = r.messages;
  d["warnings"] = r.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_groklab, m) {
  m.doc() = "Parallelogram algebra, effective theory and toy-model training";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<TaskSpec>(m, "TaskSpec")
      .def(py::init([](const std::string& kind, int p) { return TaskSpec(parse_task_kind(kind), p); }),
           py::arg("kind"), py::arg("p"))
      .def_static("addition", &TaskSpec::addition, py::arg("p"))
      .def_static("modular_addition", &TaskSpec::modular_addition, py::arg("p"))
      .def_static("s3", &TaskSpec::s3)
      .def_property_readonly("kind", [](const TaskSpec& s) { return std::string(to_string(s.kind())); })
      .def_property_readonly("p", &TaskSpec::p)
      .def_property_readonly("commutative", &TaskSpec::commutative)
      .def_property_readonly("num_labels", &TaskSpec::num_labels)
      .def("label", [](const TaskSpec& s, int i, int j) { return label(s, i, j); })
      .def("samples", [](const TaskSpec& s) { return to_pairs(enumerate_samples(s)); })
      .def("__repr__", [](const TaskSpec& s) {
        return "TaskSpec('" + std::string(to_string(s.kind())) + "', " + std::to_string(s.p()) + ")";
      });

  m.def(
      "split",
      [](const TaskSpec& spec, const py::object& fraction, std::uint64_t seed) {
        const auto d = split(spec, to_fraction(fraction), seed);
        return std::pair{to_pairs(d.train), to_pairs(d.valid)};
      },
      py::arg("task"), py::arg("fraction"), py::arg("seed"), "(train, valid) sample pairs");

  m.def(
      "permissible_set",
      [](const TaskSpec& spec, const std::vector<Pair>& data) { return to_quads(permissible_set(to_samples(spec, data), spec)); },
      py::arg("task"), py::arg("samples"));
  m.def(
      "full_permissible_set", [](const TaskSpec& spec) { return to_quads(full_permissible_set(spec)); },
      py::arg("task"));
  m.def(
      "ideal_closure",
      [](const TaskSpec& spec, const std::vector<Pair>& data) { return to_quads(ideal_closure(to_samples(spec, data), spec)); },
      py::arg("task"), py::arg("samples"));
  m.def(
      "nonabelian_closure",
      [](const TaskSpec& spec, const std::vector<Pair>& data) {
        return to_quads(nonabelian_closure(to_samples(spec, data), spec));
      },
      py::arg("task"), py::arg("samples"));
  m.def(
      "predicted_acc",
      [](const TaskSpec& spec, const std::vector<Pair>& data, const std::vector<Quad>& quads) {
        return predicted_acc(to_samples(spec, data), to_set(spec, quads));
      },
      py::arg("task"), py::arg("samples"), py::arg("parallelograms"));
  m.def(
      "realized_set",
      [](const TaskSpec& spec, const Matrix& e, double delta, bool frobenius_sqrt) {
        return to_quads(realized_set(to_rep(spec, e), spec, {delta, frobenius_sqrt}));
      },
      py::arg("task"), py::arg("embeddings"), py::arg("delta") = 0.01, py::arg("frobenius_sqrt") = false);
  m.def(
      "rqi",
      [](const TaskSpec& spec, const Matrix& e, double delta, bool frobenius_sqrt) {
        return rqi(to_rep(spec, e), spec, {delta, frobenius_sqrt});
      },
      py::arg("task"), py::arg("embeddings"), py::arg("delta") = 0.01, py::arg("frobenius_sqrt") = false);

  m.def(
      "nullity",
      [](const TaskSpec& spec, const std::vector<Quad>& quads) { return nullity(build_A(to_set(spec, quads), spec.p())); },
      py::arg("task"), py::arg("parallelograms"));
  m.def(
      "hessian",
      [](const TaskSpec& spec, const std::vector<Quad>& quads, double z0) {
        return hessian(to_set(spec, quads), spec.p(), z0);
      },
      py::arg("task"), py::arg("parallelograms"), py::arg("z0") = 1.0);
  m.def(
      "critical_fraction_mc",
      [](const TaskSpec& spec, const std::vector<double>& fractions, int trials, std::uint64_t seed) {
        std::vector<CriticalPoint> pts;
        {
          py::gil_scoped_release release;
          pts = critical_fraction_mc(spec, fractions, trials, seed);
        }
        std::vector<std::pair<double, double>> out;
        for (const auto& p : pts) out.emplace_back(p.fraction, p.probability);
        return out;
      },
      py::arg("task"), py::arg("fractions"), py::arg("trials") = 500, py::arg("seed") = 0,
      "[(fraction, probability of nullity 2)]");

  m.def(
      "eff_loss",
      [](const TaskSpec& spec, const Matrix& e, const std::vector<Quad>& quads) {
        const auto l = eff_loss(Representation::vectors(e), to_set(spec, quads));
        return std::tuple{l.l_eff, l.l0, l.z0};
      },
      py::arg("task"), py::arg("embeddings"), py::arg("parallelograms"), "(l_eff, l0, Z0)");
  m.def(
      "eff_grad",
      [](const TaskSpec& spec, const Matrix& e, const std::vector<Quad>& quads) {
        return Matrix(eff_grad(Representation::vectors(e), to_set(spec, quads)));
      },
      py::arg("task"), py::arg("embeddings"), py::arg("parallelograms"));
  m.def(
      "flow",
      [](const TaskSpec& spec, const Matrix& e, const std::vector<Quad>& quads, long steps, double dt, long stride,
         double delta, bool linear) {
        FlowOptions o;
        o.steps = steps;
        o.dt = dt;
        o.stride = stride;
        o.delta = delta;
        o.dynamics = linear ? FlowDynamics::Linear : FlowDynamics::Effective;
        FlowResult r;
        const auto set = to_set(spec, quads);
        {
          py::gil_scoped_release release;
          r = flow(Representation::vectors(e), set, o);
        }
        py::dict d;
        d["final"] = Matrix(r.final.data);
        d["first_rqi_step"] = r.first_rqi_step;
        d["max_z0_drift"] = r.max_z0_drift;
        d["max_c_drift"] = r.max_c_drift;
        d["trajectory"] = trajectory_csv(r);
        return d;
      },
      py::arg("task"), py::arg("embeddings"), py::arg("parallelograms"), py::arg("steps") = 10000,
      py::arg("dt") = 1e-3, py::arg("stride") = 100, py::arg("delta") = 0.01, py::arg("linear") = false);

  m.def(
      "train_json",
      [](const std::string& config_json) {
        const auto s = to_settings(config_json);
        OptimConfig optim = s.optim;
        optim.seed = s.master_seed();
        RunRecord rec;
        {
          py::gil_scoped_release release;
          rec = train(s.model, optim, split(s.model.task, s.fraction, optim.seed));
        }
        return run_record_json(rec).dump();
      },
      py::arg("config_json"), "Trains one run; returns the run record as JSON text");
  m.def(
      "classify_phase",
      [](std::optional<long> train90, std::optional<long> val90, long budget, long gap) {
        return std::string(to_string(classify_phase(train90, val90, budget, gap)));
      },
      py::arg("train90"), py::arg("val90"), py::arg("budget"), py::arg("gap_threshold") = 1000);
  m.def("run_command", &run_command, py::arg("command"), py::arg("config_json"), py::arg("out"),
        py::arg("inputs") = std::vector<std::filesystem::path>{}, py::arg("resume") = false, py::arg("pca") = false);
  m.def("version", [] { return std::string(version_string()); });
}
