#include "groklab/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "groklab/error.hpp"
#include "groklab/io.hpp"

namespace groklab {

using nlohmann::json;

namespace {

void flatten_into(const json& j, const std::string& prefix, FlatConfig& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) flatten_into(*it, key, out);
    else out[key] = *it;
  }
}

template <class T>
T as(const std::string& key, const json& v) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("invalid value for key '" + key + "': " + v.dump());
  }
}

double positive(const std::string& key, double v) {
  if (!(v > 0.0)) throw ConfigError("key '" + key + "' must be positive");
  return v;
}

double nonneg(const std::string& key, double v) {
  if (!(v >= 0.0)) throw ConfigError("key '" + key + "' must be non-negative");
  return v;
}

struct AxisKeys {
  std::optional<std::string> name;
  std::optional<double> min, max;
  std::optional<int> count;
  std::optional<std::string> scale;
  std::optional<std::vector<double>> values;

  bool any() const { return name || min || max || count || scale || values; }

  Axis build(const std::string& prefix) const {
    if (!name) throw ConfigError("missing required key '" + prefix + ".name'");
    if (!is_axis_name(*name)) throw ConfigError("invalid value for key '" + prefix + ".name': " + *name);
    if (values) {
      if (values->empty()) throw ConfigError("key '" + prefix + ".values' is empty");
      return Axis{*name, *values, scale.value_or("linear") == "log"};
    }
    if (!min || !max) throw ConfigError("sweep axis '" + prefix + "' needs values or min/max");
    const std::string sc = scale.value_or("linear");
    if (sc == "log") return Axis::log_spaced(*name, *min, *max, count.value_or(5));
    if (sc == "linear") return Axis::linear(*name, *min, *max, count.value_or(5));
    throw ConfigError("invalid value for key '" + prefix + ".scale': " + sc);
  }
};

bool apply_axis_key(AxisKeys& a, const std::string& field, const std::string& key, const json& v) {
  if (field == "name") a.name = as<std::string>(key, v);
  else if (field == "min") a.min = as<double>(key, v);
  else if (field == "max") a.max = as<double>(key, v);
  else if (field == "count") a.count = as<int>(key, v);
  else if (field == "scale") a.scale = as<std::string>(key, v);
  else if (field == "values") a.values = as<std::vector<double>>(key, v);
  else return false;
  return true;
}

std::string fraction_text(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return format_number(v.get<double>());
  throw ConfigError("invalid value for key '" + key + "': " + v.dump());
}

}  // namespace

FlatConfig flatten_config(const json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  FlatConfig out;
  flatten_into(j, "", out);
  return out;
}

FlatConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  try {
    return flatten_config(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse config file " + path.string() + ": " + e.what());
  }
}

void set_from_text(FlatConfig& config, const std::string& key, const std::string& text) {
  json v = json::parse(text, nullptr, false);
  config[key] = v.is_discarded() ? json(text) : v;
}

std::vector<double> parse_range(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.size() != 3) throw ConfigError("range must look like a:b:n, got '" + text + "'");
  double lo = 0, hi = 0;
  int n = 0;
  try {
    lo = std::stod(parts[0]);
    hi = std::stod(parts[1]);
    n = std::stoi(parts[2]);
  } catch (const std::exception&) {
    throw ConfigError("range must look like a:b:n, got '" + text + "'");
  }
  if (n < 1) throw ConfigError("range count must be >= 1 in '" + text + "'");
  return Axis::linear("", lo, hi, n).values;
}

std::uint64_t Settings::master_seed() const {
  if (!seed) throw ConfigError("missing required key 'seed'");
  return *seed;
}

Settings parse_settings(const FlatConfig& config) {
  Settings s;
  std::string kind = "addition";
  int p = 10;
  AxisKeys xk, yk;
  s.mc.fractions = parse_range("0.1:1.0:19");

  using Setter = std::function<void(const std::string&, const json&)>;
  const std::map<std::string, Setter> setters = {
      {"seed", [&](const std::string& k, const json& v) { s.seed = as<std::uint64_t>(k, v); }},
      {"task.kind", [&](const std::string& k, const json& v) { kind = as<std::string>(k, v); }},
      {"task.p", [&](const std::string& k, const json& v) { p = as<int>(k, v); }},
      {"data.fraction",
       [&](const std::string& k, const json& v) {
         try {
           s.fraction = Fraction::parse(fraction_text(v, k));
         } catch (const InvalidArgument& e) {
           throw ConfigError("invalid value for key '" + k + "': " + e.what());
         }
       }},
      {"model.mode",
       [&](const std::string& k, const json& v) {
         try {
           s.model.mode = parse_train_mode(as<std::string>(k, v));
         } catch (const InvalidArgument&) {
           throw ConfigError("invalid value for key '" + k + "': " + v.dump());
         }
       }},
      {"model.embedding_dim", [&](const std::string& k, const json& v) { s.model.embedding_dim = as<int>(k, v); }},
      {"model.hidden", [&](const std::string& k, const json& v) { s.model.hidden = as<std::vector<int>>(k, v); }},
      {"model.regression_dim", [&](const std::string& k, const json& v) { s.model.regression_dim = as<int>(k, v); }},
      {"model.activation",
       [&](const std::string& k, const json& v) {
         try {
           s.model.activation = parse_activation(as<std::string>(k, v));
         } catch (const InvalidArgument&) {
           throw ConfigError("invalid value for key '" + k + "': " + v.dump());
         }
       }},
      {"model.init_scale", [&](const std::string& k, const json& v) { s.model.init_scale = positive(k, as<double>(k, v)); }},
      {"optim.repr_lr", [&](const std::string& k, const json& v) { s.optim.repr_lr = positive(k, as<double>(k, v)); }},
      {"optim.dec_lr", [&](const std::string& k, const json& v) { s.optim.dec_lr = positive(k, as<double>(k, v)); }},
      {"optim.repr_wd", [&](const std::string& k, const json& v) { s.optim.repr_wd = nonneg(k, as<double>(k, v)); }},
      {"optim.dec_wd", [&](const std::string& k, const json& v) { s.optim.dec_wd = nonneg(k, as<double>(k, v)); }},
      {"optim.beta1", [&](const std::string& k, const json& v) { s.optim.beta1 = as<double>(k, v); }},
      {"optim.beta2", [&](const std::string& k, const json& v) { s.optim.beta2 = as<double>(k, v); }},
      {"optim.eps", [&](const std::string& k, const json& v) { s.optim.eps = positive(k, as<double>(k, v)); }},
      {"optim.batch_size",
       [&](const std::string& k, const json& v) {
         if (v.is_string() && v.get<std::string>() == "full") s.optim.batch_size = 0;
         else s.optim.batch_size = as<int>(k, v);
       }},
      {"optim.max_steps",
       [&](const std::string& k, const json& v) {
         s.optim.max_steps = as<long>(k, v);
         s.max_steps_given = true;
       }},
      {"optim.stride", [&](const std::string& k, const json& v) { s.optim.stride = as<long>(k, v); }},
      {"optim.early_stop", [&](const std::string& k, const json& v) { s.optim.early_stop = as<bool>(k, v); }},
      {"optim.sustain_window", [&](const std::string& k, const json& v) { s.optim.sustain_window = as<int>(k, v); }},
      {"flow.steps", [&](const std::string& k, const json& v) { s.flow.options.steps = as<long>(k, v); }},
      {"flow.dt", [&](const std::string& k, const json& v) { s.flow.options.dt = positive(k, as<double>(k, v)); }},
      {"flow.stride", [&](const std::string& k, const json& v) { s.flow.options.stride = as<long>(k, v); }},
      {"flow.delta", [&](const std::string& k, const json& v) { s.flow.options.delta = nonneg(k, as<double>(k, v)); }},
      {"flow.rqi_threshold", [&](const std::string& k, const json& v) { s.flow.options.rqi_threshold = as<double>(k, v); }},
      {"flow.dynamics",
       [&](const std::string& k, const json& v) {
         const auto d = as<std::string>(k, v);
         if (d == "effective") s.flow.options.dynamics = FlowDynamics::Effective;
         else if (d == "linear") s.flow.options.dynamics = FlowDynamics::Linear;
         else throw ConfigError("invalid value for key '" + k + "': " + d);
       }},
      {"flow.keep_embeddings", [&](const std::string& k, const json& v) { s.flow.options.keep_embeddings = as<bool>(k, v); }},
      {"flow.init_scale", [&](const std::string& k, const json& v) { s.flow.init_scale = positive(k, as<double>(k, v)); }},
      {"flow.centered", [&](const std::string& k, const json& v) { s.flow.centered = as<bool>(k, v); }},
      {"flow.dim", [&](const std::string& k, const json& v) { s.flow.dim = as<int>(k, v); }},
      {"mc.fractions",
       [&](const std::string& k, const json& v) {
         s.mc.fractions = v.is_string() ? parse_range(as<std::string>(k, v)) : as<std::vector<double>>(k, v);
       }},
      {"mc.trials", [&](const std::string& k, const json& v) { s.mc.trials = as<int>(k, v); }},
      {"sweep.preset", [&](const std::string& k, const json& v) { s.sweep.preset = as<std::string>(k, v); }},
      {"sweep.scale", [&](const std::string& k, const json& v) { s.sweep.scale = as<std::string>(k, v); }},
      {"sweep.size", [&](const std::string& k, const json& v) { s.sweep.size = as<int>(k, v); }},
      {"sweep.seeds", [&](const std::string& k, const json& v) { s.sweep.seeds = as<int>(k, v); }},
      {"sweep.gap_threshold", [&](const std::string& k, const json& v) { s.sweep.gap_threshold = as<long>(k, v); }},
      {"sweep.workers", [&](const std::string& k, const json& v) { s.sweep.workers = as<int>(k, v); }},
      {"analysis.delta", [&](const std::string& k, const json& v) { s.delta = nonneg(k, as<double>(k, v)); }},
  };

  for (const auto& [key, value] : config) {
    if (auto it = setters.find(key); it != setters.end()) {
      it->second(key, value);
      continue;
    }
    if (key.rfind("sweep.x.", 0) == 0 && apply_axis_key(xk, key.substr(8), key, value)) continue;
    if (key.rfind("sweep.y.", 0) == 0 && apply_axis_key(yk, key.substr(8), key, value)) continue;
    throw ConfigError("unknown config key '" + key + "'");
  }

  try {
    s.model.task = TaskSpec(parse_task_kind(kind), p);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("invalid task: ") + e.what());
  }
  if (xk.any()) s.x_axis = xk.build("sweep.x");
  if (yk.any()) s.y_axis = yk.build("sweep.y");
  if (s.sweep.scale != "desk" && s.sweep.scale != "full")
    throw ConfigError("invalid value for key 'sweep.scale': " + s.sweep.scale);
  if (s.mc.trials < 1) throw ConfigError("key 'mc.trials' must be >= 1");
  if (s.flow.options.steps < 0 || s.flow.options.stride < 1) throw ConfigError("flow.steps must be >= 0 and flow.stride >= 1");
  if (s.flow.dim < 1) throw ConfigError("key 'flow.dim' must be >= 1");
  s.model.validate();
  s.optim.seed = s.seed.value_or(0);
  s.optim.validate();
  return s;
}

json resolved_config(const Settings& s) {
  json j = json::object();
  if (s.seed) j["seed"] = *s.seed;
  j["task.kind"] = std::string(to_string(s.model.task.kind()));
  j["task.p"] = s.model.task.p();
  j["data.fraction"] = s.fraction.to_string();
  const json model = to_json(s.model);
  for (const auto& [k, v] : model.items())
    if (k != "task" && k != "p") j["model." + k] = v;
  const json optim = to_json(s.optim);
  for (const auto& [k, v] : optim.items())
    if (k != "seed") j["optim." + k] = v;
  j["flow.steps"] = s.flow.options.steps;
  j["flow.dt"] = s.flow.options.dt;
  j["flow.stride"] = s.flow.options.stride;
  j["flow.delta"] = s.flow.options.delta;
  j["flow.rqi_threshold"] = s.flow.options.rqi_threshold;
  j["flow.dynamics"] = s.flow.options.dynamics == FlowDynamics::Effective ? "effective" : "linear";
  j["flow.keep_embeddings"] = s.flow.options.keep_embeddings;
  j["flow.init_scale"] = s.flow.init_scale;
  j["flow.centered"] = s.flow.centered;
  j["flow.dim"] = s.flow.dim;
  j["mc.fractions"] = s.mc.fractions;
  j["mc.trials"] = s.mc.trials;
  j["sweep.preset"] = s.sweep.preset;
  j["sweep.scale"] = s.sweep.scale;
  j["sweep.size"] = s.sweep.size;
  j["sweep.seeds"] = s.sweep.seeds;
  j["sweep.gap_threshold"] = s.sweep.gap_threshold;
  j["sweep.workers"] = s.sweep.workers;
  for (const auto& [prefix, axis] : {std::pair{"sweep.x", &s.x_axis}, std::pair{"sweep.y", &s.y_axis}}) {
    if (!*axis) continue;
    j[std::string(prefix) + ".name"] = (*axis)->name;
    j[std::string(prefix) + ".values"] = (*axis)->values;
    j[std::string(prefix) + ".scale"] = (*axis)->log_scale ? "log" : "linear";
  }
  j["analysis.delta"] = s.delta;
  return j;
}

GridSpec make_grid(const Settings& s) {
  GridSpec g;
  g.model = s.model;
  g.optim = s.optim;
  g.fraction = s.fraction;
  g.master_seed = s.master_seed();
  g.seeds = s.sweep.seeds;
  g.gap_threshold = s.sweep.gap_threshold;
  g.workers = s.sweep.workers;
  if (!s.max_steps_given) g.optim.max_steps = s.sweep.scale == "full" ? 100000 : 20000;

  const int n = s.sweep.size;
  if (n < 1) throw ConfigError("key 'sweep.size' must be >= 1");
  g.x = Axis::log_spaced("dec_lr", 1e-4, 1e-2, n);
  const auto& preset = s.sweep.preset;
  if (preset == "decoder") g.y = Axis::linear("dec_wd", 0.0, 10.0, n);
  else if (preset == "competition") g.y = Axis::log_spaced("repr_lr", 1e-4, 1e-2, n);
  else if (preset == "batch_size") g.y = Axis{"batch_size", {5, 9, 15, 27, 45}, false};
  else if (preset == "init_scale") g.y = Axis::log_spaced("init_scale", 0.1, 10.0, n);
  else if (preset == "repr_wd") g.y = Axis::linear("repr_wd", 0.0, 10.0, n);
  else throw ConfigError("invalid value for key 'sweep.preset': " + preset);
  if (s.x_axis) g.x = *s.x_axis;
  if (s.y_axis) g.y = *s.y_axis;
  return g;
}

}  // namespace groklab
