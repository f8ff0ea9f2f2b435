#include "groklab/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include "groklab/error.hpp"

#ifndef GROKLAB_VERSION_STRING
#define GROKLAB_VERSION_STRING "0.0.0-unknown"
#endif

namespace groklab {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view version_string() { return GROKLAB_VERSION_STRING; }

std::string trajectory_csv(const FlowResult& result) {
  std::string s(kTrajectoryHeader);
  s += '\n';
  for (const auto& snap : result.snapshots) {
    s += std::to_string(snap.step) + "," + format_number(snap.t) + "," + format_number(snap.l_eff) + "," +
         format_number(snap.rqi) + "," + format_number(snap.conserved.z0) + "," +
         format_number(snap.conserved.c.norm()) + "\n";
  }
  return s;
}

std::string embedding_snapshots_csv(const FlowResult& result) {
  const auto& final = result.final.data;
  std::string s = "step";
  for (Eigen::Index k = 0; k < final.rows(); ++k)
    for (Eigen::Index c = 0; c < final.cols(); ++c) s += ",e" + std::to_string(k) + "_" + std::to_string(c);
  s += '\n';
  for (const auto& snap : result.snapshots) {
    if (snap.embeddings.size() == 0) continue;
    s += std::to_string(snap.step);
    for (Eigen::Index k = 0; k < snap.embeddings.rows(); ++k)
      for (Eigen::Index c = 0; c < snap.embeddings.cols(); ++c) s += "," + format_number(snap.embeddings(k, c));
    s += '\n';
  }
  return s;
}

std::string critical_csv(const std::vector<CriticalPoint>& points) {
  std::string s(kCriticalHeader);
  s += '\n';
  for (const auto& p : points)
    s += format_number(p.fraction) + "," + format_number(p.probability) + "," + std::to_string(p.trials) + "," +
         std::to_string(p.seed) + "\n";
  return s;
}

std::string metrics_csv(const RunRecord& record) {
  std::string s(kMetricsHeader);
  s += '\n';
  for (const auto& m : record.metrics)
    s += std::to_string(m.step) + "," + format_number(m.train_acc) + "," + format_number(m.val_acc) + "," +
         format_number(m.train_loss) + "," + format_number(m.val_loss) + "," + format_number(m.rqi) + "\n";
  return s;
}

std::string table_csv(const std::vector<RqiAccuracyRow>& rows) {
  std::string s(kTableHeader);
  s += '\n';
  for (const auto& r : rows)
    s += format_number(r.fraction) + "," + std::to_string(r.seed) + "," + format_number(r.acc) + "," +
         format_number(r.acc_pred) + "," + format_number(r.rqi) + "," + format_number(r.rqi_upper) + "," +
         format_number(r.acc_upper) + "\n";
  return s;
}

json to_json(const ModelConfig& c) {
  return {{"task", std::string(to_string(c.task.kind()))},
          {"p", c.task.p()},
          {"mode", std::string(to_string(c.mode))},
          {"embedding_dim", c.embedding_dim},
          {"hidden", c.hidden},
          {"regression_dim", c.regression_dim},
          {"activation", std::string(to_string(c.activation))},
          {"init_scale", c.init_scale}};
}

json to_json(const OptimConfig& c) {
  return {{"repr_lr", c.repr_lr},       {"dec_lr", c.dec_lr},         {"repr_wd", c.repr_wd},
          {"dec_wd", c.dec_wd},         {"beta1", c.beta1},           {"beta2", c.beta2},
          {"eps", c.eps},               {"batch_size", c.batch_size}, {"max_steps", c.max_steps},
          {"stride", c.stride},         {"early_stop", c.early_stop}, {"sustain_window", c.sustain_window},
          {"seed", c.seed}};
}

namespace {

json samples_json(const std::vector<Sample>& samples) {
  json out = json::array();
  for (const auto& s : samples) out.push_back({s.i, s.j});
  return out;
}

std::vector<Sample> samples_from_json(const json& j, const TaskSpec& spec) {
  std::vector<Sample> out;
  for (const auto& pair : j) out.push_back(make_sample(spec, pair.at(0).get<int>(), pair.at(1).get<int>()));
  return out;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_or_nan(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json matrix_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j.at(r).size()) != cols) throw ConfigError("ragged matrix in run record");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

json optional_step(const std::optional<long>& v) { return v ? json(*v) : json(nullptr); }
std::optional<long> optional_step(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<long>();
}

}  // namespace

json to_json(const DataSplit& s) {
  return {{"fraction", s.fraction.to_string()},
          {"seed", s.seed},
          {"train", samples_json(s.train)},
          {"valid", samples_json(s.valid)}};
}

json to_json(const Representation& rep) {
  return {{"mode", rep.mode == EmbeddingMode::Vector ? "vector" : "matrix"},
          {"dim", rep.dim},
          {"rows", matrix_json(rep.data)}};
}

json run_record_json(const RunRecord& r) {
  json metrics = {{"step", json::array()},       {"train_acc", json::array()}, {"val_acc", json::array()},
                  {"train_loss", json::array()}, {"val_loss", json::array()},  {"rqi", json::array()}};
  for (const auto& m : r.metrics) {
    metrics["step"].push_back(m.step);
    metrics["train_acc"].push_back(number_or_null(m.train_acc));
    metrics["val_acc"].push_back(number_or_null(m.val_acc));
    metrics["train_loss"].push_back(number_or_null(m.train_loss));
    metrics["val_loss"].push_back(number_or_null(m.val_loss));
    metrics["rqi"].push_back(number_or_null(m.rqi));
  }
  return {{"version", std::string(version_string())},
          {"model", to_json(r.model)},
          {"optim", to_json(r.optim)},
          {"split", to_json(r.split)},
          {"metrics", std::move(metrics)},
          {"step_train90", optional_step(r.step_train90)},
          {"step_val90", optional_step(r.step_val90)},
          {"steps_run", r.steps_run},
          {"early_stopped", r.early_stopped},
          {"has_validation", r.has_validation},
          {"final_train_acc", number_or_null(r.final_train_acc)},
          {"final_val_acc", number_or_null(r.final_val_acc)},
          {"full_acc", number_or_null(r.full_acc)},
          {"final_rqi", number_or_null(r.final_rqi)},
          {"embeddings", to_json(r.embeddings)},
          {"targets", matrix_json(r.targets)},
          {"anomalies", r.anomalies}};
}

RunRecord run_record_from_json(const json& j) {
  try {
    RunRecord r;
    const auto& m = j.at("model");
    r.model.task = TaskSpec(parse_task_kind(m.at("task").get<std::string>()), m.at("p").get<int>());
    r.model.mode = parse_train_mode(m.at("mode").get<std::string>());
    r.model.embedding_dim = m.at("embedding_dim").get<int>();
    r.model.hidden = m.at("hidden").get<std::vector<int>>();
    r.model.regression_dim = m.at("regression_dim").get<int>();
    r.model.activation = parse_activation(m.at("activation").get<std::string>());
    r.model.init_scale = m.at("init_scale").get<double>();

    const auto& o = j.at("optim");
    r.optim.repr_lr = o.at("repr_lr").get<double>();
    r.optim.dec_lr = o.at("dec_lr").get<double>();
    r.optim.repr_wd = o.at("repr_wd").get<double>();
    r.optim.dec_wd = o.at("dec_wd").get<double>();
    r.optim.beta1 = o.at("beta1").get<double>();
    r.optim.beta2 = o.at("beta2").get<double>();
    r.optim.eps = o.at("eps").get<double>();
    r.optim.batch_size = o.at("batch_size").get<int>();
    r.optim.max_steps = o.at("max_steps").get<long>();
    r.optim.stride = o.at("stride").get<long>();
    r.optim.early_stop = o.at("early_stop").get<bool>();
    r.optim.sustain_window = o.at("sustain_window").get<int>();
    r.optim.seed = o.at("seed").get<std::uint64_t>();

    const auto& s = j.at("split");
    r.split.fraction = Fraction::parse(s.at("fraction").get<std::string>());
    r.split.seed = s.at("seed").get<std::uint64_t>();
    r.split.train = samples_from_json(s.at("train"), r.model.task);
    r.split.valid = samples_from_json(s.at("valid"), r.model.task);

    const auto& mt = j.at("metrics");
    const auto n = mt.at("step").size();
    for (std::size_t k = 0; k < n; ++k) {
      MetricRow row;
      row.step = mt.at("step").at(k).get<long>();
      row.train_acc = number_or_nan(mt.at("train_acc").at(k));
      row.val_acc = number_or_nan(mt.at("val_acc").at(k));
      row.train_loss = number_or_nan(mt.at("train_loss").at(k));
      row.val_loss = number_or_nan(mt.at("val_loss").at(k));
      row.rqi = number_or_nan(mt.at("rqi").at(k));
      r.metrics.push_back(row);
    }
    r.step_train90 = optional_step(j.at("step_train90"));
    r.step_val90 = optional_step(j.at("step_val90"));
    r.steps_run = j.at("steps_run").get<long>();
    r.early_stopped = j.at("early_stopped").get<bool>();
    r.has_validation = j.at("has_validation").get<bool>();
    r.final_train_acc = number_or_nan(j.at("final_train_acc"));
    r.final_val_acc = number_or_nan(j.at("final_val_acc"));
    r.full_acc = number_or_nan(j.at("full_acc"));
    r.final_rqi = number_or_nan(j.at("final_rqi"));

    const auto& e = j.at("embeddings");
    const Representation::Storage rows = matrix_from_json(e.at("rows"));
    const int dim = e.at("dim").get<int>();
    r.embeddings = e.at("mode").get<std::string>() == "matrix" ? Representation::matrices(dim, rows)
                                                                : Representation::vectors(rows);
    r.targets = matrix_from_json(j.at("targets"));
    r.anomalies = j.at("anomalies").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed run record: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("malformed run record: ") + e.what());
  }
}

}  // namespace groklab
