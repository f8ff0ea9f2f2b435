#include "groklab/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "groklab/error.hpp"
#include "groklab/rng.hpp"

namespace groklab {

namespace {

// Independent random streams per run.
enum Stream : std::uint64_t { kEmbeddingStream = 1, kDecoderStream = 2, kTargetStream = 3, kBatchStream = 4 };

constexpr double kThreshold = 0.9;
constexpr double kRqiDelta = 0.01;

}  // namespace

std::string_view to_string(TrainMode m) { return m == TrainMode::Regression ? "regression" : "classification"; }

TrainMode parse_train_mode(std::string_view name) {
  if (name == "regression") return TrainMode::Regression;
  if (name == "classification") return TrainMode::Classification;
  throw InvalidArgument("unknown training mode '" + std::string(name) + "'");
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Comprehension: return "comprehension";
    case Phase::Grokking: return "grokking";
    case Phase::Memorization: return "memorization";
    case Phase::Confusion: return "confusion";
  }
  return "?";
}

Phase parse_phase(std::string_view name) {
  for (auto ph : {Phase::Comprehension, Phase::Grokking, Phase::Memorization, Phase::Confusion})
    if (to_string(ph) == name) return ph;
  throw InvalidArgument("unknown phase '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Configs

int ModelConfig::embedding_width() const {
  return embedding_mode() == EmbeddingMode::Vector ? embedding_dim : embedding_dim * embedding_dim;
}

int ModelConfig::decoder_input_dim() const { return embedding_width(); }

int ModelConfig::output_dim() const { return mode == TrainMode::Regression ? regression_dim : task.num_labels(); }

void ModelConfig::validate() const {
  if (embedding_dim < 1) throw ConfigError("model.embedding_dim must be >= 1");
  if (mode == TrainMode::Regression && regression_dim < 1) throw ConfigError("model.regression_dim must be >= 1");
  for (int w : hidden)
    if (w < 1) throw ConfigError("model.hidden widths must be positive");
  if (!(init_scale > 0.0)) throw ConfigError("model.init_scale must be positive");
}

void OptimConfig::validate() const {
  if (!(repr_lr > 0.0) || !(dec_lr > 0.0)) throw ConfigError("learning rates must be positive");
  if (repr_wd < 0.0 || dec_wd < 0.0) throw ConfigError("weight decay must be non-negative");
  if (batch_size < 0) throw ConfigError("optim.batch_size must be >= 0 (0 = full batch)");
  if (max_steps < 1) throw ConfigError("optim.max_steps must be >= 1");
  if (stride < 1) throw ConfigError("optim.stride must be >= 1");
  if (sustain_window < 1) throw ConfigError("optim.sustain_window must be >= 1");
}

// ---------------------------------------------------------------------------
// ToyModel

ToyModel::ToyModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config), decoder_([&] {
        std::vector<int> widths{config.decoder_input_dim()};
        widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
        widths.push_back(config.output_dim());
        return Mlp(widths, config.activation);
      }()) {
  config_.validate();
  const int p = config_.task.p();

  Rng embed_rng(derive_seed(seed, kEmbeddingStream));
  Representation::Storage table(p, config_.embedding_width());
  for (int k = 0; k < p; ++k)
    for (int c = 0; c < table.cols(); ++c)
      table(k, c) = embed_rng.uniform(-0.5 * config_.init_scale, 0.5 * config_.init_scale);
  embeddings_ = config_.embedding_mode() == EmbeddingMode::Vector
                    ? Representation::vectors(std::move(table))
                    : Representation::matrices(config_.embedding_dim, std::move(table));

  Rng dec_rng(derive_seed(seed, kDecoderStream));
  decoder_.init_uniform(dec_rng);

  if (config_.mode == TrainMode::Regression) {
    Rng target_rng(derive_seed(seed, kTargetStream));
    targets_.resize(config_.regression_dim, config_.task.num_labels());
    for (Eigen::Index c = 0; c < targets_.cols(); ++c)
      for (Eigen::Index r = 0; r < targets_.rows(); ++r) targets_(r, c) = target_rng.normal();
  }
}

Eigen::MatrixXd ToyModel::inputs(const std::vector<Sample>& batch) const {
  Eigen::MatrixXd x(config_.decoder_input_dim(), static_cast<Eigen::Index>(batch.size()));
  const auto& e = embeddings_.data;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& s = batch[b];
    if (embeddings_.mode == EmbeddingMode::Vector) {
      x.col(static_cast<Eigen::Index>(b)) = (e.row(s.i) + e.row(s.j)).transpose();
    } else {
      const Eigen::MatrixXd prod = embeddings_.mat(s.i) * embeddings_.mat(s.j);
      const int d = embeddings_.dim;
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) x(r * d + c, static_cast<Eigen::Index>(b)) = prod(r, c);
    }
  }
  return x;
}

ToyModel::Gradients ToyModel::loss_and_grads(const std::vector<Sample>& batch) const {
  if (batch.empty()) throw InvalidArgument("loss_and_grads needs a nonempty batch");
  const auto n = static_cast<double>(batch.size());
  Mlp::Cache cache;
  Gradients g;
  g.outputs = decoder_.forward(inputs(batch), &cache);

  Eigen::MatrixXd grad_out(g.outputs.rows(), g.outputs.cols());
  if (config_.mode == TrainMode::Regression) {
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto col = static_cast<Eigen::Index>(b);
      grad_out.col(col) = g.outputs.col(col) - targets_.col(batch[b].label);
    }
    const double count = n * static_cast<double>(g.outputs.rows());
    g.loss = grad_out.squaredNorm() / count;
    grad_out *= 2.0 / count;
  } else {
    double total = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto col = static_cast<Eigen::Index>(b);
      const double mx = g.outputs.col(col).maxCoeff();
      Eigen::VectorXd ex = (g.outputs.col(col).array() - mx).exp().matrix();
      const double z = ex.sum();
      total += std::log(z) + mx - g.outputs(batch[b].label, col);
      grad_out.col(col) = ex / z;
      grad_out(batch[b].label, col) -= 1.0;
    }
    g.loss = total / n;
    grad_out /= n;
  }
  if (!std::isfinite(g.loss)) throw NumericError("non-finite training loss");

  g.decoder = Eigen::VectorXd::Zero(decoder_.num_params());
  const Eigen::MatrixXd dx = decoder_.backward(cache, grad_out, g.decoder);

  g.embeddings = Representation::Storage::Zero(embeddings_.data.rows(), embeddings_.data.cols());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& s = batch[b];
    const auto col = static_cast<Eigen::Index>(b);
    if (embeddings_.mode == EmbeddingMode::Vector) {
      g.embeddings.row(s.i) += dx.col(col).transpose();
      g.embeddings.row(s.j) += dx.col(col).transpose();
    } else {
      const int d = embeddings_.dim;
      Eigen::MatrixXd gx(d, d);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) gx(r, c) = dx(r * d + c, col);
      const Eigen::MatrixXd ga = gx * embeddings_.mat(s.j).transpose();
      const Eigen::MatrixXd gb = embeddings_.mat(s.i).transpose() * gx;
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
          g.embeddings(s.i, r * d + c) += ga(r, c);
          g.embeddings(s.j, r * d + c) += gb(r, c);
        }
    }
  }
  return g;
}

std::vector<int> ToyModel::predict(const Eigen::MatrixXd& outputs) const {
  std::vector<int> out(static_cast<std::size_t>(outputs.cols()));
  for (Eigen::Index b = 0; b < outputs.cols(); ++b) {
    Eigen::Index best = 0;
    if (config_.mode == TrainMode::Regression)
      (targets_.colwise() - outputs.col(b)).colwise().squaredNorm().minCoeff(&best);
    else
      outputs.col(b).maxCoeff(&best);
    out[static_cast<std::size_t>(b)] = static_cast<int>(best);
  }
  return out;
}

ToyModel::Evaluation ToyModel::evaluate_outputs(const Eigen::MatrixXd& outputs, const std::vector<Sample>& samples) const {
  Evaluation ev;
  if (samples.empty()) {
    ev.loss = ev.accuracy = std::numeric_limits<double>::quiet_NaN();
    return ev;
  }
  const auto n = static_cast<double>(samples.size());
  const auto labels = predict(outputs);
  int correct = 0;
  double total = 0.0;
  for (std::size_t b = 0; b < samples.size(); ++b) {
    const auto col = static_cast<Eigen::Index>(b);
    if (labels[b] == samples[b].label) ++correct;
    if (config_.mode == TrainMode::Regression) {
      total += (outputs.col(col) - targets_.col(samples[b].label)).squaredNorm();
    } else {
      const double mx = outputs.col(col).maxCoeff();
      total += std::log((outputs.col(col).array() - mx).exp().sum()) + mx - outputs(samples[b].label, col);
    }
  }
  ev.loss = config_.mode == TrainMode::Regression ? total / (n * static_cast<double>(outputs.rows())) : total / n;
  ev.accuracy = correct / n;
  return ev;
}

ToyModel::Evaluation ToyModel::evaluate(const std::vector<Sample>& samples) const {
  if (samples.empty()) return evaluate_outputs(Eigen::MatrixXd(), samples);
  return evaluate_outputs(decoder_.forward(inputs(samples)), samples);
}

// ---------------------------------------------------------------------------
// Training loop

RunRecord train(const ModelConfig& model_config, const OptimConfig& optim, const DataSplit& split_data) {
  model_config.validate();
  optim.validate();
  if (split_data.train.empty()) throw InvalidArgument("training set is empty");
  const auto started = std::chrono::steady_clock::now();

  ToyModel model(model_config, optim.seed);
  const auto& train_set = split_data.train;
  const auto& valid_set = split_data.valid;
  const bool has_valid = !valid_set.empty();
  const bool full_batch = optim.batch_size == 0 || optim.batch_size >= static_cast<int>(train_set.size());

  RunRecord rec;
  rec.model = model_config;
  rec.optim = optim;
  rec.split = split_data;
  rec.has_validation = has_valid;

  const auto p0 = full_permissible_set(model_config.task);
  auto current_rqi = [&] {
    if (p0.empty()) return 0.0;
    long hits = 0;
    for (const auto& q : p0)
      if (deviation(model.embeddings(), q, {kRqiDelta, false}) <= kRqiDelta) ++hits;
    return static_cast<double>(hits) / static_cast<double>(p0.size());
  };

  AdamW repr_opt(model.embeddings().data.size());
  AdamW dec_opt(model.decoder().num_params());
  const AdamHyper repr_hyper{optim.repr_lr, optim.repr_wd, optim.beta1, optim.beta2, optim.eps};
  const AdamHyper dec_hyper{optim.dec_lr, optim.dec_wd, optim.beta1, optim.beta2, optim.eps};

  Rng batch_rng(derive_seed(optim.seed, kBatchStream));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  std::vector<Sample> minibatch;

  int sustained = 0;
  ToyModel::Evaluation train_ev, valid_ev;
  for (long step = 0;; ++step) {
    const bool last = step == optim.max_steps;
    ToyModel::Gradients grads;
    if (full_batch) {
      grads = model.loss_and_grads(train_set);
      train_ev = model.evaluate_outputs(grads.outputs, train_set);
    } else {
      train_ev = model.evaluate(train_set);
      if (!last) {
        minibatch.clear();
        for (int b = 0; b < optim.batch_size; ++b) {
          if (cursor == order.size()) {
            batch_rng.shuffle(std::span<std::size_t>(order));
            cursor = 0;
          }
          minibatch.push_back(train_set[order[cursor++]]);
        }
        grads = model.loss_and_grads(minibatch);
      }
    }
    if (!std::isfinite(train_ev.loss)) throw NumericError("training diverged at step " + std::to_string(step));
    valid_ev = model.evaluate(valid_set);

    if (!rec.step_train90 && train_ev.accuracy > kThreshold) rec.step_train90 = step;
    if (has_valid && !rec.step_val90 && valid_ev.accuracy > kThreshold) rec.step_val90 = step;

    bool stop = false;
    if (step % optim.stride == 0 || last) {
      rec.metrics.push_back({step, train_ev.accuracy, valid_ev.accuracy, train_ev.loss, valid_ev.loss, current_rqi()});
      if (has_valid && train_ev.accuracy > kThreshold && valid_ev.accuracy > kThreshold)
        ++sustained;
      else
        sustained = 0;
      if (optim.early_stop && has_valid && sustained >= optim.sustain_window && !last) {
        stop = true;
        rec.early_stopped = true;
      }
    }
    if (last || stop) {
      rec.steps_run = step;
      break;
    }

    Eigen::Map<Eigen::VectorXd> repr_params(model.embeddings().data.data(), model.embeddings().data.size());
    const Eigen::Map<const Eigen::VectorXd> repr_grads(grads.embeddings.data(), grads.embeddings.size());
    repr_opt.step(repr_params, repr_grads, repr_hyper);
    dec_opt.step(model.decoder().params(), grads.decoder, dec_hyper);
    if (!model.embeddings().all_finite() || !model.decoder().params().allFinite())
      throw NumericError("non-finite parameters after step " + std::to_string(step + 1));
  }

  // Final row always reflects the last evaluated parameters.
  if (rec.metrics.empty() || rec.metrics.back().step != rec.steps_run)
    rec.metrics.push_back({rec.steps_run, train_ev.accuracy, valid_ev.accuracy, train_ev.loss, valid_ev.loss,
                           current_rqi()});
  rec.final_train_acc = train_ev.accuracy;
  rec.final_val_acc = valid_ev.accuracy;
  rec.full_acc = model.evaluate(enumerate_samples(model_config.task)).accuracy;
  rec.final_rqi = current_rqi();
  rec.embeddings = model.embeddings();
  if (model_config.mode == TrainMode::Regression) rec.targets = model.targets().transpose();
  if (rec.step_train90 && rec.step_val90 && *rec.step_val90 < *rec.step_train90)
    rec.anomalies.push_back("validation accuracy crossed 90% before training accuracy");
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

Phase classify_phase(std::optional<long> step_train90, std::optional<long> step_val90, long budget,
                     long gap_threshold) {
  const bool train_ok = step_train90 && *step_train90 <= budget;
  const bool val_ok = step_val90 && *step_val90 <= budget;
  if (train_ok && val_ok) return *step_val90 - *step_train90 < gap_threshold ? Phase::Comprehension : Phase::Grokking;
  if (train_ok) return Phase::Memorization;
  return Phase::Confusion;
}

std::optional<Phase> classify_phase(const RunRecord& record, long gap_threshold) {
  if (!record.has_validation) return std::nullopt;
  return classify_phase(record.step_train90, record.step_val90, record.optim.max_steps, gap_threshold);
}

}  // namespace groklab
