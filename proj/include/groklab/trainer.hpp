#pragma once

// Toy encoder-decoder model: (a, b) -> Dec(E_a + E_b) for commutative tasks
// and Dec(vec(E_a E_b)) with 3x3 matrix embeddings for S3.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "groklab/domain.hpp"
#include "groklab/mlp.hpp"
#include "groklab/optim.hpp"
#include "groklab/parallelogram.hpp"

namespace groklab {

enum class TrainMode { Regression, Classification };

std::string_view to_string(TrainMode m);
TrainMode parse_train_mode(std::string_view name);

struct ModelConfig {
  TaskSpec task = TaskSpec::addition(10);
  TrainMode mode = TrainMode::Regression;
  /// Vector length (commutative tasks) or matrix side (S3).
  int embedding_dim = 1;
  std::vector<int> hidden = {200, 200};
  /// Output width for regression targets.
  int regression_dim = 30;
  Activation activation = Activation::Tanh;
  /// Embedding entries start i.i.d. U[-s/2, s/2].
  double init_scale = 1.0;

  EmbeddingMode embedding_mode() const {
    return task.commutative() ? EmbeddingMode::Vector : EmbeddingMode::Matrix;
  }
  int embedding_width() const;  // columns of the embedding table
  int decoder_input_dim() const;
  int output_dim() const;
  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

struct OptimConfig {
  double repr_lr = 1e-3;
  double dec_lr = 1e-3;
  double repr_wd = 0.0;
  double dec_wd = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// 0 means full batch.
  int batch_size = 0;
  long max_steps = 100000;
  /// Metrics are recorded every `stride` steps; threshold crossings are exact.
  long stride = 10;
  bool early_stop = true;
  /// Early stop after this many consecutive recorded strides with both
  /// accuracies above 90%.
  int sustain_window = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MetricRow {
  long step = 0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double rqi = 0.0;
};

enum class Phase { Comprehension, Grokking, Memorization, Confusion };

std::string_view to_string(Phase phase);
Phase parse_phase(std::string_view name);

struct RunRecord {
  ModelConfig model;
  OptimConfig optim;
  DataSplit split;
  std::vector<MetricRow> metrics;
  std::optional<long> step_train90;
  std::optional<long> step_val90;
  long steps_run = 0;
  bool early_stopped = false;
  bool has_validation = true;
  double final_train_acc = 0.0;
  double final_val_acc = 0.0;
  /// Accuracy over the whole sample set D0 at the end of training.
  double full_acc = 0.0;
  double final_rqi = 0.0;
  Representation embeddings;
  /// Regression targets, one row per label (empty for classification).
  Eigen::MatrixXd targets;
  double wall_seconds = 0.0;
  std::vector<std::string> anomalies;
};

/// Embedding table, decoder and targets of one run.
class ToyModel {
 public:
  ToyModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  Representation& embeddings() { return embeddings_; }
  const Representation& embeddings() const { return embeddings_; }
  Mlp& decoder() { return decoder_; }
  const Mlp& decoder() const { return decoder_; }
  /// (regression_dim x num_labels); empty for classification.
  const Eigen::MatrixXd& targets() const { return targets_; }

  /// Decoder inputs for a batch, one column per sample.
  Eigen::MatrixXd inputs(const std::vector<Sample>& batch) const;

  struct Gradients {
    double loss = 0.0;
    Eigen::VectorXd decoder;             // layout of decoder().params()
    Representation::Storage embeddings;  // same shape as embeddings().data
    Eigen::MatrixXd outputs;             // decoder outputs for the batch
  };

  /// Batch-mean loss (MSE over all output entries, or softmax cross-entropy)
  /// and its gradients. Throws NumericError on a non-finite loss.
  Gradients loss_and_grads(const std::vector<Sample>& batch) const;

  struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
  };

  Evaluation evaluate(const std::vector<Sample>& samples) const;
  Evaluation evaluate_outputs(const Eigen::MatrixXd& outputs, const std::vector<Sample>& samples) const;

  /// Predicted label per output column: nearest target (regression) or argmax.
  std::vector<int> predict(const Eigen::MatrixXd& outputs) const;

 private:
  ModelConfig config_;
  Representation embeddings_;
  Mlp decoder_;
  Eigen::MatrixXd targets_;
};

/// Trains embeddings with (repr_lr, repr_wd) and the decoder with
/// (dec_lr, dec_wd), both AdamW. Throws NumericError on divergence.
RunRecord train(const ModelConfig& model, const OptimConfig& optim, const DataSplit& split);

/// Four-phase rule: both thresholds within budget and gap < gap_threshold is
/// Comprehension, a larger gap is Grokking, training only is Memorization,
/// anything else is Confusion.
Phase classify_phase(std::optional<long> step_train90, std::optional<long> step_val90, long budget,
                     long gap_threshold = 1000);

/// nullopt when the run had no validation data.
std::optional<Phase> classify_phase(const RunRecord& record, long gap_threshold = 1000);

}  // namespace groklab
