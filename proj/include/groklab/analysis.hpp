#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "groklab/trainer.hpp"

namespace groklab {

struct PcaResult {
  Eigen::MatrixXd components;       // columns, orthonormal, ordered like ratios
  Eigen::VectorXd explained_ratio;  // descending, sums to 1
  Eigen::VectorXd mean;
  double entropy = 0.0;             // -sum r log r, natural log, 0 log 0 := 0
  double effective_dim = 1.0;       // exp(entropy)
};

/// Mean-centered PCA of the rows of `points` (p x d) via SVD. Throws
/// InvalidArgument for fewer than 2 points and NumericError for zero variance.
PcaResult pca(const Eigen::MatrixXd& points);

/// Natural-log entropy of a probability vector.
double entropy(const Eigen::VectorXd& ratios);

/// Embeddings as PCA input: vectors as-is, matrices flattened.
Eigen::MatrixXd flatten(const Representation& rep);

struct RqiAccuracyRow {
  double fraction = 0.0;
  std::uint64_t seed = 0;
  double acc = 0.0;
  double acc_pred = 0.0;
  double rqi = 0.0;
  double rqi_upper = 0.0;
  double acc_upper = 0.0;
  /// Every label class of D0 has a training sample (the condition under
  /// which RQI = 1 forces a predicted accuracy of 1).
  bool labels_covered = false;
};

/// One row per run: measured full-dataset accuracy, predicted accuracy from
/// the realized parallelograms (delta = 0.01), and the ideal-closure bounds
/// (the non-abelian deduction closure for S3).
std::vector<RqiAccuracyRow> rqi_accuracy_table(const std::vector<RunRecord>& runs, double delta = 0.01);
RqiAccuracyRow rqi_accuracy_row(const RunRecord& run, double delta = 0.01);

}  // namespace groklab
