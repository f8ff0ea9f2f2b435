#include "groklab/analysis.hpp"

#include <cmath>
#include <set>

#include <Eigen/SVD>

#include "groklab/error.hpp"

namespace groklab {

double entropy(const Eigen::VectorXd& ratios) {
  double s = 0.0;
  for (double r : ratios)
    if (r > 0.0) s -= r * std::log(r);
  return s;
}

PcaResult pca(const Eigen::MatrixXd& points) {
  if (points.rows() < 2) throw InvalidArgument("PCA needs at least two points");
  if (points.cols() < 1) throw InvalidArgument("PCA needs at least one dimension");
  PcaResult out;
  out.mean = points.colwise().mean().transpose();
  const Eigen::MatrixXd centered = points.rowwise() - out.mean.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd sq = svd.singularValues().array().square().matrix();
  const double total = sq.sum();
  if (!(total > 0.0)) throw NumericError("PCA of zero-variance data");
  out.explained_ratio = sq / total;
  out.components = svd.matrixV();
  out.entropy = entropy(out.explained_ratio);
  out.effective_dim = std::exp(out.entropy);
  return out;
}

Eigen::MatrixXd flatten(const Representation& rep) { return rep.data; }

RqiAccuracyRow rqi_accuracy_row(const RunRecord& run, double delta) {
  const auto& spec = run.model.task;
  const auto& train = run.split.train;
  RqiAccuracyRow row;
  row.fraction = run.split.fraction.value();
  row.seed = run.split.seed;
  row.acc = run.full_acc;
  const auto realized = realized_set(run.embeddings, spec, {delta, false});
  const double total = static_cast<double>(full_permissible_set(spec).size());
  row.rqi = static_cast<double>(realized.size()) / total;
  row.acc_pred = predicted_acc(train, realized);
  const auto closure = spec.commutative() ? ideal_closure(train, spec) : nonabelian_closure(train, spec);
  row.rqi_upper = static_cast<double>(closure.size()) / total;
  row.acc_upper = predicted_acc(train, closure);

  std::set<int> seen;
  for (const auto& s : train) seen.insert(s.label);
  row.labels_covered = static_cast<int>(seen.size()) == spec.num_labels();
  return row;
}

std::vector<RqiAccuracyRow> rqi_accuracy_table(const std::vector<RunRecord>& runs, double delta) {
  std::vector<RqiAccuracyRow> out;
  out.reserve(runs.size());
  for (const auto& r : runs) out.push_back(rqi_accuracy_row(r, delta));
  return out;
}

}  // namespace groklab
