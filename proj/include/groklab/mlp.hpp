#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "groklab/rng.hpp"

namespace groklab {

enum class Activation { Tanh, Relu };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Fully connected decoder: widths = {input, hidden..., output}; activation
/// after every hidden layer, linear output. All parameters live in one flat
/// vector, layer by layer: W_l (column-major, out x in) followed by b_l.
class Mlp {
 public:
  Mlp(std::vector<int> widths, Activation activation);

  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
  const std::vector<int>& widths() const { return widths_; }
  Activation activation() const { return activation_; }
  Eigen::Index num_params() const { return params_.size(); }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

  /// Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  void init_uniform(Rng& rng);

  /// Post-activation values per layer (index 0 is the input).
  struct Cache {
    std::vector<Eigen::MatrixXd> post;
  };

  /// x is (input_dim x batch); returns (output_dim x batch).
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;

  /// Back-propagates dL/d(output); accumulates parameter gradients into
  /// `grad` (same layout as params()) and returns dL/d(input).
  Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& grad_output, Eigen::VectorXd& grad) const;

 private:
  std::vector<int> widths_;
  Activation activation_;
  Eigen::VectorXd params_;
  std::vector<Eigen::Index> weight_offset_;
  std::vector<Eigen::Index> bias_offset_;
};

}  // namespace groklab
