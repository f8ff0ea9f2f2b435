#include "groklab/mlp.hpp"

#include <cmath>
#include <string>

#include "groklab/error.hpp"

namespace groklab {

std::string_view to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "relu"; }

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

Mlp::Mlp(std::vector<int> widths, Activation activation) : widths_(std::move(widths)), activation_(activation) {
  if (widths_.size() < 2) throw InvalidArgument("an MLP needs at least input and output widths");
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] <= 0 || widths_[l + 1] <= 0) throw InvalidArgument("MLP widths must be positive");
    weight_offset_.push_back(offset);
    offset += static_cast<Eigen::Index>(widths_[l]) * widths_[l + 1];
    bias_offset_.push_back(offset);
    offset += widths_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(offset);
}

Eigen::Map<Eigen::MatrixXd> Mlp::weight(int layer) {
  return {params_.data() + weight_offset_[layer], widths_[layer + 1], widths_[layer]};
}
Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int layer) const {
  return {params_.data() + weight_offset_[layer], widths_[layer + 1], widths_[layer]};
}
Eigen::Map<Eigen::VectorXd> Mlp::bias(int layer) { return {params_.data() + bias_offset_[layer], widths_[layer + 1]}; }
Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
  return {params_.data() + bias_offset_[layer], widths_[layer + 1]};
}

void Mlp::init_uniform(Rng& rng) {
  for (int l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
    auto w = weight(l);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-bound, bound);
    auto b = bias(l);
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = rng.uniform(-bound, bound);
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache* cache) const {
  if (x.rows() != input_dim()) throw InvalidArgument("decoder input has the wrong dimension");
  if (cache) {
    cache->post.resize(widths_.size());
    cache->post[0] = x;
  }
  Eigen::MatrixXd h = x;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = weight(l) * h;
    z.colwise() += bias(l);
    if (l + 1 < num_layers()) {
      if (activation_ == Activation::Tanh)
        z = z.array().tanh();
      else
        z = z.cwiseMax(0.0);
    }
    h = std::move(z);
    if (cache) cache->post[l + 1] = h;
  }
  return h;
}

Eigen::MatrixXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& grad_output, Eigen::VectorXd& grad) const {
  if (grad.size() != num_params()) grad = Eigen::VectorXd::Zero(num_params());
  Eigen::MatrixXd delta = grad_output;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const Eigen::MatrixXd& input = cache.post[l];
    Eigen::Map<Eigen::MatrixXd>(grad.data() + weight_offset_[l], widths_[l + 1], widths_[l]).noalias() +=
        delta * input.transpose();
    Eigen::Map<Eigen::VectorXd>(grad.data() + bias_offset_[l], widths_[l + 1]) += delta.rowwise().sum();
    Eigen::MatrixXd back = weight(l).transpose() * delta;
    if (l > 0) {
      if (activation_ == Activation::Tanh)
        back.array() *= 1.0 - input.array().square();
      else
        back.array() *= (input.array() > 0.0).cast<double>();
    }
    delta = std::move(back);
  }
  return delta;
}

}  // namespace groklab
