#include "groklab/optim.hpp"

#include <cmath>

#include "groklab/error.hpp"

namespace groklab {

void AdamW::step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads,
                 const AdamHyper& hyper) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw InvalidArgument("optimizer size mismatch");
  ++t_;
  if (hyper.weight_decay > 0.0) params *= 1.0 - hyper.lr * hyper.weight_decay;
  m_ = hyper.beta1 * m_ + (1.0 - hyper.beta1) * grads;
  v_ = hyper.beta2 * v_ + (1.0 - hyper.beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t_));
  params.array() -= hyper.lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + hyper.eps);
}

}  // namespace groklab
