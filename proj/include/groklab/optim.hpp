#pragma once

#include <Eigen/Core>

namespace groklab {

struct AdamHyper {
  double lr = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with decoupled weight decay. Each step first shrinks the parameters
/// by (1 - lr * wd), then applies the bias-corrected Adam update; with
/// wd = 0 it is plain Adam.
class AdamW {
 public:
  explicit AdamW(Eigen::Index size)
      : m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

  void step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads,
            const AdamHyper& hyper);

  long steps_taken() const { return t_; }
  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }

 private:
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;
};

}  // namespace groklab
