#include <doctest.h>

#include <cmath>

#include "groklab/error.hpp"
#include "groklab/mlp.hpp"
#include "groklab/optim.hpp"
#include "groklab/trainer.hpp"

using namespace groklab;

namespace {

double max_rel_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  const double scale = std::max(1e-8, numeric.cwiseAbs().maxCoeff());
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

ModelConfig small_model(TaskSpec task, TrainMode mode) {
  ModelConfig m;
  m.task = task;
  m.mode = mode;
  m.hidden = {16, 16};
  m.regression_dim = 8;
  m.embedding_dim = task.commutative() ? 2 : 3;
  return m;
}

// Central differences of the batch loss over all embedding entries and
// decoder parameters.
double model_fd_error(ToyModel model, const std::vector<Sample>& batch) {
  const auto g = model.loss_and_grads(batch);
  const double h = 1e-6;
  auto loss = [&] { return model.loss_and_grads(batch).loss; };

  Eigen::VectorXd numeric_e(model.embeddings().data.size());
  for (Eigen::Index k = 0; k < numeric_e.size(); ++k) {
    double& x = model.embeddings().data.data()[k];
    const double keep = x;
    x = keep + h;
    const double up = loss();
    x = keep - h;
    const double dn = loss();
    x = keep;
    numeric_e(k) = (up - dn) / (2 * h);
  }
  Eigen::VectorXd numeric_d(model.decoder().num_params());
  for (Eigen::Index k = 0; k < numeric_d.size(); ++k) {
    double& x = model.decoder().params()(k);
    const double keep = x;
    x = keep + h;
    const double up = loss();
    x = keep - h;
    const double dn = loss();
    x = keep;
    numeric_d(k) = (up - dn) / (2 * h);
  }
  const Eigen::VectorXd analytic_e = Eigen::Map<const Eigen::VectorXd>(g.embeddings.data(), g.embeddings.size());
  return std::max(max_rel_error(analytic_e, numeric_e), max_rel_error(g.decoder, numeric_d));
}

}  // namespace

TEST_CASE("mlp gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Mlp net({3, 7, 5, 4}, seed % 2 ? Activation::Tanh : Activation::Relu);
    Rng rng(seed);
    net.init_uniform(rng);
    Eigen::MatrixXd x(3, 6), w(4, 6);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = rng.normal();
    // Loss = sum(w .* f(x)), so dL/dout = w.
    auto loss = [&] { return (net.forward(x).array() * w.array()).sum(); };
    Mlp::Cache cache;
    net.forward(x, &cache);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.num_params());
    const Eigen::MatrixXd dx = net.backward(cache, w, grad);

    const double h = 1e-6;
    Eigen::VectorXd numeric(net.num_params());
    for (Eigen::Index k = 0; k < numeric.size(); ++k) {
      const double keep = net.params()(k);
      net.params()(k) = keep + h;
      const double up = loss();
      net.params()(k) = keep - h;
      const double dn = loss();
      net.params()(k) = keep;
      numeric(k) = (up - dn) / (2 * h);
    }
    CHECK(max_rel_error(grad, numeric) < 1e-4);

    Eigen::VectorXd numeric_x(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double keep = x.data()[k];
      x.data()[k] = keep + h;
      const double up = loss();
      x.data()[k] = keep - h;
      const double dn = loss();
      x.data()[k] = keep;
      numeric_x(k) = (up - dn) / (2 * h);
    }
    CHECK(max_rel_error(Eigen::Map<const Eigen::VectorXd>(dx.data(), dx.size()), numeric_x) < 1e-4);
  }
}

TEST_CASE("mlp structure") {
  Mlp net({2, 5, 3}, Activation::Tanh);
  CHECK(net.num_params() == 2 * 5 + 5 + 5 * 3 + 3);
  net.params().setZero();
  net.bias(1) << 1.0, -2.0, 0.5;
  const Eigen::MatrixXd out = net.forward(Eigen::MatrixXd::Random(2, 4));
  for (Eigen::Index c = 0; c < 4; ++c) CHECK(out.col(c) == Eigen::Vector3d(1.0, -2.0, 0.5));

  // Permuting hidden units (rows of W0, b0 and columns of W1) leaves the function unchanged.
  Rng rng(3);
  Mlp a({2, 4, 3}, Activation::Tanh);
  a.init_uniform(rng);
  Mlp b = a;
  const std::vector<int> perm{2, 0, 3, 1};
  for (int k = 0; k < 4; ++k) {
    b.weight(0).row(k) = a.weight(0).row(perm[k]);
    b.bias(0)(k) = a.bias(0)(perm[k]);
    b.weight(1).col(k) = a.weight(1).col(perm[k]);
  }
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 5);
  CHECK((a.forward(x) - b.forward(x)).cwiseAbs().maxCoeff() < 1e-14);

  CHECK(parse_activation("relu") == Activation::Relu);
  CHECK_THROWS_AS(parse_activation("gelu"), InvalidArgument);
}

TEST_CASE("AdamW") {
  const AdamHyper hyper{0.01, 0.0, 0.9, 0.999, 1e-8};
  Eigen::VectorXd x(3);
  x << 1.0, -2.0, 3.0;
  Eigen::VectorXd g(3);
  g << 0.5, -4.0, 1e-3;
  AdamW opt(3);
  Eigen::VectorXd y = x;
  opt.step(y, g, hyper);
  // First bias-corrected step moves every coordinate by about lr * sign(g).
  for (int k = 0; k < 3; ++k) CHECK(y(k) - x(k) == doctest::Approx(-0.01 * (g(k) > 0 ? 1 : -1)).epsilon(1e-4));

  // Independent two-step reference.
  Eigen::VectorXd m = Eigen::VectorXd::Zero(3), v = Eigen::VectorXd::Zero(3), ref = x;
  AdamW opt2(3);
  Eigen::VectorXd z = x;
  const AdamHyper decayed{0.01, 0.5, 0.9, 0.999, 1e-8};
  for (int t = 1; t <= 2; ++t) {
    ref *= 1.0 - 0.01 * 0.5;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g.cwiseProduct(g);
    const Eigen::ArrayXd mh = m.array() / (1 - std::pow(0.9, t)), vh = v.array() / (1 - std::pow(0.999, t));
    ref.array() -= 0.01 * mh / (vh.sqrt() + 1e-8);
    opt2.step(z, g, decayed);
  }
  CHECK((z - ref).cwiseAbs().maxCoeff() < 1e-15);

  // Pure decay with a zero gradient.
  AdamW opt3(3);
  Eigen::VectorXd w = x;
  opt3.step(w, Eigen::VectorXd::Zero(3), decayed);
  CHECK((w - 0.995 * x).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(opt3.step(w, Eigen::VectorXd::Zero(2), decayed), InvalidArgument);
}

TEST_CASE("toy model gradients match central differences") {
  for (auto mode : {TrainMode::Regression, TrainMode::Classification}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto spec = TaskSpec::addition(6);
      ToyModel model(small_model(spec, mode), seed);
      auto batch = split(spec, Fraction::real(0.5), seed).train;
      batch.push_back(batch.front());  // duplicates count twice
      CHECK(model_fd_error(model, batch) < 1e-4);
    }
  }
}

TEST_CASE("matrix-mode gradients match central differences") {
  for (auto mode : {TrainMode::Regression, TrainMode::Classification})
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      ToyModel model(small_model(TaskSpec::s3(), mode), seed);
      const auto batch = split(TaskSpec::s3(), Fraction::real(0.5), seed).train;
      CHECK(model_fd_error(model, batch) < 1e-4);
    }
}

TEST_CASE("loss semantics") {
  const auto spec = TaskSpec::addition(5);
  auto cfg = small_model(spec, TrainMode::Classification);
  ToyModel model(cfg, 1);
  model.decoder().params().setZero();
  const auto all = enumerate_samples(spec);
  CHECK(model.loss_and_grads(all).loss == doctest::Approx(std::log(spec.num_labels())));

  // Batch-mean: a batch of one sample repeated equals that sample alone.
  ToyModel reg(small_model(spec, TrainMode::Regression), 2);
  const std::vector<Sample> one{all[3]}, three{all[3], all[3], all[3]};
  CHECK(reg.loss_and_grads(one).loss == doctest::Approx(reg.loss_and_grads(three).loss));
  CHECK((reg.loss_and_grads(one).decoder - reg.loss_and_grads(three).decoder).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(reg.evaluate(all).loss == doctest::Approx(reg.loss_and_grads(all).loss));
  CHECK(std::isnan(reg.evaluate({}).accuracy));
  CHECK_THROWS_AS(reg.loss_and_grads({}), InvalidArgument);
}

TEST_CASE("untrained accuracy is near chance") {
  const auto spec = TaskSpec::addition(10);
  double mean = 0.0;
  const int runs = 20;
  for (int s = 0; s < runs; ++s) {
    ToyModel model(small_model(spec, TrainMode::Classification), static_cast<std::uint64_t>(s));
    mean += model.evaluate(enumerate_samples(spec)).accuracy;
  }
  mean /= runs;
  CHECK(mean < 0.25);
}

TEST_CASE("training is deterministic and records thresholds") {
  const auto spec = TaskSpec::addition(10);
  auto model = small_model(spec, TrainMode::Regression);
  OptimConfig optim;
  optim.max_steps = 200;
  optim.seed = 4;
  optim.batch_size = 16;
  const auto s = split(spec, Fraction::parse("45/55"), 4);
  const auto a = train(model, optim, s);
  const auto b = train(model, optim, s);
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t k = 0; k < a.metrics.size(); ++k) {
    CHECK(a.metrics[k].train_loss == b.metrics[k].train_loss);
    CHECK(a.metrics[k].val_acc == b.metrics[k].val_acc);
  }
  CHECK(a.metrics.front().step == 0);
  CHECK(a.metrics.back().step == 200);
  CHECK(a.metrics.size() == 21);
  CHECK(a.embeddings.data == b.embeddings.data);
  CHECK(a.metrics.back().train_loss < a.metrics.front().train_loss);
  if (a.step_train90) CHECK(a.metrics.back().train_acc > 0.0);

  optim.seed = 5;
  const auto c = train(model, optim, s);
  CHECK(c.embeddings.data != a.embeddings.data);
}

TEST_CASE("full training set has no phase") {
  const auto spec = TaskSpec::addition(6);
  OptimConfig optim;
  optim.max_steps = 20;
  const auto rec = train(small_model(spec, TrainMode::Regression), optim, split(spec, Fraction::real(1.0), 1));
  CHECK_FALSE(rec.has_validation);
  CHECK_FALSE(classify_phase(rec).has_value());
  CHECK(std::isnan(rec.final_val_acc));
}

TEST_CASE("phase rule") {
  CHECK(classify_phase(500, 800, 100000) == Phase::Comprehension);
  CHECK(classify_phase(500, 1499, 100000) == Phase::Comprehension);
  CHECK(classify_phase(500, 1500, 100000) == Phase::Grokking);
  CHECK(classify_phase(500, 50000, 100000) == Phase::Grokking);
  CHECK(classify_phase(500, std::nullopt, 100000) == Phase::Memorization);
  CHECK(classify_phase(500, 200000, 100000) == Phase::Memorization);
  CHECK(classify_phase(std::nullopt, std::nullopt, 100000) == Phase::Confusion);
  CHECK(classify_phase(std::nullopt, 300, 100000) == Phase::Confusion);
  CHECK(classify_phase(500, 2000, 100000, 2000) == Phase::Comprehension);
  for (auto ph : {Phase::Comprehension, Phase::Grokking, Phase::Memorization, Phase::Confusion})
    CHECK(parse_phase(to_string(ph)) == ph);
}

TEST_CASE("config validation") {
  ModelConfig m;
  m.embedding_dim = 0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  OptimConfig o;
  o.dec_lr = 0.0;
  CHECK_THROWS_AS(o.validate(), ConfigError);
  o = {};
  o.dec_wd = -1.0;
  CHECK_THROWS_AS(o.validate(), ConfigError);
}
