#include "groklab/efftheory.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "groklab/error.hpp"
#include "groklab/lintheory.hpp"
#include "groklab/rng.hpp"

namespace groklab {

namespace {

void require_vector_mode(const Representation& rep) {
  if (rep.mode != EmbeddingMode::Vector) throw InvalidArgument("the effective theory works on vector embeddings");
}

struct Evaluation {
  EffLoss loss;
  Representation::Storage grad;
};

// Shared by eff_loss, eff_grad and the integrator so each step builds A once.
Evaluation evaluate(const Eigen::MatrixXd& a, const Representation::Storage& e, bool with_grad) {
  Evaluation out;
  const Eigen::MatrixXd residual = a * e;  // |P| x d
  out.loss.l0 = residual.squaredNorm();
  out.loss.z0 = e.squaredNorm();
  if (!(out.loss.z0 > 0.0)) throw NumericError("Z0 vanishes: the effective loss is undefined at R = 0");
  out.loss.l_eff = out.loss.l0 / out.loss.z0;
  if (with_grad) {
    const double z0 = out.loss.z0;
    out.grad = (2.0 / z0) * (a.transpose() * residual) - (2.0 * out.loss.l0 / (z0 * z0)) * e;
  }
  return out;
}

}  // namespace

EffLoss eff_loss(const Representation& rep, const ParallelogramSet& parallelograms) {
  require_vector_mode(rep);
  return evaluate(build_A(parallelograms, rep.size()).rows, rep.data, false).loss;
}

Representation::Storage eff_grad(const Representation& rep, const ParallelogramSet& parallelograms) {
  require_vector_mode(rep);
  return evaluate(build_A(parallelograms, rep.size()).rows, rep.data, true).grad;
}

ConservedPair conserved(const Representation& rep) {
  return {rep.data.colwise().sum().transpose(), rep.data.squaredNorm()};
}

FlowResult flow(const Representation& r0, const ParallelogramSet& parallelograms, const FlowOptions& opts) {
  require_vector_mode(r0);
  if (opts.steps < 1) throw InvalidArgument("flow needs at least one step");
  if (!(opts.dt > 0.0)) throw InvalidArgument("flow step size must be positive");
  if (opts.stride < 1) throw InvalidArgument("snapshot stride must be positive");

  const auto& spec = parallelograms.spec();
  const Eigen::MatrixXd a = build_A(parallelograms, r0.size()).rows;
  const auto p0 = full_permissible_set(spec);
  const Eigen::MatrixXd a_full = build_A(p0, r0.size()).rows;

  auto rqi_of = [&](const Representation::Storage& e) {
    if (p0.empty()) return 0.0;
    const Eigen::MatrixXd dev = a_full * e;
    const auto hits = (dev.rowwise().norm().array() <= opts.delta).count();
    return static_cast<double>(hits) / static_cast<double>(p0.size());
  };

  FlowResult out;
  out.initial = conserved(r0);
  const double z_init = out.initial.z0;
  const Eigen::MatrixXd linear_h = (2.0 / z_init) * a.transpose() * a;

  Representation::Storage e = r0.data;
  auto snapshot = [&](long step, const EffLoss& loss, double r) {
    FlowSnapshot s;
    s.step = step;
    s.t = static_cast<double>(step) * opts.dt;
    s.l_eff = loss.l_eff;
    s.rqi = r;
    s.conserved = {e.colwise().sum().transpose(), e.squaredNorm()};
    if (opts.keep_embeddings) s.embeddings = e;
    out.snapshots.push_back(std::move(s));
  };

  for (long step = 0;; ++step) {
    const bool last = step == opts.steps;
    Evaluation ev = evaluate(a, e, !last && opts.dynamics == FlowDynamics::Effective);
    const double r = rqi_of(e);
    if (out.first_rqi_step < 0 && r > opts.rqi_threshold) out.first_rqi_step = step;

    const double z_drift = std::abs(ev.loss.z0 - z_init) / z_init;
    const double c_drift = (e.colwise().sum().transpose() - out.initial.c).cwiseAbs().maxCoeff();
    out.max_z0_drift = std::max(out.max_z0_drift, z_drift);
    out.max_c_drift = std::max(out.max_c_drift, c_drift);

    if (step % opts.stride == 0 || last) snapshot(step, ev.loss, r);
    if (last) break;

    if (opts.dynamics == FlowDynamics::Effective)
      e -= opts.dt * ev.grad;
    else
      e -= opts.dt * (linear_h * e);
    if (!e.allFinite())
      throw NumericError("flow diverged at step " + std::to_string(step + 1) + " (dt = " + std::to_string(opts.dt) + ")");
  }
  out.final = Representation::vectors(e);
  return out;
}

Representation analytic_flow(const Representation& r0, const Eigen::MatrixXd& hessian, double t) {
  require_vector_mode(r0);
  if (hessian.rows() != r0.size() || hessian.cols() != r0.size())
    throw InvalidArgument("Hessian size does not match the representation");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian);
  const Eigen::MatrixXd& v = eig.eigenvectors();
  const Eigen::VectorXd decay = (-t * eig.eigenvalues().array()).exp().matrix();
  Representation::Storage e = v * decay.asDiagonal() * (v.transpose() * r0.data);
  return Representation::vectors(std::move(e));
}

Representation normalize(const Representation& rep) {
  require_vector_mode(rep);
  const Eigen::RowVectorXd mu = rep.data.colwise().mean();
  Representation::Storage centered = rep.data.rowwise() - mu;
  const double var = centered.squaredNorm() / static_cast<double>(rep.size());
  if (!(var > 0.0)) throw NumericError("cannot normalize: all embeddings are identical");
  return Representation::vectors(centered / std::sqrt(var));
}

Representation uniform_init(int p, int dim, double scale, std::uint64_t seed, bool centered) {
  Rng rng(seed);
  Representation::Storage e(p, dim);
  for (int k = 0; k < p; ++k)
    for (int c = 0; c < dim; ++c) e(k, c) = rng.uniform(-0.5 * scale, 0.5 * scale);
  if (centered) e.rowwise() -= e.colwise().mean();
  return Representation::vectors(std::move(e));
}

}  // namespace groklab
