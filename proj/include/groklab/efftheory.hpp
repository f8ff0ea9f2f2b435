#pragma once

// Effective theory of representation dynamics.
//
// Embeddings follow gradient flow on l_eff = l0 / Z0 with
//   l0 = sum_{(i,j,m,n) in P} |E_i + E_j - E_m - E_n|^2,   Z0 = sum_k |E_k|^2.
// Z0 is conserved along the exact flow. C = sum_k E_k obeys
// dC/dt = (2 l0 / Z0^2) C, so it is conserved only for zero-mean
// representations; flows therefore start from centered embeddings.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "groklab/parallelogram.hpp"

namespace groklab {

struct EffLoss {
  double l_eff = 0.0;
  double l0 = 0.0;
  double z0 = 0.0;
};

/// Throws NumericError when Z0 == 0. Vector-mode representations only.
EffLoss eff_loss(const Representation& rep, const ParallelogramSet& parallelograms);

/// Analytic gradient of l_eff: (1/Z0) dl0/dE_k - (2 l0 / Z0^2) E_k.
Representation::Storage eff_grad(const Representation& rep, const ParallelogramSet& parallelograms);

struct ConservedPair {
  Eigen::VectorXd c;  // sum_k E_k
  double z0 = 0.0;    // sum_k |E_k|^2
};

ConservedPair conserved(const Representation& rep);

enum class FlowDynamics {
  /// Full nonlinear flow on l_eff.
  Effective,
  /// dR/dt = -H R with H = (2/Z0(0)) A^T A; the linearization solved by analytic_flow.
  Linear,
};

struct FlowOptions {
  long steps = 10000;
  double dt = 1e-3;
  long stride = 100;  // snapshot every `stride` steps; step 0 and the last step are always kept
  double delta = 0.01;
  double rqi_threshold = 0.95;
  FlowDynamics dynamics = FlowDynamics::Effective;
  bool keep_embeddings = false;
};

struct FlowSnapshot {
  long step = 0;
  double t = 0.0;
  double l_eff = 0.0;
  double rqi = 0.0;
  ConservedPair conserved;
  Representation::Storage embeddings;  // empty unless keep_embeddings
};

struct FlowResult {
  std::vector<FlowSnapshot> snapshots;
  Representation final;
  ConservedPair initial;
  double max_z0_drift = 0.0;  // max over steps of |Z0(t) - Z0(0)| / Z0(0)
  double max_c_drift = 0.0;   // max over steps and components of |C(t) - C(0)|
  long first_rqi_step = -1;   // first step with RQI > rqi_threshold (checked every step), -1 if never
};

/// Explicit Euler integration. Throws NumericError on non-finite state
/// (divergence) with the offending step in the message.
FlowResult flow(const Representation& r0, const ParallelogramSet& parallelograms, const FlowOptions& opts = {});

/// Closed-form solution of dR/dt = -H R via the eigen-expansion of H.
Representation analytic_flow(const Representation& r0, const Eigen::MatrixXd& hessian, double t);

/// Zero mean and unit variance, (1/p) sum_k |E_k - mu|^2 = 1. Throws NumericError
/// for identical embeddings.
Representation normalize(const Representation& rep);

/// i.i.d. U[-scale/2, scale/2] entries, optionally shifted to zero mean.
Representation uniform_init(int p, int dim, double scale, std::uint64_t seed, bool centered);

}  // namespace groklab
