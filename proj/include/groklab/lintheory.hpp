#pragma once

// Linear constraint systems A(P) and their spectra.

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "groklab/parallelogram.hpp"

namespace groklab {

/// Singular values at or below kRankTolerance * sigma_max count as zero.
inline constexpr double kRankTolerance = 1e-8;

/// One signed incidence row per parallelogram: +1 at i and j, -1 at m and n,
/// accumulated when indices repeat. Row order follows the set order.
struct ConstraintMatrix {
  Eigen::MatrixXd rows;  // |P| x p
  int p = 0;
};

ConstraintMatrix build_A(const ParallelogramSet& parallelograms, int p);
ConstraintMatrix build_A(const ParallelogramSet& parallelograms);

/// Ascending singular values of A padded with zeros to length p.
Eigen::VectorXd singular_values(const ConstraintMatrix& a);

/// Number of singular values <= tol * sigma_max, out of p (p for an empty A).
int nullity(const ConstraintMatrix& a, double tol = kRankTolerance);
int rank(const ConstraintMatrix& a, double tol = kRankTolerance);

/// H = (2 / z0) A^T A, so that l0 = 1/2 R^T H R with l0 = sum of squared residuals
/// at unit normalizer.
Eigen::MatrixXd hessian(const ParallelogramSet& parallelograms, int p, double z0 = 1.0);

struct SpectralSummary {
  Eigen::VectorXd singular_values;  // ascending, length p
  int nullity = 0;
  Eigen::VectorXd eigenvalues;   // of H, ascending
  Eigen::MatrixXd eigenvectors;  // columns, orthonormal, matching eigenvalues
  double t_h = 0.0;              // 1 / lambda_3, 0 when unconstrained
  double tolerance = kRankTolerance;
};

SpectralSummary spectral_summary(const ParallelogramSet& parallelograms, int p, double z0 = 1.0);

struct Timescale {
  double t_h = 0.0;  // 1 / lambda_3
  double n_h = 0.0;  // t_h / eta
};

/// Third-smallest eigenvalue lambda_3 of H gives t_h = 1/lambda_3 and
/// n_h = 1/(lambda_3 eta). Throws NumericError("unconstrained") when
/// lambda_3 is numerically zero, and InvalidArgument for p < 3 or eta <= 0.
Timescale slowest_timescale(const Eigen::MatrixXd& hessian, double eta, double tol = kRankTolerance);

struct CriticalPoint {
  double fraction = 0.0;
  double probability = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
};

/// For each fraction, draws `trials` seeded splits and reports the share
/// whose permissible set pins the linear structure (nullity exactly 2).
/// Trial t of fraction index f uses split seed derive_seed(seed, f * trials + t).
std::vector<CriticalPoint> critical_fraction_mc(const TaskSpec& spec, const std::vector<double>& fractions, int trials,
                                                std::uint64_t seed);

}  // namespace groklab
