#include "groklab/lintheory.hpp"

#include <bit>

#include <algorithm>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "groklab/error.hpp"
#include "groklab/rng.hpp"

namespace groklab {

ConstraintMatrix build_A(const ParallelogramSet& parallelograms, int p) {
  ConstraintMatrix a;
  a.p = p;
  a.rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(parallelograms.size()), p);
  Eigen::Index r = 0;
  for (const auto& q : parallelograms) {
    if (std::max({q.i, q.j, q.m, q.n}) >= p) throw InvalidArgument("parallelogram index exceeds p");
    a.rows(r, q.i) += 1.0;
    a.rows(r, q.j) += 1.0;
    a.rows(r, q.m) -= 1.0;
    a.rows(r, q.n) -= 1.0;
    ++r;
  }
  return a;
}

ConstraintMatrix build_A(const ParallelogramSet& parallelograms) {
  return build_A(parallelograms, parallelograms.spec().p());
}

Eigen::VectorXd singular_values(const ConstraintMatrix& a) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(a.p);
  if (a.rows.rows() == 0) return out;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.rows);
  const Eigen::VectorXd& s = svd.singularValues();  // descending, length min(rows, p)
  for (Eigen::Index k = 0; k < s.size(); ++k) out(k) = s(k);
  std::sort(out.begin(), out.end());
  return out;
}

int nullity(const ConstraintMatrix& a, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("rank tolerance must be positive");
  const Eigen::VectorXd s = singular_values(a);
  if (a.rows.rows() == 0) return a.p;
  const double cutoff = tol * s.maxCoeff();
  return static_cast<int>(std::count_if(s.begin(), s.end(), [&](double v) { return v <= cutoff; }));
}

int rank(const ConstraintMatrix& a, double tol) { return a.p - nullity(a, tol); }

Eigen::MatrixXd hessian(const ParallelogramSet& parallelograms, int p, double z0) {
  if (!(z0 > 0.0)) throw InvalidArgument("normalizer Z0 must be positive");
  const auto a = build_A(parallelograms, p);
  return (2.0 / z0) * a.rows.transpose() * a.rows;
}

SpectralSummary spectral_summary(const ParallelogramSet& parallelograms, int p, double z0) {
  SpectralSummary out;
  const auto a = build_A(parallelograms, p);
  out.singular_values = singular_values(a);
  out.nullity = nullity(a);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian(parallelograms, p, z0));
  out.eigenvalues = eig.eigenvalues();
  out.eigenvectors = eig.eigenvectors();
  if (p >= 3 && out.nullity <= 2) out.t_h = 1.0 / out.eigenvalues(2);
  return out;
}

Timescale slowest_timescale(const Eigen::MatrixXd& hessian, double eta, double tol) {
  if (hessian.rows() < 3) throw InvalidArgument("slowest_timescale needs at least 3 eigenvalues");
  if (!(eta > 0.0)) throw InvalidArgument("step size must be positive");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& lam = eig.eigenvalues();
  const double scale = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
  if (lam(2) <= tol * scale) throw NumericError("unconstrained: third eigenvalue vanishes (nullity > 2)");
  Timescale out;
  out.t_h = 1.0 / lam(2);
  out.n_h = out.t_h / eta;
  return out;
}

std::vector<CriticalPoint> critical_fraction_mc(const TaskSpec& spec, const std::vector<double>& fractions, int trials,
                                                std::uint64_t seed) {
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  std::vector<CriticalPoint> out;
  out.reserve(fractions.size());
  for (std::size_t f = 0; f < fractions.size(); ++f) {
    // Streams keyed by the fraction value, so a point does not depend on the rest of the list.
    const auto stream = derive_seed(seed, std::bit_cast<std::uint64_t>(fractions[f]));
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
      const auto s = derive_seed(stream, static_cast<std::uint64_t>(t));
      const auto d = split(spec, Fraction::real(fractions[f]), s);
      if (nullity(build_A(permissible_set(d.train, spec))) == 2) ++hits;
    }
    out.push_back({fractions[f], static_cast<double>(hits) / trials, trials, seed});
  }
  return out;
}

}  // namespace groklab
