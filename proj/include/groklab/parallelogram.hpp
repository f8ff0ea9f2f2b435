#pragma once

// Parallelogram algebra over learned representations.
//
// A parallelogram (i, j, m, n) states that the samples (i, j) and (m, n)
// share a label, so an ideal model embeds them onto the same decoder input:
//   vector mode:  E_i + E_j == E_m + E_n
//   matrix mode:  E_i E_j   == E_m E_n
//
// Canonical form: for commutative tasks each pair is sorted (i <= j, m <= n);
// the two pairs are then ordered so (i, j) < (m, n). Degenerate quadruples
// with (i, j) == (m, n) are never members of a set.

#include <compare>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "groklab/domain.hpp"

namespace groklab {

struct Parallelogram {
  int i = 0, j = 0, m = 0, n = 0;

  friend auto operator<=>(const Parallelogram&, const Parallelogram&) = default;
};

/// Canonical form of (i, j, m, n). Throws InvalidArgument for a degenerate quadruple.
Parallelogram canonical(Parallelogram q, bool commutative);

/// A sorted, duplicate-free set of canonical parallelograms for one task.
class ParallelogramSet {
 public:
  explicit ParallelogramSet(TaskSpec spec) : spec_(spec) {}

  /// Canonicalizes and inserts; returns false if already present.
  bool insert(Parallelogram q);
  bool contains(Parallelogram q) const;

  const TaskSpec& spec() const { return spec_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const std::vector<Parallelogram>& items() const { return items_; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  bool is_subset_of(const ParallelogramSet& other) const;

  friend bool operator==(const ParallelogramSet& a, const ParallelogramSet& b) {
    return a.spec_ == b.spec_ && a.items_ == b.items_;
  }

 private:
  TaskSpec spec_;
  std::vector<Parallelogram> items_;
};

/// Line-oriented text form: one "i j m n" per line, canonical order.
void write_text(std::ostream& out, const ParallelogramSet& set);
ParallelogramSet read_text(std::istream& in, const TaskSpec& spec);

enum class EmbeddingMode { Vector, Matrix };

/// p embeddings, one per row of `data`. Vector mode rows hold E_k in R^dim;
/// matrix mode rows hold the dim x dim matrix E_k flattened row-major.
struct Representation {
  using Storage = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  EmbeddingMode mode = EmbeddingMode::Vector;
  int dim = 1;
  Storage data;

  static Representation vectors(Storage rows);
  static Representation matrices(int side, Storage rows);
  /// E_k = a + k b for k = 0..p-1.
  static Representation linear(int p, const Eigen::VectorXd& offset, const Eigen::VectorXd& step);

  int size() const { return static_cast<int>(data.rows()); }
  Eigen::VectorXd vec(int k) const { return data.row(k).transpose(); }
  Eigen::MatrixXd mat(int k) const;
  bool all_finite() const { return data.allFinite(); }
};

struct RealizeOptions {
  double delta = 0.01;
  /// Matrix mode only: compare the Frobenius norm instead of its square.
  bool frobenius_sqrt = false;
};

/// P0(D): canonical quadruples with both pairs in D and equal labels.
ParallelogramSet permissible_set(const std::vector<Sample>& data, const TaskSpec& spec);

/// P0 = P0(D0) for the whole task.
ParallelogramSet full_permissible_set(const TaskSpec& spec);

/// Deviation of a parallelogram in R: Euclidean norm of the sum difference
/// (vector mode) or the squared Frobenius norm of the product difference
/// (matrix mode; its square root with frobenius_sqrt).
double deviation(const Representation& rep, Parallelogram q, const RealizeOptions& opts = {});

/// Members of P0 realized by R within delta (inclusive).
ParallelogramSet realized_set(const Representation& rep, const TaskSpec& spec, const RealizeOptions& opts = {});

/// |realized_set| / |P0|. Throws InvalidArgument if the task has no parallelograms.
double rqi(const Representation& rep, const TaskSpec& spec, const RealizeOptions& opts = {});

/// One-hop augmentation: D plus every (i, j) linked to a D sample by a
/// parallelogram of P. Multi-hop chains are not followed. Returns sorted samples.
std::vector<Sample> augment(const std::vector<Sample>& data, const ParallelogramSet& parallelograms);

/// |augment(D, P)| / |D0|.
double predicted_acc(const std::vector<Sample>& data, const ParallelogramSet& parallelograms);

/// P0(D) plus every q in P0 whose constraint row lies in the row space of
/// A(P0(D)) (rank test). Commutative tasks only.
ParallelogramSet ideal_closure(const std::vector<Sample>& data, const TaskSpec& spec);

double rqi_upper(const std::vector<Sample>& data, const TaskSpec& spec);
double acc_upper(const std::vector<Sample>& data, const TaskSpec& spec);

/// Fixpoint of the non-abelian deduction rule. Each parallelogram
/// E_i E_j = E_m E_n equates the left quotient E_m^-1 E_i with the right
/// quotient E_n E_j^-1 (and their inverses); quotient classes are kept in a
/// union-find and every q in P0 whose two quotients share a class is emitted.
ParallelogramSet nonabelian_closure(const std::vector<Sample>& data, const TaskSpec& spec);

}  // namespace groklab
