#include "groklab/parallelogram.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "groklab/error.hpp"
#include "groklab/lintheory.hpp"

namespace groklab {

Parallelogram canonical(Parallelogram q, bool commutative) {
  if (commutative) {
    if (q.i > q.j) std::swap(q.i, q.j);
    if (q.m > q.n) std::swap(q.m, q.n);
  }
  if (std::pair(q.i, q.j) == std::pair(q.m, q.n)) throw InvalidArgument("degenerate parallelogram");
  if (std::pair(q.m, q.n) < std::pair(q.i, q.j)) q = {q.m, q.n, q.i, q.j};
  return q;
}

bool ParallelogramSet::insert(Parallelogram q) {
  q = canonical(q, spec_.commutative());
  auto it = std::lower_bound(items_.begin(), items_.end(), q);
  if (it != items_.end() && *it == q) return false;
  items_.insert(it, q);
  return true;
}

bool ParallelogramSet::contains(Parallelogram q) const {
  q = canonical(q, spec_.commutative());
  return std::binary_search(items_.begin(), items_.end(), q);
}

bool ParallelogramSet::is_subset_of(const ParallelogramSet& other) const {
  return std::includes(other.items_.begin(), other.items_.end(), items_.begin(), items_.end());
}

void write_text(std::ostream& out, const ParallelogramSet& set) {
  for (const auto& q : set) out << q.i << ' ' << q.j << ' ' << q.m << ' ' << q.n << '\n';
}

ParallelogramSet read_text(std::istream& in, const TaskSpec& spec) {
  ParallelogramSet out(spec);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Parallelogram q;
    if (!(ls >> q.i >> q.j >> q.m >> q.n)) throw InvalidArgument("malformed parallelogram line: " + line);
    out.insert(q);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Representation

Representation Representation::vectors(Storage rows) {
  Representation r;
  r.mode = EmbeddingMode::Vector;
  r.dim = static_cast<int>(rows.cols());
  r.data = std::move(rows);
  return r;
}

Representation Representation::matrices(int side, Storage rows) {
  if (rows.cols() != side * side) throw InvalidArgument("matrix embeddings need side*side columns");
  Representation r;
  r.mode = EmbeddingMode::Matrix;
  r.dim = side;
  r.data = std::move(rows);
  return r;
}

Representation Representation::linear(int p, const Eigen::VectorXd& offset, const Eigen::VectorXd& step) {
  Storage rows(p, offset.size());
  for (int k = 0; k < p; ++k) rows.row(k) = (offset + k * step).transpose();
  return vectors(std::move(rows));
}

Eigen::MatrixXd Representation::mat(int k) const {
  Eigen::MatrixXd m(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) m(r, c) = data(k, r * dim + c);
  return m;
}

// ---------------------------------------------------------------------------
// Sets

ParallelogramSet permissible_set(const std::vector<Sample>& data, const TaskSpec& spec) {
  std::vector<Sample> d;
  d.reserve(data.size());
  for (const auto& s : data) d.push_back(make_sample(spec, s.i, s.j));
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());

  ParallelogramSet out(spec);
  for (std::size_t a = 0; a < d.size(); ++a)
    for (std::size_t b = a + 1; b < d.size(); ++b)
      if (d[a].label == d[b].label) out.insert({d[a].i, d[a].j, d[b].i, d[b].j});
  return out;
}

ParallelogramSet full_permissible_set(const TaskSpec& spec) { return permissible_set(enumerate_samples(spec), spec); }

double deviation(const Representation& rep, Parallelogram q, const RealizeOptions& opts) {
  if (rep.mode == EmbeddingMode::Vector) {
    return (rep.data.row(q.i) + rep.data.row(q.j) - rep.data.row(q.m) - rep.data.row(q.n)).norm();
  }
  const double sq = (rep.mat(q.i) * rep.mat(q.j) - rep.mat(q.m) * rep.mat(q.n)).squaredNorm();
  return opts.frobenius_sqrt ? std::sqrt(sq) : sq;
}

ParallelogramSet realized_set(const Representation& rep, const TaskSpec& spec, const RealizeOptions& opts) {
  if (rep.size() != spec.p()) throw InvalidArgument("representation size does not match the task");
  if (!(opts.delta >= 0.0)) throw InvalidArgument("delta must be non-negative");
  ParallelogramSet out(spec);
  for (const auto& q : full_permissible_set(spec))
    if (deviation(rep, q, opts) <= opts.delta) out.insert(q);
  return out;
}

double rqi(const Representation& rep, const TaskSpec& spec, const RealizeOptions& opts) {
  const auto total = full_permissible_set(spec).size();
  if (total == 0) throw InvalidArgument("degenerate task: no permissible parallelograms");
  return static_cast<double>(realized_set(rep, spec, opts).size()) / static_cast<double>(total);
}

std::vector<Sample> augment(const std::vector<Sample>& data, const ParallelogramSet& parallelograms) {
  const auto& spec = parallelograms.spec();
  std::vector<Sample> base;
  for (const auto& s : data) base.push_back(make_sample(spec, s.i, s.j));
  std::sort(base.begin(), base.end());
  base.erase(std::unique(base.begin(), base.end()), base.end());

  std::vector<Sample> out = base;
  for (const auto& q : parallelograms) {
    const auto first = make_sample(spec, q.i, q.j);
    const auto second = make_sample(spec, q.m, q.n);
    if (contains(base, second)) out.push_back(first);
    if (contains(base, first)) out.push_back(second);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double predicted_acc(const std::vector<Sample>& data, const ParallelogramSet& parallelograms) {
  const auto total = enumerate_samples(parallelograms.spec()).size();
  return static_cast<double>(augment(data, parallelograms).size()) / static_cast<double>(total);
}

ParallelogramSet ideal_closure(const std::vector<Sample>& data, const TaskSpec& spec) {
  if (!spec.commutative())
    throw InvalidArgument("ideal_closure needs a commutative task; use nonabelian_closure");
  ParallelogramSet out = permissible_set(data, spec);
  if (out.empty()) return out;

  const ConstraintMatrix base = build_A(out, spec.p());
  const int base_rank = rank(base);
  ConstraintMatrix extended{Eigen::MatrixXd(base.rows.rows() + 1, spec.p()), spec.p()};
  extended.rows.topRows(base.rows.rows()) = base.rows;

  for (const auto& q : full_permissible_set(spec)) {
    if (out.contains(q)) continue;
    extended.rows.bottomRows(1).setZero();
    extended.rows(base.rows.rows(), q.i) += 1.0;
    extended.rows(base.rows.rows(), q.j) += 1.0;
    extended.rows(base.rows.rows(), q.m) -= 1.0;
    extended.rows(base.rows.rows(), q.n) -= 1.0;
    if (rank(extended) == base_rank) out.insert(q);
  }
  return out;
}

double rqi_upper(const std::vector<Sample>& data, const TaskSpec& spec) {
  const auto total = full_permissible_set(spec).size();
  if (total == 0) throw InvalidArgument("degenerate task: no permissible parallelograms");
  return static_cast<double>(ideal_closure(data, spec).size()) / static_cast<double>(total);
}

double acc_upper(const std::vector<Sample>& data, const TaskSpec& spec) {
  return predicted_acc(data, ideal_closure(data, spec));
}

// ---------------------------------------------------------------------------
// Non-abelian deduction

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[std::max(a, b)] = std::min(a, b);
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

// Quotient nodes: left(x, y) = E_x^-1 E_y and right(x, y) = E_x E_y^-1.
struct QuotientIndex {
  int p;
  std::size_t left(int x, int y) const { return static_cast<std::size_t>(x * p + y); }
  std::size_t right(int x, int y) const { return static_cast<std::size_t>(p * p + x * p + y); }
};

}  // namespace

ParallelogramSet nonabelian_closure(const std::vector<Sample>& data, const TaskSpec& spec) {
  const int p = spec.p();
  const QuotientIndex node{p};
  UnionFind classes(static_cast<std::size_t>(2 * p * p));
  // Every trivial quotient is the identity.
  for (int x = 0; x < p; ++x) {
    classes.unite(node.left(x, x), node.left(0, 0));
    classes.unite(node.right(x, x), node.left(0, 0));
  }
  // E_i E_j = E_m E_n  <=>  E_m^-1 E_i = E_n E_j^-1  <=>  E_i^-1 E_m = E_j E_n^-1.
  auto apply = [&](const Parallelogram& q) {
    const bool a = classes.unite(node.left(q.m, q.i), node.right(q.n, q.j));
    const bool b = classes.unite(node.left(q.i, q.m), node.right(q.j, q.n));
    return a || b;
  };

  ParallelogramSet out = permissible_set(data, spec);
  for (const auto& q : out) apply(q);

  const auto all = full_permissible_set(spec);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& q : all) {
      if (out.contains(q)) continue;
      if (classes.find(node.left(q.m, q.i)) == classes.find(node.right(q.n, q.j))) {
        out.insert(q);
        apply(q);
        changed = true;
      }
    }
  }
  return out;
}

}  // namespace groklab
