#pragma once

// Tasks, samples and train/validation splits.
//
// S3 conventions: the six permutations of {0,1,2} are indexed in
// lexicographic order of their one-line notation
//
//   0: 012   1: 021   2: 102   3: 120   4: 201   5: 210
//
// and label(i, j) is the index of sigma_i o sigma_j, where the left factor
// acts after the right one: (sigma_i o sigma_j)(x) = sigma_i(sigma_j(x)).

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace groklab {

enum class TaskKind { Addition, ModularAddition, PermutationS3 };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);

class TaskSpec {
 public:
  /// Throws InvalidArgument unless p >= 2 (and p == 6 for S3).
  TaskSpec(TaskKind kind, int p);

  static TaskSpec addition(int p) { return {TaskKind::Addition, p}; }
  static TaskSpec modular_addition(int p) { return {TaskKind::ModularAddition, p}; }
  static TaskSpec s3() { return {TaskKind::PermutationS3, 6}; }

  TaskKind kind() const { return kind_; }
  int p() const { return p_; }
  bool commutative() const { return kind_ != TaskKind::PermutationS3; }
  /// Number of distinct labels: 2p-1 for addition, p otherwise.
  int num_labels() const;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;

 private:
  TaskKind kind_;
  int p_;
};

struct Sample {
  int i = 0;
  int j = 0;
  int label = 0;

  friend bool operator==(const Sample& a, const Sample& b) { return a.i == b.i && a.j == b.j; }
  friend std::strong_ordering operator<=>(const Sample& a, const Sample& b) {
    if (auto c = a.i <=> b.i; c != 0) return c;
    return a.j <=> b.j;
  }
};

/// Group operation result. Throws InvalidArgument for out-of-range symbols.
int label(const TaskSpec& spec, int i, int j);

/// Builds the sample for (i, j), canonicalized (i <= j) for commutative tasks.
Sample make_sample(const TaskSpec& spec, int i, int j);

/// All distinct samples in lexicographic order: p(p+1)/2 for commutative
/// tasks, p^2 otherwise.
std::vector<Sample> enumerate_samples(const TaskSpec& spec);

/// Standard 3x3 permutation matrices, index-aligned with the S3 labels:
/// M(sigma) e_x = e_{sigma(x)}, so M(label(i,j)) = M(i) M(j).
std::array<Eigen::Matrix3d, 6> s3_matrices();

/// One-line notation of the S3 element with the given index.
std::array<int, 3> s3_permutation(int index);

/// A training-data fraction, either exact ("45/55") or floating ("0.4").
class Fraction {
 public:
  /// Parses "k/n" or a decimal literal. Throws InvalidArgument on bad input.
  static Fraction parse(std::string_view text);
  static Fraction exact(std::int64_t num, std::int64_t den);
  static Fraction real(double value);

  double value() const;
  bool is_exact() const { return den_ != 0; }
  /// round(value * total); exact fractions round half up in integer arithmetic.
  std::int64_t count_of(std::int64_t total) const;
  std::string to_string() const;

  friend bool operator==(const Fraction&, const Fraction&) = default;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 0;  // 0 for a floating fraction
  double real_ = 0.0;
};

struct DataSplit {
  std::vector<Sample> train;  // sorted
  std::vector<Sample> valid;  // sorted
  Fraction fraction = Fraction::real(1.0);
  std::uint64_t seed = 0;
};

/// Seeded Fisher-Yates shuffle of enumerate_samples(spec); the first
/// round(fraction * |D0|) samples form the training set. Throws
/// InvalidArgument if fraction is outside (0, 1] or the training set is empty.
DataSplit split(const TaskSpec& spec, const Fraction& fraction, std::uint64_t seed);

/// Membership test on a sorted sample list (ignores labels).
bool contains(const std::vector<Sample>& sorted_samples, const Sample& s);

}  // namespace groklab
