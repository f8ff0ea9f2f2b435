#include "groklab/domain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "groklab/error.hpp"
#include "groklab/rng.hpp"

namespace groklab {

namespace {

constexpr std::array<std::array<int, 3>, 6> kS3 = {{
    {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
}};

int s3_index(const std::array<int, 3>& perm) {
  for (int k = 0; k < 6; ++k)
    if (kS3[k] == perm) return k;
  throw InvalidArgument("not a permutation of {0,1,2}");
}

int s3_compose(int left, int right) {
  std::array<int, 3> out{};
  for (int x = 0; x < 3; ++x) out[x] = kS3[left][kS3[right][x]];
  return s3_index(out);
}

}  // namespace

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Addition: return "addition";
    case TaskKind::ModularAddition: return "modular_addition";
    case TaskKind::PermutationS3: return "s3";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "addition" || name == "add") return TaskKind::Addition;
  if (name == "modular_addition" || name == "modadd" || name == "mod") return TaskKind::ModularAddition;
  if (name == "s3" || name == "permutation" || name == "permutation_s3") return TaskKind::PermutationS3;
  throw InvalidArgument("unknown task kind '" + std::string(name) + "'");
}

TaskSpec::TaskSpec(TaskKind kind, int p) : kind_(kind), p_(p) {
  if (p < 2) throw InvalidArgument("task size p must be >= 2");
  if (kind == TaskKind::PermutationS3 && p != 6) throw InvalidArgument("S3 task requires p = 6");
  if (p > 64) throw InvalidArgument("task size p must be <= 64");
}

int TaskSpec::num_labels() const { return kind_ == TaskKind::Addition ? 2 * p_ - 1 : p_; }

int label(const TaskSpec& spec, int i, int j) {
  const int p = spec.p();
  if (i < 0 || j < 0 || i >= p || j >= p)
    throw InvalidArgument("symbol index out of range: (" + std::to_string(i) + "," + std::to_string(j) + ")");
  switch (spec.kind()) {
    case TaskKind::Addition: return i + j;
    case TaskKind::ModularAddition: return (i + j) % p;
    case TaskKind::PermutationS3: return s3_compose(i, j);
  }
  return -1;
}

Sample make_sample(const TaskSpec& spec, int i, int j) {
  const int lab = label(spec, i, j);
  if (spec.commutative() && i > j) std::swap(i, j);
  return {i, j, lab};
}

std::vector<Sample> enumerate_samples(const TaskSpec& spec) {
  const int p = spec.p();
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(p * p));
  for (int i = 0; i < p; ++i)
    for (int j = spec.commutative() ? i : 0; j < p; ++j) out.push_back({i, j, label(spec, i, j)});
  return out;
}

std::array<int, 3> s3_permutation(int index) {
  if (index < 0 || index >= 6) throw InvalidArgument("S3 index out of range");
  return kS3[index];
}

std::array<Eigen::Matrix3d, 6> s3_matrices() {
  std::array<Eigen::Matrix3d, 6> out;
  for (int k = 0; k < 6; ++k) {
    out[k].setZero();
    for (int x = 0; x < 3; ++x) out[k](kS3[k][x], x) = 1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fraction

Fraction Fraction::exact(std::int64_t num, std::int64_t den) {
  if (den <= 0 || num < 0) throw InvalidArgument("invalid exact fraction");
  const auto g = std::gcd(num, den);
  Fraction f;
  f.num_ = num / (g == 0 ? 1 : g);
  f.den_ = den / (g == 0 ? 1 : g);
  f.real_ = static_cast<double>(f.num_) / static_cast<double>(f.den_);
  return f;
}

Fraction Fraction::real(double value) {
  if (!std::isfinite(value)) throw InvalidArgument("fraction must be finite");
  Fraction f;
  f.real_ = value;
  return f;
}

Fraction Fraction::parse(std::string_view text) {
  auto parse_int = [&](std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw InvalidArgument("bad fraction '" + std::string(text) + "'");
    return v;
  };
  if (auto slash = text.find('/'); slash != std::string_view::npos)
    return exact(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw InvalidArgument("bad fraction '" + std::string(text) + "'");
  return real(v);
}

double Fraction::value() const { return real_; }

std::int64_t Fraction::count_of(std::int64_t total) const {
  if (is_exact()) return (2 * num_ * total + den_) / (2 * den_);
  return std::llround(real_ * static_cast<double>(total));
}

std::string Fraction::to_string() const {
  if (is_exact()) return std::to_string(num_) + "/" + std::to_string(den_);
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, real_);
  (void)ec;
  return {buf, ptr};
}

// ---------------------------------------------------------------------------
// Splits

DataSplit split(const TaskSpec& spec, const Fraction& fraction, std::uint64_t seed) {
  if (!(fraction.value() > 0.0) || fraction.value() > 1.0)
    throw InvalidArgument("fraction must lie in (0, 1], got " + fraction.to_string());
  auto all = enumerate_samples(spec);
  const auto n_train = fraction.count_of(static_cast<std::int64_t>(all.size()));
  if (n_train <= 0) throw InvalidArgument("fraction " + fraction.to_string() + " yields an empty training set");

  Rng rng(seed);
  rng.shuffle(std::span<Sample>(all));

  DataSplit out;
  out.fraction = fraction;
  out.seed = seed;
  out.train.assign(all.begin(), all.begin() + n_train);
  out.valid.assign(all.begin() + n_train, all.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.valid.begin(), out.valid.end());
  return out;
}

bool contains(const std::vector<Sample>& sorted_samples, const Sample& s) {
  return std::binary_search(sorted_samples.begin(), sorted_samples.end(), s);
}

}  // namespace groklab
