#pragma once

// Collusion-attack generators and feasibility validators.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpwork/rng.hpp"
#include "fpwork/types.hpp"

namespace fpw {

enum class ChannelClass { explicit_table, boneh_shaw, distortion, interleaving };

/// Coalition's host estimate f : X^K -> S and distortion d2 : S x Y -> R+.
struct DistortionSpec {
  std::size_t s_size = 1;
  std::vector<std::size_t> estimator;  ///< indexed by the flat input tuple
  std::vector<double> d2;              ///< [s][y]
  double D2 = 0.0;
};

/// Conditional p.m.f. p(y | x_1..x_K). Input tuples are flattened with x_1 as
/// the most significant digit; table index = tuple * |Y| + y.
class ChannelSpec {
 public:
  static constexpr std::size_t kMaxEntries = 10'000'000;
  static constexpr double kSliceTol = 1e-12;

  ChannelSpec() = default;
  ChannelSpec(std::size_t k, std::size_t x_size, std::size_t y_size, std::vector<double> table,
              ChannelClass cls = ChannelClass::explicit_table, std::optional<DistortionSpec> distortion = {});

  static ChannelSpec interleaving(std::size_t k, std::size_t x_size);
  static ChannelSpec identity(std::size_t x_size);
  /// Most frequent symbol among colluders; ties split uniformly.
  static ChannelSpec majority(std::size_t k, std::size_t x_size);
  /// Least frequent symbol among those present; ties split uniformly.
  static ChannelSpec minority(std::size_t k, std::size_t x_size);
  /// Uniform over the distinct symbols present among colluders.
  static ChannelSpec uniform_present(std::size_t k, std::size_t x_size);

  std::size_t coalition() const { return k_; }
  std::size_t x_size() const { return x_size_; }
  std::size_t y_size() const { return y_size_; }
  std::size_t tuples() const { return tuples_; }
  const std::vector<double>& table() const { return table_; }
  ChannelClass channel_class() const { return cls_; }
  const std::optional<DistortionSpec>& distortion() const { return distortion_; }

  double p(std::size_t tuple, std::size_t y) const { return table_[tuple * y_size_ + y]; }
  std::span<const double> slice(std::size_t tuple) const { return {table_.data() + tuple * y_size_, y_size_}; }

  std::vector<std::size_t> decode_tuple(std::size_t tuple) const;
  std::size_t encode_tuple(std::span<const std::size_t> xs) const;

 private:
  std::size_t k_ = 1;
  std::size_t x_size_ = 1;
  std::size_t y_size_ = 1;
  std::size_t tuples_ = 1;
  std::vector<double> table_;
  ChannelClass cls_ = ChannelClass::explicit_table;
  std::optional<DistortionSpec> distortion_;
};

struct FeasibilityReport {
  bool marking_ok = true;
  std::optional<double> distortion;
  std::optional<bool> distortion_ok;
  JointType conditional;  ///< joint type of (x_1, ..., x_K, y)
};

struct AttackResult {
  Sequence y;
  FeasibilityReport feasibility;
};

using Attack = std::function<Sequence(std::span<const Sequence>, Rng&)>;

/// Recomputes the feasibility report from (x_K, y).
FeasibilityReport assess(std::span<const Sequence> xs, const Sequence& y,
                         const std::optional<DistortionSpec>& distortion = {});

AttackResult interleave(std::span<const Sequence> xs, Rng& rng);
AttackResult apply_memoryless(std::span<const Sequence> xs, const ChannelSpec& ch, Rng& rng);

bool check_marking(std::span<const Sequence> xs, const Sequence& y);

struct DistortionValue {
  double value = 0.0;
  bool ok = true;
};

/// Almost-sure form: (1/N) sum_t d2(f(x_{K,t}), y_t) <= D2.
DistortionValue check_distortion_attack(std::span<const Sequence> xs, const Sequence& y,
                                        const DistortionSpec& spec);
/// Expected form under a channel table and an input law on X^K (flat, |X|^K entries).
DistortionValue expected_distortion(const ChannelSpec& ch, std::span<const double> input_law);
void validate_estimator(const DistortionSpec& spec, std::size_t k, std::size_t x_size, std::size_t y_size);

ChannelSpec permutation_average(const ChannelSpec& ch);
bool is_permutation_invariant(const ChannelSpec& ch, double tol = 1e-12);
/// True when the realized conditional type p_{y|x_K} is invariant under every
/// permutation of the colluders (compared on input tuples observed in both orders).
bool is_first_order_fair(std::span<const Sequence> xs, const Sequence& y, double tol = 1e-12);

Attack memoryless_attack(ChannelSpec ch);
Attack interleaving_attack();
/// Draws a uniform letter permutation, runs `base` on permuted inputs and
/// undoes the permutation on the output.
Attack wrap_exchangeable(Attack base);

/// Realized conditional type as CSV: x1..xK,y,count,p_y_given_x.
std::string conditional_type_csv(const JointType& conditional);

/// All K! permutations of {0..K-1} in lexicographic order. K <= 8.
std::vector<std::vector<std::size_t>> all_permutations(std::size_t k);

}  // namespace fpw
