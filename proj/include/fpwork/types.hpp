#pragma once

// Method-of-types arithmetic: joint types of symbol sequences and the
// information functionals (entropy, mutual information, multivariate mutual
// information, divergence) evaluated on them. All logarithms are base 2.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fpwork/error.hpp"

namespace fpw {

using Symbol = std::uint16_t;
using Axes = std::vector<std::size_t>;

/// Tolerance used when comparing information quantities that should agree.
inline constexpr double kInfoTol = 1e-12;

class Sequence {
 public:
  Sequence() = default;
  Sequence(std::vector<Symbol> symbols, std::size_t alphabet);

  static Sequence constant(std::size_t n, Symbol s, std::size_t alphabet);

  std::size_t size() const { return symbols_.size(); }
  std::size_t alphabet() const { return alphabet_; }
  Symbol operator[](std::size_t t) const { return symbols_[t]; }
  std::span<const Symbol> symbols() const { return symbols_; }
  std::vector<Symbol>& mutable_symbols() { return symbols_; }

  friend bool operator==(const Sequence&, const Sequence&) = default;

 private:
  std::vector<Symbol> symbols_;
  std::size_t alphabet_ = 1;
};

/// Exact count tensor over a product of finite alphabets. Row-major, the last
/// axis varies fastest.
class JointType {
 public:
  JointType() = default;
  JointType(std::vector<std::size_t> dims, std::vector<std::int64_t> counts);

  static JointType of(std::span<const Sequence> seqs);
  static JointType of(std::initializer_list<const Sequence*> seqs);

  const std::vector<std::size_t>& dims() const { return dims_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::size_t rank() const { return dims_.size(); }
  std::int64_t total() const { return total_; }

  std::int64_t count(std::span<const std::size_t> index) const;
  double prob(std::span<const std::size_t> index) const;
  std::size_t flat_index(std::span<const std::size_t> index) const;

  JointType marginal(const Axes& keep) const;
  std::vector<double> pmf() const;

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
};

/// Real-valued probability table with the same layout as JointType.
class Pmf {
 public:
  Pmf() = default;
  Pmf(std::vector<std::size_t> dims, std::vector<double> values);

  static Pmf uniform(std::vector<std::size_t> dims);
  static Pmf from(const JointType& t);

  const std::vector<std::size_t>& dims() const { return dims_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t rank() const { return dims_.size(); }
  double total() const;

  double at(std::span<const std::size_t> index) const;
  Pmf marginal(const Axes& keep) const;

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> values_;
};

/// Addresses H(A|C) (partner empty) and I(A;B|C).
struct InfoQuery {
  Axes target;
  Axes partner;
  Axes cond;
};

double entropy(const JointType& t, const Axes& target, const Axes& cond = {});
double entropy(const Pmf& p, const Axes& target, const Axes& cond = {});
double entropy(const JointType& t, const InfoQuery& q);

double mutual_info(const JointType& t, const Axes& a, const Axes& b, const Axes& cond = {});
double mutual_info(const Pmf& p, const Axes& a, const Axes& b, const Axes& cond = {});
double mutual_info(const JointType& t, const InfoQuery& q);

/// Multivariate mutual information: sum of the parts' conditional entropies
/// minus their joint conditional entropy. Requires at least two disjoint parts.
double multi_info(const JointType& t, const std::vector<Axes>& parts, const Axes& cond = {});
double multi_info(const Pmf& p, const std::vector<Axes>& parts, const Axes& cond = {});

/// D(p||q) in bits; +infinity when p is not absolutely continuous w.r.t. q.
double kl_divergence(const Pmf& p, const Pmf& q);
double kl_divergence(const JointType& p, const Pmf& q);

/// D(p_{Y|X} || q_{Y|X} | p_X). Both conditionals are full-shape tables whose
/// slices along the non-conditioning axes sum to one; cond_law lives on the
/// conditioning axes only.
double conditional_kl_divergence(const Pmf& p_cond, const Pmf& q_cond, const Pmf& cond_law,
                                 const Axes& cond_axes);

struct TypeClassSize {
  double exact = 0.0;  ///< log2 |T| (or log2 |T_{rest|cond}| when conditioned)
  double lower = 0.0;  ///< N H - (prod dims) log2(N+1)
  double upper = 0.0;  ///< N H
};

TypeClassSize log_type_class_size(const JointType& t, const Axes& cond = {});

/// Largest-remainder rounding of p to a composition of n. Ties in the
/// remainder go to the lower symbol index.
std::vector<std::int64_t> quantize_counts(std::span<const double> p, std::int64_t n);
JointType quantize_pmf(std::span<const double> p, std::int64_t n);

/// Conditional entropy H(vars | cond) computed straight from sequences without
/// materializing a JointType. `cond` holds per-position cell ids in
/// [0, cond_cells). Used by the decoders' hot loops.
double sequence_entropy(std::span<const Sequence* const> vars, std::span<const std::uint32_t> cond,
                        std::size_t cond_cells);

}  // namespace fpw
