#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "fpwork/game.hpp"

namespace fpw::detail {

inline constexpr double kLogFloor = -60.0;  // stand-in for log2(0) in gradients

/// Joint law of (s, w, x_K) with x_K flattened (x_1 most significant).
struct InputJoint {
  std::size_t s_size = 1, w_size = 1, x_size = 2, K = 1, tuples = 1;
  std::vector<double> pe;  ///< [s][w][t]
  std::vector<double> pt;  ///< marginal of t

  static InputJoint from(const InputLaw& law, std::size_t K);
  std::size_t digit(std::size_t t, std::size_t k) const;
};

std::vector<std::size_t> tuple_digits(std::size_t t, std::size_t K, std::size_t x_size);
std::size_t pow_size(std::size_t base, std::size_t exp);

/// scale * I(X_U; Y | X_Z, S?, W?)
struct PayoffTerm {
  std::vector<std::size_t> u;
  std::vector<std::size_t> z;
  bool cond_s = true;
  bool cond_w = true;
  double scale = 1.0;
};

/// The candidate terms whose minimum is the objective.
std::vector<PayoffTerm> payoff_terms(const GameProblem& problem);

class TermEvaluator {
 public:
  TermEvaluator(const InputJoint& joint, PayoffTerm term, std::size_t y_size);

  double value(std::span<const double> table) const;
  /// Returns the value; `grad` receives d value / d table (same layout).
  double value_grad(std::span<const double> table, std::vector<double>& grad) const;
  const PayoffTerm& term() const { return term_; }

 private:
  void accumulate(std::span<const double> table) const;

  const InputJoint* joint_;
  PayoffTerm term_;
  std::size_t y_size_;
  std::vector<std::uint32_t> uz_;  // per e
  std::vector<std::uint32_t> z_;   // per e
  std::size_t n_uz_ = 1, n_z_ = 1;
  mutable std::vector<double> p_uzy_, p_zy_, p_uz_, p_z_;
};

/// Channel set as a product of simplices mapped linearly into the table,
/// optionally cut by one linear inequality lin . table <= lin_bound.
struct Polytope {
  using Vertex = std::vector<std::pair<std::uint32_t, double>>;
  struct Block {
    std::vector<Vertex> vertices;
  };

  std::size_t table_size = 0;
  std::vector<double> fixed;
  std::vector<Block> blocks;
  bool has_lin = false;
  std::vector<double> lin;
  double lin_bound = 0.0;

  using Weights = std::vector<std::vector<double>>;

  void table(const Weights& w, std::vector<double>& out) const;
  void block_grad(std::span<const double> grad, Weights& out) const;
  Weights uniform() const;
  /// Minimizes <g, w> (block gradient) over the polytope, honouring the cut.
  Weights lmo(const Weights& g) const;
  double lin_value(const Weights& w) const;
  /// A feasible starting point; throws Errc::infeasible when the cut is empty.
  Weights start() const;
};

Polytope build_polytope(const GameProblem& problem, const InputJoint& joint);
/// Allowed (t, y) cells of the feasible class, as a mask over the table.
std::vector<char> support_mask(const GameProblem& problem);
/// Composition id of every tuple (histogram of symbols, canonical order).
std::vector<std::size_t> composition_ids(std::size_t K, std::size_t x_size, std::size_t* count = nullptr);

struct FwResult {
  Polytope::Weights weights;
  double value = 0.0;
  double gap = 0.0;
  std::size_t iterations = 0;
};

/// Minimizes a convex objective over the polytope. `f` returns the value and
/// fills the table gradient.
using TableObjective = std::function<double(std::span<const double>, std::vector<double>*)>;
FwResult frank_wolfe(const Polytope& poly, const TableObjective& f, const Polytope::Weights* warm, double tol,
                     std::size_t max_iter);

/// Inner minimum over every payoff term with optional warm starts (one per term).
struct InnerState {
  std::vector<Polytope::Weights> weights;
};
InnerResult inner_solve(const InputLaw& law, const GameProblem& problem, InnerState* state, double tol);

ChannelSpec make_channel(const GameProblem& problem, std::vector<double> table);

/// Frozen-channel objective: min over terms of the term at `table`.
double frozen_payoff(const InputLaw& law, const GameProblem& problem, std::span<const double> table);

void project_simplex(std::span<double> v);

}  // namespace fpw::detail
