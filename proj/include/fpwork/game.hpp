#pragma once

// Max-min mutual-information games over fingerprinting input laws and
// collusion channels, constrained-divergence (pseudo sphere packing)
// exponents, and numeric checks of the fair-coalition entropy inequalities.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fpwork/collusion.hpp"
#include "fpwork/types.hpp"

namespace fpw {

enum class FeasibleClass { boneh_shaw, explicit_list, distortion };
enum class Objective { detect_one, detect_all, simple };

struct GameProblem {
  std::size_t K = 1;
  std::size_t x_size = 2;
  std::size_t y_size = 0;  ///< 0 = same as x_size
  std::size_t s_size = 1;
  std::size_t L = 1;  ///< time-sharing alphabet size
  std::vector<double> p_s;  ///< empty = uniform
  std::vector<double> d1;   ///< [s][x]; empty = no embedding constraint
  double D1 = std::numeric_limits<double>::infinity();

  FeasibleClass feasible = FeasibleClass::boneh_shaw;
  bool fair = true;  ///< restrict to permutation-invariant channels
  std::vector<ChannelSpec> channels;     ///< vertices for explicit_list
  std::optional<DistortionSpec> distortion;  ///< for the distortion class
  Objective objective = Objective::detect_one;

  // solver controls
  std::size_t restarts = 20;
  double grid_step = 1.0 / 16.0;
  std::size_t grid_cap = 4096;
  double fd_step = 1e-4;
  double inner_tol = 1e-8;
  std::size_t inner_max_iter = 10'000;
  std::size_t outer_max_iter = 300;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  /// Fills defaults and checks dimensions against the channel table cap.
  void validate();
  std::size_t tuples() const;
};

/// Encoder law p_W and p_{X|SW}, plus the host law it is paired with.
struct InputLaw {
  std::size_t s_size = 1;
  std::size_t w_size = 1;
  std::size_t x_size = 2;
  std::vector<double> p_s;
  std::vector<double> p_w;
  std::vector<double> p_x;  ///< flat [s][w][x]

  double px(std::size_t s, std::size_t w, std::size_t x) const { return p_x[(s * w_size + w) * x_size + x]; }
  static InputLaw uniform(const GameProblem& problem);
  void validate() const;
  /// E d1(S, X)
  double embedding_distortion(std::span<const double> d1) const;
};

struct InnerResult {
  ChannelSpec channel;
  double value = 0.0;
  double gap = 0.0;  ///< final linearization gap
  std::size_t iterations = 0;
  std::vector<std::size_t> subset;  ///< minimizing coalition subset for detect_all
};

/// Objective of the problem at a fixed (input law, channel) pair.
double evaluate_payoff(const InputLaw& law, const ChannelSpec& channel, const GameProblem& problem);

InnerResult inner_min_channel(const InputLaw& law, const GameProblem& problem);

struct GameSolution {
  double value = 0.0;
  InputLaw input_law;
  ChannelSpec worst_channel;
  std::size_t restarts = 0;
  std::size_t inner_iterations = 0;
  double gap = 0.0;  ///< inner linearization gap at the reported point
  double stationarity = 0.0;  ///< norm of the projected outer gradient step
  bool nonconcave = false;  ///< distinct local maxima across restarts
  std::vector<double> restart_values;
  double reevaluation_error = 0.0;
};

GameSolution solve_capacity(const GameProblem& problem);
GameSolution solve_capacity(const GameProblem& problem, std::span<const InputLaw> extra_starts);
GameSolution solve_capacity_simple(GameProblem problem);
/// Solves for each L in turn, seeding every solve with the previous optimum.
std::vector<GameSolution> solve_capacity_sweep(GameProblem problem, std::span<const std::size_t> Ls);

/// Embeds a law with |W| = L into one with |W| = L + extra by splitting the
/// last time-sharing symbol.
InputLaw extend_timeshare(const InputLaw& law, std::size_t new_w);

struct ExponentQuery {
  double R = 0.0;
  bool simple = false;               ///< per-user constraint I(X_m;Y|W) <= R
  std::size_t user = 0;              ///< m for the simple form
  std::vector<std::size_t> subset;   ///< A for the joint form; empty = all K
  std::vector<double> p_s_tilde;     ///< flat [w][s]; empty = p_S for every w
  std::size_t restarts = 6;
  std::uint64_t seed = 0;
};

struct ExponentResult {
  double value = 0.0;  ///< +infinity when the constraint set is empty
  bool feasible = true;
  double threshold = 0.0;   ///< inner-min payoff at the input law; value = 0 iff R >= threshold
  double violation = 0.0;   ///< max constraint violation at the reported point
  std::vector<double> joint;  ///< p~(s, w, x_1..x_K, y), flat, last axis fastest
  std::size_t starts = 0;
};

/// Value of the payoff whose inner minimum decides when the exponent vanishes.
double exponent_threshold(const InputLaw& law, const GameProblem& problem, const ExponentQuery& q);

ExponentResult pseudo_sphere_packing(const InputLaw& law, const GameProblem& problem, const ExponentQuery& q);
/// Channel-feasibility constraint dropped; divergence reference minimized over
/// the feasible channel set.
ExponentResult memoryless_exponent(const InputLaw& law, const GameProblem& problem, const ExponentQuery& q);
/// Exponents over an R grid, warm-started from neighbouring solutions.
std::vector<ExponentResult> exponent_sweep(const InputLaw& law, const GameProblem& problem, ExponentQuery q,
                                           std::span<const double> Rs, bool memoryless = false);

/// Divergence objective of the constrained program at a given joint
/// p~(s,w,x_K,y); `memoryless` switches to the minimized reference.
double exponent_objective(const InputLaw& law, const GameProblem& problem, const ExponentQuery& q,
                          std::span<const double> joint, bool memoryless);

struct FairInequalityEntry {
  std::size_t a = 0, b = 0;  ///< |A| <= |B|
  double huy_slack = 0.0;  ///< rhs - lhs of (1/|A|) H(X_A|Z X_rest) <= (1/|B|) H(X_B|Z X_rest)
  double hus_slack = 0.0;  ///< lhs - rhs of (1/|A|) H(X_A|Z) >= (1/|B|) H(X_B|Z)
  double i_slack = 0.0;    ///< lhs - rhs of the per-user information ordering given the side axes
  bool huy_equal = false, hus_equal = false, i_equal = false;
};

struct FairInequalityReport {
  std::vector<FairInequalityEntry> entries;
  double i2_slack = 0.0;  ///< (1/K) I(X_K;Y|side) - I(X_1;Y|side)
  bool i2_applicable = false;  ///< X_k conditionally i.i.d. given the side axes
  bool i2_equal = false;
  bool holds = true;
};

/// `joint` has axes X_1..X_K first, then the remaining axes. Z is every
/// non-X axis; `y_axes` and `side_axes` split Z for the information forms.
/// With `pair` set only that (|A|, |B|) is checked.
FairInequalityReport check_fair_inequalities(const Pmf& joint, std::size_t K, const Axes& y_axes,
                                             const Axes& side_axes,
                                             std::optional<std::pair<std::size_t, std::size_t>> pair = {});

}  // namespace fpw
