#pragma once

// Single-user threshold decoder and the joint maximum penalized mutual
// information (MPMI) decoder, with guilt indices and a checker for the
// significance properties of MPMI outcomes.

#include <cstdint>
#include <span>
#include <vector>

#include "fpwork/codec.hpp"
#include "fpwork/types.hpp"

namespace fpw {

enum class SearchMode {
  exhaustive,  ///< error when the coalition count exceeds the budget
  greedy,
  automatic,  ///< exhaustive within budget, greedy otherwise
};

struct DecodeConfig {
  double rate = 0.0;
  double delta = 0.0;
  std::size_t k_max = 2;
  SearchMode mode = SearchMode::automatic;
  std::size_t budget = 2'000'000;  ///< cap on sum_k C(M, k) for exhaustive search
  double tie_tol = 1e-12;

  double threshold() const { return rate + delta; }
};

/// What the decoder conditions on. The threshold decoder uses w only; the
/// joint decoder uses (s, w). Degenerate axes (alphabet 1) are dropped.
struct SideInfo {
  std::vector<std::uint32_t> cells;  ///< empty = no conditioning
  std::size_t cell_count = 1;

  static SideInfo none() { return {}; }
  static SideInfo from(const Sequence* s, const Sequence* w);
  static SideInfo timeshare_only(const Codebook& cb);
  static SideInfo host_and_timeshare(const Codebook& cb);
};

struct CandidateScore {
  std::vector<std::size_t> users;
  double score = 0.0;
};

struct DecodeOutcome {
  std::vector<std::size_t> accused;  ///< sorted user ids (0-based)
  std::size_t best_k = 0;
  double best_score = 0.0;
  /// Threshold decoder: one entry per user. MPMI: the maximizing coalition of
  /// every size searched (the MPMI(k) profile).
  std::vector<CandidateScore> scores;
  bool exact = false;
  bool fell_back_to_greedy = false;
  std::size_t evaluated = 0;
};

struct UserGuilt {
  std::size_t user = 0;
  bool accused = false;
  double index = 0.0;
};

struct GuiltReport {
  double coalition_index = 0.0;
  std::vector<UserGuilt> users;
};

enum class Significance { holds, violated, inapplicable };

/// Rows, pirated copy and side information, pre-digested for scoring.
class DecodeContext {
 public:
  DecodeContext(std::span<const Sequence> rows, const Sequence& y, SideInfo side);

  std::size_t users() const { return rows_.size(); }
  std::size_t length() const { return y_.size(); }

  /// H(x_m | side), cached.
  double row_entropy(std::size_t m) const { return row_entropy_[m]; }
  /// Multivariate information of x_{a_1}; ...; x_{a_k}; (y, x_B) given side.
  double multi_info(std::span<const std::size_t> a, std::span<const std::size_t> b = {}) const;
  /// I(x_m; y | side)
  double pair_info(std::size_t m) const;

 private:
  double cond_entropy(std::span<const Sequence* const> vars) const;

  std::vector<const Sequence*> rows_;
  Sequence y_;
  SideInfo side_;
  std::vector<double> row_entropy_;
  double y_entropy_ = 0.0;
};

DecodeOutcome threshold_decode(const DecodeContext& ctx, const DecodeConfig& cfg);
DecodeOutcome threshold_decode(const Codebook& cb, const Sequence& y, const DecodeConfig& cfg);

/// İ(x_K; y | s,w) - |K| (R + Delta), computed as sum_i H(x_i|sw) - H(x_K|ysw) - k(R+Delta).
double mpmi_score(const DecodeContext& ctx, std::span<const std::size_t> coalition, const DecodeConfig& cfg);
double mpmi_score(const Codebook& cb, std::span<const std::size_t> coalition, const Sequence& y,
                  const DecodeConfig& cfg);

DecodeOutcome mpmi_decode(const DecodeContext& ctx, const DecodeConfig& cfg);
DecodeOutcome mpmi_decode(const Codebook& cb, const Sequence& y, const DecodeConfig& cfg);

GuiltReport guilt_indices(const DecodeContext& ctx, const DecodeOutcome& outcome, const DecodeConfig& cfg);
GuiltReport guilt_indices(const Codebook& cb, const Sequence& y, const DecodeOutcome& outcome,
                          const DecodeConfig& cfg);

/// Checks that every subset of the accused set is significant and that no
/// disjoint extension fitting within k_max is. Extensions larger than
/// k_max - |accused| are not examined.
Significance verify_significance(const DecodeContext& ctx, const DecodeOutcome& outcome, const DecodeConfig& cfg);
Significance verify_significance(const Codebook& cb, const Sequence& y, const DecodeOutcome& outcome,
                                 const DecodeConfig& cfg);

/// sum_{k=0}^{k_max} C(m, k), saturating at `cap + 1`.
std::size_t coalition_count(std::size_t m, std::size_t k_max, std::size_t cap);

}  // namespace fpw
