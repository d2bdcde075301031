#pragma once

// Monte Carlo harness: full encode/attack/decode trials, error-rate
// estimation over a blocklength sweep, and exponent fitting.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fpwork/codec.hpp"
#include "fpwork/collusion.hpp"
#include "fpwork/decoders.hpp"

namespace fpw {

enum class CodeKind { constant_composition, tardos };
enum class DecoderKind { threshold, mpmi };

struct AttackSpec {
  /// interleaving, majority, minority, uniform_present, or channel
  std::string name = "interleaving";
  std::optional<ChannelSpec> channel;
  bool exchangeable = false;  ///< wrap in a random common letter permutation
};

struct ExperimentConfig {
  CodeKind code = CodeKind::constant_composition;
  CodeParams params;  ///< N is overridden by the sweep
  bool fixed_users = true;  ///< M from params.M; otherwise M = ceil(2^{N R})
  std::size_t user_cap = 1u << 20;
  TardosOptions tardos;
  std::size_t tardos_bins = 1;  ///< bias bins exposed to the decoder as w

  AttackSpec attack;
  DecoderKind decoder = DecoderKind::threshold;
  DecodeConfig decode;  ///< rate is filled per N from the code

  std::size_t coalition_size = 2;
  std::vector<std::size_t> coalition;  ///< fixed set; empty = uniform draw per trial
  /// Colluders hold codewords outside the decoder's codebook, so every listed
  /// user is innocent.
  bool external_coalition = false;

  std::size_t trials = 1000;
  std::vector<std::size_t> Ns{100};
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t max_resamples = 1000;

  void validate() const;
};

struct TrialRecord {
  std::vector<std::size_t> coalition;
  std::vector<std::size_t> accused;
  bool fp = false;
  bool miss_one = false;
  bool miss_all = false;
  std::size_t resamples = 0;
};

/// Error events of one decoded outcome against the true coalition.
TrialRecord classify(std::vector<std::size_t> coalition, std::vector<std::size_t> accused, bool external = false);

TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t n, std::uint64_t trial);

struct RateEstimate {
  std::uint64_t count = 0;
  double rate = 0.0;
  double lo = 0.0;  ///< Wilson 95%
  double hi = 0.0;
  double upper = 0.0;  ///< hi, or 3/T when no event was seen
};

RateEstimate rate_estimate(std::uint64_t count, std::uint64_t trials);
std::pair<double, double> wilson_interval(std::uint64_t count, std::uint64_t trials, double z = 1.959963984540054);

struct ExponentFit {
  double slope = 0.0;  ///< E in -log2 P ~ E N + c
  double stderr_ = 0.0;
  double intercept = 0.0;
  std::size_t used = 0;
  std::size_t dropped = 0;  ///< zero-rate points
};

/// Least-squares fit of -log2(rate) against N. Zero rates are dropped; at
/// least three usable points are required.
ExponentFit exponent_fit(const std::vector<std::pair<double, double>>& series);

struct PointEstimate {
  std::size_t N = 0;
  std::size_t users = 0;
  double rate_bits = 0.0;
  std::uint64_t trials = 0;
  RateEstimate fp, miss_one, miss_all;
  std::uint64_t resamples = 0;
  double seconds = 0.0;
};

struct EstimateReport {
  std::vector<PointEstimate> points;
  std::optional<ExponentFit> fp_fit, miss_one_fit, miss_all_fit;
  double seconds = 0.0;
};

EstimateReport estimate(const ExperimentConfig& cfg);

/// Fixed-column CSV (9 significant digits); timing is left out so the bytes
/// depend only on the config and seed.
std::string report_csv(const EstimateReport& rep);

}  // namespace fpw
