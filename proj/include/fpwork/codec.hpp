#pragma once

// Host and time-sharing sequences, randomized constant-composition
// fingerprint codebooks, user/letter permutation randomization, and the
// Tardos baseline construction.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "fpwork/rng.hpp"
#include "fpwork/types.hpp"

namespace fpw {

struct CodeParams {
  std::size_t N = 0;
  std::size_t M = 1;
  double rate = 0.0;  ///< bits/symbol; reported as log2(M)/N when M is given explicitly
  double delta = 0.0;
  std::size_t k_nom = 1;

  std::size_t s_size = 1;
  std::size_t x_size = 2;
  std::size_t w_size = 1;

  std::vector<double> p_s;           ///< host law, |S| entries
  std::vector<double> p_w;           ///< target time-sharing law, |W| entries
  std::vector<double> p_x_given_sw;  ///< target conditional law, flat [s][w][x]

  std::vector<double> d1;  ///< embedding distortion table [s][x]; empty = unconstrained
  double D1 = std::numeric_limits<double>::infinity();

  /// Fills defaults (uniform laws, R = log2(M)/N) and checks consistency.
  void validate();
  double p_x(std::size_t s, std::size_t w, std::size_t x) const {
    return p_x_given_sw[(s * w_size + w) * x_size + x];
  }
};

/// M = ceil(2^{N R}), clamped to `cap`.
std::size_t users_for_rate(std::size_t n, double rate, std::size_t cap);

/// Per-(s,w)-cell symbol multiset that every codeword must realize.
struct CellComposition {
  std::size_t x_size = 0;
  std::size_t cells = 0;
  std::vector<std::int64_t> counts;  ///< flat [cell][x]

  std::span<const std::int64_t> cell(std::size_t c) const {
    return {counts.data() + c * x_size, x_size};
  }
};

struct CodeSecret {
  std::uint64_t seed = 0;
  std::vector<std::size_t> user_perm;    ///< row r holds prototype row user_perm[r]; empty = identity
  std::vector<std::size_t> letter_perm;  ///< empty = identity
};

struct Codebook {
  CodeParams params;
  Sequence host;
  Sequence timeshare;
  CellComposition composition;
  std::vector<Sequence> rows;
  CodeSecret secret;

  std::size_t users() const { return rows.size(); }
  std::size_t length() const { return host.size(); }
  /// Per-position (s,w) cell id, s * |W| + w.
  std::vector<std::uint32_t> side_cells() const;
};

Sequence draw_host(std::span<const double> p_s, std::size_t n, Rng& rng);

/// Uniform draw from the type class of `counts` (sum must equal n).
Sequence sample_type_class(std::span<const std::int64_t> counts, std::size_t n, Rng& rng);

/// Uniform draw from the conditional type class: inside every cell c of
/// `cells`, a uniformly random arrangement of composition.cell(c).
Sequence sample_type_class(const CellComposition& composition, std::span<const std::uint32_t> cells,
                           Rng& rng);

/// Time-sharing sequence drawn uniformly from the type class of quantize(p_w, N).
Sequence draw_timeshare(std::span<const double> p_w, std::size_t n, Rng& rng);

CellComposition conditional_composition(const CodeParams& params, const Sequence& s, const Sequence& w);

/// Row m of the random code keyed by (seed, s, w, m); reproducible on demand.
Sequence generate_row(const CodeParams& params, const CellComposition& comp,
                      std::span<const std::uint32_t> cells, std::uint64_t seed, std::uint64_t context,
                      std::size_t m);

std::uint64_t sequence_fingerprint(const Sequence& s, const Sequence& w);

Codebook build_codebook(CodeParams params, Sequence s, Sequence w, std::uint64_t seed);

/// Convenience: draw host and time-sharing from the params' laws, then build.
Codebook generate_codebook(CodeParams params, std::uint64_t seed);

Codebook apply_rp(const Codebook& cb, Rng& rng);
Codebook apply_rm(const Codebook& cb, Rng& rng);
Codebook apply_rp(const Codebook& cb, std::span<const std::size_t> perm);
Codebook apply_rm(const Codebook& cb, std::span<const std::size_t> perm);
Codebook invert_rp(const Codebook& cb);
Codebook invert_rm(const Codebook& cb);

/// (pi x)_t = x_{pi(t)}
Sequence permute_letters(const Sequence& x, std::span<const std::size_t> perm);
Sequence unpermute_letters(const Sequence& x, std::span<const std::size_t> perm);
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

enum class TardosDensity { uniform, arcsine, fixed };

struct TardosOptions {
  TardosDensity density = TardosDensity::arcsine;
  double cutoff = 0.0;       ///< arcsine support [cutoff, 1-cutoff]
  double fixed_value = 0.5;  ///< test hook: every W_i equals this value
};

struct TardosCode {
  std::vector<double> bias;
  std::vector<Sequence> rows;
};

TardosCode tardos_codebook(std::size_t m, std::size_t n, const TardosOptions& opts, Rng& rng);

/// Bins the per-letter biases into `bins` equal-width cells of (0,1).
Sequence quantize_bias(std::span<const double> bias, std::size_t bins);

struct DistortionCheck {
  double value = 0.0;
  bool ok = true;
};

DistortionCheck check_embedding_distortion(const Sequence& s, const Sequence& x, std::span<const double> d1,
                                           double D1);

}  // namespace fpw
