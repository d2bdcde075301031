#include "fpwork/codec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace fpw {

namespace {

void check_pmf(std::span<const double> p, std::size_t size, const char* what) {
  require(p.size() == size, std::string(what) + ": wrong number of entries");
  double sum = 0.0;
  for (double v : p) {
    require(v >= 0.0 && std::isfinite(v), std::string(what) + ": invalid probability");
    sum += v;
  }
  require(std::abs(sum - 1.0) <= 1e-9, std::string(what) + ": probabilities must sum to 1");
}

std::vector<double> uniform_law(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

}  // namespace

void CodeParams::validate() {
  require(N >= 1, "code params: N must be >= 1");
  require(M >= 1, "code params: M must be >= 1");
  require(s_size >= 1 && x_size >= 1 && w_size >= 1, "code params: alphabet sizes must be >= 1");
  require(delta >= 0.0, "code params: Delta must be >= 0");
  if (p_s.empty()) p_s = uniform_law(s_size);
  if (p_w.empty()) p_w = uniform_law(w_size);
  if (p_x_given_sw.empty()) {
    for (std::size_t c = 0; c < s_size * w_size; ++c) {
      auto u = uniform_law(x_size);
      p_x_given_sw.insert(p_x_given_sw.end(), u.begin(), u.end());
    }
  }
  check_pmf(p_s, s_size, "p_s");
  check_pmf(p_w, w_size, "p_w");
  require(p_x_given_sw.size() == s_size * w_size * x_size, "p_x_given_sw: wrong number of entries");
  for (std::size_t c = 0; c < s_size * w_size; ++c)
    check_pmf(std::span<const double>(p_x_given_sw).subspan(c * x_size, x_size), x_size, "p_x_given_sw");
  if (!d1.empty()) require(d1.size() == s_size * x_size, "d1 table must be |S| x |X|");
  if (rate <= 0.0) rate = std::log2(static_cast<double>(M)) / static_cast<double>(N);
}

std::size_t users_for_rate(std::size_t n, double rate, std::size_t cap) {
  require(rate >= 0.0, "rate must be >= 0");
  const double m = std::ceil(std::exp2(static_cast<double>(n) * rate) - 1e-9);
  if (!(m < static_cast<double>(cap))) return cap;
  return std::max<std::size_t>(1, static_cast<std::size_t>(m));
}

std::vector<std::uint32_t> Codebook::side_cells() const {
  std::vector<std::uint32_t> cells(host.size());
  for (std::size_t t = 0; t < cells.size(); ++t)
    cells[t] = static_cast<std::uint32_t>(host[t] * params.w_size + timeshare[t]);
  return cells;
}

Sequence draw_host(std::span<const double> p_s, std::size_t n, Rng& rng) {
  check_pmf(p_s, p_s.size(), "host law");
  require(n >= 1, "draw_host: N must be >= 1");
  std::vector<Symbol> out(n);
  for (auto& v : out) v = static_cast<Symbol>(rng.categorical(p_s));
  return Sequence(std::move(out), p_s.size());
}

Sequence sample_type_class(std::span<const std::int64_t> counts, std::size_t n, Rng& rng) {
  std::int64_t total = 0;
  for (auto c : counts) {
    require(c >= 0, "sample_type_class: negative count");
    total += c;
  }
  require(total == static_cast<std::int64_t>(n), "sample_type_class: composition does not total N");
  std::vector<Symbol> out;
  out.reserve(n);
  for (std::size_t a = 0; a < counts.size(); ++a) out.insert(out.end(), counts[a], static_cast<Symbol>(a));
  rng.shuffle(std::span<Symbol>(out));
  return Sequence(std::move(out), counts.size());
}

Sequence sample_type_class(const CellComposition& comp, std::span<const std::uint32_t> cells, Rng& rng) {
  std::vector<std::vector<std::size_t>> positions(comp.cells);
  for (std::size_t t = 0; t < cells.size(); ++t) {
    require(cells[t] < comp.cells, "sample_type_class: cell id out of range");
    positions[cells[t]].push_back(t);
  }
  std::vector<Symbol> out(cells.size());
  std::vector<Symbol> bag;
  for (std::size_t c = 0; c < comp.cells; ++c) {
    const auto cc = comp.cell(c);
    const auto total = std::accumulate(cc.begin(), cc.end(), std::int64_t{0});
    require(total == static_cast<std::int64_t>(positions[c].size()),
            "sample_type_class: composition does not match cell size");
    bag.clear();
    for (std::size_t a = 0; a < comp.x_size; ++a) bag.insert(bag.end(), cc[a], static_cast<Symbol>(a));
    rng.shuffle(std::span<Symbol>(bag));
    for (std::size_t i = 0; i < bag.size(); ++i) out[positions[c][i]] = bag[i];
  }
  return Sequence(std::move(out), comp.x_size);
}

Sequence draw_timeshare(std::span<const double> p_w, std::size_t n, Rng& rng) {
  return sample_type_class(quantize_counts(p_w, static_cast<std::int64_t>(n)), n, rng);
}

CellComposition conditional_composition(const CodeParams& params, const Sequence& s, const Sequence& w) {
  require(s.size() == params.N && w.size() == params.N, "host/time-sharing length must equal N");
  require(s.alphabet() == params.s_size && w.alphabet() == params.w_size,
          "host/time-sharing alphabet mismatch");
  CellComposition comp;
  comp.x_size = params.x_size;
  comp.cells = params.s_size * params.w_size;
  comp.counts.assign(comp.cells * comp.x_size, 0);
  std::vector<std::int64_t> cell_size(comp.cells, 0);
  for (std::size_t t = 0; t < params.N; ++t) ++cell_size[s[t] * params.w_size + w[t]];
  for (std::size_t c = 0; c < comp.cells; ++c) {
    if (cell_size[c] == 0) continue;
    std::span<const double> law(params.p_x_given_sw.data() + c * params.x_size, params.x_size);
    auto q = quantize_counts(law, cell_size[c]);
    std::copy(q.begin(), q.end(), comp.counts.begin() + static_cast<std::ptrdiff_t>(c * comp.x_size));
  }
  if (!params.d1.empty() && std::isfinite(params.D1)) {
    double d = 0.0;
    for (std::size_t c = 0; c < comp.cells; ++c) {
      const std::size_t sv = c / params.w_size;
      for (std::size_t x = 0; x < comp.x_size; ++x)
        d += static_cast<double>(comp.counts[c * comp.x_size + x]) * params.d1[sv * params.x_size + x];
    }
    d /= static_cast<double>(params.N);
    if (d > params.D1 + 1e-12)
      throw Error(Errc::infeasible, "target conditional type violates the embedding distortion budget (" +
                                        std::to_string(d) + " > " + std::to_string(params.D1) + ")");
  }
  return comp;
}

std::uint64_t sequence_fingerprint(const Sequence& s, const Sequence& w) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::size_t t = 0; t < s.size(); ++t) h = splitmix64(h ^ (std::uint64_t{s[t]} << 16 | w[t]));
  return h;
}

Sequence generate_row(const CodeParams&, const CellComposition& comp, std::span<const std::uint32_t> cells,
                      std::uint64_t seed, std::uint64_t context, std::size_t m) {
  Rng rng = Rng::derive(seed, Stream::codeword, context, m);
  return sample_type_class(comp, cells, rng);
}

Codebook build_codebook(CodeParams params, Sequence s, Sequence w, std::uint64_t seed) {
  params.validate();
  Codebook cb;
  cb.composition = conditional_composition(params, s, w);
  {
    // w must lie in the target type class.
    const auto target = quantize_counts(params.p_w, static_cast<std::int64_t>(params.N));
    std::vector<std::int64_t> got(params.w_size, 0);
    for (std::size_t t = 0; t < w.size(); ++t) ++got[w[t]];
    require(got == target, "time-sharing sequence is not in the target type class");
  }
  cb.params = params;
  cb.host = std::move(s);
  cb.timeshare = std::move(w);
  cb.secret.seed = seed;
  const auto cells = cb.side_cells();
  const auto context = sequence_fingerprint(cb.host, cb.timeshare);
  cb.rows.reserve(params.M);
  for (std::size_t m = 0; m < params.M; ++m)
    cb.rows.push_back(generate_row(params, cb.composition, cells, seed, context, m));
  return cb;
}

Codebook generate_codebook(CodeParams params, std::uint64_t seed) {
  params.validate();
  Rng host_rng = Rng::derive(seed, Stream::host);
  Rng w_rng = Rng::derive(seed, Stream::timeshare);
  auto s = draw_host(params.p_s, params.N, host_rng);
  auto w = draw_timeshare(params.p_w, params.N, w_rng);
  return build_codebook(std::move(params), std::move(s), std::move(w), seed);
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(p));
  return p;
}

namespace {

void check_permutation(std::span<const std::size_t> perm, std::size_t n) {
  require(perm.size() == n, "permutation has wrong size");
  std::vector<bool> seen(n, false);
  for (auto v : perm) {
    require(v < n && !seen[v], "not a permutation");
    seen[v] = true;
  }
}

}  // namespace

Sequence permute_letters(const Sequence& x, std::span<const std::size_t> perm) {
  check_permutation(perm, x.size());
  std::vector<Symbol> out(x.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = x[perm[t]];
  return Sequence(std::move(out), x.alphabet());
}

Sequence unpermute_letters(const Sequence& x, std::span<const std::size_t> perm) {
  check_permutation(perm, x.size());
  std::vector<Symbol> out(x.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[perm[t]] = x[t];
  return Sequence(std::move(out), x.alphabet());
}

Codebook apply_rp(const Codebook& cb, std::span<const std::size_t> perm) {
  check_permutation(perm, cb.users());
  Codebook out = cb;
  std::vector<std::size_t> prior = cb.secret.user_perm;
  if (prior.empty()) {
    prior.resize(cb.users());
    std::iota(prior.begin(), prior.end(), std::size_t{0});
  }
  out.secret.user_perm.resize(cb.users());
  for (std::size_t r = 0; r < cb.users(); ++r) {
    out.rows[r] = cb.rows[perm[r]];
    out.secret.user_perm[r] = prior[perm[r]];
  }
  return out;
}

Codebook apply_rp(const Codebook& cb, Rng& rng) {
  auto perm = random_permutation(cb.users(), rng);
  return apply_rp(cb, perm);
}

Codebook invert_rp(const Codebook& cb) {
  if (cb.secret.user_perm.empty()) return cb;
  Codebook out = cb;
  for (std::size_t r = 0; r < cb.users(); ++r) out.rows[cb.secret.user_perm[r]] = cb.rows[r];
  out.secret.user_perm.clear();
  return out;
}

Codebook apply_rm(const Codebook& cb, std::span<const std::size_t> perm) {
  check_permutation(perm, cb.length());
  Codebook out = cb;
  out.host = unpermute_letters(cb.host, perm);
  out.timeshare = unpermute_letters(cb.timeshare, perm);
  for (auto& r : out.rows) r = unpermute_letters(r, perm);
  // prototype = sigma(current) with sigma(t) = perm(prior(t)).
  out.secret.letter_perm.resize(cb.length());
  for (std::size_t t = 0; t < cb.length(); ++t)
    out.secret.letter_perm[t] = cb.secret.letter_perm.empty() ? perm[t] : perm[cb.secret.letter_perm[t]];
  return out;
}

Codebook apply_rm(const Codebook& cb, Rng& rng) {
  auto perm = random_permutation(cb.length(), rng);
  return apply_rm(cb, perm);
}

Codebook invert_rm(const Codebook& cb) {
  if (cb.secret.letter_perm.empty()) return cb;
  Codebook out = cb;
  const auto& p = cb.secret.letter_perm;
  out.host = permute_letters(cb.host, p);
  out.timeshare = permute_letters(cb.timeshare, p);
  for (auto& r : out.rows) r = permute_letters(r, p);
  out.secret.letter_perm.clear();
  return out;
}

TardosCode tardos_codebook(std::size_t m, std::size_t n, const TardosOptions& opts, Rng& rng) {
  require(m >= 1 && n >= 1, "tardos_codebook: M and N must be >= 1");
  TardosCode code;
  code.bias.resize(n);
  const double t = opts.cutoff;
  require(t >= 0.0 && t < 0.5, "tardos_codebook: cutoff must lie in [0, 1/2)");
  const double lo = std::asin(std::sqrt(t));
  const double hi = std::numbers::pi / 2 - lo;
  for (auto& b : code.bias) {
    switch (opts.density) {
      case TardosDensity::uniform:
        do b = rng.uniform(); while (b <= 0.0);
        break;
      case TardosDensity::arcsine: {
        double v;
        do {
          const double th = lo + (hi - lo) * rng.uniform();
          v = std::sin(th);
          v *= v;
        } while (v <= 0.0 || v >= 1.0);
        b = v;
        break;
      }
      case TardosDensity::fixed:
        b = opts.fixed_value;
        break;
    }
  }
  code.rows.reserve(m);
  for (std::size_t u = 0; u < m; ++u) {
    std::vector<Symbol> row(n);
    for (std::size_t i = 0; i < n; ++i) row[i] = rng.uniform() < code.bias[i] ? 1 : 0;
    code.rows.emplace_back(std::move(row), 2);
  }
  return code;
}

Sequence quantize_bias(std::span<const double> bias, std::size_t bins) {
  require(bins >= 1, "quantize_bias: need at least one bin");
  std::vector<Symbol> out(bias.size());
  for (std::size_t i = 0; i < bias.size(); ++i) {
    auto b = static_cast<std::size_t>(bias[i] * static_cast<double>(bins));
    out[i] = static_cast<Symbol>(std::min(b, bins - 1));
  }
  return Sequence(std::move(out), bins);
}

DistortionCheck check_embedding_distortion(const Sequence& s, const Sequence& x, std::span<const double> d1,
                                           double D1) {
  require(s.size() == x.size(), "check_embedding_distortion: length mismatch");
  require(s.size() >= 1, "check_embedding_distortion: empty sequences");
  require(d1.size() == s.alphabet() * x.alphabet(), "check_embedding_distortion: d1 table shape mismatch");
  double acc = 0.0;
  for (std::size_t t = 0; t < s.size(); ++t) acc += d1[s[t] * x.alphabet() + x[t]];
  DistortionCheck out;
  out.value = acc / static_cast<double>(s.size());
  out.ok = out.value <= D1;
  return out;
}

}  // namespace fpw
