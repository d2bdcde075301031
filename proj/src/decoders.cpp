#include "fpwork/decoders.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fpwork/error.hpp"

namespace fpw {

SideInfo SideInfo::from(const Sequence* s, const Sequence* w) {
  if (s && s->alphabet() <= 1) s = nullptr;
  if (w && w->alphabet() <= 1) w = nullptr;
  SideInfo out;
  if (!s && !w) return out;
  const std::size_t n = s ? s->size() : w->size();
  if (s && w) require(s->size() == w->size(), "host and time-sharing lengths differ");
  const std::size_t ws = w ? w->alphabet() : 1;
  out.cell_count = (s ? s->alphabet() : 1) * ws;
  out.cells.resize(n);
  for (std::size_t t = 0; t < n; ++t)
    out.cells[t] = static_cast<std::uint32_t>((s ? (*s)[t] : 0) * ws + (w ? (*w)[t] : 0));
  return out;
}

SideInfo SideInfo::timeshare_only(const Codebook& cb) {
  return from(nullptr, cb.timeshare.size() ? &cb.timeshare : nullptr);
}

SideInfo SideInfo::host_and_timeshare(const Codebook& cb) {
  return from(cb.host.size() ? &cb.host : nullptr, cb.timeshare.size() ? &cb.timeshare : nullptr);
}

DecodeContext::DecodeContext(std::span<const Sequence> rows, const Sequence& y, SideInfo side)
    : y_(y), side_(std::move(side)) {
  rows_.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.size() != y.size()) throw Error(Errc::invalid_argument, "pirated copy length does not match codebook");
    rows_.push_back(&r);
  }
  if (!side_.cells.empty() && side_.cells.size() != y.size())
    throw Error(Errc::invalid_argument, "side information length does not match pirated copy");
  row_entropy_.resize(rows_.size());
  for (std::size_t m = 0; m < rows_.size(); ++m) {
    const Sequence* v = rows_[m];
    row_entropy_[m] = cond_entropy({&v, 1});
  }
  const Sequence* yp = &y_;
  y_entropy_ = cond_entropy({&yp, 1});
}

double DecodeContext::cond_entropy(std::span<const Sequence* const> vars) const {
  return sequence_entropy(vars, side_.cells, side_.cell_count);
}

double DecodeContext::multi_info(std::span<const std::size_t> a, std::span<const std::size_t> b) const {
  if (a.empty()) return 0.0;
  std::vector<const Sequence*> vars;
  vars.reserve(a.size() + b.size() + 1);
  double sum = 0.0;
  for (auto m : a) {
    require(m < rows_.size(), "user index out of range");
    sum += row_entropy_[m];
    vars.push_back(rows_[m]);
  }
  // H(y, x_B | side); y alone is cached
  double partner = y_entropy_;
  if (!b.empty()) {
    std::vector<const Sequence*> pv{&y_};
    for (auto m : b) {
      require(m < rows_.size(), "user index out of range");
      pv.push_back(rows_[m]);
    }
    partner = cond_entropy(pv);
  }
  for (auto m : b) vars.push_back(rows_[m]);
  vars.push_back(&y_);
  return sum + partner - cond_entropy(vars);
}

double DecodeContext::pair_info(std::size_t m) const {
  const std::size_t a[1] = {m};
  return multi_info(a);
}

DecodeOutcome threshold_decode(const DecodeContext& ctx, const DecodeConfig& cfg) {
  require(cfg.delta >= 0.0, "Delta must be non-negative");
  DecodeOutcome out;
  out.exact = true;
  out.scores.reserve(ctx.users());
  for (std::size_t m = 0; m < ctx.users(); ++m) {
    const double s = ctx.pair_info(m);
    out.scores.push_back({{m}, s});
    if (s > cfg.threshold()) out.accused.push_back(m);
  }
  out.evaluated = ctx.users();
  out.best_k = out.accused.size();
  return out;
}

DecodeOutcome threshold_decode(const Codebook& cb, const Sequence& y, const DecodeConfig& cfg) {
  return threshold_decode(DecodeContext(cb.rows, y, SideInfo::timeshare_only(cb)), cfg);
}

double mpmi_score(const DecodeContext& ctx, std::span<const std::size_t> coalition, const DecodeConfig& cfg) {
  if (coalition.size() > cfg.k_max) throw Error(Errc::invalid_argument, "coalition larger than k_max");
  if (coalition.empty()) return 0.0;
  return ctx.multi_info(coalition) - static_cast<double>(coalition.size()) * cfg.threshold();
}

double mpmi_score(const Codebook& cb, std::span<const std::size_t> coalition, const Sequence& y,
                  const DecodeConfig& cfg) {
  return mpmi_score(DecodeContext(cb.rows, y, SideInfo::host_and_timeshare(cb)), coalition, cfg);
}

std::size_t coalition_count(std::size_t m, std::size_t k_max, std::size_t cap) {
  std::size_t total = 0;
  double c = 1.0;  // C(m, k)
  for (std::size_t k = 0; k <= std::min(k_max, m); ++k) {
    if (k > 0) c = c * static_cast<double>(m - k + 1) / static_cast<double>(k);
    const double next = static_cast<double>(total) + std::round(c);
    if (next > static_cast<double>(cap)) return cap + 1;
    total = static_cast<std::size_t>(next);
  }
  return total;
}

namespace {

// Running best under the decoder's ordering: higher score, then larger k,
// then lexicographically smaller set. Candidates of equal size must arrive in
// lexicographic order.
struct Best {
  double tol;
  double score = 0.0;
  std::vector<std::size_t> set;

  void offer(double s, std::span<const std::size_t> cand) {
    if (s > score + tol || (s >= score - tol && cand.size() > set.size())) {
      score = s;
      set.assign(cand.begin(), cand.end());
    }
  }
};

bool next_combination(std::vector<std::size_t>& c, std::size_t m) {
  const std::size_t k = c.size();
  for (std::size_t i = k; i-- > 0;) {
    if (c[i] < m - k + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

void exhaustive(const DecodeContext& ctx, const DecodeConfig& cfg, std::size_t kmax, DecodeOutcome& out) {
  const std::size_t m = ctx.users();
  Best best{cfg.tie_tol, 0.0, {}};
  out.scores.push_back({{}, 0.0});
  out.evaluated = 1;
  for (std::size_t k = 1; k <= kmax; ++k) {
    std::vector<std::size_t> c(k);
    for (std::size_t i = 0; i < k; ++i) c[i] = i;
    CandidateScore level{{}, -std::numeric_limits<double>::infinity()};
    do {
      const double s = ctx.multi_info(c) - static_cast<double>(k) * cfg.threshold();
      ++out.evaluated;
      if (s > level.score + cfg.tie_tol) level = {c, s};
      best.offer(s, c);
    } while (next_combination(c, m));
    out.scores.push_back(std::move(level));
  }
  out.accused = best.set;
  out.best_score = best.score;
  out.exact = true;
}

void greedy(const DecodeContext& ctx, const DecodeConfig& cfg, std::size_t kmax, DecodeOutcome& out) {
  const std::size_t m = ctx.users();
  Best best{cfg.tie_tol, 0.0, {}};
  out.scores.push_back({{}, 0.0});
  out.evaluated = 1;
  std::vector<std::size_t> cur;
  std::vector<char> used(m, 0);
  for (std::size_t k = 1; k <= kmax; ++k) {
    double top = -std::numeric_limits<double>::infinity();
    std::size_t pick = m;
    std::vector<std::size_t> cand = cur;
    cand.push_back(0);
    for (std::size_t u = 0; u < m; ++u) {
      if (used[u]) continue;
      cand.back() = u;
      std::vector<std::size_t> sorted = cand;
      std::sort(sorted.begin(), sorted.end());
      const double s = ctx.multi_info(sorted) - static_cast<double>(k) * cfg.threshold();
      ++out.evaluated;
      if (s > top + cfg.tie_tol) {
        top = s;
        pick = u;
      }
    }
    if (pick == m) break;
    used[pick] = 1;
    cur.push_back(pick);
    std::vector<std::size_t> sorted = cur;
    std::sort(sorted.begin(), sorted.end());
    out.scores.push_back({sorted, top});
    best.offer(top, sorted);
  }
  out.accused = best.set;
  out.best_score = best.score;
  out.exact = false;
}

}  // namespace

DecodeOutcome mpmi_decode(const DecodeContext& ctx, const DecodeConfig& cfg) {
  require(cfg.delta >= 0.0, "Delta must be non-negative");
  const std::size_t kmax = std::min(cfg.k_max, ctx.users());
  DecodeOutcome out;
  const bool fits = coalition_count(ctx.users(), kmax, cfg.budget) <= cfg.budget;
  switch (cfg.mode) {
    case SearchMode::exhaustive:
      if (!fits) throw Error(Errc::budget_exceeded, "exhaustive coalition search exceeds the candidate budget");
      exhaustive(ctx, cfg, kmax, out);
      break;
    case SearchMode::greedy:
      greedy(ctx, cfg, kmax, out);
      break;
    case SearchMode::automatic:
      if (fits) {
        exhaustive(ctx, cfg, kmax, out);
      } else {
        out.fell_back_to_greedy = true;
        greedy(ctx, cfg, kmax, out);
      }
      break;
  }
  out.best_k = out.accused.size();
  return out;
}

DecodeOutcome mpmi_decode(const Codebook& cb, const Sequence& y, const DecodeConfig& cfg) {
  return mpmi_decode(DecodeContext(cb.rows, y, SideInfo::host_and_timeshare(cb)), cfg);
}

GuiltReport guilt_indices(const DecodeContext& ctx, const DecodeOutcome& outcome, const DecodeConfig& cfg) {
  const auto& acc = outcome.accused;
  for (auto m : acc) require(m < ctx.users(), "accused user out of range");
  const double coalition = ctx.multi_info(acc);
  const double k = static_cast<double>(acc.size());
  if (std::abs(coalition - k * cfg.threshold() - outcome.best_score) > 1e-9)
    throw Error(Errc::invalid_argument, "outcome does not match this codebook and pirated copy");

  GuiltReport rep;
  rep.coalition_index = coalition - k * cfg.rate;
  rep.users.reserve(ctx.users());
  std::vector<std::size_t> rest;
  for (std::size_t m = 0; m < ctx.users(); ++m) {
    const bool in = std::binary_search(acc.begin(), acc.end(), m);
    const std::size_t a[1] = {m};
    double idx;
    if (in) {
      rest.clear();
      for (auto u : acc)
        if (u != m) rest.push_back(u);
      idx = ctx.multi_info(a, rest);
    } else {
      idx = ctx.multi_info(a, acc);
    }
    rep.users.push_back({m, in, idx - cfg.rate});
  }
  return rep;
}

GuiltReport guilt_indices(const Codebook& cb, const Sequence& y, const DecodeOutcome& outcome,
                          const DecodeConfig& cfg) {
  return guilt_indices(DecodeContext(cb.rows, y, SideInfo::host_and_timeshare(cb)), outcome, cfg);
}

Significance verify_significance(const DecodeContext& ctx, const DecodeOutcome& outcome, const DecodeConfig& cfg) {
  if (!outcome.exact) return Significance::inapplicable;
  const auto& acc = outcome.accused;
  const double thr = cfg.threshold();
  const double tol = cfg.tie_tol * static_cast<double>(std::max<std::size_t>(1, cfg.k_max));

  // Property 1: every non-empty A inside the accused set. Exact ties count
  // as significant because ties resolve toward the larger coalition.
  const std::size_t k = acc.size();
  if (k > 20) return Significance::inapplicable;
  std::vector<std::size_t> a, b;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << k); ++mask) {
    a.clear();
    b.clear();
    for (std::size_t i = 0; i < k; ++i) ((mask >> i) & 1 ? a : b).push_back(acc[i]);
    if (ctx.multi_info(a, b) - static_cast<double>(a.size()) * thr <= -tol) return Significance::violated;
  }

  // Property 2: disjoint A up to the remaining search room.
  std::vector<std::size_t> complement;
  for (std::size_t m = 0; m < ctx.users(); ++m)
    if (!std::binary_search(acc.begin(), acc.end(), m)) complement.push_back(m);
  const std::size_t room = cfg.k_max > k ? cfg.k_max - k : 0;
  const std::size_t upto = std::min(room, complement.size());
  if (coalition_count(complement.size(), upto, cfg.budget) > cfg.budget) return Significance::inapplicable;
  for (std::size_t j = 1; j <= upto; ++j) {
    std::vector<std::size_t> idx(j);
    for (std::size_t i = 0; i < j; ++i) idx[i] = i;
    do {
      a.clear();
      for (auto i : idx) a.push_back(complement[i]);
      if (ctx.multi_info(a, acc) - static_cast<double>(j) * thr > tol) return Significance::violated;
    } while (next_combination(idx, complement.size()));
  }
  return Significance::holds;
}

Significance verify_significance(const Codebook& cb, const Sequence& y, const DecodeOutcome& outcome,
                                 const DecodeConfig& cfg) {
  return verify_significance(DecodeContext(cb.rows, y, SideInfo::host_and_timeshare(cb)), outcome, cfg);
}

}  // namespace fpw
