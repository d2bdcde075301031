#include <doctest.h>

#include <cmath>
#include <random>

#include "fpwork/codec.hpp"
#include "fpwork/collusion.hpp"
#include "fpwork/decoders.hpp"
#include "fpwork/error.hpp"
#include "support.hpp"

using namespace fpw;

namespace {

struct Instance {
  std::vector<Sequence> rows;
  Sequence y;
  Sequence w;
  std::vector<oracle::Col> cols;
  oracle::Col ycol, wcol;
};

Instance random_instance(std::mt19937_64& g, std::size_t m, std::size_t n, std::size_t alpha, std::size_t w_alpha) {
  Instance in;
  for (std::size_t i = 0; i < m; ++i) in.rows.push_back(oracle::random_sequence(g, n, alpha));
  // pirated copy from a random pair so that some structure is present
  Rng rng(g());
  std::vector<Sequence> coal{in.rows[0], in.rows[m > 1 ? 1 : 0]};
  in.y = interleave(coal, rng).y;
  for (std::size_t t = 0; t < n; ++t)
    if (g() % 5 == 0) in.y.mutable_symbols()[t] = static_cast<Symbol>(g() % alpha);
  in.w = oracle::random_sequence(g, n, w_alpha);
  for (auto& r : in.rows) in.cols.push_back(oracle::to_col(r));
  in.ycol = oracle::to_col(in.y);
  in.wcol = oracle::to_col(in.w);
  return in;
}

DecodeContext context(const Instance& in) { return DecodeContext(in.rows, in.y, SideInfo::from(nullptr, &in.w)); }

}  // namespace

TEST_CASE("coalition_count saturates") {
  CHECK(coalition_count(5, 2, 1000) == 1 + 5 + 10);
  CHECK(coalition_count(100, 3, 1000) == 1001);
}

TEST_CASE("pair information matches the oracle") {
  std::mt19937_64 g(1);
  auto in = random_instance(g, 4, 40, 3, 2);
  auto ctx = context(in);
  for (std::size_t m = 0; m < 4; ++m)
    CHECK(std::abs(ctx.pair_info(m) - oracle::mutual_info({&in.cols[m]}, {&in.ycol}, {&in.wcol})) < 1e-12);
}

TEST_CASE("threshold decoder accuses exactly the users above R + Delta") {
  std::mt19937_64 g(2);
  for (int rep = 0; rep < 30; ++rep) {
    auto in = random_instance(g, 6, 50, 2, 2);
    DecodeConfig cfg;
    cfg.rate = 0.05;
    cfg.delta = 0.02 * (rep % 5);
    auto out = threshold_decode(context(in), cfg);
    std::vector<std::size_t> want;
    for (std::size_t m = 0; m < 6; ++m)
      if (oracle::mutual_info({&in.cols[m]}, {&in.ycol}, {&in.wcol}) > cfg.threshold()) want.push_back(m);
    CHECK(out.accused == want);
    CHECK(out.scores.size() == 6);
  }
}

TEST_CASE("exhaustive MPMI matches brute-force enumeration") {
  std::mt19937_64 g(3);
  for (int rep = 0; rep < 80; ++rep) {
    const std::size_t m = 2 + g() % 6;
    auto in = random_instance(g, m, 10 + g() % 40, 2 + g() % 2, 1 + g() % 2);
    DecodeConfig cfg;
    cfg.rate = 0.02 * (g() % 10);
    cfg.delta = 0.01 * (g() % 5);
    cfg.k_max = 1 + g() % 3;
    cfg.mode = SearchMode::exhaustive;
    auto out = mpmi_decode(context(in), cfg);
    auto want = oracle::brute_mpmi(in.cols, in.ycol, in.wcol, cfg.k_max, cfg.threshold());
    CHECK(out.accused == want.set);
    CHECK(std::abs(out.best_score - want.score) < 1e-9);
    CHECK(out.exact);
  }
}

TEST_CASE("ties go to the larger coalition, then the smaller ids") {
  // a constant row adds zero information; with R + Delta = 0 that ties
  Sequence a({0, 1, 0, 1, 1, 0}, 2);
  Sequence b({1, 1, 0, 0, 1, 0}, 2);
  Sequence c = Sequence::constant(6, 0, 2);
  std::vector<Sequence> rows{a, b, c, a};
  DecodeConfig cfg;
  cfg.k_max = 3;
  cfg.mode = SearchMode::exhaustive;
  DecodeContext ctx(rows, a, SideInfo::none());
  auto out = mpmi_decode(ctx, cfg);
  std::vector<oracle::Col> cols;
  for (auto& r : rows) cols.push_back(oracle::to_col(r));
  auto want = oracle::brute_mpmi(cols, oracle::to_col(a), oracle::Col(6, 0), 3, 0.0);
  CHECK(out.accused == want.set);
  CHECK(out.accused.size() == 3);
}

TEST_CASE("exhaustive search over budget is an error; automatic falls back to greedy") {
  std::mt19937_64 g(4);
  auto in = random_instance(g, 30, 20, 2, 1);
  DecodeConfig cfg;
  cfg.k_max = 3;
  cfg.budget = 100;
  cfg.mode = SearchMode::exhaustive;
  try {
    (void)mpmi_decode(context(in), cfg);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::budget_exceeded);
  }
  cfg.mode = SearchMode::automatic;
  auto out = mpmi_decode(context(in), cfg);
  CHECK(out.fell_back_to_greedy);
  CHECK_FALSE(out.exact);
  CHECK(verify_significance(context(in), out, cfg) == Significance::inapplicable);
}

TEST_CASE("MPMI recovers a planted pair at long blocklength") {
  CodeParams p;
  p.N = 400;
  p.M = 8;
  p.delta = 0.05;
  auto cb = generate_codebook(p, 3);
  Rng rng(1);
  std::vector<Sequence> coal{cb.rows[2], cb.rows[5]};
  auto y = interleave(coal, rng).y;
  DecodeConfig cfg;
  cfg.rate = cb.params.rate;
  cfg.delta = 0.05;
  cfg.k_max = 2;
  auto out = mpmi_decode(cb, y, cfg);
  CHECK(out.accused == std::vector<std::size_t>{2, 5});
  CHECK(verify_significance(cb, y, out, cfg) == Significance::holds);
}

TEST_CASE("guilt indices match the oracle and the coalition index exceeds the size penalty") {
  std::mt19937_64 g(5);
  for (int rep = 0; rep < 30; ++rep) {
    auto in = random_instance(g, 5, 60, 2, 2);
    DecodeConfig cfg;
    cfg.rate = 0.05;
    cfg.delta = 0.02;
    cfg.k_max = 3;
    cfg.mode = SearchMode::exhaustive;
    auto ctx = context(in);
    auto out = mpmi_decode(ctx, cfg);
    auto gr = guilt_indices(ctx, out, cfg);
    std::vector<const oracle::Col*> acc;
    for (auto u : out.accused) acc.push_back(&in.cols[u]);
    double hsum = 0.0;
    for (auto u : out.accused) hsum += oracle::cond_entropy({&in.cols[u]}, {&in.wcol});
    const double coal = out.accused.empty() ? 0.0 : hsum - oracle::cond_entropy(acc, {&in.ycol, &in.wcol}) -
                                                         double(out.accused.size()) * cfg.rate;
    CHECK(std::abs(gr.coalition_index - coal) < 1e-9);
    if (!out.accused.empty()) CHECK(gr.coalition_index > double(out.accused.size()) * cfg.delta - 1e-9);
    for (const auto& u : gr.users) {
      std::vector<const oracle::Col*> rest{&in.ycol};
      for (auto v : out.accused)
        if (v != u.user) rest.push_back(&in.cols[v]);
      const double want = oracle::mutual_info({&in.cols[u.user]}, rest, {&in.wcol}) - cfg.rate;
      CHECK(std::abs(u.index - want) < 1e-9);
    }
  }
}

TEST_CASE("significance holds on exact decodes below k_max") {
  std::mt19937_64 g(6);
  int checked = 0;
  for (int rep = 0; rep < 100; ++rep) {
    auto in = random_instance(g, 6, 200, 2, 1 + g() % 2);
    DecodeConfig cfg;
    cfg.rate = 0.05;
    cfg.delta = 0.05;
    cfg.k_max = 3;
    cfg.mode = SearchMode::exhaustive;
    auto ctx = context(in);
    auto out = mpmi_decode(ctx, cfg);
    if (out.accused.size() >= cfg.k_max) continue;
    ++checked;
    CHECK(verify_significance(ctx, out, cfg) == Significance::holds);
  }
  CHECK(checked > 0);
}

TEST_CASE("significance flags a non-optimal accusation") {
  std::mt19937_64 g(7);
  auto in = random_instance(g, 4, 80, 2, 1);
  DecodeConfig cfg;
  cfg.k_max = 2;
  cfg.mode = SearchMode::exhaustive;
  auto ctx = context(in);
  auto out = mpmi_decode(ctx, cfg);
  // pretend an innocent-looking user was accused alone
  DecodeOutcome fake = out;
  fake.accused = {3};
  fake.best_k = 1;
  fake.best_score = mpmi_score(ctx, fake.accused, cfg);
  if (fake.best_score < 0) CHECK(verify_significance(ctx, fake, cfg) == Significance::violated);
}

TEST_CASE("guilt indices reject a stale outcome") {
  std::mt19937_64 g(8);
  auto in = random_instance(g, 4, 30, 2, 1);
  DecodeConfig cfg;
  cfg.mode = SearchMode::exhaustive;
  auto ctx = context(in);
  auto out = mpmi_decode(ctx, cfg);
  out.best_score += 1.0;
  CHECK_THROWS_AS(guilt_indices(ctx, out, cfg), Error);
}
