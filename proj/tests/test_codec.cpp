#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>

#include "fpwork/codec.hpp"
#include "fpwork/error.hpp"
#include "serialize.hpp"

using namespace fpw;

namespace {

CodeParams small_params() {
  CodeParams p;
  p.N = 60;
  p.M = 12;
  p.s_size = 2;
  p.w_size = 2;
  p.x_size = 3;
  p.p_s = {0.3, 0.7};
  p.p_w = {0.5, 0.5};
  p.p_x_given_sw = {0.2, 0.3, 0.5, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0.5, 0.5, 0.0, 0.1, 0.1, 0.8};
  return p;
}

std::vector<std::int64_t> cell_counts(const Sequence& x, const std::vector<std::uint32_t>& cells, std::size_t c,
                                      std::size_t alpha) {
  std::vector<std::int64_t> out(alpha, 0);
  for (std::size_t t = 0; t < x.size(); ++t)
    if (cells[t] == c) ++out[x[t]];
  return out;
}

}  // namespace

TEST_CASE("users_for_rate rounds up and clamps") {
  CHECK(users_for_rate(10, 0.1, 1000) == 2);
  CHECK(users_for_rate(100, 0.1, 1000) == 1024 - 24);
  CHECK(users_for_rate(100, 0.5, 1000) == 1000);
  CHECK(users_for_rate(7, 0.0, 10) == 1);
}

TEST_CASE("params validation fills defaults and rejects bad laws") {
  CodeParams p;
  p.N = 8;
  p.M = 4;
  p.validate();
  CHECK(p.rate == doctest::Approx(0.25));
  CHECK(p.p_x_given_sw.size() == 2);
  CodeParams bad = small_params();
  bad.p_s = {0.5, 0.6};
  CHECK_THROWS_AS(bad.validate(), Error);
  CodeParams zero;
  CHECK_THROWS_AS(zero.validate(), Error);
}

TEST_CASE("sampled sequence lies in the requested type class") {
  Rng rng(5);
  const std::vector<std::int64_t> counts{3, 0, 5, 2};
  for (int rep = 0; rep < 20; ++rep) {
    auto x = sample_type_class(counts, 10, rng);
    std::vector<std::int64_t> got(4, 0);
    for (std::size_t t = 0; t < x.size(); ++t) ++got[x[t]];
    CHECK(got == counts);
  }
  CHECK_THROWS_AS(sample_type_class(counts, 11, rng), Error);
}

TEST_CASE("type-class sampler is uniform over arrangements") {
  // C(4,2) = 6 arrangements of {0,0,1,1}
  Rng rng(9);
  const std::vector<std::int64_t> counts{2, 2};
  std::map<std::vector<Symbol>, int> seen;
  const int draws = 60000;
  for (int i = 0; i < draws; ++i) {
    auto x = sample_type_class(counts, 4, rng);
    ++seen[std::vector<Symbol>(x.symbols().begin(), x.symbols().end())];
  }
  CHECK(seen.size() == 6);
  for (auto& [k, c] : seen) CHECK(std::abs(c - draws / 6.0) < 5 * std::sqrt(draws / 6.0));
}

TEST_CASE("codebook rows share the per-cell composition") {
  auto cb = generate_codebook(small_params(), 42);
  CHECK(cb.users() == 12);
  CHECK(cb.length() == 60);
  const auto cells = cb.side_cells();
  for (const auto& row : cb.rows)
    for (std::size_t c = 0; c < cb.composition.cells; ++c) {
      auto want = cb.composition.cell(c);
      CHECK(cell_counts(row, cells, c, 3) == std::vector<std::int64_t>(want.begin(), want.end()));
    }
  // a zero-probability symbol never appears in its cell
  for (const auto& row : cb.rows)
    for (std::size_t t = 0; t < row.size(); ++t)
      if (cells[t] == 2) CHECK(row[t] != 2);
}

TEST_CASE("codebook generation is deterministic in the seed and rows are reproducible") {
  auto a = generate_codebook(small_params(), 1);
  auto b = generate_codebook(small_params(), 1);
  auto c = generate_codebook(small_params(), 2);
  CHECK(a.rows == b.rows);
  CHECK(a.host == b.host);
  CHECK(a.rows != c.rows);
  const auto cells = a.side_cells();
  const auto ctx = sequence_fingerprint(a.host, a.timeshare);
  CHECK(generate_row(a.params, a.composition, cells, 1, ctx, 7) == a.rows[7]);
}

TEST_CASE("time-sharing sequence realizes the quantized law") {
  Rng rng(3);
  auto w = draw_timeshare(std::vector<double>{0.25, 0.75}, 10, rng);
  std::size_t ones = 0;
  for (std::size_t t = 0; t < w.size(); ++t) ones += w[t];
  CHECK(ones == 7);  // quantize(0.75 * 10) with the tie to the lower index
}

TEST_CASE("user and letter permutations invert") {
  auto cb = generate_codebook(small_params(), 8);
  Rng rng(1);
  auto rp = apply_rp(cb, rng);
  auto rm = apply_rm(rp, rng);
  auto back = invert_rp(invert_rm(rm));
  CHECK(back.rows == cb.rows);
  CHECK(back.host == cb.host);
  CHECK(rm.secret.user_perm.size() == cb.users());
  CHECK(rm.secret.letter_perm.size() == cb.length());

  const std::vector<std::size_t> perm{2, 0, 1};
  Sequence x({5, 6, 7}, 8);
  auto px = permute_letters(x, perm);
  CHECK(px[0] == 7);
  CHECK(unpermute_letters(px, perm) == x);
}

TEST_CASE("Tardos biases respect the cutoff and rows are binary") {
  Rng rng(4);
  TardosOptions opt;
  opt.cutoff = 0.05;
  auto code = tardos_codebook(10, 200, opt, rng);
  CHECK(code.rows.size() == 10);
  for (double p : code.bias) {
    CHECK(p >= 0.05 - 1e-12);
    CHECK(p <= 0.95 + 1e-12);
  }
  opt.density = TardosDensity::fixed;
  opt.fixed_value = 0.3;
  auto fixed = tardos_codebook(2, 5, opt, rng);
  for (double p : fixed.bias) CHECK(p == 0.3);
  auto w = quantize_bias(std::vector<double>{0.01, 0.49, 0.51, 0.99}, 2);
  CHECK(w[0] == 0);
  CHECK(w[1] == 0);
  CHECK(w[2] == 1);
  CHECK(w[3] == 1);
}

TEST_CASE("embedding distortion check") {
  Sequence s({0, 0, 1, 1}, 2);
  Sequence x({0, 1, 1, 1}, 2);
  const std::vector<double> d1{0, 1, 1, 0};  // Hamming
  auto r = check_embedding_distortion(s, x, d1, 0.25);
  CHECK(r.value == doctest::Approx(0.25));
  CHECK(r.ok);
  CHECK_FALSE(check_embedding_distortion(s, x, d1, 0.2).ok);
}

TEST_CASE("codebook files round-trip") {
  auto cb = generate_codebook(small_params(), 77);
  Rng rng(2);
  cb = apply_rp(cb, rng);
  const auto dir = std::filesystem::temp_directory_path() / "fpw_codec_test";
  std::filesystem::create_directories(dir);
  const auto prefix = (dir / "cb").string();
  io::save_codebook(cb, prefix);
  auto back = io::load_codebook(prefix);
  CHECK(back.rows == cb.rows);
  CHECK(back.host == cb.host);
  CHECK(back.timeshare == cb.timeshare);
  CHECK(back.composition.counts == cb.composition.counts);
  CHECK(back.secret.user_perm == cb.secret.user_perm);
  CHECK(back.secret.seed == cb.secret.seed);
  std::filesystem::remove_all(dir);
}
