#include <doctest.h>

#include <cmath>
#include <random>

#include "fpwork/error.hpp"
#include "fpwork/simlab.hpp"

using namespace fpw;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.params.M = 8;
  cfg.coalition_size = 2;
  cfg.decoder = DecoderKind::mpmi;
  cfg.decode.delta = 0.05;
  cfg.decode.k_max = 2;
  cfg.trials = 40;
  cfg.Ns = {40, 80};
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST_CASE("classify") {
  auto r = classify({3, 1}, {1, 5});
  CHECK(r.fp);
  CHECK_FALSE(r.miss_one);
  CHECK(r.miss_all);
  CHECK(r.coalition == std::vector<std::size_t>{1, 3});

  auto none = classify({1, 3}, {});
  CHECK_FALSE(none.fp);
  CHECK(none.miss_one);
  CHECK(none.miss_all);

  auto exact = classify({1, 3}, {3, 1});
  CHECK_FALSE(exact.fp);
  CHECK_FALSE(exact.miss_one);
  CHECK_FALSE(exact.miss_all);

  // outside colluders: any accusation is a false positive
  auto ext = classify({0, 1}, {0});
  CHECK_FALSE(ext.fp);
  auto ext2 = classify({0, 1}, {0}, true);
  CHECK(ext2.fp);
  CHECK_FALSE(classify({0, 1}, {}, true).fp);
}

TEST_CASE("Wilson intervals match reference values") {
  auto [lo, hi] = wilson_interval(5, 100);
  CHECK(lo == doctest::Approx(0.021543679154367966).epsilon(1e-12));
  CHECK(hi == doctest::Approx(0.11175046923191914).epsilon(1e-12));
  auto z = wilson_interval(0, 10);
  CHECK(z.first == 0.0);
  CHECK(z.second == doctest::Approx(0.27753279986288926).epsilon(1e-12));
  CHECK(wilson_interval(10, 10).first == doctest::Approx(0.7224672001371106).epsilon(1e-12));
  auto r = rate_estimate(0, 1000);
  CHECK(r.rate == 0.0);
  CHECK(r.upper == doctest::Approx(0.003));
  CHECK(rate_estimate(7, 100).upper == rate_estimate(7, 100).hi);
  CHECK_THROWS_AS(wilson_interval(0, 0), Error);
}

TEST_CASE("exponent fit recovers an exact slope") {
  std::vector<std::pair<double, double>> s;
  for (double n : {20.0, 40.0, 60.0, 80.0}) s.emplace_back(n, 0.5 * std::exp2(-0.05 * n));
  auto f = exponent_fit(s);
  CHECK(f.slope == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(f.stderr_ < 1e-12);
  CHECK(f.used == 4);

  std::vector<std::pair<double, double>> flat{{10, 0.25}, {20, 0.25}, {30, 0.25}, {40, 0.0}};
  auto g = exponent_fit(flat);
  CHECK(g.slope == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g.dropped == 1);
  CHECK(g.used == 3);

  CHECK_THROWS_AS(exponent_fit({{10, 0.1}, {20, 0.0}, {30, 0.05}}), Error);
}

TEST_CASE("exponent fit on simulated binomial rates lands near the true slope") {
  std::mt19937_64 g(3);
  std::vector<std::pair<double, double>> s;
  for (double n : {10.0, 20.0, 30.0, 40.0, 50.0}) {
    std::binomial_distribution<long> b(100'000, std::exp2(-0.08 * n));
    s.emplace_back(n, double(b(g)) / 1e5);
  }
  auto f = exponent_fit(s);
  CHECK(f.stderr_ > 0.0);
  CHECK(std::abs(f.slope - 0.08) < 3 * f.stderr_);
}

TEST_CASE("missing every colluder implies missing some") {
  auto cfg = small_config();
  cfg.validate();
  for (std::uint64_t t = 0; t < 60; ++t) {
    auto r = run_trial(cfg, 30, t);
    CHECK(r.coalition.size() == 2);
    if (r.miss_one) CHECK(r.miss_all);
  }
}

TEST_CASE("trials are reproducible and independent of worker count") {
  auto cfg = small_config();
  auto a = run_trial(cfg, 40, 5);
  auto b = run_trial(cfg, 40, 5);
  CHECK(a.accused == b.accused);
  CHECK(a.coalition == b.coalition);

  cfg.workers = 1;
  const auto one = report_csv(estimate(cfg));
  cfg.workers = 4;
  const auto four = report_csv(estimate(cfg));
  CHECK(one == four);
  CHECK(one.rfind("N,users,rate,trials,", 0) == 0);
}

TEST_CASE("MPMI catches an interleaving pair at moderate length") {
  auto cfg = small_config();
  cfg.Ns = {200};
  cfg.trials = 30;
  auto rep = estimate(cfg);
  REQUIRE(rep.points.size() == 1);
  CHECK(rep.points[0].miss_one.rate < 0.2);
  CHECK(rep.points[0].fp.rate < 0.2);
  CHECK(rep.points[0].users == 8);
  CHECK(rep.points[0].miss_one.count <= rep.points[0].miss_all.count);
}

TEST_CASE("external coalitions make every accusation false") {
  auto cfg = small_config();
  cfg.external_coalition = true;
  cfg.decoder = DecoderKind::threshold;
  cfg.decode.delta = 0.0;
  cfg.Ns = {20};
  cfg.trials = 50;
  for (std::uint64_t t = 0; t < 50; ++t) {
    auto r = run_trial(cfg, 20, t);
    CHECK(r.fp == !r.accused.empty());
  }
}

TEST_CASE("Tardos trials run with the threshold decoder") {
  auto cfg = small_config();
  cfg.code = CodeKind::tardos;
  cfg.tardos_bins = 2;
  cfg.decoder = DecoderKind::threshold;
  cfg.Ns = {60};
  cfg.trials = 10;
  auto rep = estimate(cfg);
  CHECK(rep.points[0].trials == 10);
}

TEST_CASE("config validation") {
  auto cfg = small_config();
  cfg.trials = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.coalition_size = 9;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.Ns.clear();
  CHECK_THROWS_AS(cfg.validate(), Error);
}
