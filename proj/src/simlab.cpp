#include "fpwork/simlab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "fpwork/error.hpp"
#include "parallel.hpp"

namespace fpw {

namespace {

using Clock = std::chrono::steady_clock;

bool needs_marking(const AttackSpec& a) {
  if (a.name != "channel") return true;
  const auto cls = a.channel->channel_class();
  return cls == ChannelClass::boneh_shaw || cls == ChannelClass::interleaving;
}

ChannelSpec named_channel(const std::string& name, std::size_t k, std::size_t x) {
  if (name == "majority") return ChannelSpec::majority(k, x);
  if (name == "minority") return ChannelSpec::minority(k, x);
  if (name == "uniform_present") return ChannelSpec::uniform_present(k, x);
  throw Error(Errc::config, "unknown attack: " + name);
}

Attack build_attack(const ExperimentConfig& cfg) {
  Attack a;
  if (cfg.attack.name == "interleaving")
    a = interleaving_attack();
  else if (cfg.attack.name == "channel")
    a = memoryless_attack(*cfg.attack.channel);
  else
    a = memoryless_attack(named_channel(cfg.attack.name, cfg.coalition_size, cfg.params.x_size));
  return cfg.attack.exchangeable ? wrap_exchangeable(std::move(a)) : a;
}

std::size_t users_at(const ExperimentConfig& cfg, std::size_t n) {
  return cfg.fixed_users ? cfg.params.M : users_for_rate(n, cfg.params.rate, cfg.user_cap);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (trials == 0) throw Error(Errc::config, "trials must be >= 1");
  if (Ns.empty()) throw Error(Errc::config, "N sweep is empty");
  for (auto n : Ns)
    if (n == 0) throw Error(Errc::config, "N must be >= 1");
  if (coalition_size == 0) throw Error(Errc::config, "coalition size must be >= 1");
  if (!coalition.empty() && coalition.size() != coalition_size)
    throw Error(Errc::config, "fixed coalition does not match coalition_size");
  if (!fixed_users && !(params.rate > 0.0)) throw Error(Errc::config, "rate-driven user count needs rate > 0");
  for (auto n : Ns) {
    const auto m = users_at(*this, n);
    if (!external_coalition && coalition_size > m) throw Error(Errc::config, "coalition larger than the user count");
    for (auto u : coalition)
      if (u >= m) throw Error(Errc::config, "fixed coalition member out of range");
  }
  if (attack.name == "channel") {
    if (!attack.channel) throw Error(Errc::config, "attack 'channel' needs a channel table");
    if (attack.channel->coalition() != coalition_size || attack.channel->x_size() != params.x_size)
      throw Error(Errc::config, "attack channel does not match coalition size or alphabet");
  } else if (attack.name != "interleaving") {
    (void)named_channel(attack.name, coalition_size, params.x_size);
  }
  if (code == CodeKind::tardos && params.x_size != 2) throw Error(Errc::config, "Tardos codes are binary");
  if (code == CodeKind::tardos && tardos_bins == 0) throw Error(Errc::config, "tardos_bins must be >= 1");
  if (decoder == DecoderKind::mpmi && decode.k_max == 0) throw Error(Errc::config, "k_max must be >= 1");
}

TrialRecord classify(std::vector<std::size_t> coalition, std::vector<std::size_t> accused, bool external) {
  std::sort(coalition.begin(), coalition.end());
  std::sort(accused.begin(), accused.end());
  TrialRecord r;
  std::vector<std::size_t> both;
  if (!external) std::set_intersection(coalition.begin(), coalition.end(), accused.begin(), accused.end(),
                                       std::back_inserter(both));
  r.fp = accused.size() > both.size();
  r.miss_one = !coalition.empty() && both.empty();
  r.miss_all = both.size() < coalition.size();
  r.coalition = std::move(coalition);
  r.accused = std::move(accused);
  return r;
}

TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t n, std::uint64_t trial) {
  const std::uint64_t key = Rng::derive(cfg.seed, Stream::trial, n, trial)();
  CodeParams params = cfg.params;
  params.N = n;
  params.M = users_at(cfg, n);
  if (cfg.fixed_users) params.rate = 0.0;  // recomputed as log2(M)/N
  params.validate();
  const std::size_t m = params.M;
  const std::size_t k = cfg.coalition_size;

  std::vector<Sequence> rows;
  Sequence host = Sequence::constant(n, 0, params.s_size);
  Sequence w;
  std::vector<Sequence> colluders;
  if (cfg.code == CodeKind::constant_composition) {
    Codebook cb = generate_codebook(params, key);
    host = cb.host;
    w = cb.timeshare;
    if (cfg.external_coalition) {
      const auto cells = cb.side_cells();
      const auto context = sequence_fingerprint(cb.host, cb.timeshare);
      for (std::size_t j = 0; j < k; ++j)
        colluders.push_back(generate_row(params, cb.composition, cells, key, context, m + j));
    }
    rows = std::move(cb.rows);
  } else {
    Rng trng = Rng::derive(key, Stream::tardos);
    auto code = tardos_codebook(m + (cfg.external_coalition ? k : 0), n, cfg.tardos, trng);
    w = quantize_bias(code.bias, cfg.tardos_bins);
    rows = std::move(code.rows);
    if (cfg.external_coalition) {
      colluders.assign(rows.end() - static_cast<std::ptrdiff_t>(k), rows.end());
      rows.resize(m);
    }
  }

  std::vector<std::size_t> coalition;
  if (!cfg.external_coalition) {
    if (!cfg.coalition.empty()) {
      coalition = cfg.coalition;
    } else {
      Rng crng = Rng::derive(key, Stream::coalition);
      auto perm = random_permutation(m, crng);
      coalition.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
    }
    std::sort(coalition.begin(), coalition.end());
    for (auto u : coalition) colluders.push_back(rows[u]);
  }

  const Attack attack = build_attack(cfg);
  Rng arng = Rng::derive(key, Stream::attack);
  Sequence y;
  std::size_t resamples = 0;
  for (;; ++resamples) {
    if (resamples > cfg.max_resamples) throw Error(Errc::infeasible, "attack kept producing infeasible copies");
    y = attack(colluders, arng);
    if (needs_marking(cfg.attack) && !check_marking(colluders, y)) continue;
    if (cfg.attack.name == "channel" && cfg.attack.channel->distortion() &&
        !check_distortion_attack(colluders, y, *cfg.attack.channel->distortion()).ok)
      continue;
    break;
  }

  DecodeConfig dc = cfg.decode;
  dc.rate = params.rate;
  DecodeOutcome out;
  if (cfg.decoder == DecoderKind::threshold) {
    DecodeContext ctx(rows, y, SideInfo::from(nullptr, w.size() ? &w : nullptr));
    out = threshold_decode(ctx, dc);
  } else {
    DecodeContext ctx(rows, y, SideInfo::from(&host, w.size() ? &w : nullptr));
    out = mpmi_decode(ctx, dc);
  }
  auto rec = classify(std::move(coalition), std::move(out.accused), cfg.external_coalition);
  rec.resamples = resamples;
  return rec;
}

std::pair<double, double> wilson_interval(std::uint64_t count, std::uint64_t trials, double z) {
  if (trials == 0) throw Error(Errc::invalid_argument, "no trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(count) / n;
  const double z2 = z * z;
  const double den = 1.0 + z2 / n;
  const double centre = (p + z2 / (2 * n)) / den;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / den;
  // the closed form leaves rounding dust at the ends
  const double lo = count == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = count == trials ? 1.0 : std::min(1.0, centre + half);
  return {lo, hi};
}

RateEstimate rate_estimate(std::uint64_t count, std::uint64_t trials) {
  RateEstimate r;
  r.count = count;
  r.rate = static_cast<double>(count) / static_cast<double>(trials);
  std::tie(r.lo, r.hi) = wilson_interval(count, trials);
  r.upper = count == 0 ? std::min(1.0, 3.0 / static_cast<double>(trials)) : r.hi;
  return r;
}

ExponentFit exponent_fit(const std::vector<std::pair<double, double>>& series) {
  ExponentFit f;
  std::vector<double> xs, ys;
  for (const auto& [n, rate] : series) {
    if (!(rate > 0.0)) {
      ++f.dropped;
      continue;
    }
    if (rate > 1.0) throw Error(Errc::invalid_argument, "rate above one");
    xs.push_back(n);
    ys.push_back(-std::log2(rate));
  }
  f.used = xs.size();
  if (f.used < 3) throw Error(Errc::invalid_argument, "exponent fit needs at least three nonzero rates");
  const double k = static_cast<double>(f.used);
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= 0.0) throw Error(Errc::invalid_argument, "exponent fit needs distinct N values");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - f.intercept - f.slope * xs[i];
    ssr += r * r;
  }
  f.stderr_ = f.used > 2 ? std::sqrt(ssr / (k - 2.0) / sxx) : 0.0;
  return f;
}

EstimateReport estimate(const ExperimentConfig& cfg) {
  cfg.validate();
  EstimateReport rep;
  const auto t0 = Clock::now();
  for (auto n : cfg.Ns) {
    const auto p0 = Clock::now();
    std::vector<TrialRecord> recs(cfg.trials);
    detail::parallel_for(cfg.trials, cfg.workers, [&](std::size_t i) { recs[i] = run_trial(cfg, n, i); });
    std::uint64_t fp = 0, one = 0, all = 0, res = 0;
    for (const auto& r : recs) {
      fp += r.fp;
      one += r.miss_one;
      all += r.miss_all;
      res += r.resamples;
    }
    PointEstimate pt;
    pt.N = n;
    pt.users = users_at(cfg, n);
    pt.rate_bits = std::log2(static_cast<double>(pt.users)) / static_cast<double>(n);
    pt.trials = cfg.trials;
    pt.fp = rate_estimate(fp, cfg.trials);
    pt.miss_one = rate_estimate(one, cfg.trials);
    pt.miss_all = rate_estimate(all, cfg.trials);
    pt.resamples = res;
    pt.seconds = std::chrono::duration<double>(Clock::now() - p0).count();
    rep.points.push_back(pt);
  }
  auto fit = [&](auto field) -> std::optional<ExponentFit> {
    std::vector<std::pair<double, double>> s;
    for (const auto& p : rep.points) s.emplace_back(static_cast<double>(p.N), (p.*field).rate);
    try {
      return exponent_fit(s);
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  rep.fp_fit = fit(&PointEstimate::fp);
  rep.miss_one_fit = fit(&PointEstimate::miss_one);
  rep.miss_all_fit = fit(&PointEstimate::miss_all);
  rep.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return rep;
}

std::string report_csv(const EstimateReport& rep) {
  std::ostringstream os;
  os << "N,users,rate,trials";
  for (const char* ev : {"fp", "miss_one", "miss_all"})
    os << ',' << ev << "_count," << ev << "_rate," << ev << "_lo," << ev << "_hi," << ev << "_upper";
  os << ",resamples\n";
  for (const auto& p : rep.points) {
    os << p.N << ',' << p.users << ',' << fmt(p.rate_bits) << ',' << p.trials;
    for (const RateEstimate* r : {&p.fp, &p.miss_one, &p.miss_all})
      os << ',' << r->count << ',' << fmt(r->rate) << ',' << fmt(r->lo) << ',' << fmt(r->hi) << ',' << fmt(r->upper);
    os << ',' << p.resamples << '\n';
  }
  return os.str();
}

}  // namespace fpw
