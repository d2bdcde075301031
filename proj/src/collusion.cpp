#include "fpwork/collusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "fpwork/codec.hpp"

namespace fpw {

namespace {

std::size_t checked_pow(std::size_t base, std::size_t exp, std::size_t cap) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    require(r <= cap / std::max<std::size_t>(base, 1), "channel table exceeds size cap");
    r *= base;
  }
  return r;
}

void check_coalition(std::span<const Sequence> xs) {
  require(!xs.empty(), "empty coalition");
  for (const auto& x : xs) {
    require(x.size() == xs[0].size(), "coalition sequences differ in length");
    require(x.alphabet() == xs[0].alphabet(), "coalition sequences differ in alphabet");
  }
}

std::size_t tuple_at(std::span<const Sequence> xs, std::size_t t) {
  std::size_t v = 0;
  for (const auto& x : xs) v = v * x.alphabet() + x[t];
  return v;
}

// Symbol histogram of an input tuple.
std::vector<std::size_t> histogram(const std::vector<std::size_t>& xs, std::size_t x_size) {
  std::vector<std::size_t> h(x_size, 0);
  for (auto v : xs) ++h[v];
  return h;
}

}  // namespace

ChannelSpec::ChannelSpec(std::size_t k, std::size_t x_size, std::size_t y_size, std::vector<double> table,
                         ChannelClass cls, std::optional<DistortionSpec> distortion)
    : k_(k), x_size_(x_size), y_size_(y_size), table_(std::move(table)), cls_(cls),
      distortion_(std::move(distortion)) {
  require(k_ >= 1, "channel: coalition size must be >= 1");
  require(x_size_ >= 1 && y_size_ >= 1, "channel: alphabet sizes must be >= 1");
  tuples_ = checked_pow(x_size_, k_, kMaxEntries);
  require(tuples_ <= kMaxEntries / y_size_, "channel table exceeds size cap");
  require(table_.size() == tuples_ * y_size_, "channel table has wrong size");
  for (std::size_t t = 0; t < tuples_; ++t) {
    double sum = 0.0;
    for (double v : slice(t)) {
      require(v >= 0.0 && std::isfinite(v), "channel: invalid probability");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= kSliceTol, "channel: conditional slice does not sum to 1");
  }
  if (cls_ == ChannelClass::boneh_shaw || cls_ == ChannelClass::interleaving) {
    require(x_size_ == y_size_, "marking-assumption channels need X = Y");
    for (std::size_t x = 0; x < x_size_; ++x) {
      std::size_t tuple = 0;
      for (std::size_t i = 0; i < k_; ++i) tuple = tuple * x_size_ + x;
      require(std::abs(p(tuple, x) - 1.0) <= kSliceTol, "channel violates the marking assumption");
    }
  }
  if (cls_ == ChannelClass::interleaving) {
    for (std::size_t t = 0; t < tuples_; ++t) {
      const auto xs = decode_tuple(t);
      for (std::size_t y = 0; y < y_size_; ++y) {
        const double expect = static_cast<double>(std::count(xs.begin(), xs.end(), y)) / static_cast<double>(k_);
        require(std::abs(p(t, y) - expect) <= kSliceTol, "table is not the interleaving channel");
      }
    }
  }
  if (cls_ == ChannelClass::distortion) {
    require(distortion_.has_value(), "distortion channel class needs a distortion spec");
  }
  if (distortion_) validate_estimator(*distortion_, k_, x_size_, y_size_);
}

std::vector<std::size_t> ChannelSpec::decode_tuple(std::size_t tuple) const {
  std::vector<std::size_t> xs(k_);
  for (std::size_t i = k_; i-- > 0;) {
    xs[i] = tuple % x_size_;
    tuple /= x_size_;
  }
  return xs;
}

std::size_t ChannelSpec::encode_tuple(std::span<const std::size_t> xs) const {
  require(xs.size() == k_, "tuple has wrong length");
  std::size_t t = 0;
  for (auto v : xs) {
    require(v < x_size_, "tuple symbol out of range");
    t = t * x_size_ + v;
  }
  return t;
}

namespace {

template <class F>
ChannelSpec tabulate(std::size_t k, std::size_t x_size, ChannelClass cls, F&& per_tuple) {
  const std::size_t tuples = checked_pow(x_size, k, ChannelSpec::kMaxEntries);
  std::vector<double> table(tuples * x_size, 0.0);
  std::vector<std::size_t> xs(k);
  for (std::size_t t = 0; t < tuples; ++t) {
    std::size_t rest = t;
    for (std::size_t i = k; i-- > 0;) {
      xs[i] = rest % x_size;
      rest /= x_size;
    }
    per_tuple(histogram(xs, x_size), xs, std::span<double>(table.data() + t * x_size, x_size));
  }
  return ChannelSpec(k, x_size, x_size, std::move(table), cls);
}

}  // namespace

ChannelSpec ChannelSpec::interleaving(std::size_t k, std::size_t x_size) {
  return tabulate(k, x_size, ChannelClass::interleaving, [k](const auto& h, const auto&, std::span<double> out) {
    for (std::size_t y = 0; y < out.size(); ++y) out[y] = static_cast<double>(h[y]) / static_cast<double>(k);
  });
}

ChannelSpec ChannelSpec::identity(std::size_t x_size) { return interleaving(1, x_size); }

ChannelSpec ChannelSpec::majority(std::size_t k, std::size_t x_size) {
  return tabulate(k, x_size, ChannelClass::boneh_shaw, [](const auto& h, const auto&, std::span<double> out) {
    const auto best = *std::max_element(h.begin(), h.end());
    const auto ties = static_cast<double>(std::count(h.begin(), h.end(), best));
    for (std::size_t y = 0; y < out.size(); ++y) out[y] = h[y] == best ? 1.0 / ties : 0.0;
  });
}

ChannelSpec ChannelSpec::minority(std::size_t k, std::size_t x_size) {
  return tabulate(k, x_size, ChannelClass::boneh_shaw, [](const auto& h, const auto&, std::span<double> out) {
    std::size_t least = ~std::size_t{0};
    for (auto c : h)
      if (c > 0) least = std::min(least, c);
    const auto ties = static_cast<double>(std::count(h.begin(), h.end(), least));
    for (std::size_t y = 0; y < out.size(); ++y) out[y] = h[y] == least ? 1.0 / ties : 0.0;
  });
}

ChannelSpec ChannelSpec::uniform_present(std::size_t k, std::size_t x_size) {
  return tabulate(k, x_size, ChannelClass::boneh_shaw, [](const auto& h, const auto&, std::span<double> out) {
    const auto present = static_cast<double>(std::count_if(h.begin(), h.end(), [](auto c) { return c > 0; }));
    for (std::size_t y = 0; y < out.size(); ++y) out[y] = h[y] > 0 ? 1.0 / present : 0.0;
  });
}

FeasibilityReport assess(std::span<const Sequence> xs, const Sequence& y,
                         const std::optional<DistortionSpec>& distortion) {
  check_coalition(xs);
  require(y.size() == xs[0].size(), "pirated copy length mismatch");
  FeasibilityReport rep;
  rep.marking_ok = check_marking(xs, y);
  if (distortion) {
    auto d = check_distortion_attack(xs, y, *distortion);
    rep.distortion = d.value;
    rep.distortion_ok = d.ok;
  }
  std::vector<Sequence> all(xs.begin(), xs.end());
  all.push_back(y);
  rep.conditional = JointType::of(std::span<const Sequence>(all));
  return rep;
}

AttackResult interleave(std::span<const Sequence> xs, Rng& rng) {
  check_coalition(xs);
  std::vector<Symbol> y(xs[0].size());
  for (std::size_t t = 0; t < y.size(); ++t) y[t] = xs[rng.below(xs.size())][t];
  AttackResult r{Sequence(std::move(y), xs[0].alphabet()), {}};
  r.feasibility = assess(xs, r.y);
  return r;
}

AttackResult apply_memoryless(std::span<const Sequence> xs, const ChannelSpec& ch, Rng& rng) {
  check_coalition(xs);
  require(xs.size() == ch.coalition(), "channel coalition size does not match");
  require(xs[0].alphabet() == ch.x_size(), "channel input alphabet does not match");
  std::vector<Symbol> y(xs[0].size());
  for (std::size_t t = 0; t < y.size(); ++t) y[t] = static_cast<Symbol>(rng.categorical(ch.slice(tuple_at(xs, t))));
  AttackResult r{Sequence(std::move(y), ch.y_size()), {}};
  r.feasibility = assess(xs, r.y, ch.distortion());
  return r;
}

bool check_marking(std::span<const Sequence> xs, const Sequence& y) {
  check_coalition(xs);
  require(y.size() == xs[0].size(), "pirated copy length mismatch");
  for (std::size_t t = 0; t < y.size(); ++t) {
    const Symbol first = xs[0][t];
    bool agree = true;
    for (const auto& x : xs.subspan(1))
      if (x[t] != first) {
        agree = false;
        break;
      }
    if (agree && y[t] != first) return false;
  }
  return true;
}

void validate_estimator(const DistortionSpec& spec, std::size_t k, std::size_t x_size, std::size_t y_size) {
  const std::size_t tuples = checked_pow(x_size, k, ChannelSpec::kMaxEntries);
  require(spec.estimator.size() == tuples, "estimator table must cover |X|^K tuples");
  require(spec.d2.size() == spec.s_size * y_size, "d2 table must be |S| x |Y|");
  for (auto s : spec.estimator) require(s < spec.s_size, "estimator output outside host alphabet");
  // Permutation invariance: f must agree with its value on the sorted tuple.
  std::vector<std::size_t> xs(k);
  for (std::size_t t = 0; t < tuples; ++t) {
    std::size_t rest = t;
    for (std::size_t i = k; i-- > 0;) {
      xs[i] = rest % x_size;
      rest /= x_size;
    }
    auto sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    std::size_t st = 0;
    for (auto v : sorted) st = st * x_size + v;
    require(spec.estimator[st] == spec.estimator[t], "estimator is not permutation-invariant");
  }
}

DistortionValue check_distortion_attack(std::span<const Sequence> xs, const Sequence& y,
                                        const DistortionSpec& spec) {
  check_coalition(xs);
  require(y.size() == xs[0].size(), "pirated copy length mismatch");
  validate_estimator(spec, xs.size(), xs[0].alphabet(), y.alphabet());
  double acc = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) acc += spec.d2[spec.estimator[tuple_at(xs, t)] * y.alphabet() + y[t]];
  DistortionValue out;
  out.value = acc / static_cast<double>(y.size());
  out.ok = out.value <= spec.D2;
  return out;
}

DistortionValue expected_distortion(const ChannelSpec& ch, std::span<const double> input_law) {
  require(ch.distortion().has_value(), "channel has no distortion spec");
  require(input_law.size() == ch.tuples(), "input law must cover |X|^K tuples");
  const auto& spec = *ch.distortion();
  double acc = 0.0;
  for (std::size_t t = 0; t < ch.tuples(); ++t)
    for (std::size_t y = 0; y < ch.y_size(); ++y)
      acc += input_law[t] * ch.p(t, y) * spec.d2[spec.estimator[t] * ch.y_size() + y];
  return {acc, acc <= spec.D2};
}

std::vector<std::vector<std::size_t>> all_permutations(std::size_t k) {
  require(k >= 1 && k <= 8, "permutation enumeration supports 1 <= K <= 8");
  std::vector<std::size_t> p(k);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

ChannelSpec permutation_average(const ChannelSpec& ch) {
  const auto perms = all_permutations(ch.coalition());
  std::vector<double> out(ch.table().size(), 0.0);
  std::vector<std::size_t> permuted(ch.coalition());
  for (std::size_t t = 0; t < ch.tuples(); ++t) {
    const auto xs = ch.decode_tuple(t);
    for (const auto& pi : perms) {
      for (std::size_t i = 0; i < xs.size(); ++i) permuted[i] = xs[pi[i]];
      const auto src = ch.encode_tuple(permuted);
      for (std::size_t y = 0; y < ch.y_size(); ++y) out[t * ch.y_size() + y] += ch.p(src, y);
    }
  }
  const double inv = 1.0 / static_cast<double>(perms.size());
  for (auto& v : out) v *= inv;
  return ChannelSpec(ch.coalition(), ch.x_size(), ch.y_size(), std::move(out), ch.channel_class(), ch.distortion());
}

bool is_permutation_invariant(const ChannelSpec& ch, double tol) {
  const auto perms = all_permutations(ch.coalition());
  std::vector<std::size_t> permuted(ch.coalition());
  for (std::size_t t = 0; t < ch.tuples(); ++t) {
    const auto xs = ch.decode_tuple(t);
    for (const auto& pi : perms) {
      for (std::size_t i = 0; i < xs.size(); ++i) permuted[i] = xs[pi[i]];
      const auto src = ch.encode_tuple(permuted);
      for (std::size_t y = 0; y < ch.y_size(); ++y)
        if (std::abs(ch.p(src, y) - ch.p(t, y)) > tol) return false;
    }
  }
  return true;
}

bool is_first_order_fair(std::span<const Sequence> xs, const Sequence& y, double) {
  check_coalition(xs);
  require(y.size() == xs[0].size(), "pirated copy length mismatch");
  const std::size_t k = xs.size();
  const std::size_t x_size = xs[0].alphabet();
  const auto perms = all_permutations(k);
  std::map<std::size_t, std::vector<std::int64_t>> joint;  // tuple -> counts over y
  for (std::size_t t = 0; t < y.size(); ++t) {
    auto& row = joint[tuple_at(xs, t)];
    row.resize(y.alphabet(), 0);
    ++row[y[t]];
  }
  std::vector<std::size_t> digits(k), permuted(k);
  for (const auto& [tuple, row] : joint) {
    std::size_t rest = tuple;
    for (std::size_t i = k; i-- > 0;) {
      digits[i] = rest % x_size;
      rest /= x_size;
    }
    const auto n_x = std::accumulate(row.begin(), row.end(), std::int64_t{0});
    for (const auto& pi : perms) {
      std::size_t other = 0;
      for (std::size_t i = 0; i < k; ++i) other = other * x_size + digits[pi[i]];
      auto it = joint.find(other);
      if (it == joint.end()) continue;
      const auto n_o = std::accumulate(it->second.begin(), it->second.end(), std::int64_t{0});
      // Exact comparison of the conditional types n(x,y)/n(x) == n(x',y)/n(x').
      for (std::size_t v = 0; v < row.size(); ++v)
        if (row[v] * n_o != it->second[v] * n_x) return false;
    }
  }
  return true;
}

Attack memoryless_attack(ChannelSpec ch) {
  return [ch = std::move(ch)](std::span<const Sequence> xs, Rng& rng) { return apply_memoryless(xs, ch, rng).y; };
}

Attack interleaving_attack() {
  return [](std::span<const Sequence> xs, Rng& rng) { return interleave(xs, rng).y; };
}

Attack wrap_exchangeable(Attack base) {
  return [base = std::move(base)](std::span<const Sequence> xs, Rng& rng) {
    check_coalition(xs);
    const auto perm = random_permutation(xs[0].size(), rng);
    std::vector<Sequence> permuted;
    permuted.reserve(xs.size());
    for (const auto& x : xs) permuted.push_back(permute_letters(x, perm));
    const Sequence y = base(std::span<const Sequence>(permuted), rng);
    return unpermute_letters(y, perm);
  };
}

std::string conditional_type_csv(const JointType& conditional) {
  const auto& dims = conditional.dims();
  require(dims.size() >= 2, "conditional type needs inputs and an output axis");
  const std::size_t k = dims.size() - 1;
  const std::size_t ys = dims.back();
  std::ostringstream os;
  for (std::size_t i = 0; i < k; ++i) os << 'x' << (i + 1) << ',';
  os << "y,count,p_y_given_x\n";
  os.precision(9);
  const auto& counts = conditional.counts();
  std::vector<std::size_t> idx(k);
  for (std::size_t t = 0; t < counts.size() / ys; ++t) {
    std::int64_t n_x = 0;
    for (std::size_t y = 0; y < ys; ++y) n_x += counts[t * ys + y];
    if (n_x == 0) continue;
    std::size_t rest = t;
    for (std::size_t i = k; i-- > 0;) {
      idx[i] = rest % dims[i];
      rest /= dims[i];
    }
    for (std::size_t y = 0; y < ys; ++y) {
      for (auto v : idx) os << v << ',';
      os << y << ',' << counts[t * ys + y] << ','
         << static_cast<double>(counts[t * ys + y]) / static_cast<double>(n_x) << '\n';
    }
  }
  return os.str();
}

}  // namespace fpw
