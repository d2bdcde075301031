#include <algorithm>
#include <cmath>
#include <numeric>

#include "fpwork/error.hpp"
#include "fpwork/game.hpp"

namespace fpw {

namespace {

constexpr double kSymTol = 1e-10;
constexpr double kEqualTol = 1e-9;

// Invariance under adjacent transpositions of the first K axes generates the
// full symmetric group.
void require_symmetric(const Pmf& p, std::size_t K) {
  const auto& dims = p.dims();
  for (std::size_t k = 0; k + 1 < K; ++k)
    if (dims[k] != dims[k + 1]) throw Error(Errc::invalid_argument, "coalition axes must share one alphabet");
  const auto& v = p.values();
  std::vector<std::size_t> idx(dims.size(), 0);
  for (std::size_t flat = 0; flat < v.size(); ++flat) {
    for (std::size_t k = 0; k + 1 < K; ++k) {
      if (idx[k] == idx[k + 1]) continue;
      auto sw = idx;
      std::swap(sw[k], sw[k + 1]);
      if (std::abs(p.at(sw) - v[flat]) > kSymTol)
        throw Error(Errc::invalid_argument, "joint is not invariant to permutations of the coalition axes");
    }
    for (std::size_t a = dims.size(); a-- > 0;) {
      if (++idx[a] < dims[a]) break;
      idx[a] = 0;
    }
  }
}

Axes range(std::size_t from, std::size_t to) {
  Axes a(to - from);
  std::iota(a.begin(), a.end(), from);
  return a;
}

Axes join(Axes a, const Axes& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// p(x_K | side) == prod_k p(x_k | side)
bool conditionally_independent(const Pmf& p, std::size_t K, const Axes& side) {
  if (K < 2) return true;
  double dep = 0.0;
  for (std::size_t k = 1; k < K; ++k) dep += mutual_info(p, range(0, k), {k}, side);
  return dep < kEqualTol;
}

}  // namespace

FairInequalityReport check_fair_inequalities(const Pmf& joint, std::size_t K, const Axes& y_axes,
                                             const Axes& side_axes,
                                             std::optional<std::pair<std::size_t, std::size_t>> pair) {
  const std::size_t rank = joint.rank();
  if (K == 0 || K > rank) throw Error(Errc::invalid_argument, "coalition size out of range");
  std::vector<char> seen(rank, 0);
  for (const Axes* ax : {&y_axes, &side_axes})
    for (auto a : *ax) {
      if (a < K || a >= rank || seen[a]) throw Error(Errc::invalid_argument, "side/output axes must be distinct non-coalition axes");
      seen[a] = 1;
    }
  if (pair && (pair->first == 0 || pair->first > pair->second || pair->second > K))
    throw Error(Errc::invalid_argument, "need 1 <= |A| <= |B| <= K");
  require_symmetric(joint, K);

  const Axes z = range(K, rank);
  FairInequalityReport rep;
  auto h_cond_rest = [&](std::size_t a) { return entropy(joint, range(0, a), join(z, range(a, K))) / double(a); };
  auto h_side = [&](std::size_t a) { return entropy(joint, range(0, a), z) / double(a); };
  auto info = [&](std::size_t a) {
    if (y_axes.empty() && a == K) return 0.0;
    return mutual_info(joint, range(0, a), join(y_axes, range(a, K)), side_axes) / double(a);
  };

  for (std::size_t a = 1; a <= K; ++a)
    for (std::size_t b = a; b <= K; ++b) {
      if (pair && (pair->first != a || pair->second != b)) continue;
      FairInequalityEntry e;
      e.a = a;
      e.b = b;
      e.huy_slack = h_cond_rest(b) - h_cond_rest(a);
      e.hus_slack = h_side(a) - h_side(b);
      e.i_slack = info(a) - info(b);
      e.huy_equal = std::abs(e.huy_slack) < kEqualTol;
      e.hus_equal = std::abs(e.hus_slack) < kEqualTol;
      e.i_equal = std::abs(e.i_slack) < kEqualTol;
      if (e.huy_slack < -kEqualTol || e.hus_slack < -kEqualTol || e.i_slack < -kEqualTol) rep.holds = false;
      rep.entries.push_back(e);
    }

  rep.i2_applicable = conditionally_independent(joint, K, side_axes);
  const double joint_info = y_axes.empty() ? 0.0 : mutual_info(joint, range(0, K), y_axes, side_axes) / double(K);
  const double single = y_axes.empty() ? 0.0 : mutual_info(joint, {0}, y_axes, side_axes);
  rep.i2_slack = joint_info - single;
  rep.i2_equal = std::abs(rep.i2_slack) < kEqualTol;
  if (rep.i2_applicable && rep.i2_slack < -kEqualTol) rep.holds = false;
  return rep;
}

}  // namespace fpw
