#pragma once

// Brute-force reference computations shared by the tests. Everything here is
// deliberately naive: maps over symbol tuples, no shared code with the library.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "fpwork/types.hpp"

namespace oracle {

using Col = std::vector<int>;

inline double entropy(const std::vector<const Col*>& vars) {
  if (vars.empty()) return 0.0;
  const std::size_t n = vars[0]->size();
  std::map<std::vector<int>, double> counts;
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<int> key;
    for (auto* v : vars) key.push_back((*v)[t]);
    counts[key] += 1.0;
  }
  double h = 0.0;
  for (auto& [k, c] : counts) h -= c / n * std::log2(c / n);
  return h;
}

inline double cond_entropy(std::vector<const Col*> target, const std::vector<const Col*>& cond) {
  const double hc = entropy(cond);
  target.insert(target.end(), cond.begin(), cond.end());
  return entropy(target) - hc;
}

inline double mutual_info(const std::vector<const Col*>& a, const std::vector<const Col*>& b,
                          const std::vector<const Col*>& cond = {}) {
  std::vector<const Col*> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  return cond_entropy(a, cond) + cond_entropy(b, cond) - cond_entropy(ab, cond);
}

inline Col to_col(const fpw::Sequence& s) {
  Col c(s.size());
  for (std::size_t t = 0; t < s.size(); ++t) c[t] = s[t];
  return c;
}

inline fpw::Sequence random_sequence(std::mt19937_64& g, std::size_t n, std::size_t alpha) {
  std::vector<fpw::Symbol> v(n);
  std::uniform_int_distribution<int> d(0, static_cast<int>(alpha) - 1);
  for (auto& x : v) x = static_cast<fpw::Symbol>(d(g));
  return fpw::Sequence(std::move(v), alpha);
}

/// Pmf over a product of alphabets; values from a map of index tuples.
inline double pmf_entropy(const std::vector<std::size_t>& dims, const std::vector<double>& p,
                          const std::vector<std::size_t>& keep) {
  std::map<std::vector<std::size_t>, double> m;
  std::vector<std::size_t> idx(dims.size(), 0);
  for (double v : p) {
    std::vector<std::size_t> key;
    for (auto a : keep) key.push_back(idx[a]);
    m[key] += v;
    for (std::size_t a = dims.size(); a-- > 0;) {
      if (++idx[a] < dims[a]) break;
      idx[a] = 0;
    }
  }
  double h = 0.0;
  for (auto& [k, v] : m)
    if (v > 0) h -= v * std::log2(v);
  return h;
}

inline double log2_binom(std::size_t n, std::size_t k) {
  return (std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) / std::log(2.0);
}

/// Exhaustive MPMI over user subsets by bitmask. Ties within `tol` go to the
/// larger set, then the lexicographically smaller one.
struct BruteMpmi {
  std::vector<std::size_t> set;
  double score = 0.0;
};

inline BruteMpmi brute_mpmi(const std::vector<Col>& rows, const Col& y, const Col& side, std::size_t k_max,
                            double thr, double tol = 1e-12) {
  BruteMpmi best;  // empty set scores 0
  const std::size_t m = rows.size();
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << m); ++mask) {
    std::vector<std::size_t> set;
    for (std::size_t i = 0; i < m; ++i)
      if (mask >> i & 1) set.push_back(i);
    if (set.size() > k_max) continue;
    double s = 0.0;
    std::vector<const Col*> xs;
    for (auto i : set) {
      s += cond_entropy({&rows[i]}, {&side});
      xs.push_back(&rows[i]);
    }
    s -= cond_entropy(xs, {&y, &side});
    s -= static_cast<double>(set.size()) * thr;
    const bool better = s > best.score + tol ||
                        (std::abs(s - best.score) <= tol &&
                         (set.size() > best.set.size() || (set.size() == best.set.size() && set < best.set)));
    if (better) {
      best.set = set;
      best.score = s;
    }
  }
  return best;
}

}  // namespace oracle
