#include "fpwork/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

namespace fpw {

namespace {

constexpr std::size_t kMaxTableEntries = std::size_t{1} << 26;

std::size_t product(std::span<const std::size_t> dims) {
  std::size_t p = 1;
  for (auto d : dims) {
    require(d >= 1, "alphabet sizes must be positive");
    require(p <= kMaxTableEntries / d, "joint table exceeds size cap");
    p *= d;
  }
  return p;
}

// Sum `values` over every axis not in `keep`. Output axes follow the order of
// `keep` (which must be sorted and unique).
template <class T>
std::vector<T> marginalize(const std::vector<std::size_t>& dims, const std::vector<T>& values,
                           const Axes& keep, std::vector<std::size_t>& out_dims) {
  out_dims.clear();
  for (auto a : keep) out_dims.push_back(dims[a]);
  std::vector<T> out(product(out_dims), T{});
  if (keep.size() == dims.size()) {
    return values;
  }
  // Stride of every input axis inside the output layout (0 when summed out).
  std::vector<std::size_t> out_stride(dims.size(), 0);
  {
    std::size_t s = 1;
    for (std::size_t i = keep.size(); i-- > 0;) {
      out_stride[keep[i]] = s;
      s *= dims[keep[i]];
    }
  }
  std::vector<std::size_t> idx(dims.size(), 0);
  std::size_t o = 0;
  for (std::size_t flat = 0; flat < values.size(); ++flat) {
    out[o] += values[flat];
    for (std::size_t ax = dims.size(); ax-- > 0;) {
      if (++idx[ax] < dims[ax]) {
        o += out_stride[ax];
        break;
      }
      o -= out_stride[ax] * (dims[ax] - 1);
      idx[ax] = 0;
    }
  }
  return out;
}

template <class T>
double entropy_of(const std::vector<T>& mass, double total) {
  if (total <= 0.0) return 0.0;
  double acc = 0.0;
  for (const auto& m : mass) {
    const double v = static_cast<double>(m);
    if (v > 0.0) acc += v * std::log2(v);
  }
  const double h = std::log2(total) - acc / total;
  return h > 0.0 ? h : 0.0;
}

Axes normalized(const Axes& a, std::size_t rank, const char* what) {
  Axes out = a;
  std::sort(out.begin(), out.end());
  require(std::adjacent_find(out.begin(), out.end()) == out.end(),
          std::string(what) + ": repeated axis");
  for (auto x : out) require(x < rank, std::string(what) + ": axis out of range");
  return out;
}

Axes merged(const Axes& a, const Axes& b) {
  Axes out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool disjoint(const Axes& a, const Axes& b) {
  Axes out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out.empty();
}

template <class Table>
double joint_entropy(const Table& t, const Axes& axes);

template <>
double joint_entropy(const JointType& t, const Axes& axes) {
  std::vector<std::size_t> d;
  auto m = marginalize(t.dims(), t.counts(), axes, d);
  return entropy_of(m, static_cast<double>(t.total()));
}

template <>
double joint_entropy(const Pmf& p, const Axes& axes) {
  std::vector<std::size_t> d;
  auto m = marginalize(p.dims(), p.values(), axes, d);
  return entropy_of(m, p.total());
}

template <class Table>
double cond_entropy(const Table& t, const Axes& target, const Axes& cond) {
  const Axes a = normalized(target, t.rank(), "entropy target");
  const Axes c = normalized(cond, t.rank(), "entropy condition");
  require(!a.empty(), "entropy: empty target");
  require(disjoint(a, c), "entropy: target and condition overlap");
  const double h = joint_entropy(t, merged(a, c)) - (c.empty() ? 0.0 : joint_entropy(t, c));
  return h > 0.0 ? h : 0.0;
}

template <class Table>
double cond_mutual_info(const Table& t, const Axes& a_in, const Axes& b_in, const Axes& c_in) {
  const Axes a = normalized(a_in, t.rank(), "mutual_info");
  const Axes b = normalized(b_in, t.rank(), "mutual_info");
  const Axes c = normalized(c_in, t.rank(), "mutual_info");
  require(!a.empty() && !b.empty(), "mutual_info: empty argument");
  require(disjoint(a, b) && disjoint(a, c) && disjoint(b, c), "mutual_info: overlapping axes");
  // I(A;B|C) = H(AC) + H(BC) - H(ABC) - H(C); the expression is symmetric in A, B.
  const double hc = c.empty() ? 0.0 : joint_entropy(t, c);
  const double v = joint_entropy(t, merged(a, c)) + joint_entropy(t, merged(b, c)) -
                   joint_entropy(t, merged(merged(a, b), c)) - hc;
  return v > 0.0 ? v : 0.0;
}

template <class Table>
double cond_multi_info(const Table& t, const std::vector<Axes>& parts_in, const Axes& cond_in) {
  require(parts_in.size() >= 2, "multi_info: need at least two parts");
  const Axes c = normalized(cond_in, t.rank(), "multi_info");
  Axes all;
  std::vector<Axes> parts;
  for (const auto& p : parts_in) {
    parts.push_back(normalized(p, t.rank(), "multi_info"));
    require(!parts.back().empty(), "multi_info: empty part");
    require(disjoint(all, parts.back()), "multi_info: overlapping parts");
    require(disjoint(c, parts.back()), "multi_info: part overlaps condition");
    all = merged(all, parts.back());
  }
  const double hc = c.empty() ? 0.0 : joint_entropy(t, c);
  double v = 0.0;
  for (const auto& p : parts) v += joint_entropy(t, merged(p, c)) - hc;
  v -= joint_entropy(t, merged(all, c)) - hc;
  return v > 0.0 ? v : 0.0;
}

}  // namespace

// ---------------------------------------------------------------- Sequence

Sequence::Sequence(std::vector<Symbol> symbols, std::size_t alphabet)
    : symbols_(std::move(symbols)), alphabet_(alphabet) {
  require(alphabet_ >= 1, "alphabet size must be >= 1");
  require(alphabet_ <= std::numeric_limits<Symbol>::max() + std::size_t{1}, "alphabet too large");
  for (auto s : symbols_) require(s < alphabet_, "symbol outside alphabet");
}

Sequence Sequence::constant(std::size_t n, Symbol s, std::size_t alphabet) {
  return Sequence(std::vector<Symbol>(n, s), alphabet);
}

// ---------------------------------------------------------------- JointType

JointType::JointType(std::vector<std::size_t> dims, std::vector<std::int64_t> counts)
    : dims_(std::move(dims)), counts_(std::move(counts)) {
  require(!dims_.empty(), "joint type needs at least one axis");
  require(counts_.size() == product(dims_), "count tensor does not match dims");
  for (auto c : counts_) {
    require(c >= 0, "negative count");
    total_ += c;
  }
}

JointType JointType::of(std::span<const Sequence> seqs) {
  require(!seqs.empty(), "joint_type: empty input");
  const std::size_t n = seqs[0].size();
  std::vector<std::size_t> dims;
  for (const auto& s : seqs) {
    require(s.size() == n, "joint_type: length mismatch");
    dims.push_back(s.alphabet());
  }
  require(n >= 1, "joint_type: empty sequences");
  std::vector<std::int64_t> counts(product(dims), 0);
  for (std::size_t t = 0; t < n; ++t) {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < seqs.size(); ++i) flat = flat * dims[i] + seqs[i][t];
    ++counts[flat];
  }
  return JointType(std::move(dims), std::move(counts));
}

JointType JointType::of(std::initializer_list<const Sequence*> seqs) {
  std::vector<Sequence> copy;
  for (auto* s : seqs) copy.push_back(*s);
  return of(std::span<const Sequence>(copy));
}

std::size_t JointType::flat_index(std::span<const std::size_t> index) const {
  require(index.size() == dims_.size(), "index rank mismatch");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    require(index[i] < dims_[i], "index out of range");
    flat = flat * dims_[i] + index[i];
  }
  return flat;
}

std::int64_t JointType::count(std::span<const std::size_t> index) const {
  return counts_[flat_index(index)];
}

double JointType::prob(std::span<const std::size_t> index) const {
  return total_ == 0 ? 0.0 : static_cast<double>(count(index)) / static_cast<double>(total_);
}

JointType JointType::marginal(const Axes& keep) const {
  const Axes k = normalized(keep, rank(), "marginal");
  require(!k.empty(), "marginal: keep at least one axis");
  std::vector<std::size_t> d;
  auto m = marginalize(dims_, counts_, k, d);
  return JointType(std::move(d), std::move(m));
}

std::vector<double> JointType::pmf() const {
  std::vector<double> out(counts_.size());
  for (std::size_t i = 0; i < counts_.size(); ++i)
    out[i] = total_ == 0 ? 0.0 : static_cast<double>(counts_[i]) / static_cast<double>(total_);
  return out;
}

// ---------------------------------------------------------------- Pmf

Pmf::Pmf(std::vector<std::size_t> dims, std::vector<double> values)
    : dims_(std::move(dims)), values_(std::move(values)) {
  require(!dims_.empty(), "pmf needs at least one axis");
  require(values_.size() == product(dims_), "pmf values do not match dims");
  for (double v : values_) require(v >= 0.0 && std::isfinite(v), "pmf entries must be finite and >= 0");
}

Pmf Pmf::uniform(std::vector<std::size_t> dims) {
  const std::size_t n = product(dims);
  return Pmf(std::move(dims), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Pmf Pmf::from(const JointType& t) { return Pmf(t.dims(), t.pmf()); }

double Pmf::total() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

double Pmf::at(std::span<const std::size_t> index) const {
  require(index.size() == dims_.size(), "index rank mismatch");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    require(index[i] < dims_[i], "index out of range");
    flat = flat * dims_[i] + index[i];
  }
  return values_[flat];
}

Pmf Pmf::marginal(const Axes& keep) const {
  const Axes k = normalized(keep, rank(), "marginal");
  require(!k.empty(), "marginal: keep at least one axis");
  std::vector<std::size_t> d;
  auto m = marginalize(dims_, values_, k, d);
  return Pmf(std::move(d), std::move(m));
}

// ---------------------------------------------------------------- functionals

double entropy(const JointType& t, const Axes& target, const Axes& cond) {
  return cond_entropy(t, target, cond);
}
double entropy(const Pmf& p, const Axes& target, const Axes& cond) {
  return cond_entropy(p, target, cond);
}
double entropy(const JointType& t, const InfoQuery& q) {
  require(q.partner.empty(), "entropy: query must not have a partner");
  return cond_entropy(t, q.target, q.cond);
}

double mutual_info(const JointType& t, const Axes& a, const Axes& b, const Axes& cond) {
  return cond_mutual_info(t, a, b, cond);
}
double mutual_info(const Pmf& p, const Axes& a, const Axes& b, const Axes& cond) {
  return cond_mutual_info(p, a, b, cond);
}
double mutual_info(const JointType& t, const InfoQuery& q) {
  return cond_mutual_info(t, q.target, q.partner, q.cond);
}

double multi_info(const JointType& t, const std::vector<Axes>& parts, const Axes& cond) {
  return cond_multi_info(t, parts, cond);
}
double multi_info(const Pmf& p, const std::vector<Axes>& parts, const Axes& cond) {
  return cond_multi_info(p, parts, cond);
}

double kl_divergence(const Pmf& p, const Pmf& q) {
  require(p.dims() == q.dims(), "kl_divergence: shape mismatch");
  const double pt = p.total();
  const double qt = q.total();
  require(pt > 0.0 && qt > 0.0, "kl_divergence: empty distribution");
  double d = 0.0;
  for (std::size_t i = 0; i < p.values().size(); ++i) {
    const double pi = p.values()[i] / pt;
    if (pi <= 0.0) continue;
    const double qi = q.values()[i] / qt;
    if (qi <= 0.0) return std::numeric_limits<double>::infinity();
    d += pi * std::log2(pi / qi);
  }
  return d > 0.0 ? d : 0.0;
}

double kl_divergence(const JointType& p, const Pmf& q) { return kl_divergence(Pmf::from(p), q); }

double conditional_kl_divergence(const Pmf& p_cond, const Pmf& q_cond, const Pmf& cond_law,
                                 const Axes& cond_axes) {
  require(p_cond.dims() == q_cond.dims(), "conditional_kl_divergence: shape mismatch");
  const Axes c = normalized(cond_axes, p_cond.rank(), "conditional_kl_divergence");
  std::vector<std::size_t> cdims;
  for (auto a : c) cdims.push_back(p_cond.dims()[a]);
  require(cond_law.dims() == cdims, "conditional_kl_divergence: conditioning law shape mismatch");
  // Scale both conditionals by p_X, then take the joint divergence.
  const auto& dims = p_cond.dims();
  std::vector<double> pj(p_cond.values().size()), qj(pj.size());
  std::vector<std::size_t> idx(dims.size(), 0);
  for (std::size_t flat = 0; flat < pj.size(); ++flat) {
    std::size_t cflat = 0;
    for (std::size_t i = 0; i < c.size(); ++i) cflat = cflat * cdims[i] + idx[c[i]];
    const double w = cond_law.values()[cflat];
    pj[flat] = w * p_cond.values()[flat];
    qj[flat] = w * q_cond.values()[flat];
    for (std::size_t ax = dims.size(); ax-- > 0;) {
      if (++idx[ax] < dims[ax]) break;
      idx[ax] = 0;
    }
  }
  return kl_divergence(Pmf(dims, std::move(pj)), Pmf(dims, std::move(qj)));
}

TypeClassSize log_type_class_size(const JointType& t, const Axes& cond) {
  require(t.total() >= 1, "log_type_class_size: empty type");
  const Axes c = normalized(cond, t.rank(), "log_type_class_size");
  const double n = static_cast<double>(t.total());
  auto log2_factorial = [](double x) { return std::lgamma(x + 1.0) / std::log(2.0); };

  Axes rest;
  for (std::size_t a = 0; a < t.rank(); ++a)
    if (!std::binary_search(c.begin(), c.end(), a)) rest.push_back(a);
  require(!rest.empty(), "log_type_class_size: nothing left after conditioning");

  TypeClassSize out;
  double exact = 0.0;
  for (auto k : t.counts()) exact -= log2_factorial(static_cast<double>(k));
  if (c.empty()) {
    exact += log2_factorial(n);
  } else {
    std::vector<std::size_t> d;
    for (auto k : marginalize(t.dims(), t.counts(), c, d)) exact += log2_factorial(static_cast<double>(k));
  }
  out.exact = std::max(0.0, exact);
  const double h = c.empty() ? entropy(t, rest) : entropy(t, rest, c);
  const double cells = static_cast<double>(product(t.dims()));
  out.upper = n * h;
  out.lower = n * h - cells * std::log2(n + 1.0);
  return out;
}

std::vector<std::int64_t> quantize_counts(std::span<const double> p, std::int64_t n) {
  require(n >= 1, "quantize_pmf: N must be >= 1");
  require(!p.empty(), "quantize_pmf: empty p.m.f.");
  double sum = 0.0;
  for (double v : p) {
    require(v >= 0.0 && std::isfinite(v), "quantize_pmf: invalid probability");
    sum += v;
  }
  require(std::abs(sum - 1.0) <= 1e-9, "quantize_pmf: probabilities must sum to 1");
  std::vector<std::int64_t> counts(p.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double target = p[i] / sum * static_cast<double>(n);
    counts[i] = static_cast<std::int64_t>(std::floor(target + 1e-12));
    assigned += counts[i];
    rem.emplace_back(target - static_cast<double>(counts[i]), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (std::abs(a.first - b.first) > 1e-12) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t j = 0; assigned < n; ++j, ++assigned) ++counts[rem[j % rem.size()].second];
  // Rounding noise can overshoot by one when every floor already hit the target.
  for (std::size_t j = rem.size(); assigned > n && j-- > 0;) {
    const auto i = rem[j].second;
    if (counts[i] > 0) {
      --counts[i];
      --assigned;
    }
  }
  return counts;
}

JointType quantize_pmf(std::span<const double> p, std::int64_t n) {
  return JointType({p.size()}, quantize_counts(p, n));
}

double sequence_entropy(std::span<const Sequence* const> vars, std::span<const std::uint32_t> cond,
                        std::size_t cond_cells) {
  require(!vars.empty(), "sequence_entropy: no variables");
  const std::size_t n = vars[0]->size();
  require(n >= 1, "sequence_entropy: empty sequences");
  std::size_t radix = 1;
  for (auto* v : vars) {
    require(v->size() == n, "sequence_entropy: length mismatch");
    radix *= v->alphabet();
  }
  const bool has_cond = !cond.empty();
  if (has_cond) require(cond.size() == n, "sequence_entropy: condition length mismatch");
  const std::size_t cells = has_cond ? std::max<std::size_t>(cond_cells, 1) : 1;

  auto key_at = [&](std::size_t t) {
    std::size_t k = has_cond ? cond[t] : 0;
    for (auto* v : vars) k = k * v->alphabet() + (*v)[t];
    return k;
  };

  const double dn = static_cast<double>(n);
  double acc_joint = 0.0;
  double acc_cond = 0.0;
  if (radix * cells <= (std::size_t{1} << 16)) {
    thread_local std::vector<std::uint32_t> scratch;
    thread_local std::vector<std::uint32_t> cell_counts;
    scratch.assign(radix * cells, 0);
    cell_counts.assign(cells, 0);
    for (std::size_t t = 0; t < n; ++t) {
      ++scratch[key_at(t)];
      if (has_cond) ++cell_counts[cond[t]];
    }
    for (auto c : scratch)
      if (c > 1) acc_joint += c * std::log2(static_cast<double>(c));
    if (has_cond)
      for (auto c : cell_counts)
        if (c > 1) acc_cond += c * std::log2(static_cast<double>(c));
  } else {
    std::unordered_map<std::size_t, std::uint32_t> joint;
    std::unordered_map<std::size_t, std::uint32_t> cell;
    for (std::size_t t = 0; t < n; ++t) {
      ++joint[key_at(t)];
      if (has_cond) ++cell[cond[t]];
    }
    for (auto& [k, c] : joint)
      if (c > 1) acc_joint += c * std::log2(static_cast<double>(c));
    for (auto& [k, c] : cell)
      if (c > 1) acc_cond += c * std::log2(static_cast<double>(c));
  }
  // H(V|C) = H(V,C) - H(C) = (acc_cond - acc_joint) / n
  const double h = has_cond ? (acc_cond - acc_joint) / dn : std::log2(dn) - acc_joint / dn;
  return h > 0.0 ? h : 0.0;
}

}  // namespace fpw
