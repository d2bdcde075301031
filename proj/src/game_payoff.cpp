#include <algorithm>
#include <cmath>
#include <numeric>

#include "fpwork/error.hpp"
#include "game_internal.hpp"

namespace fpw {

namespace {

constexpr std::size_t kJointCap = std::size_t{1} << 24;

void check_law(std::vector<double>& p, std::size_t n, const char* what) {
  if (p.empty()) p.assign(n, 1.0 / static_cast<double>(n));
  if (p.size() != n) throw Error(Errc::config, std::string(what) + " has the wrong size");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(Errc::config, std::string(what) + " has a negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(Errc::config, std::string(what) + " does not sum to 1");
}

}  // namespace

std::size_t GameProblem::tuples() const { return detail::pow_size(x_size, K); }

void GameProblem::validate() {
  if (K < 1) throw Error(Errc::config, "K must be >= 1");
  if (x_size < 1 || s_size < 1 || L < 1) throw Error(Errc::config, "alphabet sizes must be >= 1");
  if (restarts < 1) throw Error(Errc::config, "restarts must be >= 1");
  if (!(grid_step > 0.0 && grid_step <= 1.0)) throw Error(Errc::config, "grid_step must lie in (0, 1]");
  if (!(fd_step > 0.0)) throw Error(Errc::config, "fd_step must be positive");

  std::size_t t = 1;
  for (std::size_t k = 0; k < K; ++k) {
    if (t > ChannelSpec::kMaxEntries / x_size) throw Error(Errc::budget_exceeded, "channel table exceeds size cap");
    t *= x_size;
  }

  switch (feasible) {
    case FeasibleClass::boneh_shaw:
      if (y_size == 0) y_size = x_size;
      if (y_size != x_size) throw Error(Errc::config, "marking-assumption games need |Y| = |X|");
      break;
    case FeasibleClass::explicit_list:
      if (channels.empty()) throw Error(Errc::config, "explicit channel list is empty");
      for (const auto& c : channels)
        if (c.coalition() != K || c.x_size() != x_size)
          throw Error(Errc::config, "explicit channel does not match K and |X|");
      if (y_size == 0) y_size = channels.front().y_size();
      for (const auto& c : channels)
        if (c.y_size() != y_size) throw Error(Errc::config, "explicit channels disagree on |Y|");
      break;
    case FeasibleClass::distortion: {
      if (!distortion) throw Error(Errc::config, "distortion class needs a distortion spec");
      const auto& d = *distortion;
      if (d.s_size == 0 || d.d2.size() % d.s_size) throw Error(Errc::config, "d2 table has the wrong size");
      const std::size_t ys = d.d2.size() / d.s_size;
      if (y_size == 0) y_size = ys;
      if (y_size != ys) throw Error(Errc::config, "d2 table disagrees with |Y|");
      try {
        validate_estimator(d, K, x_size, y_size);
      } catch (const Error& e) {
        throw Error(Errc::config, e.what());
      }
      break;
    }
  }
  if (t > ChannelSpec::kMaxEntries / y_size) throw Error(Errc::budget_exceeded, "channel table exceeds size cap");
  if (s_size * L * t * y_size > kJointCap) throw Error(Errc::budget_exceeded, "game dimensions exceed the joint table cap");

  check_law(p_s, s_size, "p_s");
  if (!d1.empty() && d1.size() != s_size * x_size) throw Error(Errc::config, "d1 table must be |S| x |X|");
  if (std::isfinite(D1) && d1.empty()) throw Error(Errc::config, "D1 given without a d1 table");
}

InputLaw InputLaw::uniform(const GameProblem& problem) {
  InputLaw law;
  law.s_size = problem.s_size;
  law.w_size = problem.L;
  law.x_size = problem.x_size;
  law.p_s = problem.p_s.empty() ? std::vector<double>(problem.s_size, 1.0 / static_cast<double>(problem.s_size))
                                : problem.p_s;
  law.p_w.assign(problem.L, 1.0 / static_cast<double>(problem.L));
  law.p_x.assign(problem.s_size * problem.L * problem.x_size, 1.0 / static_cast<double>(problem.x_size));
  return law;
}

void InputLaw::validate() const {
  auto simplex = [](std::span<const double> p, const char* what) {
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= -1e-12) || !std::isfinite(v)) throw Error(Errc::config, std::string(what) + " has a negative entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(Errc::config, std::string(what) + " does not sum to 1");
  };
  if (p_s.size() != s_size || p_w.size() != w_size || p_x.size() != s_size * w_size * x_size)
    throw Error(Errc::config, "input law has inconsistent dimensions");
  simplex(p_s, "p_s");
  simplex(p_w, "p_w");
  for (std::size_t c = 0; c < s_size * w_size; ++c)
    simplex(std::span<const double>(p_x).subspan(c * x_size, x_size), "p_x|sw");
}

double InputLaw::embedding_distortion(std::span<const double> d1) const {
  if (d1.empty()) return 0.0;
  double d = 0.0;
  for (std::size_t s = 0; s < s_size; ++s)
    for (std::size_t w = 0; w < w_size; ++w)
      for (std::size_t x = 0; x < x_size; ++x) d += p_s[s] * p_w[w] * px(s, w, x) * d1[s * x_size + x];
  return d;
}

namespace detail {

std::size_t pow_size(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) r *= base;
  return r;
}

std::vector<std::size_t> tuple_digits(std::size_t t, std::size_t K, std::size_t x_size) {
  std::vector<std::size_t> d(K);
  for (std::size_t i = K; i-- > 0;) {
    d[i] = t % x_size;
    t /= x_size;
  }
  return d;
}

std::size_t InputJoint::digit(std::size_t t, std::size_t k) const {
  for (std::size_t i = K - 1; i > k; --i) t /= x_size;
  return t % x_size;
}

InputJoint InputJoint::from(const InputLaw& law, std::size_t K) {
  InputJoint j;
  j.s_size = law.s_size;
  j.w_size = law.w_size;
  j.x_size = law.x_size;
  j.K = K;
  j.tuples = pow_size(law.x_size, K);
  j.pe.assign(j.s_size * j.w_size * j.tuples, 0.0);
  j.pt.assign(j.tuples, 0.0);
  for (std::size_t s = 0; s < j.s_size; ++s)
    for (std::size_t w = 0; w < j.w_size; ++w) {
      const double base = law.p_s[s] * law.p_w[w];
      const std::size_t off = (s * j.w_size + w) * j.tuples;
      for (std::size_t t = 0; t < j.tuples; ++t) {
        double p = base;
        std::size_t rest = t;
        for (std::size_t i = 0; i < K && p > 0.0; ++i) {
          p *= law.px(s, w, rest % law.x_size);
          rest /= law.x_size;
        }
        j.pe[off + t] = p;
        j.pt[t] += p;
      }
    }
  return j;
}

std::vector<PayoffTerm> payoff_terms(const GameProblem& problem) {
  const std::size_t K = problem.K;
  std::vector<PayoffTerm> terms;
  std::vector<std::size_t> all(K);
  std::iota(all.begin(), all.end(), 0);
  switch (problem.objective) {
    case Objective::detect_one:
      terms.push_back({all, {}, true, true, 1.0 / static_cast<double>(K)});
      break;
    case Objective::simple:
      terms.push_back({{0}, {}, false, true, 1.0});
      break;
    case Objective::detect_all:
      if (problem.fair) {
        for (std::size_t a = 1; a <= K; ++a) {
          PayoffTerm t;
          t.u.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(a));
          t.z.assign(all.begin() + static_cast<std::ptrdiff_t>(a), all.end());
          t.scale = 1.0 / static_cast<double>(a);
          terms.push_back(std::move(t));
        }
      } else {
        for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << K); ++mask) {
          PayoffTerm t;
          for (std::size_t k = 0; k < K; ++k) ((mask >> k) & 1 ? t.u : t.z).push_back(k);
          t.scale = 1.0 / static_cast<double>(t.u.size());
          terms.push_back(std::move(t));
        }
      }
      break;
  }
  return terms;
}

TermEvaluator::TermEvaluator(const InputJoint& joint, PayoffTerm term, std::size_t y_size)
    : joint_(&joint), term_(std::move(term)), y_size_(y_size) {
  const std::size_t n = joint.pe.size();
  uz_.resize(n);
  z_.resize(n);
  n_z_ = (term_.cond_s ? joint.s_size : 1) * (term_.cond_w ? joint.w_size : 1) *
         pow_size(joint.x_size, term_.z.size());
  n_uz_ = n_z_ * pow_size(joint.x_size, term_.u.size());
  for (std::size_t s = 0; s < joint.s_size; ++s)
    for (std::size_t w = 0; w < joint.w_size; ++w)
      for (std::size_t t = 0; t < joint.tuples; ++t) {
        const auto d = tuple_digits(t, joint.K, joint.x_size);
        std::size_t zid = 0;
        if (term_.cond_s) zid = s;
        if (term_.cond_w) zid = zid * joint.w_size + w;
        for (auto k : term_.z) zid = zid * joint.x_size + d[k];
        std::size_t uid = zid;
        for (auto k : term_.u) uid = uid * joint.x_size + d[k];
        const std::size_t e = (s * joint.w_size + w) * joint.tuples + t;
        z_[e] = static_cast<std::uint32_t>(zid);
        uz_[e] = static_cast<std::uint32_t>(uid);
      }
  p_uzy_.resize(n_uz_ * y_size_);
  p_zy_.resize(n_z_ * y_size_);
  p_uz_.resize(n_uz_);
  p_z_.resize(n_z_);
}

void TermEvaluator::accumulate(std::span<const double> table) const {
  std::fill(p_uzy_.begin(), p_uzy_.end(), 0.0);
  std::fill(p_zy_.begin(), p_zy_.end(), 0.0);
  std::fill(p_uz_.begin(), p_uz_.end(), 0.0);
  std::fill(p_z_.begin(), p_z_.end(), 0.0);
  const auto& pe = joint_->pe;
  const std::size_t T = joint_->tuples;
  for (std::size_t e = 0; e < pe.size(); ++e) {
    const double p = pe[e];
    if (p <= 0.0) continue;
    const double* q = table.data() + (e % T) * y_size_;
    double* a = p_uzy_.data() + uz_[e] * y_size_;
    double* b = p_zy_.data() + z_[e] * y_size_;
    for (std::size_t y = 0; y < y_size_; ++y) {
      const double m = p * q[y];
      a[y] += m;
      b[y] += m;
    }
    p_uz_[uz_[e]] += p;
    p_z_[z_[e]] += p;
  }
}

double TermEvaluator::value(std::span<const double> table) const {
  accumulate(table);
  double v = 0.0;
  for (std::size_t i = 0; i < n_uz_; ++i) {
    if (p_uz_[i] <= 0.0) continue;
    for (std::size_t y = 0; y < y_size_; ++y) {
      const double m = p_uzy_[i * y_size_ + y];
      if (m > 0.0) v += m * std::log2(m / p_uz_[i]);
    }
  }
  for (std::size_t i = 0; i < n_z_; ++i) {
    if (p_z_[i] <= 0.0) continue;
    for (std::size_t y = 0; y < y_size_; ++y) {
      const double m = p_zy_[i * y_size_ + y];
      if (m > 0.0) v -= m * std::log2(m / p_z_[i]);
    }
  }
  return term_.scale * std::max(0.0, v);
}

double TermEvaluator::value_grad(std::span<const double> table, std::vector<double>& grad) const {
  const double v = value(table);
  grad.assign(joint_->tuples * y_size_, 0.0);
  const auto& pe = joint_->pe;
  const std::size_t T = joint_->tuples;
  for (std::size_t e = 0; e < pe.size(); ++e) {
    const double p = pe[e];
    if (p <= 0.0) continue;
    const std::size_t t = e % T;
    const double* a = p_uzy_.data() + uz_[e] * y_size_;
    const double* b = p_zy_.data() + z_[e] * y_size_;
    const double puz = p_uz_[uz_[e]], pz = p_z_[z_[e]];
    for (std::size_t y = 0; y < y_size_; ++y) {
      double g;
      if (b[y] <= 0.0) {
        g = std::log2(pz / puz);  // limit of log p(y|uz) - log p(y|z) along this coordinate
      } else {
        const double l1 = a[y] > 0.0 ? std::log2(a[y] / puz) : kLogFloor;
        g = l1 - std::log2(b[y] / pz);
      }
      grad[t * y_size_ + y] += p * g;
    }
  }
  for (auto& g : grad) g *= term_.scale;
  return v;
}

double frozen_payoff(const InputLaw& law, const GameProblem& problem, std::span<const double> table) {
  const auto joint = InputJoint::from(law, problem.K);
  double best = std::numeric_limits<double>::infinity();
  for (auto& term : payoff_terms(problem)) best = std::min(best, TermEvaluator(joint, term, problem.y_size).value(table));
  return best;
}

ChannelSpec make_channel(const GameProblem& problem, std::vector<double> table) {
  const std::size_t ys = problem.y_size;
  for (std::size_t t = 0; t * ys < table.size(); ++t) {
    double sum = 0.0;
    for (std::size_t y = 0; y < ys; ++y) {
      table[t * ys + y] = std::max(0.0, table[t * ys + y]);
      sum += table[t * ys + y];
    }
    for (std::size_t y = 0; y < ys; ++y) table[t * ys + y] /= sum;
  }
  switch (problem.feasible) {
    case FeasibleClass::boneh_shaw:
      return ChannelSpec(problem.K, problem.x_size, ys, std::move(table), ChannelClass::boneh_shaw);
    case FeasibleClass::distortion:
      return ChannelSpec(problem.K, problem.x_size, ys, std::move(table), ChannelClass::distortion,
                         problem.distortion);
    case FeasibleClass::explicit_list:
      break;
  }
  return ChannelSpec(problem.K, problem.x_size, ys, std::move(table));
}

void project_simplex(std::span<double> v) {
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    const double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  for (auto& x : v) x = std::max(0.0, x - theta);
}

}  // namespace detail

double evaluate_payoff(const InputLaw& law, const ChannelSpec& channel, const GameProblem& problem) {
  GameProblem p = problem;
  p.validate();
  law.validate();
  if (channel.coalition() != p.K || channel.x_size() != p.x_size || channel.y_size() != p.y_size)
    throw Error(Errc::invalid_argument, "channel does not match the game dimensions");
  return detail::frozen_payoff(law, p, channel.table());
}

}  // namespace fpw
