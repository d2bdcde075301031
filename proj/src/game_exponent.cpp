#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "fpwork/error.hpp"
#include "fpwork/rng.hpp"
#include "game_internal.hpp"

namespace fpw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-6;

double xlog2(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

struct Eval {
  double obj = 0.0;
  double payoff = 0.0;
  double dist = 0.0;
  std::vector<double> eq;
};

// The constrained-divergence program for one (input law, query). Parameters
// are logits: per active (s,w) cell, one per x_K tuple (then fitted to the
// prescribed marginals) and one per free (tuple, y) channel entry.
class Program {
 public:
  Program(const InputLaw& law, const GameProblem& pr, const ExponentQuery& q, bool memoryless)
      : pr_(pr), law_(law), q_(q), memoryless_(memoryless) {
    S_ = law.s_size;
    W_ = law.w_size;
    X_ = law.x_size;
    K_ = pr.K;
    T_ = detail::pow_size(X_, K_);
    Y_ = pr.y_size;
    C_ = S_ * W_;

    if (q.simple) {
      if (S_ != 1) throw Error(Errc::config, "the per-user exponent form has no host alphabet; use |S| = 1");
      if (q.user >= K_) throw Error(Errc::config, "exponent user index out of range");
    } else {
      subset_ = q.subset;
      if (subset_.empty()) {
        subset_.resize(K_);
        std::iota(subset_.begin(), subset_.end(), 0);
      }
      std::sort(subset_.begin(), subset_.end());
      if (std::adjacent_find(subset_.begin(), subset_.end()) != subset_.end() || subset_.back() >= K_)
        throw Error(Errc::config, "exponent subset must hold distinct coalition indices");
      in_subset_.assign(K_, 0);
      for (auto a : subset_) in_subset_[a] = 1;
    }

    // cell weights p_W(w) p~(s|w) and the constant host-divergence term
    pi_.assign(C_, 0.0);
    if (!q.p_s_tilde.empty() && q.p_s_tilde.size() != W_ * S_)
      throw Error(Errc::config, "p_s_tilde must be |W| x |S|");
    for (std::size_t w = 0; w < W_; ++w) {
      double sum = 0.0;
      for (std::size_t s = 0; s < S_; ++s) {
        const double pt = q.p_s_tilde.empty() ? law.p_s[s] : q.p_s_tilde[w * S_ + s];
        if (!(pt >= 0.0)) throw Error(Errc::config, "p_s_tilde has a negative entry");
        sum += pt;
        pi_[s * W_ + w] = law.p_w[w] * pt;
        if (pt > 0.0) {
          const_term_ = law.p_s[s] > 0.0 ? const_term_ + law.p_w[w] * pt * std::log2(pt / law.p_s[s]) : kInf;
        }
      }
      if (std::abs(sum - 1.0) > 1e-9) throw Error(Errc::config, "p_s_tilde rows must sum to 1");
    }
    for (std::size_t c = 0; c < C_; ++c)
      if (pi_[c] > 0.0) active_.push_back(c);

    ref_.assign(C_ * T_, 0.0);
    for (std::size_t c = 0; c < C_; ++c) {
      const std::size_t s = c / W_, w = c % W_;
      for (std::size_t t = 0; t < T_; ++t) {
        double r = 1.0;
        for (auto d : detail::tuple_digits(t, K_, X_)) r *= law.px(s, w, d);
        ref_[c * T_ + t] = r;
      }
    }
    h_marg_ = 0.0;
    for (auto c : active_) {
      double h = 0.0;
      for (std::size_t x = 0; x < X_; ++x) h -= xlog2(law.px(c / W_, c % W_, x));
      h_marg_ += pi_[c] * h;
    }

    mask_ = detail::support_mask(pr);
    allowed_.resize(T_);
    for (std::size_t t = 0; t < T_; ++t)
      for (std::size_t y = 0; y < Y_; ++y)
        if (mask_[t * Y_ + y]) allowed_[t].push_back(y);
    for (std::size_t t = 0; t < T_; ++t)
      if (allowed_[t].empty()) throw Error(Errc::config, "feasible channel class leaves an input tuple without outputs");
    comp_ = detail::composition_ids(K_, X_, &n_comp_);

    // free parameters
    n_ = active_.size() * T_;
    for (std::size_t t = 0; t < T_; ++t)
      if (allowed_[t].size() > 1) n_ += active_.size() * allowed_[t].size();

    use_fair_ = pr.fair && pr.feasible != FeasibleClass::explicit_list && !memoryless_;
    use_hull_ = pr.feasible == FeasibleClass::explicit_list && !memoryless_;
    use_dist_ = pr.feasible == FeasibleClass::distortion && !memoryless_;
    if (pr.feasible != FeasibleClass::boneh_shaw && !(pr.feasible == FeasibleClass::boneh_shaw && !pr.fair))
      build_reference_polytope();
  }

  std::size_t dims() const { return n_; }
  std::size_t table_size() const { return C_ * T_ * Y_; }
  double const_term() const { return const_term_; }
  bool has_dist() const { return use_dist_; }
  std::size_t eq_size() const { return (use_fair_ ? T_ * Y_ : 0) + (use_hull_ ? T_ * Y_ : 0); }

  // logits -> joint p~(c, t, y)
  void joint(std::span<const double> th, std::vector<double>& P) const {
    P.assign(table_size(), 0.0);
    std::size_t idx = 0;
    std::vector<double> px(T_);
    for (auto c : active_) {
      double mx = -kInf;
      for (std::size_t t = 0; t < T_; ++t) mx = std::max(mx, th[idx + t]);
      for (std::size_t t = 0; t < T_; ++t) px[t] = std::exp(th[idx + t] - mx);
      idx += T_;
      fit_marginals(c, px);
      for (std::size_t t = 0; t < T_; ++t) {
        const double base = pi_[c] * px[t];
        double* row = P.data() + (c * T_ + t) * Y_;
        const auto& al = allowed_[t];
        if (al.size() == 1) {
          row[al[0]] = base;
          continue;
        }
        double m = -kInf;
        for (std::size_t j = 0; j < al.size(); ++j) m = std::max(m, th[idx + j]);
        double z = 0.0;
        for (std::size_t j = 0; j < al.size(); ++j) z += std::exp(th[idx + j] - m);
        for (std::size_t j = 0; j < al.size(); ++j) row[al[j]] = base * std::exp(th[idx + j] - m) / z;
        idx += al.size();
      }
    }
  }

  // Inverse of joint() up to the marginal fit: logits reproducing a product
  // input and a given channel table (|T| x |Y|).
  std::vector<double> logits_for(std::span<const double> channel) const {
    std::vector<double> th;
    th.reserve(n_);
    for (auto c : active_) {
      for (std::size_t t = 0; t < T_; ++t) th.push_back(safe_log(ref_[c * T_ + t]));
      for (std::size_t t = 0; t < T_; ++t) {
        if (allowed_[t].size() == 1) continue;
        for (auto y : allowed_[t]) th.push_back(safe_log(channel[t * Y_ + y]));
      }
    }
    return th;
  }

  Eval evaluate(std::span<const double> P) const {
    Eval ev;
    std::vector<double> Pty(T_ * Y_, 0.0), Pt(T_, 0.0);
    for (auto c : active_)
      for (std::size_t t = 0; t < T_; ++t)
        for (std::size_t y = 0; y < Y_; ++y) {
          const double v = P[(c * T_ + t) * Y_ + y];
          Pty[t * Y_ + y] += v;
          Pt[t] += v;
        }

    // divergence against p~(y|x_K) or the best feasible reference channel
    std::vector<double> refch(T_ * Y_, 0.0);
    if (memoryless_) {
      reference_channel(Pty, Pt, refch);
    } else {
      for (std::size_t t = 0; t < T_; ++t)
        for (std::size_t y = 0; y < Y_; ++y) refch[t * Y_ + y] = Pt[t] > 0.0 ? Pty[t * Y_ + y] / Pt[t] : 0.0;
    }
    double obj = 0.0;
    for (auto c : active_)
      for (std::size_t t = 0; t < T_; ++t)
        for (std::size_t y = 0; y < Y_; ++y) {
          const double v = P[(c * T_ + t) * Y_ + y];
          if (v <= 0.0) continue;
          const double den = pi_[c] * ref_[c * T_ + t] * refch[t * Y_ + y];
          if (den <= 0.0) {
            obj = kInf;
            break;
          }
          obj += v * std::log2(v / den);
        }
    ev.obj = obj + const_term_;
    ev.payoff = payoff(P);

    if (use_dist_) {
      const auto& d = *pr_.distortion;
      double dist = 0.0;
      for (std::size_t t = 0; t < T_; ++t)
        for (std::size_t y = 0; y < Y_; ++y) dist += Pty[t * Y_ + y] * d.d2[d.estimator[t] * Y_ + y];
      ev.dist = dist - d.D2;
    }
    if (use_fair_) {
      std::vector<double> mean(n_comp_ * Y_, 0.0), cnt(n_comp_, 0.0);
      for (std::size_t t = 0; t < T_; ++t) {
        if (Pt[t] <= 0.0) continue;
        cnt[comp_[t]] += 1.0;
        for (std::size_t y = 0; y < Y_; ++y) mean[comp_[t] * Y_ + y] += Pty[t * Y_ + y] / Pt[t];
      }
      for (std::size_t t = 0; t < T_; ++t)
        for (std::size_t y = 0; y < Y_; ++y)
          ev.eq.push_back(Pt[t] > 0.0 ? Pty[t * Y_ + y] / Pt[t] - mean[comp_[t] * Y_ + y] / cnt[comp_[t]] : 0.0);
    }
    if (use_hull_) hull_residual(Pty, Pt, ev.eq);
    return ev;
  }

  double max_violation(const Eval& ev, double R) const {
    double v = std::max(0.0, ev.payoff - R);
    if (use_dist_) v = std::max(v, ev.dist);
    for (double e : ev.eq) v = std::max(v, std::abs(e));
    return v;
  }

  // The payoff whose vanishing defines the exponent threshold.
  detail::PayoffTerm threshold_term() const {
    detail::PayoffTerm term;
    if (q_.simple) {
      term.u = {q_.user};
      term.cond_s = false;
      term.cond_w = true;
      term.scale = 1.0;
    } else {
      term.u = subset_;
      for (std::size_t k = 0; k < K_; ++k)
        if (!in_subset_[k]) term.z.push_back(k);
      term.scale = 1.0 / static_cast<double>(subset_.size());
    }
    return term;
  }

  detail::InputJoint product_joint() const {
    detail::InputJoint j;
    j.s_size = S_;
    j.w_size = W_;
    j.x_size = X_;
    j.K = K_;
    j.tuples = T_;
    j.pe.assign(C_ * T_, 0.0);
    j.pt.assign(T_, 0.0);
    for (auto c : active_)
      for (std::size_t t = 0; t < T_; ++t) {
        j.pe[c * T_ + t] = pi_[c] * ref_[c * T_ + t];
        j.pt[t] += j.pe[c * T_ + t];
      }
    return j;
  }

  std::vector<double> product_point(std::span<const double> channel) const {
    std::vector<double> P(table_size(), 0.0);
    for (auto c : active_)
      for (std::size_t t = 0; t < T_; ++t)
        for (std::size_t y = 0; y < Y_; ++y)
          P[(c * T_ + t) * Y_ + y] = pi_[c] * ref_[c * T_ + t] * channel[t * Y_ + y];
    return P;
  }

 private:
  static double safe_log(double v) { return v > 0.0 ? std::log(v) : -30.0; }

  // Iterative proportional fitting of px (over tuples) to the K marginals.
  void fit_marginals(std::size_t c, std::vector<double>& px) const {
    const std::size_t s = c / W_, w = c % W_;
    double z = std::accumulate(px.begin(), px.end(), 0.0);
    for (auto& v : px) v /= z;
    if (K_ == 1) {
      for (std::size_t x = 0; x < X_; ++x) px[x] = law_.px(s, w, x);
      return;
    }
    std::vector<double> m(X_);
    for (int it = 0; it < 2000; ++it) {
      double err = 0.0;
      for (std::size_t k = 0; k < K_; ++k) {
        std::fill(m.begin(), m.end(), 0.0);
        std::size_t stride = detail::pow_size(X_, K_ - 1 - k);
        for (std::size_t t = 0; t < T_; ++t) m[(t / stride) % X_] += px[t];
        for (std::size_t x = 0; x < X_; ++x) err = std::max(err, std::abs(m[x] - law_.px(s, w, x)));
        for (std::size_t t = 0; t < T_; ++t) {
          const std::size_t x = (t / stride) % X_;
          px[t] = m[x] > 0.0 ? px[t] * law_.px(s, w, x) / m[x] : 0.0;
        }
      }
      if (err < 1e-15) break;
    }
  }

  double payoff(std::span<const double> P) const {
    if (q_.simple) {
      // I(X_m; Y | W), host axis is trivial here
      const std::size_t stride = detail::pow_size(X_, K_ - 1 - q_.user);
      std::vector<double> pwxy(W_ * X_ * Y_, 0.0), pwx(W_ * X_, 0.0), pwy(W_ * Y_, 0.0), pw(W_, 0.0);
      for (auto c : active_) {
        const std::size_t w = c % W_;
        for (std::size_t t = 0; t < T_; ++t) {
          const std::size_t x = (t / stride) % X_;
          for (std::size_t y = 0; y < Y_; ++y) {
            const double v = P[(c * T_ + t) * Y_ + y];
            pwxy[(w * X_ + x) * Y_ + y] += v;
            pwx[w * X_ + x] += v;
            pwy[w * Y_ + y] += v;
            pw[w] += v;
          }
        }
      }
      double I = 0.0;
      for (std::size_t w = 0; w < W_; ++w)
        for (std::size_t x = 0; x < X_; ++x)
          for (std::size_t y = 0; y < Y_; ++y) {
            const double v = pwxy[(w * X_ + x) * Y_ + y];
            if (v > 0.0) I += v * std::log2(v * pw[w] / (pwx[w * X_ + x] * pwy[w * Y_ + y]));
          }
      return std::max(0.0, I);
    }
    // (1/|A|) [sum_a H(X_a|SW) + H(Y X_rest|SW) - H(X_K Y|SW)]
    double h_all = 0.0, h_rest = 0.0;
    std::vector<double> rest;
    for (auto c : active_) {
      rest.assign(detail::pow_size(X_, K_ - subset_.size()) * Y_, 0.0);
      for (std::size_t t = 0; t < T_; ++t) {
        std::size_t r = 0;
        const auto d = detail::tuple_digits(t, K_, X_);
        for (std::size_t k = 0; k < K_; ++k)
          if (!in_subset_[k]) r = r * X_ + d[k];
        for (std::size_t y = 0; y < Y_; ++y) {
          const double v = P[(c * T_ + t) * Y_ + y];
          h_all -= xlog2(v / pi_[c]) * pi_[c];
          rest[r * Y_ + y] += v;
        }
      }
      for (double v : rest) h_rest -= xlog2(v / pi_[c]) * pi_[c];
    }
    const double a = static_cast<double>(subset_.size());
    return std::max(0.0, (a * h_marg_ + h_rest - h_all) / a);
  }

  void build_reference_polytope() {
    detail::InputJoint j;
    j.K = K_;
    j.x_size = X_;
    j.tuples = T_;
    j.pt.assign(T_, 1.0);
    poly_ = detail::build_polytope(pr_, j);
    if (pr_.feasible == FeasibleClass::explicit_list) {
      for (const auto& v : poly_.blocks.front().vertices) {
        std::vector<double> dense(T_ * Y_, 0.0);
        for (const auto& [i, coef] : v) dense[i] = coef;
        vertices_.push_back(std::move(dense));
      }
      mu_.assign(vertices_.size(), 1.0 / static_cast<double>(vertices_.size()));
    }
  }

  void reference_channel(const std::vector<double>& Pty, const std::vector<double>& Pt,
                         std::vector<double>& out) const {
    if (pr_.feasible == FeasibleClass::boneh_shaw) {
      if (!pr_.fair) {
        for (std::size_t t = 0; t < T_; ++t)
          for (std::size_t y = 0; y < Y_; ++y)
            out[t * Y_ + y] = allowed_[t].size() == 1 ? mask_[t * Y_ + y] : (Pt[t] > 0 ? Pty[t * Y_ + y] / Pt[t] : 0.0);
        return;
      }
      // pooled over composition classes
      std::vector<double> num(n_comp_ * Y_, 0.0), den(n_comp_, 0.0);
      for (std::size_t t = 0; t < T_; ++t) {
        den[comp_[t]] += Pt[t];
        for (std::size_t y = 0; y < Y_; ++y) num[comp_[t] * Y_ + y] += Pty[t * Y_ + y];
      }
      for (std::size_t t = 0; t < T_; ++t)
        for (std::size_t y = 0; y < Y_; ++y)
          out[t * Y_ + y] = allowed_[t].size() == 1 ? mask_[t * Y_ + y]
                                                    : (den[comp_[t]] > 0 ? num[comp_[t] * Y_ + y] / den[comp_[t]] : 0.0);
      return;
    }
    // cross-entropy minimization over the feasible channel polytope
    detail::Polytope poly = poly_;
    if (poly.has_lin) {
      const auto& d = *pr_.distortion;
      for (std::size_t t = 0; t < T_; ++t)
        for (std::size_t y = 0; y < Y_; ++y) poly.lin[t * Y_ + y] = Pt[t] * d.d2[d.estimator[t] * Y_ + y];
    }
    detail::TableObjective f = [&](std::span<const double> q, std::vector<double>* g) {
      double v = 0.0;
      if (g) g->assign(q.size(), 0.0);
      for (std::size_t i = 0; i < q.size(); ++i) {
        if (Pty[i] <= 0.0) continue;
        const double qi = std::max(q[i], 1e-300);
        v -= Pty[i] * std::log2(qi);
        if (g) (*g)[i] = -Pty[i] / (qi * std::log(2.0));
      }
      return v;
    };
    const detail::Polytope::Weights* warm = nullptr;
    if (!ref_weights_.empty() && (!poly.has_lin || poly.lin_value(ref_weights_) <= poly.lin_bound)) warm = &ref_weights_;
    auto r = detail::frank_wolfe(poly, f, warm, 1e-12, 2000);
    ref_weights_ = r.weights;
    std::vector<double> table;
    poly.table(r.weights, table);
    std::copy(table.begin(), table.end(), out.begin());
  }

  // weighted distance of p~(y|x_K) to the hull of the listed channels
  void hull_residual(const std::vector<double>& Pty, const std::vector<double>& Pt, std::vector<double>& out) const {
    const std::size_t n = vertices_.size();
    std::vector<double> target(T_ * Y_, 0.0), wt(T_ * Y_, 0.0);
    for (std::size_t t = 0; t < T_; ++t)
      for (std::size_t y = 0; y < Y_; ++y) {
        target[t * Y_ + y] = Pt[t] > 0.0 ? Pty[t * Y_ + y] / Pt[t] : 0.0;
        wt[t * Y_ + y] = Pt[t];
      }
    auto& mu = mu_;
    std::vector<double> cur(T_ * Y_, 0.0);
    auto rebuild = [&] {
      std::fill(cur.begin(), cur.end(), 0.0);
      for (std::size_t v = 0; v < n; ++v)
        for (std::size_t i = 0; i < cur.size(); ++i) cur[i] += mu[v] * vertices_[v][i];
    };
    rebuild();
    std::vector<double> g(n);
    for (int it = 0; it < 2000; ++it) {
      for (std::size_t v = 0; v < n; ++v) {
        g[v] = 0.0;
        for (std::size_t i = 0; i < cur.size(); ++i) g[v] += 2.0 * wt[i] * (cur[i] - target[i]) * vertices_[v][i];
      }
      std::size_t fw = 0, away = n;
      for (std::size_t v = 1; v < n; ++v)
        if (g[v] < g[fw]) fw = v;
      for (std::size_t v = 0; v < n; ++v)
        if (mu[v] > 0.0 && (away == n || g[v] > g[away])) away = v;
      if (away == n || away == fw || g[away] - g[fw] < 1e-16) break;
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < cur.size(); ++i) {
        const double d = vertices_[fw][i] - vertices_[away][i];
        num += wt[i] * (target[i] - cur[i]) * d;
        den += wt[i] * d * d;
      }
      if (den <= 0.0) break;
      const double gamma = std::clamp(num / den, 0.0, mu[away]);
      if (gamma <= 0.0) break;
      mu[fw] += gamma;
      mu[away] -= gamma;
      for (std::size_t i = 0; i < cur.size(); ++i) cur[i] += gamma * (vertices_[fw][i] - vertices_[away][i]);
    }
    for (std::size_t i = 0; i < cur.size(); ++i) out.push_back(std::sqrt(wt[i]) * (target[i] - cur[i]));
  }

  const GameProblem& pr_;
  InputLaw law_;
  ExponentQuery q_;
  bool memoryless_;
  std::size_t S_, W_, X_, K_, T_, Y_, C_;
  std::vector<std::size_t> subset_;
  std::vector<char> in_subset_;
  std::vector<double> pi_, ref_;
  std::vector<std::size_t> active_;
  double const_term_ = 0.0;
  double h_marg_ = 0.0;
  std::vector<char> mask_;
  std::vector<std::vector<std::size_t>> allowed_;
  std::vector<std::size_t> comp_;
  std::size_t n_comp_ = 0;
  std::size_t n_ = 0;
  bool use_fair_ = false, use_hull_ = false, use_dist_ = false;
  detail::Polytope poly_;
  std::vector<std::vector<double>> vertices_;
  mutable std::vector<double> mu_;
  mutable detail::Polytope::Weights ref_weights_;
};

// Augmented Lagrangian in the logits, each subproblem by BFGS with
// central-difference gradients.
class Solver {
 public:
  Solver(const Program& prog, double R) : prog_(prog), R_(R), lam_eq_(prog.eq_size(), 0.0) {}

  struct Outcome {
    std::vector<double> theta;
    double obj = kInf;
    double violation = kInf;
  };

  Outcome run(std::vector<double> theta) {
    Outcome out;
    double prev_viol = kInf, prev_obj = kInf;
    for (int outer = 0; outer < 40; ++outer) {
      minimize(theta);
      const Eval ev = at(theta);
      const double viol = prog_.max_violation(ev, R_);
      out.theta = theta;
      out.obj = ev.obj;
      out.violation = viol;
      lam_pay_ = std::max(0.0, lam_pay_ + rho_ * (ev.payoff - R_));
      if (prog_.has_dist()) lam_dist_ = std::max(0.0, lam_dist_ + rho_ * ev.dist);
      for (std::size_t i = 0; i < ev.eq.size(); ++i) lam_eq_[i] += rho_ * ev.eq[i];
      if (viol < 1e-10 && std::abs(ev.obj - prev_obj) < 1e-10) break;
      if (viol > 0.25 * prev_viol) rho_ = std::min(rho_ * 10.0, 1e9);
      prev_viol = viol;
      prev_obj = ev.obj;
    }
    return out;
  }

  Eval at(std::span<const double> theta) const {
    prog_.joint(theta, P_);
    return prog_.evaluate(P_);
  }

 private:
  double lagrangian(std::span<const double> theta) const {
    const Eval ev = at(theta);
    if (!std::isfinite(ev.obj)) return 1e30;
    auto ineq = [&](double g, double lam) {
      const double v = std::max(0.0, lam + rho_ * g);
      return (v * v - lam * lam) / (2.0 * rho_);
    };
    double L = ev.obj + ineq(ev.payoff - R_, lam_pay_);
    if (prog_.has_dist()) L += ineq(ev.dist, lam_dist_);
    for (std::size_t i = 0; i < ev.eq.size(); ++i) L += lam_eq_[i] * ev.eq[i] + 0.5 * rho_ * ev.eq[i] * ev.eq[i];
    return L;
  }

  static double f_cb(const gsl_vector* x, void* self) {
    auto* s = static_cast<Solver*>(self);
    return s->lagrangian({x->data, x->size});
  }
  static void df_cb(const gsl_vector* x, void* self, gsl_vector* g) {
    double f;
    fdf_cb(x, self, &f, g);
  }
  static void fdf_cb(const gsl_vector* x, void* self, double* f, gsl_vector* g) {
    auto* s = static_cast<Solver*>(self);
    std::vector<double> th(x->data, x->data + x->size);
    *f = s->lagrangian(th);
    constexpr double h = 1e-6;
    for (std::size_t i = 0; i < th.size(); ++i) {
      const double keep = th[i];
      th[i] = keep + h;
      const double up = s->lagrangian(th);
      th[i] = keep - h;
      const double dn = s->lagrangian(th);
      th[i] = keep;
      gsl_vector_set(g, i, (up - dn) / (2 * h));
    }
  }

  void minimize(std::vector<double>& theta) {
    const std::size_t n = theta.size();
    if (n == 0) return;
    gsl_multimin_function_fdf fn;
    fn.n = n;
    fn.f = &f_cb;
    fn.df = &df_cb;
    fn.fdf = &fdf_cb;
    fn.params = this;
    gsl_vector* x = gsl_vector_alloc(n);
    for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x, i, theta[i]);
    gsl_multimin_fdfminimizer* m = gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n);
    gsl_multimin_fdfminimizer_set(m, &fn, x, 0.1, 0.1);
    for (int it = 0; it < 500; ++it) {
      if (gsl_multimin_fdfminimizer_iterate(m) != GSL_SUCCESS) break;
      if (gsl_multimin_test_gradient(m->gradient, 1e-9) == GSL_SUCCESS) break;
    }
    const gsl_vector* best = gsl_multimin_fdfminimizer_x(m);
    if (lagrangian({best->data, n}) <= lagrangian(theta))
      for (std::size_t i = 0; i < n; ++i) theta[i] = gsl_vector_get(best, i);
    gsl_multimin_fdfminimizer_free(m);
    gsl_vector_free(x);
  }

  const Program& prog_;
  double R_;
  double rho_ = 10.0;
  double lam_pay_ = 0.0;
  double lam_dist_ = 0.0;
  std::vector<double> lam_eq_;
  mutable std::vector<double> P_;
};

struct Solved {
  ExponentResult result;
  std::vector<double> theta;  // best logits, empty when none was feasible
};

void quiet_gsl() {
  static const bool once = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)once;
}

GameProblem checked(const GameProblem& problem, const InputLaw& law) {
  GameProblem pr = problem;
  pr.validate();
  law.validate();
  if (law.s_size != pr.s_size || law.x_size != pr.x_size)
    throw Error(Errc::config, "input law does not match the game alphabets");
  if (!pr.d1.empty() && std::isfinite(pr.D1) && law.embedding_distortion(pr.d1) > pr.D1 + 1e-9)
    throw Error(Errc::config, "input law violates the embedding distortion bound");
  return pr;
}

std::pair<double, std::vector<double>> threshold_channel(const Program& prog, const GameProblem& pr) {
  const auto joint = prog.product_joint();
  const auto poly = detail::build_polytope(pr, joint);
  detail::TermEvaluator ev(joint, prog.threshold_term(), pr.y_size);
  detail::TableObjective f = [&](std::span<const double> t, std::vector<double>* g) {
    return g ? ev.value_grad(t, *g) : ev.value(t);
  };
  auto r = detail::frank_wolfe(poly, f, nullptr, pr.inner_tol, pr.inner_max_iter);
  std::vector<double> table;
  poly.table(r.weights, table);
  return {ev.value(table), table};
}

Solved solve_program(const InputLaw& law, const GameProblem& pr, const ExponentQuery& q, bool memoryless,
                     const std::vector<std::vector<double>>& extra) {
  quiet_gsl();
  Program prog(law, pr, q, memoryless);
  Solved out;
  const auto [thr, channel] = threshold_channel(prog, pr);
  out.result.threshold = thr;
  if (q.R >= thr - 1e-12) {
    out.result.joint = prog.product_point(channel);
    out.result.value = std::isfinite(prog.const_term()) ? prog.const_term() : kInf;
    out.result.feasible = true;
    out.theta = prog.logits_for(channel);
    return out;
  }

  std::vector<std::vector<double>> starts = extra;
  const auto base = prog.logits_for(channel);
  starts.push_back(base);
  Rng rng = Rng::derive(q.seed, Stream::solver, static_cast<std::uint64_t>(std::llround(q.R * 1e9)), memoryless);
  for (std::size_t i = 1; i < q.restarts; ++i) {
    auto th = base;
    for (auto& v : th) {
      const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
      v += std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    starts.push_back(std::move(th));
  }

  double best = kInf, best_viol = kInf;
  std::vector<double> best_theta;
  for (auto& st : starts) {
    if (st.size() != prog.dims()) continue;
    Solver solver(prog, q.R);
    auto o = solver.run(st);
    ++out.result.starts;
    if (o.violation <= kFeasTol && o.obj < best) {
      best = o.obj;
      best_viol = o.violation;
      best_theta = o.theta;
    } else if (best_theta.empty() && o.violation < best_viol) {
      best_viol = o.violation;
    }
  }
  out.result.violation = best_viol;
  if (best_theta.empty()) {
    out.result.value = kInf;
    out.result.feasible = false;
    return out;
  }
  std::vector<double> P;
  prog.joint(best_theta, P);
  out.result.joint = P;
  out.result.value = std::max(best, 0.0);
  out.theta = std::move(best_theta);
  return out;
}

ExponentResult memoryless_from(const InputLaw& law, const GameProblem& pr, const ExponentQuery& q,
                               const std::vector<std::vector<double>>& extra, const ExponentResult& constrained) {
  auto m = solve_program(law, pr, q, true, extra).result;
  if (constrained.feasible && !constrained.joint.empty()) {
    Program prog(law, pr, q, true);
    const double alt = prog.evaluate(constrained.joint).obj;
    if (alt < m.value) {
      m.value = std::max(alt, 0.0);
      m.joint = constrained.joint;
      m.feasible = true;
      m.violation = constrained.violation;
    }
  }
  return m;
}

}  // namespace

double exponent_threshold(const InputLaw& law, const GameProblem& problem, const ExponentQuery& q) {
  const GameProblem pr = checked(problem, law);
  Program prog(law, pr, q, false);
  return threshold_channel(prog, pr).first;
}

double exponent_objective(const InputLaw& law, const GameProblem& problem, const ExponentQuery& q,
                          std::span<const double> joint, bool memoryless) {
  const GameProblem pr = checked(problem, law);
  Program prog(law, pr, q, memoryless);
  if (joint.size() != prog.table_size()) throw Error(Errc::invalid_argument, "joint table has the wrong size");
  return prog.evaluate(joint).obj;
}

ExponentResult pseudo_sphere_packing(const InputLaw& law, const GameProblem& problem, const ExponentQuery& q) {
  if (!(q.R >= 0.0)) throw Error(Errc::config, "R must be non-negative");
  const GameProblem pr = checked(problem, law);
  return solve_program(law, pr, q, false, {}).result;
}

ExponentResult memoryless_exponent(const InputLaw& law, const GameProblem& problem, const ExponentQuery& q) {
  if (!(q.R >= 0.0)) throw Error(Errc::config, "R must be non-negative");
  const GameProblem pr = checked(problem, law);
  const auto constrained = solve_program(law, pr, q, false, {}).result;
  return memoryless_from(law, pr, q, {}, constrained);
}

std::vector<ExponentResult> exponent_sweep(const InputLaw& law, const GameProblem& problem, ExponentQuery q,
                                           std::span<const double> Rs, bool memoryless) {
  const GameProblem pr = checked(problem, law);
  for (double r : Rs)
    if (!(r >= 0.0)) throw Error(Errc::config, "R must be non-negative");
  std::vector<std::size_t> order(Rs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return Rs[a] < Rs[b]; });

  std::vector<ExponentResult> out(Rs.size());
  std::vector<std::vector<double>> warm_c, warm_m;
  const ExponentResult* prev = nullptr;
  for (auto i : order) {
    q.R = Rs[i];
    auto c = solve_program(law, pr, q, false, warm_c);
    if (!c.theta.empty()) warm_c = {c.theta};
    ExponentResult r = c.result;
    if (memoryless) {
      auto m = solve_program(law, pr, q, true, warm_m);
      if (!m.theta.empty()) warm_m = {m.theta};
      r = m.result;
      if (c.result.feasible && !c.result.joint.empty()) {
        Program prog(law, pr, q, true);
        const double alt = prog.evaluate(c.result.joint).obj;
        if (alt < r.value) {
          r.value = std::max(alt, 0.0);
          r.joint = c.result.joint;
          r.feasible = true;
        }
      }
    }
    // a point feasible at a smaller R stays feasible here
    if (prev && prev->feasible && prev->value < r.value) {
      const double thr = r.threshold;
      r.value = prev->value;
      r.joint = prev->joint;
      r.feasible = true;
      r.violation = prev->violation;
      r.threshold = thr;
    }
    out[i] = std::move(r);
    prev = &out[i];
  }
  return out;
}

}  // namespace fpw
