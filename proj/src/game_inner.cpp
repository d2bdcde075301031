#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <boost/math/tools/minima.hpp>

#include "fpwork/error.hpp"
#include "game_internal.hpp"

namespace fpw::detail {

std::vector<std::size_t> composition_ids(std::size_t K, std::size_t x_size, std::size_t* count) {
  const std::size_t T = pow_size(x_size, K);
  std::map<std::vector<std::size_t>, std::size_t> ids;
  std::vector<std::size_t> out(T);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<std::size_t> hist(x_size, 0);
    for (auto d : tuple_digits(t, K, x_size)) ++hist[d];
    auto [it, fresh] = ids.emplace(std::move(hist), ids.size());
    out[t] = it->second;
  }
  if (count) *count = ids.size();
  return out;
}

namespace {

bool agreeing(std::size_t t, std::size_t K, std::size_t x_size, std::size_t* symbol) {
  const auto d = tuple_digits(t, K, x_size);
  for (auto v : d)
    if (v != d[0]) return false;
  if (symbol) *symbol = d[0];
  return true;
}

// One simplex block per tuple or per composition class; pinned tuples are
// left out and written into `fixed` by the caller.
void add_free_blocks(Polytope& poly, const GameProblem& pr, bool pin_agreeing) {
  const std::size_t T = pr.tuples(), Y = pr.y_size;
  std::vector<std::vector<std::size_t>> groups;
  if (pr.fair) {
    std::size_t n = 0;
    const auto ids = composition_ids(pr.K, pr.x_size, &n);
    groups.resize(n);
    for (std::size_t t = 0; t < T; ++t) groups[ids[t]].push_back(t);
  } else {
    for (std::size_t t = 0; t < T; ++t) groups.push_back({t});
  }
  for (const auto& g : groups) {
    if (pin_agreeing && agreeing(g.front(), pr.K, pr.x_size, nullptr)) continue;
    Polytope::Block b;
    for (std::size_t y = 0; y < Y; ++y) {
      Polytope::Vertex v;
      for (auto t : g) v.emplace_back(static_cast<std::uint32_t>(t * Y + y), 1.0);
      b.vertices.push_back(std::move(v));
    }
    poly.blocks.push_back(std::move(b));
  }
}

}  // namespace

std::vector<char> support_mask(const GameProblem& pr) {
  const std::size_t T = pr.tuples(), Y = pr.y_size;
  std::vector<char> mask(T * Y, 1);
  if (pr.feasible == FeasibleClass::boneh_shaw) {
    for (std::size_t t = 0; t < T; ++t) {
      std::size_t x;
      if (agreeing(t, pr.K, pr.x_size, &x))
        for (std::size_t y = 0; y < Y; ++y) mask[t * Y + y] = (y == x);
    }
  } else if (pr.feasible == FeasibleClass::explicit_list) {
    std::fill(mask.begin(), mask.end(), 0);
    for (const auto& c : pr.channels) {
      const ChannelSpec ch = pr.fair ? permutation_average(c) : c;
      for (std::size_t i = 0; i < mask.size(); ++i)
        if (ch.table()[i] > 0.0) mask[i] = 1;
    }
  }
  return mask;
}

Polytope build_polytope(const GameProblem& pr, const InputJoint& joint) {
  Polytope poly;
  const std::size_t T = pr.tuples(), Y = pr.y_size;
  poly.table_size = T * Y;
  poly.fixed.assign(poly.table_size, 0.0);
  switch (pr.feasible) {
    case FeasibleClass::boneh_shaw:
      for (std::size_t t = 0; t < T; ++t) {
        std::size_t x;
        if (agreeing(t, pr.K, pr.x_size, &x)) poly.fixed[t * Y + x] = 1.0;
      }
      add_free_blocks(poly, pr, true);
      break;
    case FeasibleClass::distortion: {
      add_free_blocks(poly, pr, false);
      const auto& d = *pr.distortion;
      poly.has_lin = true;
      poly.lin.assign(poly.table_size, 0.0);
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t y = 0; y < Y; ++y) poly.lin[t * Y + y] = joint.pt[t] * d.d2[d.estimator[t] * Y + y];
      poly.lin_bound = d.D2;
      break;
    }
    case FeasibleClass::explicit_list: {
      Polytope::Block b;
      std::vector<std::vector<double>> seen;
      for (const auto& c : pr.channels) {
        const ChannelSpec ch = pr.fair ? permutation_average(c) : c;
        if (std::find(seen.begin(), seen.end(), ch.table()) != seen.end()) continue;
        seen.push_back(ch.table());
        Polytope::Vertex v;
        for (std::size_t i = 0; i < poly.table_size; ++i)
          if (ch.table()[i] != 0.0) v.emplace_back(static_cast<std::uint32_t>(i), ch.table()[i]);
        b.vertices.push_back(std::move(v));
      }
      poly.blocks.push_back(std::move(b));
      break;
    }
  }
  return poly;
}

void Polytope::table(const Weights& w, std::vector<double>& out) const {
  out = fixed;
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (std::size_t v = 0; v < blocks[b].vertices.size(); ++v) {
      const double a = w[b][v];
      if (a == 0.0) continue;
      for (const auto& [i, c] : blocks[b].vertices[v]) out[i] += a * c;
    }
}

void Polytope::block_grad(std::span<const double> grad, Weights& out) const {
  out.resize(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    out[b].assign(blocks[b].vertices.size(), 0.0);
    for (std::size_t v = 0; v < blocks[b].vertices.size(); ++v)
      for (const auto& [i, c] : blocks[b].vertices[v]) out[b][v] += c * grad[i];
  }
}

Polytope::Weights Polytope::uniform() const {
  Weights w(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b)
    w[b].assign(blocks[b].vertices.size(), 1.0 / static_cast<double>(blocks[b].vertices.size()));
  return w;
}

double Polytope::lin_value(const Weights& w) const {
  if (!has_lin) return 0.0;
  std::vector<double> t;
  table(w, t);
  double v = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) v += lin[i] * t[i];
  return v;
}

namespace {

// Vertex choice minimizing g + mu c per block; mu = inf orders by c then g.
Polytope::Weights choose(const Polytope& poly, const Polytope::Weights& g, const Polytope::Weights& c, double mu) {
  Polytope::Weights w(poly.blocks.size());
  for (std::size_t b = 0; b < poly.blocks.size(); ++b) {
    const std::size_t n = poly.blocks[b].vertices.size();
    w[b].assign(n, 0.0);
    std::size_t best = 0;
    for (std::size_t v = 1; v < n; ++v) {
      bool better;
      if (std::isinf(mu)) {
        better = c[b][v] < c[b][best] - 1e-15 || (std::abs(c[b][v] - c[b][best]) <= 1e-15 && g[b][v] < g[b][best]);
      } else {
        better = g[b][v] + mu * c[b][v] < g[b][best] + mu * c[b][best];
      }
      if (better) best = v;
    }
    w[b][best] = 1.0;
  }
  return w;
}

Polytope::Weights mix(const Polytope::Weights& a, const Polytope::Weights& b, double theta) {
  Polytope::Weights out = a;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) out[i][j] = theta * a[i][j] + (1.0 - theta) * b[i][j];
  return out;
}

}  // namespace

Polytope::Weights Polytope::lmo(const Weights& g) const {
  const Weights zero_c = [&] {
    Weights z(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) z[b].assign(blocks[b].vertices.size(), 0.0);
    return z;
  }();
  if (!has_lin) return choose(*this, g, zero_c, 0.0);
  Weights c;
  block_grad(lin, c);
  Weights lo = choose(*this, g, c, 0.0);
  if (lin_value(lo) <= lin_bound) return lo;
  Weights floor_pt = choose(*this, g, c, std::numeric_limits<double>::infinity());
  if (lin_value(floor_pt) > lin_bound + 1e-12) throw Error(Errc::infeasible, "no channel meets the distortion bound");
  double mu_lo = 0.0, mu_hi = 1.0;
  Weights hi = choose(*this, g, c, mu_hi);
  while (lin_value(hi) > lin_bound && mu_hi < 1e15) {
    mu_lo = mu_hi;
    mu_hi *= 2.0;
    hi = choose(*this, g, c, mu_hi);
  }
  if (lin_value(hi) > lin_bound) hi = floor_pt;
  for (int it = 0; it < 200 && mu_hi - mu_lo > 1e-14 * std::max(1.0, mu_hi); ++it) {
    const double mid = 0.5 * (mu_lo + mu_hi);
    Weights m = choose(*this, g, c, mid);
    if (lin_value(m) > lin_bound) {
      mu_lo = mid;
    } else {
      mu_hi = mid;
      hi = std::move(m);
    }
  }
  lo = choose(*this, g, c, mu_lo);
  const double l_lo = lin_value(lo), l_hi = lin_value(hi);
  if (l_lo <= lin_bound || l_lo - l_hi <= 0.0) return hi;
  const double theta = (lin_bound - l_hi) / (l_lo - l_hi);
  return mix(lo, hi, std::clamp(theta, 0.0, 1.0));
}

Polytope::Weights Polytope::start() const {
  Weights u = uniform();
  if (!has_lin) return u;
  Weights c;
  block_grad(lin, c);
  const Weights floor_pt = choose(*this, c, c, std::numeric_limits<double>::infinity());
  const double l_min = lin_value(floor_pt);
  if (l_min > lin_bound + 1e-12) throw Error(Errc::infeasible, "no channel meets the distortion bound");
  const double l_u = lin_value(u);
  if (l_u <= lin_bound) return u;
  const double theta = (lin_bound - l_min) / (l_u - l_min) * (1.0 - 1e-9);
  return mix(u, floor_pt, std::clamp(theta, 0.0, 1.0));
}

namespace {

double dot(const Polytope::Weights& a, const Polytope::Weights& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) s += a[i][j] * b[i][j];
  return s;
}

template <class F>
std::pair<double, double> line_min(F&& phi, double hi, double f0) {
  if (hi <= 0.0) return {0.0, f0};
  const auto r = boost::math::tools::brent_find_minima(phi, 0.0, hi, std::numeric_limits<double>::digits / 2);
  double best_x = 0.0, best_f = f0;
  if (r.second < best_f) best_x = r.first, best_f = r.second;
  const double fe = phi(hi);
  if (fe <= best_f) best_x = hi, best_f = fe;
  return {best_x, best_f};
}

}  // namespace

FwResult frank_wolfe(const Polytope& poly, const TableObjective& f, const Polytope::Weights* warm, double tol,
                     std::size_t max_iter) {
  FwResult res;
  res.weights = warm ? *warm : poly.start();
  std::vector<double> table, grad;
  Polytope::Weights G;

  auto eval_grad = [&](const Polytope::Weights& w) {
    poly.table(w, table);
    const double v = f(table, &grad);
    poly.block_grad(grad, G);
    return v;
  };
  auto eval = [&](const Polytope::Weights& w) {
    std::vector<double> t;
    poly.table(w, t);
    return f(t, nullptr);
  };

  auto& w = res.weights;
  double fv = eval_grad(w);
  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    const Polytope::Weights s = poly.lmo(G);
    res.gap = dot(G, w) - dot(G, s);
    if (res.gap < tol) break;

    if (poly.has_lin) {
      auto phi = [&](double gamma) { return eval(mix(s, w, gamma)); };
      const auto [gamma, fnew] = line_min(phi, 1.0, fv);
      if (gamma <= 0.0) break;
      w = mix(s, w, gamma);
      fv = eval_grad(w);
      continue;
    }

    // block-coordinate pairwise steps
    bool moved = false;
    for (std::size_t b = 0; b < poly.blocks.size(); ++b) {
      const auto& gb = G[b];
      std::size_t fw = 0, away = gb.size();
      for (std::size_t v = 1; v < gb.size(); ++v)
        if (gb[v] < gb[fw]) fw = v;
      for (std::size_t v = 0; v < gb.size(); ++v)
        if (w[b][v] > 0.0 && (away == gb.size() || gb[v] > gb[away])) away = v;
      if (away == gb.size() || away == fw || gb[away] - gb[fw] <= 1e-15) continue;
      const double cap = w[b][away];
      auto trial = w;
      auto phi = [&](double gamma) {
        trial[b][fw] = w[b][fw] + gamma;
        trial[b][away] = cap - gamma;
        return eval(trial);
      };
      const auto [gamma, fnew] = line_min(phi, cap, fv);
      if (gamma <= 0.0 || fnew > fv) continue;
      w[b][fw] += gamma;
      w[b][away] = gamma >= cap ? 0.0 : cap - gamma;
      fv = eval_grad(w);
      moved = true;
    }
    if (!moved) break;
  }
  res.value = fv;
  return res;
}

InnerResult inner_solve(const InputLaw& law, const GameProblem& problem, InnerState* state, double tol) {
  const auto joint = InputJoint::from(law, problem.K);
  const Polytope poly = build_polytope(problem, joint);
  const auto terms = payoff_terms(problem);
  InnerResult out;
  out.value = std::numeric_limits<double>::infinity();
  std::vector<double> best_table;
  std::vector<Polytope::Weights> kept(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    TermEvaluator ev(joint, terms[i], problem.y_size);
    TableObjective f = [&](std::span<const double> t, std::vector<double>* g) {
      return g ? ev.value_grad(t, *g) : ev.value(t);
    };
    const Polytope::Weights* warm = nullptr;
    if (state && state->weights.size() == terms.size()) {
      const auto& cand = state->weights[i];
      bool ok = cand.size() == poly.blocks.size();
      for (std::size_t b = 0; ok && b < cand.size(); ++b) ok = cand[b].size() == poly.blocks[b].vertices.size();
      if (ok && poly.has_lin && poly.lin_value(cand) > poly.lin_bound) ok = false;
      if (ok) warm = &cand;
    }
    FwResult r = frank_wolfe(poly, f, warm, tol, problem.inner_max_iter);
    out.iterations += r.iterations;
    kept[i] = r.weights;
    if (r.value < out.value - 1e-15) {
      out.value = r.value;
      out.gap = r.gap;
      out.subset = terms[i].u;
      poly.table(r.weights, best_table);
    }
  }
  if (state) state->weights = std::move(kept);
  out.channel = make_channel(problem, std::move(best_table));
  out.value = frozen_payoff(law, problem, out.channel.table());
  if (problem.objective != Objective::detect_all) out.subset.clear();
  return out;
}

}  // namespace fpw::detail

namespace fpw {

InnerResult inner_min_channel(const InputLaw& law, const GameProblem& problem) {
  GameProblem p = problem;
  p.validate();
  law.validate();
  if (law.s_size != p.s_size || law.x_size != p.x_size)
    throw Error(Errc::config, "input law does not match the game alphabets");
  return detail::inner_solve(law, p, nullptr, p.inner_tol);
}

}  // namespace fpw
