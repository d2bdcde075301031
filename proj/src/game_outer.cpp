#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fpwork/error.hpp"
#include "fpwork/rng.hpp"
#include "game_internal.hpp"
#include "parallel.hpp"

namespace fpw {

namespace {

using detail::InnerState;

// theta = [p_w (L)] ++ [p_x (S*L*X)]
std::vector<double> theta_of(const InputLaw& law) {
  std::vector<double> th(law.p_w);
  th.insert(th.end(), law.p_x.begin(), law.p_x.end());
  return th;
}

InputLaw law_of(const GameProblem& pr, std::span<const double> th) {
  InputLaw law;
  law.s_size = pr.s_size;
  law.w_size = pr.L;
  law.x_size = pr.x_size;
  law.p_s = pr.p_s;
  law.p_w.assign(th.begin(), th.begin() + static_cast<std::ptrdiff_t>(pr.L));
  law.p_x.assign(th.begin() + static_cast<std::ptrdiff_t>(pr.L), th.end());
  return law;
}

// Pulls the law back inside the embedding-distortion budget by moving each
// p_{X|SW} toward the cheapest symbol.
void retract(const GameProblem& pr, InputLaw& law) {
  if (pr.d1.empty() || !std::isfinite(pr.D1)) return;
  const double d = law.embedding_distortion(pr.d1);
  if (d <= pr.D1) return;
  InputLaw floor_law = law;
  for (std::size_t s = 0; s < pr.s_size; ++s) {
    std::size_t best = 0;
    for (std::size_t x = 1; x < pr.x_size; ++x)
      if (pr.d1[s * pr.x_size + x] < pr.d1[s * pr.x_size + best]) best = x;
    for (std::size_t w = 0; w < pr.L; ++w)
      for (std::size_t x = 0; x < pr.x_size; ++x) floor_law.p_x[(s * pr.L + w) * pr.x_size + x] = (x == best);
  }
  const double dmin = floor_law.embedding_distortion(pr.d1);
  if (dmin > pr.D1 + 1e-12) throw Error(Errc::infeasible, "no input law meets the embedding distortion bound");
  const double tau = std::clamp((pr.D1 - dmin) / (d - dmin), 0.0, 1.0) * (1.0 - 1e-12);
  for (std::size_t i = 0; i < law.p_x.size(); ++i)
    law.p_x[i] = floor_law.p_x[i] + tau * (law.p_x[i] - floor_law.p_x[i]);
}

InputLaw project(const GameProblem& pr, std::vector<double> th) {
  detail::project_simplex(std::span<double>(th).first(pr.L));
  for (std::size_t c = 0; c < pr.s_size * pr.L; ++c)
    detail::project_simplex(std::span<double>(th).subspan(pr.L + c * pr.x_size, pr.x_size));
  InputLaw law = law_of(pr, th);
  retract(pr, law);
  return law;
}

double norm_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Gradient of the payoff with the channel frozen at the inner minimizer.
std::vector<double> frozen_gradient(const GameProblem& pr, const InputLaw& law, std::span<const double> table) {
  const auto th = theta_of(law);
  const double h = pr.fd_step;
  std::vector<double> g(th.size());
  const double f0 = detail::frozen_payoff(law, pr, table);
  for (std::size_t i = 0; i < th.size(); ++i) {
    auto at = [&](double v) {
      auto t = th;
      t[i] = v;
      return detail::frozen_payoff(law_of(pr, t), pr, table);
    };
    if (th[i] - h >= 0.0 && th[i] + h <= 1.0) {
      g[i] = (at(th[i] + h) - at(th[i] - h)) / (2 * h);
    } else if (th[i] + h <= 1.0) {
      g[i] = (at(th[i] + h) - f0) / h;
    } else {
      g[i] = (f0 - at(th[i] - h)) / h;
    }
  }
  return g;
}

struct Ascent {
  double value = -std::numeric_limits<double>::infinity();
  InputLaw law;
  InnerResult inner;
  double stationarity = 0.0;
  std::size_t inner_iterations = 0;
};

Ascent ascend(const GameProblem& pr, const InputLaw& start) {
  Ascent a;
  InnerState state;
  a.law = project(pr, theta_of(start));
  a.inner = detail::inner_solve(a.law, pr, &state, pr.inner_tol);
  a.inner_iterations += a.inner.iterations;
  a.value = a.inner.value;
  double alpha = 1.0;
  int stalls = 0;
  for (std::size_t it = 0; it < pr.outer_max_iter; ++it) {
    const auto th = theta_of(a.law);
    const auto g = frozen_gradient(pr, a.law, a.inner.channel.table());
    bool accepted = false;
    while (alpha > 1e-12) {
      auto cand = th;
      for (std::size_t i = 0; i < cand.size(); ++i) cand[i] += alpha * g[i];
      InputLaw law = project(pr, cand);
      const auto nth = theta_of(law);
      const double step = norm_diff(nth, th);
      if (step < 1e-13) break;
      double lin = 0.0;
      for (std::size_t i = 0; i < th.size(); ++i) lin += g[i] * (nth[i] - th[i]);
      InnerState trial_state = state;
      InnerResult r = detail::inner_solve(law, pr, &trial_state, pr.inner_tol);
      a.inner_iterations += r.iterations;
      if (r.value >= a.value + 1e-4 * lin && r.value >= a.value) {
        stalls = r.value - a.value < 1e-12 ? stalls + 1 : 0;
        a.value = r.value;
        a.law = std::move(law);
        a.inner = std::move(r);
        state = std::move(trial_state);
        alpha = std::min(alpha * 2.0, 1e3);
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted || stalls >= 3) break;
  }
  {
    const auto th = theta_of(a.law);
    const auto g = frozen_gradient(pr, a.law, a.inner.channel.table());
    auto cand = th;
    for (std::size_t i = 0; i < cand.size(); ++i) cand[i] += g[i];
    a.stationarity = norm_diff(theta_of(project(pr, cand)), th);
  }
  return a;
}

// All compositions of m into n parts, lexicographic.
std::vector<std::vector<double>> simplex_grid(std::size_t n, std::size_t m) {
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> c(n, 0);
  auto rec = [&](auto&& self, std::size_t i, std::size_t left) -> void {
    if (i + 1 == n) {
      c[i] = left;
      std::vector<double> p(n);
      for (std::size_t k = 0; k < n; ++k) p[k] = static_cast<double>(c[k]) / static_cast<double>(m);
      out.push_back(std::move(p));
      return;
    }
    for (std::size_t v = left + 1; v-- > 0;) {
      c[i] = v;
      self(self, i + 1, left - v);
    }
  };
  rec(rec, 0, m);
  return out;
}

std::vector<double> dirichlet(std::size_t n, Rng& rng) {
  std::vector<double> p(n);
  double sum = 0.0;
  for (auto& v : p) {
    v = -std::log(1.0 - rng.uniform());
    sum += v;
  }
  for (auto& v : p) v /= sum;
  return p;
}

std::vector<InputLaw> grid_starts(const GameProblem& pr, Rng& rng) {
  const auto m = static_cast<std::size_t>(std::llround(1.0 / pr.grid_step));
  const auto gw = simplex_grid(pr.L, m);
  const auto gx = simplex_grid(pr.x_size, m);
  const std::size_t cells = pr.s_size * pr.L;
  double total = static_cast<double>(gw.size()) * std::pow(static_cast<double>(gx.size()), static_cast<double>(cells));
  std::vector<InputLaw> out;
  auto make = [&](const std::vector<double>& pw, const std::vector<std::size_t>& pick) {
    std::vector<double> th = pw;
    for (std::size_t c = 0; c < cells; ++c) th.insert(th.end(), gx[pick[c]].begin(), gx[pick[c]].end());
    return law_of(pr, th);
  };
  if (total <= static_cast<double>(pr.grid_cap)) {
    std::vector<std::size_t> pick(cells, 0);
    for (const auto& pw : gw) {
      std::fill(pick.begin(), pick.end(), 0);
      while (true) {
        out.push_back(make(pw, pick));
        std::size_t c = cells;
        while (c-- > 0) {
          if (++pick[c] < gx.size()) break;
          pick[c] = 0;
        }
        if (c == static_cast<std::size_t>(-1)) break;
      }
    }
  } else {
    std::vector<std::size_t> pick(cells);
    for (std::size_t i = 0; i < pr.grid_cap; ++i) {
      const auto& pw = gw[rng.below(gw.size())];
      for (auto& p : pick) p = rng.below(gx.size());
      out.push_back(make(pw, pick));
    }
  }
  // laws that ignore W, so every smaller time-sharing alphabet is represented
  if (pr.L > 1) {
    const std::vector<double> pw(pr.L, 1.0 / static_cast<double>(pr.L));
    const double per_s = std::pow(static_cast<double>(gx.size()), static_cast<double>(pr.s_size));
    std::vector<std::size_t> ps(pr.s_size, 0), pick(cells);
    const bool full = per_s <= static_cast<double>(pr.grid_cap);
    const std::size_t count = full ? static_cast<std::size_t>(per_s) : pr.grid_cap;
    for (std::size_t i = 0; i < count; ++i) {
      if (full) {
        std::size_t r = i;
        for (std::size_t s = pr.s_size; s-- > 0;) {
          ps[s] = r % gx.size();
          r /= gx.size();
        }
      } else {
        for (auto& p : ps) p = rng.below(gx.size());
      }
      for (std::size_t s = 0; s < pr.s_size; ++s)
        for (std::size_t w = 0; w < pr.L; ++w) pick[s * pr.L + w] = ps[s];
      out.push_back(make(pw, pick));
    }
  }
  return out;
}

}  // namespace

InputLaw extend_timeshare(const InputLaw& law, std::size_t new_w) {
  if (new_w < law.w_size) throw Error(Errc::invalid_argument, "cannot shrink the time-sharing alphabet");
  InputLaw out = law;
  if (new_w == law.w_size) return out;
  const std::size_t last = law.w_size - 1, extra = new_w - law.w_size + 1;
  out.w_size = new_w;
  out.p_w.assign(new_w, 0.0);
  for (std::size_t w = 0; w < last; ++w) out.p_w[w] = law.p_w[w];
  for (std::size_t w = last; w < new_w; ++w) out.p_w[w] = law.p_w[last] / static_cast<double>(extra);
  out.p_x.assign(law.s_size * new_w * law.x_size, 0.0);
  for (std::size_t s = 0; s < law.s_size; ++s)
    for (std::size_t w = 0; w < new_w; ++w)
      for (std::size_t x = 0; x < law.x_size; ++x)
        out.p_x[(s * new_w + w) * law.x_size + x] = law.px(s, std::min(w, last), x);
  return out;
}

GameSolution solve_capacity(const GameProblem& problem) { return solve_capacity(problem, {}); }

GameSolution solve_capacity(const GameProblem& problem, std::span<const InputLaw> extra_starts) {
  GameProblem pr = problem;
  pr.validate();
  Rng rng = Rng::derive(pr.seed, Stream::solver, pr.K, pr.L);

  // coarse pass over the grid, then the best distinct points seed the ascent
  auto grid = grid_starts(pr, rng);
  std::vector<double> gval(grid.size(), -std::numeric_limits<double>::infinity());
  detail::parallel_for(grid.size(), pr.workers, [&](std::size_t i) {
    grid[i] = project(pr, theta_of(grid[i]));
    gval[i] = detail::inner_solve(grid[i], pr, nullptr, std::max(pr.inner_tol, 1e-6)).value;
  });
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gval[a] > gval[b]; });

  std::vector<InputLaw> starts(extra_starts.begin(), extra_starts.end());
  for (auto& s : starts) {
    if (s.w_size < pr.L) s = extend_timeshare(s, pr.L);
    if (s.w_size != pr.L || s.s_size != pr.s_size || s.x_size != pr.x_size)
      throw Error(Errc::config, "seed input law does not match the game");
    s.p_s = pr.p_s;
  }
  const std::size_t from_grid = (pr.restarts + 1) / 2;
  std::vector<std::vector<double>> chosen;
  for (auto i : order) {
    if (chosen.size() >= from_grid) break;
    const auto th = theta_of(grid[i]);
    bool distinct = true;
    for (const auto& c : chosen) distinct = distinct && norm_diff(c, th) > pr.grid_step * 0.5;
    if (!distinct) continue;
    chosen.push_back(th);
    starts.push_back(grid[i]);
  }
  while (starts.size() < pr.restarts + extra_starts.size()) {
    std::vector<double> th = dirichlet(pr.L, rng);
    for (std::size_t c = 0; c < pr.s_size * pr.L; ++c) {
      const auto p = dirichlet(pr.x_size, rng);
      th.insert(th.end(), p.begin(), p.end());
    }
    starts.push_back(law_of(pr, th));
  }

  std::vector<Ascent> runs(starts.size());
  detail::parallel_for(starts.size(), pr.workers, [&](std::size_t i) { runs[i] = ascend(pr, starts[i]); });

  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (runs[i].value > runs[best].value + 1e-12) {
      best = i;
    } else if (std::abs(runs[i].value - runs[best].value) <= 1e-12 &&
               theta_of(runs[i].law) < theta_of(runs[best].law)) {
      best = i;
    }
  }

  GameSolution sol;
  sol.restarts = runs.size();
  for (const auto& r : runs) {
    sol.restart_values.push_back(r.value);
    sol.inner_iterations += r.inner_iterations;
  }
  for (std::size_t i = 0; i < runs.size() && !sol.nonconcave; ++i)
    for (std::size_t j = i + 1; j < runs.size(); ++j)
      if (std::abs(runs[i].value - runs[j].value) > 1e-5 &&
          norm_diff(theta_of(runs[i].law), theta_of(runs[j].law)) > 1e-3 && runs[i].stationarity < 1e-4 &&
          runs[j].stationarity < 1e-4) {
        sol.nonconcave = true;
        break;
      }

  // final tight re-solve at the selected law
  const InnerResult fin = detail::inner_solve(runs[best].law, pr, nullptr, pr.inner_tol);
  sol.value = fin.value;
  sol.input_law = runs[best].law;
  sol.worst_channel = fin.channel;
  sol.gap = fin.gap;
  sol.stationarity = runs[best].stationarity;
  sol.inner_iterations += fin.iterations;
  sol.reevaluation_error = std::abs(evaluate_payoff(sol.input_law, sol.worst_channel, pr) - sol.value);
  return sol;
}

GameSolution solve_capacity_simple(GameProblem problem) {
  problem.objective = Objective::simple;
  return solve_capacity(problem);
}

std::vector<GameSolution> solve_capacity_sweep(GameProblem problem, std::span<const std::size_t> Ls) {
  std::vector<GameSolution> out;
  for (auto L : Ls) {
    problem.L = L;
    std::vector<InputLaw> seeds;
    if (!out.empty() && out.back().input_law.w_size <= L) seeds.push_back(out.back().input_law);
    out.push_back(solve_capacity(problem, seeds));
  }
  return out;
}

}  // namespace fpw
