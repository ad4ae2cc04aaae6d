#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <vector>

#include "orperc/errors.hpp"
#include "orperc/graph.hpp"
#include "orperc/parallel.hpp"
#include "orperc/random_field.hpp"
#include "orperc/search.hpp"
#include "orperc/sharp_transition.hpp"
#include "orperc/stats.hpp"
#include "orperc/vec.hpp"

namespace orperc {

template <int D>
struct PassageResult {
  std::optional<std::int64_t> time;  // empty: unreachable in window, or past the cap
  std::int64_t expanded = 0;         // settled vertices
  bool capped = false;               // search stopped because time exceeded the cap
};

template <int D>
struct DijkstraScratch {
  VisitTable<D> table;  // (dist << 1) | settled
  std::deque<std::pair<Vec<D>, std::int32_t>> deque;

  explicit DijkstraScratch(std::int64_t bbox_radius) : table(bbox_radius) {}
};

namespace detail {

// 0-1 Dijkstra over the implicit oriented graph restricted to the window.
// Edge weights are edge_time (open = 0, closed = 1); zero-weight relaxations
// go to the front of the deque, so vertices settle in nondecreasing time.
// Stops at the first settled vertex satisfying `is_target`, or when the next
// settle would exceed time_cap.
template <int D, class Target>
PassageResult<D> dijkstra01(const GraphSpec<D>& g, const FieldParams& params,
                            const Vec<D>& source, const Window<D>& window,
                            Target&& is_target, std::int64_t time_cap,
                            DijkstraScratch<D>& scratch) {
  PassageResult<D> out;
  scratch.table.reset();
  scratch.deque.clear();
  scratch.table.set(source, 0);  // dist 0, not settled
  scratch.deque.emplace_back(source, 0);

  while (!scratch.deque.empty()) {
    auto [x, dx] = scratch.deque.front();
    scratch.deque.pop_front();
    const std::int32_t cur = scratch.table.get(x);
    if (cur != (dx << 1)) continue;  // stale or already settled
    if (dx > time_cap) {
      out.capped = true;
      return out;
    }
    scratch.table.set(x, (dx << 1) | 1);
    ++out.expanded;
    if (is_target(x)) {
      out.time = dx;
      return out;
    }
    for (std::int32_t i = 0; i < g.degree(); ++i) {
      const Vec<D> y = x + g.dirs[static_cast<std::size_t>(i)];
      if (!window.contains(y)) continue;
      const std::int32_t cost = edge_time(params, EdgeKey<D>{x, i});
      const std::int32_t nd = dx + cost;
      const std::int32_t prev = scratch.table.get(y);
      if (prev != VisitTable<D>::kAbsent && ((prev & 1) || (prev >> 1) <= nd)) continue;
      scratch.table.set(y, nd << 1);
      if (cost == 0)
        scratch.deque.emplace_front(y, nd);
      else
        scratch.deque.emplace_back(y, nd);
    }
  }
  return out;
}

}  // namespace detail

inline constexpr std::int64_t kNoTimeCap = std::numeric_limits<std::int32_t>::max() - 2;

// Exact windowed point-to-point passage time t(x, y).
template <int D>
PassageResult<D> passage_time(const GraphSpec<D>& g, const FieldParams& params, const Vec<D>& x,
                              const Vec<D>& y, const Window<D>& window,
                              DijkstraScratch<D>* scratch = nullptr) {
  if (!window.contains(x) || !window.contains(y))
    throw spec_error("passage endpoints must lie in the window");
  if (scratch) return detail::dijkstra01(g, params, x, window,
                                         [&](const Vec<D>& v) { return v == y; }, kNoTimeCap,
                                         *scratch);
  DijkstraScratch<D> local(window.bbox_radius());
  return detail::dijkstra01(g, params, x, window, [&](const Vec<D>& v) { return v == y; },
                            kNoTimeCap, local);
}

// Exact windowed point-to-hyperplane time t(0, H_n(u)) with
// H_n(u) = {x : <x,u> >= n}.  With a finite time_cap the search refuses to
// settle past the cap and reports capped instead.
template <int D>
PassageResult<D> hyperplane_time(const GraphSpec<D>& g, const FieldParams& params,
                                 const Vec<D>& u, std::int64_t n, const Window<D>& window,
                                 std::int64_t time_cap = kNoTimeCap,
                                 DijkstraScratch<D>* scratch = nullptr) {
  if (u.is_zero()) throw spec_error("hyperplane direction is zero");
  auto target = [&](const Vec<D>& v) { return dot(v, u) >= n; };
  if (scratch)
    return detail::dijkstra01(g, params, Vec<D>{}, window, target, time_cap, *scratch);
  DijkstraScratch<D> local(window.bbox_radius());
  return detail::dijkstra01(g, params, Vec<D>{}, window, target, time_cap, local);
}

struct ScaleStat {
  std::int64_t n = 0;
  std::int64_t reps = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double unreachable_rate = 0.0;
};

namespace detail {

struct RatioAcc {
  MeanVar mv;
  std::int64_t unreachable = 0;
  void merge(const RatioAcc& o) {
    mv.merge(o.mv);
    unreachable += o.unreachable;
  }
};

template <int D, class Trial>
ScaleStat ratio_scale(std::int64_t n, std::int64_t reps, int threads, std::int64_t bbox,
                      Trial&& trial) {
  RatioAcc acc = parallel_replicas_with_state<RatioAcc>(
      reps, threads, [bbox] { return DijkstraScratch<D>(bbox); },
      [&](std::int64_t r, DijkstraScratch<D>& scratch, RatioAcc& a) {
        std::optional<std::int64_t> t = trial(r, scratch);
        if (t)
          a.mv.add(static_cast<double>(*t) / static_cast<double>(n));
        else
          ++a.unreachable;
      });
  ScaleStat st;
  st.n = n;
  st.reps = reps;
  st.mean = acc.mv.mean();
  Interval ci = acc.mv.ci();
  st.ci_low = ci.lo;
  st.ci_high = ci.hi;
  st.unreachable_rate = static_cast<double>(acc.unreachable) / static_cast<double>(reps);
  return st;
}

}  // namespace detail

inline constexpr double kMuZeroTol = 1e-3;

// Time-constant estimate along a lattice ray.  mu_hat is the mean ratio at
// the largest scale: by subadditivity E t(0,nx)/n decreases to mu_p, so the
// estimate is one-sided.  The full ladder exposes the trend.
template <int D>
struct MuEstimate {
  Vec<D> x;
  std::vector<ScaleStat> ladder;
  double mu_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double unreachable_rate = 0.0;
  bool valid = false;
  bool zero_declared = false;
};

template <int D>
MuEstimate<D> estimate_mu(const GraphSpec<D>& g, double p, const Vec<D>& x,
                          const std::vector<std::int64_t>& n_ladder, std::int64_t reps,
                          std::uint64_t seed, std::int64_t window_factor = 4,
                          int threads = 0) {
  if (x.is_zero()) throw spec_error("estimate_mu needs a nonzero ray");
  if (n_ladder.empty()) throw spec_error("estimate_mu needs a scale ladder");
  if (x.linf() > window_factor)
    throw spec_error("window factor too small: target would leave the window");

  MuEstimate<D> est;
  est.x = x;
  for (std::size_t si = 0; si < n_ladder.size(); ++si) {
    const std::int64_t n = n_ladder[si];
    if (n < 1) throw spec_error("scales must be >= 1");
    const Vec<D> target = n * x;
    const Window<D> window = Window<D>::box(window_factor * n);
    const std::uint64_t scale_seed = mix_seed(seed, static_cast<std::uint64_t>(si));
    est.ladder.push_back(detail::ratio_scale<D>(
        n, reps, threads, window.bbox_radius(),
        [&](std::int64_t r, DijkstraScratch<D>& scratch) {
          FieldParams rp(mix_seed(scale_seed, static_cast<std::uint64_t>(r)), p);
          return passage_time(g, rp, Vec<D>{}, target, window, &scratch).time;
        }));
  }
  const ScaleStat& last = est.ladder.back();
  est.mu_hat = last.mean;
  est.ci_low = last.ci_low;
  est.ci_high = last.ci_high;
  est.unreachable_rate = last.unreachable_rate;
  est.valid = last.unreachable_rate <= 0.01;
  est.zero_declared = last.ci_low <= 0.0 && est.mu_hat < kMuZeroTol;
  return est;
}

// Hyperplane time constant b_p(u), estimated as t(0, H_n(u)) / n at the
// largest scale of the ladder.
template <int D>
struct BEstimate {
  Vec<D> u;
  std::vector<ScaleStat> ladder;
  double b_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double unreachable_rate = 0.0;
  bool valid = false;
  bool zero_declared = false;
};

template <int D>
BEstimate<D> estimate_b(const GraphSpec<D>& g, double p, const Vec<D>& u,
                        const std::vector<std::int64_t>& n_ladder, std::int64_t reps,
                        std::uint64_t seed, std::int64_t window_factor = 4, int threads = 0) {
  if (u.is_zero()) throw spec_error("estimate_b needs a nonzero direction");
  if (n_ladder.empty()) throw spec_error("estimate_b needs a scale ladder");

  BEstimate<D> est;
  est.u = u;
  for (std::size_t si = 0; si < n_ladder.size(); ++si) {
    const std::int64_t n = n_ladder[si];
    if (n < 1) throw spec_error("scales must be >= 1");
    const Window<D> window = Window<D>::box(window_factor * n);
    if (auto sup = detail::window_sup_bound(window, u); sup && *sup < n)
      throw spec_error("window too small relative to n");
    const std::uint64_t scale_seed = mix_seed(seed, 100 + static_cast<std::uint64_t>(si));
    est.ladder.push_back(detail::ratio_scale<D>(
        n, reps, threads, window.bbox_radius(),
        [&](std::int64_t r, DijkstraScratch<D>& scratch) {
          FieldParams rp(mix_seed(scale_seed, static_cast<std::uint64_t>(r)), p);
          return hyperplane_time(g, rp, u, n, window, kNoTimeCap, &scratch).time;
        }));
  }
  const ScaleStat& last = est.ladder.back();
  est.b_hat = last.mean;
  est.ci_low = last.ci_low;
  est.ci_high = last.ci_high;
  est.unreachable_rate = last.unreachable_rate;
  est.valid = last.unreachable_rate <= 0.01;
  est.zero_declared = last.ci_low <= 0.0 && est.b_hat < kMuZeroTol;
  return est;
}

inline constexpr int kDecayExactInternalCap = 20;

// Constants of the subcritical time-decay bound
// P_p(t(0, H_n(u)) <= c n) <= e^{-alpha' n}:
//   K_{S,alpha} = sum over boundary edges (x,y) of E[e^{-alpha t_S(x,y)}]
//   with t_S(x,y) = t_(x,y) + (restricted time from 0 to x inside S),
//   M_u = max over boundary heads y of <y,u>, and c < log(1/K)/(alpha M_u).
template <int D>
struct DecayConstants {
  FiniteSet<D> S;
  double alpha = 0.0;
  double K = 1.0;        // certified value: exact, or upper confidence bound
  double K_point = 1.0;  // point estimate
  double M_u = 0.0;
  double c = 0.0;
  bool certified = false;
  bool exact = false;
};

namespace detail {

// Restricted 0-1 distances from the origin to every vertex of S, where
// internal edge ei is open iff open_of(ei).  kUnset marks unreachable.
inline constexpr std::int32_t kUnsetDist = std::numeric_limits<std::int32_t>::max();

template <int D, class OpenOf>
void restricted_distances(const SetGraph<D>& sg, OpenOf&& open_of, std::vector<std::int32_t>& d,
                          std::deque<std::pair<int, std::int32_t>>& dq) {
  d.assign(sg.verts.size(), kUnsetDist);
  dq.clear();
  const int origin = sg.index_of(Vec<D>{});
  d[static_cast<std::size_t>(origin)] = 0;
  dq.emplace_back(origin, 0);
  while (!dq.empty()) {
    auto [v, dv] = dq.front();
    dq.pop_front();
    if (d[static_cast<std::size_t>(v)] != dv) continue;
    for (int ei : sg.out_internal[static_cast<std::size_t>(v)]) {
      const auto& e = sg.internal[static_cast<std::size_t>(ei)];
      const std::int32_t cost = open_of(ei) ? 0 : 1;
      const std::int32_t nd = dv + cost;
      if (nd < d[static_cast<std::size_t>(e.head)]) {
        d[static_cast<std::size_t>(e.head)] = nd;
        if (cost == 0)
          dq.emplace_front(e.head, nd);
        else
          dq.emplace_back(e.head, nd);
      }
    }
  }
}

}  // namespace detail

template <int D>
DecayConstants<D> decay_constants(const GraphSpec<D>& g, const FiniteSet<D>& S, double p,
                                  const Vec<D>& u, const std::vector<double>& alpha_grid,
                                  std::int64_t reps = 50000, std::uint64_t seed = 1,
                                  int threads = 0) {
  if (alpha_grid.empty()) throw spec_error("decay_constants needs an alpha grid");
  const SetGraph<D> sg = make_set_graph(g, S);

  std::int64_t m_u = std::numeric_limits<std::int64_t>::min();
  for (const auto& y : sg.boundary_heads) m_u = std::max(m_u, dot(y, u));
  if (m_u <= 0) throw spec_error("M_u must be positive: u points away from the boundary");

  DecayConstants<D> out;
  out.S = S;
  out.M_u = static_cast<double>(m_u);

  const double edge_zero_w = p;  // P(t_edge = 0)
  const int m = static_cast<int>(sg.internal.size());

  std::vector<double> k_point(alpha_grid.size(), 0.0), k_cert(alpha_grid.size(), 0.0);
  if (m <= kDecayExactInternalCap) {
    out.exact = true;
    // Distribution of the restricted distance per boundary tail, then
    // K(alpha) in closed form per grid point.  The boundary edge factor
    // p + (1-p)e^{-alpha} multiplies through by independence.
    std::vector<std::vector<long double>> tail_dist(
        sg.verts.size(), std::vector<long double>(static_cast<std::size_t>(m) + 1, 0.0L));
    std::vector<long double> pow_p(static_cast<std::size_t>(m) + 1),
        pow_q(static_cast<std::size_t>(m) + 1);
    pow_p[0] = pow_q[0] = 1.0L;
    for (int i = 1; i <= m; ++i) {
      pow_p[static_cast<std::size_t>(i)] = pow_p[static_cast<std::size_t>(i - 1)] * p;
      pow_q[static_cast<std::size_t>(i)] = pow_q[static_cast<std::size_t>(i - 1)] * (1.0 - p);
    }
    std::vector<std::int32_t> d;
    std::deque<std::pair<int, std::int32_t>> dq;
    const std::uint64_t total = std::uint64_t{1} << m;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      const int open = std::popcount(mask);
      const long double w = pow_p[static_cast<std::size_t>(open)] *
                            pow_q[static_cast<std::size_t>(m - open)];
      detail::restricted_distances(
          sg, [&](int ei) { return (mask >> ei) & 1; }, d, dq);
      for (std::size_t v = 0; v < sg.verts.size(); ++v)
        if (d[v] != detail::kUnsetDist) tail_dist[v][static_cast<std::size_t>(d[v])] += w;
    }
    for (std::size_t ai = 0; ai < alpha_grid.size(); ++ai) {
      const double alpha = alpha_grid[ai];
      long double sum = 0.0L;
      for (std::size_t b = 0; b < sg.boundary.size(); ++b) {
        const auto& dist = tail_dist[static_cast<std::size_t>(sg.boundary_tail[b])];
        for (int dd = 0; dd <= m; ++dd)
          sum += dist[static_cast<std::size_t>(dd)] *
                 std::exp(static_cast<long double>(-alpha * dd));
      }
      const double k = (edge_zero_w + (1.0 - p) * std::exp(-alpha)) * static_cast<double>(sum);
      k_point[ai] = k_cert[ai] = k;
    }
  } else {
    struct Acc {
      std::vector<MeanVar> per_alpha;
      void merge(const Acc& o) {
        if (per_alpha.empty()) {
          per_alpha = o.per_alpha;
          return;
        }
        for (std::size_t i = 0; i < per_alpha.size(); ++i) per_alpha[i].merge(o.per_alpha[i]);
      }
    };
    const std::size_t na = alpha_grid.size();
    Acc acc = parallel_replicas<Acc>(reps, threads, [&](std::int64_t r, Acc& a) {
      if (a.per_alpha.empty()) a.per_alpha.resize(na);
      FieldParams rp(mix_seed(seed, static_cast<std::uint64_t>(r)), p);
      std::vector<std::int32_t> d;
      std::deque<std::pair<int, std::int32_t>> dq;
      detail::restricted_distances(
          sg,
          [&](int ei) {
            const auto& e = sg.internal[static_cast<std::size_t>(ei)];
            return edge_open(rp, EdgeKey<D>{sg.verts[static_cast<std::size_t>(e.tail)], e.dir});
          },
          d, dq);
      for (std::size_t ai = 0; ai < na; ++ai) {
        double y = 0.0;
        for (std::size_t b = 0; b < sg.boundary.size(); ++b) {
          const std::int32_t dd = d[static_cast<std::size_t>(sg.boundary_tail[b])];
          if (dd != detail::kUnsetDist) y += std::exp(-alpha_grid[ai] * dd);
        }
        a.per_alpha[ai].add(y);
      }
    });
    for (std::size_t ai = 0; ai < na; ++ai) {
      const double factor = edge_zero_w + (1.0 - p) * std::exp(-alpha_grid[ai]);
      k_point[ai] = factor * acc.per_alpha[ai].mean();
      k_cert[ai] = factor * std::max(0.0, acc.per_alpha[ai].ci().hi);
    }
  }

  std::size_t best = 0;
  for (std::size_t ai = 1; ai < alpha_grid.size(); ++ai)
    if (k_cert[ai] < k_cert[best]) best = ai;
  out.alpha = alpha_grid[best];
  out.K = k_cert[best];
  out.K_point = k_point[best];
  if (out.K < 1.0) {
    out.certified = true;
    out.c = std::log(1.0 / out.K) / (out.alpha * out.M_u);
  }
  return out;
}

struct TimeDecayRow {
  std::int64_t n = 0;
  double bound = 0.0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool flag = false;
};

// Monte Carlo check of P(t(0,H_n(u)) <= c_used n) <= e^{-alpha' n} with
// alpha' = alpha (c - c_used), the rate the certificate implies for the
// slower speed c_used.
template <int D>
std::vector<TimeDecayRow> verify_time_decay(const GraphSpec<D>& g, const DecayConstants<D>& dc,
                                            const Vec<D>& u, double p,
                                            const std::vector<std::int64_t>& n_list,
                                            std::int64_t reps, std::uint64_t seed,
                                            double c_used, std::int64_t window_factor = 4,
                                            int threads = 0) {
  if (!dc.certified) throw refusal_error("no-certificate: decay constants not certified");
  if (!(c_used > 0.0 && c_used < dc.c))
    throw spec_error("c_used must lie strictly between 0 and the certified c");
  const double alpha_prime = dc.alpha * (dc.c - c_used);

  std::vector<TimeDecayRow> rows;
  for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
    const std::int64_t n = n_list[ni];
    const Window<D> window = Window<D>::box(window_factor * n);
    const std::int64_t cap = static_cast<std::int64_t>(std::floor(c_used * static_cast<double>(n)));
    struct Acc {
      std::int64_t hits = 0;
      void merge(const Acc& o) { hits += o.hits; }
    };
    const std::uint64_t scale_seed = mix_seed(seed, 500 + static_cast<std::uint64_t>(ni));
    Acc acc = parallel_replicas_with_state<Acc>(
        reps, threads, [&window] { return DijkstraScratch<D>(window.bbox_radius()); },
        [&](std::int64_t r, DijkstraScratch<D>& scratch, Acc& a) {
          FieldParams rp(mix_seed(scale_seed, static_cast<std::uint64_t>(r)), p);
          PassageResult<D> res = hyperplane_time(g, rp, u, n, window, cap, &scratch);
          if (res.time && *res.time <= cap) ++a.hits;
        });
    TimeDecayRow row;
    row.n = n;
    row.bound = std::exp(-alpha_prime * static_cast<double>(n));
    row.estimate = static_cast<double>(acc.hits) / static_cast<double>(reps);
    Interval ci = wilson(acc.hits, reps);
    row.ci_low = ci.lo;
    row.ci_high = ci.hi;
    row.flag = row.ci_low > row.bound;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace orperc
