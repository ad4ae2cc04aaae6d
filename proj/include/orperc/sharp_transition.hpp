#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "orperc/cluster.hpp"
#include "orperc/errors.hpp"
#include "orperc/graph.hpp"
#include "orperc/parallel.hpp"
#include "orperc/random_field.hpp"
#include "orperc/stats.hpp"
#include "orperc/vec.hpp"

namespace orperc {

// Finite vertex set containing the origin, with the sup of Psi over the set
// recomputed at construction (never trusted from input).
template <int D>
struct FiniteSet {
  std::vector<Vec<D>> vertices;  // sorted lexicographically, holds 0
  Frac psi_sup{0, 1};
};

template <int D>
FiniteSet<D> make_finite_set(std::vector<Vec<D>> vertices, const SubadditiveWeight<D>& psi) {
  std::sort(vertices.begin(), vertices.end());
  vertices.erase(std::unique(vertices.begin(), vertices.end()), vertices.end());
  if (!std::binary_search(vertices.begin(), vertices.end(), Vec<D>{}))
    throw spec_error("finite set must contain the origin");
  FiniteSet<D> s;
  s.vertices = std::move(vertices);
  s.psi_sup = psi.eval(s.vertices.front());
  for (const auto& v : s.vertices) {
    Frac f = psi.eval(v);
    if (s.psi_sup < f) s.psi_sup = f;
  }
  return s;
}

// Candidate family for certificate search: the Psi-sublevel set at level k,
// truncated transversally to the box of the given radius.
template <int D>
FiniteSet<D> sublevel_set(const SubadditiveWeight<D>& psi, std::int64_t k,
                          std::int64_t transverse_cap) {
  if (k < 0) throw spec_error("sublevel level must be >= 0");
  if (transverse_cap < 0) throw spec_error("transverse cap must be >= 0");
  std::vector<Vec<D>> verts;
  const Frac level = Frac::of(k);
  Vec<D> x;
  for (int i = 0; i < D; ++i) x.c[i] = -transverse_cap;
  for (;;) {
    if (psi.eval(x) <= level) verts.push_back(x);
    int axis = D - 1;
    while (axis >= 0 && x.c[axis] == transverse_cap) x.c[axis--] = -transverse_cap;
    if (axis < 0) break;
    ++x.c[axis];
  }
  return make_finite_set(std::move(verts), psi);
}

// Indexed view of a finite set: internal edges (both endpoints in S) and the
// out-boundary (tail in S, head outside), both in lexicographic tail order
// then dir order.
template <int D>
struct SetGraph {
  std::vector<Vec<D>> verts;
  struct InternalEdge {
    int tail;
    int head;
    std::int32_t dir;
  };
  std::vector<InternalEdge> internal;
  std::vector<EdgeKey<D>> boundary;
  std::vector<int> boundary_tail;          // index into verts per boundary edge
  std::vector<Vec<D>> boundary_heads;      // head vertex per boundary edge
  std::vector<std::vector<int>> out_internal;  // internal edge ids per tail

  int index_of(const Vec<D>& v) const {
    auto it = std::lower_bound(verts.begin(), verts.end(), v);
    if (it == verts.end() || !(*it == v)) return -1;
    return static_cast<int>(it - verts.begin());
  }
};

template <int D>
SetGraph<D> make_set_graph(const GraphSpec<D>& g, const FiniteSet<D>& S) {
  SetGraph<D> sg;
  sg.verts = S.vertices;
  sg.out_internal.resize(sg.verts.size());
  for (int vi = 0; vi < static_cast<int>(sg.verts.size()); ++vi) {
    for (std::int32_t di = 0; di < g.degree(); ++di) {
      const Vec<D> y = sg.verts[static_cast<std::size_t>(vi)] +
                       g.dirs[static_cast<std::size_t>(di)];
      const int hi = sg.index_of(y);
      if (hi >= 0) {
        sg.out_internal[static_cast<std::size_t>(vi)].push_back(
            static_cast<int>(sg.internal.size()));
        sg.internal.push_back({vi, hi, di});
      } else {
        sg.boundary.push_back(EdgeKey<D>{sg.verts[static_cast<std::size_t>(vi)], di});
        sg.boundary_tail.push_back(vi);
        sg.boundary_heads.push_back(y);
      }
    }
  }
  return sg;
}

// Out-boundary of S as explicit edges, deterministic order.
template <int D>
std::vector<EdgeKey<D>> boundary(const GraphSpec<D>& g, const FiniteSet<D>& S) {
  return make_set_graph(g, S).boundary;
}

inline constexpr int kExactEdgeCap = 24;

// How a connectivity or phi evaluation should run.
struct ConnMode {
  bool exact = true;
  std::int64_t reps = 100000;
  std::uint64_t seed = 1;
  int threads = 0;

  static ConnMode exact_mode() { return ConnMode{}; }
  static ConnMode mc(std::int64_t reps, std::uint64_t seed, int threads = 0) {
    return ConnMode{false, reps, seed, threads};
  }
};

namespace detail {

// BFS from the origin inside S along open internal edges of the mask.
inline void reach_mask(const std::vector<std::vector<int>>& out_internal,
                       const std::vector<int>& heads, int origin, std::uint64_t mask,
                       std::vector<char>& reached, std::vector<int>& queue) {
  reached.assign(out_internal.size(), 0);
  queue.clear();
  reached[static_cast<std::size_t>(origin)] = 1;
  queue.push_back(origin);
  for (std::size_t h = 0; h < queue.size(); ++h) {
    const int v = queue[h];
    for (int ei : out_internal[static_cast<std::size_t>(v)]) {
      if (!(mask & (std::uint64_t{1} << ei))) continue;
      const int to = heads[static_cast<std::size_t>(ei)];
      if (!reached[static_cast<std::size_t>(to)]) {
        reached[static_cast<std::size_t>(to)] = 1;
        queue.push_back(to);
      }
    }
  }
}

// Enumerates all internal-edge configurations, calling
// visit(weight, reached flags) per configuration.
template <int D, class Visit>
void enumerate_internal(const SetGraph<D>& sg, double p, Visit&& visit) {
  const int m = static_cast<int>(sg.internal.size());
  std::vector<int> heads(sg.internal.size());
  for (std::size_t i = 0; i < sg.internal.size(); ++i) heads[i] = sg.internal[i].head;
  const int origin = sg.index_of(Vec<D>{});

  std::vector<long double> pow_p(static_cast<std::size_t>(m) + 1),
      pow_q(static_cast<std::size_t>(m) + 1);
  pow_p[0] = pow_q[0] = 1.0L;
  for (int i = 1; i <= m; ++i) {
    pow_p[static_cast<std::size_t>(i)] = pow_p[static_cast<std::size_t>(i - 1)] * p;
    pow_q[static_cast<std::size_t>(i)] = pow_q[static_cast<std::size_t>(i - 1)] * (1.0L - p);
  }

  std::vector<char> reached;
  std::vector<int> queue;
  const std::uint64_t total = std::uint64_t{1} << m;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    const int open = std::popcount(mask);
    reach_mask(sg.out_internal, heads, origin, mask, reached, queue);
    visit(pow_p[static_cast<std::size_t>(open)] * pow_q[static_cast<std::size_t>(m - open)],
          reached);
  }
}

// BFS over the realized field restricted to S; fills reached flags.
template <int D>
void reach_field(const SetGraph<D>& sg, const FieldParams& params, std::vector<char>& reached,
                 std::vector<int>& queue) {
  reached.assign(sg.verts.size(), 0);
  queue.clear();
  const int origin = sg.index_of(Vec<D>{});
  reached[static_cast<std::size_t>(origin)] = 1;
  queue.push_back(origin);
  for (std::size_t h = 0; h < queue.size(); ++h) {
    const int v = queue[h];
    for (int ei : sg.out_internal[static_cast<std::size_t>(v)]) {
      const auto& e = sg.internal[static_cast<std::size_t>(ei)];
      if (!edge_open(params, EdgeKey<D>{sg.verts[static_cast<std::size_t>(e.tail)], e.dir}))
        continue;
      if (!reached[static_cast<std::size_t>(e.head)]) {
        reached[static_cast<std::size_t>(e.head)] = 1;
        queue.push_back(e.head);
      }
    }
  }
}

}  // namespace detail

// P_p(0 ->S-> x): an open path from 0 to x whose intermediate vertices stay
// in S.  x may be a vertex of S or the head of a boundary edge.
template <int D>
double restricted_connectivity(const GraphSpec<D>& g, const FiniteSet<D>& S, double p,
                               const Vec<D>& x, const ConnMode& mode) {
  const SetGraph<D> sg = make_set_graph(g, S);
  const int xi = sg.index_of(x);
  std::vector<std::size_t> in_edges;  // boundary edges whose head is x, when x is outside S
  if (xi < 0) {
    for (std::size_t b = 0; b < sg.boundary_heads.size(); ++b)
      if (sg.boundary_heads[b] == x) in_edges.push_back(b);
    if (in_edges.empty())
      throw spec_error("target is neither in S nor a boundary head");
  }

  if (mode.exact) {
    if (static_cast<int>(sg.internal.size()) > kExactEdgeCap)
      throw refusal_error("cap-exceeded: internal edge count above exact-mode cap");
    long double total = 0.0L;
    detail::enumerate_internal(sg, p, [&](long double w, const std::vector<char>& reached) {
      if (xi >= 0) {
        if (reached[static_cast<std::size_t>(xi)]) total += w;
      } else {
        // Head outside S: some boundary edge into x must be open with a
        // reached tail; boundary edges are independent of the internals.
        long double miss = 1.0L;
        for (std::size_t b : in_edges)
          if (reached[static_cast<std::size_t>(sg.boundary_tail[b])])
            miss *= (1.0L - static_cast<long double>(p));
        total += w * (1.0L - miss);
      }
    });
    return static_cast<double>(total);
  }

  struct Acc {
    std::int64_t hits = 0;
    void merge(const Acc& o) { hits += o.hits; }
  };
  Acc acc = parallel_replicas<Acc>(
      mode.reps, mode.threads, [&](std::int64_t r, Acc& a) {
        FieldParams rp(mix_seed(mode.seed, static_cast<std::uint64_t>(r)), p);
        std::vector<char> reached;
        std::vector<int> queue;
        detail::reach_field(sg, rp, reached, queue);
        bool hit = false;
        if (xi >= 0) {
          hit = reached[static_cast<std::size_t>(xi)];
        } else {
          for (std::size_t b : in_edges) {
            if (!reached[static_cast<std::size_t>(sg.boundary_tail[b])]) continue;
            const auto& e = sg.boundary[b];
            if (edge_open(rp, e)) {
              hit = true;
              break;
            }
          }
        }
        if (hit) ++a.hits;
      });
  return static_cast<double>(acc.hits) / static_cast<double>(mode.reps);
}

struct PhiResult {
  double value = 0.0;
  bool exact = true;
  std::int64_t reps = 0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::int64_t boundary_size = 0;
};

// phi_p(S) = p * sum over boundary edges (x,y) of P_p(0 ->S-> x).
template <int D>
PhiResult phi(const GraphSpec<D>& g, const FiniteSet<D>& S, double p, const ConnMode& mode) {
  const SetGraph<D> sg = make_set_graph(g, S);
  PhiResult out;
  out.boundary_size = static_cast<std::int64_t>(sg.boundary.size());

  if (mode.exact) {
    if (static_cast<int>(sg.internal.size()) > kExactEdgeCap)
      throw refusal_error("cap-exceeded: internal edge count above exact-mode cap");
    long double sum = 0.0L;
    detail::enumerate_internal(sg, p, [&](long double w, const std::vector<char>& reached) {
      std::int64_t hit_edges = 0;
      for (int tail : sg.boundary_tail)
        if (reached[static_cast<std::size_t>(tail)]) ++hit_edges;
      sum += w * static_cast<long double>(hit_edges);
    });
    out.exact = true;
    out.value = p * static_cast<double>(sum);
    out.ci_low = out.ci_high = out.value;
    return out;
  }

  MeanVar mv = parallel_replicas<MeanVar>(
      mode.reps, mode.threads, [&](std::int64_t r, MeanVar& a) {
        FieldParams rp(mix_seed(mode.seed, static_cast<std::uint64_t>(r)), p);
        std::vector<char> reached;
        std::vector<int> queue;
        detail::reach_field(sg, rp, reached, queue);
        std::int64_t hit_edges = 0;
        for (int tail : sg.boundary_tail)
          if (reached[static_cast<std::size_t>(tail)]) ++hit_edges;
        a.add(static_cast<double>(hit_edges));
      });
  out.exact = false;
  out.reps = mode.reps;
  out.value = p * mv.mean();
  Interval ci = mv.ci();
  out.ci_low = p * std::max(0.0, ci.lo);
  out.ci_high = p * ci.hi;
  return out;
}

// Certified witness of exponential decay: a set S with phi_p(S) < 1 and the
// scale L >= sup over S u Dir of Psi, yielding P(r_Psi(0) > 2kL) <= phi^k.
template <int D>
struct DecayCertificate {
  FiniteSet<D> S;
  SubadditiveWeight<D> psi;
  double p = 0.0;
  PhiResult phi;
  std::int64_t L = 1;

  double predicted(std::int64_t k) const { return std::pow(phi.value, static_cast<double>(k)); }
};

template <int D>
std::int64_t decay_scale(const GraphSpec<D>& g, const FiniteSet<D>& S,
                         const SubadditiveWeight<D>& psi) {
  Frac m = S.psi_sup;
  for (const auto& v : g.dirs) {
    Frac f = psi.eval(v);
    if (m < f) m = f;
  }
  return std::max<std::int64_t>(1, m.ceil());
}

// Scans the sublevel-set family S_k, k <= k_max, and returns the first
// candidate whose phi is certifiably below 1 (exact value, or Monte Carlo
// upper confidence bound).  Failure is a value, not an error.
template <int D>
std::optional<DecayCertificate<D>> find_good_set(const GraphSpec<D>& g,
                                                 const SubadditiveWeight<D>& psi, double p,
                                                 std::int64_t k_max,
                                                 std::int64_t transverse_cap,
                                                 std::int64_t reps = 20000,
                                                 std::uint64_t seed = 1, int threads = 0) {
  if (!psi.is_linear()) throw spec_error("find_good_set needs a linear weight");
  if (k_max < 0) throw spec_error("k_max must be >= 0");
  for (std::int64_t k = 0; k <= k_max; ++k) {
    FiniteSet<D> S = sublevel_set(psi, k, transverse_cap);
    const SetGraph<D> sg = make_set_graph(g, S);
    ConnMode mode = static_cast<int>(sg.internal.size()) <= kExactEdgeCap
                        ? ConnMode::exact_mode()
                        : ConnMode::mc(reps, mix_seed(seed, static_cast<std::uint64_t>(k)),
                                       threads);
    PhiResult ph = phi(g, S, p, mode);
    if (ph.ci_high < 1.0) {
      DecayCertificate<D> cert;
      cert.S = std::move(S);
      cert.psi = psi;
      cert.p = p;
      cert.phi = ph;
      cert.L = decay_scale(g, cert.S, psi);
      return cert;
    }
  }
  return std::nullopt;
}

// Single trial of the escape event {r_Psi(0) > m}: BFS over open edges inside
// {Psi <= m} truncated to a box; any open edge leaving the window counts as
// an escape (box exits included, making the estimate an upper bound).
template <int D>
bool psi_escape_trial(const GraphSpec<D>& g, const FieldParams& params,
                      const SubadditiveWeight<D>& psi, std::int64_t m, std::int64_t trunc,
                      TrialScratch<D>& scratch) {
  const Window<D> window = Window<D>::psiball(psi, Frac::of(m), trunc);
  scratch.table.reset();
  scratch.queue.clear();
  scratch.queue.push_back(Vec<D>{});
  scratch.table.insert(Vec<D>{});
  for (std::size_t h = 0; h < scratch.queue.size(); ++h) {
    const Vec<D> x = scratch.queue[h];
    for (std::int32_t i = 0; i < g.degree(); ++i) {
      if (!edge_open(params, EdgeKey<D>{x, i})) continue;
      const Vec<D> y = x + g.dirs[static_cast<std::size_t>(i)];
      if (!window.contains(y)) return true;
      if (scratch.table.insert(y)) scratch.queue.push_back(y);
    }
  }
  return false;
}

struct DecayRow {
  std::int64_t k = 0;
  std::int64_t L = 1;
  double predicted = 0.0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool flag = false;  // estimate provably above the certified bound
};

// Monte Carlo check of P(r_Psi(0) > 2kL) <= phi^k over a k range.  The
// escape estimate is an upper bound by construction, so a flag is only
// raised when its lower confidence bound clears the prediction.
template <int D>
std::vector<DecayRow> verify_decay(const GraphSpec<D>& g, const DecayCertificate<D>& cert,
                                   std::int64_t k_lo, std::int64_t k_hi, std::int64_t reps,
                                   std::uint64_t seed, int threads = 0) {
  if (k_lo < 1 || k_hi < k_lo) throw spec_error("verify_decay needs 1 <= k_lo <= k_hi");
  std::vector<DecayRow> rows;
  for (std::int64_t k = k_lo; k <= k_hi; ++k) {
    const std::int64_t m = 2 * k * cert.L;
    const std::int64_t trunc = 4 * std::max<std::int64_t>(m, 1);
    struct Acc {
      std::int64_t esc = 0;
      void merge(const Acc& o) { esc += o.esc; }
    };
    Acc acc = parallel_replicas_with_state<Acc>(
        reps, threads, [trunc] { return TrialScratch<D>(trunc); },
        [&](std::int64_t r, TrialScratch<D>& scratch, Acc& a) {
          FieldParams rp(
              mix_seed(mix_seed(seed, static_cast<std::uint64_t>(k)),
                       static_cast<std::uint64_t>(r)),
              cert.p);
          if (psi_escape_trial(g, rp, cert.psi, m, trunc, scratch)) ++a.esc;
        });
    DecayRow row;
    row.k = k;
    row.L = cert.L;
    row.predicted = cert.predicted(k);
    row.estimate = static_cast<double>(acc.esc) / static_cast<double>(reps);
    Interval ci = wilson(acc.esc, reps);
    row.ci_low = ci.lo;
    row.ci_high = ci.hi;
    row.flag = row.ci_low > row.predicted;
    rows.push_back(row);
  }
  return rows;
}

// Lower bound of the sharp-transition theorem:
// P_p(r_Psi(0) = inf) >= (p - ptilde) / (p (1 - ptilde)) for p above ptilde.
inline double theta_lower_bound(double p, double ptilde) {
  if (!(ptilde > 0.0 && ptilde <= p && p < 1.0))
    throw spec_error("theta_lower_bound needs 0 < ptilde <= p < 1");
  return (p - ptilde) / (p * (1.0 - ptilde));
}

}  // namespace orperc
