#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "orperc/errors.hpp"
#include "orperc/graph.hpp"
#include "orperc/parallel.hpp"
#include "orperc/random_field.hpp"
#include "orperc/search.hpp"
#include "orperc/stats.hpp"
#include "orperc/vec.hpp"

namespace orperc {

enum class Termination { exhausted, window_hit, budget_hit };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::exhausted:
      return "exhausted";
    case Termination::window_hit:
      return "window_hit";
    default:
      return "budget_hit";
  }
}

// One exploration of the oriented open cluster C_+(x0) inside a window.
// `exhausted` certifies that the window-restricted cluster is the full
// cluster: no open edge was seen leaving the window.
template <int D>
struct ClusterReport {
  std::int64_t visited_count = 0;
  std::vector<std::pair<Vec<D>, std::int64_t>> extent;  // probe u -> max <y-x0, u>
  Termination termination = Termination::exhausted;
  std::vector<Vec<D>> visited;  // BFS order, starts with x0
};

// Breadth-first enumeration of C_+(x0) over open edges with both endpoints
// in the window.  FIFO over vertices, out-edges in dirs order, first arrival
// wins; everything is deterministic given (seed, p).
template <int D>
ClusterReport<D> explore(const GraphSpec<D>& g, const FieldParams& params, const Vec<D>& x0,
                         const Window<D>& window, std::int64_t budget,
                         const std::vector<Vec<D>>& probes) {
  if (budget < 1) throw spec_error("explore needs budget >= 1");
  if (!window.contains(x0)) throw spec_error("start vertex outside window");

  ClusterReport<D> report;
  report.extent.reserve(probes.size());
  for (const auto& u : probes) report.extent.emplace_back(u, 0);

  VisitTable<D> table(window.bbox_radius());
  report.visited.push_back(x0);
  table.insert(x0);
  report.visited_count = 1;

  bool open_exit = false;
  bool budget_stop = false;
  std::size_t head = 0;
  while (head < report.visited.size()) {
    const Vec<D> x = report.visited[head++];
    for (std::int32_t i = 0; i < g.degree(); ++i) {
      if (!edge_open(params, EdgeKey<D>{x, i})) continue;
      const Vec<D> y = x + g.dirs[static_cast<std::size_t>(i)];
      if (!window.contains(y)) {
        open_exit = true;
        continue;
      }
      if (!table.insert(y)) continue;
      report.visited.push_back(y);
      ++report.visited_count;
      for (auto& [u, ext] : report.extent) ext = std::max(ext, dot(y - x0, u));
      if (report.visited_count >= budget) {
        budget_stop = true;
        break;
      }
    }
    if (budget_stop) break;
  }
  // budget_stop may leave unexpanded frontier; that is the reported cause.
  report.termination = budget_stop ? Termination::budget_hit
                       : open_exit ? Termination::window_hit
                                   : Termination::exhausted;
  return report;
}

struct TrialOutcome {
  bool success = false;
  bool truncated = false;  // window or budget cut the exploration short
};

template <int D>
struct TrialScratch {
  VisitTable<D> table;
  std::vector<Vec<D>> queue;

  explicit TrialScratch(std::int64_t bbox_radius) : table(bbox_radius) {}
};

// Single survival trial: does the cluster of 0 reach <y,u> >= n inside the
// window?  Early exit on success; a truncated exploration that never reached
// the threshold counts as a failure and is flagged.
template <int D>
TrialOutcome survival_trial(const GraphSpec<D>& g, const FieldParams& params, const Vec<D>& u,
                            std::int64_t n, const Window<D>& window, std::int64_t budget,
                            TrialScratch<D>& scratch) {
  scratch.table.reset();
  scratch.queue.clear();
  scratch.queue.push_back(Vec<D>{});
  scratch.table.insert(Vec<D>{});

  TrialOutcome out;
  std::int64_t count = 1;
  std::size_t head = 0;
  while (head < scratch.queue.size()) {
    const Vec<D> x = scratch.queue[head++];
    for (std::int32_t i = 0; i < g.degree(); ++i) {
      if (!edge_open(params, EdgeKey<D>{x, i})) continue;
      const Vec<D> y = x + g.dirs[static_cast<std::size_t>(i)];
      if (!window.contains(y)) {
        out.truncated = true;
        continue;
      }
      if (!scratch.table.insert(y)) continue;
      if (dot(y, u) >= n) {
        out.success = true;
        return out;
      }
      scratch.queue.push_back(y);
      if (++count >= budget) {
        out.truncated = true;
        return out;
      }
    }
  }
  return out;
}

// Default survival window: a box of radius c_w * n around the origin.
template <int D>
Window<D> survival_window(std::int64_t n, std::int64_t c_w = 4) {
  return Window<D>::box(c_w * n);
}

// Finite-n survival estimate with Wilson 95% interval.
struct SweepPoint {
  double p = 0.0;
  std::int64_t n = 0;
  std::int64_t reps = 0;
  std::int64_t successes = 0;
  double theta_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double boundary_flag_rate = 0.0;  // truncated explorations that failed
};

namespace detail {

// Upper bound for sup <u,x> over the window, from its bounding box; used to
// reject windows that cannot possibly reach the threshold.
template <int D>
std::optional<std::int64_t> window_sup_bound(const Window<D>& window, const Vec<D>& u) {
  const std::int64_t r = window.bbox_radius();
  if (r < 0) return std::nullopt;
  std::int64_t s = 0;
  for (int i = 0; i < D; ++i) s += std::abs(u.c[i]);
  return r * s;
}

}  // namespace detail

template <int D>
SweepPoint directional_survival(const GraphSpec<D>& g, Vec<D> u, double p, std::int64_t n,
                                const Window<D>& window, std::int64_t reps, std::uint64_t seed,
                                int threads = 0,
                                std::int64_t budget = std::int64_t{1} << 62) {
  if (n < 1) throw spec_error("survival threshold n must be >= 1");
  u = gcd_reduce(u);
  if (u.is_zero()) throw spec_error("probe direction is zero");
  if (auto sup = detail::window_sup_bound(window, u); sup && *sup < n)
    throw spec_error("window too small relative to n");

  struct Acc {
    std::int64_t succ = 0;
    std::int64_t trunc_fail = 0;
    void merge(const Acc& o) {
      succ += o.succ;
      trunc_fail += o.trunc_fail;
    }
  };
  const std::int64_t bbox = window.bbox_radius();
  Acc acc = parallel_replicas_with_state<Acc>(
      reps, threads, [bbox] { return TrialScratch<D>(bbox); },
      [&](std::int64_t r, TrialScratch<D>& scratch, Acc& a) {
        FieldParams rp(mix_seed(seed, static_cast<std::uint64_t>(r)), p);
        TrialOutcome out = survival_trial(g, rp, u, n, window, budget, scratch);
        if (out.success)
          ++a.succ;
        else if (out.truncated)
          ++a.trunc_fail;
      });

  SweepPoint sp;
  sp.p = p;
  sp.n = n;
  sp.reps = reps;
  sp.successes = acc.succ;
  sp.theta_hat = reps > 0 ? static_cast<double>(acc.succ) / static_cast<double>(reps) : 0.0;
  Interval ci = wilson(acc.succ, reps);
  sp.ci_low = ci.lo;
  sp.ci_high = ci.hi;
  sp.boundary_flag_rate =
      reps > 0 ? static_cast<double>(acc.trunc_fail) / static_cast<double>(reps) : 0.0;
  return sp;
}

// Empirical bracket for the direction-dependent critical point.
template <int D>
struct PcEstimate {
  Vec<D> u;
  std::int64_t n = 0;
  double tau = 0.05;
  double p_lo = 0.0;
  double p_hi = 1.0;
  std::int64_t reps = 0;
  bool decided = false;  // bracket narrowed to the width target with clean CI decisions
};

namespace detail {

enum class TauSide { below, above, indecisive };

template <int D>
TauSide classify_vs_tau(const GraphSpec<D>& g, const Vec<D>& u, double p, std::int64_t n,
                        double tau, std::int64_t reps, std::uint64_t seed, int threads,
                        std::int64_t c_w, std::int64_t budget) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::int64_t r = attempt == 0 ? reps : 4 * reps;
    SweepPoint sp = directional_survival(g, u, p, n, survival_window<D>(n, c_w), r,
                                         mix_seed(seed, static_cast<std::uint64_t>(attempt)),
                                         threads, budget);
    if (sp.ci_low > tau) return TauSide::above;
    if (sp.ci_high < tau) return TauSide::below;
  }
  return TauSide::indecisive;
}

}  // namespace detail

// Bisection on p for the survival-vs-tau crossing.  A probe point is only
// accepted when its Wilson interval clears tau on one side (one retry at 4x
// reps); points that stay ambiguous are skipped via quartile probes, and the
// search stops honestly once the indecision budget is spent.
template <int D>
PcEstimate<D> estimate_pc(const GraphSpec<D>& g, Vec<D> u, std::int64_t n, double tau,
                          std::int64_t reps, std::uint64_t seed, double p_lo, double p_hi,
                          int threads = 0, double width_target = 0.005,
                          std::int64_t c_w = 4,
                          std::int64_t budget = std::int64_t{1} << 62) {
  if (!(tau > 0.0 && tau < 1.0)) throw spec_error("tau must lie in (0,1)");
  if (!(p_lo < p_hi)) throw spec_error("bracket must satisfy p_lo < p_hi");
  u = gcd_reduce(u);
  if (u.is_zero()) throw spec_error("probe direction is zero");

  std::uint64_t probe_counter = 0;
  auto classify = [&](double p) {
    return detail::classify_vs_tau(g, u, p, n, tau, reps, mix_seed(seed, 7000 + probe_counter++),
                                   threads, c_w, budget);
  };

  if (classify(p_lo) != detail::TauSide::below)
    throw refusal_error("invalid-bracket: survival at p_lo is not below tau");
  if (classify(p_hi) != detail::TauSide::above)
    throw refusal_error("invalid-bracket: survival at p_hi is not above tau");

  double lo = p_lo, hi = p_hi;
  int stalls = 0;
  constexpr int kStallBudget = 6;
  const double fractions[3] = {0.5, 0.75, 0.25};
  while (hi - lo > width_target && stalls < kStallBudget) {
    bool progressed = false;
    for (double f : fractions) {
      const double p = lo + f * (hi - lo);
      const detail::TauSide side = classify(p);
      if (side == detail::TauSide::above) {
        hi = p;
        progressed = true;
        break;
      }
      if (side == detail::TauSide::below) {
        lo = p;
        progressed = true;
        break;
      }
      if (++stalls >= kStallBudget) break;
    }
    if (!progressed) break;  // quartile probes all ambiguous or stall budget spent
  }

  PcEstimate<D> est;
  est.u = u;
  est.n = n;
  est.tau = tau;
  est.p_lo = lo;
  est.p_hi = hi;
  est.reps = reps;
  est.decided = (hi - lo) <= width_target;
  return est;
}

}  // namespace orperc
