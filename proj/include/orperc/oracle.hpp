#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "orperc/errors.hpp"
#include "orperc/graph.hpp"
#include "orperc/random_field.hpp"
#include "orperc/vec.hpp"

namespace orperc {

// Brute-force reference computations on explicitly materialized small
// windows.  The enumeration walks all 2^|edges| configurations, so results
// are exact up to long-double rounding; every Monte Carlo module is checked
// against this one.
template <int D>
struct EnumerationTask {
  GraphSpec<D> g;
  std::vector<Vec<D>> vertices;               // window contents, lexicographic
  std::vector<std::pair<int, int>> edges;     // (tail index, head index)
  std::vector<std::int32_t> edge_dir;         // dir index per edge
  int cap = 24;

  int vertex_index(const Vec<D>& v) const {
    auto it = std::lower_bound(vertices.begin(), vertices.end(), v);
    if (it == vertices.end() || !(*it == v)) return -1;
    return static_cast<int>(it - vertices.begin());
  }
};

// Materializes all vertices of a window with a finite bounding box and all
// edges with both endpoints inside, ordered lexicographically by tail then
// dir index.
template <int D>
EnumerationTask<D> make_enumeration_task(const GraphSpec<D>& g, const Window<D>& window,
                                         int cap = 24) {
  const std::int64_t r = window.bbox_radius();
  if (r < 0) throw spec_error("enumeration window needs a finite bounding box");
  EnumerationTask<D> task;
  task.g = g;
  task.cap = cap;

  Vec<D> x;
  for (int i = 0; i < D; ++i) x.c[i] = -r;
  for (;;) {
    if (window.contains(x)) task.vertices.push_back(x);
    int axis = D - 1;
    while (axis >= 0 && x.c[axis] == r) x.c[axis--] = -r;
    if (axis < 0) break;
    ++x.c[axis];
  }
  std::sort(task.vertices.begin(), task.vertices.end());

  for (int vi = 0; vi < static_cast<int>(task.vertices.size()); ++vi) {
    for (std::int32_t di = 0; di < g.degree(); ++di) {
      const Vec<D> y = task.vertices[static_cast<std::size_t>(vi)] +
                       g.dirs[static_cast<std::size_t>(di)];
      const int hi = task.vertex_index(y);
      if (hi < 0 || !window.contains(y)) continue;
      task.edges.emplace_back(vi, hi);
      task.edge_dir.push_back(di);
    }
  }
  return task;
}

namespace detail {

// Gray-code walk over configurations.  weight[k] = p^k (1-p)^(m-k) with k
// open edges, in extended precision.
template <class Visit>
void enumerate_configs(int m, double p, Visit&& visit) {
  std::vector<long double> pow_p(static_cast<std::size_t>(m) + 1),
      pow_q(static_cast<std::size_t>(m) + 1);
  pow_p[0] = pow_q[0] = 1.0L;
  for (int i = 1; i <= m; ++i) {
    pow_p[static_cast<std::size_t>(i)] = pow_p[static_cast<std::size_t>(i - 1)] * p;
    pow_q[static_cast<std::size_t>(i)] = pow_q[static_cast<std::size_t>(i - 1)] * (1.0L - p);
  }
  const std::uint64_t total = std::uint64_t{1} << m;
  std::uint64_t gray = 0;
  int open_count = 0;
  for (std::uint64_t i = 0;; ++i) {
    visit(gray, pow_p[static_cast<std::size_t>(open_count)] *
                    pow_q[static_cast<std::size_t>(m - open_count)]);
    if (i + 1 == total) break;
    const std::uint64_t next_gray = (i + 1) ^ ((i + 1) >> 1);
    const std::uint64_t flipped = gray ^ next_gray;
    open_count += (next_gray & flipped) ? 1 : -1;
    gray = next_gray;
  }
}

}  // namespace detail

// Exact P_p(event) where the event is any predicate over the open-edge mask
// (bit i of the mask = edge i of the task is open).
template <int D, class Event>
long double exact_event_probability(const EnumerationTask<D>& task, double p, Event&& event) {
  const int m = static_cast<int>(task.edges.size());
  if (m > task.cap) throw refusal_error("cap-exceeded: too many edges for exact enumeration");
  long double total = 0.0L;
  detail::enumerate_configs(m, p, [&](std::uint64_t mask, long double w) {
    if (event(mask)) total += w;
  });
  return total;
}

// Reachability helper over a fixed open-edge mask: BFS from `from` along
// open edges only.  Returns the per-vertex reached flags.
template <int D>
void reach_open(const EnumerationTask<D>& task, std::uint64_t mask, int from,
                std::vector<char>& reached, std::vector<int>& queue) {
  reached.assign(task.vertices.size(), 0);
  queue.clear();
  if (from < 0) return;
  reached[static_cast<std::size_t>(from)] = 1;
  queue.push_back(from);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int x = queue[head];
    for (std::size_t ei = 0; ei < task.edges.size(); ++ei) {
      if (!(mask & (std::uint64_t{1} << ei))) continue;
      if (task.edges[ei].first != x) continue;
      const int y = task.edges[ei].second;
      if (!reached[static_cast<std::size_t>(y)]) {
        reached[static_cast<std::size_t>(y)] = 1;
        queue.push_back(y);
      }
    }
  }
}

inline constexpr std::int64_t kUnreachableTime = -1;

// Full distribution of the windowed passage time t(x, y): closed edges cost
// 1, open edges cost 0, and every edge is traversable.  The unreachable atom
// is keyed by kUnreachableTime.
template <int D>
std::map<std::int64_t, long double> exact_passage_distribution(const EnumerationTask<D>& task,
                                                               double p, const Vec<D>& x,
                                                               const Vec<D>& y) {
  const int m = static_cast<int>(task.edges.size());
  if (m > task.cap) throw refusal_error("cap-exceeded: too many edges for exact enumeration");
  const int xi = task.vertex_index(x), yi = task.vertex_index(y);
  if (xi < 0 || yi < 0) throw spec_error("passage endpoints must lie in the window");

  // Per-vertex adjacency once, then 0-1 Dijkstra per configuration.
  std::vector<std::vector<int>> out_edges(task.vertices.size());
  for (std::size_t ei = 0; ei < task.edges.size(); ++ei)
    out_edges[static_cast<std::size_t>(task.edges[ei].first)].push_back(static_cast<int>(ei));

  std::map<std::int64_t, long double> dist;
  std::vector<std::int32_t> d(task.vertices.size());
  std::vector<int> bucket_now, bucket_next;
  detail::enumerate_configs(m, p, [&](std::uint64_t mask, long double w) {
    std::fill(d.begin(), d.end(), std::numeric_limits<std::int32_t>::max());
    d[static_cast<std::size_t>(xi)] = 0;
    bucket_now.assign(1, xi);
    std::int32_t level = 0;
    std::int64_t found = kUnreachableTime;
    while (!bucket_now.empty()) {
      bucket_next.clear();
      for (std::size_t head = 0; head < bucket_now.size(); ++head) {
        const int v = bucket_now[head];
        if (d[static_cast<std::size_t>(v)] != level) continue;  // stale entry
        if (v == yi) {
          found = level;
          break;
        }
        for (int ei : out_edges[static_cast<std::size_t>(v)]) {
          const int to = task.edges[static_cast<std::size_t>(ei)].second;
          const std::int32_t cost = (mask & (std::uint64_t{1} << ei)) ? 0 : 1;
          if (level + cost < d[static_cast<std::size_t>(to)]) {
            d[static_cast<std::size_t>(to)] = level + cost;
            (cost == 0 ? bucket_now : bucket_next).push_back(to);
          }
        }
      }
      if (found != kUnreachableTime) break;
      bucket_now.swap(bucket_next);
      ++level;
    }
    dist[found] += w;
  });
  return dist;
}

struct PathCountBound {
  long double partial_sum = 0.0L;
  std::optional<long double> closed_bound;
};

// Mean-count bound for open self-avoiding paths from the origin to the line
// y = -n in the example model:
//   partial_sum = sum_{l=0}^{l_max} C(2l+n, l) (2M+1)^l p^(2l+n),
//   closed_bound = (2p)^n / (1 - 4 p^2 (2M+1)) when 4 p^2 (2M+1) < 1.
inline PathCountBound path_count_bound(std::int64_t M, double p, std::int64_t n,
                                       std::int64_t l_max) {
  if (M < 1) throw spec_error("path_count_bound needs M >= 1");
  if (n < 0 || l_max < 0) throw spec_error("path_count_bound needs n, l_max >= 0");
  using boost::multiprecision::cpp_int;

  PathCountBound out;
  cpp_int binom = 1;  // C(n, 0)
  cpp_int drift_pow = 1;
  // C(2l+n, l) via the ratio C(2l+2+n, l+1) / C(2l+n, l).
  for (std::int64_t l = 0; l <= l_max; ++l) {
    if (l > 0) {
      binom = binom * (2 * l + n) * (2 * l + n - 1) / (l * (l + n));
      drift_pow *= 2 * M + 1;
    }
    const long double coeff = static_cast<long double>(cpp_int(binom * drift_pow));
    out.partial_sum += coeff * std::pow(static_cast<long double>(p), 2 * l + n);
  }
  const double disc = 4.0 * p * p * static_cast<double>(2 * M + 1);
  if (disc < 1.0)
    out.closed_bound = std::pow(2.0L * static_cast<long double>(p), n) / (1.0L - disc);
  return out;
}

}  // namespace orperc
