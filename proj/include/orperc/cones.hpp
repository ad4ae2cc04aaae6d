#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "orperc/cluster.hpp"
#include "orperc/errors.hpp"
#include "orperc/fpp.hpp"
#include "orperc/stats.hpp"
#include "orperc/vec.hpp"

namespace orperc {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

// Integer lattice vector with arbitrary-precision coordinates; the cone
// algebra works on these so that duality statements are checked exactly.
template <int D>
using BVec = std::array<BigInt, D>;

template <std::size_t N>
inline BigInt dot_b(const std::array<BigInt, N>& a, const std::array<BigInt, N>& b) {
  BigInt s = 0;
  for (std::size_t i = 0; i < N; ++i) s += a[i] * b[i];
  return s;
}

template <std::size_t N>
inline bool is_zero_b(const std::array<BigInt, N>& a) {
  for (const auto& x : a)
    if (x != 0) return false;
  return true;
}

template <std::size_t N>
inline std::array<BigInt, N> negate_b(std::array<BigInt, N> a) {
  for (auto& x : a) x = -x;
  return a;
}

// Primitive form: divide by the gcd of the coordinates, sign preserved.
template <std::size_t N>
inline std::array<BigInt, N> reduce_b(std::array<BigInt, N> a) {
  BigInt g = 0;
  for (const auto& x : a) g = boost::multiprecision::gcd(g, boost::multiprecision::abs(x));
  if (g > 1)
    for (auto& x : a) x /= g;
  return a;
}

template <int D>
inline BVec<D> to_bvec(const Vec<D>& v) {
  BVec<D> b;
  for (int i = 0; i < D; ++i) b[static_cast<std::size_t>(i)] = v.c[i];
  return b;
}

namespace detail {

using RMat = std::vector<std::vector<BigRat>>;

// Gauss-Jordan to reduced row echelon form; returns pivot columns.
inline std::vector<int> rref(RMat& m) {
  std::vector<int> pivots;
  if (m.empty()) return pivots;
  const int rows = static_cast<int>(m.size());
  const int cols = static_cast<int>(m[0].size());
  int r = 0;
  for (int c = 0; c < cols && r < rows; ++c) {
    int pr = -1;
    for (int i = r; i < rows; ++i)
      if (m[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] != 0) {
        pr = i;
        break;
      }
    if (pr < 0) continue;
    std::swap(m[static_cast<std::size_t>(r)], m[static_cast<std::size_t>(pr)]);
    const BigRat piv = m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    for (int j = 0; j < cols; ++j) m[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] /= piv;
    for (int i = 0; i < rows; ++i) {
      if (i == r) continue;
      const BigRat f = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
      if (f == 0) continue;
      for (int j = 0; j < cols; ++j)
        m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -=
            f * m[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)];
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

// Basis of {x : M x = 0}, rows of M as given.
inline std::vector<std::vector<BigRat>> kernel_basis(RMat m, int cols) {
  std::vector<int> pivots = rref(m);
  std::vector<char> is_pivot(static_cast<std::size_t>(cols), 0);
  for (int c : pivots) is_pivot[static_cast<std::size_t>(c)] = 1;
  std::vector<std::vector<BigRat>> basis;
  for (int f = 0; f < cols; ++f) {
    if (is_pivot[static_cast<std::size_t>(f)]) continue;
    std::vector<BigRat> x(static_cast<std::size_t>(cols), BigRat(0));
    x[static_cast<std::size_t>(f)] = 1;
    for (std::size_t pi = 0; pi < pivots.size(); ++pi)
      x[static_cast<std::size_t>(pivots[pi])] = -m[pi][static_cast<std::size_t>(f)];
    basis.push_back(std::move(x));
  }
  return basis;
}

// Solves the square system A w = b exactly; A must be invertible.
inline std::vector<BigRat> solve_square(RMat a, const std::vector<BigRat>& b) {
  const int n = static_cast<int>(a.size());
  for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)].push_back(b[static_cast<std::size_t>(i)]);
  rref(a);
  std::vector<BigRat> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)];
  return w;
}

template <int D>
inline BVec<D> clear_denominators(const std::vector<BigRat>& q) {
  BigInt lcm = 1;
  for (const auto& x : q) {
    const BigInt den = boost::multiprecision::denominator(x);
    lcm = lcm / boost::multiprecision::gcd(lcm, den) * den;
  }
  BVec<D> out;
  for (int i = 0; i < D; ++i) {
    const BigRat scaled = q[static_cast<std::size_t>(i)] * BigRat(lcm);
    out[static_cast<std::size_t>(i)] = boost::multiprecision::numerator(scaled);
  }
  return reduce_b(out);
}

}  // namespace detail

// Core Minkowski-Weyl conversion: a finite normal set N with
// pos(V) = {x : <n,x> <= 0 for all n in N}.  Works in the span of V: facet
// normals are found among kernels of (rank-1)-subsets, and the orthogonal
// complement contributes equality pairs.  Applying the same routine to a set
// of inequality normals yields generators of the cone they cut out.
template <int D>
std::vector<BVec<D>> dual_normals(const std::vector<BVec<D>>& input) {
  static_assert(D >= 1 && D <= 4, "cone conversion is capped at dimension 4");
  std::vector<BVec<D>> vecs;
  for (const auto& v : input)
    if (!is_zero_b<D>(v)) vecs.push_back(reduce_b<D>(v));

  std::vector<BVec<D>> normals;
  auto push_normal = [&](BVec<D> n) {
    n = reduce_b<D>(n);
    if (is_zero_b<D>(n)) return;
    for (const auto& e : normals)
      if (e == n) return;
    normals.push_back(std::move(n));
  };

  // Span basis of the generators.
  detail::RMat m;
  for (const auto& v : vecs) {
    std::vector<BigRat> row(D);
    for (int i = 0; i < D; ++i) row[static_cast<std::size_t>(i)] = BigRat(v[static_cast<std::size_t>(i)]);
    m.push_back(std::move(row));
  }
  std::vector<int> pivots = m.empty() ? std::vector<int>{} : detail::rref(m);
  const int r = static_cast<int>(pivots.size());

  // Orthogonal complement of the span: both signs pin the span exactly.
  {
    detail::RMat rows;
    for (int i = 0; i < r; ++i) rows.push_back(m[static_cast<std::size_t>(i)]);
    if (r == 0) {
      for (int i = 0; i < D; ++i) {
        BVec<D> e{};
        e[static_cast<std::size_t>(i)] = 1;
        push_normal(e);
        push_normal(negate_b<D>(e));
      }
      return normals;
    }
    for (const auto& z : detail::kernel_basis(rows, D)) {
      const BVec<D> n = detail::clear_denominators<D>(z);
      push_normal(n);
      push_normal(negate_b<D>(n));
    }
  }

  // Coordinates of each generator in the span basis (rows 0..r-1 of m).
  detail::RMat basis;
  for (int i = 0; i < r; ++i) basis.push_back(m[static_cast<std::size_t>(i)]);
  detail::RMat gram(static_cast<std::size_t>(r), std::vector<BigRat>(static_cast<std::size_t>(r)));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      BigRat s = 0;
      for (int k = 0; k < D; ++k)
        s += basis[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] *
             basis[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
      gram[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = s;
    }

  std::vector<std::vector<BigRat>> coords;
  for (const auto& v : vecs) {
    std::vector<BigRat> rhs(static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i) {
      BigRat s = 0;
      for (int k = 0; k < D; ++k)
        s += basis[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * BigRat(v[static_cast<std::size_t>(k)]);
      rhs[static_cast<std::size_t>(i)] = s;
    }
    coords.push_back(detail::solve_square(gram, rhs));
  }

  // Lifts a candidate facet normal from span coordinates back to Z^D.
  auto lift = [&](const std::vector<BigRat>& a_span) -> BVec<D> {
    std::vector<BigRat> w = detail::solve_square(gram, a_span);
    std::vector<BigRat> a(D, BigRat(0));
    for (int i = 0; i < r; ++i)
      for (int k = 0; k < D; ++k)
        a[static_cast<std::size_t>(k)] += w[static_cast<std::size_t>(i)] *
                                          basis[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    return detail::clear_denominators<D>(a);
  };

  auto sign_check = [&](const std::vector<BigRat>& cand) {
    bool all_nonpos = true, all_nonneg = true;
    for (const auto& vc : coords) {
      BigRat s = 0;
      for (int i = 0; i < r; ++i) s += cand[static_cast<std::size_t>(i)] * vc[static_cast<std::size_t>(i)];
      if (s > 0) all_nonpos = false;
      if (s < 0) all_nonneg = false;
    }
    if (all_nonpos) push_normal(lift(cand));
    if (all_nonneg) {
      std::vector<BigRat> neg(cand.size());
      for (std::size_t i = 0; i < cand.size(); ++i) neg[i] = -cand[i];
      push_normal(lift(neg));
    }
  };

  if (r == 1) {
    sign_check({BigRat(1)});
    sign_check({BigRat(-1)});
    return normals;
  }

  // All (r-1)-subsets of generators whose common orthogonal within the span
  // is one-dimensional give facet-normal candidates.
  const int ng = static_cast<int>(coords.size());
  std::vector<int> idx(static_cast<std::size_t>(r - 1));
  auto process_subset = [&]() {
    detail::RMat rows;
    for (int i : idx) rows.push_back(coords[static_cast<std::size_t>(i)]);
    auto ker = detail::kernel_basis(std::move(rows), r);
    if (ker.size() != 1) return;
    sign_check(ker[0]);
  };
  // Iterative subset enumeration.
  std::vector<int> stack;
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == r - 1) {
      process_subset();
      return;
    }
    for (int i = start; i < ng; ++i) {
      idx[static_cast<std::size_t>(depth)] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return normals;
}

// Polyhedral convex cone with both representations maintained: positive hull
// of `generators` equals the solution set of <a,x> <= 0 over `inequalities`.
template <int D>
struct Cone {
  std::vector<BVec<D>> generators;
  std::vector<BVec<D>> inequalities;
};

namespace detail {

template <int D>
std::vector<BVec<D>> normalize_list(const std::vector<BVec<D>>& in) {
  std::vector<BVec<D>> out;
  for (const auto& v : in) {
    if (is_zero_b<D>(v)) continue;
    BVec<D> red = reduce_b<D>(v);
    bool dup = false;
    for (const auto& e : out)
      if (e == red) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(std::move(red));
  }
  return out;
}

}  // namespace detail

template <int D>
Cone<D> cone_from_generators(const std::vector<BVec<D>>& gens) {
  Cone<D> c;
  c.generators = detail::normalize_list<D>(gens);
  c.inequalities = dual_normals<D>(c.generators);
  return c;
}

template <int D>
Cone<D> cone_from_inequalities(const std::vector<BVec<D>>& ineqs) {
  Cone<D> c;
  c.inequalities = detail::normalize_list<D>(ineqs);
  c.generators = dual_normals<D>(c.inequalities);
  return c;
}

// Polar cone: generators and inequalities swap roles.  Exact, and involutive
// on the cones this module builds.
template <int D>
Cone<D> polar(const Cone<D>& c) {
  Cone<D> p;
  p.generators = c.inequalities;
  p.inequalities = c.generators;
  return p;
}

template <int D>
bool cone_contains(const Cone<D>& c, const BVec<D>& v) {
  for (const auto& a : c.inequalities)
    if (dot_b<D>(a, v) > 0) return false;
  return true;
}

// Interior membership: every valid inequality is strict at interior points,
// and implicit equalities (both signs present) empty the interior.
template <int D>
bool cone_interior_contains(const Cone<D>& c, const BVec<D>& v) {
  for (const auto& a : c.inequalities)
    if (dot_b<D>(a, v) >= 0) return false;
  return true;
}

template <int D>
bool cone_subset(const Cone<D>& a, const Cone<D>& b) {
  for (const auto& g : a.generators)
    if (!cone_contains<D>(b, g)) return false;
  return true;
}

template <int D>
bool cone_equal(const Cone<D>& a, const Cone<D>& b) {
  return cone_subset<D>(a, b) && cone_subset<D>(b, a);
}

// Implementation sanity check for C and its polar: no nonzero generator may
// lie in both cones (<x,x> <= 0 forces x = 0).
template <int D>
bool trivial_intersection_check(const Cone<D>& c, const Cone<D>& c_polar) {
  for (const auto& g : c.generators)
    if (!is_zero_b<D>(g) && cone_contains<D>(c_polar, g)) return false;
  for (const auto& g : c_polar.generators)
    if (!is_zero_b<D>(g) && cone_contains<D>(c, g)) return false;
  return true;
}

// True iff the positive hull of the rays is all of R^D.
template <int D>
bool positively_spans(const std::vector<Vec<D>>& rays) {
  std::vector<BVec<D>> gens;
  gens.reserve(rays.size());
  for (const auto& r : rays) gens.push_back(to_bvec<D>(r));
  return dual_normals<D>(detail::normalize_list<D>(gens)).empty();
}

// ---------------------------------------------------------------------------
// Sampled shape A_p and its cones.

template <int D>
struct RayStat {
  Vec<D> ray;
  MuEstimate<D> mu;
};

template <int D>
struct ShapeApprox {
  double p = 0.0;
  double zero_tol = kMuZeroTol;
  std::vector<RayStat<D>> rays;
  bool spanning = false;  // positive hull of the probe rays covers R^D
};

// Default probe set for d = 2: the 16 primitive directions with coordinates
// in {-2..2}.
inline std::vector<Vec<2>> default_probe_rays() {
  std::vector<Vec<2>> rays;
  for (std::int64_t a = -2; a <= 2; ++a)
    for (std::int64_t b = -2; b <= 2; ++b) {
      Vec<2> v{a, b};
      if (v.is_zero()) continue;
      v = gcd_reduce(v);
      if (std::find(rays.begin(), rays.end(), v) == rays.end()) rays.push_back(v);
    }
  std::sort(rays.begin(), rays.end());
  return rays;
}

// Just-supercritical directions have mu = 0 but a finite-size estimate of
// order C/n (the cost of joining a zero-time cluster), so a fixed ladder
// cannot push the interval below zero_tol.  Rays whose top-scale estimate is
// small but unresolved are probed at geometrically deeper scales (tighter
// window, same estimator) until they either clear zero_tol or reveal a
// genuinely positive slope.
template <int D>
void refine_near_zero(const GraphSpec<D>& g, double p, RayStat<D>& rs, std::int64_t reps,
                      std::uint64_t seed, double zero_tol, std::int64_t refine_max_scale,
                      int threads) {
  reps = std::min<std::int64_t>(reps, 25);  // deep scales need few replicas
  const double entry_cost_cap = 8.0;  // E[t] below this looks like mu = 0 at scale n
  int round = 0;
  for (;;) {
    const ScaleStat& top = rs.mu.ladder.back();
    if (rs.mu.ci_high < zero_tol) return;                         // resolved zero
    if (rs.mu.mu_hat * static_cast<double>(top.n) > entry_cost_cap) return;  // positive
    const std::int64_t next = top.n * 4;
    if (next > refine_max_scale) return;
    const std::int64_t factor = std::max<std::int64_t>(2, rs.ray.linf());
    MuEstimate<D> deeper = estimate_mu(g, p, rs.ray, {next}, reps,
                                       mix_seed(seed, 4000 + static_cast<std::uint64_t>(round)),
                                       factor, threads);
    rs.mu.ladder.push_back(deeper.ladder.back());
    rs.mu.mu_hat = deeper.mu_hat;
    rs.mu.ci_low = deeper.ci_low;
    rs.mu.ci_high = deeper.ci_high;
    rs.mu.unreachable_rate = deeper.unreachable_rate;
    rs.mu.valid = deeper.valid;
    rs.mu.zero_declared = deeper.zero_declared;
    ++round;
  }
}

template <int D>
ShapeApprox<D> sample_shape(const GraphSpec<D>& g, double p, const std::vector<Vec<D>>& rays,
                            const std::vector<std::int64_t>& n_ladder, std::int64_t reps,
                            std::uint64_t seed, std::int64_t window_factor = 4,
                            int threads = 0, std::int64_t refine_max_scale = 2048,
                            double zero_tol = kMuZeroTol) {
  if (rays.empty()) throw spec_error("sample_shape needs at least one ray");
  ShapeApprox<D> shape;
  shape.p = p;
  shape.zero_tol = zero_tol;
  shape.spanning = positively_spans<D>(rays);
  for (std::size_t i = 0; i < rays.size(); ++i) {
    RayStat<D> rs;
    rs.ray = gcd_reduce(rays[i]);
    rs.mu = estimate_mu(g, p, rs.ray, n_ladder, reps,
                        mix_seed(seed, static_cast<std::uint64_t>(i)), window_factor, threads);
    if (refine_max_scale > 0)
      refine_near_zero(g, p, rs, reps, mix_seed(seed, 9000 + i), zero_tol, refine_max_scale,
                       threads);
    shape.rays.push_back(std::move(rs));
  }
  return shape;
}

// Recession cone of A_p: positive hull of the probe rays whose mu interval
// sits below zero_tol.
template <int D>
Cone<D> recession_cone(const ShapeApprox<D>& shape) {
  std::vector<BVec<D>> gens;
  for (const auto& rs : shape.rays)
    if (rs.mu.ci_high < shape.zero_tol) gens.push_back(to_bvec<D>(rs.ray));
  return cone_from_generators<D>(gens);
}

// Barrier cone via the polar duality with the recession cone.
template <int D>
Cone<D> barrier_cone(const ShapeApprox<D>& shape) {
  return polar(recession_cone(shape));
}

// ---------------------------------------------------------------------------
// Bounded-growth probes and the conjecture scan.

enum class BgVerdict { bounded, unbounded, inconclusive };

inline const char* to_string(BgVerdict v) {
  switch (v) {
    case BgVerdict::bounded:
      return "bounded";
    case BgVerdict::unbounded:
      return "unbounded";
    default:
      return "inconclusive";
  }
}

struct BgThresholds {
  double hi = 0.02;    // CI above this at the top scale: unbounded evidence
  double lo = 0.005;   // CI below this plus a decay fit: bounded evidence
  double min_r2 = 0.9;
};

template <int D>
struct BgResult {
  Vec<D> u;
  BgVerdict verdict = BgVerdict::inconclusive;
  std::vector<SweepPoint> ladder;
  double fit_r2 = 0.0;
};

template <int D>
BgResult<D> bg_probe(const GraphSpec<D>& g, double p, Vec<D> u,
                     const std::vector<std::int64_t>& n_ladder, std::int64_t reps,
                     std::uint64_t seed, const BgThresholds& thresholds = {},
                     std::int64_t c_w = 4, int threads = 0,
                     std::int64_t budget = std::int64_t{1} << 62) {
  if (n_ladder.empty()) throw spec_error("bg_probe needs a scale ladder");
  u = gcd_reduce(u);
  if (u.is_zero()) throw spec_error("probe direction is zero");

  BgResult<D> out;
  out.u = u;
  for (std::size_t i = 0; i < n_ladder.size(); ++i) {
    const std::int64_t n = n_ladder[i];
    out.ladder.push_back(directional_survival(g, u, p, n, survival_window<D>(n, c_w), reps,
                                              mix_seed(seed, static_cast<std::uint64_t>(i)),
                                              threads, budget));
  }
  const SweepPoint& top = out.ladder.back();

  // Exponential-decay fit on log survival; zero counts sit at the resolution
  // floor 0.5/reps.
  std::vector<double> xs, ys;
  for (const auto& sp : out.ladder) {
    xs.push_back(static_cast<double>(sp.n));
    const double floor_rate = 0.5 / static_cast<double>(sp.reps);
    ys.push_back(std::log(std::max(sp.theta_hat, floor_rate)));
  }
  out.fit_r2 = linear_fit(xs, ys).r2;

  // Truncated explorations only ever lower the estimate, so the unbounded
  // verdict stays sound; a bounded verdict additionally requires that
  // truncation was negligible.
  if (top.ci_low > thresholds.hi)
    out.verdict = BgVerdict::unbounded;
  else if (top.ci_high < thresholds.lo && out.fit_r2 >= thresholds.min_r2 &&
           top.boundary_flag_rate <= 0.01)
    out.verdict = BgVerdict::bounded;
  else
    out.verdict = BgVerdict::inconclusive;
  return out;
}

template <int D>
struct ScanRow {
  Vec<D> ray;
  double mu_hat = 0.0;
  bool in_bar = false;
  bool in_int_bar = false;
  BgVerdict bg_p = BgVerdict::inconclusive;
  BgVerdict bg_q = BgVerdict::inconclusive;
  bool flag = false;
};

template <int D>
struct ScanReport {
  double p = 0.0;
  double q = 0.0;
  ShapeApprox<D> shape;
  Cone<D> recession;
  Cone<D> barrier;
  std::vector<ScanRow<D>> rows;
  int flags = 0;
};

// Per-ray consistency of the estimators against the proven inclusions
// int(Bar(A_p)) subset BG(p) and  union over q > p of BG(q) subset Bar(A_p).
// A flag marks estimator inconsistency, not a mathematical failure.
template <int D>
ScanReport<D> conjecture_scan(const GraphSpec<D>& g, double p, double q,
                              const std::vector<Vec<D>>& probe_rays,
                              const std::vector<std::int64_t>& mu_ladder,
                              std::int64_t mu_reps,
                              const std::vector<std::int64_t>& bg_ladder,
                              std::int64_t bg_reps, std::uint64_t seed,
                              const BgThresholds& thresholds = {}, int threads = 0,
                              std::int64_t bg_budget = 20000) {
  if (!(q > p)) throw spec_error("conjecture_scan needs q > p");
  if (!positively_spans<D>(probe_rays)) throw spec_error("probe rays must positively span");

  ScanReport<D> report;
  report.p = p;
  report.q = q;
  report.shape =
      sample_shape(g, p, probe_rays, mu_ladder, mu_reps, mix_seed(seed, 1), 4, threads);
  report.recession = recession_cone(report.shape);
  report.barrier = polar(report.recession);

  for (std::size_t i = 0; i < report.shape.rays.size(); ++i) {
    const auto& rs = report.shape.rays[i];
    ScanRow<D> row;
    row.ray = rs.ray;
    row.mu_hat = rs.mu.mu_hat;
    const BVec<D> b = to_bvec<D>(rs.ray);
    row.in_bar = cone_contains<D>(report.barrier, b);
    row.in_int_bar = cone_interior_contains<D>(report.barrier, b);
    row.bg_p = bg_probe(g, p, rs.ray, bg_ladder, bg_reps, mix_seed(seed, 100 + i), thresholds,
                        4, threads, bg_budget)
                   .verdict;
    row.bg_q = bg_probe(g, q, rs.ray, bg_ladder, bg_reps, mix_seed(seed, 200 + i), thresholds,
                        4, threads, bg_budget)
                   .verdict;
    row.flag = (row.in_int_bar && row.bg_p == BgVerdict::unbounded) ||
               (row.bg_q == BgVerdict::bounded && !row.in_bar);
    if (row.flag) ++report.flags;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace orperc
