#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <set>
#include <unordered_set>
#include <vector>

#include "orperc/errors.hpp"
#include "orperc/vec.hpp"

namespace orperc {

// Translation-invariant oriented graph on Z^D: edges are (x, x + v) for v in
// a fixed finite direction set.  Edges are never materialized; the direction
// list *is* the graph.  The order of dirs is significant: it fixes the edge
// enumeration order that the seeded sampler keys on, so reordering dirs
// changes samples.
template <int D>
struct GraphSpec {
  static constexpr int dim = D;
  std::vector<Vec<D>> dirs;

  int degree() const { return static_cast<int>(dirs.size()); }
};

template <int D>
GraphSpec<D> make_graph(std::vector<Vec<D>> dirs) {
  if (dirs.empty()) throw spec_error("direction set is empty");
  std::set<Vec<D>> seen;
  for (const auto& v : dirs) {
    if (v.is_zero()) throw spec_error("direction set contains the zero vector");
    if (!seen.insert(v).second)
      throw spec_error("direction set contains duplicate " + v.str());
  }
  return GraphSpec<D>{std::move(dirs)};
}

// Two-dimensional example family: one step down, and any step up with
// horizontal drift at most M.
//   Dir = {(0,-1)} u {(k,1) : -M <= k <= M},  |Dir| = 2M + 2.
inline GraphSpec<2> example_model(int64_t M) {
  if (M < 1) throw spec_error("example model needs M >= 1");
  std::vector<Vec<2>> dirs;
  dirs.reserve(static_cast<std::size_t>(2 * M + 2));
  dirs.push_back(Vec<2>{0, -1});
  for (std::int64_t k = -M; k <= M; ++k) dirs.push_back(Vec<2>{k, 1});
  return GraphSpec<2>{std::move(dirs)};
}

// Out-neighbors of x, in declaration order of dirs.
template <int D>
std::vector<Vec<D>> out_neighbors(const GraphSpec<D>& g, const Vec<D>& x) {
  std::vector<Vec<D>> out;
  out.reserve(g.dirs.size());
  for (const auto& v : g.dirs) out.push_back(x + v);
  return out;
}

// Truncated certificate that the semigroup generated by dirs is all of Z^D:
// true iff the BFS closure of {0} under adding directions, restricted to the
// L-infinity ball of the given radius, covers that whole ball.  A sufficient
// certificate at this scale, not a proof.
template <int D>
bool generates_zd(const GraphSpec<D>& g, std::int64_t radius) {
  if (radius < 1) throw spec_error("generates_zd needs radius >= 1");
  std::int64_t ball = 1;
  for (int i = 0; i < D; ++i) ball *= 2 * radius + 1;

  std::unordered_set<Vec<D>, VecHash<D>> reached;
  std::deque<Vec<D>> queue;
  reached.insert(Vec<D>{});
  queue.push_back(Vec<D>{});
  while (!queue.empty()) {
    const Vec<D> x = queue.front();
    queue.pop_front();
    for (const auto& v : g.dirs) {
      const Vec<D> y = x + v;
      if (y.linf() > radius) continue;
      if (reached.insert(y).second) queue.push_back(y);
    }
  }
  return static_cast<std::int64_t>(reached.size()) == ball;
}

// Rational linear form <num, x> / den.
template <int D>
struct LinearForm {
  Vec<D> num;
  std::int64_t den = 1;

  Frac eval(const Vec<D>& x) const { return Frac::of(dot(num, x), den); }
};

// Subadditive weight Psi realized as a maximum of finitely many linear
// forms; a single form is the linear kind.  max-of-linear is subadditive by
// construction, and evaluation is exact rational.
template <int D>
class SubadditiveWeight {
 public:
  SubadditiveWeight() : forms_{LinearForm<D>{}} {}

  static SubadditiveWeight linear(Vec<D> u, std::int64_t den = 1) {
    if (den == 0) throw spec_error("linear weight with zero denominator");
    return SubadditiveWeight({LinearForm<D>{u, den}});
  }

  static SubadditiveWeight max_of(std::vector<LinearForm<D>> forms) {
    if (forms.empty()) throw spec_error("weight needs at least one linear form");
    for (auto& f : forms)
      if (f.den == 0) throw spec_error("weight form with zero denominator");
    return SubadditiveWeight(std::move(forms));
  }

  bool is_linear() const { return forms_.size() == 1; }
  const std::vector<LinearForm<D>>& forms() const { return forms_; }

  Frac eval(const Vec<D>& x) const {
    Frac best = forms_[0].eval(x);
    for (std::size_t i = 1; i < forms_.size(); ++i) {
      Frac v = forms_[i].eval(x);
      if (best < v) best = v;
    }
    return best;
  }

 private:
  explicit SubadditiveWeight(std::vector<LinearForm<D>> forms) : forms_(std::move(forms)) {}
  std::vector<LinearForm<D>> forms_;
};

template <int D>
Frac psi_eval(const SubadditiveWeight<D>& w, const Vec<D>& x) {
  return w.eval(x);
}

inline constexpr std::int64_t kMaxWindowRadius = std::int64_t{1} << 31;

// Membership-testable region of Z^D.  Two kinds:
//   box(W):                 |x_i| <= W for every axis;
//   psiball(Psi, n, trunc): Psi(x) <= n, optionally intersected with a box
//                           truncation (trunc < 0 means none).
// A psiball without truncation has no finite bounding box; explorations over
// it rely on their vertex budget for termination.
template <int D>
class Window {
 public:
  enum class Kind { box, psiball };

  static Window box(std::int64_t radius) {
    if (radius < 0) throw spec_error("box window needs radius >= 0");
    if (radius > kMaxWindowRadius) throw spec_error("window radius above 2^31");
    Window w;
    w.kind_ = Kind::box;
    w.radius_ = radius;
    return w;
  }

  static Window psiball(SubadditiveWeight<D> psi, Frac level, std::int64_t trunc = -1) {
    if (trunc > kMaxWindowRadius) throw spec_error("window radius above 2^31");
    Window w;
    w.kind_ = Kind::psiball;
    w.psi_ = std::move(psi);
    w.level_ = level;
    w.radius_ = trunc;
    return w;
  }

  Kind kind() const { return kind_; }
  std::int64_t box_radius() const { return radius_; }
  const SubadditiveWeight<D>& psi() const { return psi_; }
  Frac level() const { return level_; }

  bool contains(const Vec<D>& x) const {
    if (kind_ == Kind::box) return x.linf() <= radius_;
    if (radius_ >= 0 && x.linf() > radius_) return false;
    return psi_.eval(x) <= level_;
  }

  // Finite bounding-box radius when one exists, -1 otherwise.
  std::int64_t bbox_radius() const {
    if (kind_ == Kind::box) return radius_;
    return radius_;
  }

 private:
  Kind kind_ = Kind::box;
  std::int64_t radius_ = 0;
  SubadditiveWeight<D> psi_;
  Frac level_{0, 1};
};

}  // namespace orperc
