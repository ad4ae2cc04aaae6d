#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "orperc/cones.hpp"

using namespace orperc;

namespace {

template <int D>
BVec<D> bv(std::initializer_list<std::int64_t> xs) {
  BVec<D> v{};
  int i = 0;
  for (auto x : xs) v[static_cast<std::size_t>(i++)] = x;
  return v;
}

template <int D>
Cone<D> random_cone(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ngen(1, 6);
  std::uniform_int_distribution<std::int64_t> entry(-9, 9);
  std::vector<BVec<D>> gens;
  const int n = ngen(rng);
  for (int i = 0; i < n; ++i) {
    BVec<D> v{};
    for (int k = 0; k < D; ++k) v[static_cast<std::size_t>(k)] = entry(rng);
    gens.push_back(v);
  }
  if (rng() % 2 == 0) return cone_from_generators<D>(gens);
  return cone_from_inequalities<D>(gens);
}

}  // namespace

TEST_CASE("dual normals of textbook cones") {
  // First quadrant.
  const auto quad = cone_from_generators<2>({bv<2>({1, 0}), bv<2>({0, 1})});
  CHECK(cone_contains<2>(quad, bv<2>({3, 5})));
  CHECK_FALSE(cone_contains<2>(quad, bv<2>({-1, 5})));
  CHECK(cone_interior_contains<2>(quad, bv<2>({1, 1})));
  CHECK_FALSE(cone_interior_contains<2>(quad, bv<2>({1, 0})));

  // Single ray: x2 = 0, x1 >= 0.
  const auto ray = cone_from_generators<2>({bv<2>({1, 0})});
  CHECK(cone_contains<2>(ray, bv<2>({7, 0})));
  CHECK_FALSE(cone_contains<2>(ray, bv<2>({7, 1})));
  CHECK_FALSE(cone_contains<2>(ray, bv<2>({-1, 0})));

  // The whole plane has an empty inequality system.
  const auto plane = cone_from_generators<2>(
      {bv<2>({1, 0}), bv<2>({-1, 0}), bv<2>({0, 1}), bv<2>({0, -1})});
  CHECK(plane.inequalities.empty());
  CHECK(cone_contains<2>(plane, bv<2>({-17, 23})));

  // The origin cone contains only zero.
  const auto zero = cone_from_generators<2>({});
  CHECK(cone_contains<2>(zero, bv<2>({0, 0})));
  CHECK_FALSE(cone_contains<2>(zero, bv<2>({1, 0})));
  CHECK_FALSE(cone_contains<2>(zero, bv<2>({0, -1})));
}

TEST_CASE("polar of trivial cones") {
  const auto zero = cone_from_generators<2>({});
  const auto all = polar(zero);
  CHECK(cone_contains<2>(all, bv<2>({-3, 8})));

  const auto plane = cone_from_generators<2>(
      {bv<2>({1, 0}), bv<2>({-1, 0}), bv<2>({0, 1}), bv<2>({0, -1})});
  const auto only_zero = polar(plane);
  CHECK(cone_contains<2>(only_zero, bv<2>({0, 0})));
  CHECK_FALSE(cone_contains<2>(only_zero, bv<2>({1, 0})));

  // polar(ray e1) is the halfplane u1 <= 0.
  const auto half = polar(cone_from_generators<2>({bv<2>({1, 0})}));
  const auto want = cone_from_inequalities<2>({bv<2>({1, 0})});
  CHECK(cone_equal<2>(half, want));
}

TEST_CASE("polar is an involution on random rational cones") {
  std::mt19937_64 rng(20240817);
  for (int d2 = 0; d2 < 20; ++d2) {
    const auto c = random_cone<2>(rng);
    CHECK(cone_equal<2>(polar(polar(c)), c));
    CHECK(trivial_intersection_check<2>(c, polar(c)));
  }
  for (int d3 = 0; d3 < 20; ++d3) {
    const auto c = random_cone<3>(rng);
    CHECK(cone_equal<3>(polar(polar(c)), c));
    CHECK(trivial_intersection_check<3>(c, polar(c)));
  }
}

TEST_CASE("representations stay consistent") {
  std::mt19937_64 rng(5150);
  for (int trial = 0; trial < 25; ++trial) {
    const auto c = random_cone<3>(rng);
    for (const auto& g : c.generators)
      for (const auto& a : c.inequalities) CHECK(dot_b<3>(a, g) <= 0);
  }
}

TEST_CASE("positively spanning ray sets") {
  CHECK(positively_spans<2>(default_probe_rays()));
  CHECK_FALSE(positively_spans<2>({Vec<2>{1, 0}, Vec<2>{0, 1}}));
  CHECK(positively_spans<2>({Vec<2>{1, 0}, Vec<2>{0, 1}, Vec<2>{-1, -1}}));
  CHECK(default_probe_rays().size() == 16);
}

namespace {

ShapeApprox<2> fake_shape(const std::vector<std::pair<Vec<2>, double>>& mus) {
  ShapeApprox<2> shape;
  shape.p = 0.5;
  for (const auto& [ray, mu] : mus) {
    RayStat<2> rs;
    rs.ray = ray;
    rs.mu.x = ray;
    rs.mu.mu_hat = mu;
    rs.mu.ci_low = std::max(0.0, mu - 1e-5);
    rs.mu.ci_high = mu + 1e-5;
    rs.mu.valid = true;
    shape.rays.push_back(rs);
  }
  shape.spanning = true;
  return shape;
}

}  // namespace

TEST_CASE("recession and barrier cones from sampled shapes") {
  // Everything positive: recession {0}, barrier the whole plane.
  const auto all_pos = fake_shape({{Vec<2>{1, 0}, 0.4},
                                   {Vec<2>{-1, 0}, 0.4},
                                   {Vec<2>{0, 1}, 0.5},
                                   {Vec<2>{0, -1}, 0.5}});
  const auto rec0 = recession_cone(all_pos);
  CHECK(rec0.generators.empty());
  const auto bar0 = barrier_cone(all_pos);
  CHECK(cone_contains<2>(bar0, bv<2>({-5, 9})));

  // Zero along e2 only: recession = ray e2, barrier = lower halfplane.
  const auto up_zero = fake_shape({{Vec<2>{1, 0}, 0.4},
                                   {Vec<2>{-1, 0}, 0.4},
                                   {Vec<2>{0, 1}, 0.0},
                                   {Vec<2>{0, -1}, 0.5}});
  const auto rec = recession_cone(up_zero);
  CHECK(cone_contains<2>(rec, bv<2>({0, 3})));
  CHECK_FALSE(cone_contains<2>(rec, bv<2>({0, -3})));
  const auto bar = barrier_cone(up_zero);
  CHECK(cone_equal<2>(bar, cone_from_inequalities<2>({bv<2>({0, 1})})));

  // All zero: recession spans, barrier collapses to the origin.
  const auto all_zero = fake_shape({{Vec<2>{1, 0}, 0.0},
                                    {Vec<2>{-1, 0}, 0.0},
                                    {Vec<2>{0, 1}, 0.0},
                                    {Vec<2>{0, -1}, 0.0}});
  const auto bar_zero = barrier_cone(all_zero);
  CHECK(cone_contains<2>(bar_zero, bv<2>({0, 0})));
  CHECK_FALSE(cone_contains<2>(bar_zero, bv<2>({1, 0})));
}

TEST_CASE("sampled recession cone at p = 1 spans with the rays") {
  const auto g = example_model(1);
  const auto shape = sample_shape(g, 1.0, default_probe_rays(), {8, 16}, 30, 7, 4, 2);
  CHECK(shape.spanning);
  const auto rec = recession_cone(shape);
  CHECK(rec.inequalities.empty());  // every ray has mu = 0 exactly
  const auto bar = barrier_cone(shape);
  CHECK_FALSE(cone_contains<2>(bar, bv<2>({1, 0})));
}

TEST_CASE("near-zero refinement resolves a supercritical direction") {
  // At p = 0.55 the upward direction is deep in the supercritical phase:
  // the fixed-ladder estimate is entry-cost noise of order C/n, and the
  // deeper probes push the interval below zero_tol.
  const auto g = example_model(1);
  const auto shape = sample_shape(g, 0.55, {Vec<2>{0, 1}, Vec<2>{0, -1}}, {16, 32}, 25, 99, 4,
                                  2, 1024);
  REQUIRE(shape.rays.size() == 2);
  const auto& up = shape.rays[0];
  CHECK(up.mu.ci_high < kMuZeroTol);
  CHECK(up.mu.ladder.size() > 2);  // refinement extended the ladder
  const auto& down = shape.rays[1];
  CHECK(down.mu.mu_hat > 0.1);  // subcritical direction stays positive

  const auto rec = recession_cone(shape);
  CHECK(cone_contains<2>(rec, bv<2>({0, 1})));
  CHECK_FALSE(cone_contains<2>(rec, bv<2>({0, -1})));
}

TEST_CASE("bg_probe endpoints") {
  const auto g = example_model(2);
  const auto bounded = bg_probe(g, 0.0, Vec<2>{0, 1}, {8, 16, 32}, 3000, 3, {}, 4, 2);
  CHECK(bounded.verdict == BgVerdict::bounded);

  const auto unbounded = bg_probe(g, 1.0, Vec<2>{0, 1}, {8, 16, 32}, 500, 3, {}, 4, 2);
  CHECK(unbounded.verdict == BgVerdict::unbounded);

  const auto down = bg_probe(g, 0.15, Vec<2>{0, -1}, {8, 16, 32, 64}, 4000, 9, {}, 4, 2);
  CHECK(down.verdict == BgVerdict::bounded);
}

TEST_CASE("conjecture scan smoke run stays flag free") {
  const auto g = example_model(1);
  const std::vector<Vec<2>> rays{Vec<2>{1, 0}, Vec<2>{-1, 0}, Vec<2>{0, 1}, Vec<2>{0, -1}};
  const auto rep = conjecture_scan(g, 0.10, 0.20, rays, {16, 32}, 40, {8, 16, 32}, 1500,
                                   12345, {}, 2);
  CHECK(rep.rows.size() == 4);
  CHECK(rep.flags == 0);
  CHECK_THROWS_AS(conjecture_scan(g, 0.2, 0.1, rays, {8}, 10, {8}, 100, 1, {}, 1),
                  spec_error);
}
