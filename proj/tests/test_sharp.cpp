#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "orperc/sharp_transition.hpp"

using namespace orperc;

namespace {

GraphSpec<1> one_way_line() { return make_graph<1>({Vec<1>{1}}); }

// Line segment {-cap..k} as the sublevel set of Psi_{e1} at level k.
FiniteSet<1> line_segment(std::int64_t k, std::int64_t cap) {
  return sublevel_set<1>(SubadditiveWeight<1>::linear(Vec<1>{1}), k, cap);
}

}  // namespace

TEST_CASE("finite sets recompute psi_sup and require the origin") {
  const auto psi = SubadditiveWeight<2>::linear(Vec<2>{0, 1});
  const auto s = make_finite_set<2>({Vec<2>{}, Vec<2>{1, 3}, Vec<2>{0, -2}}, psi);
  CHECK(s.psi_sup == Frac::of(3));
  CHECK_THROWS_AS(make_finite_set<2>({Vec<2>{1, 0}}, psi), spec_error);
}

TEST_CASE("boundary of the origin set is its out-edge list") {
  const auto g = example_model(1);
  const auto psi = SubadditiveWeight<2>::linear(Vec<2>{0, 1});
  const auto s = make_finite_set<2>({Vec<2>{}}, psi);
  const auto edges = boundary(g, s);
  REQUIRE(edges.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(edges[i].tail == Vec<2>{});
    CHECK(edges[i].dir_index == static_cast<std::int32_t>(i));
  }
}

TEST_CASE("boundary of a line segment is the single exit edge") {
  const auto g = one_way_line();
  for (std::int64_t k : {0, 2, 5}) {
    const auto edges = boundary(g, line_segment(k, 8));
    REQUIRE(edges.size() == 1);
    CHECK(edges[0].tail == Vec<1>{k});
  }
}

TEST_CASE("boundary matches an independent enumeration") {
  // Sublevel of Psi_{e2} at level 0, truncated to the box of radius 2.
  const auto g = example_model(1);
  const auto psi = SubadditiveWeight<2>::linear(Vec<2>{0, 1});
  const auto s = sublevel_set<2>(psi, 0, 2);
  CHECK(s.vertices.size() == 15);  // rows -2..0, columns -2..2

  std::set<std::pair<Vec<2>, std::int32_t>> expected;
  for (std::int64_t x1 = -2; x1 <= 2; ++x1)
    for (std::int64_t x2 = -2; x2 <= 0; ++x2)
      for (std::int32_t di = 0; di < g.degree(); ++di) {
        const Vec<2> tail{x1, x2};
        const Vec<2> head = tail + g.dirs[static_cast<std::size_t>(di)];
        const bool head_in =
            head.c[0] >= -2 && head.c[0] <= 2 && head.c[1] >= -2 && head.c[1] <= 0;
        if (!head_in) expected.insert({tail, di});
      }
  const auto edges = boundary(g, s);
  CHECK(edges.size() == expected.size());
  for (const auto& e : edges) CHECK(expected.count({e.tail, e.dir_index}) == 1);
}

TEST_CASE("restricted connectivity basics") {
  const auto g = one_way_line();
  for (std::int64_t k : {1, 3, 5}) {
    const auto s = line_segment(k, 8);
    for (double p : {0.3, 0.7}) {
      CHECK(restricted_connectivity(g, s, p, Vec<1>{}, ConnMode::exact_mode()) == 1.0);
      const double got = restricted_connectivity(g, s, p, Vec<1>{k}, ConnMode::exact_mode());
      CHECK_THAT(got, Catch::Matchers::WithinAbs(std::pow(p, static_cast<double>(k)), 1e-12));
    }
  }
}

TEST_CASE("restricted connectivity exact agrees with Monte Carlo") {
  const auto g = example_model(1);
  const auto psi = SubadditiveWeight<2>::linear(Vec<2>{0, 1});
  const auto s = sublevel_set<2>(psi, 1, 1);  // box of radius 1
  const double exact =
      restricted_connectivity(g, s, 0.5, Vec<2>{0, 1}, ConnMode::exact_mode());
  const std::int64_t reps = 100000;
  const double mc =
      restricted_connectivity(g, s, 0.5, Vec<2>{0, 1}, ConnMode::mc(reps, 4242, 2));
  const double sigma = std::sqrt(exact * (1.0 - exact) / static_cast<double>(reps));
  CHECK(std::abs(mc - exact) < 4.0 * sigma);
}

TEST_CASE("phi on forced instances") {
  const auto g = example_model(1);
  const auto psi = SubadditiveWeight<2>::linear(Vec<2>{0, 1});
  const auto origin_only = make_finite_set<2>({Vec<2>{}}, psi);
  const auto ph = phi(g, origin_only, 0.2, ConnMode::exact_mode());
  CHECK(ph.exact);
  CHECK(ph.boundary_size == 4);
  CHECK_THAT(ph.value, Catch::Matchers::WithinAbs(0.8, 1e-12));

  const auto line = one_way_line();
  for (std::int64_t k : {0, 2, 4}) {
    const auto seg = line_segment(k, 8);
    const auto pk = phi(line, seg, 0.5, ConnMode::exact_mode());
    CHECK_THAT(pk.value,
               Catch::Matchers::WithinAbs(std::pow(0.5, static_cast<double>(k + 1)), 1e-12));
  }
}

TEST_CASE("phi is monotone in p and bounded by p times the boundary") {
  const auto g = example_model(1);
  const auto psi = SubadditiveWeight<2>::linear(Vec<2>{0, -1});
  const auto s = sublevel_set<2>(psi, 1, 1);
  double prev = 0.0;
  for (double p : {0.05, 0.2, 0.4, 0.6, 0.8, 0.95}) {
    const auto ph = phi(g, s, p, ConnMode::exact_mode());
    CHECK(ph.value >= prev);
    CHECK(ph.value <= p * static_cast<double>(ph.boundary_size) + 1e-12);
    prev = ph.value;
  }
}

TEST_CASE("phi Monte Carlo tracks the exact value") {
  const auto g = example_model(1);
  const auto psi = SubadditiveWeight<2>::linear(Vec<2>{0, -1});
  const auto s = sublevel_set<2>(psi, 1, 1);
  const auto exact = phi(g, s, 0.3, ConnMode::exact_mode());
  const auto mc = phi(g, s, 0.3, ConnMode::mc(60000, 777, 2));
  CHECK(mc.ci_low <= exact.value);
  CHECK(exact.value <= mc.ci_high);
  const double spread = mc.ci_high - mc.ci_low;
  CHECK(std::abs(mc.value - exact.value) < 2.0 * spread + 1e-9);
}

TEST_CASE("exact mode refuses sets above the enumeration cap") {
  const auto g = example_model(1);
  const auto psi = SubadditiveWeight<2>::linear(Vec<2>{0, -1});
  const auto big = sublevel_set<2>(psi, 2, 4);
  CHECK_THROWS_AS(phi(g, big, 0.3, ConnMode::exact_mode()), refusal_error);
  CHECK_THROWS_AS(restricted_connectivity(g, big, 0.3, Vec<2>{0, 1}, ConnMode::exact_mode()),
                  refusal_error);
}

TEST_CASE("find_good_set fails cleanly in the supercritical phase") {
  const auto g = example_model(1);
  const auto psi = SubadditiveWeight<2>::linear(Vec<2>{0, -1});
  const auto cert = find_good_set(g, psi, 0.9, 2, 4, 2000, 3, 2);
  CHECK_FALSE(cert.has_value());
}

TEST_CASE("find_good_set on the one-way line") {
  const auto line = one_way_line();
  const auto psi = SubadditiveWeight<1>::linear(Vec<1>{1});
  const auto cert = find_good_set(line, psi, 0.5, 4, 8);
  REQUIRE(cert.has_value());
  CHECK(cert->phi.value < 1.0);
  CHECK_THAT(cert->phi.value, Catch::Matchers::WithinAbs(0.5, 1e-12));  // k = 0 already works
  CHECK(cert->L == 1);
}

TEST_CASE("find_good_set at p = 0 certifies the smallest sublevel") {
  const auto g = example_model(2);
  const auto psi = SubadditiveWeight<2>::linear(Vec<2>{0, -1});
  const auto cert = find_good_set(g, psi, 0.0, 0, 1);
  REQUIRE(cert.has_value());
  CHECK(cert->phi.value == 0.0);
}

TEST_CASE("find_good_set certifies a subcritical downward direction") {
  const auto g = example_model(1);
  const auto psi = SubadditiveWeight<2>::linear(Vec<2>{0, -1});
  const auto cert = find_good_set(g, psi, 0.10, 6, 8, 4000, 11, 2);
  REQUIRE(cert.has_value());
  CHECK(cert->phi.ci_high < 1.0);
  CHECK(cert->p == 0.10);
}

TEST_CASE("verify_decay against the closed form on the line") {
  const auto line = one_way_line();
  const auto psi = SubadditiveWeight<1>::linear(Vec<1>{1});
  DecayCertificate<1> cert;
  cert.S = make_finite_set<1>({Vec<1>{}}, psi);
  cert.psi = psi;
  cert.p = 0.5;
  cert.phi = phi(line, cert.S, 0.5, ConnMode::exact_mode());
  cert.L = decay_scale(line, cert.S, psi);
  REQUIRE(cert.L == 1);
  REQUIRE_THAT(cert.phi.value, Catch::Matchers::WithinAbs(0.5, 1e-12));

  const auto rows = verify_decay(line, cert, 1, 4, 40000, 2718, 2);
  for (const auto& row : rows) {
    CHECK_FALSE(row.flag);
    // Exact escape probability on the line: p^(2k+1).
    const double exact = std::pow(0.5, static_cast<double>(2 * row.k + 1));
    CHECK(row.ci_low <= exact);
    CHECK(exact <= row.ci_high);
    CHECK(row.predicted == std::pow(0.5, static_cast<double>(row.k)));
  }
}

TEST_CASE("verify_decay at p = 0 sees no escapes") {
  const auto g = example_model(1);
  const auto psi = SubadditiveWeight<2>::linear(Vec<2>{0, -1});
  DecayCertificate<2> cert;
  cert.S = sublevel_set<2>(psi, 0, 1);
  cert.psi = psi;
  cert.p = 0.0;
  cert.phi = phi(g, cert.S, 0.0, ConnMode::exact_mode());
  cert.L = decay_scale(g, cert.S, psi);
  const auto rows = verify_decay(g, cert, 1, 3, 2000, 5, 2);
  for (const auto& row : rows) {
    CHECK(row.estimate == 0.0);
    CHECK_FALSE(row.flag);
  }
}

TEST_CASE("theta lower bound formula") {
  CHECK_THAT(theta_lower_bound(0.5, 0.25), Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
  CHECK(theta_lower_bound(0.3, 0.3) == 0.0);
  CHECK_THAT(theta_lower_bound(0.999999, 0.25),
             Catch::Matchers::WithinAbs(1.0, 1e-4));
  CHECK_THROWS_AS(theta_lower_bound(0.2, 0.3), spec_error);
  CHECK_THROWS_AS(theta_lower_bound(1.0, 0.3), spec_error);
  CHECK_THROWS_AS(theta_lower_bound(0.5, 0.0), spec_error);
}
