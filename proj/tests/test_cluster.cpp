#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "orperc/cluster.hpp"
#include "orperc/search.hpp"

using namespace orperc;

namespace {

GraphSpec<1> one_way_line() { return make_graph<1>({Vec<1>{1}}); }

}  // namespace

TEST_CASE("explore at p = 0 is the single origin") {
  const auto g = example_model(1);
  FieldParams params(3, 0.0);
  const auto rep = explore(g, params, Vec<2>{}, Window<2>::box(10), 1000,
                           {Vec<2>{0, 1}, Vec<2>{0, -1}, Vec<2>{1, 0}});
  CHECK(rep.visited_count == 1);
  CHECK(rep.termination == Termination::exhausted);
  for (const auto& [u, e] : rep.extent) CHECK(e == 0);
}

TEST_CASE("explore at p = 1 fills the window") {
  const auto g = example_model(1);
  FieldParams params(3, 1.0);
  const auto rep =
      explore(g, params, Vec<2>{}, Window<2>::box(10), 1000000, {Vec<2>{0, 1}});
  CHECK(rep.termination == Termination::window_hit);
  REQUIRE(rep.extent.size() == 1);
  CHECK(rep.extent[0].second == 10);
}

TEST_CASE("explore respects the budget and nests in it") {
  const auto g = example_model(1);
  FieldParams params(11, 0.8);
  const auto small = explore(g, params, Vec<2>{}, Window<2>::box(30), 50, {});
  const auto large = explore(g, params, Vec<2>{}, Window<2>::box(30), 500, {});
  CHECK(small.termination == Termination::budget_hit);
  CHECK(small.visited_count == 50);
  std::set<Vec<2>> big(large.visited.begin(), large.visited.end());
  for (const auto& v : small.visited) CHECK(big.count(v) == 1);
  // FIFO determinism: the smaller run is a prefix of the larger one.
  for (std::size_t i = 0; i < small.visited.size(); ++i)
    CHECK(small.visited[i] == large.visited[i]);
}

TEST_CASE("one-way line extents are geometric") {
  const auto g = one_way_line();
  const double p = 0.5;
  const std::int64_t reps = 10000;
  std::array<std::int64_t, 6> at_least{};  // counts extent >= n for n = 0..5
  for (std::int64_t r = 0; r < reps; ++r) {
    FieldParams params(mix_seed(404, static_cast<std::uint64_t>(r)), p);
    const auto rep = explore(g, params, Vec<1>{}, Window<1>::box(64), 1000, {Vec<1>{1}});
    for (std::int64_t n = 0; n <= 5; ++n)
      if (rep.extent[0].second >= n) ++at_least[static_cast<std::size_t>(n)];
  }
  for (std::int64_t n = 1; n <= 5; ++n) {
    const Interval ci = wilson(at_least[static_cast<std::size_t>(n)], reps, kZ99);
    const double exact = std::pow(p, static_cast<double>(n));
    CHECK(ci.lo <= exact);
    CHECK(exact <= ci.hi);
  }
}

TEST_CASE("directional survival on the one-way line matches p^n") {
  const auto g = one_way_line();
  const auto sp =
      directional_survival(g, Vec<1>{1}, 0.5, 10, survival_window<1>(10), 100000, 2027, 2);
  const double exact = std::pow(0.5, 10.0);
  const Interval ci = wilson(sp.successes, sp.reps, kZ99);
  CHECK(ci.lo <= exact);
  CHECK(exact <= ci.hi);
  CHECK(sp.boundary_flag_rate == 0.0);
}

TEST_CASE("directional survival is exactly one at p = 1") {
  const auto g = example_model(2);
  const auto sp =
      directional_survival(g, Vec<2>{0, 1}, 1.0, 32, survival_window<2>(32), 500, 5, 2);
  CHECK(sp.theta_hat == 1.0);
}

TEST_CASE("subcritical downward survival is tiny") {
  // p = 0.15 sits below the path-counting bound 1/(2 sqrt(5)) ~ 0.2236 for
  // M = 2, so survival to depth 30 is far below the cutoff.
  const auto g = example_model(2);
  const auto sp = directional_survival(g, Vec<2>{0, -1}, 0.15, 30, survival_window<2>(30),
                                       20000, 99, 2);
  CHECK(sp.theta_hat < 0.01);
}

TEST_CASE("survival rejects windows that cannot reach the threshold") {
  const auto g = one_way_line();
  CHECK_THROWS_AS(
      directional_survival(g, Vec<1>{1}, 0.5, 10, Window<1>::box(5), 100, 1, 1),
      spec_error);
}

TEST_CASE("survival couples monotonically in p and in n") {
  const auto g = example_model(1);
  const Window<2> window = survival_window<2>(12);
  TrialScratch<2> scratch(window.bbox_radius());
  for (std::uint64_t r = 0; r < 400; ++r) {
    FieldParams lo(mix_seed(8, r), 0.35), hi(mix_seed(8, r), 0.55);
    const bool s_lo =
        survival_trial(g, lo, Vec<2>{0, 1}, 12, window, std::int64_t{1} << 40, scratch).success;
    const bool s_hi =
        survival_trial(g, hi, Vec<2>{0, 1}, 12, window, std::int64_t{1} << 40, scratch).success;
    if (s_lo) CHECK(s_hi);
    const bool far =
        survival_trial(g, hi, Vec<2>{0, 1}, 12, window, std::int64_t{1} << 40, scratch).success;
    const bool near =
        survival_trial(g, hi, Vec<2>{0, 1}, 6, window, std::int64_t{1} << 40, scratch).success;
    if (far) CHECK(near);
  }
}

TEST_CASE("survival estimates are independent of the thread count") {
  const auto g = example_model(1);
  const auto one = directional_survival(g, Vec<2>{0, 1}, 0.45, 16, survival_window<2>(16),
                                        3000, 77, 1);
  const auto four = directional_survival(g, Vec<2>{0, 1}, 0.45, 16, survival_window<2>(16),
                                         3000, 77, 4);
  CHECK(one.successes == four.successes);
  CHECK(one.boundary_flag_rate == four.boundary_flag_rate);
}

TEST_CASE("visit table backends agree") {
  VisitTable<2> dense(16), hash(-1);
  std::mt19937_64 rng(91);
  std::uniform_int_distribution<std::int64_t> coord(-16, 16);
  for (int round = 0; round < 3; ++round) {
    dense.reset();
    hash.reset();
    for (int i = 0; i < 500; ++i) {
      const Vec<2> v{coord(rng), coord(rng)};
      const auto val = static_cast<std::int32_t>(i % 7);
      CHECK(dense.insert(v, val) == hash.insert(v, val));
      CHECK(dense.get(v) == hash.get(v));
    }
  }
}

TEST_CASE("estimate_pc brackets the one-way line threshold") {
  // True p_c is 1; survival p^64 >= 0.05 needs p >= 0.954.
  const auto g = one_way_line();
  const auto est = estimate_pc(g, Vec<1>{1}, 64, 0.05, 2000, 31415, 0.5, 0.995, 2);
  CHECK(est.p_hi >= 0.95);
  CHECK(est.p_lo < est.p_hi);
}

TEST_CASE("estimate_pc downward bracket respects the path-counting bound") {
  // For M = 2 the mean number of downward self-avoiding paths is summable
  // below 1/(2 sqrt(5)) ~ 0.2236, so the bracket's low end must clear 0.20.
  const auto g = example_model(2);
  const auto est =
      estimate_pc(g, Vec<2>{0, -1}, 64, 0.05, 400, 606, 0.05, 0.90, 2, 0.005, 4, 100000);
  CHECK(est.p_lo >= 0.20);
}

TEST_CASE("estimate_pc rejects non-straddling brackets") {
  const auto g = one_way_line();
  CHECK_THROWS_AS(estimate_pc(g, Vec<1>{1}, 64, 0.05, 2000, 1, 0.97, 0.995, 2),
                  refusal_error);
  CHECK_THROWS_AS(estimate_pc(g, Vec<1>{1}, 64, 0.05, 2000, 1, 0.99, 0.8, 2), spec_error);
}
