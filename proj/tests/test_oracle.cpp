#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <set>

#include "orperc/cluster.hpp"
#include "orperc/fpp.hpp"
#include "orperc/oracle.hpp"

using namespace orperc;

namespace {

GraphSpec<1> one_way_line() { return make_graph<1>({Vec<1>{1}}); }

}  // namespace

TEST_CASE("enumeration task materializes windows deterministically") {
  const auto g = example_model(1);
  const auto task = make_enumeration_task(g, Window<2>::box(1));
  CHECK(task.vertices.size() == 9);
  CHECK(task.edges.size() == 20);
  for (std::size_t i = 1; i < task.edges.size(); ++i) {
    const auto a = std::make_pair(task.vertices[static_cast<std::size_t>(task.edges[i - 1].first)],
                                  task.edge_dir[i - 1]);
    const auto b = std::make_pair(task.vertices[static_cast<std::size_t>(task.edges[i].first)],
                                  task.edge_dir[i]);
    CHECK(a < b);
  }
}

TEST_CASE("exact event probability of a single edge") {
  const auto g = one_way_line();
  const auto task = make_enumeration_task(g, Window<1>::box(3));
  for (double p : {0.0, 0.25, 0.6, 1.0}) {
    const long double got =
        exact_event_probability(task, p, [](std::uint64_t mask) { return (mask & 1) != 0; });
    CHECK_THAT(static_cast<double>(got), Catch::Matchers::WithinAbs(p, 1e-12));
  }
}

TEST_CASE("exact connectivity along the line is p^k") {
  const auto g = one_way_line();
  const auto task = make_enumeration_task(g, Window<1>::box(5));
  const int origin = task.vertex_index(Vec<1>{});
  for (std::int64_t k : {1, 3, 5}) {
    for (double p : {0.3, 0.7}) {
      std::vector<char> reached;
      std::vector<int> queue;
      const long double got = exact_event_probability(task, p, [&](std::uint64_t mask) {
        reach_open(task, mask, origin, reached, queue);
        return reached[static_cast<std::size_t>(task.vertex_index(Vec<1>{k}))] != 0;
      });
      CHECK_THAT(static_cast<double>(got),
                 Catch::Matchers::WithinAbs(std::pow(p, static_cast<double>(k)), 1e-12));
    }
  }
}

TEST_CASE("deterministic endpoints of event probabilities") {
  const auto g = example_model(1);
  const auto task = make_enumeration_task(g, Window<2>::box(1));
  const int origin = task.vertex_index(Vec<2>{});
  std::vector<char> reached;
  std::vector<int> queue;
  auto reach_top = [&](std::uint64_t mask) {
    reach_open(task, mask, origin, reached, queue);
    for (std::size_t vi = 0; vi < task.vertices.size(); ++vi)
      if (reached[vi] && task.vertices[vi].c[1] >= 1) return true;
    return false;
  };
  CHECK(static_cast<double>(exact_event_probability(task, 0.0, reach_top)) == 0.0);
  CHECK(static_cast<double>(exact_event_probability(task, 1.0, reach_top)) == 1.0);
}

TEST_CASE("exact passage distribution basics") {
  const auto g = one_way_line();
  const auto task = make_enumeration_task(g, Window<1>::box(2));
  const auto self = exact_passage_distribution(task, 0.4, Vec<1>{}, Vec<1>{});
  REQUIRE(self.size() == 1);
  CHECK_THAT(static_cast<double>(self.at(0)), Catch::Matchers::WithinAbs(1.0, 1e-12));

  // t(0,2) = Binomial(2, 1-p) on the one-way line.
  for (double p : {0.2, 0.5, 0.9}) {
    const auto dist = exact_passage_distribution(task, p, Vec<1>{}, Vec<1>{2});
    CHECK_THAT(static_cast<double>(dist.at(0)), Catch::Matchers::WithinAbs(p * p, 1e-12));
    CHECK_THAT(static_cast<double>(dist.at(1)),
               Catch::Matchers::WithinAbs(2 * p * (1 - p), 1e-12));
    CHECK_THAT(static_cast<double>(dist.at(2)),
               Catch::Matchers::WithinAbs((1 - p) * (1 - p), 1e-12));
    CHECK(dist.count(kUnreachableTime) == 0);
  }
}

TEST_CASE("unreachable atom is structural") {
  const auto g = one_way_line();
  const auto task = make_enumeration_task(g, Window<1>::box(2));
  const auto dist = exact_passage_distribution(task, 0.5, Vec<1>{1}, Vec<1>{-1});
  REQUIRE(dist.size() == 1);
  CHECK_THAT(static_cast<double>(dist.at(kUnreachableTime)),
             Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("monte carlo exploration matches the oracle on a small window") {
  const auto g = example_model(1);
  const Window<2> window = Window<2>::box(1);
  const auto task = make_enumeration_task(g, window);
  REQUIRE(task.edges.size() <= 22);

  const int origin = task.vertex_index(Vec<2>{});
  std::vector<char> reached;
  std::vector<int> queue;
  const double p = 0.5;
  const double exact =
      static_cast<double>(exact_event_probability(task, p, [&](std::uint64_t mask) {
        reach_open(task, mask, origin, reached, queue);
        for (std::size_t vi = 0; vi < task.vertices.size(); ++vi)
          if (reached[vi] && task.vertices[vi].c[1] >= 1) return true;
        return false;
      }));

  const std::int64_t reps = 100000;
  std::int64_t hits = 0;
  for (std::int64_t r = 0; r < reps; ++r) {
    FieldParams params(mix_seed(8080, static_cast<std::uint64_t>(r)), p);
    const auto rep = explore(g, params, Vec<2>{}, window, 1000, {Vec<2>{0, 1}});
    if (rep.extent[0].second >= 1) ++hits;
  }
  const double mc = static_cast<double>(hits) / static_cast<double>(reps);
  const double sigma = std::sqrt(exact * (1.0 - exact) / static_cast<double>(reps));
  CHECK(std::abs(mc - exact) < 4.0 * sigma);
}

TEST_CASE("monte carlo passage times match the oracle mean") {
  const auto g = example_model(1);
  const Window<2> window = Window<2>::box(1);
  const auto task = make_enumeration_task(g, window);
  const double p = 0.45;
  const auto dist = exact_passage_distribution(task, p, Vec<2>{-1, -1}, Vec<2>{1, 1});

  double exact_mean = 0.0, unreachable_mass = 0.0, second = 0.0;
  for (const auto& [t, mass] : dist) {
    if (t == kUnreachableTime) {
      unreachable_mass += static_cast<double>(mass);
    } else {
      exact_mean += static_cast<double>(t) * static_cast<double>(mass);
      second += static_cast<double>(t) * static_cast<double>(t) * static_cast<double>(mass);
    }
  }
  REQUIRE(unreachable_mass == 0.0);  // both endpoints connect inside the box
  const double var = second - exact_mean * exact_mean;

  const std::int64_t reps = 100000;
  MeanVar mv;
  for (std::int64_t r = 0; r < reps; ++r) {
    FieldParams params(mix_seed(9090, static_cast<std::uint64_t>(r)), p);
    const auto res = passage_time(g, params, Vec<2>{-1, -1}, Vec<2>{1, 1}, window);
    REQUIRE(res.time.has_value());
    mv.add(static_cast<double>(*res.time));
  }
  const double sigma = std::sqrt(var / static_cast<double>(reps));
  CHECK(std::abs(mv.mean() - exact_mean) < 4.0 * sigma);
}

TEST_CASE("path count bound arithmetic") {
  const auto out = path_count_bound(2, 0.2, 3, 40);
  REQUIRE(out.closed_bound.has_value());
  CHECK_THAT(static_cast<double>(*out.closed_bound), Catch::Matchers::WithinAbs(0.32, 1e-12));
  CHECK(static_cast<double>(out.partial_sum) <= 0.32 + 1e-12);

  long double prev = -1.0L;
  for (std::int64_t l = 0; l <= 60; l += 5) {
    const auto pb = path_count_bound(2, 0.2, 3, l);
    CHECK(pb.partial_sum >= prev);
    CHECK(static_cast<double>(pb.partial_sum) <= 0.32 + 1e-12);
    prev = pb.partial_sum;
  }

  CHECK(static_cast<double>(path_count_bound(3, 0.1, 0, 0).partial_sum) == 1.0);
  CHECK(static_cast<double>(path_count_bound(3, 0.0, 4, 10).partial_sum) == 0.0);
  CHECK_FALSE(path_count_bound(2, 0.5, 3, 5).closed_bound.has_value());
}

namespace {

// Expected number of open self-avoiding paths from 0 to the line y = -n
// inside a small box, by direct weighted DFS.
double sap_expectation(const GraphSpec<2>& g, std::int64_t radius, std::int64_t n, double p) {
  double total = 0.0;
  std::set<Vec<2>> on_path;
  std::vector<Vec<2>> stack;
  std::function<void(const Vec<2>&, double)> dfs = [&](const Vec<2>& x, double weight) {
    if (x.c[1] <= -n) {
      total += weight;
      return;  // stop at first arrival: paths to the line end there
    }
    for (const auto& d : g.dirs) {
      const Vec<2> y = x + d;
      if (y.linf() > radius) continue;
      if (on_path.count(y)) continue;
      on_path.insert(y);
      dfs(y, weight * p);
      on_path.erase(y);
    }
  };
  on_path.insert(Vec<2>{});
  dfs(Vec<2>{}, 1.0);
  return total;
}

}  // namespace

TEST_CASE("window-restricted path expectation never exceeds the bound") {
  const auto g = example_model(2);
  const double p = 0.2;
  const std::int64_t radius = 2, n = 2;
  const double exhaustive = sap_expectation(g, radius, n, p);
  // Paths inside the box use at most (2 radius + 1)^2 vertices, so the
  // number of up-steps is far below this l_max.
  const auto bound = path_count_bound(2, p, n, 12);
  CHECK(exhaustive <= static_cast<double>(bound.partial_sum) + 1e-12);
  CHECK(exhaustive > 0.0);
}
