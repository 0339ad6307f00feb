#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "../support/stats.hpp"
#include "igdist/bpsim.hpp"
#include "igdist/error.hpp"
#include "igdist/graphgen.hpp"

using namespace igdist;

namespace {

ModelParams uniform_model(std::vector<std::int64_t> n, std::vector<std::int64_t> m, double p) {
  ModelParams params;
  params.P = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n.size()), static_cast<Eigen::Index>(m.size()), p);
  params.n = std::move(n);
  params.m = std::move(m);
  return params;
}

void check_adjacency_consistent(const BipartiteGraph& g) {
  std::int64_t from_objects = 0;
  for (std::int64_t v = 0; v < g.vertex_count(); ++v) {
    const auto adj = g.vertex_adj(v);
    REQUIRE(std::adjacent_find(adj.begin(), adj.end()) == adj.end());
    for (const auto u : adj) {
      const auto back = g.object_adj(u);
      REQUIRE(std::binary_search(back.begin(), back.end(), v));
    }
  }
  for (std::int64_t u = 0; u < g.object_count(); ++u) {
    const auto adj = g.object_adj(u);
    REQUIRE(std::adjacent_find(adj.begin(), adj.end()) == adj.end());
    from_objects += static_cast<std::int64_t>(adj.size());
  }
  CHECK(from_objects == g.edge_count());
}

}  // namespace

TEST_CASE("sampling extremes and determinism") {
  const auto empty = BipartiteGraph::sample(uniform_model({5, 3}, {4, 2}, 0.0), 1);
  CHECK(empty.edge_count() == 0);

  const auto full = BipartiteGraph::sample(uniform_model({5, 3}, {4, 2}, 1.0), 1);
  CHECK(full.edge_count() == 8 * 6);
  check_adjacency_consistent(full);

  ModelParams mixed;
  mixed.n = {40, 60};
  mixed.m = {50, 30};
  mixed.P.resize(2, 2);
  mixed.P << 0.05, 0.1, 0.02, 0.2;
  const auto a = BipartiteGraph::sample(mixed, 77);
  const auto b = BipartiteGraph::sample(mixed, 77);
  check_adjacency_consistent(a);
  REQUIRE(a.edge_count() == b.edge_count());
  for (std::int64_t v = 0; v < a.vertex_count(); ++v) {
    const auto x = a.vertex_adj(v);
    const auto y = b.vertex_adj(v);
    CHECK(std::equal(x.begin(), x.end(), y.begin(), y.end()));
  }
  CHECK(BipartiteGraph::sample(mixed, 78).edge_count() != a.edge_count());  // holds for these seeds
}

TEST_CASE("mean edge count at n = m = 10^4, tau = 2") {
  const auto params = uniform_model({10000}, {10000}, std::sqrt(2.0) * 1e-4);
  std::vector<double> counts;
  for (std::uint64_t seed = 0; seed < 200; ++seed)
    counts.push_back(static_cast<double>(BipartiteGraph::sample(params, derive_seed(9, "edges", seed)).edge_count()));
  const auto est = testing::mean_and_se(counts);
  const double expected = 1e8 * std::sqrt(2.0) * 1e-4;
  CHECK(std::abs(est.mean - expected) <= 3 * est.se);
}

TEST_CASE("per-vertex degree toward each object class is binomial") {
  ModelParams params;
  params.n = {200, 300};
  params.m = {40, 500};
  params.P.resize(2, 2);
  params.P << 0.1, 0.004, 0.3, 0.01;
  // Degree of type-1 vertices (index 1) toward object class 0: Bin(40, 0.3).
  std::vector<double> observed(41, 0.0);
  double total = 0;
  for (std::uint64_t seed = 0; total < 100000; ++seed) {
    const auto g = BipartiteGraph::sample(params, seed);
    for (std::int64_t i = 0; i < params.n[1]; ++i) {
      int deg = 0;
      for (const auto u : g.vertex_adj(g.vertex_id(1, i)))
        if (g.object_label(u).type == 0) ++deg;
      observed[static_cast<std::size_t>(deg)] += 1;
      total += 1;
    }
  }
  std::vector<double> probs(41);
  for (int k = 0; k <= 40; ++k) probs[static_cast<std::size_t>(k)] = testing::binomial_pmf(40, 0.3, k);
  const auto fit = testing::chi_square(observed, probs, total);
  CHECK_MESSAGE(fit.pass, "chi2 " << fit.statistic << " df " << fit.df);
}

TEST_CASE("pair_distance on a hand-built path") {
  // V = {v1, v2, v3}, U = {u1, u2}, edges v1u1, v2u1, v2u2, v3u2.
  const auto params = uniform_model({3}, {2}, 0.5);
  const auto g = BipartiteGraph::from_edges(params, {{0, 0}, {1, 0}, {1, 1}, {2, 1}});
  CHECK(pair_distance(g, 0, 2) == 2);
  CHECK(pair_distance(g, 0, 1) == 1);
  CHECK(pair_distance(g, 1, 1) == 0);

  const auto isolated = BipartiteGraph::from_edges(params, {{1, 0}, {1, 1}, {2, 1}});
  CHECK(pair_distance(isolated, 0, 1) == kInfiniteDistance);
  CHECK_THROWS_AS(pair_distance(g, 0, 3), Error);
}

TEST_CASE("pair_distance agrees with Floyd-Warshall on every 3+3 graph") {
  const auto params = uniform_model({3}, {3}, 0.5);
  constexpr std::int64_t inf = 1 << 20;
  for (int mask = 0; mask < (1 << 9); ++mask) {
    std::vector<std::pair<std::int64_t, std::int64_t>> edges;
    for (int bit = 0; bit < 9; ++bit)
      if (mask & (1 << bit)) edges.emplace_back(bit / 3, bit % 3);
    const auto g = BipartiteGraph::from_edges(params, edges);

    // Materialized intersection graph.
    std::int64_t dist[3][3];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        bool share = false;
        for (int u = 0; u < 3; ++u) share |= (mask & (1 << (a * 3 + u))) && (mask & (1 << (b * 3 + u)));
        dist[a][b] = a == b ? 0 : (share ? 1 : inf);
      }
    for (int k = 0; k < 3; ++k)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) dist[a][b] = std::min(dist[a][b], dist[a][k] + dist[k][b]);

    auto bfs = [&](int a, int b) {
      const auto d = pair_distance(g, a, b);
      return d == kInfiniteDistance ? inf : d;
    };
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        REQUIRE(bfs(a, b) == dist[a][b]);
        REQUIRE(bfs(a, b) == bfs(b, a));
        for (int c = 0; c < 3; ++c) REQUIRE(bfs(a, c) <= bfs(a, b) + bfs(b, c));
      }
  }
}

TEST_CASE("empirical distance law extremes") {
  const auto complete = empirical_distance_law(uniform_model({6}, {4}, 1.0), 0, 0, 50, 3);
  CHECK(complete.total == 50);
  CHECK(complete.counts.size() == 1);
  CHECK(complete.counts.at(1) == 50);

  const auto none = empirical_distance_law(uniform_model({6}, {4}, 0.0), 0, 0, 50, 3);
  CHECK(none.infinite_count == 50);
  CHECK(none.to_csv() == "distance,count\ninf,50\n");

  DistanceLaw law;
  law.add(1);
  law.add(3);
  law.add(3);
  law.add(kInfiniteDistance);
  CHECK(law.total == 4);
  CHECK(law.exceedance(1) == doctest::Approx(0.75));
  CHECK(law.exceedance(3) == doctest::Approx(0.25));
  CHECK(law.to_csv() == "distance,count\n1,1\n3,2\ninf,1\n");

  ModelParams two_types;
  two_types.n = {1, 5};
  two_types.m = {4};
  two_types.P = Eigen::MatrixXd::Constant(2, 1, 0.5);
  // n_1 = 1 violates the model constraints before the pair check.
  CHECK_THROWS_AS(empirical_distance_law(two_types, 0, 0, 10, 1), Error);
}

TEST_CASE("empirical law is worker-count invariant") {
  const auto params = uniform_model({300}, {300}, 0.006);
  const auto one = empirical_distance_law(params, 0, 0, 200, 42, 1);
  const auto four = empirical_distance_law(params, 0, 0, 200, 42, 4);
  CHECK(one.to_csv() == four.to_csv());
}

TEST_CASE("infinite-distance mass matches branching survival at n = m = 10^4") {
  const auto params = uniform_model({10000}, {10000}, std::sqrt(2.0) * 1e-4);
  const auto law = empirical_distance_law(params, 0, 0, 2000, 2026);
  const double surv = survival_prob(params)(0);
  CHECK(std::abs(law.infinite_fraction() - (1.0 - surv * surv)) <= 0.05);
}
