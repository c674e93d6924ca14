// Copyright 2026 The lcshap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lcshap/graph.h"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <set>

#include "doctest.h"
#include "lcshap/errors.h"

using namespace lcshap;

namespace {

// Floyd-Warshall over the edge list; independent of the BFS in the library.
std::vector<std::vector<std::size_t>> all_pairs(const FeatureGraph& g) {
  const std::size_t n = g.num_nodes();
  const std::size_t inf = std::numeric_limits<std::size_t>::max() / 4;
  std::vector<std::vector<std::size_t>> dist(n, std::vector<std::size_t>(n, inf));
  for (std::size_t i = 0; i < n; ++i) dist[i][i] = 0;
  for (auto [a, b] : g.edges()) dist[a][b] = dist[b][a] = 1;
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) dist[i][j] = std::min(dist[i][j], dist[i][m] + dist[m][j]);
    }
  }
  return dist;
}

// Connectivity by repeated edge relaxation inside the subset.
bool brute_connected(const FeatureGraph& g, const FeatureSubset& s) {
  const auto members = s.members();
  if (members.empty()) return false;
  std::set<std::size_t> reached{members.front()};
  bool grew = true;
  while (grew) {
    grew = false;
    for (auto [a, b] : g.edges()) {
      if (!s.contains(a) || !s.contains(b)) continue;
      if (reached.count(a) != reached.count(b)) {
        reached.insert(a);
        reached.insert(b);
        grew = true;
      }
    }
  }
  return reached.size() == members.size();
}

std::vector<FeatureSubset> brute_connected_subsets(const FeatureGraph& g, std::size_t i,
                                                   std::size_t k) {
  const auto dist = all_pairs(g);
  std::vector<FeatureSubset> out;
  const std::size_t d = g.num_nodes();
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << d); ++m) {
    const auto s = FeatureSubset::from_mask(d, m);
    if (!s.contains(i)) continue;
    bool inside = true;
    s.for_each([&](std::size_t j) { inside = inside && dist[i][j] <= k; });
    if (inside && brute_connected(g, s)) out.push_back(s);
  }
  std::sort(out.begin(), out.end(), canonical_less);
  return out;
}

}  // namespace

TEST_CASE("chain_graph examples") {
  CHECK(chain_graph(1).edges().empty());
  CHECK(chain_graph(3).edges() == std::vector<Edge>{{0, 1}, {1, 2}});
  const auto g5 = chain_graph(5);
  const auto dist = all_pairs(g5);
  std::size_t diam = 0;
  for (const auto& row : dist) diam = std::max(diam, *std::max_element(row.begin(), row.end()));
  CHECK(diam == 4);
  CHECK(g5.diameter() == 4);
  CHECK_THROWS_AS(chain_graph(0), DimensionError);
}

TEST_CASE("grid_graph examples") {
  CHECK(grid_graph(1, 6).edges() == chain_graph(6).edges());
  CHECK(grid_graph(2, 2).edges().size() == 4);
  CHECK(grid_graph(3, 3).neighbors(4).size() == 4);
  CHECK_THROWS_AS(grid_graph(0, 3), DimensionError);
  CHECK_THROWS_AS(grid_graph(3, 0), DimensionError);
}

TEST_CASE("graph validation") {
  CHECK_THROWS_AS(FeatureGraph(3, {{0, 0}, {1, 2}}), PreconditionError);
  CHECK_THROWS_AS(FeatureGraph(3, {{0, 1}, {1, 0}, {1, 2}}), PreconditionError);
  CHECK_THROWS_AS(FeatureGraph(3, {{0, 1}}), PreconditionError);  // disconnected
  CHECK_THROWS_AS(FeatureGraph(3, {{0, 3}}), IndexError);
}

TEST_CASE("graph_distance examples") {
  CHECK(graph_distance(chain_graph(5), 0, 4) == 4);
  CHECK(graph_distance(grid_graph(3, 3), 0, 8) == 4);
  const auto g = grid_graph(3, 4);
  const auto dist = all_pairs(g);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(graph_distance(g, i, i) == 0);
    for (std::size_t j = 0; j < 12; ++j) {
      CHECK(graph_distance(g, i, j) == dist[i][j]);
      CHECK(graph_distance(g, i, j) == graph_distance(g, j, i));
      // Manhattan distance on the 4-connected lattice.
      const auto manhattan = static_cast<std::size_t>(
          std::abs(static_cast<int>(i / 4) - static_cast<int>(j / 4)) +
          std::abs(static_cast<int>(i % 4) - static_cast<int>(j % 4)));
      CHECK(dist[i][j] == manhattan);
    }
  }
  CHECK_THROWS_AS(graph_distance(g, 0, 12), IndexError);
}

TEST_CASE("k_neighborhood examples and properties") {
  const auto chain = chain_graph(5);
  CHECK(k_neighborhood(chain, 2, 1).to_string() == "{1,2,3}");
  CHECK(k_neighborhood(chain, 0, 2).to_string() == "{0,1,2}");
  const auto grid = grid_graph(5, 5);
  std::size_t ball = 0;
  for (int r = -2; r <= 2; ++r) {
    for (int c = -2; c <= 2; ++c) ball += std::abs(r) + std::abs(c) <= 2 ? 1 : 0;
  }
  CHECK(k_neighborhood(grid, 12, 2).size() == ball);
  CHECK(ball == 13);
  CHECK_THROWS_AS(k_neighborhood(grid, 25, 1), IndexError);

  for (const auto& g : {chain_graph(7), grid_graph(3, 4)}) {
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
      CHECK(k_neighborhood(g, i, 0).to_string() == "{" + std::to_string(i) + "}");
      for (std::size_t k = 0; k < g.diameter(); ++k) {
        CHECK(k_neighborhood(g, i, k).contains(i));
        CHECK(k_neighborhood(g, i, k).is_subset_of(k_neighborhood(g, i, k + 1)));
      }
      CHECK(k_neighborhood(g, i, g.diameter()).size() == g.num_nodes());
    }
  }
}

TEST_CASE("connected subsets: chain example") {
  ConnectedSubsetLimits limits;
  limits.max_size = 3;
  const auto subsets = connected_subsets_containing(chain_graph(5), 2, 1, limits);
  REQUIRE(subsets.size() == 4);
  CHECK(subsets[0].to_string() == "{2}");
  CHECK(subsets[1].to_string() == "{1,2}");
  CHECK(subsets[2].to_string() == "{2,3}");
  CHECK(subsets[3].to_string() == "{1,2,3}");
}

TEST_CASE("connected subsets on chains are the intervals containing i") {
  for (std::size_t d = 1; d <= 12; ++d) {
    const auto g = chain_graph(d);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t k = 0; k <= 4; ++k) {
        const auto got = connected_subsets_containing(g, i, k);
        const std::size_t a = std::min(k, i);
        const std::size_t b = std::min(k, d - 1 - i);
        CHECK(got.size() == (a + 1) * (b + 1));
        if (d <= 9) CHECK(got == brute_connected_subsets(g, i, k));
        for (const auto& u : got) CHECK(connected_components(g, u) == std::vector<FeatureSubset>{u});
      }
    }
  }
}

TEST_CASE("connected subsets on grids match brute force") {
  const auto g = grid_graph(3, 4);
  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t k = 1; k <= 3; ++k) {
      CHECK(connected_subsets_containing(g, i, k) == brute_connected_subsets(g, i, k));
    }
  }
  // A diagonal pair around the target is a disconnected subset of N_2(i); a
  // straight bar through it is connected.
  const auto g5 = grid_graph(5, 5);
  const auto conn = connected_subsets_containing(g5, 12, 2);
  const FeatureSubset disconnected(25, {12, 6, 18});
  const FeatureSubset connected(25, {12, 7, 2, 13});
  CHECK(std::find(conn.begin(), conn.end(), disconnected) == conn.end());
  CHECK(std::find(conn.begin(), conn.end(), connected) != conn.end());
}

TEST_CASE("connected subsets on a general graph match brute force") {
  const FeatureGraph g(7, {{0, 1}, {1, 2}, {2, 0}, {2, 3}, {3, 4}, {4, 5}, {5, 3}, {5, 6}});
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t k = 0; k <= 4; ++k) {
      CHECK(connected_subsets_containing(g, i, k) == brute_connected_subsets(g, i, k));
    }
  }
}

TEST_CASE("connected subset limits") {
  ConnectedSubsetLimits limits;
  limits.budget = 10;
  try {
    connected_subsets_containing(grid_graph(5, 5), 12, 2, limits);
    FAIL("expected a budget error");
  } catch (const BudgetExceededError& e) {
    CHECK(e.count() == 11);
  }
  limits = {};
  limits.max_size = 2;
  for (const auto& u : connected_subsets_containing(grid_graph(5, 5), 12, 2, limits)) {
    CHECK(u.size() <= 2);
  }
}

TEST_CASE("connected_components examples and properties") {
  const auto g = chain_graph(5);
  const FeatureSubset s(5, {0, 1, 3});
  const auto comps = connected_components(g, s);
  REQUIRE(comps.size() == 2);
  CHECK(comps[0].to_string() == "{0,1}");
  CHECK(comps[1].to_string() == "{3}");
  CHECK(connected_components(g, FeatureSubset(5)).empty());
  CHECK(connected_components(g, FeatureSubset(5, {1, 2, 3})).size() == 1);

  const auto grid = grid_graph(3, 3);
  for (std::uint64_t m = 0; m < 512; ++m) {
    const auto sub = FeatureSubset::from_mask(9, m);
    FeatureSubset united(9);
    for (const auto& c : connected_components(grid, sub)) {
      CHECK_FALSE(united.intersects(c));
      CHECK(brute_connected(grid, c));
      united = united | c;
    }
    CHECK(united == sub);
  }
}

TEST_CASE("graph json round trip") {
  for (const auto& g : {chain_graph(4), grid_graph(2, 3),
                        FeatureGraph(4, {{0, 1}, {1, 2}, {1, 3}})}) {
    const auto back = graph_from_json(graph_to_json(g));
    CHECK(back.edges() == g.edges());
    CHECK(back.kind() == g.kind());
  }
  CHECK(graph_to_json(grid_graph(2, 3)).dump() == R"({"cols":3,"d":6,"kind":"grid","rows":2})");
  CHECK_THROWS_AS(graph_from_json(nlohmann::json{{"kind", "ring"}, {"d", 3}}), ConfigurationError);
}

TEST_CASE("graph spec strings") {
  CHECK(parse_graph_spec("chain", 6).num_nodes() == 6);
  CHECK(parse_graph_spec("grid 2x3", 6).kind() == GraphKind::kGrid);
  CHECK(parse_graph_spec("grid:3x2", 6).rows() == 3);
  CHECK_THROWS_AS(parse_graph_spec("tree", 6), ConfigurationError);
}
