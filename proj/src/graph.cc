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
#include <deque>
#include <limits>
#include <set>

#include "lcshap/errors.h"

namespace lcshap {

namespace {

constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();

}  // namespace

FeatureGraph::FeatureGraph(std::size_t num_nodes, std::vector<Edge> edges,
                           GraphKind kind, std::size_t rows, std::size_t cols)
    : adjacency_(num_nodes), kind_(kind), rows_(rows), cols_(cols) {
  if (num_nodes == 0) throw DimensionError("graph needs at least one node");
  std::set<Edge> seen;
  for (auto [a, b] : edges) {
    if (a >= num_nodes || b >= num_nodes) {
      throw IndexError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                       ") references a node outside 0.." +
                       std::to_string(num_nodes - 1));
    }
    if (a == b) throw PreconditionError("self-loop at node " + std::to_string(a));
    const Edge e{std::min(a, b), std::max(a, b)};
    if (!seen.insert(e).second) {
      throw PreconditionError("duplicate edge (" + std::to_string(e.first) + "," +
                              std::to_string(e.second) + ")");
    }
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  edges_.assign(seen.begin(), seen.end());
  for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());

  const auto dist = distances_from(0);
  if (std::any_of(dist.begin(), dist.end(),
                  [](std::size_t x) { return x == kUnreached; })) {
    throw PreconditionError("feature graph must be connected");
  }
}

const std::vector<std::size_t>& FeatureGraph::neighbors(std::size_t i) const {
  check_node(i);
  return adjacency_[i];
}

bool FeatureGraph::adjacent(std::size_t i, std::size_t j) const {
  const auto& nbrs = neighbors(i);
  return std::binary_search(nbrs.begin(), nbrs.end(), j);
}

void FeatureGraph::check_node(std::size_t i) const {
  if (i >= adjacency_.size()) {
    throw IndexError("node " + std::to_string(i) + " out of range for graph with " +
                     std::to_string(adjacency_.size()) + " nodes");
  }
}

std::vector<std::size_t> FeatureGraph::distances_from(std::size_t source) const {
  check_node(source);
  std::vector<std::size_t> dist(adjacency_.size(), kUnreached);
  std::deque<std::size_t> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t w : adjacency_[u]) {
      if (dist[w] == kUnreached) {
        dist[w] = dist[u] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

std::size_t FeatureGraph::diameter() const {
  std::size_t best = 0;
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    const auto dist = distances_from(i);
    best = std::max(best, *std::max_element(dist.begin(), dist.end()));
  }
  return best;
}

FeatureSubset FeatureGraph::boundary(const FeatureSubset& s) const {
  FeatureSubset out(num_nodes());
  s.for_each([&](std::size_t u) {
    for (std::size_t w : adjacency_[u]) {
      if (!s.contains(w)) out.insert(w);
    }
  });
  return out;
}

FeatureGraph chain_graph(std::size_t d) {
  if (d == 0) throw DimensionError("chain_graph: d must be positive");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < d; ++i) edges.emplace_back(i, i + 1);
  return FeatureGraph(d, std::move(edges), GraphKind::kChain, 1, d);
}

FeatureGraph grid_graph(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw DimensionError("grid_graph: rows and cols must be positive");
  }
  std::vector<Edge> edges;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t u = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(u, u + 1);
      if (r + 1 < rows) edges.emplace_back(u, u + cols);
    }
  }
  return FeatureGraph(rows * cols, std::move(edges), GraphKind::kGrid, rows, cols);
}

FeatureGraph complete_graph(std::size_t d) {
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) edges.emplace_back(a, b);
  }
  return FeatureGraph(d, std::move(edges));
}

std::size_t graph_distance(const FeatureGraph& g, std::size_t i, std::size_t j) {
  g.check_node(j);
  return g.distances_from(i)[j];
}

FeatureSubset k_neighborhood(const FeatureGraph& g, std::size_t i, std::size_t k) {
  const auto dist = g.distances_from(i);
  FeatureSubset out(g.num_nodes());
  for (std::size_t j = 0; j < dist.size(); ++j) {
    if (dist[j] <= k) out.insert(j);
  }
  return out;
}

namespace {

// Each connected set containing the root is reached along exactly one branch:
// a candidate, once tried, is excluded from all later sibling branches.
class ConnectedEnumerator {
 public:
  ConnectedEnumerator(const FeatureGraph& g, const FeatureSubset& allowed,
                      std::size_t max_size, std::size_t budget)
      : g_(g), allowed_(allowed), max_size_(max_size), budget_(budget) {}

  std::vector<FeatureSubset> run(std::size_t root) {
    FeatureSubset current(g_.num_nodes());
    current.insert(root);
    FeatureSubset candidates = fresh_neighbors(root, current, FeatureSubset(g_.num_nodes()));
    FeatureSubset excluded(g_.num_nodes());
    extend(current, candidates, excluded);
    return std::move(out_);
  }

 private:
  FeatureSubset fresh_neighbors(std::size_t w, const FeatureSubset& current,
                                const FeatureSubset& excluded) const {
    FeatureSubset out(g_.num_nodes());
    for (std::size_t n : g_.neighbors(w)) {
      if (allowed_.contains(n) && !current.contains(n) && !excluded.contains(n)) {
        out.insert(n);
      }
    }
    return out;
  }

  void extend(const FeatureSubset& current, const FeatureSubset& candidates,
              FeatureSubset excluded) {
    if (out_.size() >= budget_) {
      throw BudgetExceededError(
          "connected subset enumeration exceeded budget of " +
              std::to_string(budget_) + " subsets (reached " +
              std::to_string(out_.size() + 1) + ")",
          out_.size() + 1);
    }
    out_.push_back(current);
    if (current.size() >= max_size_) return;

    FeatureSubset remaining = candidates;
    for (std::size_t w : candidates.members()) {
      remaining.erase(w);
      const FeatureSubset next = current.with(w);
      const FeatureSubset next_candidates =
          (remaining | fresh_neighbors(w, next, excluded)) - excluded;
      extend(next, next_candidates, excluded);
      excluded.insert(w);
    }
  }

  const FeatureGraph& g_;
  const FeatureSubset& allowed_;
  std::size_t max_size_;
  std::size_t budget_;
  std::vector<FeatureSubset> out_;
};

}  // namespace

std::vector<FeatureSubset> connected_subsets_containing(const FeatureGraph& g,
                                                        std::size_t i, std::size_t k,
                                                        ConnectedSubsetLimits limits) {
  const FeatureSubset nbhd = k_neighborhood(g, i, k);
  const std::size_t max_size = limits.max_size == 0 ? nbhd.size() : limits.max_size;
  if (limits.budget == 0) {
    throw PreconditionError("connected subset budget must be positive");
  }
  auto out = ConnectedEnumerator(g, nbhd, max_size, limits.budget).run(i);
  std::sort(out.begin(), out.end(), canonical_less);
  return out;
}

std::vector<FeatureSubset> connected_components(const FeatureGraph& g,
                                                const FeatureSubset& s) {
  if (s.dimension() != g.num_nodes()) {
    throw DimensionError("subset dimension " + std::to_string(s.dimension()) +
                         " does not match graph with " +
                         std::to_string(g.num_nodes()) + " nodes");
  }
  std::vector<FeatureSubset> out;
  FeatureSubset unvisited = s;
  std::vector<std::size_t> stack;
  for (std::size_t start : s.members()) {
    if (!unvisited.contains(start)) continue;
    FeatureSubset component(g.num_nodes());
    stack.push_back(start);
    unvisited.erase(start);
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      component.insert(u);
      for (std::size_t w : g.neighbors(u)) {
        if (unvisited.contains(w)) {
          unvisited.erase(w);
          stack.push_back(w);
        }
      }
    }
    out.push_back(std::move(component));
  }
  return out;
}

bool is_connected(const FeatureGraph& g, const FeatureSubset& s) {
  return connected_components(g, s).size() == 1;
}

std::string to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::kChain:
      return "chain";
    case GraphKind::kGrid:
      return "grid";
    case GraphKind::kGeneral:
      return "general";
  }
  return "general";
}

nlohmann::json graph_to_json(const FeatureGraph& g) {
  nlohmann::json j;
  j["kind"] = to_string(g.kind());
  j["d"] = g.num_nodes();
  if (g.kind() == GraphKind::kGrid) {
    j["rows"] = g.rows();
    j["cols"] = g.cols();
  }
  if (g.kind() == GraphKind::kGeneral) {
    nlohmann::json edges = nlohmann::json::array();
    for (auto [a, b] : g.edges()) edges.push_back({a, b});
    j["edges"] = std::move(edges);
  }
  return j;
}

FeatureGraph graph_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    const auto d = j.at("d").get<std::size_t>();
    if (kind == "chain") return chain_graph(d);
    if (kind == "grid") {
      const auto rows = j.at("rows").get<std::size_t>();
      const auto cols = j.at("cols").get<std::size_t>();
      if (rows * cols != d) {
        throw ConfigurationError("grid rows*cols does not match d");
      }
      return grid_graph(rows, cols);
    }
    if (kind == "general") {
      std::vector<Edge> edges;
      for (const auto& e : j.at("edges")) {
        edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
      }
      return FeatureGraph(d, std::move(edges));
    }
    throw ConfigurationError("unknown graph kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("malformed graph json: ") + e.what());
  }
}

FeatureGraph parse_graph_spec(const std::string& spec, std::size_t d) {
  if (spec == "chain") return chain_graph(d);
  if (spec.rfind("chain:", 0) == 0) return chain_graph(std::stoul(spec.substr(6)));
  std::string dims;
  if (spec.rfind("grid ", 0) == 0 || spec.rfind("grid:", 0) == 0) {
    dims = spec.substr(5);
  } else {
    throw ConfigurationError("unrecognized graph spec '" + spec + "'");
  }
  const auto x = dims.find_first_of("xX");
  if (x == std::string::npos) {
    throw ConfigurationError("grid spec must look like 'grid RxC', got '" + spec + "'");
  }
  const std::size_t rows = std::stoul(dims.substr(0, x));
  const std::size_t cols = std::stoul(dims.substr(x + 1));
  return grid_graph(rows, cols);
}

}  // namespace lcshap
