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

// Feature-interaction graphs: chains for sequences, 4-connected grids for
// images, and arbitrary connected undirected graphs.

#ifndef LCSHAP_GRAPH_H_
#define LCSHAP_GRAPH_H_

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lcshap/subset.h"

namespace lcshap {

enum class GraphKind { kChain, kGrid, kGeneral };

using Edge = std::pair<std::size_t, std::size_t>;

class FeatureGraph {
 public:
  // Validates that nodes are 0..num_nodes-1, there are no self-loops or
  // duplicate edges, and the graph is connected.
  FeatureGraph(std::size_t num_nodes, std::vector<Edge> edges,
               GraphKind kind = GraphKind::kGeneral, std::size_t rows = 0,
               std::size_t cols = 0);

  std::size_t num_nodes() const { return adjacency_.size(); }
  GraphKind kind() const { return kind_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  // Edges as (min, max) pairs in sorted order.
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::size_t>& neighbors(std::size_t i) const;
  bool adjacent(std::size_t i, std::size_t j) const;

  // Shortest-path distances from `source` to every node.
  std::vector<std::size_t> distances_from(std::size_t source) const;
  std::size_t diameter() const;

  // Nodes adjacent to some member of `s` but not in `s`.
  FeatureSubset boundary(const FeatureSubset& s) const;

  void check_node(std::size_t i) const;

 private:
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<Edge> edges_;
  GraphKind kind_;
  std::size_t rows_;
  std::size_t cols_;
};

FeatureGraph chain_graph(std::size_t d);
// Row-major node order, 4-neighbor lattice.
FeatureGraph grid_graph(std::size_t rows, std::size_t cols);
FeatureGraph complete_graph(std::size_t d);

std::size_t graph_distance(const FeatureGraph& g, std::size_t i, std::size_t j);

// N_k(i): every node within graph distance k of i.
FeatureSubset k_neighborhood(const FeatureGraph& g, std::size_t i, std::size_t k);

struct ConnectedSubsetLimits {
  // 0 means |N_k(i)|.
  std::size_t max_size = 0;
  std::size_t budget = 1'000'000;
};

// Every connected U with i in U and U within N_k(i), |U| <= max_size, in
// canonical order. Throws BudgetExceededError once more than `budget` subsets
// have been produced.
std::vector<FeatureSubset> connected_subsets_containing(
    const FeatureGraph& g, std::size_t i, std::size_t k,
    ConnectedSubsetLimits limits = {});

// Maximal connected pieces of the subgraph induced by `s`, ordered by their
// smallest member.
std::vector<FeatureSubset> connected_components(const FeatureGraph& g,
                                                const FeatureSubset& s);

bool is_connected(const FeatureGraph& g, const FeatureSubset& s);

nlohmann::json graph_to_json(const FeatureGraph& g);
FeatureGraph graph_from_json(const nlohmann::json& j);

// Parses "chain", "chain:<d>", "grid RxC" or "grid:RxC"; `d` fills in the
// chain length when omitted.
FeatureGraph parse_graph_spec(const std::string& spec, std::size_t d);

std::string to_string(GraphKind kind);

}  // namespace lcshap

#endif  // LCSHAP_GRAPH_H_
