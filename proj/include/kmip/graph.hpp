// Copyright 2026 The kmip Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kmip/matrix.hpp"

namespace kmip {

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Directed attributed graph. Undirected graphs store both directions.
// Validated on construction and immutable afterwards.
class Graph {
 public:
  Graph() = default;
  Graph(std::size_t num_nodes, Matrix node_features, std::vector<Edge> edges,
        Matrix edge_features,
        std::optional<std::vector<int>> node_labels = std::nullopt);

  // Feature-less graph: N x 1 ones for nodes, no edge features.
  static Graph from_edges(std::size_t num_nodes, std::vector<Edge> edges);
  // Adds both directions of each listed pair.
  static Graph undirected(std::size_t num_nodes,
                          const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::size_t feature_dim() const noexcept { return node_features_.cols(); }
  std::size_t edge_dim() const noexcept { return edge_features_.cols(); }

  const Matrix& node_features() const noexcept { return node_features_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Matrix& edge_features() const noexcept { return edge_features_; }
  const std::optional<std::vector<int>>& node_labels() const noexcept {
    return node_labels_;
  }
  bool has_edge(std::size_t src, std::size_t dst) const;
  // Index of edge src->dst, or num_edges() when absent.
  std::size_t edge_index(std::size_t src, std::size_t dst) const;

  Graph with_node_features(Matrix features) const;
  Graph with_labels(std::vector<int> labels) const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.num_nodes_ == b.num_nodes_ && a.node_features_ == b.node_features_ &&
           a.edges_ == b.edges_ && a.edge_features_ == b.edge_features_ &&
           a.node_labels_ == b.node_labels_;
  }

 private:
  std::size_t num_nodes_ = 0;
  Matrix node_features_;
  std::vector<Edge> edges_;
  Matrix edge_features_;
  std::optional<std::vector<int>> node_labels_;
  std::vector<std::size_t> sorted_edge_ids_;  // by (src, dst)
};

// Incoming edges grouped by destination (CSR layout).
struct InAdjacency {
  std::vector<std::size_t> offsets;   // size N + 1
  std::vector<std::size_t> edge_ids;  // grouped by dst, ascending edge id
};

InAdjacency in_adjacency(const Graph& g);

// Node i of the result is node perm[i] of g; edges keep their order.
Graph permute_nodes(const Graph& g, const std::vector<std::size_t>& perm);

// Nodes of b follow those of a.
Graph disjoint_union(const Graph& a, const Graph& b);

// Canonical JSON (sorted keys, shortest round-trip numbers).
std::string graph_to_json(const Graph& g);
Graph graph_from_json(const std::string& text);

Graph load_graph(const std::filesystem::path& path);
void save_graph(const Graph& g, const std::filesystem::path& path);

// Directed k-NN graph: for each point i, edges j->i from its k nearest other
// points (Euclidean, ties to the lowest index); edge feature = distance.
Graph knn_graph(const Matrix& points, std::size_t k);

}  // namespace kmip
