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

#include "kmip/graph.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace kmip {

namespace {

std::string edge_str(const Edge& e) {
  return "(" + std::to_string(e.src) + "," + std::to_string(e.dst) + ")";
}

}  // namespace

Graph::Graph(std::size_t num_nodes, Matrix node_features, std::vector<Edge> edges,
             Matrix edge_features, std::optional<std::vector<int>> node_labels)
    : num_nodes_(num_nodes),
      node_features_(std::move(node_features)),
      edges_(std::move(edges)),
      edge_features_(std::move(edge_features)),
      node_labels_(std::move(node_labels)) {
  if (node_features_.rows() != num_nodes_) {
    throw ValidationError("node_features has " +
                          std::to_string(node_features_.rows()) + " rows for " +
                          std::to_string(num_nodes_) + " nodes");
  }
  if (edge_features_.rows() != edges_.size()) {
    if (edge_features_.rows() == 0 && edge_features_.cols() == 0) {
      edge_features_ = Matrix(edges_.size(), 0);
    } else {
      throw ValidationError("edge_features has " +
                            std::to_string(edge_features_.rows()) +
                            " rows for " + std::to_string(edges_.size()) +
                            " edges");
    }
  }
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (e.src >= num_nodes_ || e.dst >= num_nodes_) {
      throw ValidationError("edges[" + std::to_string(i) + "] = " + edge_str(e) +
                            " references a node outside [0, " +
                            std::to_string(num_nodes_) + ")");
    }
  }
  sorted_edge_ids_.resize(edges_.size());
  std::iota(sorted_edge_ids_.begin(), sorted_edge_ids_.end(), std::size_t{0});
  std::sort(sorted_edge_ids_.begin(), sorted_edge_ids_.end(),
            [&](std::size_t a, std::size_t b) {
              const Edge& x = edges_[a];
              const Edge& y = edges_[b];
              return x.src != y.src ? x.src < y.src : x.dst < y.dst;
            });
  for (std::size_t i = 1; i < sorted_edge_ids_.size(); ++i) {
    if (edges_[sorted_edge_ids_[i]] == edges_[sorted_edge_ids_[i - 1]]) {
      throw ValidationError("duplicate edge " + edge_str(edges_[sorted_edge_ids_[i]]));
    }
  }
  if (node_labels_ && node_labels_->size() != num_nodes_) {
    throw ValidationError("node_labels has " + std::to_string(node_labels_->size()) +
                          " entries for " + std::to_string(num_nodes_) + " nodes");
  }
}

Graph Graph::from_edges(std::size_t num_nodes, std::vector<Edge> edges) {
  Matrix ef(edges.size(), 0);
  return Graph(num_nodes, Matrix(num_nodes, 1, 1.0), std::move(edges), std::move(ef));
}

Graph Graph::undirected(std::size_t num_nodes,
                        const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::vector<Edge> edges;
  edges.reserve(2 * pairs.size());
  for (auto [a, b] : pairs) {
    edges.push_back({a, b});
    if (a != b) edges.push_back({b, a});
  }
  return from_edges(num_nodes, std::move(edges));
}

std::size_t Graph::edge_index(std::size_t src, std::size_t dst) const {
  auto it = std::lower_bound(sorted_edge_ids_.begin(), sorted_edge_ids_.end(),
                             Edge{src, dst}, [&](std::size_t id, const Edge& key) {
                               const Edge& e = edges_[id];
                               return e.src != key.src ? e.src < key.src
                                                       : e.dst < key.dst;
                             });
  if (it != sorted_edge_ids_.end() && edges_[*it] == Edge{src, dst}) return *it;
  return edges_.size();
}

bool Graph::has_edge(std::size_t src, std::size_t dst) const {
  return edge_index(src, dst) != edges_.size();
}

Graph Graph::with_node_features(Matrix features) const {
  return Graph(num_nodes_, std::move(features), edges_, edge_features_, node_labels_);
}

Graph Graph::with_labels(std::vector<int> labels) const {
  return Graph(num_nodes_, node_features_, edges_, edge_features_, std::move(labels));
}

InAdjacency in_adjacency(const Graph& g) {
  InAdjacency adj;
  adj.offsets.assign(g.num_nodes() + 1, 0);
  for (const Edge& e : g.edges()) ++adj.offsets[e.dst + 1];
  for (std::size_t i = 0; i < g.num_nodes(); ++i) adj.offsets[i + 1] += adj.offsets[i];
  adj.edge_ids.resize(g.num_edges());
  std::vector<std::size_t> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
  for (std::size_t id = 0; id < g.num_edges(); ++id) {
    adj.edge_ids[cursor[g.edges()[id].dst]++] = id;
  }
  return adj;
}

Graph permute_nodes(const Graph& g, const std::vector<std::size_t>& perm) {
  const std::size_t n = g.num_nodes();
  if (perm.size() != n) throw ShapeError("permutation size mismatch");
  std::vector<std::size_t> inverse(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (perm[i] >= n || inverse[perm[i]] != n) {
      throw ValidationError("not a permutation");
    }
    inverse[perm[i]] = i;
  }
  Matrix x(n, g.feature_dim());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < g.feature_dim(); ++j)
      x(i, j) = g.node_features()(perm[i], j);
  std::vector<Edge> edges;
  edges.reserve(g.num_edges());
  for (const Edge& e : g.edges()) edges.push_back({inverse[e.src], inverse[e.dst]});
  std::optional<std::vector<int>> labels;
  if (g.node_labels()) {
    labels.emplace(n);
    for (std::size_t i = 0; i < n; ++i) (*labels)[i] = (*g.node_labels())[perm[i]];
  }
  return Graph(n, std::move(x), std::move(edges), g.edge_features(), std::move(labels));
}

Graph disjoint_union(const Graph& a, const Graph& b) {
  if (a.feature_dim() != b.feature_dim() || a.edge_dim() != b.edge_dim()) {
    throw ShapeError("disjoint_union: feature dimensions differ");
  }
  const std::size_t n = a.num_nodes() + b.num_nodes();
  Matrix x(n, a.feature_dim());
  std::copy(a.node_features().data(), a.node_features().data() + a.node_features().size(),
            x.data());
  std::copy(b.node_features().data(), b.node_features().data() + b.node_features().size(),
            x.data() + a.node_features().size());
  std::vector<Edge> edges = a.edges();
  for (const Edge& e : b.edges())
    edges.push_back({e.src + a.num_nodes(), e.dst + a.num_nodes()});
  Matrix ef(edges.size(), a.edge_dim());
  std::copy(a.edge_features().data(), a.edge_features().data() + a.edge_features().size(),
            ef.data());
  std::copy(b.edge_features().data(), b.edge_features().data() + b.edge_features().size(),
            ef.data() + a.edge_features().size());
  std::optional<std::vector<int>> labels;
  if (a.node_labels() && b.node_labels()) {
    labels = *a.node_labels();
    labels->insert(labels->end(), b.node_labels()->begin(), b.node_labels()->end());
  }
  return Graph(n, std::move(x), std::move(edges), std::move(ef), std::move(labels));
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (double v : m.row(i)) r.push_back(v);
    rows.push_back(std::move(r));
  }
  return rows;
}

const json& require(const json& doc, const char* field) {
  auto it = doc.find(field);
  if (it == doc.end()) throw ParseError(std::string("missing field \"") + field + "\"");
  return *it;
}

Matrix matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) throw ParseError(field + ": expected an array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  std::vector<double> data;
  for (std::size_t i = 0; i < rows; ++i) {
    const json& r = j[i];
    const std::string where = field + "[" + std::to_string(i) + "]";
    if (!r.is_array()) throw ParseError(where + ": expected an array of numbers");
    if (i == 0) cols = r.size();
    if (r.size() != cols) {
      throw ParseError(where + ": row has " + std::to_string(r.size()) +
                       " entries, expected " + std::to_string(cols));
    }
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (!r[c].is_number()) {
        throw ParseError(where + "[" + std::to_string(c) + "]: expected a number");
      }
      data.push_back(r[c].get<double>());
    }
  }
  return Matrix(rows, cols, std::move(data));
}

std::size_t as_index(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ParseError(where + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

std::string graph_to_json(const Graph& g) {
  json doc;
  doc["num_nodes"] = g.num_nodes();
  doc["node_features"] = matrix_to_json(g.node_features());
  json edges = json::array();
  for (const Edge& e : g.edges()) edges.push_back({e.src, e.dst});
  doc["edges"] = std::move(edges);
  doc["edge_features"] =
      g.edge_dim() == 0 ? json::array() : matrix_to_json(g.edge_features());
  if (g.node_labels()) doc["node_labels"] = *g.node_labels();
  return doc.dump() + "\n";
}

Graph graph_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON at " + line_col(text, e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("top level must be an object");

  const json& nn = require(doc, "num_nodes");
  const std::size_t n = as_index(nn, "num_nodes");
  Matrix x = matrix_from_json(require(doc, "node_features"), "node_features");
  if (x.rows() == 0 && n > 0) x = Matrix(n, 0);

  const json& ej = require(doc, "edges");
  if (!ej.is_array()) throw ParseError("edges: expected an array of [src,dst] pairs");
  std::vector<Edge> edges;
  edges.reserve(ej.size());
  for (std::size_t i = 0; i < ej.size(); ++i) {
    const std::string where = "edges[" + std::to_string(i) + "]";
    if (!ej[i].is_array() || ej[i].size() != 2) {
      throw ParseError(where + ": expected [src,dst]");
    }
    edges.push_back({as_index(ej[i][0], where + "[0]"), as_index(ej[i][1], where + "[1]")});
  }

  Matrix ef = matrix_from_json(require(doc, "edge_features"), "edge_features");
  if (ef.rows() == 0) ef = Matrix(edges.size(), 0);

  std::optional<std::vector<int>> labels;
  if (auto it = doc.find("node_labels"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError("node_labels: expected an array of integers");
    labels.emplace();
    for (std::size_t i = 0; i < it->size(); ++i) {
      if (!(*it)[i].is_number_integer()) {
        throw ParseError("node_labels[" + std::to_string(i) + "]: expected an integer");
      }
      labels->push_back((*it)[i].get<int>());
    }
  }
  return Graph(n, std::move(x), std::move(edges), std::move(ef), std::move(labels));
}

Graph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return graph_from_json(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_graph(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << graph_to_json(g);
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// k-NN

Graph knn_graph(const Matrix& points, std::size_t k) {
  const std::size_t n = points.rows();
  if (k >= n) {
    throw ParameterError("knn_graph: k=" + std::to_string(k) +
                         " must be smaller than the number of points " +
                         std::to_string(n));
  }
  const std::size_t dim = points.cols();
  std::vector<Edge> edges;
  std::vector<double> dist;
  edges.reserve(n * k);
  dist.reserve(n * k);
  std::vector<std::pair<double, std::size_t>> cand(n > 0 ? n - 1 : 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0.0;
      for (std::size_t t = 0; t < dim; ++t) {
        const double diff = points(i, t) - points(j, t);
        s += diff * diff;
      }
      cand[c++] = {s, j};
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k),
                      cand.end());
    for (std::size_t r = 0; r < k; ++r) {
      edges.push_back({cand[r].second, i});
      dist.push_back(std::sqrt(cand[r].first));
    }
  }
  Matrix ef(edges.size(), 1, std::move(dist));
  return Graph(n, points, std::move(edges), std::move(ef));
}

}  // namespace kmip
