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

#include "kmip/wl.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>

#include "json.hpp"

#include "kmip/encodings.hpp"
#include "kmip/error.hpp"

namespace kmip {

namespace {

constexpr double kEigenTieTol = 1e-6;

void append_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::string quantized_row(std::span<const double> row, double quantum) {
  std::string out = std::to_string(row.size());
  for (double v : row) {
    out.push_back(',');
    out += quantize(v, quantum);
  }
  return out;
}

std::vector<std::size_t> count_classes(const Coloring& c, std::size_t begin, std::size_t end) {
  std::vector<std::size_t> hist(c.num_classes(), 0);
  for (std::size_t i = begin; i < end; ++i) ++hist[c.colors[i]];
  return hist;
}

Coloring from_interner(std::vector<std::size_t> colors, ColorInterner& interner) {
  return {std::move(colors), interner.descriptions()};
}

std::vector<std::size_t> offsets_of(const std::vector<const Graph*>& graphs) {
  std::vector<std::size_t> offsets{0};
  for (const Graph* g : graphs) offsets.push_back(offsets.back() + g->num_nodes());
  return offsets;
}

// Runs `step` until the joint class count stops changing or max_iters.
template <typename Step>
void iterate(JointColoring& run, std::size_t max_iters, Step&& step) {
  for (std::size_t l = 0; l < max_iters; ++l) {
    Coloring next = step(run.iterations.back());
    const bool stable = next.num_classes() == run.iterations.back().num_classes();
    run.iterations.push_back(std::move(next));
    if (stable) break;
  }
}

std::string relative_base(std::size_t v, std::size_t u, const Graph& g) {
  std::string out;
  out.push_back(g.has_edge(u, v) ? '1' : '0');
  out.push_back(',');
  out.push_back(u == v ? '1' : '0');
  return out;
}

bool base_discriminator(const std::string& d) { return d.size() >= 3 && d[2] == '1'; }

std::vector<std::string> lap_pe_colors(const Graph& g, std::size_t m, double quantum) {
  const std::size_t n = g.num_nodes();
  std::vector<std::string> out(n);
  if (n == 0) return out;
  const SymmetricEigen eig = laplacian_eigen(g);
  for (std::size_t c = 0; c < m; ++c) {
    if (c >= n) {
      for (auto& s : out) s += ";pad";
      continue;
    }
    bool simple = true;
    for (std::size_t j = 0; j < n; ++j)
      if (j != c && std::abs(eig.values[j] - eig.values[c]) <= kEigenTieTol) simple = false;
    const std::string lambda = quantize(eig.values[c], quantum);
    for (std::size_t v = 0; v < n; ++v) {
      out[v] += ';' + lambda;
      if (simple) out[v] += ',' + quantize(std::abs(eig.vectors(v, c)), quantum);
    }
  }
  return out;
}

std::vector<std::string> rwse_colors(const Graph& g, std::size_t m, double quantum) {
  const Matrix r = rwse(g, m);
  std::vector<std::string> out;
  for (std::size_t v = 0; v < g.num_nodes(); ++v) out.push_back(quantized_row(r.row(v), quantum));
  return out;
}

std::vector<std::string> node_pe_colors(const Graph& g, const PeConfig& pe, double quantum) {
  switch (pe.kind) {
    case PeKind::kNone: return std::vector<std::string>(g.num_nodes());
    case PeKind::kLapPe: return lap_pe_colors(g, pe.dim, quantum);
    case PeKind::kRwse: return rwse_colors(g, pe.dim, quantum);
  }
  return {};
}

std::size_t parse_dim(const std::string& text, const std::string& full) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || v == 0) {
    throw SchemeError("bad dimension '" + text + "' in scheme '" + full + "'");
  }
  return v;
}

// "lap_pe", "lap_pe:4", "rwse", "rwse:4" (also "none" when allowed).
PeConfig parse_pe(const std::string& text, const std::string& full) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  PeConfig pe;
  if (kind == "lap_pe") {
    pe.kind = PeKind::kLapPe;
  } else if (kind == "rwse") {
    pe.kind = PeKind::kRwse;
  } else if (kind == "none" && colon == std::string::npos) {
    return pe;
  } else {
    throw SchemeError("unknown scheme '" + full +
                      "' (expected constant, lap_pe[:m], rwse[:m], gps or gps:<pe>[:m])");
  }
  pe.dim = colon == std::string::npos ? 8 : parse_dim(text.substr(colon + 1), full);
  return pe;
}

}  // namespace

std::size_t ColorInterner::intern(const std::string& description) {
  auto [it, inserted] = ids_.try_emplace(description, descriptions_.size());
  if (inserted) descriptions_.push_back(description);
  return it->second;
}

std::string quantize(double v, double quantum) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  double steps = std::nearbyint(v / quantum);
  if (steps == 0.0) steps = 0.0;  // drop the sign of -0
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, steps);
  return std::string(buf, res.ptr);
}

Coloring feature_coloring(const Graph& g, double quantum) {
  ColorInterner interner;
  std::vector<std::size_t> colors;
  for (std::size_t v = 0; v < g.num_nodes(); ++v)
    colors.push_back(interner.intern(quantized_row(g.node_features().row(v), quantum)));
  return from_interner(std::move(colors), interner);
}

namespace {

JointColoring wl1_run(const std::vector<const Graph*>& graphs, Coloring init,
                      std::size_t max_iters) {
  JointColoring run;
  run.offsets = offsets_of(graphs);
  if (init.colors.size() != run.offsets.back()) {
    throw ShapeError("initial coloring covers " + std::to_string(init.colors.size()) +
                     " nodes, graphs have " + std::to_string(run.offsets.back()));
  }
  std::vector<InAdjacency> adj;
  for (const Graph* g : graphs) adj.push_back(in_adjacency(*g));
  run.iterations.push_back(std::move(init));
  iterate(run, max_iters, [&](const Coloring& prev) {
    ColorInterner interner;
    std::vector<std::size_t> colors;
    std::vector<std::size_t> neigh;
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
      const Graph& g = *graphs[gi];
      const std::size_t off = run.offsets[gi];
      for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        neigh.clear();
        for (std::size_t p = adj[gi].offsets[v]; p < adj[gi].offsets[v + 1]; ++p)
          neigh.push_back(prev.colors[off + g.edges()[adj[gi].edge_ids[p]].src]);
        std::sort(neigh.begin(), neigh.end());
        std::string d;
        append_u64(d, prev.colors[off + v]);
        append_u64(d, neigh.size());
        for (std::size_t c : neigh) append_u64(d, c);
        colors.push_back(interner.intern(d));
      }
    }
    return from_interner(std::move(colors), interner);
  });
  return run;
}

}  // namespace

std::vector<Coloring> wl1_refine(const Graph& g, const Coloring& init, std::size_t max_iters) {
  return wl1_run({&g}, init, max_iters).iterations;
}

JointColoring wl1_refine_joint(const std::vector<const Graph*>& graphs, std::size_t max_iters,
                               double quantum) {
  ColorInterner interner;
  std::vector<std::size_t> colors;
  for (const Graph* g : graphs)
    for (std::size_t v = 0; v < g->num_nodes(); ++v)
      colors.push_back(interner.intern(quantized_row(g->node_features().row(v), quantum)));
  return wl1_run(graphs, from_interner(std::move(colors), interner), max_iters);
}

EncodingScheme EncodingScheme::constant() {
  EncodingScheme s;
  s.name = "constant";
  s.absolute = [](const Graph& g, double) { return std::vector<std::string>(g.num_nodes()); };
  s.relative = [](std::size_t v, std::size_t u, const Graph& g, double) {
    return relative_base(v, u, g);
  };
  s.discriminator = base_discriminator;
  return s;
}

EncodingScheme EncodingScheme::lap_pe(std::size_t m) {
  EncodingScheme s = constant();
  s.name = "lap_pe:" + std::to_string(m);
  s.absolute = [m](const Graph& g, double q) { return lap_pe_colors(g, m, q); };
  return s;
}

EncodingScheme EncodingScheme::rwse(std::size_t m) {
  EncodingScheme s = constant();
  s.name = "rwse:" + std::to_string(m);
  s.absolute = [m](const Graph& g, double q) { return rwse_colors(g, m, q); };
  return s;
}

EncodingScheme EncodingScheme::gps(PeConfig node_pe) {
  EncodingScheme s;
  s.name = node_pe.kind == PeKind::kNone
               ? std::string("gps")
               : std::string("gps:") + to_string(node_pe.kind) + ":" + std::to_string(node_pe.dim);
  s.absolute = [node_pe](const Graph& g, double q) { return node_pe_colors(g, node_pe, q); };
  s.relative = [](std::size_t v, std::size_t u, const Graph& g, double q) {
    std::string d = relative_base(v, u, g);
    d.push_back('|');
    if (g.has_edge(u, v)) {
      d += quantized_row(g.edge_features().row(g.edge_index(u, v)), q);
    } else {
      d += quantized_row(Matrix(1, g.edge_dim()).row(0), q);
    }
    return d;
  };
  s.discriminator = base_discriminator;
  return s;
}

EncodingScheme EncodingScheme::from_name(const std::string& name) {
  if (name == "constant") return constant();
  if (name == "gps") return gps();
  if (name.rfind("gps:", 0) == 0) return gps(parse_pe(name.substr(4), name));
  const PeConfig pe = parse_pe(name, name);
  if (pe.kind == PeKind::kLapPe) return lap_pe(pe.dim);
  if (pe.kind == PeKind::kRwse) return rwse(pe.dim);
  throw SchemeError("unknown scheme '" + name + "'");
}

void check_strong_regularity(const EncodingScheme& scheme, const Graph& g) {
  if (!scheme.relative || !scheme.discriminator || !scheme.absolute) {
    throw SchemeError("scheme '" + scheme.name + "' is missing f_A, f_R or its discriminator");
  }
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    for (std::size_t u = 0; u < g.num_nodes(); ++u) {
      if (scheme.discriminator(scheme.relative(v, u, g, scheme.quantum)) != (u == v)) {
        throw SchemeError("scheme '" + scheme.name +
                          "' is not strongly regular: discriminator fails on pair (" +
                          std::to_string(v) + ", " + std::to_string(u) + ")");
      }
    }
  }
}

JointColoring seg_wl_refine_joint(const std::vector<const Graph*>& graphs,
                                  const EncodingScheme& scheme, std::size_t max_iters) {
  if (!scheme.relative || !scheme.discriminator || !scheme.absolute) {
    throw SchemeError("scheme '" + scheme.name + "' is missing f_A, f_R or its discriminator");
  }
  if (!(scheme.quantum > 0.0)) throw SchemeError("scheme quantum must be positive");
  JointColoring run;
  run.offsets = offsets_of(graphs);

  // Relative codes are interned once per pair and shared across graphs.
  ColorInterner codes;
  std::vector<std::vector<std::size_t>> rel(graphs.size());
  ColorInterner init;
  std::vector<std::size_t> colors;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const Graph& g = *graphs[gi];
    const std::size_t n = g.num_nodes();
    rel[gi].resize(n * n);
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t u = 0; u < n; ++u) {
        const std::string d = scheme.relative(v, u, g, scheme.quantum);
        if (scheme.discriminator(d) != (u == v)) {
          throw SchemeError("scheme '" + scheme.name +
                            "' is not strongly regular: discriminator fails on pair (" +
                            std::to_string(v) + ", " + std::to_string(u) + ")");
        }
        rel[gi][v * n + u] = codes.intern(d);
      }
    }
    const auto absolute = scheme.absolute(g, scheme.quantum);
    if (absolute.size() != n) {
      throw SchemeError("scheme '" + scheme.name + "' produced " +
                        std::to_string(absolute.size()) + " node encodings for " +
                        std::to_string(n) + " nodes");
    }
    for (std::size_t v = 0; v < n; ++v) {
      std::string d = quantized_row(g.node_features().row(v), scheme.quantum);
      d.push_back('|');
      d += absolute[v];
      colors.push_back(init.intern(d));
    }
  }
  run.iterations.push_back(from_interner(std::move(colors), init));

  iterate(run, max_iters, [&](const Coloring& prev) {
    ColorInterner interner;
    std::vector<std::size_t> next;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
      const std::size_t n = graphs[gi]->num_nodes();
      const std::size_t off = run.offsets[gi];
      for (std::size_t v = 0; v < n; ++v) {
        pairs.clear();
        for (std::size_t r = 0; r < n; ++r)
          pairs.emplace_back(prev.colors[off + r], rel[gi][v * n + r]);
        std::sort(pairs.begin(), pairs.end());
        std::string d;
        append_u64(d, pairs.size());
        for (auto [c, code] : pairs) {
          append_u64(d, c);
          append_u64(d, code);
        }
        next.push_back(interner.intern(d));
      }
    }
    return from_interner(std::move(next), interner);
  });
  return run;
}

std::vector<Coloring> seg_wl_refine(const Graph& g, const EncodingScheme& scheme,
                                    std::size_t max_iters) {
  return seg_wl_refine_joint({&g}, scheme, max_iters).iterations;
}

namespace {

Distinction compare_pair(const JointColoring& run) {
  Distinction d;
  for (std::size_t l = 0; l < run.iterations.size(); ++l) {
    const Coloring& c = run.iterations[l];
    d.classes_per_iter.push_back(c.num_classes());
    if (!d.distinguished && count_classes(c, run.offsets[0], run.offsets[1]) !=
                                count_classes(c, run.offsets[1], run.offsets[2])) {
      d.distinguished = true;
      d.iteration = l;
    }
  }
  return d;
}

}  // namespace

Distinction distinguishes(const Graph& a, const Graph& b, const EncodingScheme& scheme,
                          std::size_t max_iters) {
  return compare_pair(seg_wl_refine_joint({&a, &b}, scheme, max_iters));
}

Distinction wl1_distinguishes(const Graph& a, const Graph& b, std::size_t max_iters) {
  return compare_pair(wl1_refine_joint({&a, &b}, max_iters));
}

std::string distinction_json(const Distinction& d, const std::string& scheme,
                             double quantum) {
  nlohmann::ordered_json j;
  j["distinguished"] = d.distinguished;
  j["iteration"] = d.iteration ? static_cast<long long>(*d.iteration) : -1LL;
  j["classes_per_iter"] = d.classes_per_iter;
  j["scheme"] = scheme;
  j["quantum"] = quantum;
  return j.dump() + "\n";
}

RefinementVerdict check_refinement_property(const Graph& a, const Graph& b,
                                            const EncodingScheme& coarse,
                                            const EncodingScheme& fine,
                                            std::size_t max_iters) {
  RefinementVerdict v;
  v.coarse = distinguishes(a, b, coarse, max_iters);
  v.fine = distinguishes(a, b, fine, max_iters);
  if (v.coarse.distinguished &&
      (!v.fine.distinguished || *v.fine.iteration > *v.coarse.iteration)) {
    v.holds = false;
    v.details = "'" + coarse.name + "' distinguishes at iteration " +
                std::to_string(*v.coarse.iteration) + " but '" + fine.name + "' " +
                (v.fine.distinguished
                     ? "only at iteration " + std::to_string(*v.fine.iteration)
                     : std::string("never does within ") + std::to_string(max_iters) +
                           " iterations");
  }
  return v;
}

}  // namespace kmip
