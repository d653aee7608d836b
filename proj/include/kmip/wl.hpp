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
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "kmip/gps.hpp"
#include "kmip/graph.hpp"

namespace kmip {

// Maps canonical color descriptions to dense IDs in first-appearance order.
// Descriptions are exact byte strings, so distinct descriptions always get
// distinct IDs.
class ColorInterner {
 public:
  std::size_t intern(const std::string& description);
  std::size_t size() const noexcept { return descriptions_.size(); }
  const std::vector<std::string>& descriptions() const noexcept { return descriptions_; }

 private:
  std::unordered_map<std::string, std::size_t> ids_;
  std::vector<std::string> descriptions_;
};

struct Coloring {
  std::vector<std::size_t> colors;        // per node, dense IDs
  std::vector<std::string> descriptions;  // ID -> canonical description
  std::size_t num_classes() const noexcept { return descriptions.size(); }
};

// Text form of round(v / quantum), so values closer than the quantum
// usually share a description.
std::string quantize(double v, double quantum);

// Color from quantized node features.
Coloring feature_coloring(const Graph& g, double quantum = 1e-8);

// c^l(v) = tau(c^{l-1}(v), {{c^{l-1}(u) : u -> v}}). The result holds c^0 =
// init followed by one coloring per iteration; it stops after max_iters
// iterations or after the first iteration that leaves the number of classes
// unchanged (that coloring is included).
std::vector<Coloring> wl1_refine(const Graph& g, const Coloring& init,
                                 std::size_t max_iters);

// A structural encoding scheme (f_A, f_R). f_A yields one description per
// node; f_R(v, u) describes the ordered pair. The discriminator must return
// true exactly for descriptions of self-pairs (strong regularity).
struct EncodingScheme {
  std::string name;
  double quantum = 1e-8;
  std::function<std::vector<std::string>(const Graph&, double quantum)> absolute;
  std::function<std::string(std::size_t v, std::size_t u, const Graph&, double quantum)>
      relative;
  std::function<bool(const std::string&)> discriminator;

  // f_A constant; f_R = (edge u -> v, u == v).
  static EncodingScheme constant();
  // f_A from the Laplacian spectrum: for each of the m smallest eigenvalues,
  // the eigenvalue and, when it is simple, |eigenvector entry|.
  static EncodingScheme lap_pe(std::size_t m = 8);
  // f_A = the node's RWSE row.
  static EncodingScheme rwse(std::size_t m = 8);
  // The scheme induced by a GPS model whose node features are extended by
  // `node_pe`: f_A = node encoding, f_R = (edge u -> v, u == v, E_uv) with
  // zero edge features for non-edges.
  static EncodingScheme gps(PeConfig node_pe = {});

  // "constant", "lap_pe[:m]", "rwse[:m]", "gps", "gps:lap_pe[:m]",
  // "gps:rwse[:m]". Throws SchemeError for anything else.
  static EncodingScheme from_name(const std::string& name);
};

// Throws SchemeError unless the discriminator separates self-pairs from all
// other pairs of g.
void check_strong_regularity(const EncodingScheme& scheme, const Graph& g);

// c^0(v) = Phi_0(X_v, f_A(v)); c^l(v) = Phi({{(c^{l-1}(r), f_R(v, r)) : r in V}}).
// Same stopping rule and layout as wl1_refine.
std::vector<Coloring> seg_wl_refine(const Graph& g, const EncodingScheme& scheme,
                                    std::size_t max_iters);

// Joint refinement of several graphs sharing one interner per iteration. Each
// node only aggregates over its own graph; the stopping rule applies to the
// joint partition. offsets[i] is the first node of graph i in the colorings.
struct JointColoring {
  std::vector<std::size_t> offsets;
  std::vector<Coloring> iterations;
};

JointColoring wl1_refine_joint(const std::vector<const Graph*>& graphs,
                               std::size_t max_iters, double quantum = 1e-8);
JointColoring seg_wl_refine_joint(const std::vector<const Graph*>& graphs,
                                  const EncodingScheme& scheme, std::size_t max_iters);

struct Distinction {
  bool distinguished = false;
  std::optional<std::size_t> iteration;     // first iteration with different multisets
  std::vector<std::size_t> classes_per_iter;  // joint class counts
};

Distinction distinguishes(const Graph& a, const Graph& b, const EncodingScheme& scheme,
                          std::size_t max_iters);
Distinction wl1_distinguishes(const Graph& a, const Graph& b, std::size_t max_iters);

// {"distinguished": bool, "iteration": int (-1 if not), "classes_per_iter": [...],
//  "scheme": name, "quantum": q}
std::string distinction_json(const Distinction& d, const std::string& scheme,
                             double quantum);

struct RefinementVerdict {
  bool holds = true;
  Distinction coarse;
  Distinction fine;
  std::string details;  // set on violation
};

// Checks: coarse distinguishes a and b at iteration t => fine distinguishes
// them at some iteration <= t.
RefinementVerdict check_refinement_property(const Graph& a, const Graph& b,
                                            const EncodingScheme& coarse,
                                            const EncodingScheme& fine,
                                            std::size_t max_iters);

}  // namespace kmip
