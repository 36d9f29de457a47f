/**
 * Copyright 2026 The Morph Simulator Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MORPH_TOPOLOGY_HPP
#define MORPH_TOPOLOGY_HPP

#include <iosfwd>
#include <set>
#include <utility>
#include <vector>

#include "morph/common.hpp"
#include "morph/rng.hpp"

namespace morph {

/// Directed communication graph for one round. An edge (src, dst) means src
/// sends its model to dst.
class Topology {
 public:
  explicit Topology(std::size_t num_nodes = 0);

  std::size_t num_nodes() const noexcept { return senders_.size(); }

  /// Returns false if the edge already exists. Throws InvalidArgument on
  /// self-edges or out-of-range ids.
  bool add_edge(NodeId src, NodeId dst);
  bool has_edge(NodeId src, NodeId dst) const;

  const std::set<NodeId> &senders_of(NodeId node) const;
  std::vector<NodeId> receivers_of(NodeId node) const;
  std::size_t in_degree(NodeId node) const { return senders_of(node).size(); }
  std::size_t out_degree(NodeId node) const;
  std::size_t edge_count() const noexcept { return edges_; }

  /// (src, dst) pairs ordered by dst, then src.
  std::vector<std::pair<NodeId, NodeId>> edges() const;

  bool operator==(const Topology &) const = default;

 private:
  void check(NodeId node) const;

  std::vector<std::set<NodeId>> senders_;
  std::vector<std::size_t> out_degree_;
  std::size_t edges_ = 0;
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n);
  std::size_t find(std::size_t x);
  bool unite(std::size_t a, std::size_t b);
  std::size_t components() const noexcept { return components_; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> rank_;
  std::size_t components_;
};

/// One component once edge directions are ignored. Graphs with zero or one
/// node count as connected.
bool is_connected_undirected(const Topology &topology);

/// Nodes with no incoming edge.
std::set<NodeId> isolated_nodes(const Topology &topology);

/// Uniform-ish random simple d-regular undirected graph, stored as a
/// symmetric digraph, regenerated until connected. Requires n*d even and
/// d < n.
Topology random_regular_graph(std::size_t n, std::size_t degree, Rng &rng);

/// Random simple digraph where every node has in- and out-degree k.
Topology random_regular_digraph(std::size_t n, std::size_t k, Rng &rng);

/// Edge-list CSV, header "round,src,dst".
void write_edges_csv_header(std::ostream &out);
void write_edges_csv(std::ostream &out, int round, const Topology &topology);

}  // namespace morph

#endif  // MORPH_TOPOLOGY_HPP
