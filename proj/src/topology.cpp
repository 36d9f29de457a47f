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

#include "morph/topology.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <ostream>

namespace morph {
namespace {

constexpr int kMaxRestarts = 10000;
constexpr int kRandomTries = 64;

// Pairs each remaining "left" stub with a "right" stub so that every pair is
// accepted by `ok`. Gives up (nullopt) when the leftovers admit no valid pair.
template <typename Ok>
std::optional<std::vector<std::pair<NodeId, NodeId>>> pair_stubs(std::vector<NodeId> left,
                                                                 std::vector<NodeId> right,
                                                                 Ok &&ok, Rng &rng) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  std::set<std::pair<NodeId, NodeId>> made;
  while (!left.empty()) {
    std::optional<std::pair<std::size_t, std::size_t>> hit;
    for (int t = 0; t < kRandomTries && !hit; ++t) {
      const std::size_t a = uniform_index(rng, left.size());
      const std::size_t b = uniform_index(rng, right.size());
      if (ok(made, left[a], right[b])) {
        hit = {a, b};
      }
    }
    for (std::size_t a = 0; a < left.size() && !hit; ++a) {
      for (std::size_t b = 0; b < right.size() && !hit; ++b) {
        if (ok(made, left[a], right[b])) {
          hit = {a, b};
        }
      }
    }
    if (!hit) {
      return std::nullopt;
    }
    pairs.emplace_back(left[hit->first], right[hit->second]);
    made.insert(pairs.back());
    left.erase(left.begin() + static_cast<std::ptrdiff_t>(hit->first));
    right.erase(right.begin() + static_cast<std::ptrdiff_t>(hit->second));
  }
  return pairs;
}

}  // namespace

Topology::Topology(std::size_t num_nodes) : senders_(num_nodes), out_degree_(num_nodes, 0) {}

void Topology::check(NodeId node) const {
  if (node >= senders_.size()) {
    throw InvalidArgument("node id " + std::to_string(node) + " out of range");
  }
}

bool Topology::add_edge(NodeId src, NodeId dst) {
  check(src);
  check(dst);
  if (src == dst) {
    throw InvalidArgument("self-edge on node " + std::to_string(src));
  }
  if (!senders_[dst].insert(src).second) {
    return false;
  }
  ++out_degree_[src];
  ++edges_;
  return true;
}

bool Topology::has_edge(NodeId src, NodeId dst) const {
  check(src);
  check(dst);
  return senders_[dst].contains(src);
}

const std::set<NodeId> &Topology::senders_of(NodeId node) const {
  check(node);
  return senders_[node];
}

std::vector<NodeId> Topology::receivers_of(NodeId node) const {
  check(node);
  std::vector<NodeId> out;
  for (NodeId dst = 0; dst < senders_.size(); ++dst) {
    if (senders_[dst].contains(node)) {
      out.push_back(dst);
    }
  }
  return out;
}

std::size_t Topology::out_degree(NodeId node) const {
  check(node);
  return out_degree_[node];
}

std::vector<std::pair<NodeId, NodeId>> Topology::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(edges_);
  for (NodeId dst = 0; dst < senders_.size(); ++dst) {
    for (NodeId src : senders_[dst]) {
      out.emplace_back(src, dst);
    }
  }
  return out;
}

UnionFind::UnionFind(std::size_t n) : parent_(n), rank_(n, 0), components_(n) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t UnionFind::find(std::size_t x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool UnionFind::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) {
    return false;
  }
  if (rank_[a] < rank_[b]) {
    std::swap(a, b);
  }
  parent_[b] = a;
  if (rank_[a] == rank_[b]) {
    ++rank_[a];
  }
  --components_;
  return true;
}

bool is_connected_undirected(const Topology &topology) {
  const std::size_t n = topology.num_nodes();
  if (n <= 1) {
    return true;
  }
  UnionFind uf(n);
  for (NodeId dst = 0; dst < n; ++dst) {
    for (NodeId src : topology.senders_of(dst)) {
      uf.unite(src, dst);
    }
  }
  return uf.components() == 1;
}

std::set<NodeId> isolated_nodes(const Topology &topology) {
  std::set<NodeId> out;
  for (NodeId i = 0; i < topology.num_nodes(); ++i) {
    if (topology.in_degree(i) == 0) {
      out.insert(i);
    }
  }
  return out;
}

Topology random_regular_graph(std::size_t n, std::size_t degree, Rng &rng) {
  if (degree >= n || (n * degree) % 2 != 0) {
    throw InvalidArgument("random_regular_graph needs degree < n and n*degree even");
  }
  std::vector<NodeId> stubs;
  for (NodeId i = 0; i < n; ++i) {
    stubs.insert(stubs.end(), degree, i);
  }
  for (int attempt = 0; attempt < kMaxRestarts; ++attempt) {
    std::shuffle(stubs.begin(), stubs.end(), rng);
    // Split into two halves and pair across them; the shuffle makes the
    // split itself random.
    std::vector<NodeId> left(stubs.begin(), stubs.begin() + static_cast<std::ptrdiff_t>(stubs.size() / 2));
    std::vector<NodeId> right(stubs.begin() + static_cast<std::ptrdiff_t>(stubs.size() / 2), stubs.end());
    auto pairs = pair_stubs(
        std::move(left), std::move(right),
        [](const auto &made, NodeId u, NodeId v) {
          return u != v && !made.contains({u, v}) && !made.contains({v, u});
        },
        rng);
    if (!pairs) {
      continue;
    }
    Topology t(n);
    for (const auto &[u, v] : *pairs) {
      t.add_edge(u, v);
      t.add_edge(v, u);
    }
    if (is_connected_undirected(t)) {
      return t;
    }
  }
  throw std::runtime_error("random_regular_graph: no connected graph found");
}

Topology random_regular_digraph(std::size_t n, std::size_t k, Rng &rng) {
  if (k >= n) {
    throw InvalidArgument("random_regular_digraph needs k < n");
  }
  std::vector<NodeId> out_stubs;
  for (NodeId i = 0; i < n; ++i) {
    out_stubs.insert(out_stubs.end(), k, i);
  }
  for (int attempt = 0; attempt < kMaxRestarts; ++attempt) {
    std::vector<NodeId> in_stubs = out_stubs;
    std::shuffle(in_stubs.begin(), in_stubs.end(), rng);
    auto pairs = pair_stubs(
        out_stubs, std::move(in_stubs),
        [](const auto &made, NodeId u, NodeId v) { return u != v && !made.contains({u, v}); },
        rng);
    if (!pairs) {
      continue;
    }
    Topology t(n);
    for (const auto &[u, v] : *pairs) {
      t.add_edge(u, v);
    }
    return t;
  }
  throw std::runtime_error("random_regular_digraph: pairing failed");
}

void write_edges_csv_header(std::ostream &out) { out << "round,src,dst\n"; }

void write_edges_csv(std::ostream &out, int round, const Topology &topology) {
  for (const auto &[src, dst] : topology.edges()) {
    out << round << ',' << src << ',' << dst << '\n';
  }
}

}  // namespace morph
