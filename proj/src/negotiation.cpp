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

#include "morph/negotiation.hpp"

#include <algorithm>
#include <set>

namespace morph {
namespace {

struct Held {
  double dissimilarity;
  NodeId requester;
};

bool outranks(const Held &a, const Held &b) {
  if (a.dissimilarity != b.dissimilarity) {
    return a.dissimilarity > b.dissimilarity;
  }
  return a.requester < b.requester;
}

void validate(const PreferenceLists &prefs) {
  const std::size_t n = prefs.size();
  for (NodeId i = 0; i < n; ++i) {
    std::set<NodeId> seen;
    for (const auto &r : prefs[i]) {
      if (r.requester != i) {
        throw InvalidArgument("preference list " + std::to_string(i) +
                              " holds a request from another node");
      }
      if (r.sender == i || r.sender >= n) {
        throw InvalidArgument("preference list " + std::to_string(i) + " names an invalid sender");
      }
      if (!seen.insert(r.sender).second) {
        throw InvalidArgument("preference list " + std::to_string(i) + " repeats a sender");
      }
    }
  }
}

}  // namespace

int negotiation_iteration_bound(std::size_t num_nodes, std::size_t capacity) {
  if (capacity == 0) {
    throw InvalidArgument("negotiation capacity must be positive");
  }
  if (num_nodes <= 1) {
    return 1;
  }
  return static_cast<int>((num_nodes - 1 + capacity - 1) / capacity);
}

NegotiationResult negotiate(const PreferenceLists &preferences, std::size_t in_degree,
                            std::size_t capacity, Rng &rng) {
  validate(preferences);
  const std::size_t n = preferences.size();
  NegotiationResult result;
  result.iteration_bound = negotiation_iteration_bound(n, capacity);
  result.proposals_made.assign(n, 0);

  std::vector<std::vector<Held>> held(n);
  std::vector<std::size_t> accepted(n, 0);

  while (result.iterations < result.iteration_bound) {
    std::vector<std::vector<Held>> incoming(n);
    bool any = false;
    for (NodeId i = 0; i < n; ++i) {
      const auto &list = preferences[i];
      std::size_t &next = result.proposals_made[i];
      for (std::size_t want = in_degree - std::min(in_degree, accepted[i]);
           want > 0 && next < list.size(); --want, ++next) {
        incoming[list[next].sender].push_back({list[next].dissimilarity, i});
        any = true;
      }
    }
    if (!any) {
      break;
    }
    ++result.iterations;

    for (NodeId j = 0; j < n; ++j) {
      if (incoming[j].empty()) {
        continue;
      }
      auto &pool = held[j];
      for (const Held &h : incoming[j]) {
        pool.push_back(h);
        ++accepted[h.requester];
      }
      std::stable_sort(pool.begin(), pool.end(), outranks);
      while (pool.size() > capacity) {
        --accepted[pool.back().requester];
        pool.pop_back();
      }
    }
  }

  Topology topology(n);
  for (NodeId j = 0; j < n; ++j) {
    for (const Held &h : held[j]) {
      topology.add_edge(j, h.requester);
    }
  }

  for (NodeId i = 0; i < n; ++i) {
    while (topology.in_degree(i) < in_degree) {
      std::vector<NodeId> spare;
      std::vector<NodeId> any_free;
      for (NodeId j = 0; j < n; ++j) {
        if (j == i || topology.has_edge(j, i)) {
          continue;
        }
        any_free.push_back(j);
        if (topology.out_degree(j) < capacity) {
          spare.push_back(j);
        }
      }
      if (any_free.empty()) {
        break;
      }
      const bool over = spare.empty();
      const auto &pool = over ? any_free : spare;
      topology.add_edge(pool[uniform_index(rng, pool.size())], i);
      ++result.repaired_slots;
      if (over) {
        ++result.over_capacity_slots;
      }
    }
  }
  result.topology = std::move(topology);
  return result;
}

}  // namespace morph
