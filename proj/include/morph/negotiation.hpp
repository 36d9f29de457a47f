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

#ifndef MORPH_NEGOTIATION_HPP
#define MORPH_NEGOTIATION_HPP

#include <vector>

#include "morph/common.hpp"
#include "morph/rng.hpp"
#include "morph/topology.hpp"

namespace morph {

/// "requester wants sender's model"; senders rank requests by dissimilarity.
struct ConnectionRequest {
  NodeId requester = 0;
  NodeId sender = 0;
  double dissimilarity = 1.0;
};

/// preferences[i] is requester i's ordered wish list. Every entry must have
/// requester == i, sender != i, and no sender may repeat.
using PreferenceLists = std::vector<std::vector<ConnectionRequest>>;

struct NegotiationResult {
  Topology topology;
  int iterations = 0;                    // proposal rounds actually run
  int iteration_bound = 0;               // ceil((n-1) / capacity)
  std::size_t repaired_slots = 0;        // in-slots filled after the proposal phase
  std::size_t over_capacity_slots = 0;   // repairs that exceeded a sender's cap
  std::vector<std::size_t> proposals_made;  // per requester: list prefix proposed to
};

/// ceil((n - 1) / capacity), at least 1.
int negotiation_iteration_bound(std::size_t num_nodes, std::size_t capacity);

/// Requester-proposing deferred acceptance with sender capacity `capacity`.
///
/// Each round, every requester short of `in_degree` accepted senders
/// proposes to the next entries of its list. A sender keeps the
/// highest-dissimilarity requests up to capacity (ties: lower requester id)
/// and rejects or evicts the rest. At most iteration_bound rounds run; then
/// any still-empty in-slot is given a uniformly random sender with spare
/// capacity, or, failing that, any sender not already used.
NegotiationResult negotiate(const PreferenceLists &preferences, std::size_t in_degree,
                            std::size_t capacity, Rng &rng);

}  // namespace morph

#endif  // MORPH_NEGOTIATION_HPP
