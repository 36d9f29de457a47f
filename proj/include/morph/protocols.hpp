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

#ifndef MORPH_PROTOCOLS_HPP
#define MORPH_PROTOCOLS_HPP

#include <map>
#include <memory>
#include <set>
#include <span>
#include <vector>

#include "morph/common.hpp"
#include "morph/dataset.hpp"
#include "morph/model.hpp"
#include "morph/negotiation.hpp"
#include "morph/peer_selection.hpp"
#include "morph/similarity.hpp"
#include "morph/topology.hpp"

namespace morph {

inline constexpr std::size_t kMaxSimilarityGossip = 64;
inline constexpr std::size_t kMaxPeerGossip = 16;

struct SimilarityEntry {
  NodeId peer = 0;
  double value = 0.0;
  int round = 0;
};

/// A half-updated model sent along one edge. The model is shared between
/// all receivers of the same sender in a round.
struct ModelMessage {
  NodeId sender = 0;
  int round = 0;
  std::shared_ptr<const ModelParams> model;
  std::vector<SimilarityEntry> similarity_gossip;
  std::vector<NodeId> peer_gossip;

  /// Byte accounting: 4 bytes per parameter plus 12 per gossip entry.
  std::size_t bytes_estimate() const;
};

struct CachedSimilarity {
  double value = 0.0;
  int round = 0;
};

/// One participant. `data_rng` only drives minibatch sampling and
/// `protocol_rng` only drives peer choices, so protocols that make
/// different numbers of random choices still see identical data streams.
struct NodeState {
  NodeId id = 0;
  ModelParams model;       // x_t
  ModelParams half_model;  // x_{t+1/2}
  std::set<NodeId> known_peers;
  std::vector<NodeId> wanted_senders;
  std::map<NodeId, CachedSimilarity> similarity_cache;  // direct measurements only
  SimilarityHistory history;
  std::map<NodeId, ModelParams> neighbor_models;  // models received in the last round
  Dataset shard;
  BatchSampler sampler{1, 1};
  Rng data_rng;
  Rng protocol_rng;
  std::size_t dropped_messages = 0;
};

/// x_{t+1/2} = x_t - gamma * grad on the next minibatch from node.sampler.
void local_training_step(NodeState &node, double gamma);

/// Uniform average of the node's half model and every received model, summed
/// in ascending sender id with the node itself in its id slot. Every node
/// that averages the same set of models gets bit-identical parameters.
ModelParams aggregate_uniform(const NodeState &node, std::span<const ModelMessage> inbox);

// --- Morph -----------------------------------------------------------------

struct MorphParams {
  int view_size = 3;     // s
  int random_slots = 2;  // d_r; biased slots are s - d_r
  double beta = 500.0;
  int delta_r = 5;
  int staleness_factor = 10;  // reports older than factor * delta_r are ignored

  int max_report_age() const { return staleness_factor * delta_r; }
};

/// Direct similarity where a fresh measurement exists, otherwise the
/// transitive estimate; peers with neither are left unscored.
CandidateScores morph_candidate_scores(const NodeState &node, int round, const MorphParams &params);

/// On rounds divisible by delta_r, replaces wanted_senders with a fresh
/// hybrid view. Returns true if a re-selection happened.
bool morph_maybe_update_wanted_senders(NodeState &node, int round, const MorphParams &params);

/// Wish list for negotiation: wanted senders first (in view order), then the
/// remaining known peers by decreasing dissimilarity (ties: lower id).
/// Dissimilarity is 1 - similarity, or 1 for unscored peers.
std::vector<ConnectionRequest> morph_requests(const NodeState &node, int round,
                                              const MorphParams &params);

/// Outgoing payload: half model, up to 64 most recent direct similarities,
/// and up to 16 peer ids sampled uniformly from known_peers.
ModelMessage morph_make_message(NodeState &node, int round);

/// Processes the round's inbox: refreshes direct similarities, records
/// gossiped reports, merges peer gossip, and averages. Malformed messages
/// (shape mismatch, out-of-range similarity, missing model) are dropped and
/// counted.
void morph_receive(NodeState &node, std::span<const ModelMessage> inbox, int round);

/// Plain relay payload used by the baselines.
ModelMessage plain_message(const NodeState &node, int round);

// --- Epidemic Learning -----------------------------------------------------

/// EL-Local: k distinct targets drawn uniformly from [n] \ {self}.
std::vector<NodeId> epidemic_targets(NodeState &node, std::size_t num_nodes, std::size_t k);

// --- Static topology with Metropolis-Hastings mixing -----------------------

/// W_ij = 1 / (1 + max(d_i, d_j)) on edges, W_ii = 1 - sum_j W_ij.
/// `graph` must be symmetric.
std::vector<std::vector<double>> metropolis_hastings_matrix(const Topology &graph);

/// x_i <- W_ii x_i + sum_j W_ij x_j over the received neighbour models,
/// summed in ascending id order.
ModelParams metropolis_hastings_aggregate(const NodeState &node,
                                          std::span<const ModelMessage> inbox,
                                          const std::vector<std::size_t> &degrees);

}  // namespace morph

#endif  // MORPH_PROTOCOLS_HPP
