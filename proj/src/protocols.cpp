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

#include "morph/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace morph {
namespace {

const ModelParams &current_model(const NodeState &node) {
  return node.half_model.num_layers() > 0 ? node.half_model : node.model;
}

bool well_formed(const NodeState &node, const ModelMessage &msg) {
  if (!msg.model || msg.sender == node.id || !msg.model->same_shape(current_model(node))) {
    return false;
  }
  return std::all_of(msg.similarity_gossip.begin(), msg.similarity_gossip.end(),
                     [](const SimilarityEntry &e) {
                       return e.value >= -1.0 && e.value <= 1.0 && e.round >= 0;
                     });
}

}  // namespace

std::size_t ModelMessage::bytes_estimate() const {
  const std::size_t params = model ? model->parameter_count() : 0;
  return params * 4 + 12 * (similarity_gossip.size() + peer_gossip.size());
}

void local_training_step(NodeState &node, double gamma) {
  const auto idx = node.sampler.next(node.data_rng);
  std::vector<Example> batch;
  batch.reserve(idx.size());
  for (std::size_t i : idx) {
    batch.push_back(node.shard.examples[i]);
  }
  node.half_model = local_sgd_step(node.model, batch, gamma);
}

ModelParams aggregate_uniform(const NodeState &node, std::span<const ModelMessage> inbox) {
  std::vector<std::pair<NodeId, const ModelParams *>> parts;
  parts.reserve(inbox.size() + 1);
  parts.emplace_back(node.id, &current_model(node));
  for (const auto &msg : inbox) {
    parts.emplace_back(msg.sender, msg.model.get());
  }
  std::sort(parts.begin(), parts.end(),
            [](const auto &a, const auto &b) { return a.first < b.first; });
  std::vector<const ModelParams *> models;
  models.reserve(parts.size());
  for (const auto &p : parts) {
    models.push_back(p.second);
  }
  return average_models(std::span<const ModelParams *const>(models));
}

CandidateScores morph_candidate_scores(const NodeState &node, int round, const MorphParams &params) {
  const ModelParams &own = current_model(node);
  const StalenessWindow window{round, params.max_report_age()};
  CandidateScores scores;
  for (NodeId peer : node.known_peers) {
    if (peer == node.id) {
      continue;
    }
    const auto cached = node.similarity_cache.find(peer);
    if (cached != node.similarity_cache.end() &&
        round - cached->second.round <= params.max_report_age()) {
      scores.push_back({peer, cached->second.value, ScoreSource::direct});
      continue;
    }
    const auto estimate =
        estimate_similarity(own, node.neighbor_models, node.history, peer, window);
    if (estimate) {
      scores.push_back({peer, *estimate, ScoreSource::estimated});
    }
  }
  return scores;
}

bool morph_maybe_update_wanted_senders(NodeState &node, int round, const MorphParams &params) {
  if (params.delta_r < 1 || round % params.delta_r != 0) {
    return false;
  }
  const CandidateScores scores = morph_candidate_scores(node, round, params);
  const SelectionParams selection{params.view_size,
                                  std::max(0, params.view_size - params.random_slots), params.beta};
  try {
    node.wanted_senders =
        update_wanted_senders(node.id, scores, node.known_peers, selection, node.protocol_rng);
  } catch (const InsufficientPeers &) {
    return false;
  }
  return true;
}

std::vector<ConnectionRequest> morph_requests(const NodeState &node, int round,
                                              const MorphParams &params) {
  std::map<NodeId, double> dissimilarity;
  for (NodeId peer : node.known_peers) {
    dissimilarity[peer] = 1.0;
  }
  for (const auto &c : morph_candidate_scores(node, round, params)) {
    dissimilarity[c.peer] = 1.0 - c.similarity;
  }
  std::vector<ConnectionRequest> list;
  std::set<NodeId> listed;
  for (NodeId peer : node.wanted_senders) {
    if (peer == node.id || !listed.insert(peer).second) {
      continue;
    }
    const auto it = dissimilarity.find(peer);
    list.push_back({node.id, peer, it == dissimilarity.end() ? 1.0 : it->second});
  }
  std::vector<ConnectionRequest> rest;
  for (const auto &[peer, d] : dissimilarity) {
    if (peer != node.id && !listed.contains(peer)) {
      rest.push_back({node.id, peer, d});
    }
  }
  std::stable_sort(rest.begin(), rest.end(), [](const auto &a, const auto &b) {
    return a.dissimilarity > b.dissimilarity;
  });
  list.insert(list.end(), rest.begin(), rest.end());
  return list;
}

ModelMessage plain_message(const NodeState &node, int round) {
  ModelMessage msg;
  msg.sender = node.id;
  msg.round = round;
  msg.model = std::make_shared<const ModelParams>(current_model(node));
  return msg;
}

ModelMessage morph_make_message(NodeState &node, int round) {
  ModelMessage msg = plain_message(node, round);
  std::vector<SimilarityEntry> entries;
  entries.reserve(node.similarity_cache.size());
  for (const auto &[peer, cached] : node.similarity_cache) {
    entries.push_back({peer, cached.value, cached.round});
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto &a, const auto &b) { return a.round > b.round; });
  if (entries.size() > kMaxSimilarityGossip) {
    entries.resize(kMaxSimilarityGossip);
  }
  msg.similarity_gossip = std::move(entries);
  msg.peer_gossip = sample_distinct(
      node.protocol_rng, std::vector<NodeId>(node.known_peers.begin(), node.known_peers.end()),
      kMaxPeerGossip);
  return msg;
}

void morph_receive(NodeState &node, std::span<const ModelMessage> inbox, int round) {
  std::vector<ModelMessage> accepted;
  accepted.reserve(inbox.size());
  for (const auto &msg : inbox) {
    if (well_formed(node, msg)) {
      accepted.push_back(msg);
    } else {
      ++node.dropped_messages;
    }
  }

  const ModelParams &own = current_model(node);
  node.neighbor_models.clear();
  for (const auto &msg : accepted) {
    if (const auto sim = try_cosine_similarity(own, *msg.model)) {
      node.similarity_cache[msg.sender] = {*sim, round};
    }
    node.neighbor_models[msg.sender] = *msg.model;
    for (const auto &e : msg.similarity_gossip) {
      if (e.peer == node.id || e.peer == msg.sender) {
        continue;
      }
      // Senders re-gossip their whole cache every round; a report already
      // on file (same reporter, same measurement round) is not new.
      const SimilarityReport report{e.round, msg.sender, e.value};
      const auto &known = node.history.reports(e.peer);
      if (std::find(known.begin(), known.end(), report) == known.end()) {
        node.history.record(e.peer, report);
      }
    }
    node.known_peers.insert(msg.sender);
    for (NodeId p : msg.peer_gossip) {
      if (p != node.id) {
        node.known_peers.insert(p);
      }
    }
  }
  node.model = aggregate_uniform(node, accepted);
}

std::vector<NodeId> epidemic_targets(NodeState &node, std::size_t num_nodes, std::size_t k) {
  std::vector<NodeId> pool;
  pool.reserve(num_nodes);
  for (NodeId j = 0; j < num_nodes; ++j) {
    if (j != node.id) {
      pool.push_back(j);
    }
  }
  return sample_distinct(node.protocol_rng, std::move(pool), k);
}

std::vector<std::vector<double>> metropolis_hastings_matrix(const Topology &graph) {
  const std::size_t n = graph.num_nodes();
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  for (NodeId i = 0; i < n; ++i) {
    double off = 0.0;
    for (NodeId j : graph.senders_of(i)) {
      const double d = static_cast<double>(std::max(graph.in_degree(i), graph.in_degree(j)));
      w[i][j] = 1.0 / (1.0 + d);
      off += w[i][j];
    }
    w[i][i] = 1.0 - off;
  }
  return w;
}

ModelParams metropolis_hastings_aggregate(const NodeState &node,
                                          std::span<const ModelMessage> inbox,
                                          const std::vector<std::size_t> &degrees) {
  const ModelParams &own = current_model(node);
  std::vector<std::tuple<NodeId, double, const ModelParams *>> parts;
  double off = 0.0;
  for (const auto &msg : inbox) {
    if (!msg.model || !msg.model->same_shape(own)) {
      throw DimensionMismatch("metropolis_hastings_aggregate: neighbour model shape differs");
    }
    const double d = static_cast<double>(std::max(degrees.at(node.id), degrees.at(msg.sender)));
    const double w = 1.0 / (1.0 + d);
    off += w;
    parts.emplace_back(msg.sender, w, msg.model.get());
  }
  parts.emplace_back(node.id, 1.0 - off, &own);
  std::sort(parts.begin(), parts.end(),
            [](const auto &a, const auto &b) { return std::get<0>(a) < std::get<0>(b); });

  ModelParams out = own;
  for (auto &l : out.layers()) {
    std::fill(l.values.begin(), l.values.end(), 0.0);
  }
  for (const auto &[id, w, m] : parts) {
    const auto &src = m->layers();
    auto &dst = out.layers();
    for (std::size_t l = 0; l < dst.size(); ++l) {
      for (std::size_t i = 0; i < dst[l].values.size(); ++i) {
        dst[l].values[i] += w * src[l].values[i];
      }
    }
  }
  return out;
}

}  // namespace morph
