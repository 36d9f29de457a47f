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

#ifndef MORPH_PEER_SELECTION_HPP
#define MORPH_PEER_SELECTION_HPP

#include <map>
#include <set>
#include <vector>

#include "morph/common.hpp"
#include "morph/rng.hpp"

namespace morph {

enum class ScoreSource { direct, estimated };

struct CandidateScore {
  NodeId peer = 0;
  double similarity = 0.0;
  ScoreSource source = ScoreSource::direct;
};

/// Scored candidates. Peer ids are unique and never the selecting node.
using CandidateScores = std::vector<CandidateScore>;

struct SelectionParams {
  int view_size = 3;     // s
  int biased_count = 1;  // k, at most s
  double beta = 500.0;   // softmax sharpness
};

/// p_j proportional to exp(-beta * sim_j) over candidates not in `excluded`,
/// computed with a max-shift so large beta cannot overflow. Throws
/// EmptyCandidateSet when every candidate is excluded.
std::map<NodeId, double> softmax_weights(const CandidateScores &scores,
                                         const std::set<NodeId> &excluded, double beta);

/// Draws min(k, |scores|) distinct peers one at a time, renormalising the
/// softmax over the remaining candidates after every draw. Draw order is
/// preserved.
std::vector<NodeId> sample_biased(const CandidateScores &scores, int k, double beta, Rng &rng);

/// Hybrid view V = C_b + R of exactly `view_size` peers.
///
/// C_b holds up to `biased_count` softmax draws from the scored candidates.
/// R is uniform: it draws from the unscored known peers, and if there are
/// too few of those it takes all of them and tops up uniformly from the
/// scored peers not already in C_b. When fewer than `biased_count` peers are
/// scored, the random stage grows to keep |V| = view_size.
///
/// Throws InsufficientPeers if `all_known` (excluding `self`) has fewer than
/// view_size members.
std::vector<NodeId> update_wanted_senders(NodeId self, const CandidateScores &scores,
                                          const std::set<NodeId> &all_known,
                                          const SelectionParams &params, Rng &rng);

}  // namespace morph

#endif  // MORPH_PEER_SELECTION_HPP
