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

#include "morph/peer_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace morph {
namespace {

void check_beta(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw InvalidArgument("softmax beta must be finite and non-negative");
  }
}

// Unnormalised max-shifted weights for the entries flagged in `active`.
std::vector<double> shifted_weights(const CandidateScores &scores, const std::vector<bool> &active,
                                    double beta) {
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (active[i]) {
      lowest = std::min(lowest, scores[i].similarity);
    }
  }
  std::vector<double> w(scores.size(), 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (active[i]) {
      w[i] = std::exp(-beta * (scores[i].similarity - lowest));
    }
  }
  return w;
}

}  // namespace

std::map<NodeId, double> softmax_weights(const CandidateScores &scores,
                                         const std::set<NodeId> &excluded, double beta) {
  check_beta(beta);
  std::vector<bool> active(scores.size());
  bool any = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    active[i] = !excluded.contains(scores[i].peer);
    any = any || active[i];
  }
  if (!any) {
    throw EmptyCandidateSet("softmax_weights: no candidates outside the excluded set");
  }
  const auto w = shifted_weights(scores, active, beta);
  double total = 0.0;
  for (double v : w) {
    total += v;
  }
  std::map<NodeId, double> p;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (active[i]) {
      p[scores[i].peer] = w[i] / total;
    }
  }
  return p;
}

std::vector<NodeId> sample_biased(const CandidateScores &scores, int k, double beta, Rng &rng) {
  check_beta(beta);
  if (k < 0) {
    throw InvalidArgument("sample_biased: k must be non-negative");
  }
  const std::size_t draws = std::min(static_cast<std::size_t>(k), scores.size());
  std::vector<bool> active(scores.size(), true);
  std::vector<NodeId> chosen;
  chosen.reserve(draws);
  for (std::size_t d = 0; d < draws; ++d) {
    const auto w = shifted_weights(scores, active, beta);
    double total = 0.0;
    for (double v : w) {
      total += v;
    }
    const double target = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t pick = scores.size();
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (!active[i]) {
        continue;
      }
      pick = i;  // last active entry absorbs rounding at the top end
      acc += w[i];
      if (target < acc) {
        break;
      }
    }
    active[pick] = false;
    chosen.push_back(scores[pick].peer);
  }
  return chosen;
}

std::vector<NodeId> update_wanted_senders(NodeId self, const CandidateScores &scores,
                                          const std::set<NodeId> &all_known,
                                          const SelectionParams &params, Rng &rng) {
  if (params.view_size < 1 || params.biased_count < 0 ||
      params.biased_count > params.view_size) {
    throw InvalidArgument("selection params need 0 <= biased_count <= view_size, view_size >= 1");
  }
  std::set<NodeId> scored;
  for (const auto &c : scores) {
    if (c.peer == self) {
      throw InvalidArgument("candidate scores must not contain the selecting node");
    }
    if (!scored.insert(c.peer).second) {
      throw InvalidArgument("candidate scores contain a duplicate peer");
    }
  }
  std::set<NodeId> known = all_known;
  known.erase(self);
  const auto s = static_cast<std::size_t>(params.view_size);
  if (known.size() < s) {
    throw InsufficientPeers("update_wanted_senders: " + std::to_string(known.size()) +
                            " known peers, view needs " + std::to_string(s));
  }

  std::vector<NodeId> view = sample_biased(scores, params.biased_count, params.beta, rng);
  const std::set<NodeId> biased(view.begin(), view.end());
  const std::size_t need = s - view.size();

  std::vector<NodeId> unscored;
  std::vector<NodeId> scored_rest;
  for (NodeId p : known) {
    if (!scored.contains(p)) {
      unscored.push_back(p);
    } else if (!biased.contains(p)) {
      scored_rest.push_back(p);
    }
  }
  if (unscored.size() >= need) {
    for (NodeId p : sample_distinct(rng, std::move(unscored), need)) {
      view.push_back(p);
    }
    return view;
  }
  const std::size_t available = unscored.size();
  const std::size_t shortfall = need - available;
  for (NodeId p : sample_distinct(rng, std::move(unscored), available)) {
    view.push_back(p);
  }
  for (NodeId p : sample_distinct(rng, std::move(scored_rest), shortfall)) {
    view.push_back(p);
  }
  return view;
}

}  // namespace morph
