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

#ifndef MORPH_SIMILARITY_HPP
#define MORPH_SIMILARITY_HPP

#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "morph/common.hpp"
#include "morph/model.hpp"

namespace morph {

/// Layers with an L2 norm below this are treated as degenerate.
inline constexpr double kMinLayerNorm = 1e-12;

/// Layer-averaged cosine similarity, clamped to [-1, 1]. Symmetric to the
/// last bit. Throws DegenerateLayer if any layer of either model is
/// (near-)zero and DimensionMismatch on differing shapes.
double cosine_similarity(const ModelParams &a, const ModelParams &b);

/// As cosine_similarity, but a degenerate layer yields nullopt.
std::optional<double> try_cosine_similarity(const ModelParams &a, const ModelParams &b);

/// A gossiped statement "reporter measured `value` against some target in
/// `round`".
struct SimilarityReport {
  int round = 0;
  NodeId reporter = 0;
  double value = 0.0;

  bool operator==(const SimilarityReport &) const = default;
};

/// Per-target FIFO of the most recent reports. Duplicates from the same
/// reporter are kept.
class SimilarityHistory {
 public:
  static constexpr std::size_t kCapacity = 5;

  /// Throws InvalidArgument if value is outside [-1, 1] or round < 0.
  void record(NodeId target, const SimilarityReport &report);

  const std::deque<SimilarityReport> &reports(NodeId target) const;
  std::vector<NodeId> targets() const;

  bool operator==(const SimilarityHistory &) const = default;

 private:
  std::map<NodeId, std::deque<SimilarityReport>> buffers_;
};

/// Reports older than `max_age` rounds relative to `current_round` are
/// ignored by the estimator.
struct StalenessWindow {
  int current_round = 0;
  int max_age = 0;
};

/// Transitive estimate of sim(own, target): the mean over usable reports
/// (t, y, s_yz) of cosine(own, model_y) * s_yz. A report is usable when y
/// has a model in `known_models` with no degenerate layer (and, with a
/// window, the report is fresh enough). nullopt when nothing is usable.
std::optional<double> estimate_similarity(const ModelParams &own,
                                          const std::map<NodeId, ModelParams> &known_models,
                                          const SimilarityHistory &history, NodeId target,
                                          std::optional<StalenessWindow> window = std::nullopt);

/// Same estimator with precomputed own-to-reporter similarities.
std::optional<double> estimate_similarity(const std::map<NodeId, double> &own_to_reporter,
                                          const SimilarityHistory &history, NodeId target,
                                          std::optional<StalenessWindow> window = std::nullopt);

/// arccos(s_ij) + arccos(s_jk) - arccos(s_ik). Non-negative for cosines of
/// actual vectors. Throws std::domain_error on inputs outside [-1, 1].
double angular_triangle_slack(double sim_ij, double sim_jk, double sim_ik);

}  // namespace morph

#endif  // MORPH_SIMILARITY_HPP
