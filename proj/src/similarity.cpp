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

#include "morph/similarity.hpp"

#include <algorithm>
#include <cmath>

namespace morph {
namespace {

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

template <typename SimToReporter>
std::optional<double> estimate_impl(SimToReporter &&sim_to, const SimilarityHistory &history,
                                    NodeId target, const std::optional<StalenessWindow> &window) {
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto &report : history.reports(target)) {
    if (window && window->current_round - report.round > window->max_age) {
      continue;
    }
    const std::optional<double> own_to_y = sim_to(report.reporter);
    if (!own_to_y) {
      continue;
    }
    sum += *own_to_y * report.value;
    ++used;
  }
  if (used == 0) {
    return std::nullopt;
  }
  return clamp_unit(sum / static_cast<double>(used));
}

}  // namespace

std::optional<double> try_cosine_similarity(const ModelParams &a, const ModelParams &b) {
  if (!a.same_shape(b)) {
    throw DimensionMismatch("cosine_similarity: model shapes differ");
  }
  if (a.num_layers() == 0) {
    return std::nullopt;
  }
  double total = 0.0;
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    const auto &x = a.layers()[l].values;
    const auto &y = b.layers()[l].values;
    double dot = 0.0;
    double xx = 0.0;
    double yy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      dot += x[i] * y[i];
      xx += x[i] * x[i];
      yy += y[i] * y[i];
    }
    const double nx = std::sqrt(xx);
    const double ny = std::sqrt(yy);
    if (nx < kMinLayerNorm || ny < kMinLayerNorm) {
      return std::nullopt;
    }
    // nx * ny commutes, so swapping arguments is bit-identical.
    total += dot / (nx * ny);
  }
  return clamp_unit(total / static_cast<double>(a.num_layers()));
}

double cosine_similarity(const ModelParams &a, const ModelParams &b) {
  const auto sim = try_cosine_similarity(a, b);
  if (!sim) {
    throw DegenerateLayer("cosine_similarity: a layer has near-zero norm");
  }
  return *sim;
}

void SimilarityHistory::record(NodeId target, const SimilarityReport &report) {
  if (!(report.value >= -1.0 && report.value <= 1.0)) {
    throw InvalidArgument("similarity report value outside [-1, 1]");
  }
  if (report.round < 0) {
    throw InvalidArgument("similarity report round must be non-negative");
  }
  auto &buf = buffers_[target];
  buf.push_back(report);
  while (buf.size() > kCapacity) {
    buf.pop_front();
  }
}

const std::deque<SimilarityReport> &SimilarityHistory::reports(NodeId target) const {
  static const std::deque<SimilarityReport> kEmpty;
  const auto it = buffers_.find(target);
  return it == buffers_.end() ? kEmpty : it->second;
}

std::vector<NodeId> SimilarityHistory::targets() const {
  std::vector<NodeId> out;
  out.reserve(buffers_.size());
  for (const auto &[id, buf] : buffers_) {
    if (!buf.empty()) {
      out.push_back(id);
    }
  }
  return out;
}

std::optional<double> estimate_similarity(const ModelParams &own,
                                          const std::map<NodeId, ModelParams> &known_models,
                                          const SimilarityHistory &history, NodeId target,
                                          std::optional<StalenessWindow> window) {
  return estimate_impl(
      [&](NodeId y) -> std::optional<double> {
        const auto it = known_models.find(y);
        if (it == known_models.end()) {
          return std::nullopt;
        }
        return try_cosine_similarity(own, it->second);
      },
      history, target, window);
}

std::optional<double> estimate_similarity(const std::map<NodeId, double> &own_to_reporter,
                                          const SimilarityHistory &history, NodeId target,
                                          std::optional<StalenessWindow> window) {
  return estimate_impl(
      [&](NodeId y) -> std::optional<double> {
        const auto it = own_to_reporter.find(y);
        if (it == own_to_reporter.end()) {
          return std::nullopt;
        }
        return it->second;
      },
      history, target, window);
}

double angular_triangle_slack(double sim_ij, double sim_jk, double sim_ik) {
  for (double s : {sim_ij, sim_jk, sim_ik}) {
    if (!(s >= -1.0 && s <= 1.0)) {
      throw std::domain_error("angular_triangle_slack: similarity outside [-1, 1]");
    }
  }
  return std::acos(sim_ij) + std::acos(sim_jk) - std::acos(sim_ik);
}

}  // namespace morph
