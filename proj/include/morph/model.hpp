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

#ifndef MORPH_MODEL_HPP
#define MORPH_MODEL_HPP

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "morph/common.hpp"
#include "morph/rng.hpp"

namespace morph {

struct Layer {
  std::string name;
  std::vector<double> values;

  bool operator==(const Layer &) const = default;
};

/// A model as an ordered list of named parameter vectors. The layer list is
/// the only source of architecture information: classifiers recover their
/// dimensions from layer names and lengths.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(std::vector<Layer> layers) : layers_(std::move(layers)) {}

  const std::vector<Layer> &layers() const noexcept { return layers_; }
  std::vector<Layer> &layers() noexcept { return layers_; }
  std::size_t num_layers() const noexcept { return layers_.size(); }
  std::size_t parameter_count() const noexcept;

  /// Same layer names, order, and per-layer lengths.
  bool same_shape(const ModelParams &other) const noexcept;
  const Layer *find(std::string_view name) const noexcept;
  bool all_finite() const noexcept;

  bool operator==(const ModelParams &) const = default;

 private:
  std::vector<Layer> layers_;
};

struct Example {
  std::vector<double> features;
  int label = 0;

  bool operator==(const Example &) const = default;
};

struct Dataset {
  std::vector<Example> examples;
  int num_classes = 0;

  std::size_t size() const noexcept { return examples.size(); }
  bool empty() const noexcept { return examples.empty(); }
  std::size_t feature_dim() const noexcept {
    return examples.empty() ? 0 : examples.front().features.size();
  }
  /// Throws InvalidArgument when empty, ragged, or a label is out of range.
  void validate() const;

  bool operator==(const Dataset &) const = default;
};

enum class ModelKind { softmax_regression, mlp };

struct ModelShape {
  ModelKind kind = ModelKind::softmax_regression;
  int input_dim = 0;
  int num_classes = 0;
  int hidden_units = 0;  // mlp only
};

/// Small Gaussian initialisation; every layer (biases included) is nonzero
/// so that per-layer cosine similarity is defined from round one.
ModelParams init_model(const ModelShape &shape, Rng &rng, double scale = 0.01);

/// Recovers the architecture from layer names and lengths.
/// Throws DimensionMismatch on unrecognised layouts.
ModelShape infer_shape(const ModelParams &model);

std::vector<double> predict_logits(const ModelParams &model, std::span<const double> features);

struct LossAndGradient {
  double loss = 0.0;  // mean cross-entropy over the batch
  ModelParams gradient;
};

LossAndGradient loss_and_gradient(const ModelParams &model, std::span<const Example> batch);

/// One gradient-descent step on the mean cross-entropy of `batch`:
/// model - gamma * grad. The input is not modified.
ModelParams local_sgd_step(const ModelParams &model, std::span<const Example> batch, double gamma);

struct Evaluation {
  double accuracy = 0.0;  // fraction in [0, 1]
  double loss = 0.0;      // mean cross-entropy
};

Evaluation evaluate(const ModelParams &model, const Dataset &testset);

/// Uniform mean of `own` and every model in `received`, summed in the order
/// given (own first).
ModelParams average_models(const ModelParams &own, std::span<const ModelParams> received);

/// Uniform mean of the pointed-to models, summed in the order given.
ModelParams average_models(std::span<const ModelParams *const> models);

/// Draws minibatch indices without replacement, reshuffling at each epoch
/// boundary. A batch never straddles two epochs: when fewer than batch_size
/// indices are left, they are skipped and a new epoch starts.
class BatchSampler {
 public:
  BatchSampler(std::size_t shard_size, std::size_t batch_size);

  std::vector<std::size_t> next(Rng &rng);

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_size_;
  std::size_t cursor_;
};

}  // namespace morph

#endif  // MORPH_MODEL_HPP
