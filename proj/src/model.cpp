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

#include "morph/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace morph {
namespace {

constexpr std::string_view kLinear = "linear";
constexpr std::string_view kBias = "bias";
constexpr std::string_view kHidden = "hidden";
constexpr std::string_view kHiddenBias = "hidden_bias";
constexpr std::string_view kOutput = "output";
constexpr std::string_view kOutputBias = "output_bias";

// Resolved view of a classifier's parameters.
struct Net {
  ModelShape shape;
  const std::vector<double> *w1 = nullptr;  // linear or hidden
  const std::vector<double> *b1 = nullptr;
  const std::vector<double> *w2 = nullptr;  // mlp only
  const std::vector<double> *b2 = nullptr;
};

Net resolve(const ModelParams &model) {
  Net net;
  net.shape = infer_shape(model);
  const auto &ls = model.layers();
  net.w1 = &ls[0].values;
  net.b1 = &ls[1].values;
  if (net.shape.kind == ModelKind::mlp) {
    net.w2 = &ls[2].values;
    net.b2 = &ls[3].values;
  }
  return net;
}

// Forward pass. `hidden` receives tanh activations for the mlp.
void forward(const Net &net, std::span<const double> x, std::vector<double> &hidden,
             std::vector<double> &logits) {
  const auto &s = net.shape;
  const auto affine = [](const std::vector<double> &w, const std::vector<double> &b,
                         std::span<const double> in, std::vector<double> &out) {
    const std::size_t cols = in.size();
    out.resize(b.size());
    for (std::size_t r = 0; r < b.size(); ++r) {
      const double *row = w.data() + r * cols;
      double acc = b[r];
      for (std::size_t c = 0; c < cols; ++c) {
        acc += row[c] * in[c];
      }
      out[r] = acc;
    }
  };
  if (s.kind == ModelKind::softmax_regression) {
    affine(*net.w1, *net.b1, x, logits);
    return;
  }
  affine(*net.w1, *net.b1, x, hidden);
  for (double &h : hidden) {
    h = std::tanh(h);
  }
  affine(*net.w2, *net.b2, hidden, logits);
}

double log_sum_exp(const std::vector<double> &z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) {
    sum += std::exp(v - m);
  }
  return m + std::log(sum);
}

void check_features(const Net &net, const Example &ex) {
  if (ex.features.size() != static_cast<std::size_t>(net.shape.input_dim)) {
    throw DimensionMismatch("example has " + std::to_string(ex.features.size()) +
                            " features, model expects " + std::to_string(net.shape.input_dim));
  }
  if (ex.label < 0 || ex.label >= net.shape.num_classes) {
    throw DimensionMismatch("label " + std::to_string(ex.label) + " outside model's class range");
  }
}

}  // namespace

std::size_t ModelParams::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto &l : layers_) {
    n += l.values.size();
  }
  return n;
}

bool ModelParams::same_shape(const ModelParams &other) const noexcept {
  if (layers_.size() != other.layers_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].name != other.layers_[i].name ||
        layers_[i].values.size() != other.layers_[i].values.size()) {
      return false;
    }
  }
  return true;
}

const Layer *ModelParams::find(std::string_view name) const noexcept {
  for (const auto &l : layers_) {
    if (l.name == name) {
      return &l;
    }
  }
  return nullptr;
}

bool ModelParams::all_finite() const noexcept {
  for (const auto &l : layers_) {
    for (double v : l.values) {
      if (!std::isfinite(v)) {
        return false;
      }
    }
  }
  return true;
}

void Dataset::validate() const {
  if (examples.empty()) {
    throw InvalidArgument("dataset is empty");
  }
  if (num_classes < 1) {
    throw InvalidArgument("dataset needs at least one class");
  }
  const std::size_t dim = feature_dim();
  for (const auto &ex : examples) {
    if (ex.features.size() != dim) {
      throw InvalidArgument("dataset feature vectors have differing dimensions");
    }
    if (ex.label < 0 || ex.label >= num_classes) {
      throw InvalidArgument("dataset label " + std::to_string(ex.label) + " out of range");
    }
  }
}

ModelParams init_model(const ModelShape &shape, Rng &rng, double scale) {
  if (shape.input_dim < 1 || shape.num_classes < 1) {
    throw InvalidArgument("model needs positive input_dim and num_classes");
  }
  if (shape.kind == ModelKind::mlp && shape.hidden_units < 1) {
    throw InvalidArgument("mlp needs positive hidden_units");
  }
  std::normal_distribution<double> noise(0.0, scale);
  const auto layer = [&](std::string_view name, std::size_t n) {
    Layer l{std::string(name), std::vector<double>(n)};
    for (double &v : l.values) {
      v = noise(rng);
    }
    return l;
  };
  const auto d = static_cast<std::size_t>(shape.input_dim);
  const auto c = static_cast<std::size_t>(shape.num_classes);
  std::vector<Layer> layers;
  if (shape.kind == ModelKind::softmax_regression) {
    layers.push_back(layer(kLinear, c * d));
    layers.push_back(layer(kBias, c));
  } else {
    const auto h = static_cast<std::size_t>(shape.hidden_units);
    layers.push_back(layer(kHidden, h * d));
    layers.push_back(layer(kHiddenBias, h));
    layers.push_back(layer(kOutput, c * h));
    layers.push_back(layer(kOutputBias, c));
  }
  return ModelParams(std::move(layers));
}

ModelShape infer_shape(const ModelParams &model) {
  const auto &ls = model.layers();
  ModelShape shape;
  if (ls.size() == 2 && ls[0].name == kLinear && ls[1].name == kBias) {
    const std::size_t c = ls[1].values.size();
    if (c == 0 || ls[0].values.size() % c != 0 || ls[0].values.empty()) {
      throw DimensionMismatch("softmax regression layers have inconsistent lengths");
    }
    shape.kind = ModelKind::softmax_regression;
    shape.num_classes = static_cast<int>(c);
    shape.input_dim = static_cast<int>(ls[0].values.size() / c);
    return shape;
  }
  if (ls.size() == 4 && ls[0].name == kHidden && ls[1].name == kHiddenBias &&
      ls[2].name == kOutput && ls[3].name == kOutputBias) {
    const std::size_t h = ls[1].values.size();
    const std::size_t c = ls[3].values.size();
    if (h == 0 || c == 0 || ls[0].values.empty() || ls[0].values.size() % h != 0 ||
        ls[2].values.size() != c * h) {
      throw DimensionMismatch("mlp layers have inconsistent lengths");
    }
    shape.kind = ModelKind::mlp;
    shape.hidden_units = static_cast<int>(h);
    shape.num_classes = static_cast<int>(c);
    shape.input_dim = static_cast<int>(ls[0].values.size() / h);
    return shape;
  }
  throw DimensionMismatch("unrecognised model layout");
}

std::vector<double> predict_logits(const ModelParams &model, std::span<const double> features) {
  const Net net = resolve(model);
  if (features.size() != static_cast<std::size_t>(net.shape.input_dim)) {
    throw DimensionMismatch("feature vector does not match model input dimension");
  }
  std::vector<double> hidden;
  std::vector<double> logits;
  forward(net, features, hidden, logits);
  return logits;
}

LossAndGradient loss_and_gradient(const ModelParams &model, std::span<const Example> batch) {
  if (batch.empty()) {
    throw InvalidArgument("batch is empty");
  }
  const Net net = resolve(model);
  const auto &s = net.shape;
  const auto d = static_cast<std::size_t>(s.input_dim);
  const auto c = static_cast<std::size_t>(s.num_classes);
  const auto h = static_cast<std::size_t>(s.hidden_units);

  LossAndGradient out;
  out.gradient = model;
  for (auto &l : out.gradient.layers()) {
    std::fill(l.values.begin(), l.values.end(), 0.0);
  }
  auto &g = out.gradient.layers();
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  std::vector<double> hidden;
  std::vector<double> logits;
  std::vector<double> dz(c);
  std::vector<double> da(h);
  for (const auto &ex : batch) {
    check_features(net, ex);
    forward(net, ex.features, hidden, logits);
    const double lse = log_sum_exp(logits);
    out.loss += (lse - logits[static_cast<std::size_t>(ex.label)]) * inv_b;
    for (std::size_t k = 0; k < c; ++k) {
      dz[k] = std::exp(logits[k] - lse) * inv_b;
    }
    dz[static_cast<std::size_t>(ex.label)] -= inv_b;

    if (s.kind == ModelKind::softmax_regression) {
      for (std::size_t k = 0; k < c; ++k) {
        double *row = g[0].values.data() + k * d;
        for (std::size_t j = 0; j < d; ++j) {
          row[j] += dz[k] * ex.features[j];
        }
        g[1].values[k] += dz[k];
      }
      continue;
    }

    const auto &w_out = *net.w2;
    std::fill(da.begin(), da.end(), 0.0);
    for (std::size_t k = 0; k < c; ++k) {
      double *row = g[2].values.data() + k * h;
      const double *wrow = w_out.data() + k * h;
      for (std::size_t j = 0; j < h; ++j) {
        row[j] += dz[k] * hidden[j];
        da[j] += dz[k] * wrow[j];
      }
      g[3].values[k] += dz[k];
    }
    for (std::size_t j = 0; j < h; ++j) {
      da[j] *= 1.0 - hidden[j] * hidden[j];
      double *row = g[0].values.data() + j * d;
      for (std::size_t i = 0; i < d; ++i) {
        row[i] += da[j] * ex.features[i];
      }
      g[1].values[j] += da[j];
    }
  }
  return out;
}

ModelParams local_sgd_step(const ModelParams &model, std::span<const Example> batch, double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw InvalidArgument("learning rate must be finite and non-negative");
  }
  const LossAndGradient lg = loss_and_gradient(model, batch);
  ModelParams next = model;
  auto &ls = next.layers();
  const auto &gs = lg.gradient.layers();
  for (std::size_t l = 0; l < ls.size(); ++l) {
    for (std::size_t i = 0; i < ls[l].values.size(); ++i) {
      ls[l].values[i] -= gamma * gs[l].values[i];
    }
  }
  if (!next.all_finite()) {
    throw std::domain_error("local_sgd_step produced non-finite parameters");
  }
  return next;
}

Evaluation evaluate(const ModelParams &model, const Dataset &testset) {
  if (testset.empty()) {
    throw InvalidArgument("test set is empty");
  }
  const Net net = resolve(model);
  std::vector<double> hidden;
  std::vector<double> logits;
  std::size_t correct = 0;
  double loss = 0.0;
  for (const auto &ex : testset.examples) {
    check_features(net, ex);
    forward(net, ex.features, hidden, logits);
    const auto best = std::max_element(logits.begin(), logits.end()) - logits.begin();
    if (best == ex.label) {
      ++correct;
    }
    loss += log_sum_exp(logits) - logits[static_cast<std::size_t>(ex.label)];
  }
  const auto n = static_cast<double>(testset.size());
  return Evaluation{static_cast<double>(correct) / n, loss / n};
}

ModelParams average_models(std::span<const ModelParams *const> models) {
  if (models.empty()) {
    throw InvalidArgument("average_models needs at least one model");
  }
  const ModelParams &first = *models.front();
  for (const ModelParams *m : models) {
    if (!m->same_shape(first)) {
      throw DimensionMismatch("average_models: model shapes differ");
    }
  }
  ModelParams out = first;
  auto &ls = out.layers();
  for (std::size_t m = 1; m < models.size(); ++m) {
    const auto &src = models[m]->layers();
    for (std::size_t l = 0; l < ls.size(); ++l) {
      for (std::size_t i = 0; i < ls[l].values.size(); ++i) {
        ls[l].values[i] += src[l].values[i];
      }
    }
  }
  const auto count = static_cast<double>(models.size());
  for (auto &l : ls) {
    for (double &v : l.values) {
      v /= count;
    }
  }
  return out;
}

ModelParams average_models(const ModelParams &own, std::span<const ModelParams> received) {
  std::vector<const ModelParams *> all;
  all.reserve(received.size() + 1);
  all.push_back(&own);
  for (const auto &m : received) {
    all.push_back(&m);
  }
  return average_models(std::span<const ModelParams *const>(all));
}

BatchSampler::BatchSampler(std::size_t shard_size, std::size_t batch_size)
    : order_(shard_size), batch_size_(std::min(batch_size, shard_size)), cursor_(shard_size) {
  if (shard_size == 0 || batch_size == 0) {
    throw InvalidArgument("BatchSampler needs a non-empty shard and positive batch size");
  }
  std::iota(order_.begin(), order_.end(), std::size_t{0});
}

std::vector<std::size_t> BatchSampler::next(Rng &rng) {
  if (cursor_ + batch_size_ > order_.size()) {
    std::shuffle(order_.begin(), order_.end(), rng);
    cursor_ = 0;
  }
  std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + batch_size_));
  cursor_ += batch_size_;
  return batch;
}

}  // namespace morph
