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


#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "morph/common.hpp"
#include "morph/dataset.hpp"
#include "morph/model.hpp"
#include "morph/rng.hpp"

using namespace morph;
using morph::testing::entropy;

namespace {

double train_accuracy_after_sgd(const Dataset &data, int steps, double gamma, std::uint64_t seed) {
  Rng rng(seed);
  ModelParams m = init_model({ModelKind::softmax_regression, static_cast<int>(data.feature_dim()),
                              data.num_classes, 0},
                             rng);
  BatchSampler sampler(data.size(), 32);
  for (int t = 0; t < steps; ++t) {
    std::vector<Example> batch;
    for (std::size_t i : sampler.next(rng)) {
      batch.push_back(data.examples[i]);
    }
    m = local_sgd_step(m, batch, gamma);
  }
  return evaluate(m, data).accuracy;
}

std::vector<std::pair<int, std::vector<double>>> as_multiset(const std::vector<Dataset> &shards) {
  std::vector<std::pair<int, std::vector<double>>> out;
  for (const auto &s : shards) {
    for (const auto &e : s.examples) {
      out.emplace_back(e.label, e.features);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<int, std::vector<double>>> as_multiset(const Dataset &d) {
  return as_multiset(std::vector<Dataset>{d});
}

double loss_of(const ModelParams &m, const std::vector<Example> &batch) {
  return loss_and_gradient(m, batch).loss;
}

// Central differences on a handful of random coordinates.
void check_gradient(const ModelParams &model, const std::vector<Example> &batch, Rng &rng) {
  const auto grad = loss_and_gradient(model, batch).gradient;
  const double h = 1e-6;
  for (int probe = 0; probe < 5; ++probe) {
    const std::size_t l = uniform_index(rng, model.num_layers());
    const std::size_t k = uniform_index(rng, model.layers()[l].values.size());
    ModelParams plus = model;
    ModelParams minus = model;
    plus.layers()[l].values[k] += h;
    minus.layers()[l].values[k] -= h;
    const double fd = (loss_of(plus, batch) - loss_of(minus, batch)) / (2.0 * h);
    const double g = grad.layers()[l].values[k];
    const double scale = std::max({std::abs(fd), std::abs(g), 1e-6});
    CHECK(std::abs(fd - g) / scale <= 1e-4);
  }
}

}  // namespace

TEST_SUITE("model-core") {
  TEST_CASE("synthetic dataset has the requested class counts") {
    const Dataset d = generate_synthetic_dataset(2, 10, 4, 0.1, 7);
    CHECK(d.size() == 20);
    CHECK(d.num_classes == 2);
    CHECK(d.feature_dim() == 4);
    int ones = 0;
    for (const auto &e : d.examples) {
      CHECK((e.label == 0 || e.label == 1));
      ones += e.label;
    }
    CHECK(ones == 10);
  }

  TEST_CASE("synthetic dataset is deterministic per seed") {
    CHECK(generate_synthetic_dataset(2, 10, 4, 0.1, 7) == generate_synthetic_dataset(2, 10, 4, 0.1, 7));
    CHECK_FALSE(generate_synthetic_dataset(2, 10, 4, 0.1, 7) ==
                generate_synthetic_dataset(2, 10, 4, 0.1, 8));
  }

  TEST_CASE("synthetic dataset rejects non-positive arguments") {
    CHECK_THROWS_AS(generate_synthetic_dataset(0, 10, 4, 0.1, 1), InvalidArgument);
    CHECK_THROWS_AS(generate_synthetic_dataset(2, 0, 4, 0.1, 1), InvalidArgument);
    CHECK_THROWS_AS(generate_synthetic_dataset(2, 10, 0, 0.1, 1), InvalidArgument);
    CHECK_THROWS_AS(generate_synthetic_dataset(2, 10, 4, 0.0, 1), InvalidArgument);
  }

  TEST_CASE("well separated clusters are learnable by the linear model") {
    const Dataset d = generate_synthetic_dataset(10, 100, 16, 0.5, 1);
    CHECK(train_accuracy_after_sgd(d, 2000, 0.5, 3) > 0.9);
  }

  TEST_CASE("dirichlet with huge alpha splits each class evenly") {
    const Dataset d = generate_synthetic_dataset(2, 100, 3, 1.0, 5);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto shards = dirichlet_partition(d, {2, 1e6, seed});
      REQUIRE(shards.size() == 2);
      for (const auto &s : shards) {
        std::vector<int> counts(2, 0);
        for (const auto &e : s.examples) {
          ++counts[static_cast<std::size_t>(e.label)];
        }
        for (int c : counts) {
          CHECK(std::abs(c / 100.0 - 0.5) <= 0.05);
        }
      }
    }
  }

  TEST_CASE("small alpha gives more skewed shards than large alpha") {
    const Dataset d = generate_synthetic_dataset(10, 64, 4, 1.0, 2);
    const auto mean_entropy = [&](double alpha) {
      double total = 0.0;
      int count = 0;
      for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        for (const auto &s : dirichlet_partition(d, {16, alpha, seed})) {
          std::vector<double> hist(10, 0.0);
          for (const auto &e : s.examples) {
            hist[static_cast<std::size_t>(e.label)] += 1.0;
          }
          total += entropy(hist);
          ++count;
        }
      }
      return total / count;
    };
    const double skewed = mean_entropy(0.1);
    const double flat = mean_entropy(100.0);
    CHECK(skewed < flat);
    CHECK(flat > 0.9 * std::log(10.0));
  }

  TEST_CASE("dirichlet partition conserves the dataset") {
    const Dataset d = generate_synthetic_dataset(5, 20, 3, 1.0, 9);
    const auto reference = as_multiset(d);
    for (double alpha : {0.01, 0.1, 1.0, 100.0}) {
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto shards = dirichlet_partition(d, {12, alpha, seed});
        REQUIRE(shards.size() == 12);
        for (const auto &s : shards) {
          CHECK_FALSE(s.empty());
          CHECK(s.num_classes == 5);
        }
        CHECK(as_multiset(shards) == reference);
      }
    }
  }

  TEST_CASE("dirichlet partition validates its inputs") {
    const Dataset d = generate_synthetic_dataset(2, 3, 2, 1.0, 1);
    CHECK_THROWS_AS(dirichlet_partition(d, {1, 0.1, 1}), InvalidArgument);
    CHECK_THROWS_AS(dirichlet_partition(d, {2, 0.0, 1}), InvalidArgument);
    CHECK_THROWS_AS(dirichlet_partition(d, {7, 0.1, 1}), InvalidArgument);
    CHECK_NOTHROW(dirichlet_partition(d, {6, 0.1, 1}));
  }

  TEST_CASE("sgd step with zero learning rate is the identity") {
    const Dataset d = generate_synthetic_dataset(3, 5, 4, 1.0, 1);
    Rng rng(1);
    const ModelParams m = init_model({ModelKind::softmax_regression, 4, 3, 0}, rng);
    const ModelParams before = m;
    const ModelParams after = local_sgd_step(m, d.examples, 0.0);
    CHECK(after == m);
    CHECK(m == before);
    CHECK_THROWS_AS(local_sgd_step(m, d.examples, -0.1), InvalidArgument);
    CHECK_THROWS_AS(local_sgd_step(m, std::span<const Example>{}, 0.1), InvalidArgument);
  }

  TEST_CASE("small sgd step does not increase the batch loss") {
    const Dataset d = generate_synthetic_dataset(10, 20, 16, 1.0, 4);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Rng rng(seed);
      const ModelParams m = init_model({ModelKind::softmax_regression, 16, 10, 0}, rng, 0.5);
      const ModelParams next = local_sgd_step(m, d.examples, 1e-3);
      CHECK(loss_of(next, d.examples) <= loss_of(m, d.examples));
    }
  }

  TEST_CASE("gradient matches central finite differences") {
    const Dataset d = generate_synthetic_dataset(4, 6, 5, 1.0, 11);
    Rng rng(21);
    SUBCASE("softmax regression") {
      const ModelParams m = init_model({ModelKind::softmax_regression, 5, 4, 0}, rng, 0.3);
      check_gradient(m, d.examples, rng);
    }
    SUBCASE("mlp") {
      const ModelParams m = init_model({ModelKind::mlp, 5, 4, 7}, rng, 0.3);
      check_gradient(m, d.examples, rng);
    }
  }

  TEST_CASE("uniform logits give loss ln C") {
    ModelParams zero({Layer{"linear", std::vector<double>(10 * 3, 0.0)},
                      Layer{"bias", std::vector<double>(10, 0.0)}});
    const Dataset d = generate_synthetic_dataset(10, 4, 3, 1.0, 3);
    CHECK(evaluate(zero, d).loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  }

  TEST_CASE("single-class test set with a constant predictor") {
    ModelParams m({Layer{"linear", std::vector<double>(3 * 2, 0.0)},
                   Layer{"bias", {5.0, 0.0, 0.0}}});
    Dataset test;
    test.num_classes = 3;
    test.examples = {{{1.0, 2.0}, 0}, {{-3.0, 0.5}, 0}, {{0.0, 0.0}, 0}};
    CHECK(evaluate(m, test).accuracy == 1.0);
  }

  TEST_CASE("untrained models are near chance") {
    const Dataset d = generate_synthetic_dataset(10, 50, 16, 1.0, 6);
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Rng rng(seed);
      total += evaluate(init_model({ModelKind::softmax_regression, 16, 10, 0}, rng), d).accuracy;
    }
    CHECK(std::abs(total / 10.0 - 0.1) <= 0.1);
  }

  TEST_CASE("evaluate rejects mismatched inputs") {
    Rng rng(1);
    const ModelParams m = init_model({ModelKind::softmax_regression, 4, 3, 0}, rng);
    CHECK_THROWS_AS(evaluate(m, Dataset{}), InvalidArgument);
    Dataset wrong;
    wrong.num_classes = 3;
    wrong.examples = {{{1.0, 2.0}, 0}};
    CHECK_THROWS_AS(evaluate(m, wrong), DimensionMismatch);
  }

  TEST_CASE("average_models cases") {
    const ModelParams own = morph::testing::one_layer({0.0, 0.0, 0.0});
    SUBCASE("nothing received") {
      CHECK(average_models(own, std::span<const ModelParams>{}) == own);
    }
    SUBCASE("two-point mean") {
      const std::vector<ModelParams> rec{morph::testing::one_layer({2.0, 2.0, 2.0})};
      CHECK(average_models(own, rec) == morph::testing::one_layer({1.0, 1.0, 1.0}));
    }
    SUBCASE("copies of own") {
      const ModelParams x = morph::testing::one_layer({0.3, -1.7, 2.9});
      const std::vector<ModelParams> rec(4, x);
      const auto avg = average_models(x, rec);
      for (std::size_t i = 0; i < 3; ++i) {
        CHECK(avg.layers()[0].values[i] == doctest::Approx(x.layers()[0].values[i]).epsilon(1e-15));
      }
    }
    SUBCASE("shape mismatch") {
      const std::vector<ModelParams> rec{morph::testing::one_layer({1.0, 2.0})};
      CHECK_THROWS_AS(average_models(own, rec), DimensionMismatch);
    }
  }

  TEST_CASE("average_models is permutation invariant") {
    Rng rng(8);
    const ModelParams own = morph::testing::one_layer(morph::testing::gaussian_vector(rng, 20));
    std::vector<ModelParams> rec;
    for (int i = 0; i < 6; ++i) {
      rec.push_back(morph::testing::one_layer(morph::testing::gaussian_vector(rng, 20)));
    }
    const ModelParams a = average_models(own, rec);
    std::reverse(rec.begin(), rec.end());
    std::swap(rec[1], rec[4]);
    const ModelParams b = average_models(own, rec);
    for (std::size_t i = 0; i < 20; ++i) {
      CHECK(a.layers()[0].values[i] == doctest::Approx(b.layers()[0].values[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("infer_shape recovers both architectures") {
    Rng rng(2);
    const auto s1 = infer_shape(init_model({ModelKind::softmax_regression, 7, 4, 0}, rng));
    CHECK(s1.kind == ModelKind::softmax_regression);
    CHECK(s1.input_dim == 7);
    CHECK(s1.num_classes == 4);
    const auto s2 = infer_shape(init_model({ModelKind::mlp, 7, 4, 5}, rng));
    CHECK(s2.kind == ModelKind::mlp);
    CHECK(s2.hidden_units == 5);
    CHECK(s2.input_dim == 7);
    CHECK_THROWS_AS(infer_shape(morph::testing::one_layer({1.0})), DimensionMismatch);
  }

  TEST_CASE("init_model gives every layer a nonzero norm") {
    Rng rng(4);
    const ModelParams m = init_model({ModelKind::mlp, 3, 2, 2}, rng);
    for (const auto &l : m.layers()) {
      double norm = 0.0;
      for (double v : l.values) {
        norm += v * v;
      }
      CHECK(norm > 0.0);
    }
  }

  TEST_CASE("batch sampler covers the shard once per epoch") {
    BatchSampler sampler(12, 4);
    Rng rng(3);
    for (int epoch = 0; epoch < 3; ++epoch) {
      std::set<std::size_t> seen;
      for (int b = 0; b < 3; ++b) {
        for (std::size_t i : sampler.next(rng)) {
          CHECK(i < 12);
          CHECK(seen.insert(i).second);
        }
      }
      CHECK(seen.size() == 12);
    }
  }

  TEST_CASE("batch sampler drops the remainder of an epoch") {
    BatchSampler sampler(10, 4);
    Rng rng(5);
    for (int epoch = 0; epoch < 4; ++epoch) {
      std::set<std::size_t> seen;
      for (int b = 0; b < 2; ++b) {
        const auto batch = sampler.next(rng);
        CHECK(batch.size() == 4);
        seen.insert(batch.begin(), batch.end());
      }
      CHECK(seen.size() == 8);
    }
    BatchSampler clamp(3, 8);
    CHECK(clamp.next(rng).size() == 3);
    CHECK_THROWS_AS(BatchSampler(0, 1), InvalidArgument);
  }

  TEST_CASE("dataset csv round trip is exact") {
    const Dataset d = generate_synthetic_dataset(3, 4, 5, 0.7, 12);
    std::stringstream ss;
    write_dataset_csv(ss, d);
    std::string header;
    std::getline(std::stringstream(ss.str()), header);
    CHECK(header == "f0,f1,f2,f3,f4,label");
    CHECK(read_dataset_csv(ss) == d);
  }

  TEST_CASE("dataset validation") {
    Dataset d;
    CHECK_THROWS_AS(d.validate(), InvalidArgument);
    d.num_classes = 2;
    d.examples = {{{1.0, 2.0}, 0}, {{1.0}, 1}};
    CHECK_THROWS_AS(d.validate(), InvalidArgument);
    d.examples = {{{1.0, 2.0}, 0}, {{1.0, 3.0}, 2}};
    CHECK_THROWS_AS(d.validate(), InvalidArgument);
  }
}
