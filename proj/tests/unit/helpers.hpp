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


#ifndef MORPH_TESTS_HELPERS_HPP
#define MORPH_TESTS_HELPERS_HPP

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "morph/model.hpp"
#include "morph/rng.hpp"

namespace morph::testing {

inline ModelParams one_layer(std::vector<double> values) {
  return ModelParams({Layer{"w", std::move(values)}});
}

inline ModelParams two_layers(std::vector<double> a, std::vector<double> b) {
  return ModelParams({Layer{"a", std::move(a)}, Layer{"b", std::move(b)}});
}

inline std::vector<double> gaussian_vector(Rng &rng, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(dim);
  for (double &x : v) {
    x = g(rng);
  }
  return v;
}

// Plain textbook cosine, written independently of the library kernel.
inline double naive_cosine(const std::vector<double> &a, const std::vector<double> &b) {
  double ab = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

inline double entropy(const std::vector<double> &counts) {
  double total = 0.0;
  for (double c : counts) {
    total += c;
  }
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      const double p = c / total;
      h -= p * std::log(p);
    }
  }
  return h;
}

}  // namespace morph::testing

#endif  // MORPH_TESTS_HELPERS_HPP
