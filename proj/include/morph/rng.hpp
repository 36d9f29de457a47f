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

#ifndef MORPH_RNG_HPP
#define MORPH_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "morph/common.hpp"

namespace morph {

using Rng = std::mt19937_64;

/// Mixes (seed, node, label) into an independent stream seed. Streams for
/// different nodes or purposes never share state, so the order in which
/// nodes are stepped has no effect on what each one draws.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t node, std::string_view label);

inline Rng make_rng(std::uint64_t seed, std::uint64_t node, std::string_view label) {
  return Rng(derive_seed(seed, node, label));
}

double uniform01(Rng &rng);

/// Uniform integer in [0, bound). bound must be positive.
std::size_t uniform_index(Rng &rng, std::size_t bound);

/// k distinct elements of `pool`, uniformly without replacement, in draw
/// order. Returns all of `pool` (shuffled) when k >= pool.size().
template <typename T>
std::vector<T> sample_distinct(Rng &rng, std::vector<T> pool, std::size_t k) {
  const std::size_t take = k < pool.size() ? k : pool.size();
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

}  // namespace morph

#endif  // MORPH_RNG_HPP
