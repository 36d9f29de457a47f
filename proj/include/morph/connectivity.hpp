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

#ifndef MORPH_CONNECTIVITY_HPP
#define MORPH_CONNECTIVITY_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace morph {

/// Monte-Carlo model of the hybrid topology: every node owns a fingerprint
/// (its cluster's Gaussian center, optionally jittered), picks d_s peers by
/// dissimilarity-softmax sampling and d_r further peers uniformly, and the
/// union digraph is tested for undirected connectivity.
struct ConnectivityParams {
  std::size_t nodes = 100;
  int d_s = 0;
  int d_r = 2;
  int clusters = 10;
  int dim = 8;
  double beta = 5.0;
  double jitter = 0.0;  // per-node noise around the cluster center
  int trials = 1000;
  std::uint64_t seed = 1;

  /// Throws InvalidArgument on an impossible grid point.
  void validate() const;
};

struct ConnectivityEstimate {
  double probability = 0.0;
  double std_error = 0.0;
  int trials = 0;
};

/// The stream for each (nodes, d_s, d_r) point depends only on the seed and
/// the point itself, so a point gives the same estimate alone or in a sweep.
ConnectivityEstimate connectivity_probability(const ConnectivityParams &params);

struct ConnectivityGrid {
  std::size_t nodes = 100;
  std::vector<int> d_s{0, 1, 2, 3, 4, 5};
  std::vector<int> d_r{0, 1, 2, 3, 4, 5};
  int trials = 1000;
  int clusters = 10;
  int dim = 8;
  double beta = 5.0;
  double jitter = 0.0;
  std::uint64_t seed = 1;
};

struct ConnectivityRow {
  std::size_t nodes = 0;
  int d_s = 0;
  int d_r = 0;
  double probability = 0.0;
  double std_error = 0.0;
  int trials = 0;
};

/// Full cross product, d_s-major. Results do not depend on `threads`.
std::vector<ConnectivityRow> sweep_grid(const ConnectivityGrid &grid, unsigned threads = 1);

/// Header "n,d_s,d_r,probability,std_error,trials"; reals at 9 significant
/// digits.
void write_connectivity_csv(std::ostream &out, const std::vector<ConnectivityRow> &rows);

}  // namespace morph

#endif  // MORPH_CONNECTIVITY_HPP
