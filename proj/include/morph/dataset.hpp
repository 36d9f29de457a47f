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

#ifndef MORPH_DATASET_HPP
#define MORPH_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "morph/model.hpp"

namespace morph {

/// Gaussian-cluster classification data. Class c's mean is drawn once from
/// N(0, I); its examples are mean + N(0, cluster_spread^2 I).
Dataset generate_synthetic_dataset(int num_classes, int examples_per_class, int feature_dim,
                                   double cluster_spread, std::uint64_t seed);

struct PartitionSpec {
  int num_nodes = 2;
  double alpha = 0.1;
  std::uint64_t seed = 0;
};

/// Label-skewed split: for each class, proportions p ~ Dir(alpha * 1_n) are
/// turned into counts by largest-remainder rounding and that class's
/// examples are dealt out accordingly. Empty shards are repaired by moving
/// one example from the currently largest shard.
std::vector<Dataset> dirichlet_partition(const Dataset &dataset, const PartitionSpec &spec);

/// Feature columns f0..f{d-1} followed by an integer `label` column.
void write_dataset_csv(std::ostream &out, const Dataset &dataset);
void write_dataset_csv(const std::filesystem::path &path, const Dataset &dataset);

/// num_classes is taken as max(label) + 1 unless a larger value is given.
Dataset read_dataset_csv(std::istream &in, int num_classes = 0);
Dataset read_dataset_csv(const std::filesystem::path &path, int num_classes = 0);

}  // namespace morph

#endif  // MORPH_DATASET_HPP
