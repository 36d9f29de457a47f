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

#ifndef MORPH_ENGINE_HPP
#define MORPH_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "morph/model.hpp"
#include "morph/topology.hpp"

namespace morph {

enum class Protocol { morph, epidemic, static_mh, fully_connected };
enum class EpidemicVariant { local, oracle };
enum class EvalSchedule { fixed, tapered };

std::string to_string(Protocol p);
std::string to_string(EpidemicVariant v);
std::string to_string(EvalSchedule s);
std::string to_string(ModelKind k);

/// Everything that determines a run. Two runs with equal configs produce
/// bit-identical results regardless of thread count.
struct ExperimentConfig {
  Protocol protocol = Protocol::morph;
  int nodes = 32;
  int view_size = 3;     // Morph in-degree s, Static degree, Epidemic k
  int k_out = 3;         // Morph out-degree cap
  int random_slots = 2;  // Morph d_r
  double beta = 500.0;
  int delta_r = 5;
  int staleness_factor = 10;
  EpidemicVariant epidemic_variant = EpidemicVariant::local;

  double learning_rate = 0.2;
  int batch_size = 8;
  int rounds = 300;
  int eval_every = 10;
  EvalSchedule eval_schedule = EvalSchedule::fixed;

  ModelKind model = ModelKind::softmax_regression;
  int hidden_units = 16;
  int num_classes = 10;
  int train_per_class = 200;
  int test_per_class = 100;
  int feature_dim = 16;
  double cluster_spread = 3.0;
  double alpha = 0.1;

  std::uint64_t seed = 1;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;

  bool operator==(const ExperimentConfig &) const = default;
};

/// Topology bookkeeping for a single round.
struct RoundStats {
  int round = 0;
  std::size_t isolated_count = 0;
  std::size_t messages = 0;
  std::size_t bytes = 0;
  bool connected = true;
  int negotiation_iterations = 0;
  std::size_t repaired_slots = 0;
};

/// One evaluated round. Accuracies are percentages; messages and bytes
/// cover every round since the previous record, so summing a series gives
/// run totals.
struct RoundMetrics {
  int round = 0;
  double mean_accuracy = 0.0;
  double mean_loss = 0.0;
  double inter_node_variance = 0.0;
  std::size_t isolated_count = 0;
  std::size_t messages = 0;
  std::size_t bytes_estimate = 0;
  bool connected = true;

  bool operator==(const RoundMetrics &) const = default;
};

struct ExperimentResult {
  std::vector<RoundMetrics> metrics;
  std::vector<RoundStats> rounds;
  std::vector<double> final_accuracies;  // percent, per node
  std::vector<double> final_losses;
  std::size_t dropped_messages = 0;
  std::size_t model_parameters = 0;
};

struct RunOptions {
  unsigned threads = 1;
  /// Called once per round with the round's topology (edge-list export).
  std::function<void(int, const Topology &)> on_topology;
};

/// True when `round` is an evaluation round (the final round always is).
bool is_eval_round(const ExperimentConfig &config, int round);

ExperimentResult run_experiment(const ExperimentConfig &config, const RunOptions &options = {});

/// Population variance of per-node accuracies (percent). Throws
/// InvalidArgument on an empty list.
double inter_node_variance(std::span<const double> accuracies);

struct CommunicationCost {
  std::size_t total_messages = 0;
  std::size_t total_bytes = 0;
};

CommunicationCost communication_cost(std::span<const RoundMetrics> metrics);

/// Runs fn(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)> &fn);

}  // namespace morph

#endif  // MORPH_ENGINE_HPP
