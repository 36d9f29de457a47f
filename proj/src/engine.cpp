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

#include "morph/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "morph/dataset.hpp"
#include "morph/negotiation.hpp"
#include "morph/protocols.hpp"

namespace morph {
namespace {

// Node id used for engine-level rng streams; never a real node.
constexpr std::uint64_t kEngineStream = 0xffffffffULL;

void require(bool ok, const char *field, const std::string &what) {
  if (!ok) {
    throw ConfigError(field, std::string(field) + ": " + what);
  }
}

struct Split {
  Dataset train;
  Dataset test;
};

Split make_data(const ExperimentConfig &c) {
  const Dataset all = generate_synthetic_dataset(c.num_classes, c.train_per_class + c.test_per_class,
                                                 c.feature_dim, c.cluster_spread,
                                                 derive_seed(c.seed, kEngineStream, "dataset"));
  Split s;
  s.train.num_classes = c.num_classes;
  s.test.num_classes = c.num_classes;
  // Examples are grouped by class and i.i.d. within a class.
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto within = static_cast<int>(i % static_cast<std::size_t>(c.train_per_class + c.test_per_class));
    (within < c.train_per_class ? s.train : s.test).examples.push_back(all.examples[i]);
  }
  return s;
}

Topology complete_graph(std::size_t n) {
  Topology t(n);
  for (NodeId dst = 0; dst < n; ++dst) {
    for (NodeId src = 0; src < n; ++src) {
      if (src != dst) {
        t.add_edge(src, dst);
      }
    }
  }
  return t;
}

Topology initial_digraph(std::size_t n, std::size_t s, Rng &rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Topology t = random_regular_digraph(n, s, rng);
    if (is_connected_undirected(t)) {
      return t;
    }
  }
  throw std::runtime_error("could not draw a connected initial topology");
}

}  // namespace

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::morph:
      return "morph";
    case Protocol::epidemic:
      return "epidemic";
    case Protocol::static_mh:
      return "static_mh";
    case Protocol::fully_connected:
      return "fully_connected";
  }
  return "unknown";
}

std::string to_string(EpidemicVariant v) { return v == EpidemicVariant::local ? "local" : "oracle"; }

std::string to_string(EvalSchedule s) { return s == EvalSchedule::fixed ? "fixed" : "tapered"; }

std::string to_string(ModelKind k) { return k == ModelKind::softmax_regression ? "softmax" : "mlp"; }

void ExperimentConfig::validate() const {
  require(nodes >= 2, "nodes", "need at least 2 nodes");
  require(rounds >= 1, "rounds", "must be positive");
  require(eval_every >= 1, "eval_every", "must be positive");
  const int max_degree = nodes - 1;
  switch (protocol) {
    case Protocol::morph:
      require(view_size >= 1 && view_size <= max_degree, "view_size", "must be in [1, nodes-1]");
      break;
    case Protocol::static_mh:
      require(view_size >= 1 && view_size <= max_degree, "view_size", "must be in [1, nodes-1]");
      require((nodes * view_size) % 2 == 0, "view_size",
              "nodes * view_size must be even for a regular graph");
      break;
    case Protocol::epidemic:
      require(view_size >= 0 && view_size <= max_degree, "view_size", "must be in [0, nodes-1]");
      break;
    case Protocol::fully_connected:
      break;
  }
  require(random_slots >= 0 && random_slots <= std::max(view_size, 0), "random_slots",
          "must be in [0, view_size]");
  require(k_out >= 1, "k_out", "must be positive");
  require(std::isfinite(beta) && beta >= 0.0, "beta", "must be finite and non-negative");
  require(delta_r >= 1, "delta_r", "must be positive");
  require(staleness_factor >= 1, "staleness_factor", "must be positive");
  require(std::isfinite(learning_rate) && learning_rate >= 0.0, "learning_rate",
          "must be finite and non-negative");
  require(batch_size >= 1, "batch_size", "must be positive");
  require(model != ModelKind::mlp || hidden_units >= 1, "hidden_units", "must be positive");
  require(num_classes >= 1, "num_classes", "must be positive");
  require(train_per_class >= 1, "train_per_class", "must be positive");
  require(test_per_class >= 1, "test_per_class", "must be positive");
  require(feature_dim >= 1, "feature_dim", "must be positive");
  require(std::isfinite(cluster_spread) && cluster_spread > 0.0, "cluster_spread",
          "must be positive");
  require(std::isfinite(alpha) && alpha > 0.0, "alpha", "must be positive");
  require(static_cast<long long>(nodes) <= static_cast<long long>(num_classes) * train_per_class,
          "nodes", "more nodes than training examples");
}

bool is_eval_round(const ExperimentConfig &config, int round) {
  if (round == config.rounds) {
    return true;
  }
  if (config.eval_schedule == EvalSchedule::tapered) {
    return round <= 1000 ? round % 20 == 0 : round % 40 == 0;
  }
  return round % config.eval_every == 0;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)> &fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) {
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned workers = std::min<std::size_t>(threads, count);
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back(worker);
  }
  for (auto &t : pool) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

double inter_node_variance(std::span<const double> accuracies) {
  if (accuracies.empty()) {
    throw InvalidArgument("inter_node_variance of an empty list");
  }
  // Welford
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (double x : accuracies) {
    ++k;
    const double delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (x - mean);
  }
  return std::max(0.0, m2 / static_cast<double>(k));
}

CommunicationCost communication_cost(std::span<const RoundMetrics> metrics) {
  CommunicationCost c;
  for (const auto &m : metrics) {
    c.total_messages += m.messages;
    c.total_bytes += m.bytes_estimate;
  }
  return c;
}

ExperimentResult run_experiment(const ExperimentConfig &config, const RunOptions &options) {
  config.validate();
  const auto n = static_cast<std::size_t>(config.nodes);
  const unsigned threads = std::max(1u, options.threads);

  const Split data = make_data(config);
  const auto shards = dirichlet_partition(data.train, {config.nodes, config.alpha, config.seed});

  ModelShape shape{config.model, config.feature_dim, config.num_classes, config.hidden_units};
  Rng init_rng = make_rng(config.seed, kEngineStream, "init-model");
  const ModelParams x0 = init_model(shape, init_rng);

  Rng engine_rng = make_rng(config.seed, kEngineStream, "engine");
  std::vector<NodeState> nodes(n);
  for (NodeId i = 0; i < n; ++i) {
    auto &node = nodes[i];
    node.id = i;
    node.model = x0;
    node.shard = shards[i];
    node.sampler = BatchSampler(node.shard.size(), static_cast<std::size_t>(config.batch_size));
    node.data_rng = make_rng(config.seed, i, "data");
    node.protocol_rng = make_rng(config.seed, i, "protocol");
  }

  const auto s = static_cast<std::size_t>(std::max(config.view_size, 0));
  Topology fixed(n);
  std::vector<std::size_t> degrees(n, 0);
  switch (config.protocol) {
    case Protocol::morph: {
      const Topology initial = initial_digraph(n, s, engine_rng);
      for (NodeId i = 0; i < n; ++i) {
        const auto &senders = initial.senders_of(i);
        nodes[i].known_peers.insert(senders.begin(), senders.end());
        nodes[i].wanted_senders.assign(senders.begin(), senders.end());
      }
      break;
    }
    case Protocol::static_mh:
      fixed = random_regular_graph(n, s, engine_rng);
      for (NodeId i = 0; i < n; ++i) {
        degrees[i] = fixed.in_degree(i);
      }
      break;
    case Protocol::fully_connected:
      fixed = complete_graph(n);
      break;
    case Protocol::epidemic:
      for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = 0; j < n; ++j) {
          if (j != i) {
            nodes[i].known_peers.insert(j);
          }
        }
      }
      break;
  }

  const MorphParams morph_params{config.view_size, config.random_slots, config.beta, config.delta_r,
                                 config.staleness_factor};

  ExperimentResult result;
  result.model_parameters = x0.parameter_count();
  std::size_t pending_messages = 0;
  std::size_t pending_bytes = 0;

  for (int round = 1; round <= config.rounds; ++round) {
    parallel_for(n, threads, [&](std::size_t i) { local_training_step(nodes[i], config.learning_rate); });

    RoundStats stats;
    stats.round = round;
    Topology topology(n);
    switch (config.protocol) {
      case Protocol::morph: {
        PreferenceLists prefs(n);
        parallel_for(n, threads, [&](std::size_t i) {
          morph_maybe_update_wanted_senders(nodes[i], round, morph_params);
          prefs[i] = morph_requests(nodes[i], round, morph_params);
        });
        NegotiationResult neg = negotiate(prefs, s, static_cast<std::size_t>(config.k_out), engine_rng);
        stats.negotiation_iterations = neg.iterations;
        stats.repaired_slots = neg.repaired_slots;
        topology = std::move(neg.topology);
        break;
      }
      case Protocol::epidemic:
        if (config.epidemic_variant == EpidemicVariant::oracle) {
          topology = s == 0 ? Topology(n) : random_regular_digraph(n, s, engine_rng);
        } else {
          std::vector<std::vector<NodeId>> targets(n);
          parallel_for(n, threads, [&](std::size_t i) { targets[i] = epidemic_targets(nodes[i], n, s); });
          for (NodeId i = 0; i < n; ++i) {
            for (NodeId j : targets[i]) {
              topology.add_edge(i, j);
            }
          }
        }
        break;
      case Protocol::static_mh:
      case Protocol::fully_connected:
        topology = fixed;
        break;
    }
    if (options.on_topology) {
      options.on_topology(round, topology);
    }

    std::vector<ModelMessage> outgoing(n);
    parallel_for(n, threads, [&](std::size_t i) {
      if (topology.out_degree(static_cast<NodeId>(i)) == 0) {
        return;
      }
      outgoing[i] = config.protocol == Protocol::morph ? morph_make_message(nodes[i], round)
                                                       : plain_message(nodes[i], round);
    });

    std::vector<std::vector<ModelMessage>> inbox(n);
    for (NodeId i = 0; i < n; ++i) {
      for (NodeId src : topology.senders_of(i)) {
        inbox[i].push_back(outgoing[src]);
        ++stats.messages;
        stats.bytes += outgoing[src].bytes_estimate();
      }
    }

    parallel_for(n, threads, [&](std::size_t i) {
      auto &node = nodes[i];
      switch (config.protocol) {
        case Protocol::morph:
          morph_receive(node, inbox[i], round);
          break;
        case Protocol::static_mh:
          node.model = metropolis_hastings_aggregate(node, inbox[i], degrees);
          break;
        case Protocol::epidemic:
        case Protocol::fully_connected:
          node.model = aggregate_uniform(node, inbox[i]);
          break;
      }
    });

    stats.isolated_count = isolated_nodes(topology).size();
    stats.connected = is_connected_undirected(topology);
    pending_messages += stats.messages;
    pending_bytes += stats.bytes;
    result.rounds.push_back(stats);

    if (!is_eval_round(config, round)) {
      continue;
    }
    std::vector<Evaluation> evals(n);
    parallel_for(n, threads, [&](std::size_t i) { evals[i] = evaluate(nodes[i].model, data.test); });
    std::vector<double> acc(n);
    double loss_sum = 0.0;
    double acc_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc[i] = 100.0 * evals[i].accuracy;
      acc_sum += acc[i];
      loss_sum += evals[i].loss;
    }
    RoundMetrics m;
    m.round = round;
    m.mean_accuracy = acc_sum / static_cast<double>(n);
    m.mean_loss = loss_sum / static_cast<double>(n);
    m.inter_node_variance = inter_node_variance(acc);
    m.isolated_count = stats.isolated_count;
    m.messages = pending_messages;
    m.bytes_estimate = pending_bytes;
    m.connected = stats.connected;
    pending_messages = 0;
    pending_bytes = 0;
    result.metrics.push_back(m);
    if (round == config.rounds) {
      result.final_accuracies = acc;
      result.final_losses.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        result.final_losses[i] = evals[i].loss;
      }
    }
  }
  for (const auto &node : nodes) {
    result.dropped_messages += node.dropped_messages;
  }
  return result;
}

}  // namespace morph
