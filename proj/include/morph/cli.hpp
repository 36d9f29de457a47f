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


#ifndef MORPH_CLI_HPP
#define MORPH_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "morph/connectivity.hpp"
#include "morph/engine.hpp"

namespace morph::cli {

inline constexpr const char *kToolName = "morph-sim";
inline constexpr const char *kToolVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

/// A run configuration plus the label used in comparison tables. The label
/// defaults to the file stem.
struct NamedConfig {
  std::string name;
  ExperimentConfig config;
};

/// Parses a JSON object whose keys mirror ExperimentConfig. `protocol`,
/// `nodes` and `rounds` are required; everything else has a default.
/// Unknown keys, wrong types and invalid values throw ConfigError naming
/// the key.
NamedConfig parse_config(const std::string &json_text);
NamedConfig load_config(const std::filesystem::path &path);

/// Fully expanded JSON form of a config (every key present).
std::string config_to_json(const NamedConfig &config, int indent = 2);

/// Grid files use the keys nodes, d_s, d_r, trials, clusters, dim, beta,
/// jitter and seed, all optional.
ConnectivityGrid parse_grid(const std::string &json_text);
ConnectivityGrid load_grid(const std::filesystem::path &path);

/// Header: round,mean_accuracy,mean_loss,inter_node_variance,
/// isolated_count,messages,bytes_estimate,connected
void write_metrics_csv(std::ostream &out, const std::vector<RoundMetrics> &metrics);

/// Header: node,accuracy,loss
void write_per_node_csv(std::ostream &out, const ExperimentResult &result);

struct RunRequest {
  std::filesystem::path config_path;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool export_edges = false;
};

struct CompareRequest {
  std::filesystem::path config_dir;
  std::filesystem::path out_dir;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  unsigned threads = 1;
  std::optional<double> target_accuracy;  // percent
};

struct ConnectivityRequest {
  std::filesystem::path grid_path;
  std::filesystem::path out_dir;
  unsigned threads = 1;
};

int cmd_run(const RunRequest &request);
int cmd_compare(const CompareRequest &request);
int cmd_connectivity(const ConnectivityRequest &request);

/// Argument parsing and dispatch for the `morph-sim` binary.
int run_cli(int argc, char **argv);

}  // namespace morph::cli

#endif  // MORPH_CLI_HPP
