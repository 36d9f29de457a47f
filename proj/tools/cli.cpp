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


#include "morph/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "morph/common.hpp"
#include "spdlog/cfg/env.h"
#include "spdlog/sinks/stdout_color_sinks.h"
#include "spdlog/spdlog.h"

namespace morph::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("", "cannot read " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path &path, const std::string &text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write " + tmp.string());
    }
    out << text;
    if (!out.flush()) {
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json parse_object(const std::string &text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error &e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw ConfigError("", "configuration must be a JSON object");
  }
  return j;
}

// --- typed field readers -----------------------------------------------------

int read_int(const Json &j, const std::string &key) {
  const Json &v = j.at(key);
  if (!v.is_number_integer()) {
    throw ConfigError(key, "'" + key + "' must be an integer");
  }
  const auto x = v.get<long long>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError(key, "'" + key + "' is out of range");
  }
  return static_cast<int>(x);
}

std::uint64_t read_u64(const Json &j, const std::string &key) {
  const Json &v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    throw ConfigError(key, "'" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

double read_real(const Json &j, const std::string &key) {
  const Json &v = j.at(key);
  if (!v.is_number()) {
    throw ConfigError(key, "'" + key + "' must be a number");
  }
  return v.get<double>();
}

std::string read_string(const Json &j, const std::string &key) {
  const Json &v = j.at(key);
  if (!v.is_string()) {
    throw ConfigError(key, "'" + key + "' must be a string");
  }
  return v.get<std::string>();
}

std::vector<int> read_int_list(const Json &j, const std::string &key) {
  const Json &v = j.at(key);
  if (!v.is_array() || v.empty()) {
    throw ConfigError(key, "'" + key + "' must be a non-empty array of integers");
  }
  std::vector<int> out;
  for (const auto &x : v) {
    if (!x.is_number_integer()) {
      throw ConfigError(key, "'" + key + "' must be a non-empty array of integers");
    }
    out.push_back(x.get<int>());
  }
  return out;
}

template <typename Enum>
Enum read_enum(const Json &j, const std::string &key, const std::map<std::string, Enum> &names) {
  const std::string s = read_string(j, key);
  const auto it = names.find(s);
  if (it == names.end()) {
    std::string allowed;
    for (const auto &[name, value] : names) {
      allowed += (allowed.empty() ? "" : ", ") + name;
    }
    throw ConfigError(key, "'" + key + "' must be one of: " + allowed);
  }
  return it->second;
}

const std::map<std::string, Protocol> kProtocols{{"morph", Protocol::morph},
                                                 {"epidemic", Protocol::epidemic},
                                                 {"static_mh", Protocol::static_mh},
                                                 {"fully_connected", Protocol::fully_connected}};
const std::map<std::string, EpidemicVariant> kVariants{{"local", EpidemicVariant::local},
                                                       {"oracle", EpidemicVariant::oracle}};
const std::map<std::string, EvalSchedule> kSchedules{{"fixed", EvalSchedule::fixed},
                                                     {"tapered", EvalSchedule::tapered}};
const std::map<std::string, ModelKind> kModels{{"softmax", ModelKind::softmax_regression},
                                               {"mlp", ModelKind::mlp}};

void reject_unknown(const Json &j, const std::set<std::string> &known) {
  for (const auto &[key, value] : j.items()) {
    if (!known.contains(key)) {
      throw ConfigError(key, "unknown field '" + key + "'");
    }
  }
}

Json grid_to_json(const ConnectivityGrid &g) {
  Json j;
  j["nodes"] = g.nodes;
  j["d_s"] = g.d_s;
  j["d_r"] = g.d_r;
  j["trials"] = g.trials;
  j["clusters"] = g.clusters;
  j["dim"] = g.dim;
  j["beta"] = g.beta;
  j["jitter"] = g.jitter;
  j["seed"] = g.seed;
  return j;
}

// --- manifests -------------------------------------------------------------

class Manifest {
 public:
  Manifest(fs::path dir, std::string command) : path_(std::move(dir) / "manifest.json") {
    doc_["tool"] = kToolName;
    doc_["version"] = kToolVersion;
    doc_["command"] = std::move(command);
    doc_["status"] = "incomplete";
    doc_["started_at"] = utc_timestamp();
    doc_["artifacts"] = Json::array();
  }

  Json &doc() { return doc_; }
  void add_artifact(const std::string &name) { doc_["artifacts"].push_back(name); }
  void save() const { write_file(path_, doc_.dump(2) + "\n"); }

  void finish(const std::string &status) {
    doc_["status"] = status;
    doc_["finished_at"] = utc_timestamp();
    save();
  }

 private:
  fs::path path_;
  Json doc_;
};

struct RunSummary {
  double final_accuracy = 0.0;
  double final_variance = 0.0;
  std::optional<int> rounds_to_target;
  std::size_t total_messages = 0;
  std::size_t total_bytes = 0;
};

std::string metrics_text(const ExperimentResult &r) {
  std::ostringstream out;
  write_metrics_csv(out, r.metrics);
  return out.str();
}

std::string per_node_text(const ExperimentResult &r) {
  std::ostringstream out;
  write_per_node_csv(out, r);
  return out.str();
}

double mean_of(const std::vector<double> &x) {
  double s = 0.0;
  for (double v : x) {
    s += v;
  }
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

// Sample standard deviation; 0 for fewer than two values.
double std_of(const std::vector<double> &x) {
  if (x.size() < 2) {
    return 0.0;
  }
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) {
    ss += (v - m) * (v - m);
  }
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

int report_error(const std::exception &e) {
  if (const auto *ce = dynamic_cast<const ConfigError *>(&e)) {
    if (ce->field().empty()) {
      spdlog::error("config error: {}", ce->what());
    } else {
      spdlog::error("config error in field '{}': {}", ce->field(), ce->what());
    }
    return kExitConfig;
  }
  spdlog::error("{}", e.what());
  return kExitFailure;
}

}  // namespace

NamedConfig parse_config(const std::string &json_text) {
  const Json j = parse_object(json_text);
  reject_unknown(j, {"name", "protocol", "nodes", "view_size", "k_out", "random_slots", "beta",
                     "delta_r", "staleness_factor", "epidemic_variant", "learning_rate",
                     "batch_size", "rounds", "eval_every", "eval_schedule", "model",
                     "hidden_units", "num_classes", "train_per_class", "test_per_class",
                     "feature_dim", "cluster_spread", "alpha", "seed"});
  for (const char *required : {"protocol", "nodes", "rounds"}) {
    if (!j.contains(required)) {
      throw ConfigError(required, std::string("missing required field '") + required + "'");
    }
  }
  NamedConfig out;
  ExperimentConfig &c = out.config;
  c.protocol = read_enum(j, "protocol", kProtocols);
  c.nodes = read_int(j, "nodes");
  c.rounds = read_int(j, "rounds");
  const auto opt_int = [&](const char *key, int &field) {
    if (j.contains(key)) {
      field = read_int(j, key);
    }
  };
  const auto opt_real = [&](const char *key, double &field) {
    if (j.contains(key)) {
      field = read_real(j, key);
    }
  };
  opt_int("view_size", c.view_size);
  opt_int("k_out", c.k_out);
  opt_int("random_slots", c.random_slots);
  opt_real("beta", c.beta);
  opt_int("delta_r", c.delta_r);
  opt_int("staleness_factor", c.staleness_factor);
  if (j.contains("epidemic_variant")) {
    c.epidemic_variant = read_enum(j, "epidemic_variant", kVariants);
  }
  opt_real("learning_rate", c.learning_rate);
  opt_int("batch_size", c.batch_size);
  opt_int("eval_every", c.eval_every);
  if (j.contains("eval_schedule")) {
    c.eval_schedule = read_enum(j, "eval_schedule", kSchedules);
  }
  if (j.contains("model")) {
    c.model = read_enum(j, "model", kModels);
  }
  opt_int("hidden_units", c.hidden_units);
  opt_int("num_classes", c.num_classes);
  opt_int("train_per_class", c.train_per_class);
  opt_int("test_per_class", c.test_per_class);
  opt_int("feature_dim", c.feature_dim);
  opt_real("cluster_spread", c.cluster_spread);
  opt_real("alpha", c.alpha);
  if (j.contains("seed")) {
    c.seed = read_u64(j, "seed");
  }
  if (j.contains("name")) {
    out.name = read_string(j, "name");
  }
  c.validate();
  return out;
}

NamedConfig load_config(const fs::path &path) {
  NamedConfig c = parse_config(read_file(path));
  if (c.name.empty()) {
    c.name = path.stem().string();
  }
  return c;
}

std::string config_to_json(const NamedConfig &named, int indent) {
  const ExperimentConfig &c = named.config;
  Json j;
  j["name"] = named.name;
  j["protocol"] = to_string(c.protocol);
  j["nodes"] = c.nodes;
  j["view_size"] = c.view_size;
  j["k_out"] = c.k_out;
  j["random_slots"] = c.random_slots;
  j["beta"] = c.beta;
  j["delta_r"] = c.delta_r;
  j["staleness_factor"] = c.staleness_factor;
  j["epidemic_variant"] = to_string(c.epidemic_variant);
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["rounds"] = c.rounds;
  j["eval_every"] = c.eval_every;
  j["eval_schedule"] = to_string(c.eval_schedule);
  j["model"] = to_string(c.model);
  j["hidden_units"] = c.hidden_units;
  j["num_classes"] = c.num_classes;
  j["train_per_class"] = c.train_per_class;
  j["test_per_class"] = c.test_per_class;
  j["feature_dim"] = c.feature_dim;
  j["cluster_spread"] = c.cluster_spread;
  j["alpha"] = c.alpha;
  j["seed"] = c.seed;
  return j.dump(indent);
}

ConnectivityGrid parse_grid(const std::string &json_text) {
  const Json j = parse_object(json_text);
  reject_unknown(j, {"nodes", "d_s", "d_r", "trials", "clusters", "dim", "beta", "jitter", "seed"});
  ConnectivityGrid g;
  if (j.contains("nodes")) {
    const int n = read_int(j, "nodes");
    if (n < 2) {
      throw ConfigError("nodes", "'nodes' must be at least 2");
    }
    g.nodes = static_cast<std::size_t>(n);
  }
  if (j.contains("d_s")) {
    g.d_s = read_int_list(j, "d_s");
  }
  if (j.contains("d_r")) {
    g.d_r = read_int_list(j, "d_r");
  }
  if (j.contains("trials")) {
    g.trials = read_int(j, "trials");
  }
  if (j.contains("clusters")) {
    g.clusters = read_int(j, "clusters");
  }
  if (j.contains("dim")) {
    g.dim = read_int(j, "dim");
  }
  if (j.contains("beta")) {
    g.beta = read_real(j, "beta");
  }
  if (j.contains("jitter")) {
    g.jitter = read_real(j, "jitter");
  }
  if (j.contains("seed")) {
    g.seed = read_u64(j, "seed");
  }
  // Surface grid-point problems as config errors before anything runs.
  for (int ds : g.d_s) {
    for (int dr : g.d_r) {
      ConnectivityParams p;
      p.nodes = g.nodes;
      p.d_s = ds;
      p.d_r = dr;
      p.clusters = g.clusters;
      p.dim = g.dim;
      p.beta = g.beta;
      p.jitter = g.jitter;
      p.trials = g.trials;
      try {
        p.validate();
      } catch (const InvalidArgument &e) {
        throw ConfigError("d_s", e.what());
      }
    }
  }
  return g;
}

ConnectivityGrid load_grid(const fs::path &path) { return parse_grid(read_file(path)); }

void write_metrics_csv(std::ostream &out, const std::vector<RoundMetrics> &metrics) {
  out << "round,mean_accuracy,mean_loss,inter_node_variance,isolated_count,messages,bytes_estimate,"
         "connected\n";
  for (const auto &m : metrics) {
    out << m.round << ',' << fmt9(m.mean_accuracy) << ',' << fmt9(m.mean_loss) << ','
        << fmt9(m.inter_node_variance) << ',' << m.isolated_count << ',' << m.messages << ','
        << m.bytes_estimate << ',' << (m.connected ? 1 : 0) << '\n';
  }
}

void write_per_node_csv(std::ostream &out, const ExperimentResult &result) {
  out << "node,accuracy,loss\n";
  for (std::size_t i = 0; i < result.final_accuracies.size(); ++i) {
    out << i << ',' << fmt9(result.final_accuracies[i]) << ',' << fmt9(result.final_losses[i]) << '\n';
  }
}

int cmd_run(const RunRequest &request) {
  NamedConfig named;
  try {
    named = load_config(request.config_path);
    if (request.seed) {
      named.config.seed = *request.seed;
    }
    named.config.validate();
  } catch (const std::exception &e) {
    return report_error(e);
  }

  try {
    fs::create_directories(request.out_dir);
    Manifest manifest(request.out_dir, "run");
    manifest.doc()["seed"] = named.config.seed;
    manifest.doc()["threads"] = request.threads;
    manifest.doc()["config"] = Json::parse(config_to_json(named));
    manifest.save();

    std::unique_ptr<std::ofstream> edges;
    RunOptions options;
    options.threads = request.threads;
    if (request.export_edges) {
      edges = std::make_unique<std::ofstream>(request.out_dir / "edges.csv", std::ios::trunc);
      if (!*edges) {
        throw std::runtime_error("cannot write edges.csv");
      }
      write_edges_csv_header(*edges);
      options.on_topology = [&](int round, const Topology &t) { write_edges_csv(*edges, round, t); };
    }

    spdlog::info("run '{}': protocol={} nodes={} rounds={} seed={}", named.name,
                 to_string(named.config.protocol), named.config.nodes, named.config.rounds,
                 named.config.seed);
    ExperimentResult result;
    try {
      result = run_experiment(named.config, options);
    } catch (const std::exception &e) {
      manifest.doc()["error"] = e.what();
      manifest.finish("failed");
      throw;
    }
    write_file(request.out_dir / "metrics.csv", metrics_text(result));
    manifest.add_artifact("metrics.csv");
    write_file(request.out_dir / "per_node_final.csv", per_node_text(result));
    manifest.add_artifact("per_node_final.csv");
    if (edges) {
      edges->close();
      manifest.add_artifact("edges.csv");
    }
    const auto cost = communication_cost(result.metrics);
    const auto &last = result.metrics.back();
    manifest.doc()["results"] = {{"final_mean_accuracy", last.mean_accuracy},
                                 {"final_inter_node_variance", last.inter_node_variance},
                                 {"total_messages", cost.total_messages},
                                 {"total_bytes", cost.total_bytes},
                                 {"dropped_messages", result.dropped_messages},
                                 {"model_parameters", result.model_parameters}};
    manifest.finish("complete");
    spdlog::info("final mean accuracy {:.2f}%, variance {:.4f}", last.mean_accuracy,
                 last.inter_node_variance);
    return kExitOk;
  } catch (const std::exception &e) {
    return report_error(e);
  }
}

int cmd_compare(const CompareRequest &request) {
  std::vector<NamedConfig> configs;
  try {
    if (!fs::is_directory(request.config_dir)) {
      throw ConfigError("", request.config_dir.string() + " is not a directory");
    }
    std::vector<fs::path> files;
    for (const auto &entry : fs::directory_iterator(request.config_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      throw ConfigError("", "no .json configs in " + request.config_dir.string());
    }
    if (request.seeds.empty()) {
      throw ConfigError("seeds", "at least one seed is required");
    }
    std::set<std::string> names;
    for (const auto &f : files) {
      try {
        configs.push_back(load_config(f));
      } catch (const ConfigError &e) {
        throw ConfigError(e.field(), f.filename().string() + ": " + e.what());
      }
      if (!names.insert(configs.back().name).second) {
        throw ConfigError("name", "duplicate config name '" + configs.back().name + "'");
      }
    }
  } catch (const std::exception &e) {
    return report_error(e);
  }

  try {
    fs::create_directories(request.out_dir);
    Manifest manifest(request.out_dir, "compare");
    manifest.doc()["seeds"] = request.seeds;
    manifest.doc()["threads"] = request.threads;
    Json cfgs = Json::array();
    for (const auto &c : configs) {
      cfgs.push_back(Json::parse(config_to_json(c)));
    }
    manifest.doc()["configs"] = cfgs;
    manifest.save();

    struct Job {
      std::size_t config;
      std::uint64_t seed;
      std::optional<ExperimentResult> result;
      std::string error;
    };
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < configs.size(); ++c) {
      for (std::uint64_t s : request.seeds) {
        jobs.push_back({c, s, std::nullopt, {}});
      }
    }
    std::mutex log_mutex;
    parallel_for(jobs.size(), request.threads, [&](std::size_t k) {
      Job &job = jobs[k];
      ExperimentConfig c = configs[job.config].config;
      c.seed = job.seed;
      try {
        job.result = run_experiment(c);
        const fs::path dir =
            request.out_dir / "runs" / configs[job.config].name / ("seed-" + std::to_string(job.seed));
        fs::create_directories(dir);
        write_file(dir / "metrics.csv", metrics_text(*job.result));
        write_file(dir / "per_node_final.csv", per_node_text(*job.result));
        const std::lock_guard<std::mutex> lock(log_mutex);
        spdlog::info("{} seed {}: final accuracy {:.2f}%", configs[job.config].name, job.seed,
                     job.result->metrics.back().mean_accuracy);
      } catch (const std::exception &e) {
        job.result.reset();
        job.error = e.what();
        const std::lock_guard<std::mutex> lock(log_mutex);
        spdlog::error("{} seed {} failed: {}", configs[job.config].name, job.seed, e.what());
      }
    });

    // Target: explicit, else the best epidemic-learning mean final accuracy.
    std::optional<double> target = request.target_accuracy;
    std::string target_source = target ? "explicit" : "none";
    if (!target) {
      for (std::size_t c = 0; c < configs.size(); ++c) {
        if (configs[c].config.protocol != Protocol::epidemic) {
          continue;
        }
        std::vector<double> finals;
        for (const auto &job : jobs) {
          if (job.config == c && job.result) {
            finals.push_back(job.result->metrics.back().mean_accuracy);
          }
        }
        if (!finals.empty() && (!target || mean_of(finals) > *target)) {
          target = mean_of(finals);
          target_source = "best epidemic mean (" + configs[c].name + ")";
        }
      }
    }

    std::ostringstream summary;
    summary << "config,protocol,runs,failed_runs,final_accuracy_mean,final_accuracy_std,"
               "final_variance_mean,final_variance_std,rounds_to_target_mean,runs_reaching_target,"
               "total_messages_mean,total_bytes_mean\n";
    std::size_t failed = 0;
    Json failures = Json::array();
    for (std::size_t c = 0; c < configs.size(); ++c) {
      std::vector<double> acc;
      std::vector<double> var;
      std::vector<double> reach;
      std::vector<double> msgs;
      std::vector<double> bytes;
      std::size_t fails = 0;
      for (const auto &job : jobs) {
        if (job.config != c) {
          continue;
        }
        if (!job.result) {
          ++fails;
          failures.push_back({{"config", configs[c].name}, {"seed", job.seed}, {"error", job.error}});
          continue;
        }
        const auto &r = *job.result;
        acc.push_back(r.metrics.back().mean_accuracy);
        var.push_back(r.metrics.back().inter_node_variance);
        const auto cost = communication_cost(r.metrics);
        msgs.push_back(static_cast<double>(cost.total_messages));
        bytes.push_back(static_cast<double>(cost.total_bytes));
        if (target) {
          for (const auto &m : r.metrics) {
            if (m.mean_accuracy >= *target) {
              reach.push_back(m.round);
              break;
            }
          }
        }
      }
      failed += fails;
      summary << configs[c].name << ',' << to_string(configs[c].config.protocol) << ','
              << acc.size() << ',' << fails << ',';
      if (acc.empty()) {
        summary << "NA,NA,NA,NA,NA,0,NA,NA\n";
        continue;
      }
      summary << fmt9(mean_of(acc)) << ',' << fmt9(std_of(acc)) << ',' << fmt9(mean_of(var)) << ','
              << fmt9(std_of(var)) << ',' << (reach.empty() ? "NA" : fmt9(mean_of(reach))) << ','
              << reach.size() << ',' << fmt9(mean_of(msgs)) << ',' << fmt9(mean_of(bytes)) << '\n';
    }
    write_file(request.out_dir / "summary.csv", summary.str());
    manifest.add_artifact("summary.csv");
    manifest.add_artifact("runs/");
    if (target) {
      manifest.doc()["target_accuracy"] = *target;
    } else {
      manifest.doc()["target_accuracy"] = nullptr;
    }
    manifest.doc()["target_source"] = target_source;
    manifest.doc()["failures"] = failures;
    manifest.finish(failed == 0 ? "complete" : "failed");
    if (failed != 0) {
      spdlog::error("{} of {} runs failed", failed, jobs.size());
      return kExitFailure;
    }
    return kExitOk;
  } catch (const std::exception &e) {
    return report_error(e);
  }
}

int cmd_connectivity(const ConnectivityRequest &request) {
  ConnectivityGrid grid;
  try {
    grid = load_grid(request.grid_path);
  } catch (const std::exception &e) {
    return report_error(e);
  }
  try {
    fs::create_directories(request.out_dir);
    Manifest manifest(request.out_dir, "connectivity");
    manifest.doc()["seed"] = grid.seed;
    manifest.doc()["threads"] = request.threads;
    manifest.doc()["grid"] = grid_to_json(grid);
    manifest.save();
    spdlog::info("connectivity sweep: n={} points={} trials={}", grid.nodes,
                 grid.d_s.size() * grid.d_r.size(), grid.trials);
    const auto rows = sweep_grid(grid, request.threads);
    std::ostringstream csv;
    write_connectivity_csv(csv, rows);
    write_file(request.out_dir / "connectivity.csv", csv.str());
    manifest.add_artifact("connectivity.csv");
    manifest.finish("complete");
    return kExitOk;
  } catch (const std::exception &e) {
    return report_error(e);
  }
}

int run_cli(int argc, char **argv) {
  if (!spdlog::get("morph")) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("morph"));
  }
  spdlog::set_level(spdlog::level::info);
  spdlog::cfg::load_env_levels();  // SPDLOG_LEVEL=debug|info|warn|error|off

  CLI::App app{"Decentralized learning simulator with dissimilarity-guided topologies"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  RunRequest run;
  auto *run_cmd = app.add_subcommand("run", "Run one experiment");
  run_cmd->add_option("--config", run.config_path, "Experiment config (JSON)")->required();
  run_cmd->add_option("--out", run.out_dir, "Output directory")->required();
  run_cmd->add_option("--seed", run.seed, "Override the config seed");
  run_cmd->add_option("--threads", run.threads, "Worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--edges", run.export_edges, "Also write the per-round edge list");

  CompareRequest compare;
  auto *cmp_cmd = app.add_subcommand("compare", "Run every config in a directory across seeds");
  cmp_cmd->add_option("--config,--configs", compare.config_dir, "Directory of JSON configs")->required();
  cmp_cmd->add_option("--out", compare.out_dir, "Output directory")->required();
  cmp_cmd->add_option("--seeds", compare.seeds, "Seeds (default 1,2,3,4,5)")->delimiter(',');
  cmp_cmd->add_option("--threads", compare.threads, "Concurrent runs")->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--target", compare.target_accuracy,
                      "Target accuracy in percent (default: best epidemic mean)");

  ConnectivityRequest conn;
  auto *conn_cmd = app.add_subcommand("connectivity", "Monte-Carlo connectivity sweep");
  conn_cmd->add_option("--config", conn.grid_path, "Grid config (JSON)")->required();
  conn_cmd->add_option("--out", conn.out_dir, "Output directory")->required();
  conn_cmd->add_option("--threads", conn.threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (run_cmd->parsed()) {
    return cmd_run(run);
  }
  if (cmp_cmd->parsed()) {
    return cmd_compare(compare);
  }
  return cmd_connectivity(conn);
}

}  // namespace morph::cli
