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

#include "morph/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace morph {
namespace {

std::vector<double> sample_dirichlet(Rng &rng, double alpha, std::size_t n) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> p(n);
  double sum = 0.0;
  for (double &v : p) {
    v = gamma(rng);
    sum += v;
  }
  if (!(sum > 0.0)) {
    // Every draw underflowed (alpha far below 1): all mass on one node.
    std::fill(p.begin(), p.end(), 0.0);
    p[uniform_index(rng, n)] = 1.0;
    return p;
  }
  for (double &v : p) {
    v /= sum;
  }
  return p;
}

std::vector<std::size_t> largest_remainder(const std::vector<double> &p, std::size_t total) {
  std::vector<std::size_t> counts(p.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  remainders.reserve(p.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double exact = p[i] * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto &a, const auto &b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) {
    ++counts[remainders[r % remainders.size()].second];
  }
  return counts;
}

}  // namespace

Dataset generate_synthetic_dataset(int num_classes, int examples_per_class, int feature_dim,
                                   double cluster_spread, std::uint64_t seed) {
  if (num_classes < 1 || examples_per_class < 1 || feature_dim < 1) {
    throw InvalidArgument("synthetic dataset counts must be positive");
  }
  if (!(cluster_spread > 0.0)) {
    throw InvalidArgument("cluster_spread must be positive");
  }
  Rng rng = make_rng(seed, 0, "synthetic-dataset");
  std::normal_distribution<double> unit(0.0, 1.0);
  const auto dim = static_cast<std::size_t>(feature_dim);

  std::vector<std::vector<double>> means(static_cast<std::size_t>(num_classes),
                                         std::vector<double>(dim));
  for (auto &mean : means) {
    for (double &v : mean) {
      v = unit(rng);
    }
  }

  Dataset ds;
  ds.num_classes = num_classes;
  ds.examples.reserve(static_cast<std::size_t>(num_classes) *
                      static_cast<std::size_t>(examples_per_class));
  for (int c = 0; c < num_classes; ++c) {
    const auto &mean = means[static_cast<std::size_t>(c)];
    for (int e = 0; e < examples_per_class; ++e) {
      Example ex{std::vector<double>(dim), c};
      for (std::size_t j = 0; j < dim; ++j) {
        ex.features[j] = mean[j] + cluster_spread * unit(rng);
      }
      ds.examples.push_back(std::move(ex));
    }
  }
  return ds;
}

std::vector<Dataset> dirichlet_partition(const Dataset &dataset, const PartitionSpec &spec) {
  dataset.validate();
  if (spec.num_nodes < 2) {
    throw InvalidArgument("dirichlet_partition needs at least 2 nodes");
  }
  if (!(spec.alpha > 0.0) || !std::isfinite(spec.alpha)) {
    throw InvalidArgument("dirichlet alpha must be positive and finite");
  }
  const auto n = static_cast<std::size_t>(spec.num_nodes);
  if (n > dataset.size()) {
    throw InvalidArgument("more nodes (" + std::to_string(n) + ") than examples (" +
                          std::to_string(dataset.size()) + ")");
  }

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(dataset.num_classes));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    by_class[static_cast<std::size_t>(dataset.examples[i].label)].push_back(i);
  }

  Rng rng = make_rng(spec.seed, 0, "dirichlet-partition");
  std::vector<std::vector<std::size_t>> assignment(n);
  for (auto &members : by_class) {
    if (members.empty()) {
      continue;
    }
    std::shuffle(members.begin(), members.end(), rng);
    const auto counts = largest_remainder(sample_dirichlet(rng, spec.alpha, n), members.size());
    std::size_t cursor = 0;
    for (std::size_t node = 0; node < n; ++node) {
      for (std::size_t k = 0; k < counts[node]; ++k) {
        assignment[node].push_back(members[cursor++]);
      }
    }
  }

  for (std::size_t node = 0; node < n; ++node) {
    if (!assignment[node].empty()) {
      continue;
    }
    auto largest = std::max_element(assignment.begin(), assignment.end(),
                                     [](const auto &a, const auto &b) { return a.size() < b.size(); });
    assignment[node].push_back(largest->back());
    largest->pop_back();
  }

  std::vector<Dataset> shards(n);
  for (std::size_t node = 0; node < n; ++node) {
    auto &idx = assignment[node];
    std::sort(idx.begin(), idx.end());
    shards[node].num_classes = dataset.num_classes;
    shards[node].examples.reserve(idx.size());
    for (std::size_t i : idx) {
      shards[node].examples.push_back(dataset.examples[i]);
    }
  }
  return shards;
}

void write_dataset_csv(std::ostream &out, const Dataset &dataset) {
  const std::size_t dim = dataset.feature_dim();
  for (std::size_t j = 0; j < dim; ++j) {
    out << 'f' << j << ',';
  }
  out << "label\n";
  char buf[32];
  for (const auto &ex : dataset.examples) {
    for (double v : ex.features) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf << ',';
    }
    out << ex.label << '\n';
  }
}

void write_dataset_csv(const std::filesystem::path &path, const Dataset &dataset) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  write_dataset_csv(out, dataset);
}

Dataset read_dataset_csv(std::istream &in, int num_classes) {
  std::string line;
  if (!std::getline(in, line)) {
    throw InvalidArgument("dataset CSV is empty");
  }
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 2 || line.substr(line.rfind(',') + 1) != "label") {
    throw InvalidArgument("dataset CSV header must end with a label column");
  }
  Dataset ds;
  int max_label = -1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::stringstream row(line);
    std::string cell;
    Example ex;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) {
      cells.push_back(cell);
    }
    if (cells.size() != columns) {
      throw InvalidArgument("dataset CSV line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(columns));
    }
    try {
      for (std::size_t j = 0; j + 1 < cells.size(); ++j) {
        ex.features.push_back(std::stod(cells[j]));
      }
      ex.label = std::stoi(cells.back());
    } catch (const std::exception &) {
      throw InvalidArgument("dataset CSV line " + std::to_string(line_no) + " is not numeric");
    }
    if (ex.label < 0) {
      throw InvalidArgument("dataset CSV line " + std::to_string(line_no) + " has a negative label");
    }
    max_label = std::max(max_label, ex.label);
    ds.examples.push_back(std::move(ex));
  }
  ds.num_classes = std::max(num_classes, max_label + 1);
  ds.validate();
  return ds;
}

Dataset read_dataset_csv(const std::filesystem::path &path, int num_classes) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return read_dataset_csv(in, num_classes);
}

}  // namespace morph
