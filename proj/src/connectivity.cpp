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

#include "morph/connectivity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "morph/common.hpp"
#include "morph/engine.hpp"
#include "morph/rng.hpp"
#include "morph/topology.hpp"

namespace morph {
namespace {

std::vector<double> unit_gaussian(Rng &rng, int dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm = 0.0;
  for (double &x : v) {
    x = g(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double &x : v) {
    x /= norm;
  }
  return v;
}

double dot(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * b[i];
  }
  return s;
}

// Roulette pick over non-negative weights; the last positive entry absorbs
// rounding at the top end.
std::size_t roulette(const std::vector<double> &w, double total, Rng &rng) {
  const double target = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t pick = w.size();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) {
      continue;
    }
    pick = i;
    acc += w[i];
    if (target < acc) {
      break;
    }
  }
  return pick;
}

class Trial {
 public:
  Trial(const ConnectivityParams &p, Rng &rng) : p_(p), rng_(rng) {
    const auto k = static_cast<std::size_t>(p.clusters);
    for (std::size_t c = 0; c < k; ++c) {
      centers_.push_back(unit_gaussian(rng, p.dim));
    }
    members_.resize(k);
    cluster_of_.resize(p.nodes);
    for (NodeId i = 0; i < p.nodes; ++i) {
      cluster_of_[i] = uniform_index(rng, k);
      members_[cluster_of_[i]].push_back(i);
    }
    center_sim_.assign(k, std::vector<double>(k));
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        center_sim_[a][b] = dot(centers_[a], centers_[b]);
      }
    }
    if (p.jitter > 0.0) {
      std::normal_distribution<double> g(0.0, p.jitter);
      for (NodeId i = 0; i < p.nodes; ++i) {
        auto v = centers_[cluster_of_[i]];
        double norm = 0.0;
        for (double &x : v) {
          x += g(rng);
          norm += x * x;
        }
        norm = std::sqrt(norm);
        for (double &x : v) {
          x /= norm;
        }
        fingerprint_.push_back(std::move(v));
      }
    }
  }

  bool connected() {
    UnionFind uf(p_.nodes);
    std::vector<char> taken(p_.nodes, 0);
    std::vector<NodeId> chosen;
    for (NodeId i = 0; i < p_.nodes; ++i) {
      chosen.clear();
      if (p_.jitter > 0.0) {
        biased_generic(i, chosen, taken);
      } else {
        biased_clustered(i, chosen, taken);
      }
      random_fill(i, chosen, taken);
      for (NodeId j : chosen) {
        uf.unite(i, j);
        taken[j] = 0;
      }
    }
    return uf.components() == 1;
  }

 private:
  std::size_t biased_draws() const {
    return std::min(static_cast<std::size_t>(p_.d_s), p_.nodes - 1);
  }

  // Fingerprints are exact cluster centers, so the softmax over nodes
  // factors into a softmax over clusters weighted by remaining members,
  // followed by a uniform pick inside the cluster.
  void biased_clustered(NodeId self, std::vector<NodeId> &chosen, std::vector<char> &taken) {
    const std::size_t own = cluster_of_[self];
    const std::size_t k = members_.size();
    std::vector<double> remaining(k);
    for (std::size_t c = 0; c < k; ++c) {
      remaining[c] = static_cast<double>(members_[c].size()) - (c == own ? 1.0 : 0.0);
    }
    std::vector<double> w(k);
    for (std::size_t d = 0, draws = biased_draws(); d < draws; ++d) {
      double lowest = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        if (remaining[c] > 0.0) {
          lowest = std::min(lowest, center_sim_[own][c]);
        }
      }
      double total = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        w[c] = remaining[c] > 0.0 ? remaining[c] * std::exp(-p_.beta * (center_sim_[own][c] - lowest))
                                  : 0.0;
        total += w[c];
      }
      const std::size_t c = roulette(w, total, rng_);
      const auto &pool = members_[c];
      NodeId j = self;
      do {
        j = pool[uniform_index(rng_, pool.size())];
      } while (j == self || taken[j]);
      taken[j] = 1;
      chosen.push_back(j);
      remaining[c] -= 1.0;
    }
  }

  void biased_generic(NodeId self, std::vector<NodeId> &chosen, std::vector<char> &taken) {
    const std::size_t n = p_.nodes;
    std::vector<double> sim(n);
    for (NodeId j = 0; j < n; ++j) {
      if (j != self) {
        sim[j] = dot(fingerprint_[self], fingerprint_[j]);
      }
    }
    std::vector<double> w(n, 0.0);
    for (std::size_t d = 0, draws = biased_draws(); d < draws; ++d) {
      double floor_sim = std::numeric_limits<double>::infinity();
      for (NodeId j = 0; j < n; ++j) {
        if (j != self && !taken[j]) {
          floor_sim = std::min(floor_sim, sim[j]);
        }
      }
      double total = 0.0;
      for (NodeId j = 0; j < n; ++j) {
        w[j] = (j != self && !taken[j]) ? std::exp(-p_.beta * (sim[j] - floor_sim)) : 0.0;
        total += w[j];
      }
      const auto j = static_cast<NodeId>(roulette(w, total, rng_));
      taken[j] = 1;
      chosen.push_back(j);
    }
  }

  void random_fill(NodeId self, std::vector<NodeId> &chosen, std::vector<char> &taken) {
    const std::size_t free = p_.nodes - 1 - chosen.size();
    const std::size_t want = std::min(static_cast<std::size_t>(p_.d_r), free);
    if (want == free) {
      for (NodeId j = 0; j < p_.nodes; ++j) {
        if (j != self && !taken[j]) {
          taken[j] = 1;
          chosen.push_back(j);
        }
      }
      return;
    }
    for (std::size_t d = 0; d < want; ++d) {
      NodeId j = self;
      do {
        j = static_cast<NodeId>(uniform_index(rng_, p_.nodes));
      } while (j == self || taken[j]);
      taken[j] = 1;
      chosen.push_back(j);
    }
  }

  const ConnectivityParams &p_;
  Rng &rng_;
  std::vector<std::vector<double>> centers_;
  std::vector<std::vector<double>> center_sim_;
  std::vector<std::vector<NodeId>> members_;
  std::vector<std::size_t> cluster_of_;
  std::vector<std::vector<double>> fingerprint_;
};

std::uint64_t point_seed(const ConnectivityParams &p) {
  const std::uint64_t point = (static_cast<std::uint64_t>(p.d_s) << 32) |
                              static_cast<std::uint32_t>(p.d_r);
  return derive_seed(derive_seed(p.seed, p.nodes, "connectivity-n"), point, "connectivity-point");
}

}  // namespace

void ConnectivityParams::validate() const {
  if (nodes < 2) {
    throw InvalidArgument("connectivity: need at least 2 nodes");
  }
  if (d_s < 0 || d_r < 0 || static_cast<std::size_t>(d_s) + static_cast<std::size_t>(d_r) > nodes - 1) {
    throw InvalidArgument("connectivity: need d_s, d_r >= 0 and d_s + d_r <= n - 1");
  }
  if (clusters < 1 || dim < 1 || trials < 1) {
    throw InvalidArgument("connectivity: clusters, dim and trials must be positive");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta) || !(jitter >= 0.0) || !std::isfinite(jitter)) {
    throw InvalidArgument("connectivity: beta and jitter must be finite and non-negative");
  }
}

ConnectivityEstimate connectivity_probability(const ConnectivityParams &params) {
  params.validate();
  Rng rng(point_seed(params));
  int hits = 0;
  for (int t = 0; t < params.trials; ++t) {
    Trial trial(params, rng);
    if (trial.connected()) {
      ++hits;
    }
  }
  ConnectivityEstimate e;
  e.trials = params.trials;
  e.probability = static_cast<double>(hits) / static_cast<double>(params.trials);
  e.std_error = std::sqrt(e.probability * (1.0 - e.probability) / static_cast<double>(params.trials));
  return e;
}

std::vector<ConnectivityRow> sweep_grid(const ConnectivityGrid &grid, unsigned threads) {
  std::vector<ConnectivityParams> points;
  for (int ds : grid.d_s) {
    for (int dr : grid.d_r) {
      ConnectivityParams p;
      p.nodes = grid.nodes;
      p.d_s = ds;
      p.d_r = dr;
      p.clusters = grid.clusters;
      p.dim = grid.dim;
      p.beta = grid.beta;
      p.jitter = grid.jitter;
      p.trials = grid.trials;
      p.seed = grid.seed;
      p.validate();
      points.push_back(p);
    }
  }
  std::vector<ConnectivityRow> rows(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) {
    const auto &p = points[i];
    const auto e = connectivity_probability(p);
    rows[i] = {p.nodes, p.d_s, p.d_r, e.probability, e.std_error, e.trials};
  });
  return rows;
}

void write_connectivity_csv(std::ostream &out, const std::vector<ConnectivityRow> &rows) {
  out << "n,d_s,d_r,probability,std_error,trials\n";
  char buf[64];
  for (const auto &r : rows) {
    out << r.nodes << ',' << r.d_s << ',' << r.d_r << ',';
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g", r.probability, r.std_error);
    out << buf << ',' << r.trials << '\n';
  }
}

}  // namespace morph
