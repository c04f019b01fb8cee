#pragma once

// Test-side reference implementations. They share no code with the library
// beyond the data types, so agreement is evidence rather than tautology.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "offload/aco.hpp"
#include "offload/callgraph.hpp"
#include "offload/cost_sim.hpp"

namespace oracle {

using namespace offload;

struct NaivePath {
  std::vector<NodeId> nodes;
  double time = 0.0;
  double cpu = 0.0;
};

// Recursive DFS over the raw edge list.
inline void dfs(const DualPlacementGraph& d, NodeId at, NaivePath& cur, std::vector<NaivePath>& out) {
  if (at == d.end()) {
    out.push_back(cur);
    return;
  }
  for (const auto& e : d.edges()) {
    if (e.from != at) continue;
    cur.nodes.push_back(e.to);
    cur.time += e.weight.time_ms;
    cur.cpu += e.weight.cpu_units;
    dfs(d, e.to, cur, out);
    cur.time -= e.weight.time_ms;
    cur.cpu -= e.weight.cpu_units;
    cur.nodes.pop_back();
  }
}

inline std::vector<NaivePath> all_paths(const DualPlacementGraph& d) {
  std::vector<NaivePath> out;
  NaivePath cur;
  cur.nodes.push_back(d.start());
  dfs(d, d.start(), cur, out);
  return out;
}

// O(n^2) pairwise scan: keep every cost vector no other vector dominates.
inline std::set<std::pair<double, double>> front_costs(const std::vector<std::pair<double, double>>& pts) {
  std::set<std::pair<double, double>> out;
  for (const auto& a : pts) {
    bool dominated = false;
    for (const auto& b : pts) {
      if (b.first <= a.first && b.second <= a.second && (b.first < a.first || b.second < a.second)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out.insert(a);
  }
  return out;
}

inline std::set<std::pair<double, double>> true_front(const DualPlacementGraph& d) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : all_paths(d)) pts.emplace_back(p.time, p.cpu);
  return front_costs(pts);
}

inline std::set<std::pair<double, double>> cost_set(std::span<const PathSolution> sols) {
  std::set<std::pair<double, double>> out;
  for (const auto& s : sols) out.emplace(s.cost.time_ms, s.cost.cpu_units);
  return out;
}

// 2^(number of unpinned methods) for a chain-shaped decision graph.
inline std::uint64_t expected_path_count(const CallGraph& g) {
  std::uint64_t n = 1;
  for (const auto& m : g.methods) n *= m.pinned_local ? 1 : 2;
  return n;
}

// Multiplications performed by a textbook minor-expansion determinant.
struct CountingDet {
  std::uint64_t mults = 0;

  double operator()(const std::vector<std::vector<double>>& a) {
    const std::size_t n = a.size();
    if (n == 1) return a[0][0];
    double det = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      std::vector<std::vector<double>> minor;
      for (std::size_t r = 1; r < n; ++r) {
        std::vector<double> row;
        for (std::size_t k = 0; k < n; ++k)
          if (k != c) row.push_back(a[r][k]);
        minor.push_back(row);
      }
      const double sub = (*this)(minor);
      ++mults;
      det += (c % 2 == 0 ? 1.0 : -1.0) * a[0][c] * sub;
    }
    return det;
  }
};

// Random weighted decision graph with n methods.
inline DualPlacementGraph random_weighted(std::uint64_t seed, int n_methods, double pin_p = 0.2) {
  Rng rng = ant_stream(seed, 7, 7);
  DualPlacementGraph d = transform(random_callgraph(rng, n_methods, pin_p));
  assign_random_weights(d, rng);
  return d;
}

}  // namespace oracle
