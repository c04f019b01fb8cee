#include "offload/pareto.hpp"

#include <algorithm>
#include <tuple>

namespace offload {

namespace {

bool solution_less(const PathSolution& a, const PathSolution& b) {
  return std::tie(a.cost.time_ms, a.cost.cpu_units, a.nodes) <
         std::tie(b.cost.time_ms, b.cost.cpu_units, b.nodes);
}

}  // namespace

bool ParetoArchive::insert(PathSolution candidate) {
  for (const auto& s : solutions_) {
    if (dominates(s.cost, candidate.cost)) return false;
    if (s.cost == candidate.cost && s.nodes == candidate.nodes) return false;
  }
  std::erase_if(solutions_,
                [&](const PathSolution& s) { return dominates(candidate.cost, s.cost); });
  auto pos = std::lower_bound(solutions_.begin(), solutions_.end(), candidate, solution_less);
  solutions_.insert(pos, std::move(candidate));
  return true;
}

std::vector<ObjectiveVector> ParetoArchive::costs() const {
  std::vector<ObjectiveVector> out;
  out.reserve(solutions_.size());
  for (const auto& s : solutions_) out.push_back(s.cost);
  return out;
}

bool ParetoArchive::covers(const ObjectiveVector& v) const {
  return std::any_of(solutions_.begin(), solutions_.end(),
                     [&](const PathSolution& s) { return dominates(s.cost, v); });
}

ParetoArchive filter(std::span<const PathSolution> candidates) {
  ParetoArchive archive;
  for (const auto& c : candidates) archive.insert(c);
  return archive;
}

ParetoArchive pareto_front(const DualPlacementGraph& d, std::uint64_t bound) {
  const auto paths = enumerate_paths(d, bound);
  return filter(paths);
}

ParetoArchive pareto_front_labels(const DualPlacementGraph& d) {
  std::vector<ParetoArchive> labels(d.node_count());
  labels[d.start()].insert({{d.start()}, {}});
  for (NodeId v : d.topological_order()) {
    if (v == d.end()) continue;
    for (const PathSolution& partial : labels[v].solutions()) {
      for (EdgeId e : d.out_edges(v)) {
        const DualEdge& edge = d.edge(e);
        PathSolution ext{partial.nodes, partial.cost + edge.weight};
        ext.nodes.push_back(edge.to);
        labels[edge.to].insert(std::move(ext));
      }
    }
    labels[v] = {};
  }
  return std::move(labels[d.end()]);
}

}  // namespace offload
