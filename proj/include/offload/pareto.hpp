#pragma once

#include <span>
#include <vector>

#include "offload/callgraph.hpp"
#include "offload/objective.hpp"

namespace offload {

// Minimization: u <= v componentwise and strictly better in one component.
// Exact comparison, no epsilon.
constexpr bool dominates(const ObjectiveVector& u, const ObjectiveVector& v) {
  return u.time_ms <= v.time_ms && u.cpu_units <= v.cpu_units &&
         (u.time_ms < v.time_ms || u.cpu_units < v.cpu_units);
}

// Mutually non-dominated path solutions. Distinct paths with equal cost are
// all kept; re-inserting an identical node sequence is a no-op. Members are
// kept sorted by (time, cpu, node sequence).
class ParetoArchive {
 public:
  // Returns true when the candidate entered the archive.
  bool insert(PathSolution candidate);

  std::span<const PathSolution> solutions() const { return solutions_; }
  std::size_t size() const { return solutions_.size(); }
  bool empty() const { return solutions_.empty(); }
  std::vector<ObjectiveVector> costs() const;
  // True when some member dominates `v`.
  bool covers(const ObjectiveVector& v) const;

  friend bool operator==(const ParetoArchive&, const ParetoArchive&) = default;

 private:
  std::vector<PathSolution> solutions_;
};

ParetoArchive filter(std::span<const PathSolution> candidates);

// filter(enumerate_paths(d)). Propagates the enumeration-bound refusal.
ParetoArchive pareto_front(const DualPlacementGraph& d,
                           std::uint64_t bound = kDefaultPathBound);

// Same front via per-node Pareto label sets propagated in topological order;
// no enumeration bound. Costs are summed start->end like enumerate_paths, so
// the two agree exactly whenever partial-sum rounding cannot merge distinct
// prefixes (always true for dyadic weights).
ParetoArchive pareto_front_labels(const DualPlacementGraph& d);

}  // namespace offload
