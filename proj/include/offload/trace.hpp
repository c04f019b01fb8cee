#pragma once

#include <map>
#include <string>
#include <vector>

#include "offload/callgraph.hpp"
#include "offload/objective.hpp"

namespace offload {

struct PlacedMethod {
  MethodId method = 0;
  Placement placement = Placement::Local;

  std::string token() const { return std::to_string(method) + '@' + placement_code(placement); }
  friend bool operator==(const PlacedMethod&, const PlacedMethod&) = default;
};

// Record of one application run: the "method@placement" string plus the
// measured costs. surcharges[i] is the communication cost paid on entering
// tokens[i]; total = sum(per_method_costs) + sum(surcharges).
struct ExecutionTrace {
  std::vector<std::string> tokens;
  std::map<MethodId, ObjectiveVector> per_method_costs;
  std::vector<ObjectiveVector> surcharges;
  ObjectiveVector total;
  bool degraded = false;

  std::string token_string() const;
};

std::vector<PlacedMethod> plan_placements(const DualPlacementGraph& d, const PathSolution& p);
// Every method of g in execution order, all Local.
std::vector<PlacedMethod> all_local_plan(const CallGraph& g);
std::string token_string(std::span<const PlacedMethod> plan);

}  // namespace offload
