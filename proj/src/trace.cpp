#include "offload/trace.hpp"

namespace offload {

std::string ExecutionTrace::token_string() const {
  std::string s;
  for (const auto& t : tokens) {
    if (!s.empty()) s += ' ';
    s += t;
  }
  return s;
}

std::vector<PlacedMethod> plan_placements(const DualPlacementGraph& d, const PathSolution& p) {
  std::vector<PlacedMethod> out;
  for (NodeId n : p.nodes) {
    const DualNode& nd = d.node(n);
    if (nd.kind == NodeKind::Method) out.push_back({nd.method, nd.placement});
  }
  return out;
}

std::vector<PlacedMethod> all_local_plan(const CallGraph& g) {
  std::vector<PlacedMethod> out;
  for (MethodId id : execution_order(g)) out.push_back({id, Placement::Local});
  return out;
}

std::string token_string(std::span<const PlacedMethod> plan) {
  std::string s;
  for (const auto& m : plan) {
    if (!s.empty()) s += ' ';
    s += m.token();
  }
  return s;
}

}  // namespace offload
