#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "offload/objective.hpp"

namespace offload {

using MethodId = int;

struct MethodNode {
  MethodId id = 0;
  std::string name;
  double work_units = 0.0;  // abstract compute cost
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
  bool pinned_local = false;

  friend bool operator==(const MethodNode&, const MethodNode&) = default;
};

struct CallEdge {
  MethodId caller = 0;
  MethodId callee = 0;

  friend bool operator==(const CallEdge&, const CallEdge&) = default;
};

struct CallGraph {
  std::vector<MethodNode> methods;
  std::vector<CallEdge> calls;  // declared order matters for serialization
  MethodId entry = 0;
  MethodId exit = 0;

  const MethodNode* find(MethodId id) const;
  friend bool operator==(const CallGraph&, const CallGraph&) = default;
};

// Checks ids, edge endpoints, self-loops, and the entry pin. Cycles are
// allowed here; transform() rejects them.
void validate(const CallGraph& g);

// Returns one directed cycle as a method-id sequence (first == last), or
// nullopt when the graph is acyclic.
std::optional<std::vector<MethodId>> find_cycle(const CallGraph& g);

// Maps every method to the smallest id in its strongly-connected component.
std::unordered_map<MethodId, MethodId> scc_representatives(const CallGraph& g);

// Merges every strongly-connected component into a single method carrying the
// component's summed work. The merged node keeps the smallest member id and
// its byte counts; it is pinned when any member is pinned.
CallGraph collapse_recursion(const CallGraph& g);

// Linear execution order used by the decision graph: children in declared
// order, callers before callees, exit last. Throws GraphError on cycles,
// methods unreachable from entry, or an exit that calls other methods.
std::vector<MethodId> execution_order(const CallGraph& g);

// ---------------------------------------------------------------------------

enum class Placement : std::uint8_t { Local, Remote };
enum class NodeKind : std::uint8_t { Start, Method, End };

char placement_code(Placement p);

using NodeId = std::size_t;
using EdgeId = std::size_t;

struct DualNode {
  NodeKind kind = NodeKind::Method;
  MethodId method = -1;  // -1 for start/end
  Placement placement = Placement::Local;

  friend bool operator==(const DualNode&, const DualNode&) = default;
};

struct DualEdge {
  NodeId from = 0;
  NodeId to = 0;
  ObjectiveVector weight;
  bool measured = false;

  friend bool operator==(const DualEdge&, const DualEdge&) = default;
};

// Decision graph whose start->end paths are placement plans. Construction
// validates the edge structure: a DAG where every node reachable from start
// can reach end.
class DualPlacementGraph {
 public:
  DualPlacementGraph(std::vector<DualNode> nodes, std::vector<DualEdge> edges, NodeId start,
                     NodeId end);

  NodeId start() const { return start_; }
  NodeId end() const { return end_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const DualNode& node(NodeId n) const { return nodes_.at(n); }
  const DualEdge& edge(EdgeId e) const { return edges_.at(e); }
  std::span<const DualNode> nodes() const { return nodes_; }
  std::span<const DualEdge> edges() const { return edges_; }
  std::span<const EdgeId> out_edges(NodeId n) const { return out_.at(n); }
  // Nodes in a topological order starting at start().
  std::span<const NodeId> topological_order() const { return topo_; }

  std::optional<EdgeId> find_edge(NodeId from, NodeId to) const;
  std::optional<NodeId> find_node(MethodId method, Placement placement) const;

  void set_weight(EdgeId e, ObjectiveVector w, bool measured = true);
  bool all_measured() const;
  std::size_t unmeasured_count() const;

  // "id@L" / "id@R"; "start" / "end" for the virtual nodes.
  std::string token(NodeId n) const;

  friend bool operator==(const DualPlacementGraph& a, const DualPlacementGraph& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_ && a.start_ == b.start_ &&
           a.end_ == b.end_;
  }

 private:
  std::vector<DualNode> nodes_;
  std::vector<DualEdge> edges_;
  std::vector<std::vector<EdgeId>> out_;
  std::vector<NodeId> topo_;
  NodeId start_;
  NodeId end_;
};

// Each offloadable method becomes a Local and a Remote copy, pinned methods a
// Local copy only, chained in execution_order() between virtual start/end.
// All weights start at (0,0), unmeasured.
DualPlacementGraph transform(const CallGraph& g);

// A start->end path with its summed cost.
struct PathSolution {
  std::vector<NodeId> nodes;
  ObjectiveVector cost;

  friend bool operator==(const PathSolution&, const PathSolution&) = default;
};

// Edge ids along the path; throws GraphError if two consecutive nodes are not
// adjacent or the path does not run start->end.
std::vector<EdgeId> path_edges(const DualPlacementGraph& d, std::span<const NodeId> nodes);
ObjectiveVector path_cost(const DualPlacementGraph& d, std::span<const NodeId> nodes);

// Method tokens along the path, virtual nodes omitted.
std::vector<std::string> path_tokens(const DualPlacementGraph& d, const PathSolution& p);
// Space-separated path_tokens(); the string the decision cache stores.
std::string token_string(const DualPlacementGraph& d, const PathSolution& p);
std::size_t remote_count(const DualPlacementGraph& d, const PathSolution& p);

inline constexpr std::uint64_t kDefaultPathBound = std::uint64_t{1} << 20;

// Number of start->end paths, saturating at UINT64_MAX.
std::uint64_t count_paths(const DualPlacementGraph& d);

// Every start->end path exactly once, in DFS order over out-edge order.
// Throws SolverError when the path count exceeds `bound`.
std::vector<PathSolution> enumerate_paths(const DualPlacementGraph& d,
                                          std::uint64_t bound = kDefaultPathBound);

}  // namespace offload
