#include "offload/callgraph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "offload/error.hpp"

namespace offload {

namespace {

using Adjacency = std::unordered_map<MethodId, std::vector<MethodId>>;

// Callees per caller in declared order, duplicates dropped.
Adjacency children_of(const CallGraph& g) {
  Adjacency adj;
  for (const auto& m : g.methods) adj[m.id];
  for (const auto& c : g.calls) {
    auto& kids = adj[c.caller];
    if (std::find(kids.begin(), kids.end(), c.callee) == kids.end()) kids.push_back(c.callee);
  }
  return adj;
}

std::string describe(const CallGraph& g, MethodId id) {
  const MethodNode* m = g.find(id);
  std::ostringstream os;
  os << id;
  if (m != nullptr && !m->name.empty()) os << " (" << m->name << ')';
  return os.str();
}

}  // namespace

const MethodNode* CallGraph::find(MethodId id) const {
  auto it = std::find_if(methods.begin(), methods.end(),
                         [id](const MethodNode& m) { return m.id == id; });
  return it == methods.end() ? nullptr : &*it;
}

void validate(const CallGraph& g) {
  std::set<MethodId> ids;
  for (const auto& m : g.methods) {
    if (!ids.insert(m.id).second) throw GraphError("duplicate method id " + std::to_string(m.id));
    if (!(m.work_units >= 0.0) || !std::isfinite(m.work_units))
      throw GraphError("method " + std::to_string(m.id) + ": work must be finite and >= 0");
  }
  for (std::size_t i = 0; i < g.calls.size(); ++i) {
    const auto& c = g.calls[i];
    const std::string where = "calls[" + std::to_string(i) + "]: ";
    if (!ids.contains(c.caller)) throw GraphError(where + "unknown caller " + std::to_string(c.caller));
    if (!ids.contains(c.callee)) throw GraphError(where + "unknown callee " + std::to_string(c.callee));
    if (c.caller == c.callee) throw GraphError(where + "self-loop on " + std::to_string(c.caller));
  }
  if (!ids.contains(g.entry)) throw GraphError("unknown entry " + std::to_string(g.entry));
  if (!ids.contains(g.exit)) throw GraphError("unknown exit " + std::to_string(g.exit));
  if (!g.find(g.entry)->pinned_local) throw GraphError("entry method must be pinned_local");
}

std::optional<std::vector<MethodId>> find_cycle(const CallGraph& g) {
  const Adjacency adj = children_of(g);
  enum class Mark { White, Grey, Black };
  std::unordered_map<MethodId, Mark> mark;
  std::vector<MethodId> stack;
  std::optional<std::vector<MethodId>> cycle;

  std::function<bool(MethodId)> visit = [&](MethodId v) {
    mark[v] = Mark::Grey;
    stack.push_back(v);
    for (MethodId w : adj.at(v)) {
      if (mark[w] == Mark::Grey) {
        auto from = std::find(stack.begin(), stack.end(), w);
        cycle.emplace(from, stack.end());
        cycle->push_back(w);
        return true;
      }
      if (mark[w] == Mark::White && visit(w)) return true;
    }
    stack.pop_back();
    mark[v] = Mark::Black;
    return false;
  };

  for (const auto& m : g.methods) {
    if (mark[m.id] == Mark::White && visit(m.id)) return cycle;
  }
  return std::nullopt;
}

std::unordered_map<MethodId, MethodId> scc_representatives(const CallGraph& g) {
  validate(g);
  const Adjacency adj = children_of(g);

  // Tarjan
  std::unordered_map<MethodId, int> index, low;
  std::unordered_map<MethodId, bool> on_stack;
  std::vector<MethodId> stack;
  std::unordered_map<MethodId, MethodId> rep;
  int counter = 0;

  std::function<void(MethodId)> strongconnect = [&](MethodId v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (MethodId w : adj.at(v)) {
      if (!index.contains(w)) {
        strongconnect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<MethodId> members;
      MethodId w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        members.push_back(w);
      } while (w != v);
      const MethodId smallest = *std::min_element(members.begin(), members.end());
      for (MethodId m : members) rep[m] = smallest;
    }
  };
  for (const auto& m : g.methods) {
    if (!index.contains(m.id)) strongconnect(m.id);
  }
  return rep;
}

CallGraph collapse_recursion(const CallGraph& g) {
  const auto rep = scc_representatives(g);

  CallGraph out;
  std::map<MethodId, std::vector<const MethodNode*>> members;
  for (const auto& m : g.methods) members[rep.at(m.id)].push_back(&m);

  for (const auto& m : g.methods) {
    const MethodId r = rep.at(m.id);
    if (r != m.id) continue;
    auto group = members.at(r);
    std::sort(group.begin(), group.end(),
              [](const MethodNode* a, const MethodNode* b) { return a->id < b->id; });
    MethodNode merged = m;
    if (group.size() > 1) {
      merged.name.clear();
      merged.work_units = 0.0;
      for (const MethodNode* part : group) {
        if (!merged.name.empty()) merged.name += '+';
        merged.name += part->name;
        merged.work_units += part->work_units;
        merged.pinned_local = merged.pinned_local || part->pinned_local;
      }
    }
    out.methods.push_back(std::move(merged));
  }

  std::set<std::pair<MethodId, MethodId>> seen;
  for (const auto& c : g.calls) {
    const MethodId a = rep.at(c.caller);
    const MethodId b = rep.at(c.callee);
    if (a == b || !seen.insert({a, b}).second) continue;
    out.calls.push_back({a, b});
  }
  out.entry = rep.at(g.entry);
  out.exit = rep.at(g.exit);
  return out;
}

std::vector<MethodId> execution_order(const CallGraph& g) {
  validate(g);
  if (auto cycle = find_cycle(g)) {
    std::string msg = "call graph is cyclic: ";
    for (std::size_t i = 0; i < cycle->size(); ++i) {
      if (i) msg += " -> ";
      msg += describe(g, (*cycle)[i]);
    }
    throw GraphError(msg);
  }
  const Adjacency adj = children_of(g);
  if (!adj.at(g.exit).empty())
    throw GraphError("exit method " + describe(g, g.exit) + " has outgoing calls");

  // Reverse postorder, children visited in reverse declared order: preorder on
  // trees, a topological order on DAGs.
  std::set<MethodId> visited;
  std::vector<MethodId> post;
  std::function<void(MethodId)> dfs = [&](MethodId v) {
    visited.insert(v);
    const auto& kids = adj.at(v);
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) {
      if (!visited.contains(*it)) dfs(*it);
    }
    post.push_back(v);
  };
  dfs(g.entry);

  for (const auto& m : g.methods) {
    if (!visited.contains(m.id))
      throw GraphError("method " + describe(g, m.id) + " unreachable from entry");
  }
  std::vector<MethodId> order(post.rbegin(), post.rend());
  // exit is a sink, so moving it last keeps the order topological
  auto it = std::find(order.begin(), order.end(), g.exit);
  std::rotate(it, it + 1, order.end());
  return order;
}

// ---------------------------------------------------------------------------

char placement_code(Placement p) { return p == Placement::Local ? 'L' : 'R'; }

DualPlacementGraph::DualPlacementGraph(std::vector<DualNode> nodes, std::vector<DualEdge> edges,
                                       NodeId start, NodeId end)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), start_(start), end_(end) {
  const std::size_t n = nodes_.size();
  if (start_ >= n || end_ >= n || start_ == end_)
    throw GraphError("decision graph: start/end out of range");
  if (nodes_[start_].kind != NodeKind::Start) throw GraphError("decision graph: start node kind");
  if (nodes_[end_].kind != NodeKind::End) throw GraphError("decision graph: end node kind");

  out_.assign(n, {});
  std::set<std::pair<NodeId, NodeId>> seen;
  for (EdgeId e = 0; e < edges_.size(); ++e) {
    const auto& ed = edges_[e];
    if (ed.from >= n || ed.to >= n) throw GraphError("decision graph: edge endpoint out of range");
    if (ed.from == ed.to) throw GraphError("decision graph: self-loop at " + token(ed.from));
    if (ed.from == end_) throw GraphError("decision graph: edge leaves end");
    if (ed.to == start_) throw GraphError("decision graph: edge enters start");
    if (!seen.insert({ed.from, ed.to}).second)
      throw GraphError("decision graph: duplicate edge " + token(ed.from) + " -> " + token(ed.to));
    if (!ed.measured && ed.weight != ObjectiveVector{})
      throw GraphError("decision graph: unmeasured edge with non-zero weight");
    if (ed.weight.time_ms < 0 || ed.weight.cpu_units < 0 || !std::isfinite(ed.weight.time_ms) ||
        !std::isfinite(ed.weight.cpu_units))
      throw GraphError("decision graph: edge weight must be finite and >= 0");
    out_[ed.from].push_back(e);
  }

  // Iterative DFS from start: cycle detection, dead ends, reverse postorder.
  enum : std::uint8_t { White, Grey, Black };
  std::vector<std::uint8_t> mark(n, White);
  std::vector<NodeId> post;
  std::vector<std::pair<NodeId, std::size_t>> stack{{start_, 0}};
  mark[start_] = Grey;
  while (!stack.empty()) {
    auto& [v, next] = stack.back();
    if (next < out_[v].size()) {
      const NodeId w = edges_[out_[v][next++]].to;
      if (mark[w] == Grey) throw GraphError("decision graph: cycle through " + token(w));
      if (mark[w] == White) {
        mark[w] = Grey;
        stack.emplace_back(w, 0);
      }
    } else {
      if (out_[v].empty() && v != end_) throw GraphError("decision graph: dead end at " + token(v));
      mark[v] = Black;
      post.push_back(v);
      stack.pop_back();
    }
  }
  if (mark[end_] != Black) throw GraphError("decision graph: end unreachable from start");
  topo_.assign(post.rbegin(), post.rend());
}

std::optional<EdgeId> DualPlacementGraph::find_edge(NodeId from, NodeId to) const {
  if (from >= out_.size()) return std::nullopt;
  for (EdgeId e : out_[from]) {
    if (edges_[e].to == to) return e;
  }
  return std::nullopt;
}

std::optional<NodeId> DualPlacementGraph::find_node(MethodId method, Placement placement) const {
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    const auto& nd = nodes_[i];
    if (nd.kind == NodeKind::Method && nd.method == method && nd.placement == placement) return i;
  }
  return std::nullopt;
}

void DualPlacementGraph::set_weight(EdgeId e, ObjectiveVector w, bool measured) {
  auto& ed = edges_.at(e);
  ed.weight = w;
  ed.measured = measured;
}

bool DualPlacementGraph::all_measured() const { return unmeasured_count() == 0; }

std::size_t DualPlacementGraph::unmeasured_count() const {
  return static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(), [](const DualEdge& e) { return !e.measured; }));
}

std::string DualPlacementGraph::token(NodeId n) const {
  const auto& nd = nodes_.at(n);
  switch (nd.kind) {
    case NodeKind::Start:
      return "start";
    case NodeKind::End:
      return "end";
    case NodeKind::Method:
      break;
  }
  return std::to_string(nd.method) + '@' + placement_code(nd.placement);
}

DualPlacementGraph transform(const CallGraph& g) {
  const std::vector<MethodId> order = execution_order(g);

  std::vector<DualNode> nodes{{NodeKind::Start, -1, Placement::Local}};
  std::vector<DualEdge> edges;
  std::vector<NodeId> prev{0};
  for (MethodId id : order) {
    std::vector<NodeId> layer{nodes.size()};
    nodes.push_back({NodeKind::Method, id, Placement::Local});
    if (!g.find(id)->pinned_local) {
      layer.push_back(nodes.size());
      nodes.push_back({NodeKind::Method, id, Placement::Remote});
    }
    for (NodeId a : prev)
      for (NodeId b : layer) edges.push_back({a, b, {}, false});
    prev = std::move(layer);
  }
  const NodeId end = nodes.size();
  nodes.push_back({NodeKind::End, -1, Placement::Local});
  for (NodeId a : prev) edges.push_back({a, end, {}, false});
  return DualPlacementGraph(std::move(nodes), std::move(edges), 0, end);
}

// ---------------------------------------------------------------------------

std::vector<EdgeId> path_edges(const DualPlacementGraph& d, std::span<const NodeId> nodes) {
  if (nodes.size() < 2 || nodes.front() != d.start() || nodes.back() != d.end())
    throw GraphError("path must run from start to end");
  std::vector<EdgeId> out;
  out.reserve(nodes.size() - 1);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    auto e = d.find_edge(nodes[i], nodes[i + 1]);
    if (!e) throw GraphError("no edge " + d.token(nodes[i]) + " -> " + d.token(nodes[i + 1]));
    out.push_back(*e);
  }
  return out;
}

ObjectiveVector path_cost(const DualPlacementGraph& d, std::span<const NodeId> nodes) {
  ObjectiveVector c;
  for (EdgeId e : path_edges(d, nodes)) c += d.edge(e).weight;
  return c;
}

std::vector<std::string> path_tokens(const DualPlacementGraph& d, const PathSolution& p) {
  std::vector<std::string> out;
  for (NodeId n : p.nodes) {
    if (d.node(n).kind == NodeKind::Method) out.push_back(d.token(n));
  }
  return out;
}

std::string token_string(const DualPlacementGraph& d, const PathSolution& p) {
  std::string s;
  for (const auto& t : path_tokens(d, p)) {
    if (!s.empty()) s += ' ';
    s += t;
  }
  return s;
}

std::size_t remote_count(const DualPlacementGraph& d, const PathSolution& p) {
  return static_cast<std::size_t>(std::count_if(p.nodes.begin(), p.nodes.end(), [&](NodeId n) {
    const auto& nd = d.node(n);
    return nd.kind == NodeKind::Method && nd.placement == Placement::Remote;
  }));
}

std::uint64_t count_paths(const DualPlacementGraph& d) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint64_t> count(d.node_count(), 0);
  count[d.end()] = 1;
  const auto topo = d.topological_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    if (*it == d.end()) continue;
    std::uint64_t total = 0;
    for (EdgeId e : d.out_edges(*it)) {
      const std::uint64_t c = count[d.edge(e).to];
      total = (kMax - total < c) ? kMax : total + c;
    }
    count[*it] = total;
  }
  return count[d.start()];
}

std::vector<PathSolution> enumerate_paths(const DualPlacementGraph& d, std::uint64_t bound) {
  const std::uint64_t total = count_paths(d);
  if (total > bound) {
    throw SolverError("path count " + std::to_string(total) + " exceeds enumeration bound " +
                      std::to_string(bound) + "; use the ACO solver");
  }
  std::vector<PathSolution> out;
  out.reserve(static_cast<std::size_t>(total));

  std::vector<NodeId> path{d.start()};
  std::vector<ObjectiveVector> prefix{{}};
  std::vector<std::size_t> next{0};
  while (!path.empty()) {
    const NodeId v = path.back();
    if (v == d.end()) {
      out.push_back({path, prefix.back()});
    } else if (const auto outs = d.out_edges(v); next.back() < outs.size()) {
      const DualEdge& e = d.edge(outs[next.back()++]);
      path.push_back(e.to);
      prefix.push_back(prefix.back() + e.weight);
      next.push_back(0);
      continue;
    }
    path.pop_back();
    prefix.pop_back();
    next.pop_back();
  }
  return out;
}

}  // namespace offload
