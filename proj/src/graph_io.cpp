#include "offload/graph_io.hpp"

#include <fstream>
#include <initializer_list>
#include <string_view>

#include "offload/error.hpp"

namespace offload {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (auto a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ParseError(where + "." + it.key() + ": unknown field");
  }
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + "." + key + ": missing field");
  return *it;
}

long long get_int(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number_integer()) throw ParseError(where + "." + key + ": expected an integer");
  return v.get<long long>();
}

std::uint64_t get_count(const json& obj, const char* key, const std::string& where) {
  const long long v = get_int(obj, key, where);
  if (v < 0) throw ParseError(where + "." + key + ": must be >= 0");
  return static_cast<std::uint64_t>(v);
}

double get_nonneg(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number() || v.get<double>() < 0.0)
    throw ParseError(where + "." + key + ": expected a non-negative number");
  return v.get<double>();
}

bool get_bool(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_boolean()) throw ParseError(where + "." + key + ": expected a boolean");
  return v.get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_string()) throw ParseError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

const json& get_array(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_array()) throw ParseError(where + "." + key + ": expected an array");
  return v;
}

}  // namespace

CallGraph callgraph_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("graph: expected an object");
  reject_unknown(j, {"methods", "calls", "entry", "exit"}, "graph");

  CallGraph g;
  const json& methods = get_array(j, "methods", "graph");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const std::string where = "methods[" + std::to_string(i) + "]";
    const json& m = methods[i];
    if (!m.is_object()) throw ParseError(where + ": expected an object");
    reject_unknown(m, {"id", "name", "work", "bytes_in", "bytes_out", "pinned"}, where);
    g.methods.push_back({static_cast<MethodId>(get_int(m, "id", where)),
                         get_string(m, "name", where), get_nonneg(m, "work", where),
                         get_count(m, "bytes_in", where), get_count(m, "bytes_out", where),
                         get_bool(m, "pinned", where)});
  }
  const json& calls = get_array(j, "calls", "graph");
  for (std::size_t i = 0; i < calls.size(); ++i) {
    const json& c = calls[i];
    if (!c.is_array() || c.size() != 2 || !c[0].is_number_integer() || !c[1].is_number_integer())
      throw ParseError("calls[" + std::to_string(i) + "]: expected [caller, callee]");
    g.calls.push_back({c[0].get<MethodId>(), c[1].get<MethodId>()});
  }
  g.entry = static_cast<MethodId>(get_int(j, "entry", "graph"));
  g.exit = static_cast<MethodId>(get_int(j, "exit", "graph"));
  try {
    validate(g);
  } catch (const GraphError& e) {
    throw ParseError(e.what());
  }
  return g;
}

json to_json(const CallGraph& g) {
  json methods = json::array();
  for (const auto& m : g.methods) {
    methods.push_back({{"id", m.id},
                       {"name", m.name},
                       {"work", m.work_units},
                       {"bytes_in", m.bytes_in},
                       {"bytes_out", m.bytes_out},
                       {"pinned", m.pinned_local}});
  }
  json calls = json::array();
  for (const auto& c : g.calls) calls.push_back({c.caller, c.callee});
  return {{"methods", methods}, {"calls", calls}, {"entry", g.entry}, {"exit", g.exit}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

CallGraph load_callgraph(const std::filesystem::path& path) {
  try {
    return callgraph_from_json(read_json_file(path));
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    if (msg.starts_with(path.string())) throw;
    throw ParseError(path.string() + ": " + msg);
  }
}

void save_callgraph(const CallGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path.string() + ": cannot write");
  out << to_json(g).dump(2) << '\n';
}

bool is_dualgraph_document(const json& j) { return j.is_object() && j.contains("nodes"); }

DualPlacementGraph dualgraph_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("decision graph: expected an object");
  reject_unknown(j, {"nodes", "edges", "start", "end"}, "decision graph");

  std::vector<DualNode> nodes;
  const json& jn = get_array(j, "nodes", "decision graph");
  for (std::size_t i = 0; i < jn.size(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    const json& n = jn[i];
    if (!n.is_object()) throw ParseError(where + ": expected an object");
    reject_unknown(n, {"id", "kind", "method", "placement"}, where);
    if (get_int(n, "id", where) != static_cast<long long>(i))
      throw ParseError(where + ".id: must equal array position " + std::to_string(i));
    const std::string kind = n.contains("kind") ? get_string(n, "kind", where) : "method";
    if (kind == "start") {
      nodes.push_back({NodeKind::Start, -1, Placement::Local});
    } else if (kind == "end") {
      nodes.push_back({NodeKind::End, -1, Placement::Local});
    } else if (kind == "method") {
      const std::string p = get_string(n, "placement", where);
      if (p != "L" && p != "R") throw ParseError(where + ".placement: expected \"L\" or \"R\"");
      nodes.push_back({NodeKind::Method, static_cast<MethodId>(get_int(n, "method", where)),
                       p == "L" ? Placement::Local : Placement::Remote});
    } else {
      throw ParseError(where + ".kind: expected start, method or end");
    }
  }

  std::vector<DualEdge> edges;
  const json& je = get_array(j, "edges", "decision graph");
  for (std::size_t i = 0; i < je.size(); ++i) {
    const std::string where = "edges[" + std::to_string(i) + "]";
    const json& e = je[i];
    if (!e.is_object()) throw ParseError(where + ": expected an object");
    reject_unknown(e, {"from", "to", "time", "cpu", "measured"}, where);
    DualEdge edge;
    edge.from = static_cast<NodeId>(get_count(e, "from", where));
    edge.to = static_cast<NodeId>(get_count(e, "to", where));
    edge.weight = {get_nonneg(e, "time", where), get_nonneg(e, "cpu", where)};
    edge.measured = get_bool(e, "measured", where);
    edges.push_back(edge);
  }
  try {
    return DualPlacementGraph(std::move(nodes), std::move(edges),
                              static_cast<NodeId>(get_count(j, "start", "decision graph")),
                              static_cast<NodeId>(get_count(j, "end", "decision graph")));
  } catch (const GraphError& e) {
    throw ParseError(e.what());
  }
}

json to_json(const DualPlacementGraph& d) {
  json nodes = json::array();
  for (NodeId i = 0; i < d.node_count(); ++i) {
    const DualNode& n = d.node(i);
    switch (n.kind) {
      case NodeKind::Start:
        nodes.push_back({{"id", i}, {"kind", "start"}});
        break;
      case NodeKind::End:
        nodes.push_back({{"id", i}, {"kind", "end"}});
        break;
      case NodeKind::Method:
        nodes.push_back({{"id", i},
                         {"kind", "method"},
                         {"method", n.method},
                         {"placement", std::string(1, placement_code(n.placement))}});
        break;
    }
  }
  json edges = json::array();
  for (const auto& e : d.edges()) {
    edges.push_back({{"from", e.from},
                     {"to", e.to},
                     {"time", e.weight.time_ms},
                     {"cpu", e.weight.cpu_units},
                     {"measured", e.measured}});
  }
  return {{"nodes", nodes}, {"edges", edges}, {"start", d.start()}, {"end", d.end()}};
}

}  // namespace offload
