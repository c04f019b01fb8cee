#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "offload/callgraph.hpp"

namespace offload {

// Call-graph documents:
//   {"methods":[{"id","name","work","bytes_in","bytes_out","pinned"}...],
//    "calls":[[caller,callee]...], "entry", "exit"}
// Unknown fields are rejected. Parsing also runs validate(); failures surface
// as ParseError naming the offending field.
CallGraph callgraph_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CallGraph& g);
CallGraph load_callgraph(const std::filesystem::path& path);
void save_callgraph(const CallGraph& g, const std::filesystem::path& path);

// Weighted decision-graph documents:
//   {"nodes":[{"id","kind":"start"|"method"|"end","method","placement":"L"|"R"}...],
//    "edges":[{"from","to","time","cpu","measured"}...], "start", "end"}
// Node ids must equal their array position.
DualPlacementGraph dualgraph_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DualPlacementGraph& d);

// True when the document looks like a decision graph rather than a call graph.
bool is_dualgraph_document(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace offload
