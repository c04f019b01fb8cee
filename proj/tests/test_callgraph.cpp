#include <gtest/gtest.h>

#include <filesystem>

#include "offload/callgraph.hpp"
#include "offload/error.hpp"
#include "offload/graph_io.hpp"
#include "oracles.hpp"

using namespace offload;

namespace {

MethodNode m(MethodId id, bool pinned = false, double work = 1.0) {
  return {id, "m" + std::to_string(id), work, 8, 8, pinned};
}

CallGraph chain(int n) {
  CallGraph g;
  for (int i = 0; i < n; ++i) g.methods.push_back(m(i, i == 0));
  for (int i = 0; i + 1 < n; ++i) g.calls.push_back({i, i + 1});
  g.entry = 0;
  g.exit = n - 1;
  return g;
}

}  // namespace

TEST(Transform, OffloadableMethodIsSplit) {
  const auto d = transform(chain(2));
  ASSERT_TRUE(d.find_node(1, Placement::Local));
  ASSERT_TRUE(d.find_node(1, Placement::Remote));
  EXPECT_EQ(count_paths(d), 2u);
  EXPECT_EQ(enumerate_paths(d).size(), 2u);
}

TEST(Transform, SinglePinnedMethodHasOnePath) {
  const auto d = transform(chain(1));
  EXPECT_FALSE(d.find_node(0, Placement::Remote));
  EXPECT_EQ(count_paths(d), 1u);
}

TEST(Transform, PinnedMethodsHaveNoRemoteCopy) {
  CallGraph g = chain(5);
  g.methods[2].pinned_local = true;
  const auto d = transform(g);
  for (const auto& n : d.nodes())
    if (n.kind == NodeKind::Method && n.method == 2) EXPECT_EQ(n.placement, Placement::Local);
  EXPECT_EQ(count_paths(d), 8u);
}

TEST(Transform, WeightsStartUnmeasuredAtZero) {
  const auto d = transform(chain(4));
  for (const auto& e : d.edges()) {
    EXPECT_FALSE(e.measured);
    EXPECT_EQ(e.weight, (ObjectiveVector{0, 0}));
  }
}

TEST(Transform, EveryPlacementPairHasExactlyOneEdge) {
  const auto d = transform(chain(4));
  for (int a = 1; a < 3; ++a)
    for (auto p : {Placement::Local, Placement::Remote})
      for (auto q : {Placement::Local, Placement::Remote}) {
        int hits = 0;
        for (const auto& e : d.edges()) {
          const auto& f = d.node(e.from);
          const auto& t = d.node(e.to);
          if (f.method == a && f.placement == p && t.method == a + 1 && t.placement == q) ++hits;
        }
        EXPECT_EQ(hits, 1);
      }
}

TEST(Transform, IsDeterministic) {
  Rng r1 = ant_stream(5, 0, 0), r2 = ant_stream(5, 0, 0);
  EXPECT_EQ(transform(random_callgraph(r1, 9)), transform(random_callgraph(r2, 9)));
}

TEST(Transform, RejectsCycleWithDiagnostic) {
  CallGraph g = chain(3);
  g.calls.push_back({2, 1});
  g.exit = 0;
  try {
    transform(g);
    FAIL() << "expected GraphError";
  } catch (const GraphError& e) {
    EXPECT_NE(std::string(e.what()).find("1 (m1) -> 2 (m2) -> 1 (m1)"), std::string::npos) << e.what();
  }
}

TEST(Transform, BranchingChildrenSerializedInDeclaredOrder) {
  CallGraph g;
  g.methods = {m(0, true), m(1), m(2), m(3), m(4)};
  g.calls = {{0, 1}, {1, 2}, {0, 3}, {0, 4}};
  g.entry = 0;
  g.exit = 4;
  EXPECT_EQ(execution_order(g), (std::vector<MethodId>{0, 1, 2, 3, 4}));
}

TEST(Recursion, CollapseMergesComponent) {
  CallGraph g;
  g.methods = {m(0, true, 2), m(1, false, 10), m(2, false, 5), m(3, false, 1)};
  g.calls = {{0, 1}, {1, 2}, {2, 1}, {0, 3}};
  g.entry = 0;
  g.exit = 3;
  ASSERT_TRUE(find_cycle(g));
  const CallGraph c = collapse_recursion(g);
  EXPECT_FALSE(find_cycle(c));
  ASSERT_EQ(c.methods.size(), 3u);
  const MethodNode* merged = c.find(1);
  ASSERT_NE(merged, nullptr);
  EXPECT_DOUBLE_EQ(merged->work_units, 15.0);
  EXPECT_EQ(merged->name, "m1+m2");
  EXPECT_EQ(count_paths(transform(c)), 4u);
}

TEST(Validate, UnknownCallee) {
  CallGraph g = chain(2);
  g.calls.push_back({0, 99});
  try {
    validate(g);
    FAIL();
  } catch (const GraphError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown callee 99"), std::string::npos);
  }
}

TEST(Validate, RejectsDuplicateIdsSelfLoopsAndUnpinnedEntry) {
  CallGraph dup = chain(2);
  dup.methods.push_back(m(1));
  EXPECT_THROW(validate(dup), GraphError);

  CallGraph loop = chain(2);
  loop.calls.push_back({1, 1});
  EXPECT_THROW(validate(loop), GraphError);

  CallGraph entry = chain(2);
  entry.methods[0].pinned_local = false;
  EXPECT_THROW(validate(entry), GraphError);
}

TEST(GraphIo, RoundTrip) {
  Rng rng = ant_stream(11, 0, 0);
  for (int i = 0; i < 20; ++i) {
    const CallGraph g = random_callgraph(rng, 2 + i % 9);
    EXPECT_EQ(callgraph_from_json(to_json(g)), g);
  }
  const auto path = std::filesystem::temp_directory_path() / "offload_roundtrip.json";
  const CallGraph g = chain(4);
  save_callgraph(g, path);
  EXPECT_EQ(load_callgraph(path), g);
  std::filesystem::remove(path);
}

TEST(GraphIo, UnknownCalleeInFile) {
  auto j = to_json(chain(2));
  j["calls"].push_back({0, 99});
  try {
    callgraph_from_json(j);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown callee 99"), std::string::npos) << e.what();
  }
}

TEST(GraphIo, RejectsUnknownAndMissingFields) {
  auto extra = to_json(chain(2));
  extra["methods"][0]["color"] = "red";
  EXPECT_THROW(callgraph_from_json(extra), ParseError);
  auto missing = to_json(chain(2));
  missing["methods"][1].erase("bytes_in");
  EXPECT_THROW(callgraph_from_json(missing), ParseError);
  EXPECT_THROW(callgraph_from_json(nlohmann::json::array()), ParseError);
}

TEST(GraphIo, FibFixture) {
  const CallGraph g = load_callgraph(std::string(OFFLOAD_DATA_DIR) + "/fib.json");
  EXPECT_EQ(g.methods.size(), 2u);
  EXPECT_TRUE(g.find(g.entry)->pinned_local);
  const auto d = transform(g);
  EXPECT_EQ(d.unmeasured_count(), 5u);
}

TEST(GraphIo, DualGraphRoundTrip) {
  const auto d = oracle::random_weighted(3, 7);
  EXPECT_EQ(dualgraph_from_json(to_json(d)), d);
}

TEST(Paths, TwoFrontFixtureHasFourPaths) {
  const auto d = dualgraph_from_json(read_json_file(std::string(OFFLOAD_DATA_DIR) + "/two_front.json"));
  const auto paths = enumerate_paths(d);
  ASSERT_EQ(paths.size(), 4u);
  std::multiset<std::pair<double, double>> costs;
  for (const auto& p : paths) costs.emplace(p.cost.time_ms, p.cost.cpu_units);
  EXPECT_EQ(costs, (std::multiset<std::pair<double, double>>{{4, 5}, {5, 5}, {6, 4}, {6, 6}}));
}

TEST(Paths, EnumerationRefusesBeyondBound) {
  const auto d = transform(chain(12));
  EXPECT_THROW(enumerate_paths(d, 100), SolverError);
  EXPECT_EQ(enumerate_paths(d).size(), 2048u);
}

TEST(Paths, PathEdgesRejectsNonPaths) {
  const auto d = transform(chain(3));
  EXPECT_THROW(path_edges(d, std::vector<NodeId>{d.start()}), GraphError);
  EXPECT_THROW(path_edges(d, std::vector<NodeId>{d.start(), d.end()}), GraphError);
}

// Random DAGs: the library enumerator agrees with a naive recursive DFS, the
// count matches the duplication formula, and every path cost is its edge sum.
TEST(PathsProperty, EnumerationMatchesNaiveDfs) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng = ant_stream(seed, 1, 2);
    const CallGraph g = random_callgraph(rng, 1 + static_cast<int>(seed % 10));
    DualPlacementGraph d = transform(g);
    assign_random_weights(d, rng);

    const auto lib = enumerate_paths(d);
    const auto naive = oracle::all_paths(d);
    ASSERT_EQ(lib.size(), naive.size()) << "seed " << seed;
    ASSERT_EQ(count_paths(d), naive.size());
    ASSERT_EQ(lib.size(), oracle::expected_path_count(g));

    std::set<std::vector<NodeId>> a, b;
    for (const auto& p : lib) {
      a.insert(p.nodes);
      ObjectiveVector sum;
      for (EdgeId e : path_edges(d, p.nodes)) sum += d.edge(e).weight;
      EXPECT_EQ(sum, p.cost);
    }
    for (const auto& p : naive) b.insert(p.nodes);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.size(), lib.size()) << "duplicate path";
  }
}

TEST(DualGraph, ConstructorRejectsMalformedGraphs) {
  std::vector<DualNode> nodes{{NodeKind::Start, -1, Placement::Local},
                              {NodeKind::Method, 0, Placement::Local},
                              {NodeKind::End, -1, Placement::Local}};
  EXPECT_NO_THROW(DualPlacementGraph(nodes, {{0, 1, {}, false}, {1, 2, {}, false}}, 0, 2));
  // dead end
  EXPECT_THROW(DualPlacementGraph(nodes, {{0, 1, {}, false}}, 0, 2), GraphError);
  // unmeasured edge with a weight
  EXPECT_THROW(DualPlacementGraph(nodes, {{0, 1, {1, 0}, false}, {1, 2, {}, false}}, 0, 2), GraphError);
  // cycle
  nodes.push_back({NodeKind::Method, 1, Placement::Local});
  EXPECT_THROW(DualPlacementGraph(nodes,
                                  {{0, 1, {}, false}, {1, 3, {}, false}, {3, 1, {}, false},
                                   {3, 2, {}, false}},
                                  0, 2),
               GraphError);
}
