#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "offload/cost_sim.hpp"
#include "offload/decision_engine.hpp"
#include "offload/error.hpp"
#include "offload/graph_io.hpp"
#include "oracles.hpp"

using namespace offload;

namespace {

CallGraph chain(int n) {
  CallGraph g;
  for (int i = 0; i < n; ++i) g.methods.push_back({i, "m" + std::to_string(i), 10.0 * (i + 1), 100, 100, i == 0});
  for (int i = 0; i + 1 < n; ++i) g.calls.push_back({i, i + 1});
  g.entry = 0;
  g.exit = n - 1;
  return g;
}

ExecutionTrace trace_for(const DualPlacementGraph& d, const PathSolution& p, ObjectiveVector each) {
  ExecutionTrace t;
  for (const auto& pm : plan_placements(d, p)) {
    t.tokens.push_back(pm.token());
    t.per_method_costs[pm.method] = each;
    t.surcharges.push_back({});
    t.total += each;
  }
  return t;
}

Executor sim_executor(const CallGraph& g, SimConfig cfg) {
  return [g, cfg](const DualPlacementGraph& d, const PathSolution& p, int run) {
    Rng rng = ant_stream(99, 0, static_cast<std::uint64_t>(run));
    return simulate(plan_placements(d, p), g, cfg, rng);
  };
}

}  // namespace

TEST(Context, Classification) {
  EXPECT_EQ(classify_network(50000), NetworkClass::Good);
  EXPECT_EQ(classify_network(6250), NetworkClass::Good);  // exactly 50 Mbps
  EXPECT_EQ(classify_network(5000), NetworkClass::Medium);
  EXPECT_EQ(classify_network(625), NetworkClass::Medium);
  EXPECT_EQ(classify_network(500), NetworkClass::Poor);
  EXPECT_EQ(input_bucket(0.5), 0);
  EXPECT_EQ(input_bucket(1), 0);
  EXPECT_EQ(input_bucket(1024), 10);
  EXPECT_EQ(input_bucket(1500), 10);
  EXPECT_EQ(ContextKey::make("det", 4, 5000).to_string(), "det|2|medium");
}

TEST(Cache, InvalidationPeriod) {
  DecisionCache c(3);
  const auto key = ContextKey::make("app", 8, 5000);
  c.store(key, {{0, 1}, {}}, "1@L", 10);
  EXPECT_TRUE(c.lookup(key, 10));
  EXPECT_TRUE(c.lookup(key, 12));
  EXPECT_FALSE(c.peek(key, 13));
  EXPECT_FALSE(c.lookup(key, 13));
  EXPECT_EQ(c.size(), 0u);

  DecisionCache forever;
  forever.store(key, {{0, 1}, {}}, "1@L", 0);
  EXPECT_TRUE(forever.lookup(key, 1'000'000));
  EXPECT_FALSE(forever.lookup(ContextKey::make("app", 64, 5000), 0));
}

TEST(Engine, InitialGraphIsUnmeasured) {
  DecisionEngine e(chain(4));
  EXPECT_EQ(e.graph().unmeasured_count(), e.graph().edge_count());
  for (const auto& ed : e.graph().edges()) EXPECT_EQ(ed.weight, ObjectiveVector{});
  EXPECT_EQ(e.run_counter(), 0);
  EXPECT_EQ(e.cache().size(), 0u);
}

TEST(Engine, PinnedOnlyAppHasOnePlan) {
  CallGraph g = chain(3);
  for (auto& m : g.methods) m.pinned_local = true;
  DecisionEngine e(g);
  EXPECT_EQ(count_paths(e.graph()), 1u);
  const auto d = e.decide(ContextKey::make("p", 1, 5000));
  EXPECT_EQ(token_string(e.graph(), d.plan), "0@L 1@L 2@L");
}

TEST(Engine, FreshDecisionIsSeededAndValid) {
  const auto key = ContextKey::make("a", 16, 5000);
  EngineConfig cfg;
  cfg.seed = 42;
  DecisionEngine a(chain(6), cfg), b(chain(6), cfg);
  const auto da = a.decide(key);
  EXPECT_EQ(da.source, DecisionSource::Random);
  EXPECT_NO_THROW(path_edges(a.graph(), da.plan.nodes));
  EXPECT_EQ(da.plan, b.decide(key).plan);
}

TEST(Exploration, UniformOverPathsOnFreshGraph) {
  const auto d = transform(chain(4));  // 8 paths
  std::map<std::vector<NodeId>, int> hits;
  Rng rng = ant_stream(5, 0, 0);
  const int n = 8000;
  for (int i = 0; i < n; ++i) ++hits[exploration_path(d, rng).nodes];
  ASSERT_EQ(hits.size(), 8u);
  double chi2 = 0.0;
  for (const auto& [p, h] : hits) chi2 += (h - n / 8.0) * (h - n / 8.0) / (n / 8.0);
  EXPECT_LT(chi2, 24.32);  // 0.001, 7 dof
}

TEST(Exploration, PrefersUnmeasuredEdges) {
  DualPlacementGraph d = transform(chain(3));
  const NodeId l1 = *d.find_node(1, Placement::Local);
  const NodeId l2 = *d.find_node(2, Placement::Local);
  const NodeId r2 = *d.find_node(2, Placement::Remote);
  for (EdgeId e = 0; e < d.edge_count(); ++e) {
    const auto& ed = d.edge(e);
    if (ed.from == l1 || ed.to == l1 || ed.from == l2 || ed.to == l2 || ed.from == r2)
      d.set_weight(e, {1, 1});
  }
  Rng rng = ant_stream(1, 0, 0);
  for (int i = 0; i < 50; ++i) {
    const auto p = exploration_path(d, rng);
    std::size_t fresh = 0;
    for (EdgeId e : path_edges(d, p.nodes)) fresh += d.edge(e).measured ? 0 : 1;
    EXPECT_EQ(fresh, 3u);  // start->0, 0->1@R, 1@R->2@R
  }
}

TEST(Observe, SetsMeasuredWeights) {
  DecisionEngine e(chain(2));
  const auto d = e.decide(ContextKey::make("a", 1, 5000));
  e.observe(trace_for(e.graph(), d.plan, {12.5, 7.0}));
  EXPECT_EQ(e.run_counter(), 1);
  const auto edges = path_edges(e.graph(), d.plan.nodes);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    EXPECT_TRUE(e.graph().edge(edges[i]).measured);
    EXPECT_EQ(e.graph().edge(edges[i]).weight, (ObjectiveVector{12.5, 7.0}));
  }
  EXPECT_EQ(e.graph().edge(edges.back()).weight, ObjectiveVector{});
  EXPECT_TRUE(e.graph().edge(edges.back()).measured);
}

TEST(Observe, EmptyTraceOnlyAdvancesCounter) {
  DecisionEngine e(chain(3));
  const auto before = e.graph();
  e.observe({});
  EXPECT_EQ(e.run_counter(), 1);
  EXPECT_EQ(e.graph(), before);
}

TEST(Observe, RejectsBadTokenWithoutSideEffects) {
  DecisionEngine e(chain(3));
  const auto before = e.graph();
  ExecutionTrace t;
  t.tokens = {"0@L", "2@L"};
  t.per_method_costs = {{0, {1, 1}}, {2, {1, 1}}};
  try {
    e.observe(t);
    FAIL();
  } catch (const TraceError& err) {
    EXPECT_NE(std::string(err.what()).find("token 1 '2@L'"), std::string::npos) << err.what();
  }
  EXPECT_EQ(e.graph(), before);
  EXPECT_EQ(e.run_counter(), 0);
}

TEST(Observe, EmaBlendsAndFactorOneOverwrites) {
  EngineConfig cfg;
  cfg.ema_factor = 0.5;
  DecisionEngine e(chain(2), cfg);
  const auto d = e.decide(ContextKey::make("a", 1, 5000));
  e.observe(trace_for(e.graph(), d.plan, {10, 10}));
  e.observe(trace_for(e.graph(), d.plan, {20, 0}));
  const EdgeId first = path_edges(e.graph(), d.plan.nodes).front();
  EXPECT_EQ(e.graph().edge(first).weight, (ObjectiveVector{15, 5}));
}

// A noiseless simulator produces identical traces; after the first
// observation the weights must not move.
TEST(ObserveProperty, EmaFixedPoint) {
  const CallGraph g = chain(5);
  SimConfig cfg;
  cfg.network.jitter = 0.0;
  for (double ema : {1.0, 0.3}) {
    EngineConfig ec;
    ec.ema_factor = ema;
    DecisionEngine e(g, ec);
    const auto d = e.decide(ContextKey::make("a", 1, 5000));
    auto exec = sim_executor(g, cfg);
    e.observe(exec(e.graph(), d.plan, 0));
    const auto after_first = e.graph();
    for (int i = 1; i < 5; ++i) e.observe(exec(e.graph(), d.plan, i));
    EXPECT_EQ(e.graph(), after_first);
  }
}

TEST(ObserveProperty, PathCostEqualsTraceTotal) {
  const CallGraph g = chain(6);
  DecisionEngine e(g);
  auto exec = sim_executor(g, SimConfig{});
  for (int i = 0; i < 10; ++i) {
    const auto d = e.decide(ContextKey::make("a", 1, 5000));
    const auto t = exec(e.graph(), d.plan, i);
    e.observe(t);
    const auto c = path_cost(e.graph(), d.plan.nodes);
    EXPECT_NEAR(c.time_ms, t.total.time_ms, 1e-9);
    EXPECT_NEAR(c.cpu_units, t.total.cpu_units, 1e-9);
  }
}

TEST(SelectPlan, TwoFrontNormalizedMinimum) {
  const auto d = dualgraph_from_json(read_json_file(std::string(OFFLOAD_DATA_DIR) + "/two_front.json"));
  const auto front = pareto_front(d);
  // Two points normalize to (0,1) and (1,0): a tie at w = 0.5, broken toward
  // fewer remote nodes.
  EXPECT_EQ(select_plan(d, front, 0.5).cost, (ObjectiveVector{4, 5}));
  EXPECT_EQ(select_plan(d, front, 0.9).cost, (ObjectiveVector{4, 5}));
  EXPECT_EQ(select_plan(d, front, 0.1).cost, (ObjectiveVector{6, 4}));
}

TEST(SelectPlan, MatchesHandComputedMinimum) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto d = oracle::random_weighted(seed, 8);
    const auto front = pareto_front(d);
    const auto& chosen = select_plan(d, front, 0.5);
    double tl = 1e300, th = -1e300, cl = 1e300, ch = -1e300;
    for (const auto& s : front.solutions()) {
      tl = std::min(tl, s.cost.time_ms);
      th = std::max(th, s.cost.time_ms);
      cl = std::min(cl, s.cost.cpu_units);
      ch = std::max(ch, s.cost.cpu_units);
    }
    auto score = [&](const PathSolution& s) {
      const double t = th > tl ? (s.cost.time_ms - tl) / (th - tl) : 0.0;
      const double c = ch > cl ? (s.cost.cpu_units - cl) / (ch - cl) : 0.0;
      return 0.5 * t + 0.5 * c;
    };
    for (const auto& s : front.solutions()) EXPECT_LE(score(chosen), score(s));
  }
}

TEST(Engine, SolverRunsOnceMeasuredAndCacheShortCircuits) {
  const CallGraph g = chain(4);
  DecisionEngine e(g);
  const auto key = ContextKey::make("a", 4, 5000);
  auto exec = sim_executor(g, SimConfig{});
  int random_runs = 0;
  while (!e.graph().all_measured()) {
    const auto d = e.decide(key);
    ASSERT_EQ(d.source, DecisionSource::Random);
    e.observe(exec(e.graph(), d.plan, random_runs++));
  }
  EXPECT_LE(random_runs, 4);

  const auto solved = e.decide(key);
  EXPECT_EQ(solved.source, DecisionSource::Aco);
  ASSERT_TRUE(solved.archive);
  EXPECT_EQ(e.solver_invocations(), 1);
  e.cache_store(key, solved.plan);

  const auto hit = e.decide(key);
  EXPECT_EQ(hit.source, DecisionSource::Cache);
  EXPECT_EQ(hit.plan, solved.plan);
  EXPECT_EQ(e.solver_invocations(), 1);
  EXPECT_LT(hit.decision_ms, solved.decision_ms);
}

TEST(RunOnline, InvalidationBoundsSolverCalls) {
  const CallGraph g = chain(4);
  for (int period : {5, 10, 25}) {
    EngineConfig cfg;
    cfg.invalidation_period = period;
    DecisionEngine e(g, cfg);
    const auto key = ContextKey::make("a", 4, 5000);
    const auto report = run_online(e, key, 100, sim_executor(g, SimConfig{}));
    int random = 0;
    for (const auto& r : report.rows) random += r.source == DecisionSource::Random ? 1 : 0;
    EXPECT_LE(report.solver_invocations, (100 - random + period - 1) / period);
    EXPECT_GT(report.cache_hits, 0);
  }
}

TEST(RunOnline, ExecutorFailureIsRecorded) {
  DecisionEngine e(chain(3));
  const auto report = run_online(e, ContextKey::make("a", 1, 5000), 3,
                                 [](const DualPlacementGraph&, const PathSolution&, int run) -> ExecutionTrace {
                                   if (run == 1) throw std::runtime_error("boom");
                                   return {};
                                 });
  ASSERT_EQ(report.rows.size(), 3u);
  EXPECT_FALSE(report.rows[1].ok);
  EXPECT_EQ(report.rows[1].error, "boom");
  EXPECT_EQ(e.run_counter(), 3);
}

TEST(RunReportCsv, RoundTrip) {
  const CallGraph g = chain(4);
  DecisionEngine e(g);
  const auto report = run_online(e, ContextKey::make("a", 4, 5000), 12, sim_executor(g, SimConfig{}));
  const std::string csv = run_report_csv(report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "run,plan,time_ms,cpu_units,decision_ms,source,status");
  EXPECT_EQ(run_report_csv(parse_run_report_csv(csv)), csv);
  EXPECT_THROW(parse_run_report_csv("bad,header\n"), ParseError);
}
