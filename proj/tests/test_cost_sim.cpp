#include <gtest/gtest.h>

#include <cmath>

#include "offload/cost_sim.hpp"
#include "offload/error.hpp"
#include "oracles.hpp"

using namespace offload;

namespace {

CallGraph two_methods(double work, std::uint64_t bytes = 1000) {
  CallGraph g;
  g.methods = {{0, "main", 2, 0, 0, true}, {1, "heavy", work, bytes, bytes, false}};
  g.calls = {{0, 1}};
  g.entry = 0;
  g.exit = 1;
  return g;
}

SimConfig noiseless() {
  SimConfig cfg;
  cfg.network.jitter = 0.0;
  return cfg;
}

ExecutionTrace local_run(const CallGraph& g, const SimConfig& cfg) {
  Rng rng = ant_stream(1, 0, 0);
  return simulate(all_local_plan(g), g, cfg, rng);
}

ExecutionTrace remote_run(const CallGraph& g, const SimConfig& cfg) {
  std::vector<PlacedMethod> plan;
  for (const auto& m : g.methods)
    plan.push_back({m.id, m.pinned_local ? Placement::Local : Placement::Remote});
  Rng rng = ant_stream(1, 0, 0);
  return simulate(plan, g, cfg, rng);
}

}  // namespace

TEST(Simulate, CostModel) {
  const CallGraph g = two_methods(100, 1000);
  const SimConfig cfg = noiseless();
  const auto local = local_run(g, cfg);
  EXPECT_DOUBLE_EQ(local.total.time_ms, 102.0);
  EXPECT_DOUBLE_EQ(local.total.cpu_units, 102.0);
  const auto remote = remote_run(g, cfg);
  // 2 local + rtt 60 + 100/10 + 2000/5000
  EXPECT_DOUBLE_EQ(remote.total.time_ms, 2.0 + 60.0 + 10.0 + 0.4);
  EXPECT_DOUBLE_EQ(remote.total.cpu_units, 2.0 + 2.0);
  EXPECT_EQ(remote.token_string(), "0@L 1@R");
}

TEST(Simulate, AllLocalHasNoNetworkTerms) {
  Rng rng = ant_stream(3, 0, 0);
  for (int i = 0; i < 20; ++i) {
    const CallGraph g = random_callgraph(rng, 1 + i % 10);
    double compute = 0.0;
    for (const auto& m : g.methods) compute += m.work_units;
    const auto t = local_run(g, noiseless());
    EXPECT_DOUBLE_EQ(t.total.time_ms, compute);
    for (const auto& s : t.surcharges) EXPECT_EQ(s, ObjectiveVector{});
  }
}

TEST(Simulate, RttChargedPerTransition) {
  CallGraph g;
  g.methods = {{0, "main", 0, 0, 0, true}, {1, "a", 0, 0, 0, false}, {2, "b", 0, 0, 0, false},
               {3, "c", 0, 0, 0, false}};
  g.calls = {{0, 1}, {1, 2}, {2, 3}};
  g.entry = 0;
  g.exit = 3;
  Rng rng = ant_stream(1, 0, 0);
  const std::vector<PlacedMethod> burst{{0, Placement::Local}, {1, Placement::Remote},
                                        {2, Placement::Remote}, {3, Placement::Remote}};
  EXPECT_DOUBLE_EQ(simulate(burst, g, noiseless(), rng).total.time_ms, 60.0);
  const std::vector<PlacedMethod> chatty{{0, Placement::Local}, {1, Placement::Remote},
                                         {2, Placement::Local}, {3, Placement::Remote}};
  EXPECT_DOUBLE_EQ(simulate(chatty, g, noiseless(), rng).total.time_ms, 120.0);
}

TEST(Simulate, ZeroJitterIsDeterministic) {
  const CallGraph g = two_methods(500);
  Rng a = ant_stream(1, 0, 0), b = ant_stream(999, 0, 0);
  const std::vector<PlacedMethod> plan{{0, Placement::Local}, {1, Placement::Remote}};
  const auto ta = simulate(plan, g, noiseless(), a);
  const auto tb = simulate(plan, g, noiseless(), b);
  EXPECT_EQ(ta.total, tb.total);
  EXPECT_EQ(ta.tokens, tb.tokens);
}

TEST(Simulate, TotalsAreSumOfParts) {
  const CallGraph g = two_methods(300);
  Rng rng = ant_stream(5, 0, 0);
  const std::vector<PlacedMethod> plan{{0, Placement::Local}, {1, Placement::Remote}};
  const auto t = simulate(plan, g, SimConfig{}, rng);
  ObjectiveVector sum;
  for (const auto& [id, c] : t.per_method_costs) sum += c;
  for (const auto& s : t.surcharges) sum += s;
  EXPECT_DOUBLE_EQ(sum.time_ms, t.total.time_ms);
  EXPECT_DOUBLE_EQ(sum.cpu_units, t.total.cpu_units);
}

TEST(Simulate, RejectsRemotePinned) {
  const CallGraph g = two_methods(1);
  Rng rng = ant_stream(1, 0, 0);
  const std::vector<PlacedMethod> plan{{0, Placement::Remote}};
  EXPECT_THROW(simulate(plan, g, noiseless(), rng), TraceError);
}

TEST(Success, Strict) {
  ExecutionTrace local, off;
  local.total = {100, 0};
  off.total = {50, 0};
  EXPECT_TRUE(success(local, off));
  off.total = {100, 0};
  EXPECT_FALSE(success(local, off));
}

// Fully-remote plans, jitter 0: the time gain never shrinks as work grows.
TEST(SimulateProperty, GainMonotoneInWork) {
  const SimConfig cfg = noiseless();
  double previous = -1e300;
  for (int i = 0; i < 20; ++i) {
    const CallGraph g = two_methods(10.0 * std::pow(1.5, i));
    const double gain = local_run(g, cfg).total.time_ms - remote_run(g, cfg).total.time_ms;
    EXPECT_GE(gain, previous) << "step " << i;
    previous = gain;
  }
}

TEST(Scaling, CofactorCountMatchesMinorExpansion) {
  for (int n = 1; n <= 7; ++n) {
    std::vector<std::vector<double>> a(n, std::vector<double>(n));
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) a[r][c] = 1.0 + r * n + c * c;
    oracle::CountingDet det;
    det(a);
    EXPECT_DOUBLE_EQ(cofactor_multiplications(n), static_cast<double>(det.mults)) << "n " << n;
  }
}

TEST(Benchmarks, TopologySizes) {
  const std::map<std::string, std::size_t> expected{{"fib", 2},        {"matmul", 3},
                                                    {"det", 4},        {"integrate", 4},
                                                    {"montecarlo", 8}, {"facerec", 12}};
  for (auto name : benchmark_names()) {
    const auto series = default_series(name);
    ASSERT_EQ(series.size(), 4u);
    for (double s : series) {
      const Workload w = gen_benchmark(name, s);
      EXPECT_EQ(w.graph.methods.size(), expected.at(std::string(name))) << name;
      EXPECT_TRUE(w.graph.find(w.graph.entry)->pinned_local);
      EXPECT_NO_THROW(transform(w.graph));
    }
  }
  EXPECT_THROW(gen_benchmark("nope", 1), std::invalid_argument);
  EXPECT_THROW(gen_benchmark("det", 9), std::invalid_argument);
}

TEST(Benchmarks, DetWorkGrowsFasterThanTenfold) {
  auto total = [](double s) {
    double w = 0;
    for (const auto& m : gen_benchmark("det", s).graph.methods) w += m.work_units;
    return w;
  };
  EXPECT_GT(total(5), 10 * total(3));
}

TEST(Benchmarks, WorkNonDecreasingAcrossSeries) {
  for (auto name : benchmark_names()) {
    const auto series = default_series(name);
    for (std::size_t i = 1; i < series.size(); ++i) {
      const auto a = gen_benchmark(name, series[i - 1]).graph;
      const auto b = gen_benchmark(name, series[i]).graph;
      for (std::size_t k = 0; k < a.methods.size(); ++k)
        EXPECT_LE(a.methods[k].work_units, b.methods[k].work_units) << name;
    }
  }
}

TEST(Workload, JsonDefinition) {
  const auto j = nlohmann::json::parse(R"({
    "name": "toy",
    "methods": [
      {"id": 0, "name": "main", "pinned": true, "work": 1},
      {"id": 1, "name": "crunch", "work": [{"kind": "power", "coeff": 2, "rate": 2}],
       "bytes_in": 10, "bytes_out": [{"kind": "power", "coeff": 4, "rate": 1}]}
    ],
    "calls": [[0, 1]], "entry": 0, "exit": 1, "series": [1, 2, 3, 4]
  })");
  const Workload w = workload_from_json(j);
  const CallGraph g = w.instance(3);
  EXPECT_DOUBLE_EQ(g.find(1)->work_units, 18.0);
  EXPECT_EQ(g.find(1)->bytes_out, 12u);
  EXPECT_THROW(workload_from_json(nlohmann::json::parse(R"({"name": "x"})")), ParseError);
}

TEST(Profiles, PresetsAndJson) {
  EXPECT_EQ(network_preset("good").bandwidth, 50000.0);
  EXPECT_EQ(network_preset("poor").rtt_ms, 200.0);
  EXPECT_THROW(network_preset("satellite"), std::invalid_argument);
  EXPECT_EQ(network_from_json("medium"), network_preset("medium"));
  const auto n = network_from_json(nlohmann::json::parse(R"({"preset":"good","jitter":0})"));
  EXPECT_EQ(n.jitter, 0.0);
  EXPECT_EQ(n.rtt_ms, 20.0);
  EXPECT_THROW(device_from_json(nlohmann::json::parse(R"({"cpu_speed":0})")), ParseError);
}

TEST(Simulate, FibPoorNetworkMostlyFails) {
  const Workload w = gen_benchmark("fib", 500);
  SimConfig cfg;
  cfg.network = network_preset("poor");
  std::vector<PlacedMethod> plan{{0, Placement::Local}, {1, Placement::Remote}};
  int wins = 0;
  for (std::uint64_t r = 0; r < 25; ++r) {
    Rng a = ant_stream(r, 0, 0), b = ant_stream(r, 0, 1);
    if (success(simulate(all_local_plan(w.graph), w.graph, cfg, a), simulate(plan, w.graph, cfg, b)))
      ++wins;
  }
  EXPECT_LT(wins, 13);
}
