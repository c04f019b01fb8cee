#include <gtest/gtest.h>

#include "offload/error.hpp"
#include "offload/experiment.hpp"

using namespace offload;

namespace {

ExperimentSpec small(std::vector<std::string> benchmarks) {
  ExperimentSpec s;
  s.benchmarks = std::move(benchmarks);
  s.runs_per_series = 10;
  s.engine.aco.n_iterations = 40;
  return s;
}

}  // namespace

TEST(Spec, ParsesShippedExperiment) {
  const auto s = load_experiment(std::string(OFFLOAD_DATA_DIR) + "/experiment.json");
  EXPECT_EQ(s.benchmarks.size(), 4u);
  EXPECT_EQ(s.runs_per_series, 25);
  EXPECT_EQ(s.executor, ExecutorKind::Sim);
  EXPECT_EQ(s.seed, 7u);
  const auto r = load_experiment(std::string(OFFLOAD_DATA_DIR) + "/rpc_experiment.json");
  EXPECT_EQ(r.executor, ExecutorKind::Rpc);
  EXPECT_DOUBLE_EQ(r.rpc.slowdown, 10.0);
}

TEST(Spec, RejectsBadInput) {
  auto parse = [](const char* text) { return experiment_from_json(nlohmann::json::parse(text)); };
  EXPECT_THROW(parse(R"({"benchmark":"det","colour":1})"), ParseError);
  EXPECT_THROW(parse(R"({"benchmark":"nope"})"), ParseError);
  EXPECT_THROW(parse(R"({"runs_per_series":0})"), ParseError);
  EXPECT_THROW(parse(R"({"executor":"grpc"})"), ParseError);
  EXPECT_THROW(parse(R"({"aco":{"q0":3}})"), ParseError);
  EXPECT_THROW(parse(R"({"cache":"yes"})"), ParseError);
  const auto s = parse(R"({"cache":{"enabled":false,"invalidation_period":4},"network":"poor"})");
  EXPECT_FALSE(s.engine.cache_enabled);
  EXPECT_EQ(s.engine.invalidation_period, 4);
  EXPECT_EQ(s.network.label, "poor");
}

TEST(Bench, CsvHeaderAndShape) {
  const auto rows = run_bench(small({"integrate", "fib"}));
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows.front().benchmark, "fib");
  const std::string csv = bench_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "device,benchmark,series,success_pct,time_gain_pct,cpu_gain_pct,overhead_pct,cache_hit_pct");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
  EXPECT_EQ(csv.find(';'), std::string::npos);
}

TEST(Bench, OffloadingDisabledHasZeroGain) {
  auto s = small({"det"});
  s.offloading = false;
  for (const auto& r : run_bench(s)) {
    EXPECT_EQ(r.time_gain_pct, 0.0);
    EXPECT_EQ(r.cpu_gain_pct, 0.0);
    EXPECT_EQ(r.success_pct, 0.0);
    EXPECT_EQ(r.overhead_pct, 0.0);
  }
}

TEST(Bench, IdenticalSeedIdenticalCsv) {
  auto s = small({"det", "matmul"});
  s.devices.push_back({2.0, "fast"});
  EXPECT_EQ(bench_csv(run_bench(s)), bench_csv(run_bench(s)));
  s.threads = 1;
  const auto serial = bench_csv(run_bench(s));
  s.threads = 4;
  EXPECT_EQ(bench_csv(run_bench(s)), serial);
}

TEST(Bench, CustomWorkload) {
  const auto j = nlohmann::json::parse(R"({
    "workloads": [{
      "name": "toy",
      "methods": [
        {"id": 0, "name": "main", "pinned": true, "work": 1},
        {"id": 1, "name": "crunch", "work": [{"kind": "power", "coeff": 200, "rate": 1}],
         "bytes_in": 100, "bytes_out": 100}
      ],
      "calls": [[0, 1]], "entry": 0, "exit": 1, "series": [1, 2, 4, 8]
    }],
    "benchmark": "toy", "runs_per_series": 5
  })");
  const auto rows = run_bench(experiment_from_json(j));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows.back().series, 8.0);
}

TEST(Bench, UnreachableRpcServerIsAnExecutorError) {
  auto s = small({"montecarlo"});
  s.executor = ExecutorKind::Rpc;
  s.rpc.port = 1;
  s.rpc.timeout_s = 0.5;
  EXPECT_THROW(run_bench(s), RpcError);
}
