#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "offload/cost_sim.hpp"
#include "offload/decision_engine.hpp"
#include "offload/rpc.hpp"

namespace offload {

enum class ExecutorKind { Sim, Rpc };

struct RpcSettings {
  std::string host = "127.0.0.1";
  int port = 0;  // 0: run an in-process loopback server
  double ms_per_work = 0.01;
  double slowdown = 10.0;
  double delay_ms = 5.0;
  double timeout_s = 5.0;
};

struct ExperimentSpec {
  std::vector<std::string> benchmarks = {"det"};
  std::vector<Workload> workloads;  // user-defined, referenced by name from `benchmarks`
  std::vector<double> series;       // empty: each benchmark's own series
  int runs_per_series = 25;
  std::vector<DeviceProfile> devices = {default_device()};
  DeviceProfile server = default_server();
  NetworkProfile network = network_preset("medium");
  double kappa = kDefaultMarshalCpuPerByte;
  EngineConfig engine;
  bool offloading = true;
  ExecutorKind executor = ExecutorKind::Sim;
  RpcSettings rpc;
  std::uint64_t seed = 1;
  std::string output;  // empty: stdout
  int threads = 0;     // 0: OpenMP default

  void validate() const;
};

// Throws ParseError naming the offending field.
ExperimentSpec experiment_from_json(const nlohmann::json& j);
ExperimentSpec load_experiment(const std::string& path);

struct SeriesRow {
  std::string device;
  std::string benchmark;
  double series = 0.0;
  double success_pct = 0.0;
  double time_gain_pct = 0.0;
  double cpu_gain_pct = 0.0;
  double overhead_pct = 0.0;
  double cache_hit_pct = 0.0;
  std::int64_t solver_invocations = 0;
};

// Every (benchmark, device) pair keeps one engine across its series, so
// later series profit from weights learned earlier. Rows are sorted by
// device, benchmark, series. Throws RpcError when the executor is unusable.
std::vector<SeriesRow> run_bench(const ExperimentSpec& spec);

// device,benchmark,series,success_pct,time_gain_pct,cpu_gain_pct,overhead_pct,cache_hit_pct
std::string bench_csv(const std::vector<SeriesRow>& rows);

}  // namespace offload
