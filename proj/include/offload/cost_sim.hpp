#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "offload/aco.hpp"
#include "offload/callgraph.hpp"
#include "offload/trace.hpp"

namespace offload {

struct DeviceProfile {
  double cpu_speed = 1.0;  // work units per ms
  std::string label = "device";
  friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

struct NetworkProfile {
  double bandwidth = 5000.0;  // bytes per ms
  double rtt_ms = 60.0;
  double jitter = 0.1;  // relative std-dev of time terms
  std::string label = "medium";
  friend bool operator==(const NetworkProfile&, const NetworkProfile&) = default;
};

inline constexpr double kDefaultMarshalCpuPerByte = 1e-3;

DeviceProfile default_device();
DeviceProfile default_server();
// "good" (50 KB/ms, 20 ms), "medium" (5 KB/ms, 60 ms), "poor" (0.5 KB/ms, 200 ms).
NetworkProfile network_preset(std::string_view name);

struct SimConfig {
  DeviceProfile device = default_device();
  DeviceProfile server = default_server();
  NetworkProfile network = network_preset("medium");
  double kappa = kDefaultMarshalCpuPerByte;  // device cpu per marshaled byte
};

// Local:  time = work / device.cpu_speed,                              cpu = work
// Remote: time = work / server.cpu_speed + (in + out) / bandwidth,      cpu = kappa * (in + out)
// plus rtt_ms on every Local->Remote transition. Time terms are scaled by
// max(1e-3, 1 + jitter * N(0,1)); with jitter = 0 no random numbers are drawn.
ExecutionTrace simulate(std::span<const PlacedMethod> plan, const CallGraph& instance,
                        const SimConfig& cfg, Rng& rng);

// Strict: equal times are not a success.
bool success(const ExecutionTrace& local_trace, const ExecutionTrace& offload_trace);

// ---------------------------------------------------------------------------

// coeff * s^rate (Power), coeff * exp(rate * s) (Exp), or coeff * M(round(s))
// (Cofactor), where M(n) = n * (M(n-1) + 1), M(1) = 0 counts the
// multiplications of a minor-expansion determinant.
struct ScalingTerm {
  enum class Kind { Power, Exp, Cofactor };
  Kind kind = Kind::Power;
  double coeff = 0.0;
  double rate = 0.0;

  double operator()(double s) const;
  friend bool operator==(const ScalingTerm&, const ScalingTerm&) = default;
};

// Sum of non-negative, non-decreasing terms.
struct ScalingLaw {
  std::vector<ScalingTerm> terms;

  double operator()(double s) const;
  static ScalingLaw constant(double c) { return {{{ScalingTerm::Kind::Power, c, 0.0}}}; }
  friend bool operator==(const ScalingLaw&, const ScalingLaw&) = default;
};

double cofactor_multiplications(int n);

struct MethodModel {
  MethodId id = 0;
  std::string name;
  bool pinned = false;
  ScalingLaw work;
  ScalingLaw bytes_in;
  ScalingLaw bytes_out;
};

// Call-graph analog of an application whose per-method costs scale with an
// input size. `graph` is the instance at `size`.
struct Workload {
  std::string name;
  std::vector<MethodModel> methods;
  std::vector<CallEdge> calls;
  MethodId entry = 0;
  MethodId exit = 0;
  std::vector<double> series;
  double size = 0.0;
  CallGraph graph;

  CallGraph instance(double input) const;
  const MethodModel& model(MethodId id) const;
};

// Folds recursive components into single methods (laws summed) and fills in
// `graph` at `size`.
Workload finalize_workload(Workload w);

std::span<const std::string_view> benchmark_names();
std::vector<double> default_series(std::string_view name);

// fib: 2 methods, matmul: 3, det: 4, integrate: 4, montecarlo: 8, facerec: 12
// (after recursion collapse). Throws std::invalid_argument for an unknown
// name or a size outside the series range.
Workload gen_benchmark(std::string_view name, double size);

// {"name", "methods":[{"id","name","pinned","work","bytes_in","bytes_out"}],
//  "calls", "entry", "exit", "series"} where each law is a number or a list of
// {"kind":"power"|"exp"|"cofactor","coeff","rate"}.
Workload workload_from_json(const nlohmann::json& j);

DeviceProfile device_from_json(const nlohmann::json& j);
NetworkProfile network_from_json(const nlohmann::json& j);

// Randomized inputs for property tests and benchmarks -----------------------

// Connected call graph with `n_methods` methods (entry pinned, others pinned
// with probability `pin_probability`), random tree/DAG call structure.
CallGraph random_callgraph(Rng& rng, int n_methods, double pin_probability = 0.2);

// Assigns measured dyadic weights (multiples of 1/16, so path sums are exact)
// to every edge: remote copies trade time against cpu.
void assign_random_weights(DualPlacementGraph& d, Rng& rng);

}  // namespace offload
