#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "offload/cost_sim.hpp"
#include "offload/decision_engine.hpp"
#include "offload/trace.hpp"

namespace httplib {
class Server;
}

namespace offload {

using Bytes = std::vector<std::uint8_t>;

std::string base64_encode(std::span<const std::uint8_t> data);
// Throws RpcError on malformed input.
Bytes base64_decode(std::string_view text);

// Payloads that flow between workload kernels start with the input size as an
// 8-byte little-endian double; the rest is kernel-specific.
Bytes make_payload(double input_size, std::span<const std::uint8_t> body = {});
double payload_size(std::span<const std::uint8_t> payload);

using KernelFn = std::function<Bytes(std::span<const std::uint8_t>)>;

struct Kernel {
  KernelFn fn;
  // Declared work units for a payload; empty for kernels that cost nothing.
  std::function<double(std::span<const std::uint8_t>)> declared_work;
};

// Method name -> pure kernel. Client and server share one registry, so local
// and remote execution run the same code.
class MethodRegistry {
 public:
  void add(std::string name, Kernel kernel);
  const Kernel* find(std::string_view name) const;
  std::vector<std::string> names() const;

  // Set for registries built from a workload; maps plan method ids to names.
  std::optional<Workload> workload;

 private:
  std::map<std::string, Kernel, std::less<>> kernels_;
};

// Deterministic synthetic kernels for every method of `w`; the montecarlo
// workload gets a real Monte Carlo move evaluator.
MethodRegistry registry_for(const Workload& w);
// "identity" only.
MethodRegistry identity_registry();

struct RemoteEndpoint {
  std::string host = "127.0.0.1";
  int port = 0;  // 0: pick a free port when serving
  std::string base_path = "/offload";
  double artificial_slowdown = 1.0;  // server compute = device compute / slowdown
  double artificial_delay_ms = 0.0;
};

// Loopback "cloud": POST {base}/invoke/{method} with the JSON envelope
//   request  {"method", "args": base64, "run_id"}
//   response {"status": "ok"|"unknown-method"|"error", "result": base64, "server_ms"}
// `ms_per_work` converts declared work to emulated device milliseconds.
class RpcServer {
 public:
  RpcServer(std::shared_ptr<const MethodRegistry> registry, RemoteEndpoint endpoint,
            double ms_per_work = 0.0);
  ~RpcServer();
  RpcServer(const RpcServer&) = delete;
  RpcServer& operator=(const RpcServer&) = delete;

  // Binds and starts serving on a background thread; throws RpcError when the
  // port cannot be bound.
  void start();
  void stop();
  // Blocks the calling thread until stop() (for the CLI).
  void wait();
  int port() const { return endpoint_.port; }
  const RemoteEndpoint& endpoint() const { return endpoint_; }
  std::uint64_t requests_served() const { return served_.load(); }

 private:
  std::shared_ptr<const MethodRegistry> registry_;
  RemoteEndpoint endpoint_;
  double ms_per_work_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::atomic<std::uint64_t> served_{0};
};

std::unique_ptr<RpcServer> serve(std::shared_ptr<const MethodRegistry> registry,
                                 RemoteEndpoint endpoint, double ms_per_work = 0.0);

struct RpcRunOptions {
  double ms_per_work = 0.0;  // device emulation
  double kappa = kDefaultMarshalCpuPerByte;
  std::string run_id = "run";
  double timeout_s = 5.0;
};

struct RpcRun {
  ExecutionTrace trace;
  Bytes output;
  int wire_requests = 0;
};

// One remote invocation; throws RpcError on transport or protocol failure.
Bytes invoke_remote(const RemoteEndpoint& endpoint, std::string_view method,
                    std::span<const std::uint8_t> args, const std::string& run_id,
                    double timeout_s = 5.0);

// Runs the plan strictly in order, feeding each kernel's output to the next.
// After a transport failure the remaining methods run locally and the trace
// is marked degraded; its tokens record where each method actually ran.
RpcRun run_plan(std::span<const PlacedMethod> plan, const MethodRegistry& registry,
                const RemoteEndpoint* endpoint, Bytes input, const RpcRunOptions& opts = {});

// sum(decision_ms) / sum(decision_ms + time_ms) over successful rows. Throws
// std::invalid_argument for an empty report.
double measure_overhead(const RunReport& report);

}  // namespace offload
