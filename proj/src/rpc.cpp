#include "offload/rpc.hpp"

#include <array>
#include <chrono>
#include <cstring>
#include <stdexcept>

#include "httplib.h"
#include "json.hpp"
#include "offload/error.hpp"

namespace offload {

namespace {

constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void emulate(double ms) {
  if (ms > 0.0) std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
}

double declared_work(const Kernel& k, std::span<const std::uint8_t> payload) {
  return k.declared_work ? k.declared_work(payload) : 0.0;
}

std::string invoke_path(const RemoteEndpoint& ep, std::string_view method) {
  return ep.base_path + "/invoke/" + std::string(method);
}

Bytes invoke_with(httplib::Client& cli, const RemoteEndpoint& ep, std::string_view method,
                  std::span<const std::uint8_t> args, const std::string& run_id) {
  const nlohmann::json req{{"method", method}, {"args", base64_encode(args)}, {"run_id", run_id}};
  auto res = cli.Post(invoke_path(ep, method), req.dump(), "application/json");
  if (!res) throw RpcError("transport failure: " + httplib::to_string(res.error()));
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error&) {
    throw RpcError("malformed response envelope (HTTP " + std::to_string(res->status) + ")");
  }
  const std::string status = body.value("status", "");
  if (status != "ok") throw RpcError("remote " + std::string(method) + ": " + status);
  return base64_decode(body.value("result", ""));
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < data.size(); i += 3) {
    const std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (const std::size_t rest = data.size() - i; rest > 0) {
    std::uint32_t v = data[i] << 16;
    if (rest == 2) v |= data[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

Bytes base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw RpcError("base64: length not a multiple of 4");
  std::array<int, 256> lut;
  lut.fill(-1);
  for (std::size_t i = 0; i < kAlphabet.size(); ++i) lut[static_cast<unsigned char>(kAlphabet[i])] = static_cast<int>(i);

  Bytes out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int pad = 0;
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        ++pad;
        v <<= 6;
        continue;
      }
      if (pad > 0) throw RpcError("base64: data after padding");
      const int d = lut[static_cast<unsigned char>(c)];
      if (d < 0) throw RpcError("base64: invalid character");
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

Bytes make_payload(double input_size, std::span<const std::uint8_t> body) {
  Bytes out(8 + body.size());
  std::uint64_t bits;
  std::memcpy(&bits, &input_size, 8);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(bits >> (8 * i));
  std::copy(body.begin(), body.end(), out.begin() + 8);
  return out;
}

double payload_size(std::span<const std::uint8_t> payload) {
  if (payload.size() < 8) throw RpcError("payload shorter than its size header");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(payload[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

// ---------------------------------------------------------------------------

void MethodRegistry::add(std::string name, Kernel kernel) {
  kernels_.insert_or_assign(std::move(name), std::move(kernel));
}

const Kernel* MethodRegistry::find(std::string_view name) const {
  auto it = kernels_.find(name);
  return it == kernels_.end() ? nullptr : &it->second;
}

std::vector<std::string> MethodRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, k] : kernels_) out.push_back(name);
  return out;
}

MethodRegistry identity_registry() {
  MethodRegistry r;
  r.add("identity", {[](std::span<const std::uint8_t> in) { return Bytes(in.begin(), in.end()); }, {}});
  return r;
}

// ---------------------------------------------------------------------------

RpcServer::RpcServer(std::shared_ptr<const MethodRegistry> registry, RemoteEndpoint endpoint,
                     double ms_per_work)
    : registry_(std::move(registry)),
      endpoint_(std::move(endpoint)),
      ms_per_work_(ms_per_work),
      server_(std::make_unique<httplib::Server>()) {
  // No SO_REUSEPORT: a second server on a taken port must fail to bind.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  const std::string pattern = endpoint_.base_path + "/invoke/([^/]+)";
  server_->Post(pattern, [this](const httplib::Request& req, httplib::Response& res) {
    const auto t0 = Clock::now();
    const std::string route_method = req.matches[1];
    auto reply = [&](int http, const char* status, std::string_view result_b64) {
      res.status = http;
      const nlohmann::json body{
          {"status", status}, {"result", result_b64}, {"server_ms", elapsed_ms(t0)}};
      res.set_content(body.dump(), "application/json");
    };
    ++served_;

    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error&) {
      return reply(400, "error", "");
    }
    if (!body.is_object() || !body.contains("method") || !body["method"].is_string() ||
        !body.contains("args") || !body["args"].is_string() ||
        body["method"].get<std::string>() != route_method)
      return reply(400, "error", "");

    const Kernel* kernel = registry_->find(route_method);
    if (kernel == nullptr) return reply(404, "unknown-method", "");
    try {
      const Bytes args = base64_decode(body["args"].get<std::string>());
      const Bytes out = kernel->fn(args);
      emulate(declared_work(*kernel, args) * ms_per_work_ / endpoint_.artificial_slowdown +
              endpoint_.artificial_delay_ms);
      reply(200, "ok", base64_encode(out));
    } catch (const std::exception&) {
      reply(500, "error", "");
    }
  });
}

RpcServer::~RpcServer() { stop(); }

void RpcServer::start() {
  if (thread_.joinable()) return;
  if (endpoint_.port == 0) {
    const int port = server_->bind_to_any_port(endpoint_.host);
    if (port < 0) throw RpcError("cannot bind " + endpoint_.host);
    endpoint_.port = port;
  } else if (!server_->bind_to_port(endpoint_.host, endpoint_.port)) {
    throw RpcError("cannot bind " + endpoint_.host + ":" + std::to_string(endpoint_.port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void RpcServer::stop() {
  if (!thread_.joinable()) return;
  server_->stop();
  thread_.join();
}

void RpcServer::wait() {
  if (thread_.joinable()) thread_.join();
}

std::unique_ptr<RpcServer> serve(std::shared_ptr<const MethodRegistry> registry,
                                 RemoteEndpoint endpoint, double ms_per_work) {
  auto server = std::make_unique<RpcServer>(std::move(registry), std::move(endpoint), ms_per_work);
  server->start();
  return server;
}

// ---------------------------------------------------------------------------

Bytes invoke_remote(const RemoteEndpoint& endpoint, std::string_view method,
                    std::span<const std::uint8_t> args, const std::string& run_id,
                    double timeout_s) {
  httplib::Client cli(endpoint.host, endpoint.port);
  const auto timeout = std::chrono::duration<double>(timeout_s);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  return invoke_with(cli, endpoint, method, args, run_id);
}

RpcRun run_plan(std::span<const PlacedMethod> plan, const MethodRegistry& registry,
                const RemoteEndpoint* endpoint, Bytes input, const RpcRunOptions& opts) {
  if (!registry.workload) throw RpcError("registry has no workload to resolve method ids");
  const Workload& w = *registry.workload;

  std::unique_ptr<httplib::Client> cli;
  if (endpoint != nullptr) {
    cli = std::make_unique<httplib::Client>(endpoint->host, endpoint->port);
    const auto timeout = std::chrono::duration<double>(opts.timeout_s);
    cli->set_connection_timeout(timeout);
    cli->set_read_timeout(timeout);
  }

  RpcRun run;
  Bytes payload = std::move(input);
  for (const PlacedMethod& step : plan) {
    const std::string& name = w.model(step.method).name;
    const Kernel* kernel = registry.find(name);
    if (kernel == nullptr) throw RpcError("no kernel registered for " + name);

    Placement where = step.placement;
    ObjectiveVector cost;
    const auto t0 = Clock::now();
    if (where == Placement::Remote && !run.trace.degraded) {
      if (cli == nullptr) throw RpcError("plan offloads " + name + " but no endpoint is configured");
      try {
        ++run.wire_requests;
        Bytes out = invoke_with(*cli, *endpoint, name, payload, opts.run_id);
        cost = {elapsed_ms(t0), opts.kappa * static_cast<double>(payload.size() + out.size())};
        payload = std::move(out);
      } catch (const RpcError&) {
        run.trace.degraded = true;
      }
    }
    if (where == Placement::Local || run.trace.degraded) {
      if (where == Placement::Remote) where = Placement::Local;
      const auto t1 = Clock::now();
      Bytes out = kernel->fn(payload);
      emulate(declared_work(*kernel, payload) * opts.ms_per_work);
      payload = std::move(out);
      const double ms = elapsed_ms(t1);
      cost = {ms, ms};
    }
    run.trace.tokens.push_back(PlacedMethod{step.method, where}.token());
    run.trace.per_method_costs[step.method] = cost;
    run.trace.surcharges.push_back({});
    run.trace.total += cost;
  }
  run.output = std::move(payload);
  return run;
}

double measure_overhead(const RunReport& report) {
  if (report.rows.empty()) throw std::invalid_argument("overhead of an empty report is undefined");
  double decision = 0.0, execution = 0.0;
  for (const auto& r : report.rows) {
    if (!r.ok) continue;
    decision += r.decision_ms;
    execution += r.cost.time_ms;
  }
  const double total = decision + execution;
  return total > 0.0 ? decision / total : 0.0;
}

}  // namespace offload
