#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include <fmt/format.h>

#include "offload/error.hpp"
#include "offload/rpc.hpp"

namespace offload {

namespace {

constexpr std::size_t kMaxSyntheticBody = 64 * 1024;
constexpr int kMoves = 4;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::span<const std::uint8_t> data) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (auto b : data) h = (h ^ b) * 0x100000001B3ULL;
  return h;
}

std::span<const std::uint8_t> body_of(std::span<const std::uint8_t> payload) {
  if (payload.size() < 8) throw RpcError("payload shorter than its size header");
  return payload.subspan(8);
}

template <class T>
std::vector<T> read_array(std::span<const std::uint8_t> body) {
  if (body.size() % sizeof(T) != 0) throw RpcError("payload body is not a whole array");
  std::vector<T> out(body.size() / sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), body.data(), body.size());
  return out;
}

template <class T>
Bytes write_array(double size, const std::vector<T>& v) {
  Bytes body(v.size() * sizeof(T));
  if (!body.empty()) std::memcpy(body.data(), v.data(), body.size());
  return make_payload(size, body);
}

Kernel synthetic_kernel(const MethodModel& m) {
  Kernel k;
  k.fn = [m](std::span<const std::uint8_t> in) {
    const double s = payload_size(in);
    const auto n = static_cast<std::size_t>(
        std::clamp(m.bytes_out(s), 0.0, static_cast<double>(kMaxSyntheticBody)));
    std::uint64_t h = fnv1a(in) ^ mix(m.id);
    Bytes body(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (i % 8 == 0) h = mix(h);
      body[i] = static_cast<std::uint8_t>(h >> (8 * (i % 8)));
    }
    return make_payload(s, body);
  };
  k.declared_work = [law = m.work](std::span<const std::uint8_t> in) { return law(payload_size(in)); };
  return k;
}

// Monte Carlo move evaluator: paths of a random walk are scored against a few
// candidate moves and the best move is reported.

int path_count(double s) { return std::max(1, static_cast<int>(std::lround(s)) * 50); }

Bytes parse_args(std::span<const std::uint8_t> in) {
  const double s = payload_size(in);
  return write_array<std::uint64_t>(s, {static_cast<std::uint64_t>(path_count(s)),
                                        static_cast<std::uint64_t>(kMoves)});
}

Bytes seed_rng(std::span<const std::uint8_t> in) {
  const double s = payload_size(in);
  auto cfg = read_array<std::uint64_t>(body_of(in));
  if (cfg.size() != 2) throw RpcError("seed_rng: bad config");
  cfg.push_back(mix(cfg[0] * 31 + cfg[1]));
  return write_array(s, cfg);
}

Bytes simulate_paths(std::span<const std::uint8_t> in) {
  const double s = payload_size(in);
  const auto cfg = read_array<std::uint64_t>(body_of(in));
  if (cfg.size() != 3) throw RpcError("simulate_paths: bad config");
  std::vector<float> end_points(cfg[0]);
  std::uint64_t state = cfg[2];
  for (auto& p : end_points) {
    double x = 0.0;
    for (int step = 0; step < 32; ++step) {
      state = mix(state);
      x += static_cast<double>(state >> 11) * 0x1.0p-53 - 0.5;
    }
    p = static_cast<float>(x);
  }
  return write_array(s, end_points);
}

Bytes evaluate_moves(std::span<const std::uint8_t> in) {
  const double s = payload_size(in);
  const auto paths = read_array<float>(body_of(in));
  // Per path, the payoff of each move; moves are target offsets.
  std::vector<float> payoff(paths.size() * kMoves);
  for (std::size_t i = 0; i < paths.size(); ++i)
    for (int m = 0; m < kMoves; ++m) {
      const double target = -0.75 + 0.5 * m;
      payoff[i * kMoves + m] = static_cast<float>(std::exp(-std::abs(paths[i] - target)));
    }
  return write_array(s, payoff);
}

Bytes aggregate(std::span<const std::uint8_t> in) {
  const double s = payload_size(in);
  const auto payoff = read_array<float>(body_of(in));
  std::vector<double> mean(kMoves, 0.0);
  const std::size_t n = payoff.size() / kMoves;
  for (std::size_t i = 0; i < n; ++i)
    for (int m = 0; m < kMoves; ++m) mean[m] += payoff[i * kMoves + m];
  for (auto& v : mean) v /= static_cast<double>(std::max<std::size_t>(n, 1));
  return write_array(s, mean);
}

Bytes best_move(std::span<const std::uint8_t> in) {
  const double s = payload_size(in);
  const auto mean = read_array<double>(body_of(in));
  if (mean.empty()) throw RpcError("best_move: no moves");
  const auto it = std::max_element(mean.begin(), mean.end());
  return write_array<double>(s, {static_cast<double>(it - mean.begin()), *it});
}

Bytes show_result(std::span<const std::uint8_t> in) {
  const double s = payload_size(in);
  const auto best = read_array<double>(body_of(in));
  if (best.size() != 2) throw RpcError("show_result: bad input");
  const std::string text = fmt::format("best move {} score {:.6f}", static_cast<int>(best[0]), best[1]);
  return make_payload(s, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Bytes pass_through(std::span<const std::uint8_t> in) { return Bytes(in.begin(), in.end()); }

}  // namespace

MethodRegistry registry_for(const Workload& w) {
  MethodRegistry r;
  for (const auto& m : w.methods) r.add(m.name, synthetic_kernel(m));

  if (w.name == "montecarlo") {
    const std::pair<const char*, KernelFn> real[] = {
        {"main", pass_through},         {"parse_args", parse_args},
        {"seed_rng", seed_rng},         {"simulate_paths", simulate_paths},
        {"evaluate_moves", evaluate_moves}, {"aggregate", aggregate},
        {"best_move", best_move},       {"show_result", show_result}};
    for (const auto& [name, fn] : real) {
      const auto it = std::find_if(w.methods.begin(), w.methods.end(),
                                   [&](const MethodModel& m) { return m.name == name; });
      if (it == w.methods.end()) continue;
      r.add(name, {fn, [law = it->work](std::span<const std::uint8_t> in) {
                     return law(payload_size(in));
                   }});
    }
  }
  r.workload = w;
  return r;
}

}  // namespace offload
