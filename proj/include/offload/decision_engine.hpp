#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "offload/aco.hpp"
#include "offload/callgraph.hpp"
#include "offload/pareto.hpp"
#include "offload/trace.hpp"

namespace offload {

enum class NetworkClass { Good, Medium, Poor };

const char* to_string(NetworkClass c);
// >= 50 Mbps good, >= 5 Mbps medium, poor otherwise.
NetworkClass classify_network(double bandwidth_bytes_per_ms);
// floor(log2(input_size)); 0 for inputs below 1.
int input_bucket(double input_size);

// "Same application, same situation".
struct ContextKey {
  std::string app_id;
  int input_bucket = 0;
  NetworkClass network = NetworkClass::Medium;

  static ContextKey make(std::string app_id, double input_size, double bandwidth_bytes_per_ms);
  // "app|bucket|network"; the cache matches on this string.
  std::string to_string() const;
  friend bool operator==(const ContextKey&, const ContextKey&) = default;
};

struct CachedPlan {
  PathSolution plan;
  std::string tokens;
  std::int64_t stored_at_run = 0;
};

// Plans previously chosen by the solver, keyed by context string. With a
// positive invalidation period an entry stored at run s serves runs r with
// r - s < period and is evicted afterwards; period 0 disables invalidation.
class DecisionCache {
 public:
  explicit DecisionCache(int invalidation_period = 0) : period_(invalidation_period) {}

  void store(const ContextKey& key, PathSolution plan, std::string tokens, std::int64_t run);
  // Expired entries are misses and are evicted.
  std::optional<CachedPlan> lookup(const ContextKey& key, std::int64_t run);
  // Read-only variant, safe for concurrent readers between writes.
  std::optional<CachedPlan> peek(const ContextKey& key, std::int64_t run) const;

  int invalidation_period() const { return period_; }
  std::size_t size() const { return entries_.size(); }

 private:
  bool live(const CachedPlan& e, std::int64_t run) const {
    return period_ <= 0 || run - e.stored_at_run < period_;
  }

  int period_;
  std::map<std::string, CachedPlan> entries_;
};

enum class DecisionSource { Cache, Random, Aco };
const char* to_string(DecisionSource s);

// How decide() reports its own latency. Modeled charges decision_ms_per_step
// per ant step (per token compared for cache hits, per edge walked for
// exploration), which keeps simulated experiments reproducible.
enum class DecisionClock { Modeled, WallClock };

struct EngineConfig {
  AcoParams aco;
  double ema_factor = 1.0;  // 1.0 overwrites weights with the latest observation
  double preference_w = 0.5;  // weight of normalized time when picking from the archive
  bool cache_enabled = true;
  int invalidation_period = 0;
  std::uint64_t seed = 1;
  int solver_threads = 1;
  DecisionClock clock = DecisionClock::Modeled;
  double decision_ms_per_step = 1e-3;
};

struct Decision {
  PathSolution plan;
  DecisionSource source = DecisionSource::Random;
  double decision_ms = 0.0;
  std::optional<ParetoArchive> archive;  // set for solver decisions
};

// Deterministic archive -> plan rule: minimize w*time + (1-w)*cpu over costs
// min-max normalized across the archive; ties go to fewer Remote nodes, then
// the lexicographically smaller token string.
const PathSolution& select_plan(const DualPlacementGraph& d, const ParetoArchive& archive,
                                double preference_w);

// Seeded random start->end path among those covering the most unmeasured
// edges, uniform over the ties. On a fresh graph this is a uniform draw over
// all paths.
PathSolution exploration_path(const DualPlacementGraph& d, Rng& rng);

// Online offloading service for one application. Single writer: decide and
// observe must not run concurrently.
class DecisionEngine {
 public:
  DecisionEngine(const CallGraph& app, EngineConfig cfg = {});

  Decision decide(const ContextKey& key);
  // EMA update of every edge the trace traversed; the run counter advances
  // even for an empty trace. Throws TraceError naming the first bad token
  // without touching any weight.
  void observe(const ExecutionTrace& trace);

  void cache_store(const ContextKey& key, const PathSolution& plan);
  std::optional<CachedPlan> cache_lookup(const ContextKey& key);

  const DualPlacementGraph& graph() const { return graph_; }
  const DecisionCache& cache() const { return cache_; }
  const EngineConfig& config() const { return cfg_; }
  std::int64_t run_counter() const { return run_counter_; }
  std::int64_t solver_invocations() const { return solver_invocations_; }

 private:
  DualPlacementGraph graph_;
  EngineConfig cfg_;
  DecisionCache cache_;
  Rng rng_;
  std::int64_t run_counter_ = 0;
  std::int64_t solver_invocations_ = 0;
};

struct RunRecord {
  int run = 0;
  std::string plan;
  ObjectiveVector cost;
  double decision_ms = 0.0;
  DecisionSource source = DecisionSource::Random;
  bool ok = true;
  std::string error;
};

struct RunReport {
  std::vector<RunRecord> rows;
  std::int64_t solver_invocations = 0;
  int cache_hits = 0;
};

// Executes a plan and reports what it cost; may throw.
using Executor = std::function<ExecutionTrace(const DualPlacementGraph&, const PathSolution&, int run)>;

// decide -> execute -> observe, n_runs times, caching solver decisions.
// Executor failures are recorded and the loop continues.
RunReport run_online(DecisionEngine& engine, const ContextKey& key, int n_runs,
                     const Executor& executor);

// "run,plan,time_ms,cpu_units,decision_ms,source,status"
std::string run_report_csv(const RunReport& report);
RunReport parse_run_report_csv(const std::string& text);

}  // namespace offload
