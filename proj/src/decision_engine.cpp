#include "offload/decision_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "offload/error.hpp"

namespace offload {

const char* to_string(NetworkClass c) {
  switch (c) {
    case NetworkClass::Good:
      return "good";
    case NetworkClass::Medium:
      return "medium";
    case NetworkClass::Poor:
      return "poor";
  }
  return "?";
}

NetworkClass classify_network(double bandwidth_bytes_per_ms) {
  const double mbps = bandwidth_bytes_per_ms * 8.0 / 1000.0;
  if (mbps >= 50.0) return NetworkClass::Good;
  if (mbps >= 5.0) return NetworkClass::Medium;
  return NetworkClass::Poor;
}

int input_bucket(double input_size) {
  if (!(input_size >= 1.0)) return 0;
  return static_cast<int>(std::floor(std::log2(input_size)));
}

ContextKey ContextKey::make(std::string app_id, double input_size, double bandwidth_bytes_per_ms) {
  return {std::move(app_id), offload::input_bucket(input_size), classify_network(bandwidth_bytes_per_ms)};
}

std::string ContextKey::to_string() const {
  return app_id + '|' + std::to_string(input_bucket) + '|' + offload::to_string(network);
}

// ---------------------------------------------------------------------------

void DecisionCache::store(const ContextKey& key, PathSolution plan, std::string tokens,
                          std::int64_t run) {
  entries_.insert_or_assign(key.to_string(), CachedPlan{std::move(plan), std::move(tokens), run});
}

std::optional<CachedPlan> DecisionCache::lookup(const ContextKey& key, std::int64_t run) {
  auto it = entries_.find(key.to_string());
  if (it == entries_.end()) return std::nullopt;
  if (!live(it->second, run)) {
    entries_.erase(it);
    return std::nullopt;
  }
  return it->second;
}

std::optional<CachedPlan> DecisionCache::peek(const ContextKey& key, std::int64_t run) const {
  auto it = entries_.find(key.to_string());
  if (it == entries_.end() || !live(it->second, run)) return std::nullopt;
  return it->second;
}

const char* to_string(DecisionSource s) {
  switch (s) {
    case DecisionSource::Cache:
      return "cache";
    case DecisionSource::Random:
      return "random";
    case DecisionSource::Aco:
      return "aco";
  }
  return "?";
}

// ---------------------------------------------------------------------------

const PathSolution& select_plan(const DualPlacementGraph& d, const ParetoArchive& archive,
                                double preference_w) {
  const auto sols = archive.solutions();
  if (sols.empty()) throw SolverError("cannot select a plan from an empty archive");

  double t_lo = std::numeric_limits<double>::infinity(), t_hi = -t_lo;
  double c_lo = t_lo, c_hi = -t_lo;
  for (const auto& s : sols) {
    t_lo = std::min(t_lo, s.cost.time_ms);
    t_hi = std::max(t_hi, s.cost.time_ms);
    c_lo = std::min(c_lo, s.cost.cpu_units);
    c_hi = std::max(c_hi, s.cost.cpu_units);
  }
  auto norm = [](double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; };

  const PathSolution* best = nullptr;
  double best_score = 0.0;
  std::size_t best_remote = 0;
  std::string best_tokens;
  for (const auto& s : sols) {
    const double score = preference_w * norm(s.cost.time_ms, t_lo, t_hi) +
                         (1.0 - preference_w) * norm(s.cost.cpu_units, c_lo, c_hi);
    const std::size_t remote = remote_count(d, s);
    std::string tokens = token_string(d, s);
    const bool better = best == nullptr || score < best_score ||
                        (score == best_score &&
                         (remote < best_remote || (remote == best_remote && tokens < best_tokens)));
    if (better) {
      best = &s;
      best_score = score;
      best_remote = remote;
      best_tokens = std::move(tokens);
    }
  }
  return *best;
}

PathSolution exploration_path(const DualPlacementGraph& d, Rng& rng) {
  const std::size_t n = d.node_count();
  std::vector<std::int64_t> best(n, 0);
  std::vector<double> ways(n, 0.0);
  ways[d.end()] = 1.0;
  const auto topo = d.topological_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const NodeId v = *it;
    if (v == d.end()) continue;
    std::int64_t top = -1;
    for (EdgeId e : d.out_edges(v)) {
      const DualEdge& ed = d.edge(e);
      top = std::max(top, best[ed.to] + (ed.measured ? 0 : 1));
    }
    best[v] = top;
    for (EdgeId e : d.out_edges(v)) {
      const DualEdge& ed = d.edge(e);
      if (best[ed.to] + (ed.measured ? 0 : 1) == top) ways[v] += ways[ed.to];
    }
  }

  PathSolution path{{d.start()}, {}};
  NodeId v = d.start();
  while (v != d.end()) {
    std::vector<EdgeId> options;
    double total = 0.0;
    for (EdgeId e : d.out_edges(v)) {
      const DualEdge& ed = d.edge(e);
      if (best[ed.to] + (ed.measured ? 0 : 1) == best[v]) {
        options.push_back(e);
        total += ways[ed.to];
      }
    }
    EdgeId chosen = options.back();
    double r = uniform01(rng) * total;
    for (EdgeId e : options) {
      r -= ways[d.edge(e).to];
      if (r < 0.0) {
        chosen = e;
        break;
      }
    }
    const DualEdge& ed = d.edge(chosen);
    path.cost += ed.weight;
    path.nodes.push_back(ed.to);
    v = ed.to;
  }
  return path;
}

// ---------------------------------------------------------------------------

DecisionEngine::DecisionEngine(const CallGraph& app, EngineConfig cfg)
    : graph_(transform(app)),
      cfg_(std::move(cfg)),
      cache_(cfg_.invalidation_period),
      rng_(ant_stream(cfg_.seed, 0, 0)) {
  cfg_.aco.validate();
  if (!(cfg_.ema_factor > 0.0 && cfg_.ema_factor <= 1.0))
    throw std::invalid_argument("ema_factor must be in (0,1]");
  if (!(cfg_.preference_w >= 0.0 && cfg_.preference_w <= 1.0))
    throw std::invalid_argument("preference_w must be in [0,1]");
}

Decision DecisionEngine::decide(const ContextKey& key) {
  const auto t0 = std::chrono::steady_clock::now();
  Decision out;
  double steps = 0.0;

  std::optional<CachedPlan> hit;
  if (cfg_.cache_enabled) hit = cache_.lookup(key, run_counter_);
  if (hit) {
    out.plan = std::move(hit->plan);
    out.source = DecisionSource::Cache;
    steps = static_cast<double>(out.plan.nodes.size());
  } else if (!graph_.all_measured()) {
    out.plan = exploration_path(graph_, rng_);
    out.source = DecisionSource::Random;
    steps = static_cast<double>(out.plan.nodes.size() - 1);
  } else {
    AcoParams p = cfg_.aco;
    p.seed = ant_stream(cfg_.aco.seed, static_cast<std::uint64_t>(solver_invocations_), 0xAC0)();
    SolveStats stats;
    ParetoArchive archive = cfg_.solver_threads == 1 ? solve_serial(graph_, p, &stats)
                                                     : solve(graph_, p, &stats, cfg_.solver_threads);
    ++solver_invocations_;
    out.plan = select_plan(graph_, archive, cfg_.preference_w);
    out.source = DecisionSource::Aco;
    out.archive = std::move(archive);
    steps = static_cast<double>(stats.construction_steps);
  }

  if (cfg_.clock == DecisionClock::Modeled) {
    out.decision_ms = steps * cfg_.decision_ms_per_step;
  } else {
    out.decision_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  spdlog::debug("decide {} run {}: {} plan [{}] in {:.4f} ms", key.to_string(), run_counter_,
                to_string(out.source), token_string(graph_, out.plan), out.decision_ms);
  return out;
}

void DecisionEngine::observe(const ExecutionTrace& trace) {
  if (trace.tokens.empty()) {
    ++run_counter_;
    return;
  }
  if (trace.surcharges.size() != trace.tokens.size() && !trace.surcharges.empty())
    throw TraceError("trace surcharges do not align with tokens");

  std::vector<std::pair<EdgeId, ObjectiveVector>> updates;
  NodeId current = graph_.start();
  for (std::size_t i = 0; i < trace.tokens.size(); ++i) {
    const std::string& tok = trace.tokens[i];
    std::optional<EdgeId> step;
    for (EdgeId e : graph_.out_edges(current)) {
      if (graph_.token(graph_.edge(e).to) == tok) step = e;
    }
    if (!step) {
      throw TraceError("token " + std::to_string(i) + " '" + tok + "' does not follow " +
                       graph_.token(current));
    }
    const NodeId next = graph_.edge(*step).to;
    auto cost = trace.per_method_costs.find(graph_.node(next).method);
    if (cost == trace.per_method_costs.end())
      throw TraceError("token " + std::to_string(i) + " '" + tok + "' has no measured cost");
    const ObjectiveVector surcharge = trace.surcharges.empty() ? ObjectiveVector{} : trace.surcharges[i];
    updates.emplace_back(*step, surcharge + cost->second);
    current = next;
  }
  const auto last = graph_.find_edge(current, graph_.end());
  if (!last) throw TraceError("trace stops at " + graph_.token(current) + " before the end");
  updates.emplace_back(*last, ObjectiveVector{});

  const double a = cfg_.ema_factor;
  for (const auto& [e, measured] : updates) {
    const DualEdge& ed = graph_.edge(e);
    ObjectiveVector w = measured;
    if (ed.measured && a < 1.0) {
      // old + a*(new - old) keeps a repeated observation exactly fixed
      w = {ed.weight.time_ms + a * (measured.time_ms - ed.weight.time_ms),
           ed.weight.cpu_units + a * (measured.cpu_units - ed.weight.cpu_units)};
    }
    graph_.set_weight(e, w, true);
  }
  ++run_counter_;
}

void DecisionEngine::cache_store(const ContextKey& key, const PathSolution& plan) {
  cache_.store(key, plan, token_string(graph_, plan), run_counter_);
}

std::optional<CachedPlan> DecisionEngine::cache_lookup(const ContextKey& key) {
  return cache_.lookup(key, run_counter_);
}

// ---------------------------------------------------------------------------

RunReport run_online(DecisionEngine& engine, const ContextKey& key, int n_runs,
                     const Executor& executor) {
  RunReport report;
  const std::int64_t solver_before = engine.solver_invocations();
  for (int r = 0; r < n_runs; ++r) {
    Decision decision = engine.decide(key);
    if (decision.source == DecisionSource::Aco && engine.config().cache_enabled)
      engine.cache_store(key, decision.plan);
    if (decision.source == DecisionSource::Cache) ++report.cache_hits;

    RunRecord row;
    row.run = r;
    row.plan = token_string(engine.graph(), decision.plan);
    row.decision_ms = decision.decision_ms;
    row.source = decision.source;
    try {
      ExecutionTrace trace = executor(engine.graph(), decision.plan, r);
      row.cost = trace.total;
      engine.observe(trace);
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
      engine.observe({});
    }
    report.rows.push_back(std::move(row));
  }
  report.solver_invocations = engine.solver_invocations() - solver_before;
  return report;
}

std::string run_report_csv(const RunReport& report) {
  std::string out = "run,plan,time_ms,cpu_units,decision_ms,source,status\n";
  for (const auto& r : report.rows) {
    out += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{},{}\n", r.run, r.plan, r.cost.time_ms,
                       r.cost.cpu_units, r.decision_ms, to_string(r.source),
                       r.ok ? "ok" : "error");
  }
  return out;
}

RunReport parse_run_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "run,plan,time_ms,cpu_units,decision_ms,source,status")
    throw ParseError("run report: unexpected header");
  RunReport report;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw ParseError("run report line " + std::to_string(lineno) + ": expected 7 fields");
    RunRecord r;
    try {
      r.run = std::stoi(f[0]);
      r.plan = f[1];
      r.cost = {std::stod(f[2]), std::stod(f[3])};
      r.decision_ms = std::stod(f[4]);
    } catch (const std::exception&) {
      throw ParseError("run report line " + std::to_string(lineno) + ": bad number");
    }
    if (f[5] == "cache") r.source = DecisionSource::Cache;
    else if (f[5] == "random") r.source = DecisionSource::Random;
    else if (f[5] == "aco") r.source = DecisionSource::Aco;
    else throw ParseError("run report line " + std::to_string(lineno) + ": bad source");
    r.ok = f[6] == "ok";
    if (r.source == DecisionSource::Cache) ++report.cache_hits;
    if (r.source == DecisionSource::Aco) ++report.solver_invocations;
    report.rows.push_back(std::move(r));
  }
  return report;
}

}  // namespace offload
