#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "offload/aco.hpp"
#include "offload/cost_sim.hpp"
#include "offload/decision_engine.hpp"
#include "offload/error.hpp"
#include "offload/experiment.hpp"
#include "offload/graph_io.hpp"
#include "offload/pareto.hpp"
#include "offload/rpc.hpp"

namespace fs = std::filesystem;
using namespace offload;

namespace {

enum Exit { kOk = 0, kUsage = 1, kExecutor = 2, kGraphState = 3 };

std::atomic<bool> g_stop{false};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("offload");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("OFFLOAD_ACO_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path + ": cannot write");
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::optional<bool> parse_on_off(const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  return std::nullopt;
}

// transform ------------------------------------------------------------------

struct TransformArgs {
  std::string graph;
  std::string out;
  std::optional<std::uint64_t> random_weights;
};

int cmd_transform(const TransformArgs& a) {
  DualPlacementGraph d = transform(collapse_recursion(load_callgraph(a.graph)));
  if (a.random_weights) {
    Rng rng = ant_stream(*a.random_weights, 0, 0);
    assign_random_weights(d, rng);
  }
  write_output(a.out, to_json(d).dump(2) + "\n");
  return kOk;
}

// solve ----------------------------------------------------------------------

struct SolveArgs {
  std::string graph;
  std::string params;
  bool oracle = false;
  int threads = 1;
  std::optional<std::uint64_t> seed;
};

int cmd_solve(const SolveArgs& a) {
  const nlohmann::json doc = read_json_file(a.graph);
  const DualPlacementGraph d = is_dualgraph_document(doc)
                                   ? dualgraph_from_json(doc)
                                   : transform(collapse_recursion(callgraph_from_json(doc)));
  if (!d.all_measured()) {
    std::cerr << fmt::format("error: {} has {} unmeasured edges; run the engine or weight the graph first\n",
                             a.graph, d.unmeasured_count());
    return kGraphState;
  }

  AcoParams p = a.params.empty() ? AcoParams{} : load_aco_params(a.params);
  if (a.seed) p.seed = *a.seed;
  const ParetoArchive front = a.oracle ? pareto_front(d)
                              : a.threads == 1 ? solve_serial(d, p)
                                               : solve(d, p, nullptr, a.threads);

  std::vector<PathSolution> sorted(front.solutions().begin(), front.solutions().end());
  std::vector<std::string> tokens;
  for (const auto& s : sorted) tokens.push_back(token_string(d, s));
  std::vector<std::size_t> order(sorted.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return std::tie(sorted[x].cost.time_ms, sorted[x].cost.cpu_units, tokens[x]) <
           std::tie(sorted[y].cost.time_ms, sorted[y].cost.cpu_units, tokens[y]);
  });
  for (std::size_t i : order)
    std::cout << fmt::format("{}  ({}, {})\n", tokens[i], sorted[i].cost.time_ms, sorted[i].cost.cpu_units);
  return kOk;
}

// decide ---------------------------------------------------------------------

struct DecideArgs {
  std::string graph;
  std::string benchmark;
  double size = 0.0;
  std::string network = "medium";
  int runs = 1;
  std::uint64_t seed = 1;
  std::string cache = "on";
  int invalidate_every = 0;
  std::string params;
  std::string out;
};

int cmd_decide(const DecideArgs& a) {
  CallGraph instance;
  std::string app;
  double input = a.size;
  if (!a.benchmark.empty()) {
    const auto series = default_series(a.benchmark);
    if (input == 0.0) input = series.front();
    instance = gen_benchmark(a.benchmark, input).graph;
    app = a.benchmark;
  } else {
    instance = collapse_recursion(load_callgraph(a.graph));
    app = fs::path(a.graph).stem().string();
  }

  EngineConfig cfg;
  if (!a.params.empty()) cfg.aco = load_aco_params(a.params);
  cfg.seed = a.seed;
  const auto cache = parse_on_off(a.cache);
  if (!cache) throw CLI::ValidationError("--cache", "expected on or off");
  cfg.cache_enabled = *cache;
  cfg.invalidation_period = a.invalidate_every;

  SimConfig sim;
  sim.network = network_preset(a.network);
  DecisionEngine engine(instance, cfg);
  const auto key = ContextKey::make(app, input, sim.network.bandwidth);
  const RunReport report =
      run_online(engine, key, a.runs, [&](const DualPlacementGraph& d, const PathSolution& p, int r) {
        Rng rng = ant_stream(a.seed, 1, static_cast<std::uint64_t>(r));
        return simulate(plan_placements(d, p), instance, sim, rng);
      });
  write_output(a.out, run_report_csv(report));
  return kOk;
}

// bench ----------------------------------------------------------------------

struct BenchArgs {
  std::string spec;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::string cache;
  std::optional<int> invalidate_every;
  std::string executor;
  std::string out;
  std::optional<int> threads;
};

int cmd_bench(const BenchArgs& a) {
  ExperimentSpec spec = a.spec.empty() ? ExperimentSpec{} : load_experiment(a.spec);
  if (a.seed) spec.seed = *a.seed;
  if (a.runs) spec.runs_per_series = *a.runs;
  if (!a.cache.empty()) {
    const auto cache = parse_on_off(a.cache);
    if (!cache) throw CLI::ValidationError("--cache", "expected on or off");
    spec.engine.cache_enabled = *cache;
  }
  if (a.invalidate_every) spec.engine.invalidation_period = *a.invalidate_every;
  if (a.executor == "sim") spec.executor = ExecutorKind::Sim;
  else if (a.executor == "rpc") spec.executor = ExecutorKind::Rpc;
  if (!a.out.empty()) spec.output = a.out;
  if (a.threads) spec.threads = *a.threads;
  spec.validate();

  std::vector<SeriesRow> rows;
  try {
    rows = run_bench(spec);
  } catch (const RpcError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExecutor;
  }
  write_output(spec.output, bench_csv(rows));
  return kOk;
}

// serve ----------------------------------------------------------------------

struct ServeArgs {
  std::string benchmark = "montecarlo";
  std::string host = "127.0.0.1";
  int port = 8080;
  double ms_per_work = 0.01;
  double slowdown = 10.0;
  double delay_ms = 5.0;
};

int cmd_serve(const ServeArgs& a) {
  const Workload w = gen_benchmark(a.benchmark, default_series(a.benchmark).front());
  auto registry = std::make_shared<MethodRegistry>(registry_for(w));
  registry->add("identity", *identity_registry().find("identity"));
  RemoteEndpoint ep{a.host, a.port, "/offload", a.slowdown, a.delay_ms};
  auto server = serve(registry, ep, a.ms_per_work);
  std::cerr << fmt::format("serving {} on http://{}:{}/offload/invoke/<method>\n", a.benchmark,
                           a.host, server->port());
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server->stop();
  std::cerr << fmt::format("served {} requests\n", server->requests_served());
  return kOk;
}

// report ---------------------------------------------------------------------

int cmd_report(const std::string& path) {
  const std::string text = read_text(path);
  if (text.rfind("device,benchmark,series,", 0) == 0) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      std::string row;
      for (const auto& c : cells) row += fmt::format("{:>15}", c);
      std::cout << row << "\n";
    }
    return kOk;
  }
  const RunReport report = parse_run_report_csv(text);
  int errors = 0, cache_hits = 0, solver = 0;
  for (const auto& r : report.rows) {
    errors += r.ok ? 0 : 1;
    cache_hits += r.source == DecisionSource::Cache ? 1 : 0;
    solver += r.source == DecisionSource::Aco ? 1 : 0;
  }
  std::cout << fmt::format("runs {}\nerrors {}\nsolver_decisions {}\ncache_hits {}\n",
                           report.rows.size(), errors, solver, cache_hits);
  if (report.rows.size() > static_cast<std::size_t>(errors))
    std::cout << fmt::format("overhead_pct {:.4f}\n", 100.0 * measure_overhead(report));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Bi-objective offloading decision engine"};
  app.require_subcommand(1);

  TransformArgs ta;
  auto* transform_cmd = app.add_subcommand("transform", "Call graph -> dual-placement graph JSON");
  transform_cmd->add_option("--graph", ta.graph, "Call-graph JSON")->required()->check(CLI::ExistingFile);
  transform_cmd->add_option("--out", ta.out, "Output file (default stdout)");
  transform_cmd->add_option("--random-weights", ta.random_weights,
                            "Fill every edge with seeded random measured weights");

  SolveArgs sa;
  auto* solve_cmd = app.add_subcommand("solve", "Print the Pareto front of a weighted graph");
  solve_cmd->add_option("--graph", sa.graph, "Dual-graph JSON")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--params", sa.params, "ACO parameters (key=value or JSON)")->check(CLI::ExistingFile);
  solve_cmd->add_flag("--oracle", sa.oracle, "Exhaustive enumeration instead of ACO");
  solve_cmd->add_option("--threads", sa.threads, "Ant construction threads")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--seed", sa.seed, "Override the ACO seed");

  DecideArgs da;
  auto* decide_cmd = app.add_subcommand("decide", "Run the online engine against the simulator");
  auto* graph_opt = decide_cmd->add_option("--graph", da.graph, "Call-graph JSON")->check(CLI::ExistingFile);
  auto* bench_opt = decide_cmd->add_option("--benchmark", da.benchmark, "Built-in benchmark");
  graph_opt->excludes(bench_opt);
  decide_cmd->add_option("--size", da.size, "Benchmark input size");
  decide_cmd->add_option("--network", da.network, "good|medium|poor")
      ->check(CLI::IsMember({"good", "medium", "poor"}));
  decide_cmd->add_option("--runs", da.runs, "Runs")->check(CLI::PositiveNumber);
  decide_cmd->add_option("--seed", da.seed, "Seed");
  decide_cmd->add_option("--cache", da.cache, "on|off");
  decide_cmd->add_option("--invalidate-every", da.invalidate_every, "Cache invalidation period")
      ->check(CLI::NonNegativeNumber);
  decide_cmd->add_option("--params", da.params, "ACO parameters")->check(CLI::ExistingFile);
  decide_cmd->add_option("--out", da.out, "Run report CSV (default stdout)");

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "Run an experiment and write the summary CSV");
  bench_cmd->add_option("--spec", ba.spec, "Experiment JSON")->check(CLI::ExistingFile);
  bench_cmd->add_option("--seed", ba.seed, "Seed");
  bench_cmd->add_option("--runs", ba.runs, "Runs per series")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--cache", ba.cache, "on|off");
  bench_cmd->add_option("--invalidate-every", ba.invalidate_every, "Cache invalidation period")
      ->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--executor", ba.executor, "sim|rpc")->check(CLI::IsMember({"sim", "rpc"}));
  bench_cmd->add_option("--out", ba.out, "Output CSV (default: spec output or stdout)");
  bench_cmd->add_option("--threads", ba.threads, "Parallel jobs")->check(CLI::PositiveNumber);

  ServeArgs va;
  auto* serve_cmd = app.add_subcommand("serve", "Serve workload methods over loopback HTTP");
  serve_cmd->add_option("--benchmark", va.benchmark, "Workload whose methods are exposed");
  serve_cmd->add_option("--host", va.host, "Bind address");
  serve_cmd->add_option("--port", va.port, "Port (0 picks a free one)");
  serve_cmd->add_option("--ms-per-work", va.ms_per_work, "Emulated device ms per work unit");
  serve_cmd->add_option("--slowdown", va.slowdown, "Server speed-up divisor")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--delay-ms", va.delay_ms, "Extra delay per request");

  std::string report_path;
  auto* report_cmd = app.add_subcommand("report", "Summarize a run report or bench CSV");
  report_cmd->add_option("file", report_path, "CSV file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*transform_cmd) return cmd_transform(ta);
    if (*solve_cmd) return cmd_solve(sa);
    if (*decide_cmd) {
      if (da.graph.empty() && da.benchmark.empty()) {
        std::cerr << "error: decide needs --graph or --benchmark\n";
        return kUsage;
      }
      return cmd_decide(da);
    }
    if (*bench_cmd) return cmd_bench(ba);
    if (*serve_cmd) return cmd_serve(va);
    if (*report_cmd) return cmd_report(report_path);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kGraphState;
  } catch (const RpcError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExecutor;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
