#include "offload/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <omp.h>

#include "offload/error.hpp"

namespace offload {

namespace {

const std::set<std::string> kSpecKeys = {
    "benchmark", "benchmarks", "workloads", "series",   "runs_per_series", "device",
    "devices",   "server",     "network",   "kappa",    "aco",             "engine",
    "cache",     "offloading", "executor",  "rpc",      "seed",            "output",
    "threads"};

template <class T>
T field(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(where + "." + key + ": wrong type");
  }
}

EngineConfig engine_from_json(const nlohmann::json& j, EngineConfig cfg) {
  if (!j.is_object()) throw ParseError("engine: expected an object");
  cfg.preference_w = field(j, "preference_w", cfg.preference_w, "engine");
  cfg.ema_factor = field(j, "ema_factor", cfg.ema_factor, "engine");
  cfg.solver_threads = field(j, "solver_threads", cfg.solver_threads, "engine");
  cfg.decision_ms_per_step = field(j, "decision_ms_per_step", cfg.decision_ms_per_step, "engine");
  const std::string clock = field<std::string>(j, "clock", "modeled", "engine");
  if (clock == "modeled") cfg.clock = DecisionClock::Modeled;
  else if (clock == "wall") cfg.clock = DecisionClock::WallClock;
  else throw ParseError("engine.clock: expected \"modeled\" or \"wall\"");
  if (!(cfg.ema_factor > 0 && cfg.ema_factor <= 1)) throw ParseError("engine.ema_factor: must be in (0, 1]");
  if (cfg.preference_w < 0 || cfg.preference_w > 1) throw ParseError("engine.preference_w: must be in [0, 1]");
  if (cfg.solver_threads < 1) throw ParseError("engine.solver_threads: must be >= 1");
  return cfg;
}

RpcSettings rpc_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("rpc: expected an object");
  RpcSettings r;
  r.host = field(j, "host", r.host, "rpc");
  r.port = field(j, "port", r.port, "rpc");
  r.ms_per_work = field(j, "ms_per_work", r.ms_per_work, "rpc");
  r.slowdown = field(j, "slowdown", r.slowdown, "rpc");
  r.delay_ms = field(j, "delay_ms", r.delay_ms, "rpc");
  r.timeout_s = field(j, "timeout_s", r.timeout_s, "rpc");
  if (r.ms_per_work < 0 || !(r.slowdown > 0) || r.delay_ms < 0 || !(r.timeout_s > 0))
    throw ParseError("rpc: need ms_per_work >= 0, slowdown > 0, delay_ms >= 0, timeout_s > 0");
  return r;
}

struct Job {
  std::size_t benchmark = 0;
  std::size_t device = 0;
};

Workload resolve_workload(const ExperimentSpec& spec, const std::string& name) {
  for (const auto& w : spec.workloads)
    if (w.name == name) return w;
  const auto series = default_series(name);
  return gen_benchmark(name, series.front());
}

// Executes one (benchmark, device) job over all its series.
class JobRunner {
 public:
  JobRunner(const ExperimentSpec& spec, const Job& job, std::uint64_t job_seed)
      : spec_(spec),
        workload_(resolve_workload(spec, spec.benchmarks[job.benchmark])),
        device_(spec.devices[job.device]),
        job_seed_(job_seed) {
    if (spec_.executor == ExecutorKind::Rpc) start_rpc();
  }

  std::vector<SeriesRow> run() {
    std::optional<DecisionEngine> engine;
    if (spec_.offloading) {
      EngineConfig cfg = spec_.engine;
      cfg.seed = job_seed_;
      if (spec_.executor == ExecutorKind::Rpc) cfg.clock = DecisionClock::WallClock;
      engine.emplace(workload_.graph, cfg);
    }
    const auto& series = spec_.series.empty() ? workload_.series : spec_.series;
    std::vector<SeriesRow> rows;
    for (std::size_t si = 0; si < series.size(); ++si)
      rows.push_back(run_series(engine ? &*engine : nullptr, si, series[si]));
    return rows;
  }

 private:
  void start_rpc() {
    registry_ = std::make_shared<MethodRegistry>(registry_for(workload_));
    RemoteEndpoint ep{spec_.rpc.host, spec_.rpc.port, "/offload", spec_.rpc.slowdown,
                      spec_.rpc.delay_ms};
    if (ep.port == 0) {
      server_ = serve(registry_, ep, spec_.rpc.ms_per_work);
      ep.port = server_->port();
    }
    endpoint_ = ep;
    const std::string entry = workload_.model(workload_.entry).name;
    try {
      invoke_remote(endpoint_, entry, make_payload(workload_.series.front()), "probe",
                    spec_.rpc.timeout_s);
    } catch (const RpcError& e) {
      throw RpcError(fmt::format("rpc executor unavailable at {}:{}: {}", endpoint_.host,
                                 endpoint_.port, e.what()));
    }
  }

  SimConfig sim_config() const {
    return {device_, spec_.server, spec_.network, spec_.kappa};
  }

  ExecutionTrace execute(std::span<const PlacedMethod> plan, const CallGraph& instance,
                         double size, Rng& rng, bool remote_allowed, int run) const {
    if (spec_.executor == ExecutorKind::Sim) return simulate(plan, instance, sim_config(), rng);
    RpcRunOptions opts;
    opts.ms_per_work = spec_.rpc.ms_per_work / device_.cpu_speed;
    opts.kappa = spec_.kappa;
    opts.run_id = fmt::format("{}-{}-{}", workload_.name, size, run);
    opts.timeout_s = spec_.rpc.timeout_s;
    return run_plan(plan, *registry_, remote_allowed ? &endpoint_ : nullptr, make_payload(size),
                    opts)
        .trace;
  }

  SeriesRow run_series(DecisionEngine* engine, std::size_t si, double size) {
    const CallGraph instance = workload_.instance(size);
    const auto local_plan = all_local_plan(instance);
    const int n = spec_.runs_per_series;

    std::vector<ExecutionTrace> local(n);
    auto local_run = [&](int r) {
      Rng rng = ant_stream(job_seed_, si, 2 * static_cast<std::uint64_t>(r));
      local[r] = execute(local_plan, instance, size, rng, false, r);
    };

    RunReport report;
    if (engine != nullptr) {
      const auto key = ContextKey::make(workload_.name, size, spec_.network.bandwidth);
      report = run_online(*engine, key, n,
                          [&](const DualPlacementGraph& d, const PathSolution& p, int r) {
                            local_run(r);
                            Rng rng = ant_stream(job_seed_, si, 2 * static_cast<std::uint64_t>(r) + 1);
                            return execute(plan_placements(d, p), instance, size, rng, true, r);
                          });
    } else {
      for (int r = 0; r < n; ++r) {
        local_run(r);
        RunRecord row;
        row.run = r;
        row.plan = token_string(local_plan);
        row.cost = local[r].total;
        report.rows.push_back(row);
      }
    }

    SeriesRow out;
    out.device = device_.label;
    out.benchmark = workload_.name;
    out.series = size;
    int successes = 0, measured = 0;
    double time_gain = 0.0, cpu_gain = 0.0;
    for (const auto& row : report.rows) {
      if (!row.ok) continue;
      const auto& base = local[row.run].total;
      ++measured;
      if (row.cost.time_ms < base.time_ms) ++successes;
      if (base.time_ms > 0) time_gain += (base.time_ms - row.cost.time_ms) / base.time_ms * 100.0;
      if (base.cpu_units > 0) cpu_gain += (base.cpu_units - row.cost.cpu_units) / base.cpu_units * 100.0;
    }
    out.success_pct = 100.0 * successes / n;
    out.time_gain_pct = measured > 0 ? time_gain / measured : 0.0;
    out.cpu_gain_pct = measured > 0 ? cpu_gain / measured : 0.0;
    out.overhead_pct = measured > 0 ? 100.0 * measure_overhead(report) : 0.0;
    out.cache_hit_pct = 100.0 * report.cache_hits / n;
    out.solver_invocations = report.solver_invocations;
    return out;
  }

  const ExperimentSpec& spec_;
  Workload workload_;
  DeviceProfile device_;
  std::uint64_t job_seed_;
  std::shared_ptr<MethodRegistry> registry_;
  std::unique_ptr<RpcServer> server_;
  RemoteEndpoint endpoint_;
};

}  // namespace

void ExperimentSpec::validate() const {
  if (benchmarks.empty()) throw ParseError("benchmarks: must not be empty");
  if (runs_per_series < 1) throw ParseError("runs_per_series: must be >= 1");
  if (devices.empty()) throw ParseError("devices: must not be empty");
  for (const auto& s : series)
    if (!(s > 0)) throw ParseError("series: sizes must be > 0");
  for (const auto& b : benchmarks) {
    const bool custom = std::any_of(workloads.begin(), workloads.end(),
                                    [&](const Workload& w) { return w.name == b; });
    if (custom) continue;
    const auto names = benchmark_names();
    if (std::find(names.begin(), names.end(), b) == names.end())
      throw ParseError("benchmarks: unknown benchmark " + b);
  }
  if (kappa < 0) throw ParseError("kappa: must be >= 0");
  engine.aco.validate();
}

ExperimentSpec experiment_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("experiment: expected an object");
  for (const auto& [key, value] : j.items())
    if (!kSpecKeys.contains(key)) throw ParseError("experiment: unknown field " + key);

  ExperimentSpec s;
  const std::string where = "experiment";
  if (j.contains("workloads")) {
    for (const auto& w : j.at("workloads")) s.workloads.push_back(workload_from_json(w));
  }
  if (j.contains("benchmark")) s.benchmarks = {field<std::string>(j, "benchmark", "", where)};
  if (j.contains("benchmarks")) s.benchmarks = field(j, "benchmarks", s.benchmarks, where);
  s.series = field(j, "series", s.series, where);
  s.runs_per_series = field(j, "runs_per_series", s.runs_per_series, where);
  if (j.contains("device")) s.devices = {device_from_json(j.at("device"))};
  if (j.contains("devices")) {
    s.devices.clear();
    for (const auto& d : j.at("devices")) s.devices.push_back(device_from_json(d));
  }
  if (j.contains("server")) s.server = device_from_json(j.at("server"));
  if (j.contains("network")) s.network = network_from_json(j.at("network"));
  s.kappa = field(j, "kappa", s.kappa, where);
  if (j.contains("aco")) {
    try {
      s.engine.aco = aco_params_from_json(j.at("aco"));
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("aco: ") + e.what());
    }
  }
  if (j.contains("engine")) s.engine = engine_from_json(j.at("engine"), s.engine);
  if (j.contains("cache")) {
    const auto& c = j.at("cache");
    if (c.is_boolean()) {
      s.engine.cache_enabled = c.get<bool>();
    } else if (c.is_object()) {
      s.engine.cache_enabled = field(c, "enabled", true, "cache");
      s.engine.invalidation_period = field(c, "invalidation_period", 0, "cache");
      if (s.engine.invalidation_period < 0) throw ParseError("cache.invalidation_period: must be >= 0");
    } else {
      throw ParseError("cache: expected a boolean or an object");
    }
  }
  s.offloading = field(j, "offloading", s.offloading, where);
  const std::string exec = field<std::string>(j, "executor", "sim", where);
  if (exec == "sim") s.executor = ExecutorKind::Sim;
  else if (exec == "rpc") s.executor = ExecutorKind::Rpc;
  else throw ParseError("executor: expected \"sim\" or \"rpc\"");
  if (j.contains("rpc")) s.rpc = rpc_from_json(j.at("rpc"));
  s.seed = field(j, "seed", s.seed, where);
  s.output = field(j, "output", s.output, where);
  s.threads = field(j, "threads", s.threads, where);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("aco: ") + e.what());
  }
  return s;
}

ExperimentSpec load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  try {
    return experiment_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::vector<SeriesRow> run_bench(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<Job> jobs;
  for (std::size_t b = 0; b < spec.benchmarks.size(); ++b)
    for (std::size_t d = 0; d < spec.devices.size(); ++d) jobs.push_back({b, d});

  std::vector<std::vector<SeriesRow>> results(jobs.size());
  auto run_job = [&](std::size_t i) {
    const std::uint64_t job_seed = ant_stream(spec.seed, i, 0xBE7C)();
    results[i] = JobRunner(spec, jobs[i], job_seed).run();
  };

  if (spec.executor == ExecutorKind::Rpc) {
    // Wall-clock measurements; concurrent jobs would disturb each other.
    for (std::size_t i = 0; i < jobs.size(); ++i) run_job(i);
  } else {
    const int workers = spec.threads > 0 ? spec.threads : omp_get_max_threads();
    std::vector<std::exception_ptr> errors(jobs.size());
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      try {
        run_job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<SeriesRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  std::stable_sort(rows.begin(), rows.end(), [](const SeriesRow& a, const SeriesRow& b) {
    return std::tie(a.device, a.benchmark, a.series) < std::tie(b.device, b.benchmark, b.series);
  });
  return rows;
}

std::string bench_csv(const std::vector<SeriesRow>& rows) {
  std::string out =
      "device,benchmark,series,success_pct,time_gain_pct,cpu_gain_pct,overhead_pct,cache_hit_pct\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f}\n", r.device, r.benchmark,
                       r.series, r.success_pct, r.time_gain_pct, r.cpu_gain_pct, r.overhead_pct,
                       r.cache_hit_pct);
  }
  return out;
}

}  // namespace offload
