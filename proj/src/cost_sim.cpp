#include "offload/cost_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "offload/error.hpp"

namespace offload {

DeviceProfile default_device() { return {1.0, "device"}; }
DeviceProfile default_server() { return {10.0, "server"}; }

NetworkProfile network_preset(std::string_view name) {
  if (name == "good") return {50000.0, 20.0, 0.1, "good"};
  if (name == "medium") return {5000.0, 60.0, 0.1, "medium"};
  if (name == "poor") return {500.0, 200.0, 0.1, "poor"};
  throw std::invalid_argument("unknown network preset: " + std::string(name));
}

namespace {

double noise_factor(double jitter, Rng& rng) {
  if (jitter == 0.0) return 1.0;
  std::normal_distribution<double> normal(0.0, 1.0);
  return std::max(1e-3, 1.0 + jitter * normal(rng));
}

}  // namespace

ExecutionTrace simulate(std::span<const PlacedMethod> plan, const CallGraph& instance,
                        const SimConfig& cfg, Rng& rng) {
  ExecutionTrace trace;
  const double jitter = cfg.network.jitter;
  Placement previous = Placement::Local;
  for (const PlacedMethod& step : plan) {
    const MethodNode* m = instance.find(step.method);
    if (m == nullptr) throw TraceError("plan names unknown method " + std::to_string(step.method));

    ObjectiveVector surcharge;
    ObjectiveVector cost;
    if (step.placement == Placement::Local) {
      cost.time_ms = m->work_units / cfg.device.cpu_speed * noise_factor(jitter, rng);
      cost.cpu_units = m->work_units;
    } else {
      if (m->pinned_local) throw TraceError("pinned method " + m->name + " placed remotely");
      const double bytes = static_cast<double>(m->bytes_in + m->bytes_out);
      if (previous == Placement::Local)
        surcharge.time_ms = cfg.network.rtt_ms * noise_factor(jitter, rng);
      cost.time_ms = (m->work_units / cfg.server.cpu_speed + bytes / cfg.network.bandwidth) *
                     noise_factor(jitter, rng);
      cost.cpu_units = cfg.kappa * bytes;
    }
    previous = step.placement;

    trace.tokens.push_back(step.token());
    trace.per_method_costs[step.method] = cost;
    trace.surcharges.push_back(surcharge);
    trace.total += surcharge + cost;
  }
  return trace;
}

bool success(const ExecutionTrace& local_trace, const ExecutionTrace& offload_trace) {
  return offload_trace.total.time_ms < local_trace.total.time_ms;
}

// ---------------------------------------------------------------------------

double cofactor_multiplications(int n) {
  double m = 0.0;
  for (int k = 2; k <= n; ++k) m = k * (m + 1.0);
  return m;
}

double ScalingTerm::operator()(double s) const {
  switch (kind) {
    case Kind::Power:
      return rate == 0.0 ? coeff : coeff * std::pow(s, rate);
    case Kind::Exp:
      return coeff * std::exp(rate * s);
    case Kind::Cofactor:
      return coeff * cofactor_multiplications(static_cast<int>(std::lround(s)));
  }
  return 0.0;
}

double ScalingLaw::operator()(double s) const {
  double total = 0.0;
  for (const auto& t : terms) total += t(s);
  return total;
}

const MethodModel& Workload::model(MethodId id) const {
  auto it = std::find_if(methods.begin(), methods.end(),
                         [id](const MethodModel& m) { return m.id == id; });
  if (it == methods.end()) throw std::out_of_range("no method " + std::to_string(id));
  return *it;
}

CallGraph Workload::instance(double input) const {
  CallGraph g;
  for (const auto& m : methods) {
    g.methods.push_back({m.id, m.name, m.work(input),
                         static_cast<std::uint64_t>(std::llround(m.bytes_in(input))),
                         static_cast<std::uint64_t>(std::llround(m.bytes_out(input))), m.pinned});
  }
  g.calls = calls;
  g.entry = entry;
  g.exit = exit;
  return g;
}

Workload finalize_workload(Workload w) {
  const CallGraph raw = w.instance(w.size);
  const auto rep = scc_representatives(raw);

  std::vector<MethodModel> merged;
  for (const auto& m : w.methods) {
    if (rep.at(m.id) != m.id) continue;
    MethodModel out = m;
    for (const auto& other : w.methods) {
      if (other.id == m.id || rep.at(other.id) != m.id) continue;
      out.name += '+' + other.name;
      out.pinned = out.pinned || other.pinned;
      out.work.terms.insert(out.work.terms.end(), other.work.terms.begin(),
                            other.work.terms.end());
    }
    merged.push_back(std::move(out));
  }
  const CallGraph collapsed = collapse_recursion(raw);
  w.methods = std::move(merged);
  w.calls = collapsed.calls;
  w.entry = collapsed.entry;
  w.exit = collapsed.exit;
  w.graph = w.instance(w.size);
  execution_order(w.graph);  // validates structure
  return w;
}

namespace {

using K = ScalingTerm::Kind;

ScalingLaw law(std::initializer_list<ScalingTerm> terms) { return {terms}; }
ScalingTerm pw(double c, double r) { return {K::Power, c, r}; }
ScalingTerm ex(double c, double r) { return {K::Exp, c, r}; }
ScalingTerm cof(double c) { return {K::Cofactor, c, 0.0}; }
ScalingLaw flat(double c) { return ScalingLaw::constant(c); }

MethodModel method(MethodId id, std::string name, bool pinned, ScalingLaw work, ScalingLaw in,
                   ScalingLaw out) {
  return {id, std::move(name), pinned, std::move(work), std::move(in), std::move(out)};
}

constexpr std::array<std::string_view, 6> kBenchmarks{"fib",       "matmul",     "det",
                                                      "integrate", "montecarlo", "facerec"};

Workload raw_benchmark(std::string_view name) {
  Workload w;
  w.name = std::string(name);
  w.entry = 0;
  if (name == "fib") {
    // Repeats one cheap operation; fib <-> fib_step recursion.
    w.methods = {method(0, "main", true, flat(2), flat(0), flat(0)),
                 method(1, "fib", false, law({pw(55, 0), pw(0.01, 1)}), flat(16), flat(16)),
                 method(2, "fib_step", false, law({pw(0.004, 1)}), flat(16), flat(16))};
    w.calls = {{0, 1}, {1, 2}, {2, 1}};
    w.exit = 1;
    w.series = {500, 800, 1100, 1500};
  } else if (name == "matmul") {
    w.methods = {method(0, "main", true, flat(2), flat(0), flat(0)),
                 method(1, "make_matrices", false, law({pw(2, 0), pw(0.002, 2)}), flat(16),
                        law({pw(16, 2)})),
                 method(2, "multiply", false, law({pw(40, 0), pw(1e-4, 3)}), law({pw(16, 2)}),
                        law({pw(8, 2)}))};
    w.calls = {{0, 1}, {0, 2}};
    w.exit = 2;
    w.series = {50, 60, 70, 80};
  } else if (name == "det") {
    // determinant <-> minor recursion (cofactor expansion).
    w.methods = {method(0, "main", true, flat(2), flat(0), flat(0)),
                 method(1, "read_matrix", false, law({pw(1, 0), pw(0.5, 2)}), flat(16),
                        law({pw(8, 2)})),
                 method(2, "determinant", false, law({cof(80)}), law({pw(8, 2)}), flat(8)),
                 method(3, "minor", false, law({cof(20)}), law({pw(8, 2)}), law({pw(8, 2)})),
                 method(4, "show_result", true, flat(1), flat(8), flat(0))};
    w.calls = {{0, 1}, {0, 2}, {2, 3}, {3, 2}, {0, 4}};
    w.exit = 4;
    w.series = {2, 3, 4, 5};
  } else if (name == "integrate") {
    w.methods = {method(0, "main", true, flat(2), flat(0), flat(0)),
                 method(1, "integrate", false, law({ex(20, 1.5)}), flat(32), flat(32)),
                 method(2, "sample_points", false, law({ex(6, 1.5)}), flat(32), law({pw(800, 1)})),
                 method(3, "evaluate", false, law({ex(60, 1.5)}), law({pw(800, 1)}), flat(32))};
    w.calls = {{0, 1}, {1, 2}, {1, 3}};
    w.exit = 3;
    w.series = {1.0, 1.5, 2.25, 3.0};
  } else if (name == "montecarlo") {
    w.methods = {
        method(0, "main", true, flat(2), flat(0), flat(0)),
        method(1, "parse_args", false, flat(1), flat(32), flat(32)),
        method(2, "seed_rng", false, flat(2), flat(32), flat(64)),
        method(3, "simulate_paths", false, law({pw(30, 1.5)}), flat(64), law({pw(400, 1)})),
        method(4, "evaluate_moves", false, law({pw(5, 1.5)}), law({pw(400, 1)}), law({pw(80, 1)})),
        method(5, "aggregate", false, law({pw(2, 1)}), law({pw(80, 1)}), flat(64)),
        method(6, "best_move", false, flat(1), flat(64), flat(16)),
        method(7, "show_result", true, flat(1), flat(16), flat(0))};
    w.calls = {{0, 1}, {0, 2}, {0, 3}, {3, 4}, {0, 5}, {5, 6}, {0, 7}};
    w.exit = 7;
    w.series = {10, 20, 30, 40};
  } else if (name == "facerec") {
    w.methods = {
        method(0, "main", true, flat(2), flat(0), flat(0)),
        method(1, "load_probe", false, flat(5), flat(16), flat(10000)),
        method(2, "to_grayscale", false, law({pw(20, 1)}), flat(10000), flat(4000)),
        method(3, "normalize", false, law({pw(10, 1)}), flat(4000), flat(4000)),
        method(4, "load_training", false, law({pw(30, 1)}), flat(16), law({pw(40000, 1)})),
        method(5, "compute_mean_face", false, law({pw(40, 1)}), law({pw(40000, 1)}), flat(4000)),
        method(6, "compute_eigenfaces", false, law({pw(300, 1.3)}), law({pw(40000, 1)}),
               law({pw(20000, 1)})),
        method(7, "project_training", false, law({pw(150, 1.2)}), law({pw(40000, 1)}),
               law({pw(2000, 1)})),
        method(8, "project_probe", false, law({pw(20, 1)}), law({pw(20000, 1)}), flat(400)),
        method(9, "nearest_match", false, law({pw(15, 1)}), law({pw(2000, 1)}), flat(64)),
        method(10, "confidence", false, flat(3), flat(64), flat(32)),
        method(11, "display", true, flat(2), flat(32), flat(0))};
    w.calls = {{0, 1}, {1, 2}, {2, 3}, {0, 4}, {4, 5}, {5, 6},
               {6, 7}, {0, 8}, {8, 9}, {9, 10}, {0, 11}};
    w.exit = 11;
    w.series = {1, 2, 3, 4};
  } else {
    throw std::invalid_argument("unknown benchmark: " + std::string(name));
  }
  return w;
}

}  // namespace

std::span<const std::string_view> benchmark_names() { return kBenchmarks; }

std::vector<double> default_series(std::string_view name) { return raw_benchmark(name).series; }

Workload gen_benchmark(std::string_view name, double size) {
  Workload w = raw_benchmark(name);
  if (size < w.series.front() || size > w.series.back()) {
    throw std::invalid_argument("size " + std::to_string(size) + " outside the " + w.name +
                                " series range");
  }
  w.size = size;
  return finalize_workload(std::move(w));
}

// ---------------------------------------------------------------------------

namespace {

ScalingLaw law_from_json(const nlohmann::json& j, const std::string& where) {
  if (j.is_number()) {
    if (j.get<double>() < 0) throw ParseError(where + ": must be >= 0");
    return ScalingLaw::constant(j.get<double>());
  }
  if (!j.is_array()) throw ParseError(where + ": expected a number or a list of terms");
  ScalingLaw out;
  for (const auto& t : j) {
    if (!t.is_object()) throw ParseError(where + ": term must be an object");
    const std::string kind = t.value("kind", "power");
    ScalingTerm term;
    if (kind == "power") term.kind = K::Power;
    else if (kind == "exp") term.kind = K::Exp;
    else if (kind == "cofactor") term.kind = K::Cofactor;
    else throw ParseError(where + ": unknown term kind " + kind);
    term.coeff = t.value("coeff", 0.0);
    term.rate = t.value("rate", 0.0);
    if (term.coeff < 0 || term.rate < 0) throw ParseError(where + ": coeff and rate must be >= 0");
    out.terms.push_back(term);
  }
  return out;
}

}  // namespace

Workload workload_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("workload: expected an object");
  Workload w;
  try {
    w.name = j.at("name").get<std::string>();
    for (std::size_t i = 0; i < j.at("methods").size(); ++i) {
      const auto& m = j.at("methods")[i];
      const std::string where = "workload.methods[" + std::to_string(i) + "]";
      w.methods.push_back(method(m.at("id").get<MethodId>(), m.at("name").get<std::string>(),
                                 m.value("pinned", false), law_from_json(m.at("work"), where + ".work"),
                                 law_from_json(m.value("bytes_in", nlohmann::json(0)), where + ".bytes_in"),
                                 law_from_json(m.value("bytes_out", nlohmann::json(0)), where + ".bytes_out")));
    }
    for (const auto& c : j.at("calls")) w.calls.push_back({c.at(0).get<MethodId>(), c.at(1).get<MethodId>()});
    w.entry = j.at("entry").get<MethodId>();
    w.exit = j.at("exit").get<MethodId>();
    w.series = j.at("series").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("workload: ") + e.what());
  }
  if (w.series.empty()) throw ParseError("workload.series: must not be empty");
  w.size = w.series.front();
  try {
    return finalize_workload(std::move(w));
  } catch (const GraphError& e) {
    throw ParseError(std::string("workload: ") + e.what());
  }
}

DeviceProfile device_from_json(const nlohmann::json& j) {
  DeviceProfile d;
  d.cpu_speed = j.value("cpu_speed", d.cpu_speed);
  d.label = j.value("label", d.label);
  if (!(d.cpu_speed > 0)) throw ParseError("device.cpu_speed must be > 0");
  return d;
}

NetworkProfile network_from_json(const nlohmann::json& j) {
  if (j.is_string()) return network_preset(j.get<std::string>());
  NetworkProfile n = network_preset(j.value("preset", "medium"));
  n.bandwidth = j.value("bandwidth", n.bandwidth);
  n.rtt_ms = j.value("rtt_ms", n.rtt_ms);
  n.jitter = j.value("jitter", n.jitter);
  n.label = j.value("label", n.label);
  if (!(n.bandwidth > 0) || n.rtt_ms < 0 || n.jitter < 0)
    throw ParseError("network: need bandwidth > 0, rtt_ms >= 0, jitter >= 0");
  return n;
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t below(Rng& rng, std::uint64_t n) { return rng() % n; }
double dyadic(Rng& rng, int lo16, int hi16) {
  return static_cast<double>(lo16 + static_cast<int>(below(rng, hi16 - lo16 + 1))) / 16.0;
}

}  // namespace

CallGraph random_callgraph(Rng& rng, int n_methods, double pin_probability) {
  if (n_methods < 1) throw std::invalid_argument("random_callgraph: need at least one method");
  CallGraph g;
  for (int i = 0; i < n_methods; ++i) {
    const bool pinned = i == 0 || uniform01(rng) < pin_probability;
    g.methods.push_back({i, "m" + std::to_string(i), dyadic(rng, 16, 1600),
                         below(rng, 4096), below(rng, 4096), pinned});
    if (i > 0) g.calls.push_back({static_cast<MethodId>(below(rng, i)), i});
  }
  // a few extra forward edges turn the tree into a DAG
  const int extra = n_methods > 2 ? static_cast<int>(below(rng, n_methods / 2 + 1)) : 0;
  for (int k = 0; k < extra; ++k) {
    const int b = 1 + static_cast<int>(below(rng, n_methods - 1));
    const int a = static_cast<int>(below(rng, b));
    if (std::none_of(g.calls.begin(), g.calls.end(),
                     [&](const CallEdge& c) { return c.caller == a && c.callee == b; }))
      g.calls.push_back({a, b});
  }
  g.entry = 0;
  g.exit = n_methods - 1;  // only smaller ids call larger ones, so this is a sink
  return g;
}

void assign_random_weights(DualPlacementGraph& d, Rng& rng) {
  std::vector<ObjectiveVector> node_cost(d.node_count());
  for (NodeId n = 0; n < d.node_count(); ++n) {
    const DualNode& nd = d.node(n);
    if (nd.kind != NodeKind::Method) continue;
    if (nd.placement == Placement::Local) node_cost[n] = {dyadic(rng, 16, 160), dyadic(rng, 16, 160)};
    else node_cost[n] = {dyadic(rng, 4, 120), dyadic(rng, 1, 48)};
  }
  for (EdgeId e = 0; e < d.edge_count(); ++e) {
    const DualEdge& ed = d.edge(e);
    ObjectiveVector w = node_cost[ed.to];
    const DualNode& a = d.node(ed.from);
    const DualNode& b = d.node(ed.to);
    if (b.kind == NodeKind::Method && b.placement == Placement::Remote &&
        (a.kind != NodeKind::Method || a.placement == Placement::Local))
      w.time_ms += dyadic(rng, 8, 64);
    d.set_weight(e, w, true);
  }
}

}  // namespace offload
