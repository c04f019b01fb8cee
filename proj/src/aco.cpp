#include "offload/aco.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <spdlog/spdlog.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "offload/error.hpp"

namespace offload {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("aco params: ") + what);
}

void set_param(AcoParams& p, const std::string& key, const nlohmann::json& v) {
  auto num = [&]() {
    if (!v.is_number()) throw ParseError("aco params: " + key + " must be a number");
    return v.get<double>();
  };
  auto integer = [&]() {
    if (!v.is_number_integer()) throw ParseError("aco params: " + key + " must be an integer");
    return v.get<long long>();
  };
  if (key == "n_ants") p.n_ants = static_cast<int>(integer());
  else if (key == "n_iterations") p.n_iterations = static_cast<int>(integer());
  else if (key == "alpha") p.alpha = num();
  else if (key == "beta") p.beta = num();
  else if (key == "rho_local") p.rho_local = num();
  else if (key == "rho_global") p.rho_global = num();
  else if (key == "q0") p.q0 = num();
  else if (key == "tau0") p.tau0 = num();
  else if (key == "deposit_q") p.deposit_q = num();
  else if (key == "tau_min") p.tau_min = num();
  else if (key == "tau_max") p.tau_max = num();
  else if (key == "seed") p.seed = static_cast<std::uint64_t>(integer());
  else if (key == "lambda_rule") {
    if (v.is_string() && v.get<std::string>() == "spread") {
      p.lambda_rule = LambdaRule::Spread;
    } else if (v.is_number()) {
      p.lambda_rule = LambdaRule::Fixed;
      p.fixed_lambda = v.get<double>();
    } else {
      throw ParseError("aco params: lambda_rule must be \"spread\" or a number in [0,1]");
    }
  } else {
    throw ParseError("aco params: unknown key " + key);
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void AcoParams::validate() const {
  require(n_ants >= 1, "n_ants must be >= 1");
  require(n_iterations >= 1, "n_iterations must be >= 1");
  require(alpha >= 0.0, "alpha must be >= 0");
  require(beta >= 0.0, "beta must be >= 0");
  require(rho_local > 0.0 && rho_local < 1.0, "rho_local must be in (0,1)");
  require(rho_global > 0.0 && rho_global < 1.0, "rho_global must be in (0,1)");
  require(q0 >= 0.0 && q0 <= 1.0, "q0 must be in [0,1]");
  require(tau0 > 0.0, "tau0 must be > 0");
  require(deposit_q > 0.0, "deposit_q must be > 0");
  require(tau_min > 0.0 && tau_min <= tau0 && tau0 <= tau_max,
          "need 0 < tau_min <= tau0 <= tau_max");
  require(fixed_lambda >= 0.0 && fixed_lambda <= 1.0, "lambda must be in [0,1]");
}

AcoParams aco_params_from_json(const nlohmann::json& j, AcoParams base) {
  if (!j.is_object()) throw ParseError("aco params: expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) set_param(base, it.key(), it.value());
  base.validate();
  return base;
}

nlohmann::json to_json(const AcoParams& p) {
  nlohmann::json j{{"n_ants", p.n_ants},       {"n_iterations", p.n_iterations},
                   {"alpha", p.alpha},         {"beta", p.beta},
                   {"rho_local", p.rho_local}, {"rho_global", p.rho_global},
                   {"q0", p.q0},               {"tau0", p.tau0},
                   {"deposit_q", p.deposit_q}, {"tau_min", p.tau_min},
                   {"tau_max", p.tau_max},     {"seed", p.seed}};
  if (p.lambda_rule == LambdaRule::Spread) j["lambda_rule"] = "spread";
  else j["lambda_rule"] = p.fixed_lambda;
  return j;
}

AcoParams parse_aco_params_kv(std::string_view text, AcoParams base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError("aco params line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    nlohmann::json v;
    if (key == "lambda_rule" && value == "spread") {
      v = "spread";
    } else {
      try {
        v = nlohmann::json::parse(value);
      } catch (const nlohmann::json::parse_error&) {
        throw ParseError("aco params line " + std::to_string(lineno) + ": bad value for " + key);
      }
    }
    set_param(base, key, v);
  }
  base.validate();
  return base;
}

AcoParams load_aco_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      const auto j = nlohmann::json::parse(text);
      // An experiment file carries its parameters under "aco".
      if (j.is_object() && j.contains("aco")) return aco_params_from_json(j.at("aco"));
      return aco_params_from_json(j);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  }
  return parse_aco_params_kv(text);
}

// ---------------------------------------------------------------------------

Rng ant_stream(std::uint64_t seed, std::uint64_t iteration, std::uint64_t ant) {
  std::uint64_t x = seed;
  std::uint64_t h = splitmix64(x);
  x = h ^ iteration;
  h = splitmix64(x);
  x = h ^ ant;
  return Rng(splitmix64(x));
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double ant_lambda(int ant, const AcoParams& p) {
  if (p.lambda_rule == LambdaRule::Fixed) return p.fixed_lambda;
  if (p.n_ants <= 1) return 0.5;
  return static_cast<double>(ant) / static_cast<double>(p.n_ants - 1);
}

double edge_score(const DualEdge& e, double tau_time, double tau_cpu, double lambda,
                  const AcoParams& p) {
  const double tau = lambda * tau_time + (1.0 - lambda) * tau_cpu;
  const double cost = lambda * e.weight.time_ms + (1.0 - lambda) * e.weight.cpu_units;
  const double eta = 1.0 / (cost + kCostEpsilon);
  return std::pow(tau, p.alpha) * std::pow(eta, p.beta);
}

EdgeId select_next(const AntState& ant, const DualPlacementGraph& d, const PheromonePair& ph,
                   const AcoParams& p, Rng& rng) {
  const auto outs = d.out_edges(ant.current);
  if (outs.empty()) throw SolverError("dead end at " + d.token(ant.current));
  if (outs.size() == 1) return outs.front();

  std::vector<double> scores(outs.size());
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const EdgeId e = outs[i];
    scores[i] = edge_score(d.edge(e), ph.tau_time[e], ph.tau_cpu[e], ant.lambda, p);
  }

  if (uniform01(rng) < p.q0) {
    return outs[static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) -
                                         scores.begin())];
  }
  double total = 0.0;
  for (double s : scores) total += s;
  if (!(total > 0.0) || !std::isfinite(total)) {
    return outs[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(outs.size()))];
  }
  const double r = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    acc += scores[i];
    if (r < acc) return outs[i];
  }
  return outs.back();
}

void local_update(PheromonePair& ph, EdgeId e, const AcoParams& p) {
  for (auto* tau : {&ph.tau_time[e], &ph.tau_cpu[e]}) {
    *tau = std::clamp((1.0 - p.rho_local) * *tau + p.rho_local * p.tau0, p.tau_min, p.tau_max);
  }
}

void global_update(PheromonePair& ph, const ParetoArchive& archive, const DualPlacementGraph& d,
                   const AcoParams& p) {
  for (double& t : ph.tau_time) t *= (1.0 - p.rho_global);
  for (double& t : ph.tau_cpu) t *= (1.0 - p.rho_global);
  for (const PathSolution& s : archive.solutions()) {
    const double time = s.cost.time_ms > 0.0 ? s.cost.time_ms : kCostEpsilon;
    const double cpu = s.cost.cpu_units > 0.0 ? s.cost.cpu_units : kCostEpsilon;
    for (EdgeId e : path_edges(d, s.nodes)) {
      ph.tau_time[e] += p.deposit_q / time;
      ph.tau_cpu[e] += p.deposit_q / cpu;
    }
  }
  for (double& t : ph.tau_time) t = std::clamp(t, p.tau_min, p.tau_max);
  for (double& t : ph.tau_cpu) t = std::clamp(t, p.tau_min, p.tau_max);
}

PathSolution construct_path(const DualPlacementGraph& d, const PheromonePair& ph,
                            const AcoParams& p, double lambda, Rng& rng) {
  AntState ant{d.start(), {d.start()}, {}, lambda};
  while (ant.current != d.end()) {
    const DualEdge& e = d.edge(select_next(ant, d, ph, p, rng));
    ant.accrued += e.weight;
    ant.current = e.to;
    ant.visited.push_back(e.to);
  }
  return {std::move(ant.visited), ant.accrued};
}

namespace {

ParetoArchive run_colony(const DualPlacementGraph& d, const AcoParams& p, SolveStats* stats,
                         bool parallel, int threads) {
  p.validate();
  if (!d.all_measured())
    throw SolverError(std::to_string(d.unmeasured_count()) +
                      " unmeasured edges; explore before solving");

  PheromonePair ph = PheromonePair::uniform(d.edge_count(), p.tau0);
  ParetoArchive global;
  std::vector<PathSolution> paths(static_cast<std::size_t>(p.n_ants));
  std::uint64_t steps = 0;

#ifdef _OPENMP
  const int workers = threads > 0 ? threads : omp_get_max_threads();
#else
  (void)threads;
#endif

  for (int it = 0; it < p.n_iterations; ++it) {
    if (parallel) {
#pragma omp parallel for schedule(static) num_threads(workers)
      for (int a = 0; a < p.n_ants; ++a) {
        Rng rng = ant_stream(p.seed, static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(a));
        paths[static_cast<std::size_t>(a)] = construct_path(d, ph, p, ant_lambda(a, p), rng);
      }
    } else {
      for (int a = 0; a < p.n_ants; ++a) {
        Rng rng = ant_stream(p.seed, static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(a));
        paths[static_cast<std::size_t>(a)] = construct_path(d, ph, p, ant_lambda(a, p), rng);
      }
    }

    // barrier: local updates in ant order
    for (const auto& path : paths) {
      for (EdgeId e : path_edges(d, path.nodes)) local_update(ph, e, p);
      steps += path.nodes.size() - 1;
    }
    const ParetoArchive iteration_front = filter(paths);
    for (const auto& s : iteration_front.solutions()) global.insert(s);
    global_update(ph, iteration_front, d, p);
    spdlog::trace("aco iteration {}: front {} archive {}", it, iteration_front.size(), global.size());
  }
  spdlog::debug("aco seed {}: {} iterations, {} ants, archive {}", p.seed, p.n_iterations,
                p.n_ants, global.size());

  if (stats != nullptr) {
    stats->construction_steps = steps;
    stats->iterations = p.n_iterations;
  }
  return global;
}

}  // namespace

ParetoArchive solve_serial(const DualPlacementGraph& d, const AcoParams& p, SolveStats* stats) {
  return run_colony(d, p, stats, false, 1);
}

ParetoArchive solve(const DualPlacementGraph& d, const AcoParams& p, SolveStats* stats,
                    int threads) {
  return run_colony(d, p, stats, true, threads);
}

}  // namespace offload
