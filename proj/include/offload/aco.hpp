#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "offload/callgraph.hpp"
#include "offload/pareto.hpp"

namespace offload {

enum class LambdaRule { Spread, Fixed };

// Bi-objective ACS parameters. Defaults are the documented solver defaults.
struct AcoParams {
  int n_ants = 10;
  int n_iterations = 200;
  double alpha = 1.0;  // pheromone exponent
  double beta = 2.0;   // heuristic exponent
  double rho_local = 0.1;
  double rho_global = 0.1;
  double q0 = 0.9;  // exploitation probability
  double tau0 = 1.0;
  double deposit_q = 1.0;
  double tau_min = 0.01;
  double tau_max = 10.0;
  std::uint64_t seed = 1;
  LambdaRule lambda_rule = LambdaRule::Spread;
  double fixed_lambda = 0.5;  // used when lambda_rule == Fixed

  // Throws std::invalid_argument naming the first out-of-range field.
  void validate() const;
  friend bool operator==(const AcoParams&, const AcoParams&) = default;
};

// Keys are the field names above; "lambda_rule" is "spread" or a number in
// [0,1] (fixed). Unknown keys are rejected.
AcoParams aco_params_from_json(const nlohmann::json& j, AcoParams base = {});
nlohmann::json to_json(const AcoParams& p);
// Flat "key = value" lines; '#' starts a comment.
AcoParams parse_aco_params_kv(std::string_view text, AcoParams base = {});
// JSON when the file starts with '{', key=value otherwise.
AcoParams load_aco_params(const std::filesystem::path& path);

inline constexpr double kCostEpsilon = 1e-9;

// Two edge-indexed pheromone matrices, one per objective.
struct PheromonePair {
  std::vector<double> tau_time;
  std::vector<double> tau_cpu;

  static PheromonePair uniform(std::size_t edges, double tau0) {
    return {std::vector<double>(edges, tau0), std::vector<double>(edges, tau0)};
  }
  friend bool operator==(const PheromonePair&, const PheromonePair&) = default;
};

struct AntState {
  NodeId current = 0;
  std::vector<NodeId> visited;
  ObjectiveVector accrued;
  double lambda = 0.5;
};

using Rng = std::mt19937_64;

// Independent stream per (seed, iteration, ant); the same triple always yields
// the same stream regardless of which thread constructs the ant.
Rng ant_stream(std::uint64_t seed, std::uint64_t iteration, std::uint64_t ant);
double uniform01(Rng& rng);

// Scalarization weight of ant `ant`: i/(m-1) under Spread (0.5 for a single
// ant), the fixed value otherwise.
double ant_lambda(int ant, const AcoParams& p);

// score(e) = [l*tt + (1-l)*tc]^alpha * [1 / (l*wt + (1-l)*wc + eps)]^beta
double edge_score(const DualEdge& e, double tau_time, double tau_cpu, double lambda,
                  const AcoParams& p);

// Pseudo-random-proportional rule: argmax score with probability q0,
// roulette over scores otherwise. Returns the chosen out-edge.
EdgeId select_next(const AntState& ant, const DualPlacementGraph& d, const PheromonePair& ph,
                   const AcoParams& p, Rng& rng);

void local_update(PheromonePair& ph, EdgeId e, const AcoParams& p);
void global_update(PheromonePair& ph, const ParetoArchive& archive, const DualPlacementGraph& d,
                   const AcoParams& p);

struct SolveStats {
  std::uint64_t construction_steps = 0;  // edges traversed by all ants
  int iterations = 0;
};

// Builds one ant's path on a fixed pheromone state.
PathSolution construct_path(const DualPlacementGraph& d, const PheromonePair& ph,
                            const AcoParams& p, double lambda, Rng& rng);

// Reference implementation: ants of an iteration are built one after another
// on the iteration-start pheromones, then local updates run in ant order.
ParetoArchive solve_serial(const DualPlacementGraph& d, const AcoParams& p,
                           SolveStats* stats = nullptr);

// Same algorithm with ant construction spread over OpenMP threads
// (threads <= 0: runtime default). Bit-identical to solve_serial.
ParetoArchive solve(const DualPlacementGraph& d, const AcoParams& p, SolveStats* stats = nullptr,
                    int threads = 0);

}  // namespace offload
