#pragma once

// Search strategies over the configuration space, all driven by a shared
// memoized evaluation budget: NSGA-II with repair, hybrid random search
// (random sampling + repair), and a SWAY-style decision-space sampler that
// only evaluates cluster representatives.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "minishrink/evaluation.hpp"

namespace minishrink {

enum class Objective { udr, cs, mu, et };

std::optional<Objective> parse_objective(std::string_view name);
const char* to_string(Objective o);
std::vector<double> objective_values(const ObjectiveVector& v, std::span<const Objective> sel);

struct SearchParams {
  int budget = 250;             // distinct evaluator invocations
  int population = 10;          // NSGA-II mu
  double crossover_prob = 0.8;
  double mutation_prob = 0.1;   // per-individual gate; per-bit rate = 1/num_free_bits
  std::uint64_t seed = 0;
  std::vector<Objective> objectives = {Objective::udr, Objective::cs, Objective::mu,
                                       Objective::et};
  int sway_pool = 10'000;       // candidate pool size N
  long max_draws = 0;           // hybrid-rs draw cap; 0 means 200 * budget

  void validate() const;  // throws ValidationError
};

// Feasible, mutually non-dominated records over everything evaluated in a run,
// sorted by bitstring.
struct Archive {
  std::vector<EvaluationRecord> solutions;
  std::string algorithm;
  std::uint64_t seed = 0;
  int evaluations_used = 0;
};

// front 1 = non-dominated set, front k+1 = non-dominated after removing 1..k
std::vector<std::vector<std::size_t>> fast_nondominated_sort(
    const std::vector<std::vector<double>>& points);

// boundary points +inf; interior points sum neighbor gaps / objective range
std::vector<double> crowding_distance(const std::vector<std::vector<double>>& front);

Archive nsga2(EvaluationContext& ctx, const SearchParams& params);
Archive hybrid_rs(EvaluationContext& ctx, const SearchParams& params);

struct SwayTrace {
  int splits = 0;
  int final_clusters = 0;
  int representative_evals = 0;
  int member_evals = 0;
};

Archive sway(EvaluationContext& ctx, const SearchParams& params, SwayTrace* trace = nullptr);

namespace detail {
// mu pool indices by (rank asc, crowding desc, key asc); exposed for testing
std::vector<std::size_t> environmental_selection(const std::vector<std::vector<double>>& points,
                                                 const std::vector<std::string>& keys,
                                                 std::size_t mu);
}  // namespace detail

}  // namespace minishrink
