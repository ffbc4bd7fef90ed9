#include "minishrink/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "minishrink/indicators.hpp"

namespace minishrink {

std::optional<Objective> parse_objective(std::string_view name) {
  if (name == "udr") return Objective::udr;
  if (name == "cs") return Objective::cs;
  if (name == "mu") return Objective::mu;
  if (name == "et") return Objective::et;
  return std::nullopt;
}

const char* to_string(Objective o) {
  switch (o) {
    case Objective::udr: return "udr";
    case Objective::cs: return "cs";
    case Objective::mu: return "mu";
    case Objective::et: return "et";
  }
  return "?";
}

std::vector<double> objective_values(const ObjectiveVector& v, std::span<const Objective> sel) {
  std::vector<double> out;
  out.reserve(sel.size());
  for (Objective o : sel) {
    switch (o) {
      case Objective::udr: out.push_back(v.udr); break;
      case Objective::cs: out.push_back(v.code_size_kb); break;
      case Objective::mu: out.push_back(v.memory_kb); break;
      case Objective::et: out.push_back(v.time_s); break;
    }
  }
  return out;
}

void SearchParams::validate() const {
  if (population < 2) throw ValidationError("population must be >= 2");
  if (budget < population) throw ValidationError("budget must be >= population");
  if (crossover_prob < 0.0 || crossover_prob > 1.0)
    throw ValidationError("crossover_prob must be in [0, 1]");
  if (mutation_prob < 0.0 || mutation_prob > 1.0)
    throw ValidationError("mutation_prob must be in [0, 1]");
  if (objectives.empty()) throw ValidationError("objectives must not be empty");
  auto sorted = objectives;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ValidationError("objectives must be unique");
  if (sway_pool < 2) throw ValidationError("sway_pool must be >= 2");
  if (max_draws < 0) throw ValidationError("max_draws must be >= 0");
}

std::vector<std::vector<std::size_t>> fast_nondominated_sort(
    const std::vector<std::vector<double>>& points) {
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> dominated_by(n);
  std::vector<int> dom_count(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dominates(points[i], points[j])) {
        dominated_by[i].push_back(j);
        ++dom_count[j];
      } else if (dominates(points[j], points[i])) {
        dominated_by[j].push_back(i);
        ++dom_count[i];
      }
    }

  std::vector<std::vector<std::size_t>> fronts;
  std::vector<std::size_t> current;
  for (std::size_t i = 0; i < n; ++i)
    if (dom_count[i] == 0) current.push_back(i);
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t p : current)
      for (std::size_t q : dominated_by[p])
        if (--dom_count[q] == 0) next.push_back(q);
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(const std::vector<std::vector<double>>& front) {
  const std::size_t n = front.size();
  std::vector<double> dist(n, 0.0);
  if (n == 0) return dist;
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t k = front[0].size();
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (front[a][j] != front[b][j]) return front[a][j] < front[b][j];
      return a < b;
    });
    dist[order.front()] = inf;
    dist[order.back()] = inf;
    const double range = front[order.back()][j] - front[order.front()][j];
    if (range <= 0.0) continue;
    for (std::size_t t = 1; t + 1 < n; ++t)
      dist[order[t]] += (front[order[t + 1]][j] - front[order[t - 1]][j]) / range;
  }
  return dist;
}

namespace detail {

std::vector<std::size_t> environmental_selection(const std::vector<std::vector<double>>& points,
                                                 const std::vector<std::string>& keys,
                                                 std::size_t mu) {
  if (points.size() != keys.size())
    throw std::invalid_argument("environmental_selection: points/keys mismatch");
  std::vector<std::size_t> chosen;
  for (const auto& front : fast_nondominated_sort(points)) {
    if (chosen.size() >= mu) break;
    if (chosen.size() + front.size() <= mu) {
      chosen.insert(chosen.end(), front.begin(), front.end());
      continue;
    }
    std::vector<std::vector<double>> fp;
    fp.reserve(front.size());
    for (std::size_t i : front) fp.push_back(points[i]);
    const std::vector<double> cd = crowding_distance(fp);
    std::vector<std::size_t> order(front.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (cd[a] != cd[b]) return cd[a] > cd[b];
      return keys[front[a]] < keys[front[b]];
    });
    for (std::size_t t : order) {
      if (chosen.size() >= mu) break;
      chosen.push_back(front[t]);
    }
  }
  return chosen;
}

}  // namespace detail

namespace {

// uniform [0, 1) from the top 53 bits; avoids implementation-defined
// std distributions so runs replay bit-identically across platforms
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Archive build_archive(EvaluationContext& ctx, const SearchParams& params, std::string algorithm) {
  Archive a;
  a.algorithm = std::move(algorithm);
  a.seed = params.seed;
  a.evaluations_used = ctx.invocations();

  std::vector<EvaluationRecord> feasible;
  for (const auto& [key, rec] : ctx.touched_records())  // keyed map: bitstring order
    if (rec.objectives) feasible.push_back(rec);
  std::vector<std::vector<double>> pts;
  pts.reserve(feasible.size());
  for (const auto& r : feasible) pts.push_back(objective_values(*r.objectives, params.objectives));
  for (std::size_t i : nondominated_indices(pts)) a.solutions.push_back(std::move(feasible[i]));
  return a;
}

}  // namespace

Archive nsga2(EvaluationContext& ctx, const SearchParams& params) {
  params.validate();
  const FeatureModel& model = ctx.model();
  const std::vector<int>& compulsory = ctx.app().compulsory_ids;
  std::mt19937_64 rng(params.seed);

  std::vector<std::uint8_t> locked(model.size(), 0);
  for (int id : compulsory) locked[model.index_of(id)] = 1;
  const std::size_t free_bits = model.size() - compulsory.size();
  const double bit_rate = free_bits > 0 ? 1.0 / static_cast<double>(free_bits) : 0.0;
  const std::size_t mu = static_cast<std::size_t>(params.population);

  struct Ind {
    Configuration cfg;
    std::vector<double> obj;
    std::string key;
  };
  std::vector<Ind> pop;

  auto absorb = [&](const std::vector<std::optional<EvaluationRecord>>& recs) {
    bool any = false;
    for (const auto& r : recs) {
      if (!r) continue;
      any = true;
      if (!r->objectives) continue;  // failed build: never enters the population
      pop.push_back(
          {r->config, objective_values(*r->objectives, params.objectives), r->config.to_string()});
    }
    return any;
  };

  // initial population of repaired random configurations
  for (int attempt = 0; pop.size() < mu && attempt < 50; ++attempt) {
    std::vector<Configuration> draws;
    for (std::size_t i = pop.size(); i < mu; ++i) draws.push_back(random_valid(model, compulsory, rng));
    if (!absorb(ctx.evaluate_batch(draws))) break;
  }

  auto mutate = [&](Configuration& cfg) {
    if (unit_draw(rng) >= params.mutation_prob) return;
    for (std::size_t i = 0; i < cfg.size(); ++i) {
      if (locked[i]) continue;
      if (unit_draw(rng) < bit_rate) cfg.set(i, !cfg.test(i));
    }
  };

  int stagnant = 0;
  while (ctx.invocations() < params.budget && pop.size() >= 2) {
    // rank and crowding of the current population, for tournaments
    std::vector<std::vector<double>> pts;
    pts.reserve(pop.size());
    for (const auto& ind : pop) pts.push_back(ind.obj);
    const auto fronts = fast_nondominated_sort(pts);
    std::vector<int> rank_of(pop.size(), 0);
    std::vector<double> crowd_of(pop.size(), 0.0);
    for (std::size_t f = 0; f < fronts.size(); ++f) {
      std::vector<std::vector<double>> fp;
      fp.reserve(fronts[f].size());
      for (std::size_t i : fronts[f]) fp.push_back(pts[i]);
      const auto cd = crowding_distance(fp);
      for (std::size_t t = 0; t < fronts[f].size(); ++t) {
        rank_of[fronts[f][t]] = static_cast<int>(f);
        crowd_of[fronts[f][t]] = cd[t];
      }
    }
    auto better = [&](std::size_t a, std::size_t b) {
      if (rank_of[a] != rank_of[b]) return rank_of[a] < rank_of[b] ? a : b;
      if (crowd_of[a] != crowd_of[b]) return crowd_of[a] > crowd_of[b] ? a : b;
      return pop[a].key <= pop[b].key ? a : b;
    };
    auto tournament = [&]() {
      const std::size_t a = static_cast<std::size_t>(rng() % pop.size());
      const std::size_t b = static_cast<std::size_t>(rng() % pop.size());
      return better(a, b);
    };

    std::vector<Configuration> offspring;
    while (offspring.size() < mu) {
      Configuration c1 = pop[tournament()].cfg;
      Configuration c2 = pop[tournament()].cfg;
      if (model.size() >= 2 && unit_draw(rng) < params.crossover_prob) {
        const std::size_t cut = 1 + static_cast<std::size_t>(rng() % (model.size() - 1));
        for (std::size_t i = cut; i < model.size(); ++i) {
          const bool t = c1.test(i);
          c1.set(i, c2.test(i));
          c2.set(i, t);
        }
      }
      mutate(c1);
      mutate(c2);
      offspring.push_back(repair(c1, model, compulsory));
      if (offspring.size() < mu) offspring.push_back(repair(c2, model, compulsory));
    }

    const int before = ctx.invocations();
    if (!absorb(ctx.evaluate_batch(offspring))) break;
    // mu + lambda environmental selection on the combined pool
    if (pop.size() > mu) {
      std::vector<std::vector<double>> all_pts;
      std::vector<std::string> all_keys;
      all_pts.reserve(pop.size());
      all_keys.reserve(pop.size());
      for (const auto& ind : pop) {
        all_pts.push_back(ind.obj);
        all_keys.push_back(ind.key);
      }
      std::vector<Ind> next;
      next.reserve(mu);
      for (std::size_t i : detail::environmental_selection(all_pts, all_keys, mu))
        next.push_back(std::move(pop[i]));
      pop = std::move(next);
    }
    // every offspring already cached means the reachable space is exhausted;
    // give mutation a bounded number of generations to find something new
    stagnant = ctx.invocations() == before ? stagnant + 1 : 0;
    if (stagnant > 100) break;
  }
  return build_archive(ctx, params, "nsga2");
}

Archive hybrid_rs(EvaluationContext& ctx, const SearchParams& params) {
  params.validate();
  std::mt19937_64 rng(params.seed);
  const long cap = params.max_draws > 0 ? params.max_draws : 200L * params.budget;
  long draws = 0;
  while (ctx.invocations() < params.budget && draws < cap) {
    const Configuration cfg = random_valid(ctx.model(), ctx.app().compulsory_ids, rng);
    ++draws;
    if (!ctx.evaluate(cfg)) break;
  }
  return build_archive(ctx, params, "hybrid-rs");
}

Archive sway(EvaluationContext& ctx, const SearchParams& params, SwayTrace* trace) {
  params.validate();
  SwayTrace scratch;
  if (!trace) trace = &scratch;
  *trace = {};

  const FeatureModel& model = ctx.model();
  const std::vector<int>& compulsory = ctx.app().compulsory_ids;
  std::mt19937_64 rng(params.seed);

  std::vector<Configuration> pool;
  pool.reserve(static_cast<std::size_t>(params.sway_pool));
  for (int i = 0; i < params.sway_pool; ++i) pool.push_back(random_valid(model, compulsory, rng));

  const std::size_t floor_size =
      static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(pool.size()))));
  bool out_of_budget = false;

  auto eval_objectives = [&](const Configuration& cfg) -> std::optional<std::vector<double>> {
    const auto rec = ctx.evaluate(cfg);
    if (!rec) {
      out_of_budget = true;
      return std::nullopt;
    }
    if (rec->evaluator_calls > 0) ++trace->representative_evals;
    if (!rec->objectives) return std::nullopt;  // infeasible representative
    return objective_values(*rec->objectives, params.objectives);
  };

  std::vector<std::vector<Configuration>> final_clusters;

  // FastMap-style split on Hamming distance; only the two pole representatives
  // of each split are evaluated, and a half whose pole is dominated is dropped
  auto split = [&](auto&& self, std::vector<Configuration> items) -> void {
    if (out_of_budget) return;
    if (items.size() < floor_size || items.size() < 2) {
      final_clusters.push_back(std::move(items));
      return;
    }
    const std::size_t anchor = static_cast<std::size_t>(rng() % items.size());
    auto farthest_from = [&](const Configuration& origin) {
      std::size_t arg = 0, best = 0;
      for (std::size_t i = 0; i < items.size(); ++i) {
        const std::size_t d = origin.hamming(items[i]);
        if (d > best) {
          best = d;
          arg = i;
        }
      }
      return arg;
    };
    const Configuration east = items[farthest_from(items[anchor])];
    const Configuration west = items[farthest_from(east)];
    const double c = static_cast<double>(east.hamming(west));
    if (c == 0.0) {  // all members identical; nothing left to separate
      final_clusters.push_back(std::move(items));
      return;
    }

    std::vector<std::pair<double, Configuration>> projected;
    projected.reserve(items.size());
    for (auto& cfg : items) {
      const double de = static_cast<double>(east.hamming(cfg));
      const double dw = static_cast<double>(west.hamming(cfg));
      projected.emplace_back((de * de + c * c - dw * dw) / (2.0 * c), std::move(cfg));
    }
    std::sort(projected.begin(), projected.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second < b.second;
    });

    ++trace->splits;
    const auto east_obj = eval_objectives(east);
    if (out_of_budget) return;
    const auto west_obj = eval_objectives(west);
    if (out_of_budget) return;

    const std::size_t mid = (projected.size() + 1) / 2;
    bool keep_east = true, keep_west = true;
    if (east_obj && west_obj) {
      if (dominates(*east_obj, *west_obj)) keep_west = false;
      else if (dominates(*west_obj, *east_obj)) keep_east = false;
    } else if (east_obj) {
      keep_west = false;
    } else if (west_obj) {
      keep_east = false;
    }

    if (keep_east) {
      std::vector<Configuration> half;
      half.reserve(mid);
      for (std::size_t i = 0; i < mid; ++i) half.push_back(std::move(projected[i].second));
      self(self, std::move(half));
    }
    if (keep_west && !out_of_budget) {
      std::vector<Configuration> half;
      half.reserve(projected.size() - mid);
      for (std::size_t i = mid; i < projected.size(); ++i)
        half.push_back(std::move(projected[i].second));
      self(self, std::move(half));
    }
  };
  split(split, std::move(pool));
  trace->final_clusters = static_cast<int>(final_clusters.size());

  // spend what is left of the budget on the surviving cluster members
  for (const auto& cluster : final_clusters) {
    if (out_of_budget) break;
    for (const Configuration& cfg : cluster) {
      const auto rec = ctx.evaluate(cfg);
      if (!rec) {
        out_of_budget = true;
        break;
      }
      if (rec->evaluator_calls > 0) ++trace->member_evals;
    }
  }
  return build_archive(ctx, params, "sway");
}

}  // namespace minishrink
