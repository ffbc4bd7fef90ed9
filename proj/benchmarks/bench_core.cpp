// Microbenchmarks for the hot paths: dependency repair, simulated
// measurement, non-dominated sorting, and exact hypervolume.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "minishrink/evaluation.hpp"
#include "minishrink/feature_model.hpp"
#include "minishrink/indicators.hpp"
#include "minishrink/search.hpp"

using namespace minishrink;

namespace {

std::filesystem::path data_dir() { return MINISHRINK_DATA_DIR; }

const FeatureModel& model() {
  static FeatureModel m = load_feature_model(data_dir() / "duktape86.json");
  return m;
}

const CostModel& cost() {
  static CostModel c = load_cost_model(data_dir() / "duktape86.json", model());
  return c;
}

const AppSpec& app() {
  static AppSpec a = load_app_spec(data_dir() / "apps" / "crypto-aes.json");
  return a;
}

std::vector<Configuration> random_configs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Configuration> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Configuration c(model().size());
    for (std::size_t b = 0; b < model().size(); ++b) c.set(b, (rng() & 1u) != 0);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<std::vector<double>> random_points(std::size_t n, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> pts(n, std::vector<double>(k));
  for (auto& p : pts)
    for (auto& v : p) v = unit(rng);
  return pts;
}

void bm_repair(benchmark::State& state) {
  const auto configs = random_configs(256, 41);
  const std::vector<int>& compulsory = app().compulsory_ids;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(repair(configs[i % configs.size()], model(), compulsory));
    ++i;
  }
}
BENCHMARK(bm_repair);

void bm_simulated_measure(benchmark::State& state) {
  SimulatedEvaluator ev(model(), cost(), {.reject_invalid = false});
  const auto configs = random_configs(256, 42);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ev.measure(configs[i % configs.size()], app()));
    ++i;
  }
}
BENCHMARK(bm_simulated_measure);

void bm_nondominated_sort(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 4, 43);
  for (auto _ : state) benchmark::DoNotOptimize(fast_nondominated_sort(pts));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(bm_nondominated_sort)->Range(16, 512)->Complexity();

void bm_hypervolume(benchmark::State& state) {
  auto pts = random_points(static_cast<std::size_t>(state.range(0)), 4, 44);
  const auto nd = nondominated_indices(pts);
  std::vector<std::vector<double>> front;
  for (const auto i : nd) front.push_back(pts[i]);
  const std::vector<double> ref(4, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(hypervolume(front, ref));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(bm_hypervolume)->Range(16, 256)->Complexity();

}  // namespace

BENCHMARK_MAIN();
