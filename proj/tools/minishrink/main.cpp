// minishrink: shrink a configurable interpreter until it fits small devices.
//
//   minishrink optimize --model m.json --app a.json --devices d.json \
//       --algo nsga2 --evaluator simulated --seed 1 --budget 250 --out run/
//   minishrink bench    --model m.json --app a.json --out bench.csv
//   minishrink compare  --model m.json --app a.json --devices d.json \
//       --algos nsga2,hybrid-rs --runs 30 --out cmp/
//
// Exit codes: 0 success, 1 evaluator failure, 3 invalid inputs.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "minishrink/report.hpp"

namespace {

using namespace minishrink;

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<Objective> parse_objective_list(const std::string& csv) {
  std::vector<Objective> out;
  for (const std::string& name : split_list(csv)) {
    const auto o = parse_objective(name);
    if (!o) throw ValidationError("unknown objective '" + name + "' (udr, cs, mu, et)");
    out.push_back(*o);
  }
  return out;
}

UsrOrientation parse_orientation(const std::string& name) {
  if (name == "as-written") return UsrOrientation::as_written;
  if (name == "slack") return UsrOrientation::slack;
  throw ValidationError("unknown usr orientation '" + name + "' (as-written, slack)");
}

// MINISHRINK_CACHE, when set, overrides whatever --cache said
std::filesystem::path effective_cache(const std::string& flag_value) {
  if (const char* env = std::getenv("MINISHRINK_CACHE")) return std::filesystem::path(env);
  return std::filesystem::path(flag_value);
}

struct CommonFlags {
  std::string model;
  std::string app;
  std::string cost_model;
  std::string evaluator = "simulated";
  std::uint64_t seed = 0;
  int runs = -1;           // -1: evaluator default
  double noise = -1.0;     // <0: cost model's own sigma
  int timeout_s = 0;       // 0: evaluator default
};

void add_common(CLI::App* cmd, CommonFlags& f, const char* runs_flag) {
  cmd->add_option("--model", f.model, "feature-model JSON file")->required();
  cmd->add_option("--app", f.app, "application spec JSON file")->required();
  cmd->add_option("--cost-model", f.cost_model,
                  "cost-model JSON (default: the model file's cost_model key)");
  cmd->add_option("--evaluator", f.evaluator, "simulated | external:CMD")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "RNG seed")->capture_default_str();
  cmd->add_option(runs_flag, f.runs, "evaluator runs per configuration");
  cmd->add_option("--noise", f.noise, "override simulated noise sigma");
  cmd->add_option("--timeout", f.timeout_s, "external evaluator timeout, seconds");
}

EvaluatorSpec build_spec(const CommonFlags& f) {
  EvaluatorSpec spec = parse_evaluator_spec(f.evaluator);
  if (f.runs >= 0) spec.runs = f.runs;
  if (f.noise >= 0.0) spec.noise_override = f.noise;
  if (f.timeout_s > 0) spec.timeout_s = f.timeout_s;
  return spec;
}

void fill_cost_path(const CommonFlags& f, std::optional<std::filesystem::path>& dst) {
  if (!f.cost_model.empty()) dst = f.cost_model;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-objective miniaturization of configurable interpreter builds"};
  app.require_subcommand(1);

  // ---- optimize ----
  CommonFlags of;
  std::string o_devices, o_algo, o_objectives = "udr,cs,mu,et";
  std::string o_orientation = "as-written", o_out = ".", o_cache;
  SearchParams o_params;
  int o_parallel = 1;
  CLI::App* optimize = app.add_subcommand("optimize", "search for small feasible builds");
  add_common(optimize, of, "--runs");
  optimize->add_option("--devices", o_devices, "device catalog JSON file")->required();
  optimize->add_option("--algo", o_algo, "nsga2 | hybrid-rs | sway")->required();
  optimize->add_option("--budget", o_params.budget, "distinct evaluator invocations")
      ->capture_default_str();
  optimize->add_option("--population", o_params.population, "NSGA-II population size")
      ->capture_default_str();
  optimize->add_option("--crossover", o_params.crossover_prob, "crossover probability")
      ->capture_default_str();
  optimize->add_option("--mutation", o_params.mutation_prob, "per-individual mutation probability")
      ->capture_default_str();
  optimize->add_option("--objectives", o_objectives, "comma list of udr,cs,mu,et")
      ->capture_default_str();
  optimize->add_option("--pool", o_params.sway_pool, "sway candidate pool size")
      ->capture_default_str();
  optimize->add_option("--max-draws", o_params.max_draws, "hybrid-rs draw cap (0: 200*budget)")
      ->capture_default_str();
  optimize->add_option("--parallel", o_parallel, "evaluation workers")->capture_default_str();
  optimize->add_option("--usr-orientation", o_orientation, "as-written | slack")
      ->capture_default_str();
  optimize->add_option("--cache", o_cache, "persistent measurement cache file");
  optimize->add_option("--out", o_out, "output directory for report.json + archive.csv")
      ->capture_default_str();

  // ---- bench ----
  CommonFlags bf;
  std::string b_out = "bench.csv";
  CLI::App* bench = app.add_subcommand("bench", "measure every lone feature/group flip");
  add_common(bench, bf, "--runs");
  bench->add_option("--out", b_out, "output CSV file")->capture_default_str();

  // ---- compare ----
  CommonFlags cf;
  std::string c_devices, c_algos, c_objectives = "udr,cs,mu,et";
  std::string c_orientation = "as-written", c_out = ".";
  SearchParams c_params;
  int c_parallel = 1, c_runs = 30;
  CLI::App* compare = app.add_subcommand("compare", "HV/PFS/stats across algorithms");
  add_common(compare, cf, "--eval-runs");
  compare->add_option("--devices", c_devices, "device catalog JSON file")->required();
  compare->add_option("--algos", c_algos, "comma list; first is the statistical baseline")
      ->required();
  compare->add_option("--runs", c_runs, "seeded runs per algorithm")->capture_default_str();
  compare->add_option("--budget", c_params.budget, "distinct evaluator invocations per run")
      ->capture_default_str();
  compare->add_option("--population", c_params.population, "NSGA-II population size")
      ->capture_default_str();
  compare->add_option("--crossover", c_params.crossover_prob, "crossover probability")
      ->capture_default_str();
  compare->add_option("--mutation", c_params.mutation_prob, "per-individual mutation probability")
      ->capture_default_str();
  compare->add_option("--objectives", c_objectives, "comma list of udr,cs,mu,et")
      ->capture_default_str();
  compare->add_option("--pool", c_params.sway_pool, "sway candidate pool size")
      ->capture_default_str();
  compare->add_option("--max-draws", c_params.max_draws, "hybrid-rs draw cap (0: 200*budget)")
      ->capture_default_str();
  compare->add_option("--parallel", c_parallel, "evaluation workers")->capture_default_str();
  compare->add_option("--usr-orientation", c_orientation, "as-written | slack")
      ->capture_default_str();
  compare->add_option("--out", c_out, "output directory for hv/summary/timings CSVs")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (optimize->parsed()) {
      OptimizeRequest req;
      req.model_path = of.model;
      req.app_path = of.app;
      req.devices_path = o_devices;
      fill_cost_path(of, req.cost_model_path);
      const auto algo = parse_algo(o_algo);
      if (!algo) throw ValidationError("unknown algorithm '" + o_algo + "'");
      req.algo = *algo;
      req.evaluator = build_spec(of);
      req.params = o_params;
      req.params.seed = of.seed;
      req.params.objectives = parse_objective_list(o_objectives);
      req.parallelism = o_parallel;
      req.orientation = parse_orientation(o_orientation);
      req.cache_file = effective_cache(o_cache);

      const RunReport report = run_optimize(req);
      const std::filesystem::path out_dir(o_out);
      std::filesystem::create_directories(out_dir);
      write_report_json(report, out_dir / "report.json");
      write_archive_csv(report, out_dir / "archive.csv");
      std::cout << "wrote " << (out_dir / "report.json").string() << " and "
                << (out_dir / "archive.csv").string() << " (" << report.evaluations_used
                << " evaluations, " << report.archive.solutions.size() << " archive rows)\n";
    } else if (bench->parsed()) {
      BenchRequest req;
      req.model_path = bf.model;
      req.app_path = bf.app;
      fill_cost_path(bf, req.cost_model_path);
      req.evaluator = build_spec(bf);
      req.seed = bf.seed;

      const BenchResult result = run_bench(req);
      write_bench_csv(result, b_out);
      std::cout << "wrote " << b_out << " (" << result.rows.size() << " rows)\n";
    } else if (compare->parsed()) {
      CompareRequest req;
      req.model_path = cf.model;
      req.app_path = cf.app;
      req.devices_path = c_devices;
      fill_cost_path(cf, req.cost_model_path);
      for (const std::string& name : split_list(c_algos)) {
        const auto algo = parse_algo(name);
        if (!algo) throw ValidationError("unknown algorithm '" + name + "'");
        req.algos.push_back(*algo);
      }
      req.runs = c_runs;
      req.evaluator = build_spec(cf);
      req.params = c_params;
      req.params.seed = cf.seed;
      req.params.objectives = parse_objective_list(c_objectives);
      req.parallelism = c_parallel;
      req.orientation = parse_orientation(c_orientation);

      const CompareResult result = run_compare(req);
      write_compare_csvs(result, c_out);
      std::cout << "wrote hv.csv, summary.csv, timings.csv under " << c_out << '\n';
    }
    return 0;
  } catch (const EvaluatorError& e) {
    std::cerr << "evaluator error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
