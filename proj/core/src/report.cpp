#include "minishrink/report.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "minishrink/indicators.hpp"
#include "text_util.hpp"

namespace minishrink {

namespace {

using ordered_json = nlohmann::ordered_json;

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

std::shared_ptr<Evaluator> make_evaluator(const FeatureModel& model, const EvaluatorSpec& spec,
                                          const std::optional<std::filesystem::path>& cost_path,
                                          const std::filesystem::path& model_path,
                                          std::uint64_t seed, int default_runs) {
  if (spec.simulated) {
    CostModel cost = load_cost_model(cost_path ? *cost_path : model_path, model);
    if (spec.noise_override) cost.noise_sigma = *spec.noise_override;
    SimulatedEvaluator::Options opt;
    opt.runs = spec.runs.value_or(default_runs);
    opt.seed = seed;
    opt.reject_invalid = spec.reject_invalid;
    return std::make_shared<SimulatedEvaluator>(model, std::move(cost), opt);
  }
  ExternalEvaluator::Options opt;
  opt.runs = spec.runs.value_or(10);
  if (spec.timeout_s) opt.timeout = std::chrono::seconds(*spec.timeout_s);
  return std::make_shared<ExternalEvaluator>(model, spec.command, opt);
}

Archive dispatch(Algo algo, EvaluationContext& ctx, const SearchParams& params) {
  switch (algo) {
    case Algo::nsga2: return nsga2(ctx, params);
    case Algo::hybrid_rs: return hybrid_rs(ctx, params);
    case Algo::sway: return sway(ctx, params);
  }
  throw ValidationError("unknown algorithm");
}

}  // namespace

std::optional<Algo> parse_algo(std::string_view name) {
  if (name == "nsga2") return Algo::nsga2;
  if (name == "hybrid-rs") return Algo::hybrid_rs;
  if (name == "sway") return Algo::sway;
  return std::nullopt;
}

const char* to_string(Algo a) {
  switch (a) {
    case Algo::nsga2: return "nsga2";
    case Algo::hybrid_rs: return "hybrid-rs";
    case Algo::sway: return "sway";
  }
  return "?";
}

EvaluatorSpec parse_evaluator_spec(std::string_view text) {
  EvaluatorSpec spec;
  if (text == "simulated") return spec;
  constexpr std::string_view prefix = "external:";
  if (text.starts_with(prefix)) {
    spec.simulated = false;
    spec.command = std::string(text.substr(prefix.size()));
    if (spec.command.find_first_not_of(" \t") == std::string::npos)
      throw ValidationError("external evaluator needs a command: external:CMD");
    return spec;
  }
  throw ValidationError("evaluator must be 'simulated' or 'external:CMD', got '" +
                        std::string(text) + "'");
}

RunReport::Summary RunReport::summary() const {
  Summary s;
  if (baseline.measurement.feasible)
    s.devices_before =
        device_count(std::span<const Measurement>(&baseline.measurement, 1), devices);
  std::vector<Measurement> sols;
  for (const auto& rec : archive.solutions)
    if (rec.measurement.feasible) sols.push_back(rec.measurement);
  s.devices_after = device_count(sols, devices);
  s.nda = minishrink::nda(s.devices_before, s.devices_after);
  if (!baseline.measurement.feasible || sols.empty()) return s;

  std::vector<double> dcs, dmu, det;
  for (const Measurement& m : sols) {
    dcs.push_back(percentage_change(m.code_size_kb, baseline.measurement.code_size_kb));
    dmu.push_back(percentage_change(m.memory_kb, baseline.measurement.memory_kb));
    det.push_back(percentage_change(m.time_s, baseline.measurement.time_s));
  }
  s.has_deltas = true;
  s.median_delta_cs = median_of(std::move(dcs));
  s.median_delta_mu = median_of(std::move(dmu));
  s.median_delta_et = median_of(std::move(det));
  return s;
}

RunReport run_optimize(const OptimizeRequest& req) {
  const auto t0 = std::chrono::steady_clock::now();

  const FeatureModel model = load_feature_model(req.model_path);
  AppSpec app = load_app_spec(req.app_path);
  std::vector<Device> devices = load_devices(req.devices_path);
  auto evaluator = make_evaluator(model, req.evaluator, req.cost_model_path, req.model_path,
                                  req.params.seed, /*default_runs=*/req.evaluator.simulated ? 1 : 10);

  EvaluationContext::Options copt;
  copt.budget = req.params.budget;
  copt.parallelism = req.parallelism;
  copt.orientation = req.orientation;
  copt.cache_file = req.cache_file;
  EvaluationContext ctx(model, app, devices, std::move(evaluator), copt);

  RunReport report;
  report.app = app.name;
  report.algorithm = to_string(req.algo);
  report.seed = req.params.seed;
  report.devices = std::move(devices);

  // the all-default build anchors every delta in the summary
  const auto base = ctx.evaluate(Configuration(model.size()));
  if (!base) throw ValidationError("budget too small to evaluate the baseline");
  report.baseline = *base;

  report.archive = dispatch(req.algo, ctx, req.params);
  report.evaluations_used = ctx.invocations();
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

void write_report_json(const RunReport& report, const std::filesystem::path& path) {
  ordered_json j;
  j["app"] = report.app;
  j["algorithm"] = report.algorithm;
  j["seed"] = report.seed;
  j["evaluations_used"] = report.evaluations_used;
  j["wall_time_s"] = report.wall_time_s;

  ordered_json base;
  base["bitstring"] = report.baseline.config.to_string();
  base["feasible"] = report.baseline.measurement.feasible;
  if (report.baseline.measurement.feasible) {
    base["cs_kb"] = report.baseline.measurement.code_size_kb;
    base["mu_kb"] = report.baseline.measurement.memory_kb;
    base["et_s"] = report.baseline.measurement.time_s;
    if (report.baseline.objectives) base["udr"] = report.baseline.objectives->udr;
  }
  j["baseline"] = std::move(base);

  ordered_json rows = ordered_json::array();
  for (const auto& rec : report.archive.solutions) {
    ordered_json row;
    row["bitstring"] = rec.config.to_string();
    row["cs_kb"] = rec.measurement.code_size_kb;
    row["mu_kb"] = rec.measurement.memory_kb;
    row["et_s"] = rec.measurement.time_s;
    row["udr"] = rec.objectives ? rec.objectives->udr : 0.0;
    ordered_json fit;
    for (const Device& d : report.devices) fit[d.name] = fits(rec.measurement, d);
    row["fits"] = std::move(fit);
    rows.push_back(std::move(row));
  }
  j["archive"] = std::move(rows);

  const RunReport::Summary s = report.summary();
  ordered_json sj;
  if (s.has_deltas) {
    sj["median_delta_cs"] = s.median_delta_cs;
    sj["median_delta_mu"] = s.median_delta_mu;
    sj["median_delta_et"] = s.median_delta_et;
  } else {
    sj["median_delta_cs"] = nullptr;
    sj["median_delta_mu"] = nullptr;
    sj["median_delta_et"] = nullptr;
  }
  sj["devices_before"] = s.devices_before;
  sj["devices_after"] = s.devices_after;
  sj["nda"] = s.nda;
  j["summary"] = std::move(sj);

  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_archive_csv(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "bitstring,cs_kb,mu_kb,et_s,udr";
  for (const Device& d : report.devices) out << ",fits_" << d.name;
  out << '\n';
  for (const auto& rec : report.archive.solutions) {
    out << rec.config.to_string() << ',' << text::format_double(rec.measurement.code_size_kb)
        << ',' << text::format_double(rec.measurement.memory_kb) << ','
        << text::format_double(rec.measurement.time_s) << ','
        << text::format_double(rec.objectives ? rec.objectives->udr : 0.0);
    for (const Device& d : report.devices) out << ',' << (fits(rec.measurement, d) ? 1 : 0);
    out << '\n';
  }
}

BenchResult run_bench(const BenchRequest& req) {
  const FeatureModel model = load_feature_model(req.model_path);
  const AppSpec app = load_app_spec(req.app_path);

  EvaluatorSpec spec = req.evaluator;
  // lone flips routinely violate dependency rules; the whole point of the
  // benchmark is to measure them anyway, so the validity gate stays open
  spec.reject_invalid = false;
  auto evaluator =
      make_evaluator(model, spec, req.cost_model_path, req.model_path, req.seed, /*default_runs=*/10);

  BenchResult result;
  result.baseline = evaluator->measure(Configuration(model.size()), app);
  if (!result.baseline.feasible) throw EvaluatorError("baseline build failed; no deltas possible");

  auto deltas_against_baseline = [&](const Measurement& m) {
    MetricDeltas d;
    d.cs = percentage_change(m.code_size_kb, result.baseline.code_size_kb);
    d.mu = percentage_change(m.memory_kb, result.baseline.memory_kb);
    d.et = percentage_change(m.time_s, result.baseline.time_s);
    return d;
  };
  auto flip_row = [&](std::string id, std::string value, const std::vector<int>& ids) {
    BenchRow row;
    row.id = std::move(id);
    row.value = std::move(value);
    row.measurement = evaluator->measure(encode(model, ids), app);
    if (row.measurement.feasible)
      row.deltas = deltas_against_baseline(row.measurement);
    else
      row.skipped = true;  // build failure: keep the row, mark it, move on
    result.rows.push_back(std::move(row));
  };

  for (const Feature& f : model.features())
    flip_row(std::to_string(f.id), f.modified_value.to_string(), {f.id});

  // one row per distinct rule member set; r groups sharing members collapse
  std::set<std::vector<int>> seen_groups;
  for (const DependencyRule& rule : model.rules()) {
    std::vector<int> members = rule.member_ids();
    if (members.size() < 2 || !seen_groups.insert(members).second) continue;
    std::set<std::string> values;
    for (int id : members) values.insert(model.feature(id).modified_value.to_string());
    flip_row(rule.rule_id, values.size() == 1 ? *values.begin() : "vary", members);
  }
  return result;
}

void write_bench_csv(const BenchResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "id,value,cs_kb,mu_kb,et_s,delta_cs,delta_mu,delta_et\n";
  for (const BenchRow& row : result.rows) {
    out << row.id << ',' << row.value << ',';
    if (row.skipped) {
      out << "NA,NA,NA,NA,NA,NA";
    } else {
      out << text::format_double(row.measurement.code_size_kb) << ','
          << text::format_double(row.measurement.memory_kb) << ','
          << text::format_double(row.measurement.time_s) << ','
          << text::format_double(row.deltas.cs) << ',' << text::format_double(row.deltas.mu)
          << ',' << text::format_double(row.deltas.et);
    }
    out << '\n';
  }
}

CompareResult run_compare(const CompareRequest& req) {
  if (req.algos.size() < 2) throw ValidationError("compare needs at least two algorithms");
  if (req.runs < 1) throw ValidationError("runs must be >= 1");
  req.params.validate();

  const FeatureModel model = load_feature_model(req.model_path);
  const AppSpec app = load_app_spec(req.app_path);
  const std::vector<Device> devices = load_devices(req.devices_path);

  CompareResult out;
  out.app = app.name;

  struct Entry {
    std::string name;
    std::vector<std::vector<std::vector<double>>> run_fronts;
    std::vector<double> walls;
  };
  std::vector<Entry> entries;
  std::vector<std::vector<std::vector<double>>> all_fronts;  // entry-major, run-minor

  for (Algo algo : req.algos) {
    Entry entry;
    entry.name = to_string(algo);
    for (int r = 0; r < req.runs; ++r) {
      SearchParams params = req.params;
      params.seed = req.params.seed + static_cast<std::uint64_t>(r);
      auto evaluator = make_evaluator(model, req.evaluator, req.cost_model_path, req.model_path,
                                      params.seed, /*default_runs=*/req.evaluator.simulated ? 1 : 10);
      EvaluationContext::Options copt;
      copt.budget = params.budget;
      copt.parallelism = req.parallelism;
      copt.orientation = req.orientation;
      EvaluationContext ctx(model, app, devices, std::move(evaluator), copt);

      const auto t0 = std::chrono::steady_clock::now();
      const Archive archive = dispatch(algo, ctx, params);
      entry.walls.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

      std::vector<std::vector<double>> front;
      for (const auto& rec : archive.solutions)
        front.push_back(objective_values(*rec.objectives, params.objectives));
      all_fronts.push_back(front);
      entry.run_fronts.push_back(std::move(front));
    }
    entries.push_back(std::move(entry));
  }

  // HV on the shared normalization; reference point (1, ..., 1)
  const std::vector<NormalizedFront> normalized = normalize_fronts(all_fronts);
  const std::vector<double> reference(req.params.objectives.size(), 1.0);
  std::vector<std::vector<double>> hv_samples(entries.size());
  for (std::size_t e = 0; e < entries.size(); ++e)
    for (int r = 0; r < req.runs; ++r) {
      const double hv =
          hypervolume(normalized[e * static_cast<std::size_t>(req.runs) + r].points, reference);
      hv_samples[e].push_back(hv);
      out.hv_rows.push_back({entries[e].name, r, hv});
    }

  // PFS over the union front; entries are keyed by position so the same
  // algorithm listed twice is credited separately
  std::map<std::string, std::vector<std::vector<double>>> named_fronts;
  std::vector<std::string> entry_keys;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    std::string key = std::to_string(e) + ":" + entries[e].name;
    std::vector<std::vector<double>> combined;
    for (const auto& front : entries[e].run_fronts)
      combined.insert(combined.end(), front.begin(), front.end());
    named_fronts.emplace(key, std::move(combined));
    entry_keys.push_back(std::move(key));
  }
  const auto pfs = pfs_contribution(named_fronts);

  for (std::size_t e = 0; e < entries.size(); ++e) {
    const PfsEntry& p = pfs.at(entry_keys[e]);
    const MannWhitneyResult mwu = mann_whitney_u(hv_samples[e], hv_samples[0]);
    const CliffsDeltaResult cd = cliffs_delta(hv_samples[e], hv_samples[0]);
    out.summary_rows.push_back(
        {entries[e].name, p.count, p.percent, mwu.p_two_sided, cd.delta, to_string(cd.magnitude)});
    out.timing_rows.push_back({entries[e].name, median_of(entries[e].walls)});
  }
  return out;
}

void write_compare_csvs(const CompareResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "hv.csv");
    if (!out) throw ValidationError("cannot write " + (out_dir / "hv.csv").string());
    out << "app,algorithm,run,hv\n";
    for (const auto& row : result.hv_rows)
      out << result.app << ',' << row.algorithm << ',' << row.run << ','
          << text::format_double(row.hv) << '\n';
  }
  {
    std::ofstream out(out_dir / "summary.csv");
    if (!out) throw ValidationError("cannot write " + (out_dir / "summary.csv").string());
    out << "app,algorithm,pfs_count,pfs_pct,u_p_value,cliffs_delta,magnitude\n";
    for (const auto& row : result.summary_rows)
      out << result.app << ',' << row.algorithm << ',' << row.pfs_count << ','
          << text::format_double(row.pfs_pct) << ',' << text::format_double(row.u_p_value) << ','
          << text::format_double(row.cliffs_delta) << ',' << row.magnitude << '\n';
  }
  {
    std::ofstream out(out_dir / "timings.csv");
    if (!out) throw ValidationError("cannot write " + (out_dir / "timings.csv").string());
    out << "app,algorithm,median_wall_s\n";
    for (const auto& row : result.timing_rows)
      out << result.app << ',' << row.algorithm << ',' << text::format_double(row.median_wall_s)
          << '\n';
  }
}

}  // namespace minishrink
