#include "minishrink/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include <nlohmann/json.hpp>

#include "text_util.hpp"

namespace minishrink {

using nlohmann::json;

double percentage_change(double new_median, double base_median) {
  if (base_median == 0.0) throw ValidationError("percentage_change: zero baseline");
  return 100.0 * (new_median - base_median) / base_median;
}

CostModel load_cost_model(const std::filesystem::path& path, const FeatureModel& model) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  const json* sub = nullptr;
  if (j.contains("cost_model")) {
    sub = &j["cost_model"];
  } else if (j.contains("feature_deltas") || j.contains("group_deltas") ||
             j.contains("base_code_size_kb")) {
    sub = &j;  // standalone cost-model file
  } else {
    throw ParseError(path.string() + ": no cost_model object found");
  }

  CostModel cm;
  try {
    cm.base_code_size_kb = sub->value("base_code_size_kb", 570.0);
    cm.noise_sigma = sub->value("noise_sigma", 0.0);
    auto read_deltas = [](const json& v, const std::string& where) {
      if (!v.is_array() || v.size() != 3)
        throw ParseError(where + ": delta entries are [dCS, dMU, dET]");
      return MetricDeltas{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
    };
    const json feature_deltas = sub->value("feature_deltas", json::object());
    for (const auto& [key, v] : feature_deltas.items()) {
      int id = 0;
      auto [p, ec] = std::from_chars(key.data(), key.data() + key.size(), id);
      if (ec != std::errc() || p != key.data() + key.size())
        throw ParseError("feature_deltas key '" + key + "' is not a feature id");
      cm.feature_deltas[id] = read_deltas(v, "feature " + key);
    }
    const json group_deltas = sub->value("group_deltas", json::object());
    for (const auto& [key, v] : group_deltas.items()) cm.group_deltas[key] = read_deltas(v, "group " + key);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }

  if (cm.base_code_size_kb <= 0)
    throw ValidationError(path.string() + ": base_code_size_kb must be positive");
  if (cm.noise_sigma < 0) throw ValidationError(path.string() + ": negative noise_sigma");
  for (const auto& [id, _] : cm.feature_deltas)
    model.index_of(id);  // throws on unknown id
  std::vector<std::uint8_t> covered(model.size(), 0);
  for (const auto& [rule_id, _] : cm.group_deltas) {
    auto it = std::find_if(model.rules().begin(), model.rules().end(),
                           [&](const DependencyRule& r) { return r.rule_id == rule_id; });
    if (it == model.rules().end())
      throw ValidationError(path.string() + ": group delta for unknown rule " + rule_id);
    for (int id : it->member_ids()) {
      std::size_t i = model.index_of(id);
      if (covered[i])
        throw ValidationError(path.string() + ": delta-bearing groups overlap at feature id " +
                              std::to_string(id));
      covered[i] = 1;
    }
  }
  for (const Feature& f : model.features())
    cm.feature_deltas.try_emplace(f.id);  // unmeasured features contribute nothing
  return cm;
}

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

// hand-rolled Box-Muller keeps the noise stream identical across library
// implementations for a given seed
double normal_draw(std::mt19937_64& rng) {
  const double u1 = 1.0 - unit_draw(rng);  // (0, 1]
  const double u2 = unit_draw(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

SimulatedEvaluator::SimulatedEvaluator(const FeatureModel& model, CostModel cost, Options opt)
    : model_(&model), cost_(std::move(cost)), opt_(opt) {
  if (opt_.runs < 1) throw ValidationError("simulated evaluator: runs must be >= 1");
  for (const Feature& f : model.features()) cost_.feature_deltas.try_emplace(f.id);

  std::vector<std::uint8_t> covered(model.size(), 0);
  for (const auto& [rule_id, _] : cost_.group_deltas) {
    auto it = std::find_if(model.rules().begin(), model.rules().end(),
                           [&](const DependencyRule& r) { return r.rule_id == rule_id; });
    if (it == model.rules().end())
      throw ValidationError("group delta for unknown rule " + rule_id);
    std::vector<std::size_t> idxs;
    for (int id : it->member_ids()) {
      std::size_t i = model.index_of(id);
      if (covered[i])
        throw ValidationError("delta-bearing groups overlap at feature id " + std::to_string(id));
      covered[i] = 1;
      idxs.push_back(i);
    }
    delta_groups_.emplace_back(rule_id, std::move(idxs));
  }
}

SimulatedEvaluator::SimulatedEvaluator(const FeatureModel& model, CostModel cost)
    : SimulatedEvaluator(model, std::move(cost), Options{}) {}

Measurement SimulatedEvaluator::measure(const Configuration& config, const AppSpec& app) {
  if (config.size() != model_->size())
    throw std::invalid_argument("simulated evaluator: configuration length mismatch");
  if (opt_.reject_invalid && !is_valid(config, *model_, app.compulsory_ids))
    return Measurement::failed();

  double cs_factor = 1.0, mu_factor = 1.0, et_factor = 1.0;
  auto apply = [&](const MetricDeltas& d) {
    cs_factor *= 1.0 + d.cs / 100.0;
    mu_factor *= 1.0 + d.mu / 100.0;
    et_factor *= 1.0 + d.et / 100.0;
  };

  // fully-flipped delta-bearing groups count once; remaining flips individually
  std::vector<std::uint8_t> covered(config.size(), 0);
  for (const auto& [rule_id, idxs] : delta_groups_) {
    bool whole = true;
    for (std::size_t i : idxs)
      if (!config.test(i)) whole = false;
    if (!whole) continue;
    apply(cost_.group_deltas.at(rule_id));
    for (std::size_t i : idxs) covered[i] = 1;
  }
  for (std::size_t i = 0; i < config.size(); ++i)
    if (config.test(i) && !covered[i]) apply(cost_.feature_deltas.at(model_->features()[i].id));

  const double cs = cost_.base_code_size_kb * cs_factor;
  double mu = app.base_memory_kb * mu_factor;
  double et = app.base_time_s * et_factor;

  if (cost_.noise_sigma > 0) {
    // noise keyed by (seed, app, config) so results do not depend on call order
    std::uint64_t h = fnv1a(app.name, fnv1a(config.to_string()) ^ opt_.seed);
    std::mt19937_64 rng(h);
    std::vector<double> mu_runs, et_runs;
    for (int r = 0; r < opt_.runs; ++r) {
      mu_runs.push_back(mu * std::max(0.01, 1.0 + cost_.noise_sigma * normal_draw(rng)));
      et_runs.push_back(et * std::max(0.01, 1.0 + cost_.noise_sigma * normal_draw(rng)));
    }
    mu = median_of(std::move(mu_runs));
    et = median_of(std::move(et_runs));
  }
  return Measurement::of(cs, mu, et);
}

EvaluationContext::EvaluationContext(const FeatureModel& model, AppSpec app,
                                     std::vector<Device> devices,
                                     std::shared_ptr<Evaluator> evaluator, Options opt)
    : model_(&model),
      app_(std::move(app)),
      devices_(std::move(devices)),
      evaluator_(std::move(evaluator)),
      opt_(std::move(opt)) {
  if (opt_.budget < 0) throw ValidationError("evaluation budget must be non-negative");
  if (opt_.parallelism < 1) throw ValidationError("parallelism must be >= 1");
  for (int id : app_.compulsory_ids) model_->index_of(id);  // compulsory ids must exist

  if (!opt_.cache_file.empty()) {
    std::ifstream in(opt_.cache_file);
    std::string line;
    while (in && std::getline(in, line)) {
      if (line.empty()) continue;
      auto fields = text::split(line, ',');
      if (fields.size() != 6 || fields[0] != app_.name) continue;
      if (fields[1].size() != model_->size()) continue;
      Measurement m = Measurement::failed();
      if (fields[2] == "1")
        m = Measurement::of(text::parse_number(fields[3], "cache cs"),
                            text::parse_number(fields[4], "cache mu"),
                            text::parse_number(fields[5], "cache et"));
      EvaluationRecord rec = make_record(Configuration::from_string(fields[1]), m);
      rec.evaluator_calls = 0;
      std::promise<EvaluationRecord> p;
      p.set_value(std::move(rec));
      table_[fields[1]] = Slot{p.get_future().share(), true};
    }
    cache_out_.open(opt_.cache_file, std::ios::app);
    if (!cache_out_)
      throw ValidationError("cannot open cache file " + opt_.cache_file.string());
  }
}

EvaluationContext::EvaluationContext(const FeatureModel& model, AppSpec app,
                                     std::vector<Device> devices,
                                     std::shared_ptr<Evaluator> evaluator)
    : EvaluationContext(model, std::move(app), std::move(devices), std::move(evaluator),
                        Options{}) {}

EvaluationRecord EvaluationContext::make_record(const Configuration& config,
                                                Measurement m) const {
  EvaluationRecord rec;
  rec.config = config;
  rec.measurement = m;
  rec.evaluator_calls = 1;
  if (m.feasible)
    rec.objectives = ObjectiveVector{udr(m, devices_, opt_.orientation), m.code_size_kb,
                                     m.memory_kb, m.time_s};
  return rec;
}

void EvaluationContext::append_cache_line(const EvaluationRecord& rec) {
  if (!cache_out_.is_open()) return;
  std::lock_guard lk(cache_mu_);
  const Measurement& m = rec.measurement;
  cache_out_ << app_.name << ',' << rec.config.to_string() << ',' << (m.feasible ? '1' : '0')
             << ',' << text::format_double(m.feasible ? m.code_size_kb : 0.0) << ','
             << text::format_double(m.feasible ? m.memory_kb : 0.0) << ','
             << text::format_double(m.feasible ? m.time_s : 0.0) << '\n';
  cache_out_.flush();
}

std::optional<EvaluationRecord> EvaluationContext::evaluate(const Configuration& config) {
  const std::string key = config.to_string();
  std::unique_lock lk(mu_);
  ++requests_;
  if (auto it = table_.find(key); it != table_.end()) {
    // repeats this run are free; the first touch of a preloaded entry still
    // needs a budget slot so warm caches replay rather than extend a search
    const bool first_touch = touched_.insert(key).second;
    if (first_touch) {
      if (charged_ >= opt_.budget) {
        touched_.erase(key);
        return std::nullopt;
      }
      ++charged_;
    }
    ++cache_hits_;
    auto fut = it->second.future;
    lk.unlock();
    EvaluationRecord rec = fut.get();  // rethrows the producer's EvaluatorError, if any
    rec.evaluator_calls = 0;
    return rec;
  }
  if (charged_ >= opt_.budget) return std::nullopt;
  ++charged_;
  ++started_;
  std::promise<EvaluationRecord> prom;
  table_.emplace(key, Slot{prom.get_future().share(), false});
  touched_.insert(key);
  lk.unlock();

  try {
    EvaluationRecord rec = make_record(config, evaluator_->measure(config, app_));
    prom.set_value(rec);
    append_cache_line(rec);
    return rec;
  } catch (...) {
    prom.set_exception(std::current_exception());
    throw;
  }
}

std::vector<std::optional<EvaluationRecord>> EvaluationContext::evaluate_batch(
    std::span<const Configuration> configs) {
  const std::size_t n = configs.size();
  std::vector<std::optional<EvaluationRecord>> results(n);

  struct Task {
    std::size_t index;
    Configuration config;
    std::promise<EvaluationRecord> prom;
  };
  std::vector<Task> tasks;
  std::vector<std::shared_future<EvaluationRecord>> waits(n);
  std::vector<std::uint8_t> rejected(n, 0), owner(n, 0);

  {
    std::lock_guard lk(mu_);
    for (std::size_t i = 0; i < n; ++i) {
      ++requests_;
      const std::string key = configs[i].to_string();
      if (auto it = table_.find(key); it != table_.end()) {
        const bool first_touch = touched_.insert(key).second;
        if (first_touch) {
          if (charged_ >= opt_.budget) {
            touched_.erase(key);
            rejected[i] = 1;
            continue;
          }
          ++charged_;
        }
        ++cache_hits_;
        waits[i] = it->second.future;
      } else if (charged_ < opt_.budget) {
        ++charged_;
        ++started_;
        Task t{i, configs[i], {}};
        waits[i] = t.prom.get_future().share();
        owner[i] = 1;
        table_.emplace(key, Slot{waits[i], false});
        touched_.insert(key);
        tasks.push_back(std::move(t));
      } else {
        rejected[i] = 1;
      }
    }
  }

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(opt_.parallelism), tasks.size());
  if (workers > 0) {
    std::atomic<std::size_t> next{0};
    auto run = [&] {
      while (true) {
        const std::size_t t = next.fetch_add(1);
        if (t >= tasks.size()) break;
        try {
          tasks[t].prom.set_value(make_record(tasks[t].config,
                                              evaluator_->measure(tasks[t].config, app_)));
        } catch (...) {
          tasks[t].prom.set_exception(std::current_exception());
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
  }

  // persist fresh results in submission order so cache files are deterministic
  for (Task& t : tasks) {
    auto fut = waits[t.index];
    try {
      append_cache_line(fut.get());
    } catch (...) {
      // evaluator failure; surfaced below in submission order
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (rejected[i]) continue;
    EvaluationRecord rec = waits[i].get();
    if (!owner[i]) rec.evaluator_calls = 0;
    results[i] = std::move(rec);
  }
  return results;
}

int EvaluationContext::invocations() const {
  std::lock_guard lk(mu_);
  return started_;
}

int EvaluationContext::requests() const {
  std::lock_guard lk(mu_);
  return requests_;
}

int EvaluationContext::cache_hits() const {
  std::lock_guard lk(mu_);
  return cache_hits_;
}

std::map<std::string, EvaluationRecord> EvaluationContext::touched_records() const {
  std::lock_guard lk(mu_);
  std::map<std::string, EvaluationRecord> out;
  for (const std::string& key : touched_) {
    auto it = table_.find(key);
    if (it == table_.end()) continue;
    try {
      out.emplace(key, it->second.future.get());
    } catch (...) {
      // producer failed; nothing to report for this key
    }
  }
  return out;
}

}  // namespace minishrink
