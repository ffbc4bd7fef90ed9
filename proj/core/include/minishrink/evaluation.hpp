#pragma once

// Turns configurations into measurements: a simulated cost model composed from
// per-flip percentage deltas, an external build-and-measure command, and a
// memoizing, budget-aware evaluation context shared by the search algorithms.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "minishrink/device_model.hpp"
#include "minishrink/feature_model.hpp"

namespace minishrink {

// percentage changes against the baseline build
struct MetricDeltas {
  double cs = 0.0;
  double mu = 0.0;
  double et = 0.0;
};

struct CostModel {
  double base_code_size_kb = 570.0;
  double noise_sigma = 0.0;  // stddev of the multiplicative noise on MU and ET
  std::map<int, MetricDeltas> feature_deltas;          // feature id -> single-flip deltas
  std::map<std::string, MetricDeltas> group_deltas;    // rule_id -> whole-group deltas
};

// Reads the top-level `cost_model` key of a feature-model file, or a standalone
// file holding the same object. Unlisted features get zero deltas; group keys
// must name rules of the model and delta-bearing groups must not overlap.
CostModel load_cost_model(const std::filesystem::path& path, const FeatureModel& model);

// 100 * (new - base) / base; throws ValidationError on zero base
double percentage_change(double new_median, double base_median);

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  // May throw EvaluatorError. Must be safe to call from multiple threads.
  virtual Measurement measure(const Configuration& config, const AppSpec& app) = 0;
};

// Desk-scale surrogate: multiplies the app baselines by (1 + delta/100) per
// flipped unit. A flipped unit is a fully-flipped delta-bearing rule group
// (counted once, group delta) or an individually flipped feature not covered
// by such a group (its own delta).
class SimulatedEvaluator final : public Evaluator {
 public:
  struct Options {
    int runs = 1;
    std::uint64_t seed = 0;
    // invalid configurations report feasible=false, emulating a failed build;
    // benchmarking of lone flips turns this off to measure them anyway
    bool reject_invalid = true;
  };

  SimulatedEvaluator(const FeatureModel& model, CostModel cost, Options opt);
  SimulatedEvaluator(const FeatureModel& model, CostModel cost);
  Measurement measure(const Configuration& config, const AppSpec& app) override;

  const CostModel& cost_model() const { return cost_; }

 private:
  const FeatureModel* model_;
  CostModel cost_;
  Options opt_;
  // bit positions of each delta-bearing group, precomputed
  std::vector<std::pair<std::string, std::vector<std::size_t>>> delta_groups_;
};

// Runs `command cfg_path app_name runs`; expects one "CS_BYTES MU_BYTES ET_SECONDS"
// line per run on stdout. Exit 0 = ok, 2 = build failure (feasible=false),
// anything else or garbage output = EvaluatorError. Commas in numeric tokens
// are ignored ("583,000" parses as 583000).
class ExternalEvaluator final : public Evaluator {
 public:
  struct Options {
    int runs = 10;
    std::chrono::seconds timeout{600};
  };

  // command is whitespace-split into argv
  ExternalEvaluator(const FeatureModel& model, std::string command, Options opt);
  ExternalEvaluator(const FeatureModel& model, std::string command);
  Measurement measure(const Configuration& config, const AppSpec& app) override;

 private:
  const FeatureModel* model_;
  std::vector<std::string> argv_;
  Options opt_;
};

struct EvaluationRecord {
  Configuration config;
  Measurement measurement;
  std::optional<ObjectiveVector> objectives;  // present iff measurement.feasible
  int evaluator_calls = 0;                    // 0 when served from cache
};

// Memoizing front-end over an Evaluator. The budget counts distinct evaluator
// invocations; cached keys are free. Thread-safe with per-key single-flight:
// concurrent requests for the same unseen key trigger exactly one invocation.
class EvaluationContext {
 public:
  struct Options {
    int budget = 250;
    int parallelism = 1;  // worker bound for evaluate_batch
    UsrOrientation orientation = UsrOrientation::as_written;
    std::filesystem::path cache_file;  // optional persistent cache, loaded then appended
  };

  EvaluationContext(const FeatureModel& model, AppSpec app, std::vector<Device> devices,
                    std::shared_ptr<Evaluator> evaluator, Options opt);
  EvaluationContext(const FeatureModel& model, AppSpec app, std::vector<Device> devices,
                    std::shared_ptr<Evaluator> evaluator);

  // Empty once the budget is exhausted (already-cached keys are still served).
  std::optional<EvaluationRecord> evaluate(const Configuration& config);

  // Batch evaluation with deterministic budget accounting: budget slots are
  // reserved in submission order and results applied in submission order, so
  // the outcome is independent of worker count and scheduling.
  std::vector<std::optional<EvaluationRecord>> evaluate_batch(
      std::span<const Configuration> configs);

  int budget() const { return opt_.budget; }
  int invocations() const;  // evaluator calls so far, <= budget
  int requests() const;
  int cache_hits() const;

  const FeatureModel& model() const { return *model_; }
  const AppSpec& app() const { return app_; }
  const std::vector<Device>& devices() const { return devices_; }
  UsrOrientation orientation() const { return opt_.orientation; }

  // every record requested or produced during this run, keyed by bitstring
  std::map<std::string, EvaluationRecord> touched_records() const;

 private:
  struct Slot {
    std::shared_future<EvaluationRecord> future;
    bool preloaded = false;
  };

  EvaluationRecord make_record(const Configuration& config, Measurement m) const;
  void append_cache_line(const EvaluationRecord& rec);

  const FeatureModel* model_;
  AppSpec app_;
  std::vector<Device> devices_;
  std::shared_ptr<Evaluator> evaluator_;
  Options opt_;

  mutable std::mutex mu_;
  std::map<std::string, Slot> table_;
  std::set<std::string> touched_;
  // Budget accounting is by distinct key requested this run, not by evaluator
  // work: a preloaded cache entry consumes a slot on first touch. A warm cache
  // therefore never alters a seeded search trajectory, it only makes the same
  // trajectory cheaper.
  int charged_ = 0;  // distinct keys that consumed a budget slot this run
  int started_ = 0;  // evaluator invocations (fresh keys only)
  int requests_ = 0;
  int cache_hits_ = 0;
  std::ofstream cache_out_;
  std::mutex cache_mu_;
};

}  // namespace minishrink
