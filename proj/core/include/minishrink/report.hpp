#pragma once

// End-to-end runners behind the CLI subcommands, kept in the library so tests
// can drive them directly: optimize (search -> report.json + archive.csv),
// bench (per-feature/per-group flip deltas), compare (HV/PFS/stats across
// algorithms over repeated seeded runs).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "minishrink/evaluation.hpp"
#include "minishrink/search.hpp"

namespace minishrink {

enum class Algo { nsga2, hybrid_rs, sway };
std::optional<Algo> parse_algo(std::string_view name);  // nsga2 | hybrid-rs | sway
const char* to_string(Algo a);

// "simulated" or "external:CMD" plus its knobs
struct EvaluatorSpec {
  bool simulated = true;
  std::string command;                  // external command line, whitespace-split
  std::optional<int> runs;              // default 1 simulated, 10 external
  std::optional<double> noise_override; // override the cost model's noise_sigma
  std::optional<int> timeout_s;         // external per-invocation timeout
  bool reject_invalid = true;           // bench turns this off
};

EvaluatorSpec parse_evaluator_spec(std::string_view text);  // throws ValidationError

struct OptimizeRequest {
  std::filesystem::path model_path;
  std::filesystem::path app_path;
  std::filesystem::path devices_path;
  std::optional<std::filesystem::path> cost_model_path;  // defaults to model_path
  Algo algo = Algo::hybrid_rs;
  EvaluatorSpec evaluator;
  SearchParams params;
  int parallelism = 1;
  UsrOrientation orientation = UsrOrientation::as_written;
  std::filesystem::path cache_file;  // empty = in-memory memoization only
};

struct RunReport {
  std::string app;
  std::string algorithm;
  std::uint64_t seed = 0;
  int evaluations_used = 0;
  double wall_time_s = 0.0;
  EvaluationRecord baseline;  // all-zero configuration, same evaluator/seed
  Archive archive;
  std::vector<Device> devices;

  struct Summary {
    bool has_deltas = false;  // false when the archive or baseline is unusable
    double median_delta_cs = 0.0;
    double median_delta_mu = 0.0;
    double median_delta_et = 0.0;
    int devices_before = 0;
    int devices_after = 0;
    int nda = 0;
  };
  // always recomputed from the archive rows, never stored
  Summary summary() const;
};

RunReport run_optimize(const OptimizeRequest& req);
void write_report_json(const RunReport& report, const std::filesystem::path& path);
// rows sorted by bitstring: bitstring,cs_kb,mu_kb,et_s,udr,fits_<device>...
void write_archive_csv(const RunReport& report, const std::filesystem::path& path);

struct BenchRequest {
  std::filesystem::path model_path;
  std::filesystem::path app_path;
  std::optional<std::filesystem::path> cost_model_path;
  EvaluatorSpec evaluator;
  std::uint64_t seed = 0;
};

struct BenchRow {
  std::string id;     // feature id, or rule id for whole-group rows
  std::string value;  // rendered modified value; "vary" when group members differ
  bool skipped = false;  // build failure; metric cells emitted as NA
  Measurement measurement;
  MetricDeltas deltas;
};

struct BenchResult {
  Measurement baseline;
  std::vector<BenchRow> rows;
};

BenchResult run_bench(const BenchRequest& req);
// id,value,cs_kb,mu_kb,et_s,delta_cs,delta_mu,delta_et
void write_bench_csv(const BenchResult& result, const std::filesystem::path& path);

struct CompareRequest {
  std::filesystem::path model_path;
  std::filesystem::path app_path;
  std::filesystem::path devices_path;
  std::optional<std::filesystem::path> cost_model_path;
  std::vector<Algo> algos;  // first entry is the statistical baseline
  int runs = 30;
  EvaluatorSpec evaluator;
  SearchParams params;  // seed is the base; run r uses seed + r
  int parallelism = 1;
  UsrOrientation orientation = UsrOrientation::as_written;
};

struct CompareResult {
  struct HvRow {
    std::string algorithm;
    int run = 0;
    double hv = 0.0;
  };
  struct SummaryRow {
    std::string algorithm;
    int pfs_count = 0;
    double pfs_pct = 0.0;
    double u_p_value = 1.0;   // HV sample vs the first algorithm's
    double cliffs_delta = 0.0;
    std::string magnitude;
  };
  struct TimingRow {
    std::string algorithm;
    double median_wall_s = 0.0;
  };

  std::string app;
  std::vector<HvRow> hv_rows;
  std::vector<SummaryRow> summary_rows;
  std::vector<TimingRow> timing_rows;
};

CompareResult run_compare(const CompareRequest& req);
// hv.csv, summary.csv, timings.csv under out_dir
void write_compare_csvs(const CompareResult& result, const std::filesystem::path& out_dir);

}  // namespace minishrink
