#pragma once

// Device catalog and satisfaction metrics: per-device satisfaction rate (DSR),
// rank-weighted user satisfaction (USR) and its negation UDR, fit predicates,
// and the devices-attained delta (NDA).

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace minishrink {

struct Device {
  std::string name;
  double memory_kb = 0.0;
  double storage_kb = 0.0;
  int rank_value = 1;  // user preference weight; higher = more desirable
};

std::vector<Device> load_devices(const std::filesystem::path& path);

// One build's measured properties. When feasible is false (build failure)
// the metric fields are meaningless and must not be read.
struct Measurement {
  bool feasible = false;
  double code_size_kb = 0.0;
  double memory_kb = 0.0;
  double time_s = 0.0;

  static Measurement failed() { return {}; }
  static Measurement of(double cs_kb, double mu_kb, double et_s) {
    return {true, cs_kb, mu_kb, et_s};
  }
};

// The four minimized objectives.
struct ObjectiveVector {
  double udr = 0.0;
  double code_size_kb = 0.0;
  double memory_kb = 0.0;
  double time_s = 0.0;
};

// DSR as written averages signed relative slack, so it *increases* as usage
// approaches capacity; `slack` negates it before weighting for callers who
// want "higher = more satisfied" instead of the as-written orientation.
enum class UsrOrientation { as_written, slack };

// mean over the two constrained resources of (used - capacity) / capacity
double dsr(const Measurement& m, const Device& d);

// rank-weighted mean of dsr over the catalog; Vmax = max rank in the list
double usr(const Measurement& m, std::span<const Device> devices,
           UsrOrientation orientation = UsrOrientation::as_written);

double udr(const Measurement& m, std::span<const Device> devices,
           UsrOrientation orientation = UsrOrientation::as_written);

// code size within storage and memory within capacity; false when infeasible
bool fits(const Measurement& m, const Device& d);

// number of devices at least one solution fits on
int device_count(std::span<const Measurement> solutions, std::span<const Device> devices);

int nda(int devices_before, int devices_after);

}  // namespace minishrink
