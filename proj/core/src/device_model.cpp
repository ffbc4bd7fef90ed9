#include "minishrink/device_model.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "minishrink/errors.hpp"

namespace minishrink {

using nlohmann::json;

std::vector<Device> load_devices(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  std::vector<Device> devices;
  try {
    for (const auto& dj : j) {
      Device d;
      d.name = dj.at("name").get<std::string>();
      d.memory_kb = dj.at("memory_kb").get<double>();
      d.storage_kb = dj.at("storage_kb").get<double>();
      d.rank_value = dj.at("rank").get<int>();
      devices.push_back(std::move(d));
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (devices.empty()) throw ValidationError(path.string() + ": empty device catalog");
  for (const Device& d : devices) {
    if (d.memory_kb <= 0 || d.storage_kb <= 0)
      throw ValidationError("device " + d.name + ": capacities must be positive");
    if (d.rank_value < 1)
      throw ValidationError("device " + d.name + ": rank must be >= 1");
  }
  return devices;
}

double dsr(const Measurement& m, const Device& d) {
  if (!m.feasible) throw std::logic_error("dsr: infeasible measurement");
  const double storage_term = (m.code_size_kb - d.storage_kb) / d.storage_kb;
  const double memory_term = (m.memory_kb - d.memory_kb) / d.memory_kb;
  return (storage_term + memory_term) / 2.0;
}

double usr(const Measurement& m, std::span<const Device> devices, UsrOrientation orientation) {
  if (devices.empty()) throw std::invalid_argument("usr: empty device list");
  int vmax = 0;
  for (const Device& d : devices) vmax = std::max(vmax, d.rank_value);
  double sum = 0.0;
  for (const Device& d : devices) {
    double s = dsr(m, d);
    if (orientation == UsrOrientation::slack) s = -s;
    sum += s * (static_cast<double>(d.rank_value) / vmax);
  }
  return sum / static_cast<double>(devices.size());
}

double udr(const Measurement& m, std::span<const Device> devices, UsrOrientation orientation) {
  return -usr(m, devices, orientation);
}

bool fits(const Measurement& m, const Device& d) {
  if (!m.feasible) return false;
  return m.code_size_kb <= d.storage_kb && m.memory_kb <= d.memory_kb;
}

int device_count(std::span<const Measurement> solutions, std::span<const Device> devices) {
  int n = 0;
  for (const Device& d : devices) {
    for (const Measurement& m : solutions) {
      if (fits(m, d)) {
        ++n;
        break;
      }
    }
  }
  return n;
}

int nda(int devices_before, int devices_after) { return devices_after - devices_before; }

}  // namespace minishrink
