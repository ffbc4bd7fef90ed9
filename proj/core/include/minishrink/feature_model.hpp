#pragma once

// Feature model of a configurable interpreter: named options with default and
// modified values, dependency rules between them, and bit-vector configurations
// where bit=1 flips the corresponding option to its modified value.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "minishrink/errors.hpp"

namespace minishrink {

// An option value is either a boolean switch or an integer knob.
// Rendered as TRUE / FALSE / decimal digits in cfg files.
class FeatureValue {
 public:
  FeatureValue() : v_(false) {}
  static FeatureValue boolean(bool b) { return FeatureValue(b); }
  static FeatureValue integer(std::int64_t i) { return FeatureValue(i); }

  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool as_bool() const { return std::get<bool>(v_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
  std::string to_string() const;

  friend bool operator==(const FeatureValue&, const FeatureValue&) = default;

 private:
  explicit FeatureValue(bool b) : v_(b) {}
  explicit FeatureValue(std::int64_t i) : v_(i) {}
  std::variant<bool, std::int64_t> v_;
};

struct Feature {
  int id = 0;
  std::string name;
  FeatureValue default_value;
  FeatureValue modified_value;
  std::string category;
};

enum class RuleKind { implies_flip, all_equal, exclusive_group };

struct DependencyRule {
  std::string rule_id;
  RuleKind kind = RuleKind::implies_flip;
  std::vector<int> antecedent_ids;  // implies_flip only
  std::vector<int> consequent_ids;  // implies_flip only
  std::vector<int> group_ids;       // all_equal / exclusive_group only

  // every feature id the rule touches, sorted, deduplicated
  std::vector<int> member_ids() const;
};

// What repair does with a partially-flipped exclusive group:
// deactivate clears the group; activate_all_reset flips the whole group on
// and resets every other bit to 0.
enum class RomPolicy { deactivate, activate_all_reset };

// Fixed-length bit-vector; bit i addresses the i-th feature in model order.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::size_t n_bits) : bits_(n_bits, 0) {}
  static Configuration from_string(std::string_view s);  // '0'/'1' chars only

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool value = true) { bits_[i] = value ? 1 : 0; }
  std::size_t count() const;                             // bits set
  std::size_t hamming(const Configuration& other) const;  // sizes must match
  std::string to_string() const;

  friend bool operator==(const Configuration&, const Configuration&) = default;
  friend auto operator<=>(const Configuration&, const Configuration&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

class FeatureModel {
 public:
  // Validates everything (unique ids, rule references, rule shapes, at most
  // one exclusive group); throws ValidationError. Rules are kept sorted by
  // ascending rule_id, which is also repair's application order.
  FeatureModel(std::vector<Feature> features, std::vector<DependencyRule> rules,
               RomPolicy rom_policy);

  const std::vector<Feature>& features() const { return features_; }
  const std::vector<DependencyRule>& rules() const { return rules_; }
  RomPolicy rom_policy() const { return rom_policy_; }
  // ids of the exclusive_group rule's members; empty when the model has none
  const std::vector<int>& rom_group() const { return rom_group_; }

  std::size_t size() const { return features_.size(); }
  std::size_t index_of(int feature_id) const;  // bit position; throws on unknown id
  const Feature& feature(int feature_id) const;

 private:
  std::vector<Feature> features_;
  std::vector<DependencyRule> rules_;
  RomPolicy rom_policy_ = RomPolicy::deactivate;
  std::vector<int> rom_group_;
  std::unordered_map<int, std::size_t> index_;
};

FeatureModel load_feature_model(const std::filesystem::path& path);

struct AppSpec {
  std::string name;
  std::vector<int> compulsory_ids;  // sorted, unique; locked at bit 0
  double base_memory_kb = 0.0;
  double base_time_s = 0.0;
};

AppSpec load_app_spec(const std::filesystem::path& path);

// Forces a configuration to satisfy every dependency rule and compulsory lock.
// Total, deterministic, idempotent; rules run in ascending rule_id order until
// fixpoint (iteration cap = rule count + 1).
Configuration repair(const Configuration& config, const FeatureModel& model,
                     const std::vector<int>& compulsory_ids);

bool is_valid(const Configuration& config, const FeatureModel& model,
              const std::vector<int>& compulsory_ids);

// Uniform free bits (each 1 with probability 0.5), then repair.
Configuration random_valid(const FeatureModel& model,
                           const std::vector<int>& compulsory_ids,
                           std::mt19937_64& rng);
Configuration random_valid(const FeatureModel& model,
                           const std::vector<int>& compulsory_ids,
                           std::uint64_t rng_seed);

// Bit/feature-id bijection helpers.
Configuration encode(const FeatureModel& model, const std::vector<int>& flipped_ids);
std::vector<int> decode(const FeatureModel& model, const Configuration& config);

}  // namespace minishrink
