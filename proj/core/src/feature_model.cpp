#include "minishrink/feature_model.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace minishrink {

using nlohmann::json;

std::string FeatureValue::to_string() const {
  if (is_bool()) return as_bool() ? "TRUE" : "FALSE";
  return std::to_string(as_int());
}

std::vector<int> DependencyRule::member_ids() const {
  std::vector<int> out;
  out.insert(out.end(), antecedent_ids.begin(), antecedent_ids.end());
  out.insert(out.end(), consequent_ids.begin(), consequent_ids.end());
  out.insert(out.end(), group_ids.begin(), group_ids.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Configuration Configuration::from_string(std::string_view s) {
  Configuration c(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '1') {
      c.set(i);
    } else if (s[i] != '0') {
      throw ParseError("bad bitstring character '" + std::string(1, s[i]) + "'");
    }
  }
  return c;
}

std::size_t Configuration::count() const {
  std::size_t n = 0;
  for (auto b : bits_) n += b;
  return n;
}

std::size_t Configuration::hamming(const Configuration& other) const {
  if (size() != other.size())
    throw std::invalid_argument("hamming: configuration sizes differ");
  std::size_t n = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i) n += bits_[i] != other.bits_[i];
  return n;
}

std::string Configuration::to_string() const {
  std::string s(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) s[i] = '1';
  return s;
}

FeatureModel::FeatureModel(std::vector<Feature> features, std::vector<DependencyRule> rules,
                           RomPolicy rom_policy)
    : features_(std::move(features)), rules_(std::move(rules)), rom_policy_(rom_policy) {
  if (features_.empty()) throw ValidationError("feature model has no features");
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const Feature& f = features_[i];
    if (f.name.empty()) throw ValidationError("feature without a name");
    if (f.default_value == f.modified_value)
      throw ValidationError("feature " + f.name + ": default equals modified value");
    if (!index_.emplace(f.id, i).second)
      throw ValidationError("duplicate feature id " + std::to_string(f.id));
  }

  std::set<std::string> rule_ids;
  for (const DependencyRule& r : rules_) {
    if (r.rule_id.empty()) throw ValidationError("rule without rule_id");
    if (!rule_ids.insert(r.rule_id).second)
      throw ValidationError("duplicate rule_id " + r.rule_id);
    for (int id : r.member_ids())
      if (!index_.contains(id))
        throw ValidationError("rule " + r.rule_id + " references unknown feature id " +
                              std::to_string(id));
    switch (r.kind) {
      case RuleKind::implies_flip:
        if (r.antecedent_ids.empty() || r.consequent_ids.empty())
          throw ValidationError("rule " + r.rule_id + ": implies_flip needs antecedent and consequent");
        if (!r.group_ids.empty())
          throw ValidationError("rule " + r.rule_id + ": implies_flip takes no group");
        break;
      case RuleKind::all_equal:
      case RuleKind::exclusive_group:
        if (r.group_ids.size() < 2)
          throw ValidationError("rule " + r.rule_id + ": group needs at least 2 members");
        if (!r.antecedent_ids.empty() || !r.consequent_ids.empty())
          throw ValidationError("rule " + r.rule_id + ": group rules take no antecedent/consequent");
        break;
    }
    if (r.kind == RuleKind::exclusive_group) {
      if (!rom_group_.empty())
        throw ValidationError("more than one exclusive_group rule");
      rom_group_ = r.group_ids;
      std::sort(rom_group_.begin(), rom_group_.end());
    }
  }
  std::sort(rules_.begin(), rules_.end(),
            [](const DependencyRule& a, const DependencyRule& b) { return a.rule_id < b.rule_id; });
}

std::size_t FeatureModel::index_of(int feature_id) const {
  auto it = index_.find(feature_id);
  if (it == index_.end())
    throw ValidationError("unknown feature id " + std::to_string(feature_id));
  return it->second;
}

const Feature& FeatureModel::feature(int feature_id) const {
  return features_[index_of(feature_id)];
}

namespace {

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return j;
}

FeatureValue value_from_json(const json& j, const std::string& where) {
  if (j.is_boolean()) return FeatureValue::boolean(j.get<bool>());
  if (j.is_number_integer()) return FeatureValue::integer(j.get<std::int64_t>());
  throw ParseError(where + ": feature values must be booleans or integers");
}

RuleKind kind_from_string(const std::string& s, const std::string& where) {
  if (s == "implies_flip") return RuleKind::implies_flip;
  if (s == "all_equal") return RuleKind::all_equal;
  if (s == "exclusive_group") return RuleKind::exclusive_group;
  throw ParseError(where + ": unknown rule kind '" + s + "'");
}

std::vector<int> ids_from_json(const json& j) {
  std::vector<int> out;
  for (const auto& v : j) out.push_back(v.get<int>());
  return out;
}

}  // namespace

FeatureModel load_feature_model(const std::filesystem::path& path) {
  json j = parse_file(path);
  try {
    std::vector<Feature> features;
    for (const auto& fj : j.at("features")) {
      Feature f;
      f.id = fj.at("id").get<int>();
      f.name = fj.at("name").get<std::string>();
      f.default_value = value_from_json(fj.at("default"), f.name);
      f.modified_value = value_from_json(fj.at("modified"), f.name);
      f.category = fj.value("category", "");
      features.push_back(std::move(f));
    }
    std::vector<DependencyRule> rules;
    for (const auto& rj : j.value("rules", json::array())) {
      DependencyRule r;
      r.rule_id = rj.at("rule_id").get<std::string>();
      r.kind = kind_from_string(rj.at("kind").get<std::string>(), r.rule_id);
      if (rj.contains("antecedent")) r.antecedent_ids = ids_from_json(rj["antecedent"]);
      if (rj.contains("consequent")) r.consequent_ids = ids_from_json(rj["consequent"]);
      if (rj.contains("group")) r.group_ids = ids_from_json(rj["group"]);
      rules.push_back(std::move(r));
    }
    RomPolicy policy = RomPolicy::deactivate;
    if (j.contains("rom_policy")) {
      std::string p = j["rom_policy"].get<std::string>();
      if (p == "deactivate") {
        policy = RomPolicy::deactivate;
      } else if (p == "activate_all_reset") {
        policy = RomPolicy::activate_all_reset;
      } else {
        throw ParseError(path.string() + ": unknown rom_policy '" + p + "'");
      }
    }
    return FeatureModel(std::move(features), std::move(rules), policy);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

AppSpec load_app_spec(const std::filesystem::path& path) {
  json j = parse_file(path);
  try {
    AppSpec app;
    app.name = j.at("name").get<std::string>();
    app.compulsory_ids = ids_from_json(j.value("compulsory", json::array()));
    std::sort(app.compulsory_ids.begin(), app.compulsory_ids.end());
    app.compulsory_ids.erase(std::unique(app.compulsory_ids.begin(), app.compulsory_ids.end()),
                             app.compulsory_ids.end());
    app.base_memory_kb = j.at("base_memory_kb").get<double>();
    app.base_time_s = j.at("base_time_s").get<double>();
    if (app.name.empty()) throw ValidationError(path.string() + ": empty app name");
    if (app.base_memory_kb <= 0 || app.base_time_s <= 0)
      throw ValidationError(path.string() + ": app baselines must be positive");
    return app;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

namespace {

std::vector<std::uint8_t> lock_mask(const FeatureModel& model,
                                    const std::vector<int>& compulsory_ids) {
  std::vector<std::uint8_t> locked(model.size(), 0);
  for (int id : compulsory_ids) locked[model.index_of(id)] = 1;
  return locked;
}

void check_length(const Configuration& config, const FeatureModel& model) {
  if (config.size() != model.size())
    throw std::invalid_argument("configuration length does not match the model");
}

}  // namespace

bool is_valid(const Configuration& config, const FeatureModel& model,
              const std::vector<int>& compulsory_ids) {
  check_length(config, model);
  for (int id : compulsory_ids)
    if (config.test(model.index_of(id))) return false;

  for (const DependencyRule& r : model.rules()) {
    switch (r.kind) {
      case RuleKind::implies_flip: {
        bool triggered = true;
        for (int id : r.antecedent_ids)
          if (!config.test(model.index_of(id))) triggered = false;
        if (triggered)
          for (int id : r.consequent_ids)
            if (!config.test(model.index_of(id))) return false;
        break;
      }
      case RuleKind::all_equal: {
        bool first = config.test(model.index_of(r.group_ids.front()));
        for (int id : r.group_ids)
          if (config.test(model.index_of(id)) != first) return false;
        break;
      }
      case RuleKind::exclusive_group: {
        std::size_t set_bits = 0;
        for (int id : r.group_ids) set_bits += config.test(model.index_of(id));
        if (set_bits == 0) break;
        if (set_bits < r.group_ids.size()) return false;
        // fully active group excludes every other flip
        std::vector<std::uint8_t> in_group(model.size(), 0);
        for (int id : r.group_ids) in_group[model.index_of(id)] = 1;
        for (std::size_t i = 0; i < config.size(); ++i)
          if (config.test(i) && !in_group[i]) return false;
        break;
      }
    }
  }
  return true;
}

Configuration repair(const Configuration& config, const FeatureModel& model,
                     const std::vector<int>& compulsory_ids) {
  check_length(config, model);
  Configuration out = config;
  const std::vector<std::uint8_t> locked = lock_mask(model, compulsory_ids);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (locked[i]) out.set(i, false);

  const std::size_t sweep_cap = model.rules().size() + 1;
  for (std::size_t sweep = 0; sweep < sweep_cap; ++sweep) {
    bool changed = false;
    for (const DependencyRule& r : model.rules()) {
      switch (r.kind) {
        case RuleKind::implies_flip: {
          bool triggered = true;
          for (int id : r.antecedent_ids)
            if (!out.test(model.index_of(id))) triggered = false;
          if (!triggered) break;
          bool consequent_locked = false;
          for (int id : r.consequent_ids)
            if (locked[model.index_of(id)]) consequent_locked = true;
          if (consequent_locked) {
            // cannot satisfy the consequent; withdraw the antecedent instead
            for (int id : r.antecedent_ids) {
              std::size_t i = model.index_of(id);
              if (out.test(i)) { out.set(i, false); changed = true; }
            }
          } else {
            for (int id : r.consequent_ids) {
              std::size_t i = model.index_of(id);
              if (!out.test(i)) { out.set(i); changed = true; }
            }
          }
          break;
        }
        case RuleKind::all_equal: {
          std::size_t set_bits = 0;
          bool member_locked = false;
          for (int id : r.group_ids) {
            std::size_t i = model.index_of(id);
            set_bits += out.test(i);
            member_locked = member_locked || locked[i];
          }
          if (set_bits == 0 || (set_bits == r.group_ids.size() && !member_locked)) break;
          const bool target = !member_locked;  // a locked member forces the group to default
          for (int id : r.group_ids) {
            std::size_t i = model.index_of(id);
            if (out.test(i) != target) { out.set(i, target); changed = true; }
          }
          break;
        }
        case RuleKind::exclusive_group: {
          std::size_t set_bits = 0;
          bool member_locked = false;
          std::vector<std::uint8_t> in_group(model.size(), 0);
          for (int id : r.group_ids) {
            std::size_t i = model.index_of(id);
            in_group[i] = 1;
            set_bits += out.test(i);
            member_locked = member_locked || locked[i];
          }
          if (set_bits == 0) break;
          const bool activate =
              model.rom_policy() == RomPolicy::activate_all_reset && !member_locked;
          if (!activate) {
            for (int id : r.group_ids) {
              std::size_t i = model.index_of(id);
              if (out.test(i)) { out.set(i, false); changed = true; }
            }
            break;
          }
          // activate the whole group and reset everything else to default
          for (std::size_t i = 0; i < out.size(); ++i) {
            const bool target = in_group[i] != 0;
            if (out.test(i) != target) { out.set(i, target); changed = true; }
          }
          break;
        }
      }
    }
    if (!changed) break;
  }

  // Safety net for rule sets whose interaction with the locks cannot settle:
  // clearing every rule-mentioned bit always yields a valid configuration.
  if (!is_valid(out, model, compulsory_ids)) {
    for (const DependencyRule& r : model.rules())
      for (int id : r.member_ids()) out.set(model.index_of(id), false);
  }
  return out;
}

Configuration random_valid(const FeatureModel& model, const std::vector<int>& compulsory_ids,
                           std::mt19937_64& rng) {
  const std::vector<std::uint8_t> locked = lock_mask(model, compulsory_ids);
  Configuration c(model.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (locked[i]) continue;
    c.set(i, ((rng() >> 33) & 1) != 0);
  }
  return repair(c, model, compulsory_ids);
}

Configuration random_valid(const FeatureModel& model, const std::vector<int>& compulsory_ids,
                           std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  return random_valid(model, compulsory_ids, rng);
}

Configuration encode(const FeatureModel& model, const std::vector<int>& flipped_ids) {
  Configuration c(model.size());
  for (int id : flipped_ids) c.set(model.index_of(id));
  return c;
}

std::vector<int> decode(const FeatureModel& model, const Configuration& config) {
  check_length(config, model);
  std::vector<int> out;
  for (std::size_t i = 0; i < config.size(); ++i)
    if (config.test(i)) out.push_back(model.features()[i].id);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace minishrink
