#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "minishrink/feature_model.hpp"
#include "test_support.hpp"

using namespace minishrink;
using testsup::data_dir;

namespace {

const FeatureModel& shipped_model() {
  static FeatureModel m = load_feature_model(testsup::model_path());
  return m;
}

Configuration cfg_of(const FeatureModel& m, const std::vector<int>& ids) {
  return encode(m, ids);
}

std::vector<int> ids_of(const FeatureModel& m, const Configuration& c) { return decode(m, c); }

}  // namespace

TEST_CASE("feature values render as TRUE/FALSE/digits") {
  CHECK(FeatureValue::boolean(true).to_string() == "TRUE");
  CHECK(FeatureValue::boolean(false).to_string() == "FALSE");
  CHECK(FeatureValue::integer(256).to_string() == "256");
  CHECK(FeatureValue::integer(0).to_string() == "0");
  CHECK(FeatureValue::boolean(true) == FeatureValue::boolean(true));
  CHECK(FeatureValue::boolean(true) != FeatureValue::integer(1));
}

TEST_CASE("configuration bitstring round-trip and helpers") {
  auto c = Configuration::from_string("01011");
  CHECK(c.size() == 5);
  CHECK(c.count() == 3);
  CHECK(c.to_string() == "01011");
  CHECK(!c.test(0));
  CHECK(c.test(1));

  auto d = Configuration::from_string("01000");
  CHECK(c.hamming(d) == 2);
  CHECK(c.hamming(c) == 0);

  Configuration e(5);
  CHECK(e.count() == 0);
  e.set(4);
  CHECK(e.to_string() == "00001");
  e.set(4, false);
  CHECK(e.count() == 0);

  CHECK_THROWS_AS(Configuration::from_string("01x1"), ParseError);
  CHECK_THROWS_AS(c.hamming(Configuration(4)), std::invalid_argument);

  CHECK(Configuration::from_string("001") < Configuration::from_string("010"));
}

TEST_CASE("shipped model loads with 86 features and 10 sorted rules") {
  const auto& m = shipped_model();
  CHECK(m.size() == 86);
  CHECK(m.features().size() == 86);
  CHECK(m.rules().size() == 10);
  CHECK(m.rom_policy() == RomPolicy::deactivate);
  CHECK(m.rom_group() == std::vector<int>{7, 8, 9, 10});
  CHECK(std::is_sorted(m.rules().begin(), m.rules().end(),
                       [](const auto& a, const auto& b) { return a.rule_id < b.rule_id; }));
  // bit positions follow file order
  CHECK(m.index_of(1) == 0);
  CHECK(m.feature(3).name == "DUK_USE_EXEC_PREFER_SIZE");
  CHECK_THROWS_AS(m.index_of(999), ValidationError);
  CHECK_THROWS_AS(m.feature(999), ValidationError);
}

TEST_CASE("rule member_ids covers every referenced feature, sorted unique") {
  DependencyRule r;
  r.rule_id = "x";
  r.kind = RuleKind::implies_flip;
  r.antecedent_ids = {5, 3};
  r.consequent_ids = {3, 9};
  CHECK(r.member_ids() == std::vector<int>{3, 5, 9});
}

TEST_CASE("model constructor rejects malformed input") {
  auto boolean_feature = [](int id, const std::string& name) {
    return Feature{id, name, FeatureValue::boolean(true), FeatureValue::boolean(false), "c"};
  };
  std::vector<Feature> two = {boolean_feature(1, "A"), boolean_feature(2, "B")};

  CHECK_THROWS_AS(FeatureModel({}, {}, RomPolicy::deactivate), ValidationError);

  std::vector<Feature> dup = {boolean_feature(1, "A"), boolean_feature(1, "B")};
  CHECK_THROWS_AS(FeatureModel(dup, {}, RomPolicy::deactivate), ValidationError);

  std::vector<Feature> same_value = {
      {1, "A", FeatureValue::boolean(true), FeatureValue::boolean(true), "c"}};
  CHECK_THROWS_AS(FeatureModel(same_value, {}, RomPolicy::deactivate), ValidationError);

  DependencyRule dangling{"r1", RuleKind::implies_flip, {1}, {99}, {}};
  CHECK_THROWS_AS(FeatureModel(two, {dangling}, RomPolicy::deactivate), ValidationError);

  DependencyRule no_consequent{"r1", RuleKind::implies_flip, {1}, {}, {}};
  CHECK_THROWS_AS(FeatureModel(two, {no_consequent}, RomPolicy::deactivate), ValidationError);

  DependencyRule tiny_group{"r1", RuleKind::all_equal, {}, {}, {1}};
  CHECK_THROWS_AS(FeatureModel(two, {tiny_group}, RomPolicy::deactivate), ValidationError);

  DependencyRule ra{"r1", RuleKind::implies_flip, {1}, {2}, {}};
  DependencyRule rb{"r1", RuleKind::implies_flip, {2}, {1}, {}};
  CHECK_THROWS_AS(FeatureModel(two, {ra, rb}, RomPolicy::deactivate), ValidationError);

  DependencyRule ex1{"r1", RuleKind::exclusive_group, {}, {}, {1, 2}};
  DependencyRule ex2{"r2", RuleKind::exclusive_group, {}, {}, {1, 2}};
  CHECK_THROWS_AS(FeatureModel(two, {ex1, ex2}, RomPolicy::deactivate), ValidationError);
  CHECK_NOTHROW(FeatureModel(two, {ex1}, RomPolicy::deactivate));
}

TEST_CASE("load errors distinguish parse from validation") {
  CHECK_THROWS_AS(load_feature_model(data_dir() / "nope.json"), ParseError);
  auto dir = testsup::make_temp_dir("fm");
  testsup::write_file(dir / "bad.json", "{ not json");
  CHECK_THROWS_AS(load_feature_model(dir / "bad.json"), ParseError);
  testsup::write_file(dir / "dangling.json", R"({
    "features": [{"id": 1, "name": "A", "default": true, "modified": false, "category": "c"}],
    "rules": [{"rule_id": "r1", "kind": "implies_flip", "antecedent": [1], "consequent": [999]}],
    "rom_policy": "deactivate"
  })");
  CHECK_THROWS_AS(load_feature_model(dir / "dangling.json"), ValidationError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("app specs load with sorted compulsory ids") {
  auto app = load_app_spec(testsup::app_path("3d-cube"));
  CHECK(app.name == "3d-cube");
  CHECK(app.compulsory_ids == std::vector<int>{15, 29, 31, 34});
  CHECK(app.base_memory_kb == doctest::Approx(166.496));
  CHECK(app.base_time_s == doctest::Approx(0.205));
  CHECK_THROWS_AS(load_app_spec(data_dir() / "apps" / "nope.json"), ParseError);
}

TEST_CASE("validity: implies, all_equal, exclusive group, compulsory") {
  const auto& m = shipped_model();
  const std::vector<int> none;

  CHECK(is_valid(Configuration(m.size()), m, none));
  CHECK(is_valid(Configuration(m.size()), m, {15, 29}));

  CHECK(!is_valid(cfg_of(m, {26}), m, none));        // 26 requires 27
  CHECK(is_valid(cfg_of(m, {26, 27}), m, none));
  CHECK(!is_valid(cfg_of(m, {72, 73}), m, none));    // 72-74 move together
  CHECK(is_valid(cfg_of(m, {72, 73, 74}), m, none));

  // ROM group: all-or-nothing, and "all" excludes every other feature
  CHECK(!is_valid(cfg_of(m, {7}), m, none));
  CHECK(is_valid(cfg_of(m, {7, 8, 9, 10}), m, none));
  CHECK(!is_valid(cfg_of(m, {7, 8, 9, 10, 3}), m, none));

  // compulsory features must stay at default
  CHECK(!is_valid(cfg_of(m, {15}), m, {15}));
  CHECK(is_valid(cfg_of(m, {3}), m, {15}));
}

TEST_CASE("repair: documented examples") {
  const auto& m = shipped_model();
  const std::vector<int> none;

  CHECK(ids_of(m, repair(cfg_of(m, {26}), m, none)) == std::vector<int>{26, 27});
  CHECK(ids_of(m, repair(cfg_of(m, {31}), m, none)) == std::vector<int>{24, 30, 31});
  CHECK(ids_of(m, repair(cfg_of(m, {72}), m, none)) == std::vector<int>{72, 73, 74});
  CHECK(ids_of(m, repair(cfg_of(m, {7}), m, none)).empty());
  CHECK(repair(Configuration(m.size()), m, none) == Configuration(m.size()));

  // activate_all_reset: whole ROM group on, everything else back to default
  FeatureModel activate(m.features(), m.rules(), RomPolicy::activate_all_reset);
  auto r = repair(cfg_of(activate, {7, 3, 50}), activate, none);
  CHECK(ids_of(activate, r) == std::vector<int>{7, 8, 9, 10});
}

TEST_CASE("repair: compulsory bits are cleared, locked consequents clear antecedents") {
  const auto& m = shipped_model();
  CHECK(ids_of(m, repair(cfg_of(m, {15}), m, {15})).empty());
  // 26 implies 27; with 27 locked the antecedent has to go instead
  CHECK(ids_of(m, repair(cfg_of(m, {26}), m, {27})).empty());
  // chained lock: 31 -> 24 -> 30 with 30 locked unwinds the whole chain
  CHECK(ids_of(m, repair(cfg_of(m, {31}), m, {30})).empty());
}

TEST_CASE("repair: soundness, idempotence, conservatism on random inputs") {
  const auto& m = shipped_model();
  const std::vector<int> none;

  std::set<std::size_t> rule_bits;
  for (const auto& r : m.rules())
    for (int id : r.member_ids()) rule_bits.insert(m.index_of(id));

  std::mt19937_64 rng(42);
  for (int t = 0; t < 500; ++t) {
    Configuration c(m.size());
    for (std::size_t i = 0; i < c.size(); ++i) c.set(i, (rng() >> 33) & 1);
    auto r = repair(c, m, none);
    CHECK(is_valid(r, m, none));
    CHECK(repair(r, m, none) == r);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c.test(i) != r.test(i)) CHECK(rule_bits.count(i) == 1);
    }
  }
}

TEST_CASE("repair keeps compulsory bits clear on random inputs") {
  const auto& m = shipped_model();
  auto app = load_app_spec(testsup::app_path("date-format-tofte"));
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    Configuration c(m.size());
    for (std::size_t i = 0; i < c.size(); ++i) c.set(i, (rng() >> 33) & 1);
    auto r = repair(c, m, app.compulsory_ids);
    CHECK(is_valid(r, m, app.compulsory_ids));
    for (int id : app.compulsory_ids) CHECK(!r.test(m.index_of(id)));
  }
}

TEST_CASE("random_valid is deterministic and always valid") {
  const auto& m = shipped_model();
  const std::vector<int> comp = {15, 29};
  CHECK(random_valid(m, comp, 123) == random_valid(m, comp, 123));
  CHECK(random_valid(m, comp, 123) != random_valid(m, comp, 124));

  std::mt19937_64 rng(99);
  for (int t = 0; t < 300; ++t) CHECK(is_valid(random_valid(m, comp, rng), m, comp));

  // the stream overload advances the rng; seed overload matches a fresh stream
  std::mt19937_64 fresh(55);
  CHECK(random_valid(m, comp, fresh) == random_valid(m, comp, 55));
}

TEST_CASE("encode/decode are a bijection over id subsets") {
  auto toy = testsup::toy_model(5);
  for (unsigned mask = 0; mask < 32; ++mask) {
    std::vector<int> ids;
    for (int b = 0; b < 5; ++b)
      if (mask & (1u << b)) ids.push_back(b + 1);
    auto c = encode(toy, ids);
    CHECK(c.count() == ids.size());
    CHECK(decode(toy, c) == ids);
  }
  CHECK_THROWS_AS(encode(toy, {6}), ValidationError);
}
