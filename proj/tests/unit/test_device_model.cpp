#include <algorithm>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "minishrink/device_model.hpp"
#include "minishrink/errors.hpp"
#include "test_support.hpp"

using namespace minishrink;

namespace {

const std::vector<Device>& catalog() {
  static std::vector<Device> d = load_devices(testsup::devices_path());
  return d;
}

const Device& device(const std::string& name) {
  auto& d = catalog();
  auto it = std::find_if(d.begin(), d.end(), [&](const Device& x) { return x.name == name; });
  REQUIRE(it != d.end());
  return *it;
}

}  // namespace

TEST_CASE("device catalog loads five ranked devices") {
  const auto& d = catalog();
  REQUIRE(d.size() == 5);
  CHECK(device("Photon").memory_kb == 128.0);
  CHECK(device("Photon").storage_kb == 1000.0);
  CHECK(device("Photon").rank_value == 5);
  CHECK(device("JN5168").memory_kb == 32.0);
  CHECK(device("BeagleBoneBlack").rank_value == 1);
}

TEST_CASE("device file errors") {
  CHECK_THROWS_WITH_AS(load_devices(testsup::data_dir() / "absent.json"),
                       doctest::Contains("absent.json"), ParseError);
  auto dir = testsup::make_temp_dir("dev");
  testsup::write_file(dir / "empty.json", "[]");
  CHECK_THROWS_AS(load_devices(dir / "empty.json"), ValidationError);
  testsup::write_file(dir / "neg.json",
                      R"([{"name":"x","memory_kb":-1,"storage_kb":10,"rank":1}])");
  CHECK_THROWS_AS(load_devices(dir / "neg.json"), ValidationError);
  testsup::write_file(dir / "rank.json",
                      R"([{"name":"x","memory_kb":1,"storage_kb":10,"rank":0}])");
  CHECK_THROWS_AS(load_devices(dir / "rank.json"), ValidationError);
  testsup::write_file(dir / "missing.json", R"([{"name":"x","memory_kb":1}])");
  CHECK_THROWS_AS(load_devices(dir / "missing.json"), ParseError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dsr: signed relative slack averaged over storage and memory") {
  const auto m = Measurement::of(570.0, 104.816, 0.71);
  CHECK(dsr(m, device("Photon")) == doctest::Approx(-0.3055625).epsilon(1e-12));
  CHECK(dsr(m, device("JN5168")) == doctest::Approx(1.75103125).epsilon(1e-12));

  // exactly at capacity on both resources -> zero slack
  CHECK(dsr(Measurement::of(1000.0, 128.0, 1.0), device("Photon")) == doctest::Approx(0.0));

  CHECK_THROWS_AS(dsr(Measurement::failed(), device("Photon")), std::logic_error);
}

TEST_CASE("usr: rank-weighted mean of dsr over the catalog") {
  const auto m = Measurement::of(570.0, 104.816, 0.71);
  const double u = usr(m, catalog());
  CHECK(u == doctest::Approx(-0.10319459361).epsilon(1e-9));
  CHECK(std::abs(u - (-0.10320)) < 1e-4);

  // weights are rank/Vmax, so scaling every rank leaves usr unchanged
  auto doubled = catalog();
  for (auto& d : doubled) d.rank_value *= 2;
  CHECK(usr(m, doubled) == doctest::Approx(u).epsilon(1e-12));

  // single device at exact capacity
  std::vector<Device> one = {{"only", 128.0, 1000.0, 3}};
  CHECK(usr(Measurement::of(1000.0, 128.0, 0.5), one) == doctest::Approx(0.0));

  CHECK_THROWS_AS(usr(m, std::span<const Device>{}), std::invalid_argument);
}

TEST_CASE("usr orientation flips the sign; udr negates usr") {
  const auto m = Measurement::of(570.0, 104.816, 0.71);
  const double as_written = usr(m, catalog(), UsrOrientation::as_written);
  CHECK(usr(m, catalog(), UsrOrientation::slack) == doctest::Approx(-as_written));
  CHECK(udr(m, catalog()) == doctest::Approx(-as_written));
  CHECK(udr(m, catalog(), UsrOrientation::slack) == doctest::Approx(as_written));
}

TEST_CASE("fits: both resources within capacity, boundary inclusive") {
  CHECK(fits(Measurement::of(570.0, 126.144, 1.0), device("Photon")));
  CHECK(!fits(Measurement::of(570.0, 166.496, 1.0), device("Photon")));
  CHECK(!fits(Measurement::of(570.0, 1817.2, 1.0), device("ESP32")));
  CHECK(fits(Measurement::of(1000.0, 128.0, 1.0), device("Photon")));
  CHECK(!fits(Measurement::of(1000.1, 128.0, 1.0), device("Photon")));
  CHECK(!fits(Measurement::failed(), device("Photon")));
}

TEST_CASE("device_count: union over solutions, monotone in the solution set") {
  std::vector<Measurement> none;
  CHECK(device_count(none, catalog()) == 0);

  std::vector<Measurement> baseline = {Measurement::of(570.0, 166.496, 0.205)};
  CHECK(device_count(baseline, catalog()) == 3);

  // adding a smaller build can only attain more devices
  std::vector<Measurement> more = baseline;
  more.push_back(Measurement::of(570.0, 104.816, 0.2));
  CHECK(device_count(more, catalog()) >= device_count(baseline, catalog()));
  CHECK(device_count(more, catalog()) == 4);

  std::vector<Measurement> failed = {Measurement::failed()};
  CHECK(device_count(failed, catalog()) == 0);
}

TEST_CASE("nda is the device-count delta") {
  CHECK(nda(3, 4) == 1);
  CHECK(nda(3, 3) == 0);
  CHECK(nda(4, 2) == -2);
}
