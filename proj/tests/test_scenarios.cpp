#include <catch2/catch_amalgamated.hpp>

#include "courtesy/scenario.hpp"

using namespace courtesy;

TEST_CASE("all built-ins construct and validate", "[scenarios]") {
  for (const auto& name : builtin_scenario_names()) {
    const Scenario sc = builtin_scenario(name);
    CHECK_NOTHROW(sc.validate());
    CHECK(sc.name == name);
    CHECK(sc.horizon == 10);
    CHECK(sc.dt == 0.1);
  }
  CHECK_THROWS_AS(builtin_scenario("no_such_thing"), ConfigError);
}

TEST_CASE("paper-matched initial speeds", "[scenarios]") {
  const Scenario slow = builtin_scenario("lane_change_slow");
  CHECK(slow.robot.state.speed == 0.85);
  CHECK(slow.human.state.speed == 0.85);
  const Scenario fast = builtin_scenario("lane_change_fast");
  CHECK(fast.robot.state.speed == 0.9);
  CHECK(fast.human.state.speed == 0.9);
  const Scenario block = builtin_scenario("blocked_overtake_3agent");
  REQUIRE(block.others.size() >= 2);
  CHECK(block.others.back().policy == ThirdPartySpec::Policy::Responsive);
}

TEST_CASE("scenarios round-trip through JSON unchanged", "[scenarios]") {
  for (const auto& name : builtin_scenario_names()) {
    const Scenario sc = builtin_scenario(name);
    const nlohmann::json a = sc;
    const Scenario back = a.get<Scenario>();
    const nlohmann::json b = back;
    CHECK(a == b);
  }
}

TEST_CASE("dotted-path overrides reach nested values", "[scenarios]") {
  const Scenario sc = builtin_scenario(
      "lane_change_slow", {"courtesy.lambda=42.5", "courtesy.mode=\"maintain\"", "duration=7"});
  CHECK(sc.courtesy.lambda == 42.5);
  CHECK(sc.courtesy.mode == CourtesyMode::MaintainBehavior);
  CHECK(sc.duration == 7);
  CHECK_THROWS_AS(builtin_scenario("lane_change_slow", {"courtesy.lambda=-1"}), ConfigError);
  CHECK_THROWS_AS(builtin_scenario("lane_change_slow", {"no-equals-sign"}), ConfigError);
}

TEST_CASE("vehicle geometry matches the scaled world", "[scenarios]") {
  const Scenario sc = builtin_scenario("lane_change_slow");
  CHECK(sc.vehicle.length == 0.45);
  CHECK(sc.vehicle.width == 0.20);
  CHECK(sc.vehicle.wheelbase == 0.26);
  CHECK(sc.vehicle.v_max == 1.0);
  CHECK(sc.vehicle.limits.accel_max == 0.5);
  CHECK(sc.vehicle.limits.accel_min == -1.0);
}
