#include <catch2/catch_amalgamated.hpp>

#include "courtesy/simulate.hpp"

using namespace courtesy;

namespace {

Scenario short_lane_change(int duration) {
  Scenario sc = builtin_scenario("lane_change_slow");
  sc.duration = duration;
  return sc;
}

}  // namespace

TEST_CASE("zero-duration run yields an initial-state log", "[simulate]") {
  const SimLog log = simulate(short_lane_change(0), SimSettings{});
  CHECK(log.steps.empty());
  REQUIRE(log.states.size() == 1);
  CHECK_FALSE(log.aborted);
  CHECK(log.metrics.inconvenience == 0.0);
  CHECK(log.metrics.merge_order == MergeOrder::None);
}

TEST_CASE("replays are bit-identical", "[simulate]") {
  const Scenario sc = short_lane_change(6);
  const SimLog a = simulate(sc, SimSettings{17, 1});
  const SimLog b = simulate(sc, SimSettings{17, 1});
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    CHECK(a.steps[k].robot_u.accel == b.steps[k].robot_u.accel);
    CHECK(a.steps[k].robot_u.steer == b.steps[k].robot_u.steer);
    CHECK(a.steps[k].human_u.accel == b.steps[k].human_u.accel);
    CHECK(a.steps[k].state.robot.x == b.steps[k].state.robot.x);
    CHECK(a.steps[k].courtesy_value == b.steps[k].courtesy_value);
  }
  CHECK(a.metrics.inconvenience == b.metrics.inconvenience);
}

TEST_CASE("executed controls chain exactly into the logged states", "[simulate]") {
  const Scenario sc = short_lane_change(8);
  const SimLog log = simulate(sc, SimSettings{3, 1});
  REQUIRE(log.states.size() == log.steps.size() + 1);
  for (std::size_t k = 0; k < log.steps.size(); ++k) {
    const AgentState r = step(log.states[k].robot, log.steps[k].robot_u, sc.dt, sc.vehicle).state;
    const AgentState h = step(log.states[k].human, log.steps[k].human_u, sc.dt, sc.vehicle).state;
    CHECK(r.x == log.states[k + 1].robot.x);
    CHECK(r.y == log.states[k + 1].robot.y);
    CHECK(r.heading == log.states[k + 1].robot.heading);
    CHECK(r.speed == log.states[k + 1].robot.speed);
    CHECK(h.x == log.states[k + 1].human.x);
    CHECK(h.speed == log.states[k + 1].human.speed);
  }
}

TEST_CASE("metrics stay internally consistent", "[simulate]") {
  const SimLog log = simulate(short_lane_change(10), SimSettings{});
  const Metrics& m = log.metrics;
  CHECK(m.min_gap >= 0.0);
  CHECK(m.inconvenience >= 0.0);
  CHECK(m.human_min_accel <= 0.0);
  CHECK(m.human_avg_speed > 0.0);
  CHECK(m.inconvenience ==
        Catch::Approx(std::max(0.0, m.realized_human_cost - m.alt_episode_cost)));
}

TEST_CASE("single-point sweep equals a direct run", "[simulate]") {
  Scenario sc = short_lane_change(5);
  const auto rows = sweep_lambda(sc, {0.0}, SimSettings{5, 1});
  REQUIRE(rows.size() == 1);
  REQUIRE(rows[0].metrics.has_value());
  sc.courtesy.lambda = 0.0;
  const SimLog direct = simulate(sc, SimSettings{5, 1});
  CHECK(rows[0].metrics->min_gap == direct.metrics.min_gap);
  CHECK(rows[0].metrics->inconvenience == direct.metrics.inconvenience);
  CHECK(rows[0].metrics->human_min_accel == direct.metrics.human_min_accel);
}

TEST_CASE("sweep rows preserve order and isolate failures", "[simulate]") {
  Scenario sc = short_lane_change(3);
  const auto rows = sweep_lambda(sc, {0.0, 2.0, 7.0}, SimSettings{1, 1});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].lambda == 0.0);
  CHECK(rows[1].lambda == 2.0);
  CHECK(rows[2].lambda == 7.0);
  for (const auto& r : rows) CHECK(r.metrics.has_value());
}
