#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "courtesy/dynamics.hpp"

using namespace courtesy;

namespace {

VehicleParams scaled_vehicle() { return VehicleParams{}; }

/// High-resolution integration of the same kinematics, used as the oracle for
/// a single coarse step.
AgentState fine_step(const AgentState& s0, const Control& u_raw, double dt, const VehicleParams& p,
                     int substeps) {
  const Control u = p.limits.clamp(u_raw);
  AgentState s = s0;
  const double h = dt / substeps;
  for (int i = 0; i < substeps; ++i) {
    const double v = s.speed;
    s.x += v * std::cos(s.heading) * h;
    s.y += v * std::sin(s.heading) * h;
    s.heading = wrap_angle(s.heading + v / p.wheelbase * std::tan(u.steer) * h);
    s.speed = std::clamp(s.speed + u.accel * h, 0.0, p.v_max);
  }
  return s;
}

}  // namespace

TEST_CASE("zero-input step moves straight", "[dynamics]") {
  const auto r = step({0, 0, 0, 1.0}, {0, 0}, 0.1, scaled_vehicle());
  CHECK(r.state.x == Catch::Approx(0.1));
  CHECK(r.state.y == Catch::Approx(0.0));
  CHECK(r.state.heading == Catch::Approx(0.0));
  CHECK(r.state.speed == Catch::Approx(1.0));
  CHECK_FALSE(r.saturated);
}

TEST_CASE("controls clamp to limits and the speed cap", "[dynamics]") {
  // accel clamps to 0.5 first, then speed would exceed the 1.0 m/s limit
  const auto r = step({0, 0, 0, 1.0}, {0.9, 0}, 0.1, scaled_vehicle());
  CHECK(r.state.speed == Catch::Approx(1.0));
  CHECK(r.saturated);
  const auto braking = step({0, 0, 0, 0.05}, {-1.0, 0}, 0.1, scaled_vehicle());
  CHECK(braking.state.speed == Catch::Approx(0.0));  // never negative
}

TEST_CASE("one Euler step tracks a 100-substep integration", "[dynamics]") {
  const AgentState s0{0, 0, 0, 0.8};
  const Control u{0.5, 0.3};
  const auto coarse = step(s0, u, 0.1, scaled_vehicle()).state;
  const auto fine = fine_step(s0, u, 0.1, scaled_vehicle(), 100);
  CHECK(std::abs(coarse.x - fine.x) < 1e-3);
  CHECK(std::abs(coarse.y - fine.y) < 1e-3);
  CHECK(std::abs(coarse.heading - fine.heading) < 1e-3);
  CHECK(std::abs(coarse.speed - fine.speed) < 1e-3);
}

TEST_CASE("empty-horizon rollout returns the initial state only", "[dynamics]") {
  JointState x0;
  x0.robot = {0, 0, 0, 0.85};
  x0.human = {1, 0, 0, 0.85};
  const auto states = rollout(x0, {}, {}, 0.1, scaled_vehicle(), scaled_vehicle());
  REQUIRE(states.size() == 1);
  CHECK(states[0].robot.x == 0.0);
}

TEST_CASE("constant-velocity rollout advances both agents equally", "[dynamics]") {
  JointState x0;
  x0.robot = {0, 0, 0, 0.85};
  x0.human = {1, 0.37, 0, 0.85};
  const std::vector<Control> zeros(10);
  const auto states = rollout(x0, zeros, zeros, 0.1, scaled_vehicle(), scaled_vehicle());
  REQUIRE(states.size() == 11);
  for (std::size_t k = 0; k < states.size(); ++k) {
    CHECK(states[k].robot.x == Catch::Approx(0.085 * k));
    CHECK(states[k].human.x == Catch::Approx(1.0 + 0.085 * k));
  }
}

TEST_CASE("rollout replays are bit-identical", "[dynamics]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> au(-1.2, 0.7), su(-0.7, 0.7);
  JointState x0;
  x0.robot = {0, 0, 0.1, 0.6};
  x0.human = {1, 0.37, -0.05, 0.8};
  std::vector<Control> ur, uh;
  for (int k = 0; k < 20; ++k) {
    ur.push_back({au(rng), su(rng)});
    uh.push_back({au(rng), su(rng)});
  }
  const auto a = rollout(x0, ur, uh, 0.1, scaled_vehicle(), scaled_vehicle());
  const auto b = rollout(x0, ur, uh, 0.1, scaled_vehicle(), scaled_vehicle());
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].robot.x == b[k].robot.x);
    CHECK(a[k].robot.heading == b[k].robot.heading);
    CHECK(a[k].human.speed == b[k].human.speed);
  }
}

TEST_CASE("trajectory rollout consistency is exact", "[dynamics]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> au(-1.5, 0.8), su(-0.8, 0.8);
  std::vector<Control> u;
  for (int k = 0; k < 15; ++k) u.push_back({au(rng), su(rng)});
  const auto t = Trajectory::from_controls({0, 0, 0, 0.5}, u, 0.1, scaled_vehicle());
  CHECK(t.consistent(scaled_vehicle()));
}

TEST_CASE("clamping is idempotent and speed stays in bounds", "[dynamics]") {
  const VehicleParams p = scaled_vehicle();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> au(-3.0, 3.0), su(-2.0, 2.0), sv(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const AgentState s{0, 0, su(rng), sv(rng)};
    const Control u{au(rng), su(rng)};
    const auto direct = step(s, u, 0.1, p).state;
    const auto clamped = step(s, p.limits.clamp(u), 0.1, p).state;
    CHECK(direct.x == clamped.x);
    CHECK(direct.heading == clamped.heading);
    CHECK(direct.speed == clamped.speed);
    CHECK(direct.speed >= 0.0);
    CHECK(direct.speed <= p.v_max);
  }
}

TEST_CASE("zero steering keeps the lateral state frozen", "[dynamics]") {
  AgentState s{0, 0.2, 0, 0.7};
  for (int k = 0; k < 30; ++k) {
    s = step(s, {0.1, 0.0}, 0.1, scaled_vehicle()).state;
    CHECK(s.y == Catch::Approx(0.2));
    CHECK(s.heading == Catch::Approx(0.0));
  }
}
