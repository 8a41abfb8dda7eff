#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "courtesy/geometry.hpp"

namespace courtesy {

/// Kinematic state of one vehicle: body-center position, yaw, forward speed.
struct AgentState {
  double x = 0.0;        // longitudinal position [m]
  double y = 0.0;        // lateral position [m]
  double heading = 0.0;  // yaw [rad], kept in (-pi, pi]
  double speed = 0.0;    // [m/s], 0 <= speed <= v_max

  Vec2 position() const { return {x, y}; }
};

struct Control {
  double accel = 0.0;  // [m/s^2]
  double steer = 0.0;  // [rad]
};

struct ControlLimits {
  double accel_min = -1.0;
  double accel_max = 0.5;
  double steer_max = 0.6;

  Control clamp(const Control& u) const {
    return {std::clamp(u.accel, accel_min, accel_max), std::clamp(u.steer, -steer_max, steer_max)};
  }
  bool saturates(const Control& u) const {
    return u.accel < accel_min || u.accel > accel_max || std::abs(u.steer) > steer_max;
  }
};

/// Scaled-world defaults: a 1/10 vehicle, 0.45 x 0.20 m, wheelbase 0.26 m.
struct VehicleParams {
  double length = 0.45;
  double width = 0.20;
  double wheelbase = 0.26;
  double v_max = 1.0;
  ControlLimits limits{};
};

struct StepResult {
  AgentState state;
  bool saturated = false;
};

/// One forward-Euler step of the kinematic bicycle. Out-of-range controls are
/// clamped, the saturation flag reports it; the step never rejects an input.
inline StepResult step(const AgentState& s, const Control& u_raw, double dt, const VehicleParams& p) {
  const Control u = p.limits.clamp(u_raw);
  AgentState n;
  n.x = s.x + s.speed * std::cos(s.heading) * dt;
  n.y = s.y + s.speed * std::sin(s.heading) * dt;
  n.heading = wrap_angle(s.heading + s.speed / p.wheelbase * std::tan(u.steer) * dt);
  n.speed = std::clamp(s.speed + u.accel * dt, 0.0, p.v_max);
  return {n, p.limits.saturates(u_raw) || s.speed + u.accel * dt < 0.0 || s.speed + u.accel * dt > p.v_max};
}

inline std::vector<AgentState> rollout_agent(const AgentState& s0, std::span<const Control> u,
                                             double dt, const VehicleParams& p) {
  std::vector<AgentState> out;
  out.reserve(u.size() + 1);
  out.push_back(s0);
  for (const Control& c : u) out.push_back(step(out.back(), c, dt, p).state);
  return out;
}

/// Fixed-horizon plan: N controls plus the N+1 states they roll out to.
struct Trajectory {
  std::vector<Control> controls;
  std::vector<AgentState> states;
  double dt = 0.1;

  static Trajectory from_controls(const AgentState& s0, std::vector<Control> u, double dt,
                                  const VehicleParams& p) {
    Trajectory t;
    t.states = rollout_agent(s0, u, dt, p);
    t.controls = std::move(u);
    t.dt = dt;
    return t;
  }

  bool consistent(const VehicleParams& p, double tol = 0.0) const {
    if (states.size() != controls.size() + 1) return false;
    for (std::size_t k = 0; k < controls.size(); ++k) {
      const AgentState n = step(states[k], controls[k], dt, p).state;
      if (std::abs(n.x - states[k + 1].x) > tol || std::abs(n.y - states[k + 1].y) > tol ||
          std::abs(n.heading - states[k + 1].heading) > tol ||
          std::abs(n.speed - states[k + 1].speed) > tol)
        return false;
    }
    return true;
  }
};

/// Snapshot of every agent in the interaction at one instant.
struct JointState {
  AgentState robot;
  AgentState human;
  std::vector<AgentState> others;
};

/// Joint rollout of robot and human plus pre-resolved third-party controls.
/// Sequences must share the horizon length; third parties shorter than the
/// horizon coast on zero controls (constant velocity).
inline std::vector<JointState> rollout(const JointState& x0, std::span<const Control> u_robot,
                                       std::span<const Control> u_human, double dt,
                                       const VehicleParams& robot_params,
                                       const VehicleParams& human_params,
                                       const std::vector<std::vector<Control>>& u_others = {},
                                       const VehicleParams* other_params = nullptr) {
  std::vector<JointState> out;
  const std::size_t n = u_robot.size();
  out.reserve(n + 1);
  out.push_back(x0);
  const VehicleParams& op = other_params ? *other_params : robot_params;
  for (std::size_t k = 0; k < n; ++k) {
    JointState next;
    next.robot = step(out.back().robot, u_robot[k], dt, robot_params).state;
    next.human = step(out.back().human, u_human[k], dt, human_params).state;
    next.others.reserve(x0.others.size());
    for (std::size_t i = 0; i < out.back().others.size(); ++i) {
      Control u{};
      if (i < u_others.size() && k < u_others[i].size()) u = u_others[i][k];
      next.others.push_back(step(out.back().others[i], u, dt, op).state);
    }
    out.push_back(std::move(next));
  }
  return out;
}

inline OrientedBox footprint(const AgentState& s, const VehicleParams& p) {
  // state position is the body center
  return {s.position(), s.heading, p.length, p.width};
}

}  // namespace courtesy
