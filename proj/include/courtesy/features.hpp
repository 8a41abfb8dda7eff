#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "courtesy/dynamics.hpp"
#include "courtesy/scenario.hpp"

namespace courtesy {

enum class Perspective { Robot, Human };

/// Stage features, all nonnegative. `speed`, `accel`, `steer` are squared
/// deviations; `goal` is exp(d_g / w_l); `safety` sums exp(-d_i) over
/// surrounding cars.
struct FeatureVector {
  double goal = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  double steer = 0.0;
  double safety = 0.0;

  FeatureVector& operator+=(const FeatureVector& o) {
    goal += o.goal;
    speed += o.speed;
    accel += o.accel;
    steer += o.steer;
    safety += o.safety;
    return *this;
  }
  std::array<double, 5> as_array() const { return {goal, speed, accel, steer, safety}; }
};

inline double dot(const CostWeights& w, const FeatureVector& f) {
  return w.goal * f.goal + w.speed * f.speed + w.accel * f.accel + w.steer * f.steer +
         w.safety * f.safety;
}

struct FeatureOptions {
  // NotThere-style alternatives: the perspective agent's world omits the
  // other main agent entirely (it contributes nothing to f_s)
  bool ignore_other_main = false;
};

/// Center distance scaled per axis by car length / width in the observer's
/// body frame, so tailgating and side-by-side proximity read comparably.
inline double scaled_car_distance(const AgentState& me, const Vec2& other_pos,
                                  const VehicleParams& vehicle) {
  const Vec2 r = rotated(other_pos - me.position(), -me.heading);
  const double lon = r.x / vehicle.length;
  const double lat = r.y / vehicle.width;
  return std::sqrt(lon * lon + lat * lat);
}

/// Forward-awareness weight on a surrounding car: ~1 ahead of the observer,
/// 1/2 exactly beside, fading smoothly to 0 once the car falls behind. A
/// driver is pressured by traffic it has to react to, not by followers.
inline double forward_gate(double rel_lon, const VehicleParams& vehicle) {
  const double z = rel_lon / (0.05 * vehicle.length);
  if (z > 40.0) return 1.0;
  if (z < -40.0) return 0.0;
  return 1.0 / (1.0 + std::exp(-z));
}

inline double lane_distance(const Lane& lane, const Vec2& pos) {
  return lane.centerline.distance_to(pos);
}

namespace detail {

inline void collect_surroundings(const JointState& joint, Perspective persp,
                                 const FeatureOptions& opts, std::vector<Vec2>& out) {
  out.clear();
  if (!opts.ignore_other_main)
    out.push_back(persp == Perspective::Robot ? joint.human.position() : joint.robot.position());
  for (const auto& o : joint.others) out.push_back(o.position());
}

}  // namespace detail

/// Features of one stage seen from `persp`. `prev_u` is that agent's control
/// at the previous stage (the last executed control for the first stage).
inline FeatureVector stage_features(const Scenario& sc, const JointState& joint, const Control& u_robot,
                                    const Control& u_human, const Control& prev_u, Perspective persp,
                                    const FeatureOptions& opts = {}) {
  const AgentState& me = persp == Perspective::Robot ? joint.robot : joint.human;
  const AgentGoal& goal = persp == Perspective::Robot ? sc.robot.goal : sc.human.goal;
  const Control u = sc.vehicle.limits.clamp(persp == Perspective::Robot ? u_robot : u_human);
  const Control up = sc.vehicle.limits.clamp(prev_u);

  FeatureVector f;
  const Lane& lane = sc.lane(goal.target_lane);
  const Polyline::Projection proj = lane.centerline.project(me.position());
  // progress speed along the target lane, so driving the wrong way or
  // sideways counts as full speed deviation
  const double along = std::cos(me.heading) * proj.tangent.x + std::sin(me.heading) * proj.tangent.y;
  const double dv = me.speed * along - goal.desired_speed;
  f.speed = dv * dv;
  const double ja = (u.accel - up.accel) / sc.dt;
  const double js = (u.steer - up.steer) / sc.dt;
  f.accel = ja * ja;
  f.steer = js * js;

  f.goal = std::exp(distance(me.position(), proj.point) / lane.width);

  static thread_local std::vector<Vec2> surround;
  detail::collect_surroundings(joint, persp, opts, surround);
  for (const Vec2& q : surround) {
    const Vec2 rel = rotated(q - me.position(), -me.heading);
    f.safety += forward_gate(rel.x, sc.vehicle) * std::exp(-scaled_car_distance(me, q, sc.vehicle));
  }
  return f;
}

/// Feature sum over a rolled-out horizon (the Phi of a linear cost).
/// State sequences have length N+1; control spans length N; `others` holds
/// per-agent predicted states, each of length >= N.
struct HorizonInput {
  std::span<const AgentState> robot_states;
  std::span<const AgentState> human_states;
  const std::vector<std::vector<AgentState>>* other_states = nullptr;
  std::span<const Control> u_robot;
  std::span<const Control> u_human;
  Control prev_u_robot{};
  Control prev_u_human{};
};

inline FeatureVector accumulate_features(const Scenario& sc, const HorizonInput& in, Perspective persp,
                                         const FeatureOptions& opts = {}) {
  FeatureVector phi;
  const std::size_t n = in.u_robot.size();
  JointState joint;
  for (std::size_t k = 0; k < n; ++k) {
    joint.robot = in.robot_states[k];
    joint.human = in.human_states[k];
    joint.others.clear();
    if (in.other_states)
      for (const auto& seq : *in.other_states)
        joint.others.push_back(seq[std::min(k, seq.size() - 1)]);
    const Control prev =
        persp == Perspective::Robot
            ? (k == 0 ? in.prev_u_robot : in.u_robot[k - 1])
            : (k == 0 ? in.prev_u_human : in.u_human[k - 1]);
    phi += stage_features(sc, joint, in.u_robot[k], in.u_human[k], prev, persp, opts);
  }
  return phi;
}

inline double cumulative_cost(const Scenario& sc, const HorizonInput& in, const CostWeights& w,
                              Perspective persp, const FeatureOptions& opts = {}) {
  return dot(w, accumulate_features(sc, in, persp, opts));
}

// ---------------------------------------------------------------------------
// Analytic cost gradient (optional fast path; finite differences stay the
// default). Differentiates theta^T Phi with respect to one agent's control
// sequence by an adjoint sweep over that agent's state chain.

namespace detail {

inline Eigen::Matrix4d state_jacobian(const AgentState& s, const Control& u_clamped, double dt,
                                      const VehicleParams& p) {
  Eigen::Matrix4d A = Eigen::Matrix4d::Identity();
  A(0, 2) = -s.speed * std::sin(s.heading) * dt;
  A(0, 3) = std::cos(s.heading) * dt;
  A(1, 2) = s.speed * std::cos(s.heading) * dt;
  A(1, 3) = std::sin(s.heading) * dt;
  A(2, 3) = std::tan(u_clamped.steer) * dt / p.wheelbase;
  const double v_next = s.speed + u_clamped.accel * dt;
  A(3, 3) = (v_next > 0.0 && v_next < p.v_max) ? 1.0 : 0.0;
  return A;
}

inline Eigen::Matrix<double, 4, 2> control_jacobian(const AgentState& s, const Control& u_raw,
                                                    double dt, const VehicleParams& p) {
  Eigen::Matrix<double, 4, 2> B = Eigen::Matrix<double, 4, 2>::Zero();
  const Control u = p.limits.clamp(u_raw);
  const double accel_free =
      (u_raw.accel > p.limits.accel_min && u_raw.accel < p.limits.accel_max) ? 1.0 : 0.0;
  const double steer_free = (std::abs(u_raw.steer) < p.limits.steer_max) ? 1.0 : 0.0;
  const double v_next = s.speed + u.accel * dt;
  const double v_free = (v_next > 0.0 && v_next < p.v_max) ? 1.0 : 0.0;
  const double sec = 1.0 / std::cos(u.steer);
  B(2, 1) = s.speed * dt * sec * sec / p.wheelbase * steer_free;
  B(3, 0) = dt * accel_free * v_free;
  return B;
}

struct StageCostGrad {
  double value = 0.0;
  Eigen::Vector4d d_me = Eigen::Vector4d::Zero();     // wrt perspective agent state
  Eigen::Vector4d d_other = Eigen::Vector4d::Zero();  // wrt the other main agent's state
  Eigen::Vector2d d_u = Eigen::Vector2d::Zero();      // wrt perspective control at k (accel, steer)
  Eigen::Vector2d d_uprev = Eigen::Vector2d::Zero();
};

inline StageCostGrad stage_cost_gradient(const Scenario& sc, const JointState& joint,
                                         const Control& u_robot, const Control& u_human,
                                         const Control& prev_u, Perspective persp,
                                         const FeatureOptions& opts, const CostWeights& w) {
  StageCostGrad g;
  const AgentState& me = persp == Perspective::Robot ? joint.robot : joint.human;
  const AgentGoal& goal = persp == Perspective::Robot ? sc.robot.goal : sc.human.goal;
  const Control u_raw = persp == Perspective::Robot ? u_robot : u_human;
  const Control u = sc.vehicle.limits.clamp(u_raw);
  const Control up = sc.vehicle.limits.clamp(prev_u);
  const ControlLimits& lim = sc.vehicle.limits;

  // progress-speed deviation along the target lane
  const Lane& lane = sc.lane(goal.target_lane);
  const Polyline::Projection proj = lane.centerline.project(me.position());
  const double tx = proj.tangent.x, ty = proj.tangent.y;
  const double along = std::cos(me.heading) * tx + std::sin(me.heading) * ty;
  const double dv = me.speed * along - goal.desired_speed;
  g.value += w.speed * dv * dv;
  g.d_me(3) += w.speed * 2.0 * dv * along;
  g.d_me(2) += w.speed * 2.0 * dv * me.speed * (-std::sin(me.heading) * tx + std::cos(me.heading) * ty);

  // jerk and steering rate (zero slope where the clamp is active)
  const double ja = (u.accel - up.accel) / sc.dt;
  const double js = (u.steer - up.steer) / sc.dt;
  g.value += w.accel * ja * ja + w.steer * js * js;
  const double a_free = (u_raw.accel > lim.accel_min && u_raw.accel < lim.accel_max) ? 1.0 : 0.0;
  const double s_free = (std::abs(u_raw.steer) < lim.steer_max) ? 1.0 : 0.0;
  g.d_u(0) += w.accel * 2.0 * ja / sc.dt * a_free;
  g.d_u(1) += w.steer * 2.0 * js / sc.dt * s_free;
  g.d_uprev(0) += -w.accel * 2.0 * ja / sc.dt;
  g.d_uprev(1) += -w.steer * 2.0 * js / sc.dt;

  // goal-lane proximity
  const Vec2 cp = proj.point;
  const double d_g = distance(me.position(), cp);
  const double fg = std::exp(d_g / lane.width);
  g.value += w.goal * fg;
  if (d_g > 1e-12) {
    const Vec2 dir = (me.position() - cp) * (1.0 / d_g);
    g.d_me(0) += w.goal * fg / lane.width * dir.x;
    g.d_me(1) += w.goal * fg / lane.width * dir.y;
  }

  // proximity to surrounding cars
  static thread_local std::vector<Vec2> surround;
  collect_surroundings(joint, persp, opts, surround);
  const std::size_t other_index = 0;  // the other main agent comes first when visible
  const bool sees_other_main = !opts.ignore_other_main;
  const double L = sc.vehicle.length, W = sc.vehicle.width;
  for (std::size_t i = 0; i < surround.size(); ++i) {
    const Vec2 q = surround[i];
    const double c = std::cos(me.heading), s = std::sin(me.heading);
    const Vec2 rel = q - me.position();
    const Vec2 r{c * rel.x + s * rel.y, -s * rel.x + c * rel.y};
    const double d = std::sqrt(r.x * r.x / (L * L) + r.y * r.y / (W * W));
    const double gate = forward_gate(r.x, sc.vehicle);
    const double e = std::exp(-d);
    g.value += w.safety * gate * e;

    // d(gate * e^-d) assembled in the rotated frame first
    double t_rx = e * gate * (1.0 - gate) / (0.05 * L);
    double t_ry = 0.0;
    if (d > 1e-12) {
      t_rx += gate * -e * (r.x / (L * L) / d);
      t_ry += gate * -e * (r.y / (W * W) / d);
    }
    // r = R(-psi) (q - p):  dr/dpsi = (r.y, -r.x)
    g.d_me(0) += w.safety * (t_rx * -c + t_ry * s);
    g.d_me(1) += w.safety * (t_rx * -s + t_ry * -c);
    g.d_me(2) += w.safety * (t_rx * r.y + t_ry * -r.x);
    if (sees_other_main && i == other_index) {
      g.d_other(0) += w.safety * (t_rx * c + t_ry * -s);
      g.d_other(1) += w.safety * (t_rx * s + t_ry * c);
    }
  }
  return g;
}

}  // namespace detail

/// Gradient of theta^T Phi(persp) with respect to `diff` agent's controls,
/// flattened as (accel_0, steer_0, accel_1, ...).
inline Eigen::VectorXd cost_gradient(const Scenario& sc, const HorizonInput& in, const CostWeights& w,
                                     Perspective persp, Perspective diff,
                                     const FeatureOptions& opts = {}) {
  const std::size_t n = in.u_robot.size();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(2 * n);
  if (persp != diff && opts.ignore_other_main) return grad;

  std::span<const AgentState> diff_states =
      diff == Perspective::Robot ? in.robot_states : in.human_states;
  std::span<const Control> diff_u = diff == Perspective::Robot ? in.u_robot : in.u_human;

  std::vector<detail::StageCostGrad> stages(n);
  JointState joint;
  for (std::size_t k = 0; k < n; ++k) {
    joint.robot = in.robot_states[k];
    joint.human = in.human_states[k];
    joint.others.clear();
    if (in.other_states)
      for (const auto& seq : *in.other_states)
        joint.others.push_back(seq[std::min(k, seq.size() - 1)]);
    const Control prev =
        persp == Perspective::Robot
            ? (k == 0 ? in.prev_u_robot : in.u_robot[k - 1])
            : (k == 0 ? in.prev_u_human : in.u_human[k - 1]);
    stages[k] = detail::stage_cost_gradient(sc, joint, in.u_robot[k], in.u_human[k], prev, persp, opts, w);
  }

  // adjoint over the diff agent's state chain
  Eigen::Vector4d mu = Eigen::Vector4d::Zero();
  for (std::size_t kk = n; kk-- > 0;) {
    const Control u_clamped = sc.vehicle.limits.clamp(diff_u[kk]);
    const Eigen::Matrix<double, 4, 2> B =
        detail::control_jacobian(diff_states[kk], diff_u[kk], sc.dt, sc.vehicle);
    const Eigen::Matrix4d A = detail::state_jacobian(diff_states[kk], u_clamped, sc.dt, sc.vehicle);
    Eigen::Vector2d gu = B.transpose() * mu;
    if (diff == persp) {
      gu += stages[kk].d_u;
      if (kk + 1 < n) gu += stages[kk + 1].d_uprev;
    }
    grad(2 * kk) = gu(0);
    grad(2 * kk + 1) = gu(1);
    const Eigen::Vector4d dstage = diff == persp ? stages[kk].d_me : stages[kk].d_other;
    mu = dstage + A.transpose() * mu;
  }
  return grad;
}

}  // namespace courtesy
