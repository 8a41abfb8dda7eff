#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "courtesy/features.hpp"
#include "courtesy/optimizer.hpp"

namespace courtesy {

/// Deterministic per-call-site seed derivation (splitmix64 step).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::vector<AgentState> constant_velocity_states(const AgentState& s0, int n, double dt,
                                                        const VehicleParams& p) {
  return rollout_agent(s0, std::vector<Control>(static_cast<std::size_t>(n)), dt, p);
}

/// Everything a cost evaluation needs besides the two candidate control
/// sequences: predicted third-party motion over the horizon and the controls
/// executed just before it (for the first-stage jerk terms).
struct EvalContext {
  std::vector<std::vector<AgentState>> other_states;  // [agent][k], length horizon+1
  Control prev_u_robot{};
  Control prev_u_human{};
};

inline double agent_cost(const Scenario& sc, const EvalContext& ctx, const JointState& x0,
                         std::span<const Control> u_robot, std::span<const Control> u_human,
                         const CostWeights& w, Perspective persp, const FeatureOptions& opts = {}) {
  const auto rs = rollout_agent(x0.robot, u_robot, sc.dt, sc.vehicle);
  const auto hs = rollout_agent(x0.human, u_human, sc.dt, sc.vehicle);
  HorizonInput in{rs, hs, &ctx.other_states, u_robot, u_human, ctx.prev_u_robot, ctx.prev_u_human};
  return cumulative_cost(sc, in, w, persp, opts);
}

inline FeatureVector agent_features(const Scenario& sc, const EvalContext& ctx, const JointState& x0,
                                    std::span<const Control> u_robot, std::span<const Control> u_human,
                                    Perspective persp, const FeatureOptions& opts = {}) {
  const auto rs = rollout_agent(x0.robot, u_robot, sc.dt, sc.vehicle);
  const auto hs = rollout_agent(x0.human, u_human, sc.dt, sc.vehicle);
  HorizonInput in{rs, hs, &ctx.other_states, u_robot, u_human, ctx.prev_u_robot, ctx.prev_u_human};
  return accumulate_features(sc, in, persp, opts);
}

namespace detail {

/// Objective over one agent's flattened controls with the other agent fixed.
/// The fixed agent's rollout is precomputed once.
inline Objective own_cost_objective(const Scenario& sc, const EvalContext& ctx, const JointState& x0,
                                    Perspective persp, std::vector<Control> fixed_controls,
                                    const CostWeights& w, const FeatureOptions& opts) {
  const bool me_robot = persp == Perspective::Robot;
  auto fixed_states = std::make_shared<std::vector<AgentState>>(
      rollout_agent(me_robot ? x0.human : x0.robot, fixed_controls, sc.dt, sc.vehicle));
  auto fixed_u = std::make_shared<std::vector<Control>>(std::move(fixed_controls));
  const AgentState me0 = me_robot ? x0.robot : x0.human;

  Objective obj;
  obj.value = [&sc, &ctx, persp, me_robot, fixed_states, fixed_u, me0, w, opts](const Eigen::VectorXd& x) {
    const std::vector<Control> u_me = unpack_controls(x);
    const auto my_states = rollout_agent(me0, u_me, sc.dt, sc.vehicle);
    HorizonInput in;
    in.robot_states = me_robot ? my_states : *fixed_states;
    in.human_states = me_robot ? *fixed_states : my_states;
    in.other_states = &ctx.other_states;
    in.u_robot = me_robot ? std::span<const Control>(u_me) : std::span<const Control>(*fixed_u);
    in.u_human = me_robot ? std::span<const Control>(*fixed_u) : std::span<const Control>(u_me);
    in.prev_u_robot = ctx.prev_u_robot;
    in.prev_u_human = ctx.prev_u_human;
    return cumulative_cost(sc, in, w, persp, opts);
  };
  obj.gradient = [&sc, &ctx, persp, me_robot, fixed_states, fixed_u, me0, w, opts](const Eigen::VectorXd& x) {
    const std::vector<Control> u_me = unpack_controls(x);
    const auto my_states = rollout_agent(me0, u_me, sc.dt, sc.vehicle);
    HorizonInput in;
    in.robot_states = me_robot ? my_states : *fixed_states;
    in.human_states = me_robot ? *fixed_states : my_states;
    in.other_states = &ctx.other_states;
    in.u_robot = me_robot ? std::span<const Control>(u_me) : std::span<const Control>(*fixed_u);
    in.u_human = me_robot ? std::span<const Control>(*fixed_u) : std::span<const Control>(u_me);
    in.prev_u_robot = ctx.prev_u_robot;
    in.prev_u_human = ctx.prev_u_human;
    return cost_gradient(sc, in, w, persp, persp, opts);
  };
  return obj;
}

}  // namespace detail

struct BestResponse {
  std::vector<Control> controls;
  double cost = 0.0;
  bool converged = false;
};

/// Optimal control sequence for `persp` with the other agent's plan held
/// fixed. Warm start defaults to zero controls.
inline BestResponse agent_best_response(const Scenario& sc, const EvalContext& ctx, const JointState& x0,
                                        Perspective persp, std::span<const Control> fixed_controls,
                                        const CostWeights& w, const OptimizerSettings& settings,
                                        const std::vector<Control>* warm_start = nullptr,
                                        const FeatureOptions& opts = {}) {
  const int n = static_cast<int>(fixed_controls.size());
  const Objective obj = detail::own_cost_objective(
      sc, ctx, x0, persp, std::vector<Control>(fixed_controls.begin(), fixed_controls.end()), w, opts);
  const Box box = Box::controls(sc.vehicle.limits, n);
  Eigen::VectorXd init = Eigen::VectorXd::Zero(2 * n);
  if (warm_start && static_cast<int>(warm_start->size()) == n) init = pack_controls(*warm_start);
  OptResult r = optimize_controls(obj, init, box, settings);
  return {unpack_controls(r.x), r.value, r.converged};
}

/// The human response curve g(x, u_R): Eq-style best response, recomputed for
/// whatever robot plan the caller is considering.
inline std::vector<Control> human_best_response(const Scenario& sc, const EvalContext& ctx,
                                                const JointState& x0, std::span<const Control> u_robot,
                                                const CostWeights& theta_h,
                                                const OptimizerSettings& settings,
                                                const std::vector<Control>* warm_start = nullptr) {
  return agent_best_response(sc, ctx, x0, Perspective::Human, u_robot, theta_h, settings, warm_start)
      .controls;
}

/// Cost the human actually incurs under its best response to u_robot.
inline double human_response_cost(const Scenario& sc, const EvalContext& ctx, const JointState& x0,
                                  std::span<const Control> u_robot, const CostWeights& theta_h,
                                  const OptimizerSettings& settings,
                                  const std::vector<Control>* warm_start = nullptr) {
  return agent_best_response(sc, ctx, x0, Perspective::Human, u_robot, theta_h, settings, warm_start)
      .cost;
}

/// Predicts third-party motion for one planning cycle. Scripted agents roll
/// their remaining tape; responsive agents best-respond to the reference
/// robot plan, treating everyone else as constant-velocity traffic.
inline EvalContext make_context(const Scenario& sc, const JointState& x0, int horizon,
                                std::span<const Control> robot_ref_plan, Control prev_u_robot,
                                Control prev_u_human,
                                const std::vector<std::vector<Control>>& other_scripts,
                                const OptimizerSettings& settings,
                                const std::vector<std::vector<Control>>* other_warm = nullptr) {
  EvalContext ctx;
  ctx.prev_u_robot = prev_u_robot;
  ctx.prev_u_human = prev_u_human;

  std::vector<Control> ref(robot_ref_plan.begin(), robot_ref_plan.end());
  ref.resize(static_cast<std::size_t>(horizon));
  const auto robot_states = rollout_agent(x0.robot, ref, sc.dt, sc.vehicle);

  // scripted agents first; responsive agents then see them as moving traffic
  ctx.other_states.resize(x0.others.size());
  for (std::size_t i = 0; i < x0.others.size(); ++i) {
    if (i < sc.others.size() && sc.others[i].policy == ThirdPartySpec::Policy::Responsive) continue;
    std::vector<Control> tape = i < other_scripts.size() ? other_scripts[i] : std::vector<Control>{};
    tape.resize(static_cast<std::size_t>(horizon));
    ctx.other_states[i] = rollout_agent(x0.others[i], tape, sc.dt, sc.vehicle);
  }
  for (std::size_t i = 0; i < x0.others.size(); ++i) {
    if (i >= sc.others.size() || sc.others[i].policy != ThirdPartySpec::Policy::Responsive) continue;
    Scenario view = sc;
    view.human = {x0.others[i], sc.others[i].goal, sc.others[i].weights};
    JointState vx0;
    vx0.robot = x0.robot;
    vx0.human = x0.others[i];
    vx0.others.push_back(x0.human);
    EvalContext vctx;
    vctx.other_states.push_back(constant_velocity_states(x0.human, horizon, sc.dt, sc.vehicle));
    for (std::size_t j = 0; j < x0.others.size(); ++j) {
      if (j == i) continue;
      vx0.others.push_back(x0.others[j]);
      vctx.other_states.push_back(!ctx.other_states[j].empty()
                                      ? ctx.other_states[j]
                                      : constant_velocity_states(x0.others[j], horizon, sc.dt, sc.vehicle));
    }
    OptimizerSettings os = settings;
    os.seed = derive_seed(settings.seed, 9000 + i);
    const std::vector<Control>* warm =
        other_warm && i < other_warm->size() && !(*other_warm)[i].empty() ? &(*other_warm)[i] : nullptr;
    const BestResponse br = agent_best_response(view, vctx, vx0, Perspective::Human, ref,
                                                sc.others[i].weights, os, warm);
    ctx.other_states[i] = rollout_agent(x0.others[i], br.controls, sc.dt, sc.vehicle);
  }
  return ctx;
}

}  // namespace courtesy
