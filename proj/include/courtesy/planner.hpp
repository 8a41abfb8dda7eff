#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "courtesy/best_response.hpp"

namespace courtesy {

/// max(0, v), optionally softened to temperature * log(1 + exp(v/T)).
inline double hinge(double v, double temperature = 0.0) {
  if (temperature <= 0.0) return std::max(0.0, v);
  const double z = v / temperature;
  if (z > 40.0) return v;
  return temperature * std::log1p(std::exp(z));
}

inline double hinge_slope(double v, double temperature = 0.0) {
  if (temperature <= 0.0) return v > 0.0 ? 1.0 : 0.0;
  const double z = v / temperature;
  if (z > 40.0) return 1.0;
  if (z < -40.0) return 0.0;
  return 1.0 / (1.0 + std::exp(-z));
}

struct PlannerResult {
  std::vector<Control> robot_controls;
  std::vector<Control> human_prediction;
  double selfish_cost = 0.0;
  double courtesy_value = 0.0;  // exact hinge, recomputable from the fields below
  double alt_cost = 0.0;
  double compound_cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Best cost the human could achieve in the chosen alternative world.
/// `frozen_robot` is the constant continuation of the robot's last executed
/// control; it anchors MaintainBehavior and seeds the collaborative search.
inline double alternative_cost(const Scenario& sc, const EvalContext& ctx, const JointState& x0,
                               const CostWeights& theta_h, CourtesyMode mode,
                               std::span<const Control> frozen_robot,
                               const OptimizerSettings& settings) {
  const int n = static_cast<int>(frozen_robot.size());
  OptimizerSettings os = settings;
  switch (mode) {
    case CourtesyMode::NotThere: {
      os.seed = derive_seed(settings.seed, 11);
      FeatureOptions opts;
      opts.ignore_other_main = true;
      return agent_best_response(sc, ctx, x0, Perspective::Human, frozen_robot, theta_h, os,
                                 nullptr, opts)
          .cost;
    }
    case CourtesyMode::MaintainBehavior: {
      os.seed = derive_seed(settings.seed, 12);
      return agent_best_response(sc, ctx, x0, Perspective::Human, frozen_robot, theta_h, os).cost;
    }
    case CourtesyMode::Collaborative: {
      // joint minimization of the human cost over both control sequences,
      // stacked as (u_R, u_H)
      os.seed = derive_seed(settings.seed, 13);
      OptimizerSettings inner = os;
      inner.seed = derive_seed(settings.seed, 14);
      const BestResponse vs_frozen =
          agent_best_response(sc, ctx, x0, Perspective::Human, frozen_robot, theta_h, inner);

      Objective obj;
      obj.value = [&sc, &ctx, &x0, &theta_h, n](const Eigen::VectorXd& x) {
        const std::vector<Control> ur = unpack_controls(x.head(2 * n));
        const std::vector<Control> uh = unpack_controls(x.tail(2 * n));
        return agent_cost(sc, ctx, x0, ur, uh, theta_h, Perspective::Human);
      };
      obj.gradient = [&sc, &ctx, &x0, &theta_h, n](const Eigen::VectorXd& x) {
        const std::vector<Control> ur = unpack_controls(x.head(2 * n));
        const std::vector<Control> uh = unpack_controls(x.tail(2 * n));
        const auto rs = rollout_agent(x0.robot, ur, sc.dt, sc.vehicle);
        const auto hs = rollout_agent(x0.human, uh, sc.dt, sc.vehicle);
        HorizonInput in{rs, hs, &ctx.other_states, ur, uh, ctx.prev_u_robot, ctx.prev_u_human};
        Eigen::VectorXd g(4 * n);
        g.head(2 * n) = cost_gradient(sc, in, theta_h, Perspective::Human, Perspective::Robot);
        g.tail(2 * n) = cost_gradient(sc, in, theta_h, Perspective::Human, Perspective::Human);
        return g;
      };

      const Box single = Box::controls(sc.vehicle.limits, n);
      Box box;
      box.lo.resize(4 * n);
      box.hi.resize(4 * n);
      box.lo << single.lo, single.lo;
      box.hi << single.hi, single.hi;
      Eigen::VectorXd init(4 * n);
      init.head(2 * n) = pack_controls(frozen_robot);
      init.tail(2 * n) = pack_controls(vs_frozen.controls);
      const OptResult r = optimize_controls(obj, init, box, os);
      // the frozen pair is feasible here, so never report worse than it
      return std::min(r.value, vs_frozen.cost);
    }
  }
  return 0.0;
}

/// Definition of the courtesy term: extra cost the human bears relative to
/// the alternative world, clipped at zero (no bonus for doing better).
inline double courtesy_term(const Scenario& sc, const EvalContext& ctx, const JointState& x0,
                            std::span<const Control> u_robot, std::span<const Control> u_human,
                            const CostWeights& theta_h, double alt_cost) {
  return hinge(agent_cost(sc, ctx, x0, u_robot, u_human, theta_h, Perspective::Human) - alt_cost);
}

namespace detail {

/// Robot objective with the human plan frozen: selfish cost plus the weighted
/// courtesy hinge. alt_cost does not depend on the candidate, so it is taken
/// as a precomputed constant.
inline Objective robot_stage_objective(const Scenario& sc, const EvalContext& ctx, const JointState& x0,
                                       const CostWeights& theta_r, const CostWeights& theta_h,
                                       double lambda, double alt_cost,
                                       std::shared_ptr<std::vector<Control>> frozen_human,
                                       double temperature) {
  auto human_states = std::make_shared<std::vector<AgentState>>(
      rollout_agent(x0.human, *frozen_human, sc.dt, sc.vehicle));
  const AgentState r0 = x0.robot;

  Objective obj;
  obj.value = [&sc, &ctx, r0, theta_r, theta_h, lambda, alt_cost, frozen_human, human_states,
               temperature](const Eigen::VectorXd& x) {
    const std::vector<Control> ur = unpack_controls(x);
    const auto rs = rollout_agent(r0, ur, sc.dt, sc.vehicle);
    HorizonInput in{rs, *human_states, &ctx.other_states, ur, *frozen_human,
                    ctx.prev_u_robot, ctx.prev_u_human};
    const double selfish = cumulative_cost(sc, in, theta_r, Perspective::Robot);
    if (lambda == 0.0) return selfish;
    const double ch = cumulative_cost(sc, in, theta_h, Perspective::Human);
    return selfish + lambda * hinge(ch - alt_cost, temperature);
  };
  obj.gradient = [&sc, &ctx, r0, theta_r, theta_h, lambda, alt_cost, frozen_human, human_states,
                  temperature](const Eigen::VectorXd& x) {
    const std::vector<Control> ur = unpack_controls(x);
    const auto rs = rollout_agent(r0, ur, sc.dt, sc.vehicle);
    HorizonInput in{rs, *human_states, &ctx.other_states, ur, *frozen_human,
                    ctx.prev_u_robot, ctx.prev_u_human};
    Eigen::VectorXd g = cost_gradient(sc, in, theta_r, Perspective::Robot, Perspective::Robot);
    if (lambda != 0.0) {
      const double ch = cumulative_cost(sc, in, theta_h, Perspective::Human);
      const double slope = hinge_slope(ch - alt_cost, temperature);
      if (slope != 0.0)
        g += lambda * slope * cost_gradient(sc, in, theta_h, Perspective::Human, Perspective::Robot);
    }
    return g;
  };
  return obj;
}

}  // namespace detail

/// The full compound objective at one candidate robot plan: the human
/// response is recomputed, then selfish cost plus lambda times the hinge.
inline double compound_cost(const Scenario& sc, const EvalContext& ctx, const JointState& x0,
                            std::span<const Control> u_robot, const CostWeights& theta_r,
                            const CostWeights& theta_h, double lambda, CourtesyMode mode,
                            std::span<const Control> frozen_robot, const OptimizerSettings& settings) {
  const double alt = alternative_cost(sc, ctx, x0, theta_h, mode, frozen_robot, settings);
  OptimizerSettings os = settings;
  os.seed = derive_seed(settings.seed, 21);
  const auto uh = human_best_response(sc, ctx, x0, u_robot, theta_h, os);
  const double selfish = agent_cost(sc, ctx, x0, u_robot, uh, theta_r, Perspective::Robot);
  return selfish + lambda * courtesy_term(sc, ctx, x0, u_robot, uh, theta_h, alt);
}

namespace detail {

struct AlternatingConfig {
  const Scenario& sc;
  const EvalContext& ctx;
  JointState x0;
  CostWeights theta_r;
  CostWeights theta_h;
  double lambda = 0.0;
  double alt_cost = 0.0;
  double temperature = 0.0;
  OptimizerSettings settings;
  const std::vector<Control>* warm_robot = nullptr;
  const std::vector<Control>* warm_human = nullptr;
  int horizon = 0;
};

/// Alternating minimization shared by the courteous and the selfish planner:
/// optimize u_R against a frozen human plan, refresh the human best response,
/// keep the best evaluated pair, stop when the compound value stalls.
inline PlannerResult alternate(const AlternatingConfig& c) {
  const int n = c.horizon;
  const Box box = Box::controls(c.sc.vehicle.limits, n);

  std::vector<Control> ur =
      c.warm_robot && static_cast<int>(c.warm_robot->size()) == n
          ? *c.warm_robot
          : std::vector<Control>(static_cast<std::size_t>(n));
  OptimizerSettings os = c.settings;
  os.seed = derive_seed(c.settings.seed, 50);
  std::vector<Control> uh =
      human_best_response(c.sc, c.ctx, c.x0, ur, c.theta_h, os,
                          c.warm_human && static_cast<int>(c.warm_human->size()) == n ? c.warm_human
                                                                                      : nullptr);

  auto evaluate_pair = [&](const std::vector<Control>& r, const std::vector<Control>& h,
                           double* selfish_out) {
    const double selfish = agent_cost(c.sc, c.ctx, c.x0, r, h, c.theta_r, Perspective::Robot);
    if (selfish_out) *selfish_out = selfish;
    if (c.lambda == 0.0) return selfish;
    return selfish + c.lambda * courtesy_term(c.sc, c.ctx, c.x0, r, h, c.theta_h, c.alt_cost);
  };

  PlannerResult best;
  best.robot_controls = ur;
  best.human_prediction = uh;
  best.compound_cost = evaluate_pair(ur, uh, &best.selfish_cost);
  best.alt_cost = c.alt_cost;

  int outer = 0;
  for (; outer < c.sc.planner.max_alt_iters; ++outer) {
    auto frozen = std::make_shared<std::vector<Control>>(uh);
    const Objective obj = detail::robot_stage_objective(c.sc, c.ctx, c.x0, c.theta_r, c.theta_h,
                                                        c.lambda, c.alt_cost, frozen, c.temperature);
    OptimizerSettings inner = c.settings;
    inner.seed = derive_seed(c.settings.seed, 100 + outer);
    const OptResult r = optimize_controls(obj, pack_controls(ur), box, inner);
    ur = unpack_controls(r.x);

    OptimizerSettings hs = c.settings;
    hs.seed = derive_seed(c.settings.seed, 200 + outer);
    uh = human_best_response(c.sc, c.ctx, c.x0, ur, c.theta_h, hs, &uh);

    double selfish = 0.0;
    const double value = evaluate_pair(ur, uh, &selfish);
    const double improvement = best.compound_cost - value;
    if (value < best.compound_cost) {
      best.robot_controls = ur;
      best.human_prediction = uh;
      best.compound_cost = value;
      best.selfish_cost = selfish;
    }
    if (improvement < c.sc.planner.alt_tol) {
      best.converged = true;
      ++outer;
      break;
    }
  }
  best.iterations = outer;
  best.courtesy_value = courtesy_term(c.sc, c.ctx, c.x0, best.robot_controls,
                                      best.human_prediction, c.theta_h, c.alt_cost);
  return best;
}

}  // namespace detail

/// Courteous MPC step: returns the robot plan minimizing the compound cost
/// and the human response it was evaluated against. `prev_executed_robot`
/// anchors the MaintainBehavior world (zero control at the first step, i.e.
/// keep the current velocity).
inline PlannerResult plan_courteous(const Scenario& sc, const EvalContext& ctx, const JointState& x0,
                                    const CostWeights& theta_r, const CostWeights& theta_h,
                                    double lambda, CourtesyMode mode, Control prev_executed_robot,
                                    const OptimizerSettings& settings,
                                    const std::vector<Control>* warm_robot = nullptr,
                                    const std::vector<Control>* warm_human = nullptr) {
  const int n = sc.horizon;
  const std::vector<Control> frozen(static_cast<std::size_t>(n), prev_executed_robot);
  OptimizerSettings alt_settings = settings;
  alt_settings.seed = derive_seed(settings.seed, 1);
  const double alt = alternative_cost(sc, ctx, x0, theta_h, mode, frozen, alt_settings);
  detail::AlternatingConfig c{sc,  ctx,    x0,  theta_r,    theta_h,   lambda,
                              alt, sc.planner.hinge_temperature, settings, warm_robot,
                              warm_human, n};
  return detail::alternate(c);
}

/// Baseline planner without the courtesy term (identical to plan_courteous
/// with lambda = 0, including the optimizer trajectory).
inline PlannerResult plan_selfish(const Scenario& sc, const EvalContext& ctx, const JointState& x0,
                                  const CostWeights& theta_r, const CostWeights& theta_h,
                                  Control prev_executed_robot, const OptimizerSettings& settings,
                                  const std::vector<Control>* warm_robot = nullptr,
                                  const std::vector<Control>* warm_human = nullptr) {
  detail::AlternatingConfig c{sc,  ctx, x0, theta_r, theta_h, 0.0, 0.0,
                              sc.planner.hinge_temperature, settings, warm_robot, warm_human,
                              sc.horizon};
  PlannerResult r = detail::alternate(c);
  // report the inconvenience against the configured alternative world anyway
  const std::vector<Control> frozen(static_cast<std::size_t>(sc.horizon), prev_executed_robot);
  OptimizerSettings alt_settings = settings;
  alt_settings.seed = derive_seed(settings.seed, 1);
  r.alt_cost = alternative_cost(sc, ctx, x0, theta_h, sc.courtesy.mode, frozen, alt_settings);
  r.courtesy_value = courtesy_term(sc, ctx, x0, r.robot_controls, r.human_prediction, theta_h, r.alt_cost);
  return r;
}

}  // namespace courtesy
