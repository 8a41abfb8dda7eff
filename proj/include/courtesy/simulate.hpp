#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "courtesy/planner.hpp"

namespace courtesy {

enum class MergeOrder { Ahead, Behind, None };

inline std::string to_string(MergeOrder m) {
  switch (m) {
    case MergeOrder::Ahead: return "ahead";
    case MergeOrder::Behind: return "behind";
    case MergeOrder::None: return "none";
  }
  return "none";
}

struct SimSettings {
  std::uint64_t seed = 0;
  int workers = 1;
};

struct StepRecord {
  int step = 0;
  double time = 0.0;
  JointState state;  // after executing this step's controls
  Control robot_u{};
  Control human_u{};
  std::vector<Control> other_u;
  double selfish_cost = 0.0;
  double courtesy_value = 0.0;
  double alt_cost = 0.0;
  double compound_cost = 0.0;
  int planner_iterations = 0;
  bool planner_converged = false;
  double gap = 0.0;
  bool overlap = false;
};

struct Metrics {
  double min_gap = 0.0;
  double human_min_accel = 0.0;
  double inconvenience = 0.0;
  MergeOrder merge_order = MergeOrder::None;
  double human_avg_speed = 0.0;
  bool collision = false;      // robot-human overlap at any executed step
  bool any_overlap = false;    // any pair, including third parties
  double realized_human_cost = 0.0;
  double alt_episode_cost = 0.0;
  std::optional<double> robot_conflict_time;
  std::optional<double> human_conflict_time;
  std::optional<double> human_cleared_zone_time;
  std::optional<double> robot_entered_opposing_time;
};

struct SimLog {
  std::vector<JointState> states;  // length duration+1 (element 0 is the initial state)
  std::vector<StepRecord> steps;
  Metrics metrics;
  bool aborted = false;
  std::string error;
};

namespace detail {

inline double along_lane(const Lane& lane, const Vec2& p) { return lane.centerline.station(p); }

inline MergeOrder merge_order_at(const Scenario& sc, const JointState& x) {
  const Lane& target = sc.lane(sc.robot.goal.target_lane);
  if (target.centerline.distance_to(x.robot.position()) > 0.5 * target.width) return MergeOrder::None;
  return along_lane(target, x.robot.position()) > along_lane(target, x.human.position())
             ? MergeOrder::Ahead
             : MergeOrder::Behind;
}

inline bool crossed(const std::array<Vec2, 2>& line, const Vec2& a, const Vec2& b) {
  return segments_intersect(line[0], line[1], a, b);
}

/// Human cost realized over the whole run and the matching episode-level
/// alternative, both over the executed horizon from the initial state.
inline void episode_inconvenience(const Scenario& sc, const SimLog& log, Metrics* m) {
  const int n = static_cast<int>(log.steps.size());
  if (n == 0) {
    m->realized_human_cost = 0.0;
    m->alt_episode_cost = 0.0;
    m->inconvenience = 0.0;
    return;
  }
  EvalContext ctx;
  ctx.other_states.resize(log.states[0].others.size());
  for (std::size_t i = 0; i < log.states[0].others.size(); ++i)
    for (const auto& js : log.states) ctx.other_states[i].push_back(js.others[i]);

  std::vector<Control> ur, uh;
  std::vector<AgentState> rs, hs;
  for (const auto& js : log.states) {
    rs.push_back(js.robot);
    hs.push_back(js.human);
  }
  for (const auto& st : log.steps) {
    ur.push_back(st.robot_u);
    uh.push_back(st.human_u);
  }
  HorizonInput in{rs, hs, &ctx.other_states, ur, uh, Control{}, Control{}};
  m->realized_human_cost = cumulative_cost(sc, in, sc.human.weights, Perspective::Human);

  OptimizerSettings os = sc.optimizer;
  os.max_iters = std::max(os.max_iters, 400);
  os.seed = derive_seed(sc.optimizer.seed, 7001);
  const std::vector<Control> frozen(static_cast<std::size_t>(n));  // keep the initial velocity
  m->alt_episode_cost =
      alternative_cost(sc, ctx, log.states[0], sc.human.weights, sc.courtesy.mode, frozen, os);
  m->inconvenience = hinge(m->realized_human_cost - m->alt_episode_cost);
}

}  // namespace detail

/// Closed-loop MPC: the robot plans the compound objective, the human
/// best-responds to the committed robot plan within the same step, everyone
/// executes the first control, and the cycle repeats.
inline SimLog simulate(const Scenario& sc, const SimSettings& settings) {
  SimLog log;
  JointState x;
  x.robot = sc.robot.state;
  x.human = sc.human.state;
  for (const auto& o : sc.others) x.others.push_back(o.state);
  log.states.push_back(x);

  Control prev_ur{}, prev_uh{};
  std::vector<Control> warm_robot, warm_human;
  std::vector<std::vector<Control>> other_warm(sc.others.size());

  Metrics m;
  m.min_gap = box_gap(footprint(x.robot, sc.vehicle), footprint(x.human, sc.vehicle));
  m.human_min_accel = 0.0;
  double speed_sum = x.human.speed;

  for (int t = 0; t < sc.duration; ++t) {
    OptimizerSettings step_settings = sc.optimizer;
    step_settings.seed = derive_seed(derive_seed(settings.seed, 0x51af), t);

    // remaining script tapes for this step
    std::vector<std::vector<Control>> tapes(sc.others.size());
    for (std::size_t i = 0; i < sc.others.size(); ++i)
      if (sc.others[i].policy == ThirdPartySpec::Policy::Scripted)
        for (std::size_t k = t; k < sc.others[i].script.size(); ++k)
          tapes[i].push_back(sc.others[i].script[k]);

    try {
      const EvalContext ctx = make_context(sc, x, sc.horizon, warm_robot, prev_ur, prev_uh, tapes,
                                           step_settings, &other_warm);
      const PlannerResult plan =
          plan_courteous(sc, ctx, x, sc.robot.weights, sc.human.weights, sc.courtesy.lambda,
                         sc.courtesy.mode, prev_ur, step_settings,
                         warm_robot.empty() ? nullptr : &warm_robot,
                         warm_human.empty() ? nullptr : &warm_human);

      // the human answers the committed plan
      OptimizerSettings hset = step_settings;
      hset.seed = derive_seed(step_settings.seed, 3001);
      const std::vector<Control> human_plan =
          human_best_response(sc, ctx, x, plan.robot_controls, sc.human.weights, hset,
                              warm_human.empty() ? &plan.human_prediction : &warm_human);

      // responsive third parties also answer the committed plan
      std::vector<Control> other_exec(sc.others.size());
      {
        const EvalContext exec_ctx = make_context(sc, x, sc.horizon, plan.robot_controls, prev_ur,
                                                  prev_uh, tapes, step_settings, &other_warm);
        for (std::size_t i = 0; i < sc.others.size(); ++i) {
          if (sc.others[i].policy == ThirdPartySpec::Policy::Scripted) {
            other_exec[i] = tapes[i].empty() ? Control{} : tapes[i][0];
          } else {
            // first control consistent with the predicted response
            const AgentState& s0 = x.others[i];
            const AgentState& s1 = exec_ctx.other_states[i][1];
            const double accel = (s1.speed - s0.speed) / sc.dt;
            const double dpsi = wrap_angle(s1.heading - s0.heading);
            const double steer =
                s0.speed > 1e-9 ? std::atan(dpsi * sc.vehicle.wheelbase / (s0.speed * sc.dt)) : 0.0;
            other_exec[i] = sc.vehicle.limits.clamp({accel, steer});
          }
        }
      }

      StepRecord rec;
      rec.step = t;
      rec.time = (t + 1) * sc.dt;
      rec.robot_u = sc.vehicle.limits.clamp(plan.robot_controls[0]);
      rec.human_u = sc.vehicle.limits.clamp(human_plan[0]);
      rec.other_u = other_exec;
      rec.selfish_cost = plan.selfish_cost;
      rec.courtesy_value = plan.courtesy_value;
      rec.alt_cost = plan.alt_cost;
      rec.compound_cost = plan.compound_cost;
      rec.planner_iterations = plan.iterations;
      rec.planner_converged = plan.converged;

      JointState nx;
      nx.robot = step(x.robot, rec.robot_u, sc.dt, sc.vehicle).state;
      nx.human = step(x.human, rec.human_u, sc.dt, sc.vehicle).state;
      for (std::size_t i = 0; i < x.others.size(); ++i)
        nx.others.push_back(step(x.others[i], other_exec[i], sc.dt, sc.vehicle).state);

      rec.gap = box_gap(footprint(nx.robot, sc.vehicle), footprint(nx.human, sc.vehicle));
      rec.overlap = boxes_overlap(footprint(nx.robot, sc.vehicle), footprint(nx.human, sc.vehicle));
      for (const auto& o : nx.others) {
        rec.overlap = rec.overlap ||
                      boxes_overlap(footprint(nx.robot, sc.vehicle), footprint(o, sc.vehicle)) ||
                      boxes_overlap(footprint(nx.human, sc.vehicle), footprint(o, sc.vehicle));
      }

      // metrics accumulated on the fly
      m.min_gap = std::min(m.min_gap, rec.gap);
      m.human_min_accel = std::min(m.human_min_accel, rec.human_u.accel);
      m.collision = m.collision ||
                    boxes_overlap(footprint(nx.robot, sc.vehicle), footprint(nx.human, sc.vehicle));
      m.any_overlap = m.any_overlap || rec.overlap;
      speed_sum += nx.human.speed;
      if (sc.conflict_line) {
        if (!m.robot_conflict_time &&
            detail::crossed(*sc.conflict_line, x.robot.position(), nx.robot.position()))
          m.robot_conflict_time = rec.time;
        if (!m.human_conflict_time &&
            detail::crossed(*sc.conflict_line, x.human.position(), nx.human.position()))
          m.human_conflict_time = rec.time;
      }
      if (sc.blockage_zone) {
        const double dir = std::cos(sc.human.state.heading) >= 0.0 ? 1.0 : -1.0;
        const double exit_edge = dir > 0.0 ? (*sc.blockage_zone)[1] : (*sc.blockage_zone)[0];
        if (!m.human_cleared_zone_time && dir * (nx.human.x - exit_edge) > 0.0)
          m.human_cleared_zone_time = rec.time;
        const Lane& opposing = sc.lane(sc.human.goal.target_lane);
        if (!m.robot_entered_opposing_time &&
            opposing.centerline.distance_to(nx.robot.position()) < 0.5 * opposing.width)
          m.robot_entered_opposing_time = rec.time;
      }

      // warm starts for the next cycle: shift by one step
      warm_robot.assign(plan.robot_controls.begin() + 1, plan.robot_controls.end());
      warm_robot.push_back(plan.robot_controls.back());
      warm_human.assign(human_plan.begin() + 1, human_plan.end());
      warm_human.push_back(human_plan.back());
      prev_ur = rec.robot_u;
      prev_uh = rec.human_u;

      rec.state = nx;
      log.steps.push_back(std::move(rec));
      log.states.push_back(std::move(nx));
      x = log.states.back();
    } catch (const std::exception& e) {
      log.aborted = true;
      log.error = e.what();
      break;
    }
  }

  const int executed = static_cast<int>(log.steps.size());
  m.human_avg_speed = speed_sum / static_cast<double>(executed + 1);
  m.merge_order = detail::merge_order_at(sc, log.states.back());
  detail::episode_inconvenience(sc, log, &m);
  log.metrics = m;
  return log;
}

struct SweepRow {
  double lambda = 0.0;
  std::optional<Metrics> metrics;
  std::string error;
  SimLog log;
};

/// One simulation per lambda value; rows come back in input order and a
/// failing run does not stop the sweep.
inline std::vector<SweepRow> sweep_lambda(const Scenario& sc, const std::vector<double>& lambdas,
                                          const SimSettings& settings) {
  std::vector<SweepRow> rows(lambdas.size());
  auto run_one = [&](std::size_t i) {
    Scenario s = sc;
    s.courtesy.lambda = lambdas[i];
    rows[i].lambda = lambdas[i];
    try {
      rows[i].log = simulate(s, settings);
      if (rows[i].log.aborted)
        rows[i].error = rows[i].log.error;
      else
        rows[i].metrics = rows[i].log.metrics;
    } catch (const std::exception& e) {
      rows[i].error = e.what();
    }
  };
  if (settings.workers <= 1) {
    for (std::size_t i = 0; i < lambdas.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    const std::size_t stride = static_cast<std::size_t>(settings.workers);
    for (std::size_t w = 0; w < stride; ++w)
      pool.emplace_back([&, w]() {
        for (std::size_t i = w; i < lambdas.size(); i += stride) run_one(i);
      });
    for (auto& th : pool) th.join();
  }
  return rows;
}

}  // namespace courtesy
