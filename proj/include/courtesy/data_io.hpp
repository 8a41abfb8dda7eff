#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "courtesy/irl.hpp"
#include "courtesy/simulate.hpp"

namespace courtesy {

/// One row of an NGSIM-style trajectory table.
struct TrajectoryRecord {
  long vehicle_id = 0;
  long frame_id = 0;
  double local_x = 0.0;  // lateral position in the source data
  double local_y = 0.0;  // longitudinal position in the source data
  double speed = 0.0;
  int lane_id = 0;
};

struct DatasetConfig {
  // column names in the CSV header
  std::string col_vehicle = "Vehicle_ID";
  std::string col_frame = "Frame_ID";
  std::string col_x = "Local_X";
  std::string col_y = "Local_Y";
  std::string col_speed = "v_Vel";
  std::string col_lane = "Lane_ID";
  double unit_scale = 0.3048;     // source units to meters (NGSIM ships feet)
  double frame_dt = 0.1;          // source frame period [s]
  double dt = 0.1;                // resampled timestep
  int window_before = 25;         // frames kept before the lane-change frame
  int window_after = 25;
  bool lane_decreases = true;     // left lane change decrements lane_id in NGSIM
  double lane_width = 3.7;        // source-world lane width [m] after unit_scale
  double desired_speed = 15.0;    // source-world cruise speed [m/s]
  VehicleParams vehicle{4.5, 2.0, 2.7, 40.0, {-4.0, 3.0, 0.6}};  // source-world geometry
};

struct LoadStats {
  int vehicles = 0;
  int lane_changes = 0;
  int skipped_gaps = 0;
  int skipped_window = 0;
  int skipped_no_follower = 0;
};

namespace data_detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

/// Controls that reproduce a position/speed trace under the bicycle model:
/// accel from speed differences, steering from heading differences.
inline std::vector<Control> reconstruct_controls(const std::vector<AgentState>& states, double dt,
                                                 const VehicleParams& p) {
  std::vector<Control> out;
  for (std::size_t k = 0; k + 1 < states.size(); ++k) {
    const double accel = (states[k + 1].speed - states[k].speed) / dt;
    const double dpsi = wrap_angle(states[k + 1].heading - states[k].heading);
    const double steer =
        states[k].speed > 1e-6 ? std::atan(dpsi * p.wheelbase / (states[k].speed * dt)) : 0.0;
    out.push_back(p.limits.clamp({accel, steer}));
  }
  return out;
}

inline std::vector<AgentState> states_from_rows(const std::vector<TrajectoryRecord>& rows,
                                                double scale) {
  std::vector<AgentState> states(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    states[k].x = rows[k].local_y * scale;  // longitudinal axis
    states[k].y = rows[k].local_x * scale;
    states[k].speed = rows[k].speed * scale;
  }
  for (std::size_t k = 0; k < states.size(); ++k) {
    const std::size_t a = k + 1 < states.size() ? k : k - 1;
    const double dx = states[a + 1].x - states[a].x;
    const double dy = states[a + 1].y - states[a].y;
    states[k].heading = (dx == 0.0 && dy == 0.0) ? 0.0 : std::atan2(dy, dx);
  }
  return states;
}

}  // namespace data_detail

/// Parses an NGSIM-schema CSV, extracts left-lane-change windows, and builds
/// demonstrations: the lane changer is the demonstrated driver, the nearest
/// trailing vehicle in the target lane is the interacting car, and everything
/// else near the window becomes scripted context.
inline std::vector<Demonstration> load_dataset(const std::string& path, const DatasetConfig& cfg,
                                               LoadStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset: " + path);
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = data_detail::split_csv_line(line);
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw ConfigError("dataset missing column: " + name);
  };
  const int ci_vehicle = col(cfg.col_vehicle);
  const int ci_frame = col(cfg.col_frame);
  const int ci_x = col(cfg.col_x);
  const int ci_y = col(cfg.col_y);
  const int ci_speed = col(cfg.col_speed);
  const int ci_lane = col(cfg.col_lane);

  std::map<long, std::vector<TrajectoryRecord>> by_vehicle;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = data_detail::split_csv_line(line);
    TrajectoryRecord r;
    r.vehicle_id = std::stol(cells.at(ci_vehicle));
    r.frame_id = std::stol(cells.at(ci_frame));
    r.local_x = std::stod(cells.at(ci_x));
    r.local_y = std::stod(cells.at(ci_y));
    r.speed = std::stod(cells.at(ci_speed));
    r.lane_id = std::stoi(cells.at(ci_lane));
    by_vehicle[r.vehicle_id].push_back(r);
  }

  LoadStats st;
  st.vehicles = static_cast<int>(by_vehicle.size());
  std::vector<Demonstration> demos;

  for (auto& [vid, rows] : by_vehicle) {
    std::sort(rows.begin(), rows.end(),
              [](const TrajectoryRecord& a, const TrajectoryRecord& b) { return a.frame_id < b.frame_id; });
    bool gap = false;
    for (std::size_t k = 0; k + 1 < rows.size(); ++k)
      gap = gap || rows[k + 1].frame_id != rows[k].frame_id + 1;
    if (gap) {
      ++st.skipped_gaps;
      continue;
    }
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
      const int delta = rows[k + 1].lane_id - rows[k].lane_id;
      const bool left_change = cfg.lane_decreases ? delta == -1 : delta == 1;
      if (!left_change) continue;
      ++st.lane_changes;
      const long change_frame = rows[k + 1].frame_id;
      const long first = change_frame - cfg.window_before;
      const long last = change_frame + cfg.window_after;
      if (first < rows.front().frame_id || last > rows.back().frame_id) {
        ++st.skipped_window;
        continue;
      }
      const std::size_t i0 = static_cast<std::size_t>(first - rows.front().frame_id);
      const std::size_t i1 = static_cast<std::size_t>(last - rows.front().frame_id);
      std::vector<TrajectoryRecord> window(rows.begin() + i0, rows.begin() + i1 + 1);

      // nearest trailing vehicle in the target lane at the change frame
      const int target_lane = rows[k + 1].lane_id;
      const double changer_y = rows[k + 1].local_y;
      long follower_id = -1;
      double best_behind = std::numeric_limits<double>::infinity();
      for (const auto& [ovid, orows] : by_vehicle) {
        if (ovid == vid) continue;
        for (const auto& orow : orows) {
          if (orow.frame_id != change_frame || orow.lane_id != target_lane) continue;
          const double behind = changer_y - orow.local_y;
          if (behind > 0.0 && behind < best_behind) {
            best_behind = behind;
            follower_id = ovid;
          }
        }
      }
      if (follower_id < 0) {
        ++st.skipped_no_follower;
        continue;
      }
      auto window_of = [&](long ovid) -> std::vector<TrajectoryRecord> {
        const auto& orows = by_vehicle.at(ovid);
        if (first < orows.front().frame_id || last > orows.back().frame_id) return {};
        const std::size_t j0 = static_cast<std::size_t>(first - orows.front().frame_id);
        std::vector<TrajectoryRecord> w(orows.begin() + j0, orows.begin() + j0 + (i1 - i0) + 1);
        for (std::size_t j = 0; j + 1 < w.size(); ++j)
          if (w[j + 1].frame_id != w[j].frame_id + 1) return {};
        return w;
      };
      const auto follower_rows = window_of(follower_id);
      if (follower_rows.empty()) {
        ++st.skipped_no_follower;
        continue;
      }

      Demonstration d;
      d.dt = cfg.dt;
      const auto changer_states = data_detail::states_from_rows(window, cfg.unit_scale);
      const auto follower_states = data_detail::states_from_rows(follower_rows, cfg.unit_scale);
      d.human_controls = data_detail::reconstruct_controls(changer_states, cfg.dt, cfg.vehicle);
      d.robot_controls = data_detail::reconstruct_controls(follower_states, cfg.dt, cfg.vehicle);
      d.x0.human = changer_states.front();
      d.x0.robot = follower_states.front();

      // scripted context: any other vehicle covering the window in nearby lanes
      for (const auto& [ovid, orows] : by_vehicle) {
        if (ovid == vid || ovid == follower_id) continue;
        const auto w = window_of(ovid);
        if (w.empty()) continue;
        if (std::abs(w.front().local_y - changer_y) * cfg.unit_scale > 60.0) continue;
        const auto ws = data_detail::states_from_rows(w, cfg.unit_scale);
        d.x0.others.push_back(ws.front());
        d.surrounding.push_back(ws);
      }

      // a minimal scene: straight source lane and target lane
      Scenario scene;
      scene.name = "ngsim_window";
      scene.dt = cfg.dt;
      scene.horizon = d.length();
      scene.lane_width = cfg.lane_width;
      scene.vehicle = cfg.vehicle;
      scene.speed_limit = cfg.vehicle.v_max;
      const double from_y = rows[k].local_x * cfg.unit_scale;
      const double to_y = rows[k + 1].local_x * cfg.unit_scale;
      const double x0 = changer_states.front().x - 200.0;
      const double x1 = changer_states.front().x + 400.0;
      scene.lanes = {{0, Polyline({{x0, to_y}, {x1, to_y}}), cfg.lane_width},
                     {1, Polyline({{x0, from_y}, {x1, from_y}}), cfg.lane_width}};
      scene.human = {d.x0.human, {0, cfg.desired_speed}, CostWeights{}};
      scene.robot = {d.x0.robot, {0, cfg.desired_speed}, CostWeights{1.0, 1.0, 0.01, 0.01, 1.0, 0.0}};
      d.scene = scene;
      demos.push_back(std::move(d));
    }
  }
  if (stats) *stats = st;
  return demos;
}

/// Deterministic shuffled split into (train, test).
inline std::pair<std::vector<Demonstration>, std::vector<Demonstration>> split_dataset(
    std::vector<Demonstration> demos, std::size_t train_size, std::uint64_t seed) {
  std::vector<std::size_t> order(demos.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::pair<std::vector<Demonstration>, std::vector<Demonstration>> out;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < train_size ? out.first : out.second).push_back(std::move(demos[order[i]]));
  return out;
}

struct SyntheticOptions {
  int demo_length = 20;
  std::string family = "lane_change_slow";
  double position_jitter = 0.10;
  double speed_jitter = 0.04;
};

/// Demonstrations produced by the courteous planner itself: one full-horizon
/// plan per randomized initial condition. The executed plan is exactly the
/// optimized one, so each demo is locally optimal for the generating cost
/// (the Laplace assumption holds by construction). Roles are flipped into the
/// demonstration convention: the planning car becomes the demonstrated
/// driver, the responding human becomes the replayed context.
inline std::vector<Demonstration> generate_synthetic_demos(const CostWeights& theta_true,
                                                           double lambda_true, int count,
                                                           std::uint64_t seed,
                                                           const SyntheticOptions& opt = {}) {
  std::vector<Demonstration> demos;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  int failures = 0;

  for (int i = 0; i < count && failures < 3 * count + 10; ++i) {
    Scenario sc = builtin_scenario(opt.family);
    sc.horizon = opt.demo_length;
    sc.robot.state.x += opt.position_jitter * unit(rng);
    sc.human.state.x += opt.position_jitter * unit(rng);
    sc.robot.state.speed =
        std::clamp(sc.robot.state.speed + opt.speed_jitter * unit(rng), 0.1, sc.vehicle.v_max);
    sc.human.state.speed =
        std::clamp(sc.human.state.speed + opt.speed_jitter * unit(rng), 0.1, sc.vehicle.v_max);
    sc.optimizer.seed = derive_seed(seed, 1000 + i);

    try {
      JointState x0{sc.robot.state, sc.human.state, {}};
      for (const auto& o : sc.others) x0.others.push_back(o.state);
      std::vector<std::vector<Control>> tapes(sc.others.size());
      for (std::size_t t = 0; t < sc.others.size(); ++t) tapes[t] = sc.others[t].script;
      const EvalContext ctx =
          make_context(sc, x0, sc.horizon, {}, {}, {}, tapes, sc.optimizer, nullptr);
      const PlannerResult plan =
          plan_courteous(sc, ctx, x0, theta_true, sc.human.weights, lambda_true,
                         sc.courtesy.mode, {}, sc.optimizer);

      Demonstration d;
      d.dt = sc.dt;
      d.human_controls = plan.robot_controls;
      d.robot_controls = plan.human_prediction;
      d.x0.human = sc.robot.state;
      d.x0.robot = sc.human.state;
      d.x0.others = x0.others;
      d.surrounding = ctx.other_states;
      Scenario scene = sc;
      scene.robot = sc.human;                   // context car keeps the true human weights
      scene.human = sc.robot;
      scene.human.weights = CostWeights{};      // demonstrated weights are what IRL must find
      scene.courtesy.lambda = 0.0;
      d.scene = std::move(scene);
      demos.push_back(std::move(d));
    } catch (const std::exception&) {
      ++failures;
      --i;
    }
  }
  return demos;
}

}  // namespace courtesy
