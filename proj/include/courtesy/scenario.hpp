#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "courtesy/dynamics.hpp"
#include "courtesy/geometry.hpp"

namespace courtesy {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-feature weights of one agent's running cost. `courtesy` is the
/// trade-off weight on the inconvenience term and only meaningful for the
/// planning (robot-role) agent.
struct CostWeights {
  double goal = 1.0;    // target-lane proximity
  double speed = 1.0;   // squared deviation from desired speed
  double accel = 0.0;   // squared jerk
  double steer = 0.0;   // squared steering rate
  double safety = 0.0;  // proximity to surrounding cars
  double courtesy = 0.0;

  std::array<double, 5> base() const { return {goal, speed, accel, steer, safety}; }
};

enum class CourtesyMode { NotThere, Collaborative, MaintainBehavior };

inline std::string to_string(CourtesyMode m) {
  switch (m) {
    case CourtesyMode::NotThere: return "not_there";
    case CourtesyMode::Collaborative: return "collaborative";
    case CourtesyMode::MaintainBehavior: return "maintain";
  }
  return "not_there";
}

inline CourtesyMode courtesy_mode_from_string(const std::string& s) {
  if (s == "not_there") return CourtesyMode::NotThere;
  if (s == "collaborative") return CourtesyMode::Collaborative;
  if (s == "maintain") return CourtesyMode::MaintainBehavior;
  throw ConfigError("unknown courtesy mode: " + s);
}

struct Lane {
  int id = 0;
  Polyline centerline;
  double width = 0.37;
};

struct AgentGoal {
  int target_lane = 0;
  double desired_speed = 1.0;
};

struct AgentSpec {
  AgentState state;
  AgentGoal goal;
  CostWeights weights;
};

/// Third parties either replay a scripted control tape (held at zero once the
/// tape runs out) or best-respond to the robot like a second human.
struct ThirdPartySpec {
  enum class Policy { Scripted, Responsive };
  AgentState state;
  Policy policy = Policy::Scripted;
  std::vector<Control> script;       // Scripted
  AgentGoal goal;                    // Responsive
  CostWeights weights;               // Responsive
};

struct CourtesyConfig {
  CourtesyMode mode = CourtesyMode::NotThere;
  double lambda = 0.0;
};

struct OptimizerSettings {
  int max_iters = 200;
  double grad_tol = 1e-5;
  double fd_step = 1e-5;
  int restarts = 3;
  std::uint64_t seed = 0;
  bool analytic_gradient = false;
};

struct PlannerConfig {
  int max_alt_iters = 10;
  double alt_tol = 1e-4;
  double hinge_temperature = 0.0;  // 0 keeps the hinge exact; >0 softens it
};

struct Scenario {
  std::string name = "scenario";
  double dt = 0.1;
  int horizon = 10;
  int duration = 30;
  double speed_limit = 1.0;
  double lane_width = 0.37;
  VehicleParams vehicle{};
  std::vector<Lane> lanes;
  AgentSpec robot;
  AgentSpec human;
  std::vector<ThirdPartySpec> others;
  CourtesyConfig courtesy{};
  OptimizerSettings optimizer{};
  PlannerConfig planner{};
  // first-passage line used to decide conflict-clearing order (turn scenarios)
  std::optional<std::array<Vec2, 2>> conflict_line;
  // [x_min, x_max] interval the overtaking robot must borrow the opposing lane for
  std::optional<std::array<double, 2>> blockage_zone;

  const Lane& lane(int id) const {
    for (const auto& l : lanes)
      if (l.id == id) return l;
    throw ConfigError("unknown lane id " + std::to_string(id));
  }

  void validate() const {
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (dt <= 0.0) throw ConfigError("dt must be positive");
    if (duration < 0) throw ConfigError("duration must be >= 0");
    if (lane_width <= vehicle.width) throw ConfigError("lane narrower than vehicle");
    for (const AgentSpec* a : {&robot, &human}) {
      if (a->state.speed < 0.0 || a->state.speed > vehicle.v_max)
        throw ConfigError("initial speed outside [0, v_max]");
      lane(a->goal.target_lane);
      bool on_road = false;
      for (const auto& l : lanes)
        on_road = on_road || l.centerline.distance_to(a->state.position()) <= 0.5 * l.width + 1e-9;
      if (!on_road) throw ConfigError("agent starts off-road");
    }
  }
};

// ---------------------------------------------------------------------------
// JSON (scenario files; schema documented in the README)

inline void to_json(nlohmann::json& j, const Vec2& v) { j = nlohmann::json::array({v.x, v.y}); }
inline void from_json(const nlohmann::json& j, Vec2& v) {
  v.x = j.at(0).get<double>();
  v.y = j.at(1).get<double>();
}

inline void to_json(nlohmann::json& j, const AgentState& s) {
  j = {{"x", s.x}, {"y", s.y}, {"heading", s.heading}, {"speed", s.speed}};
}
inline void from_json(const nlohmann::json& j, AgentState& s) {
  s.x = j.at("x").get<double>();
  s.y = j.at("y").get<double>();
  s.heading = j.value("heading", 0.0);
  s.speed = j.value("speed", 0.0);
}

inline void to_json(nlohmann::json& j, const Control& u) {
  j = nlohmann::json::array({u.accel, u.steer});
}
inline void from_json(const nlohmann::json& j, Control& u) {
  u.accel = j.at(0).get<double>();
  u.steer = j.at(1).get<double>();
}

inline void to_json(nlohmann::json& j, const CostWeights& w) {
  j = {{"goal", w.goal},   {"speed", w.speed},   {"accel", w.accel},
       {"steer", w.steer}, {"safety", w.safety}, {"courtesy", w.courtesy}};
}
inline void from_json(const nlohmann::json& j, CostWeights& w) {
  w.goal = j.value("goal", 1.0);
  w.speed = j.value("speed", 1.0);
  w.accel = j.value("accel", 0.0);
  w.steer = j.value("steer", 0.0);
  w.safety = j.value("safety", 0.0);
  w.courtesy = j.value("courtesy", 0.0);
}

inline void to_json(nlohmann::json& j, const VehicleParams& p) {
  j = {{"length", p.length},
       {"width", p.width},
       {"wheelbase", p.wheelbase},
       {"v_max", p.v_max},
       {"accel_min", p.limits.accel_min},
       {"accel_max", p.limits.accel_max},
       {"steer_max", p.limits.steer_max}};
}
inline void from_json(const nlohmann::json& j, VehicleParams& p) {
  p.length = j.value("length", 0.45);
  p.width = j.value("width", 0.20);
  p.wheelbase = j.value("wheelbase", 0.26);
  p.v_max = j.value("v_max", 1.0);
  p.limits.accel_min = j.value("accel_min", -1.0);
  p.limits.accel_max = j.value("accel_max", 0.5);
  p.limits.steer_max = j.value("steer_max", 0.6);
}

inline void to_json(nlohmann::json& j, const Lane& l) {
  j = {{"id", l.id}, {"centerline", l.centerline.points()}, {"width", l.width}};
}
inline void from_json(const nlohmann::json& j, Lane& l) {
  l.id = j.at("id").get<int>();
  l.centerline = Polyline(j.at("centerline").get<std::vector<Vec2>>());
  l.width = j.value("width", 0.37);
}

inline void to_json(nlohmann::json& j, const AgentGoal& g) {
  j = {{"target_lane", g.target_lane}, {"desired_speed", g.desired_speed}};
}
inline void from_json(const nlohmann::json& j, AgentGoal& g) {
  g.target_lane = j.value("target_lane", 0);
  g.desired_speed = j.value("desired_speed", 1.0);
}

inline void to_json(nlohmann::json& j, const AgentSpec& a) {
  j = {{"state", a.state}, {"goal", a.goal}, {"weights", a.weights}};
}
inline void from_json(const nlohmann::json& j, AgentSpec& a) {
  a.state = j.at("state").get<AgentState>();
  a.goal = j.value("goal", AgentGoal{});
  a.weights = j.value("weights", CostWeights{});
}

inline void to_json(nlohmann::json& j, const ThirdPartySpec& t) {
  j = {{"state", t.state},
       {"policy", t.policy == ThirdPartySpec::Policy::Scripted ? "scripted" : "responsive"},
       {"script", t.script},
       {"goal", t.goal},
       {"weights", t.weights}};
}
inline void from_json(const nlohmann::json& j, ThirdPartySpec& t) {
  t.state = j.at("state").get<AgentState>();
  const std::string p = j.value("policy", "scripted");
  if (p == "scripted")
    t.policy = ThirdPartySpec::Policy::Scripted;
  else if (p == "responsive")
    t.policy = ThirdPartySpec::Policy::Responsive;
  else
    throw ConfigError("unknown third-party policy: " + p);
  t.script = j.value("script", std::vector<Control>{});
  t.goal = j.value("goal", AgentGoal{});
  t.weights = j.value("weights", CostWeights{});
}

inline void to_json(nlohmann::json& j, const OptimizerSettings& s) {
  j = {{"max_iters", s.max_iters}, {"grad_tol", s.grad_tol},
       {"fd_step", s.fd_step},     {"restarts", s.restarts},
       {"seed", s.seed},           {"analytic_gradient", s.analytic_gradient}};
}
inline void from_json(const nlohmann::json& j, OptimizerSettings& s) {
  s.max_iters = j.value("max_iters", 200);
  s.grad_tol = j.value("grad_tol", 1e-5);
  s.fd_step = j.value("fd_step", 1e-5);
  s.restarts = j.value("restarts", 3);
  s.seed = j.value("seed", std::uint64_t{0});
  s.analytic_gradient = j.value("analytic_gradient", false);
}

inline void to_json(nlohmann::json& j, const PlannerConfig& p) {
  j = {{"max_alt_iters", p.max_alt_iters},
       {"alt_tol", p.alt_tol},
       {"hinge_temperature", p.hinge_temperature}};
}
inline void from_json(const nlohmann::json& j, PlannerConfig& p) {
  p.max_alt_iters = j.value("max_alt_iters", 10);
  p.alt_tol = j.value("alt_tol", 1e-4);
  p.hinge_temperature = j.value("hinge_temperature", 0.0);
}

inline void to_json(nlohmann::json& j, const Scenario& s) {
  j = {{"name", s.name},
       {"dt", s.dt},
       {"horizon", s.horizon},
       {"duration", s.duration},
       {"speed_limit", s.speed_limit},
       {"lane_width", s.lane_width},
       {"vehicle", s.vehicle},
       {"lanes", s.lanes},
       {"robot", s.robot},
       {"human", s.human},
       {"others", s.others},
       {"courtesy", {{"mode", to_string(s.courtesy.mode)}, {"lambda", s.courtesy.lambda}}},
       {"optimizer", s.optimizer},
       {"planner", s.planner}};
  if (s.conflict_line) j["conflict_line"] = {(*s.conflict_line)[0], (*s.conflict_line)[1]};
  if (s.blockage_zone) j["blockage_zone"] = {(*s.blockage_zone)[0], (*s.blockage_zone)[1]};
}

inline void from_json(const nlohmann::json& j, Scenario& s) {
  s.name = j.value("name", "scenario");
  s.dt = j.value("dt", 0.1);
  s.horizon = j.value("horizon", 10);
  s.duration = j.value("duration", 30);
  s.speed_limit = j.value("speed_limit", 1.0);
  s.lane_width = j.value("lane_width", 0.37);
  s.vehicle = j.value("vehicle", VehicleParams{});
  s.lanes = j.at("lanes").get<std::vector<Lane>>();
  s.robot = j.at("robot").get<AgentSpec>();
  s.human = j.at("human").get<AgentSpec>();
  s.others = j.value("others", std::vector<ThirdPartySpec>{});
  if (j.contains("courtesy")) {
    s.courtesy.mode = courtesy_mode_from_string(j["courtesy"].value("mode", "not_there"));
    s.courtesy.lambda = j["courtesy"].value("lambda", 0.0);
    if (s.courtesy.lambda < 0.0) throw ConfigError("courtesy.lambda must be >= 0");
  }
  s.optimizer = j.value("optimizer", OptimizerSettings{});
  s.planner = j.value("planner", PlannerConfig{});
  if (j.contains("conflict_line")) {
    auto v = j["conflict_line"].get<std::vector<Vec2>>();
    if (v.size() != 2) throw ConfigError("conflict_line needs two points");
    s.conflict_line = {v[0], v[1]};
  }
  if (j.contains("blockage_zone")) {
    auto v = j["blockage_zone"].get<std::vector<double>>();
    if (v.size() != 2) throw ConfigError("blockage_zone needs [x_min, x_max]");
    s.blockage_zone = {v[0], v[1]};
  }
}

/// Apply a `path.to.key=value` override to a scenario JSON document.
/// Values parse as JSON when possible and fall back to strings.
inline void apply_override(nlohmann::json& doc, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError("override must look like key.path=value: " + kv);
  std::string path = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);
  for (auto& c : path)
    if (c == '.') c = '/';
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  doc[nlohmann::json::json_pointer("/" + path)] = value;
}

// ---------------------------------------------------------------------------
// Built-in scenario families (paper-matched parameters where stated)

namespace builtin {

inline Polyline straight(double y, double x0, double x1) {
  return Polyline({{x0, y}, {x1, y}});
}

inline Scenario lane_change(double initial_speed, double robot_lead) {
  Scenario s;
  s.duration = 40;
  s.optimizer.restarts = 4;
  const double w = s.lane_width;
  s.lanes = {{0, straight(0.0, -2.0, 8.0), w}, {1, straight(w, -2.0, 8.0), w}};
  // robot starts ahead in the adjacent lane and wants the human's lane
  s.robot.state = {robot_lead, w, 0.0, initial_speed};
  s.robot.goal = {0, 1.0};
  s.robot.weights = {3.0, 4.0, 0.05, 0.3, 4.0, 0.0};
  s.human.state = {0.0, 0.0, 0.0, initial_speed};
  s.human.goal = {0, initial_speed};  // the human wants to keep its speed
  s.human.weights = {30.0, 60.0, 0.3, 2.0, 80.0, 0.0};
  return s;
}

inline Scenario lane_change_slow() {
  Scenario s = lane_change(0.85, 0.6);
  s.name = "lane_change_slow";
  return s;
}

inline Scenario lane_change_fast() {
  Scenario s = lane_change(0.9, 0.4);
  s.name = "lane_change_fast";
  return s;
}

/// Left-turning robot against an oncoming straight human.
inline Scenario left_turn() {
  Scenario s;
  s.name = "left_turn";
  s.duration = 50;
  const double w = s.lane_width;
  const double off = 0.5 * w;
  // north-south road: robot northbound on x=+off, human southbound on x=-off;
  // the turn exits west on y=+off. Corner arc radius ~0.73 so the turn is
  // trackable at full speed.
  Polyline robot_path({{off, -6.0},
                       {off, -0.55},
                       {0.129, -0.269},
                       {-0.030, -0.030},
                       {-0.269, 0.129},
                       {-0.55, off},
                       {-6.0, off}});
  s.lanes = {{0, Polyline({{off, -6.0}, {off, 6.0}}), w},
             {1, Polyline({{-off, 6.0}, {-off, -6.0}}), w},
             {2, std::move(robot_path), w}};
  s.optimizer.restarts = 4;
  s.robot.state = {off, -0.75, 1.5707963267948966, 0.85};
  s.robot.goal = {2, 1.0};
  s.robot.weights = {3.0, 4.0, 0.05, 0.3, 4.0, 0.0};
  s.human.state = {-off, 1.40, -1.5707963267948966, 0.85};
  s.human.goal = {1, 0.85};
  s.human.weights = {3.0, 6.0, 0.03, 0.2, 20.0, 0.0};
  // crossing of the southbound lane by the turn exit
  s.conflict_line = {{Vec2{-0.55, 0.10}, Vec2{0.12, 0.10}}};
  return s;
}

/// Right-turning human merging into the lane of a straight-driving robot
/// approaching from the human's left.
inline Scenario right_turn_human() {
  Scenario s;
  s.name = "right_turn_human";
  s.duration = 40;
  const double w = s.lane_width;
  const double off = 0.5 * w;
  // robot drives south on x=+off; human comes from the west on y=-off and
  // turns right into the robot's lane
  Polyline human_path({{-6.0, -off},
                       {-0.15, -off},
                       {off * 0.9, -0.40},
                       {off, -0.75},
                       {off, -6.0}});
  s.lanes = {{0, Polyline({{off, 6.0}, {off, -6.0}}), w},
             {1, std::move(human_path), w}};
  s.optimizer.restarts = 4;
  s.robot.state = {off, 0.60, -1.5707963267948966, 0.85};
  s.robot.goal = {0, 1.0};
  s.robot.weights = {3.0, 4.0, 0.05, 0.3, 4.0, 0.0};
  s.human.state = {-1.10, -off, 0.0, 0.85};
  s.human.goal = {1, 0.85};
  s.human.weights = {30.0, 60.0, 0.3, 2.0, 80.0, 0.0};
  s.courtesy.mode = CourtesyMode::MaintainBehavior;
  // both must pass through the robot's lane just south of the corner
  s.conflict_line = {{Vec2{0.0, -0.55}, Vec2{2.0 * off, -0.55}}};
  return s;
}

/// Two-way road with the robot's lane blocked; passing requires borrowing the
/// oncoming human's lane.
inline Scenario blocked_overtake() {
  Scenario s;
  s.name = "blocked_overtake";
  s.duration = 70;
  s.lane_width = 0.55;  // wider two-way rural road
  const double w = s.lane_width;
  const double off = 0.5 * w;
  // the overtake corridor borrows the opposing lane across the blockage zone
  Polyline corridor({{-6.0, -off},
                     {-0.9, -off},
                     {-0.5, 0.05},
                     {-0.35, off},
                     {0.35, off},
                     {0.5, 0.05},
                     {0.9, -off},
                     {8.0, -off}});
  s.lanes = {{0, Polyline({{-6.0, -off}, {8.0, -off}}), w},
             {1, Polyline({{8.0, off}, {-6.0, off}}), w},
             {2, std::move(corridor), w}};
  s.optimizer.restarts = 4;
  s.robot.state = {-1.0, -off, 0.0, 0.85};
  s.robot.goal = {2, 1.0};
  s.robot.weights = {3.0, 4.0, 0.05, 0.3, 8.0, 0.0};
  s.human.state = {1.6, off, 3.14159265358979323846, 0.85};
  s.human.goal = {1, 0.85};
  s.human.weights = {3.0, 6.0, 0.03, 0.2, 16.0, 0.0};
  // parked car blocking the robot's lane, plus a parked row on the shoulder
  ThirdPartySpec obstacle;
  obstacle.state = {0.0, -off, 0.0, 0.0};
  obstacle.policy = ThirdPartySpec::Policy::Scripted;
  s.others = {obstacle};
  for (double px : {0.0, -0.75, -1.5}) {
    ThirdPartySpec shoulder = obstacle;
    shoulder.state.x = px;
    shoulder.state.y = -off - 0.37;
    s.others.push_back(shoulder);
  }
  s.courtesy.mode = CourtesyMode::Collaborative;
  s.blockage_zone = {{-0.35, 0.35}};
  return s;
}

inline Scenario blocked_overtake_3agent() {
  Scenario s = blocked_overtake();
  s.name = "blocked_overtake_3agent";
  ThirdPartySpec follower;
  follower.state = {2.4, 0.5 * s.lane_width, 3.14159265358979323846, 0.85};
  follower.policy = ThirdPartySpec::Policy::Responsive;
  follower.goal = {1, 0.85};
  follower.weights = {3.0, 6.0, 0.03, 0.2, 16.0, 0.0};
  s.others.push_back(follower);
  return s;
}

}  // namespace builtin

inline std::vector<std::string> builtin_scenario_names() {
  return {"lane_change_slow", "lane_change_fast",  "left_turn",
          "right_turn_human", "blocked_overtake", "blocked_overtake_3agent"};
}

inline Scenario builtin_scenario(const std::string& name) {
  if (name == "lane_change_slow") return builtin::lane_change_slow();
  if (name == "lane_change_fast") return builtin::lane_change_fast();
  if (name == "left_turn") return builtin::left_turn();
  if (name == "right_turn_human") return builtin::right_turn_human();
  if (name == "blocked_overtake") return builtin::blocked_overtake();
  if (name == "blocked_overtake_3agent") return builtin::blocked_overtake_3agent();
  throw ConfigError("unknown scenario: " + name);
}

inline Scenario builtin_scenario(const std::string& name, const std::vector<std::string>& overrides) {
  nlohmann::json doc = builtin_scenario(name);
  for (const auto& kv : overrides) apply_override(doc, kv);
  Scenario s = doc.get<Scenario>();
  s.validate();
  return s;
}

}  // namespace courtesy
