#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "courtesy/scenario.hpp"

namespace courtesy {

/// One recorded interaction. The demonstrated driver occupies the *human*
/// slot of the embedded scene and joint state (likelihoods and Hessians are
/// taken over its controls); the interacting car it is courteous toward sits
/// in the robot slot and is replayed as fixed context. `scene.robot.weights`
/// are the reference weights used to evaluate the courtesy feature.
struct Demonstration {
  Scenario scene;
  JointState x0;
  std::vector<Control> human_controls;  // demonstrated driver, length L
  std::vector<Control> robot_controls;  // interacting car, length L
  std::vector<std::vector<AgentState>> surrounding;  // scripted traffic, length L+1 each
  double dt = 0.1;

  int length() const { return static_cast<int>(human_controls.size()); }
};

/// Mean Euclidean Distance between two equal-length position sequences.
inline double med(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("med: length mismatch");
  if (a.empty()) throw std::invalid_argument("med: empty sequences");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += distance(a[i], b[i]);
  return sum / static_cast<double>(a.size());
}

inline void to_json(nlohmann::json& j, const JointState& x) {
  j = {{"robot", x.robot}, {"human", x.human}, {"others", x.others}};
}
inline void from_json(const nlohmann::json& j, JointState& x) {
  x.robot = j.at("robot").get<AgentState>();
  x.human = j.at("human").get<AgentState>();
  x.others = j.value("others", std::vector<AgentState>{});
}

inline void to_json(nlohmann::json& j, const Demonstration& d) {
  j = {{"scene", d.scene},
       {"x0", d.x0},
       {"human_controls", d.human_controls},
       {"robot_controls", d.robot_controls},
       {"surrounding", d.surrounding},
       {"dt", d.dt}};
}
inline void from_json(const nlohmann::json& j, Demonstration& d) {
  d.scene = j.at("scene").get<Scenario>();
  d.x0 = j.at("x0").get<JointState>();
  d.human_controls = j.at("human_controls").get<std::vector<Control>>();
  d.robot_controls = j.at("robot_controls").get<std::vector<Control>>();
  d.surrounding = j.value("surrounding", std::vector<std::vector<AgentState>>{});
  d.dt = j.value("dt", 0.1);
  if (d.human_controls.size() != d.robot_controls.size())
    throw ConfigError("demonstration control sequences differ in length");
  if (d.human_controls.size() < 2) throw ConfigError("demonstration shorter than two steps");
}

}  // namespace courtesy
