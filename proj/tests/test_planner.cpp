#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "courtesy/planner.hpp"

using namespace courtesy;

namespace {

Scenario two_lane() {
  Scenario sc;
  sc.lanes = {{0, Polyline({{-10.0, 0.0}, {20.0, 0.0}}), 0.37},
              {1, Polyline({{-10.0, 0.37}, {20.0, 0.37}}), 0.37}};
  sc.robot = {{0.3, 0.37, 0.0, 0.85}, {0, 1.0}, {3.0, 4.0, 0.05, 0.3, 4.0, 0.0}};
  sc.human = {{0.0, 0.0, 0.0, 0.85}, {0, 0.85}, {3.0, 6.0, 0.03, 0.2, 8.0, 0.0}};
  sc.optimizer.seed = 7;
  return sc;
}

std::vector<Control> frozen_zero(int n) { return std::vector<Control>(n); }

}  // namespace

TEST_CASE("no interaction makes every alternative world agree", "[planner]") {
  Scenario sc = two_lane();
  sc.human.state = {0.0, 0.0, 0.0, 0.85};
  JointState x0{{200.0, 0.37, 0.0, 0.85}, sc.human.state, {}};
  EvalContext ctx;
  const auto frozen = frozen_zero(sc.horizon);
  const double expected = sc.human.weights.goal * sc.horizon;  // only f_g = 1 persists
  for (CourtesyMode mode :
       {CourtesyMode::NotThere, CourtesyMode::Collaborative, CourtesyMode::MaintainBehavior}) {
    const double alt = alternative_cost(sc, ctx, x0, sc.human.weights, mode, frozen, sc.optimizer);
    CHECK(alt == Catch::Approx(expected).margin(1e-3));
  }
}

TEST_CASE("alternative worlds are ordered by generosity", "[planner]") {
  Scenario sc = two_lane();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  EvalContext ctx;
  for (int trial = 0; trial < 5; ++trial) {
    JointState x0{{0.3 + u(rng), 0.37 + u(rng) * 0.3, u(rng) * 0.5, 0.8},
                  {u(rng), u(rng) * 0.3, u(rng) * 0.5, 0.8},
                  {}};
    std::vector<Control> frozen(sc.horizon, Control{u(rng), u(rng)});
    const double not_there = alternative_cost(sc, ctx, x0, sc.human.weights,
                                              CourtesyMode::NotThere, frozen, sc.optimizer);
    const double collab = alternative_cost(sc, ctx, x0, sc.human.weights,
                                           CourtesyMode::Collaborative, frozen, sc.optimizer);
    const double maintain = alternative_cost(sc, ctx, x0, sc.human.weights,
                                             CourtesyMode::MaintainBehavior, frozen, sc.optimizer);
    CHECK(not_there <= collab + 1e-3);
    CHECK(collab <= maintain + 1e-3);
  }
}

TEST_CASE("the hinge clips and never rewards", "[planner]") {
  Scenario sc = two_lane();
  JointState x0{sc.robot.state, sc.human.state, {}};
  EvalContext ctx;
  const auto ur = frozen_zero(sc.horizon);
  const auto uh = frozen_zero(sc.horizon);
  const double ch = agent_cost(sc, ctx, x0, ur, uh, sc.human.weights, Perspective::Human);
  CHECK(courtesy_term(sc, ctx, x0, ur, uh, sc.human.weights, ch) == 0.0);
  CHECK(courtesy_term(sc, ctx, x0, ur, uh, sc.human.weights, ch + 5.0) == 0.0);
  CHECK(courtesy_term(sc, ctx, x0, ur, uh, sc.human.weights, ch - 2.0) == Catch::Approx(2.0));
}

TEST_CASE("courtesy term is nonnegative under fuzzing", "[planner]") {
  Scenario sc = two_lane();
  EvalContext ctx;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> pos(-0.5, 0.7), ang(-0.6, 0.6), vel(0.0, 1.0),
      act(-1.2, 0.7), st(-0.8, 0.8), alt(-50.0, 200.0);
  for (int i = 0; i < 2000; ++i) {
    JointState x0{{pos(rng), pos(rng), ang(rng), vel(rng)},
                  {pos(rng), pos(rng), ang(rng), vel(rng)},
                  {}};
    std::vector<Control> ur(3), uh(3);
    for (int k = 0; k < 3; ++k) {
      ur[k] = {act(rng), st(rng)};
      uh[k] = {act(rng), st(rng)};
    }
    CHECK(courtesy_term(sc, ctx, x0, ur, uh, sc.human.weights, alt(rng)) >= 0.0);
  }
}

TEST_CASE("zero courtesy weight reproduces the selfish planner exactly", "[planner]") {
  Scenario sc = two_lane();
  JointState x0{sc.robot.state, sc.human.state, {}};
  EvalContext ctx;
  const PlannerResult courteous = plan_courteous(sc, ctx, x0, sc.robot.weights, sc.human.weights,
                                                 0.0, sc.courtesy.mode, {}, sc.optimizer);
  const PlannerResult selfish =
      plan_selfish(sc, ctx, x0, sc.robot.weights, sc.human.weights, {}, sc.optimizer);
  REQUIRE(courteous.robot_controls.size() == selfish.robot_controls.size());
  for (std::size_t k = 0; k < courteous.robot_controls.size(); ++k) {
    CHECK(courteous.robot_controls[k].accel == selfish.robot_controls[k].accel);
    CHECK(courteous.robot_controls[k].steer == selfish.robot_controls[k].steer);
    CHECK(courteous.human_prediction[k].accel == selfish.human_prediction[k].accel);
    CHECK(courteous.human_prediction[k].steer == selfish.human_prediction[k].steer);
  }
  CHECK(courteous.selfish_cost == selfish.selfish_cost);
  CHECK(courteous.compound_cost == selfish.compound_cost);
  CHECK(courteous.iterations == selfish.iterations);
  CHECK(courteous.converged == selfish.converged);
  CHECK(courteous.alt_cost == selfish.alt_cost);
  CHECK(courteous.courtesy_value == selfish.courtesy_value);
}

TEST_CASE("courtesy value is recomputable from the result", "[planner]") {
  Scenario sc = two_lane();
  JointState x0{sc.robot.state, sc.human.state, {}};
  EvalContext ctx;
  const PlannerResult r = plan_courteous(sc, ctx, x0, sc.robot.weights, sc.human.weights, 50.0,
                                         CourtesyMode::NotThere, {}, sc.optimizer);
  CHECK(r.courtesy_value >= 0.0);
  const double recomputed = courtesy_term(sc, ctx, x0, r.robot_controls, r.human_prediction,
                                          sc.human.weights, r.alt_cost);
  CHECK(r.courtesy_value == Catch::Approx(recomputed));
  CHECK(r.compound_cost <= r.selfish_cost + 50.0 * r.courtesy_value + 1e-9);
}

TEST_CASE("far-away robot pays no courtesy", "[planner]") {
  Scenario sc = two_lane();
  JointState x0{{200.0, 0.37, 0.0, 0.85}, sc.human.state, {}};
  EvalContext ctx;
  const auto ur = frozen_zero(sc.horizon);
  const double compound = compound_cost(sc, ctx, x0, ur, sc.robot.weights, sc.human.weights, 1e4,
                                        CourtesyMode::NotThere, ur, sc.optimizer);
  OptimizerSettings os = sc.optimizer;
  os.seed = derive_seed(sc.optimizer.seed, 21);
  const auto uh = human_best_response(sc, ctx, x0, ur, sc.human.weights, os);
  const double selfish = agent_cost(sc, ctx, x0, ur, uh, sc.robot.weights, Perspective::Robot);
  CHECK(compound == Catch::Approx(selfish).margin(1e-6));
}

TEST_CASE("aggressive cut-ins cost more at a large courtesy weight", "[planner]") {
  Scenario sc = two_lane();
  JointState x0{{0.4, 0.37, 0.0, 0.9}, {0.0, 0.0, 0.0, 0.9}, {}};
  EvalContext ctx;
  std::vector<Control> aggressive(sc.horizon), smooth(sc.horizon);
  for (int k = 0; k < 4; ++k) aggressive[k] = {0.5, -0.45};
  for (int k = 4; k < 7; ++k) aggressive[k] = {0.0, 0.45};
  for (int k = 0; k < 10; ++k) smooth[k] = {0.2, 0.0};
  const double lambda = 9.89e4;
  const auto frozen = frozen_zero(sc.horizon);
  const double c_aggr = compound_cost(sc, ctx, x0, aggressive, sc.robot.weights, sc.human.weights,
                                      lambda, CourtesyMode::NotThere, frozen, sc.optimizer);
  const double c_smooth = compound_cost(sc, ctx, x0, smooth, sc.robot.weights, sc.human.weights,
                                        lambda, CourtesyMode::NotThere, frozen, sc.optimizer);
  CHECK(c_aggr > c_smooth);
}

TEST_CASE("alternating iterates never worsen the returned compound cost", "[planner]") {
  Scenario sc = two_lane();
  JointState x0{sc.robot.state, sc.human.state, {}};
  EvalContext ctx;
  for (double lambda : {0.0, 10.0, 300.0}) {
    const PlannerResult r = plan_courteous(sc, ctx, x0, sc.robot.weights, sc.human.weights, lambda,
                                           CourtesyMode::NotThere, {}, sc.optimizer);
    // the returned best pair can always be re-evaluated to the same value
    const double selfish =
        agent_cost(sc, ctx, x0, r.robot_controls, r.human_prediction, sc.robot.weights,
                   Perspective::Robot);
    const double court = courtesy_term(sc, ctx, x0, r.robot_controls, r.human_prediction,
                                       sc.human.weights, r.alt_cost);
    CHECK(r.compound_cost == Catch::Approx(selfish + lambda * court));
    CHECK(r.iterations >= 1);
  }
}
