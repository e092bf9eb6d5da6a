// Copyright 2026 The TensiForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "oracle.hpp"
#include "tensiforge/actuation.hpp"
#include "tensiforge/physics.hpp"

namespace tensiforge::physics {
namespace {

Particle particle(const Vec3& p, double inverse_mass = 1.0) {
  Particle out;
  out.position = out.previous_position = p;
  out.inverse_mass = inverse_mass;
  return out;
}

Constraint distance(int i, int j, double rest, double compliance = 0.0, bool tension_only = false,
                    ConstraintClass cls = ConstraintClass::kRod) {
  return {DistanceConstraint{i, j, rest, compliance, tension_only, 0.0}, cls, -1};
}

SolverConfig no_gravity() {
  SolverConfig cfg;
  cfg.gravity = Vec3::Zero();
  return cfg;
}

double max_coordinate_gap(const SimState& sim, const std::vector<Vec3>& other) {
  double worst = 0.0;
  for (std::size_t i = 0; i < sim.particles.size(); ++i) {
    worst = std::max(worst, (sim.particles[i].position - other[i]).cwiseAbs().maxCoeff());
  }
  return worst;
}

double lateral_offset(const EquilibriumReport& r) { return std::hypot(r.tip_position.x(), r.tip_position.y()); }

TEST(Project, RigidDistanceSplitsEvenly) {
  SimState sim;
  sim.particles = {particle({0, 0, 0}), particle({1.2, 0, 0})};
  sim.constraints = {distance(0, 1, 1.0)};
  project_constraint(sim, 0, 1e-3);
  EXPECT_NEAR(sim.particles[0].position.x(), 0.1, 1e-15);
  EXPECT_NEAR(sim.particles[1].position.x(), 1.1, 1e-15);
}

TEST(Project, SlackCableDoesNothing) {
  SimState sim;
  sim.particles = {particle({0, 0, 0}), particle({0.8, 0, 0})};
  sim.constraints = {distance(0, 1, 1.0, 0.0, true, ConstraintClass::kCable)};
  project_constraint(sim, 0, 1e-3);
  EXPECT_EQ(sim.particles[0].position, Vec3(0, 0, 0));
  EXPECT_EQ(sim.particles[1].position, Vec3(0.8, 0, 0));
}

TEST(Project, AnchoredEndTakesNoCorrection) {
  SimState sim;
  sim.particles = {particle({0, 0, 0}, 0.0), particle({1.2, 0, 0})};
  sim.constraints = {distance(0, 1, 1.0)};
  project_constraint(sim, 0, 1e-3);
  EXPECT_EQ(sim.particles[0].position, Vec3(0, 0, 0));
  EXPECT_NEAR(sim.particles[1].position.x(), 1.0, 1e-15);
}

TEST(Project, CompliantDistanceMovesPartway) {
  SimState sim;
  sim.particles = {particle({0, 0, 0}, 0.0), particle({1.2, 0, 0})};
  const double dt = 1e-2;
  const double compliance = 1e-4;
  sim.constraints = {distance(0, 1, 1.0, compliance)};
  project_constraint(sim, 0, dt);
  const double alpha = compliance / (dt * dt);
  // One XPBD update: dlambda = -C / (w + alpha), dx = w * dlambda.
  EXPECT_NEAR(sim.particles[1].position.x(), 1.2 - 0.2 / (1.0 + alpha), 1e-14);
}

TEST(Project, CoplanarReducesPlaneDistances) {
  // Regular tetrahedron: every member is off the best-fit plane.
  const double s = 1.0 / std::sqrt(2.0);
  SimState sim;
  sim.particles = {particle({1, 0, -s}), particle({-1, 0, -s}), particle({0, 1, s}), particle({0, -1, s})};
  CoplanarConstraint c;
  c.members = {0, 1, 2, 3};
  c.lambda.assign(4, 0.0);
  sim.constraints.push_back({c, ConstraintClass::kPlate, 0});

  const auto worst_distance = [&] {
    std::vector<Vec3> pts;
    for (const auto& p : sim.particles) pts.push_back(p.position);
    const Plane plane = fit_plane(pts);
    double worst = 0.0;
    for (const auto& p : pts) worst = std::max(worst, std::abs(plane.normal.dot(p - plane.centroid)));
    return worst;
  };
  const double before = worst_distance();
  project_constraint(sim, 0, 1e-3);
  EXPECT_LT(worst_distance(), before);
}

TEST(Project, BendStraightensTriple) {
  SimState sim;
  sim.particles = {particle({0, 0, 0}), particle({0.5, 0.1, 0}), particle({1, 0, 0})};
  sim.constraints = {{BendConstraint{0, 1, 2, 0.0, 0.0}, ConstraintClass::kBend, 0}};
  project_constraint(sim, 0, 1e-3);
  const Vec3 b = sim.particles[0].position + sim.particles[2].position - 2.0 * sim.particles[1].position;
  EXPECT_LT(b.norm(), 1e-12);
}

TEST(Project, AnchorConstraintSnaps) {
  SimState sim;
  sim.particles = {particle({0.3, 0.2, 0.1})};
  sim.constraints = {{AnchorConstraint{0, Vec3(1, 2, 3), 0.0, 0.0}, ConstraintClass::kAnchor, -1}};
  project_constraint(sim, 0, 1e-3);
  EXPECT_LT((sim.particles[0].position - Vec3(1, 2, 3)).norm(), 1e-14);
}

TEST(BuildSim, DefaultTowerCounts) {
  const auto scene = structure::build_scene({});
  const auto sim = build_sim(scene);
  EXPECT_EQ(sim.particles.size(), 21u);
  int cables = 0, tendons = 0, bends = 0, plate_coplanar = 0;
  for (const auto& c : sim.constraints) {
    if (const auto* d = std::get_if<DistanceConstraint>(&c.kind); d && d->tension_only) {
      cables += c.cls == ConstraintClass::kCable;
      tendons += c.cls == ConstraintClass::kTendon;
    }
    bends += c.cls == ConstraintClass::kBend;
    plate_coplanar += c.cls == ConstraintClass::kPlate && std::holds_alternative<CoplanarConstraint>(c.kind);
  }
  EXPECT_EQ(cables, 24);
  EXPECT_EQ(tendons, 6);
  EXPECT_EQ(bends, 0);
  EXPECT_EQ(plate_coplanar, 0);  // triangular plates are always planar
  ASSERT_EQ(sim.plates.size(), 2u);
}

TEST(BuildSim, BaseIsAnchored) {
  const auto scene = structure::build_scene({});
  const auto sim = build_sim(scene);
  for (std::size_t i = 0; i < sim.particles.size(); ++i) {
    const bool on_ground = scene.positions[i].z() == 0.0;
    EXPECT_EQ(sim.particles[i].inverse_mass == 0.0, on_ground) << i;
  }
}

TEST(BuildSim, InteriorNodesAddBends) {
  structure::StructureSpec spec;
  spec.rod_segments = 3;
  const auto sim = build_sim(structure::build_scene(spec));
  int bends = 0;
  for (const auto& c : sim.constraints) bends += c.cls == ConstraintClass::kBend;
  EXPECT_EQ(bends, 6 * 2);
}

TEST(BuildSim, RejectsMissingPositions) {
  auto scene = structure::build_scene({});
  scene.positions.pop_back();
  EXPECT_THROW(build_sim(scene), InvalidScene);
}

TEST(Step, ZeroGravityAtRestIsFixedPoint) {
  structure::StructureSpec spec;
  spec.cable_prestress = 0.0;
  auto sim = build_sim(structure::build_scene(spec));
  const auto before = sim.particles;
  for (int k = 0; k < 10; ++k) step(sim, no_gravity());
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_LT((sim.particles[i].position - before[i].position).norm(), 1e-15) << i;
  }
}

TEST(Step, BallisticVelocityChange) {
  SimState sim;
  sim.particles = {particle({0, 0, 0})};
  SolverConfig cfg;
  cfg.velocity_damping = 0.0;
  step(sim, cfg);
  const Vec3 expected = cfg.gravity * cfg.dt;
  EXPECT_LE((sim.particles[0].velocity - expected).norm(), 1e-12 * expected.norm());
  EXPECT_DOUBLE_EQ(sim.time, cfg.dt);
}

TEST(Step, AnchoredParticleNeverMoves) {
  SimState sim;
  sim.particles = {particle({0.1, 0.2, 0.3}, 0.0)};
  for (int k = 0; k < 100; ++k) step(sim, {});
  EXPECT_EQ(sim.particles[0].position, Vec3(0.1, 0.2, 0.3));
}

TEST(Step, BlowupRestoresState) {
  SimState sim;
  sim.particles = {particle({0, 0, 0})};
  sim.particles[0].velocity = Vec3(std::numeric_limits<double>::infinity(), 0, 0);
  const auto saved = sim.particles[0];
  EXPECT_THROW(step(sim, {}), NumericalBlowup);
  EXPECT_EQ(sim.particles[0].position, saved.position);
  EXPECT_EQ(sim.time, 0.0);
}

TEST(Equilibrium, HangingCableExtension) {
  SimState sim;
  sim.particles = {particle({0, 0, 0}, 0.0), particle({0, 0, -0.5}, 1.0 / 0.1)};
  sim.constraints = {distance(0, 1, 0.5, 1e-3, true, ConstraintClass::kCable)};
  const auto report = solve_to_equilibrium(sim, {});
  ASSERT_TRUE(report.converged);
  const double extension = -sim.particles[1].position.z() - 0.5;
  const double expected = 0.1 * 9.81 * 1e-3;
  EXPECT_NEAR(extension, expected, 0.01 * expected);
}

TEST(Equilibrium, VacuousThresholdsStopAfterHoldWindow) {
  auto sim = build_sim(structure::build_scene({}));
  SolverConfig cfg;
  cfg.speed_tolerance = std::numeric_limits<double>::infinity();
  cfg.residual_tolerance = std::numeric_limits<double>::infinity();
  const auto report = solve_to_equilibrium(sim, cfg);
  EXPECT_TRUE(report.converged);
  EXPECT_EQ(report.steps_taken, cfg.hold_steps);
}

TEST(Equilibrium, StepBudgetExhausted) {
  auto sim = build_sim(structure::build_scene({}));
  SolverConfig cfg;
  cfg.max_steps = 3;
  const auto report = solve_to_equilibrium(sim, cfg);
  EXPECT_FALSE(report.converged);
  EXPECT_EQ(report.steps_taken, 3);
}

TEST(Equilibrium, DefaultTowerConvergesUpright) {
  const auto scene = structure::build_scene({});
  auto sim = build_sim(scene);
  const auto report = solve_to_equilibrium(sim, {});
  ASSERT_TRUE(report.converged);
  EXPECT_LT(report.max_speed, 1e-5);
  EXPECT_LT(max_residual(report.residuals), 1e-6);
  EXPECT_EQ(report.residuals, constraint_residuals(sim));
  EXPECT_LT(lateral_offset(report), 1e-3 * report.tip_position.z());
  EXPECT_GT(report.tip_position.z(), 0.0);
}

TEST(Equilibrium, MatchesEnergyMinimum) {
  const auto scene = structure::build_scene({});
  auto sim = build_sim(scene);
  ASSERT_TRUE(solve_to_equilibrium(sim, {}).converged);
  const auto oracle = testing::minimize_energy(scene);
  ASSERT_TRUE(oracle.converged) << oracle.gradient_norm;
  EXPECT_LT(max_coordinate_gap(sim, oracle.positions), 1e-4);
}

TEST(Equilibrium, SymmetricContractionLowersTip) {
  const auto scene = structure::build_scene({});
  actuation::Robot robot(scene);
  const auto rest = robot.home();
  ASSERT_TRUE(rest.converged);
  robot.set_factors({0.9, 0.9, 0.9});
  const auto report = robot.settle();
  ASSERT_TRUE(report.converged);
  EXPECT_LT(report.tip_position.z(), rest.tip_position.z());
  EXPECT_LT(lateral_offset(report), 1e-3 * report.tip_position.z());

  auto contracted = robot.snapshot();
  contracted.positions = scene.positions;
  const auto oracle = testing::minimize_energy(contracted);
  ASSERT_TRUE(oracle.converged) << oracle.gradient_norm;
  EXPECT_LT(max_coordinate_gap(robot.sim(), oracle.positions), 1e-4);
}

TEST(Equilibrium, PlateMembersStayOnTheirPlane) {
  structure::StructureSpec spec;
  spec.n = 4;
  spec.compliance.saddle = 1e-3;
  auto sim = build_sim(structure::build_scene(spec));
  SolverConfig no_g = no_gravity();
  const auto report = solve_to_equilibrium(sim, no_g);
  ASSERT_TRUE(report.converged);
  for (const auto& plate : sim.plates) {
    std::vector<Vec3> pts;
    for (int i : plate.members) pts.push_back(sim.particles[i].position);
    const Plane plane = fit_plane(pts);
    for (const auto& p : pts) EXPECT_LT(std::abs(plane.normal.dot(p - plane.centroid)), 1e-6);
  }
}

TEST(Equilibrium, Deterministic) {
  const auto scene = structure::build_scene({});
  auto a = build_sim(scene);
  auto b = build_sim(scene);
  const auto ra = solve_to_equilibrium(a, {});
  const auto rb = solve_to_equilibrium(b, {});
  EXPECT_EQ(ra.steps_taken, rb.steps_taken);
  EXPECT_EQ(ra.residuals, rb.residuals);
  for (std::size_t i = 0; i < a.particles.size(); ++i) EXPECT_EQ(a.particles[i].position, b.particles[i].position);
}

TEST(Residuals, ZeroAtRest) {
  structure::StructureSpec spec;
  spec.cable_prestress = 0.0;
  const auto sim = build_sim(structure::build_scene(spec));
  for (double r : constraint_residuals(sim)) EXPECT_LT(r, 1e-15);
}

TEST(Residuals, StretchedCableReportsItsViolation) {
  SimState sim;
  sim.particles = {particle({0, 0, 0}), particle({1.001, 0, 0})};
  sim.constraints = {distance(0, 1, 1.0, 1e-3, true, ConstraintClass::kCable)};
  const auto r = constraint_residuals(sim);
  EXPECT_NEAR(r[static_cast<std::size_t>(ConstraintClass::kCable)], 1e-3, 1e-12);
  sim.particles[1].position.x() = 0.5;
  EXPECT_EQ(constraint_residuals(sim)[static_cast<std::size_t>(ConstraintClass::kCable)], 0.0);
}

TEST(TensionOnly, SlackCablesNeverCorrectUnderRandomActuation) {
  actuation::Robot robot(structure::build_scene({}));
  ASSERT_TRUE(robot.home().converged);
  long slack_events = 0;
  long violations = 0;
  robot.sim().on_projection = [&](const ProjectionEvent& e) {
    if (!e.tension_only || e.violation > 0.0) return;
    ++slack_events;
    if (e.correction != 0.0) ++violations;
  };
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> factor(0.8, 1.15);
  for (int k = 0; k < 2000; ++k) {
    if (k % 250 == 0) robot.set_factors({factor(rng), factor(rng), factor(rng)});
    step(robot.sim(), robot.solver());
  }
  EXPECT_GT(slack_events, 0);
  EXPECT_EQ(violations, 0);
}

TEST(FitPlane, CollinearPointsHaveNoSpread) {
  const auto plane = fit_plane({Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2)});
  EXPECT_LT(plane.spread_ratio, 1e-12);
}

TEST(PlatePose, RotationAboutY) {
  SimState sim;
  const double theta = 0.2;
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(theta, Vec3::UnitY()).toRotationMatrix();
  for (int k = 0; k < 3; ++k) {
    const double a = 2.0 * M_PI * k / 3.0;
    sim.particles.push_back(particle(rot * Vec3(std::cos(a), std::sin(a), 0) + Vec3(5, -3, 2)));
  }
  const PlateGroup plate{0, {0, 1, 2}};
  const Pose pose = plate_pose(sim, plate);
  EXPECT_NEAR(pose.alpha, theta, 1e-12);
  EXPECT_NEAR(pose.beta, 0.0, 1e-12);
}

TEST(PlatePose, CollinearPlateIsDegenerate) {
  SimState sim;
  sim.particles = {particle({0, 0, 0}), particle({1, 0, 0}), particle({2, 0, 0})};
  EXPECT_THROW(plate_pose(sim, PlateGroup{0, {0, 1, 2}}), DegeneratePlate);
}

}  // namespace
}  // namespace tensiforge::physics
