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

#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "tensiforge/structure.hpp"

namespace tensiforge::physics {

struct Particle {
  Vec3 position = Vec3::Zero();
  Vec3 previous_position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double inverse_mass = 0.0;  // 0 = anchored
};

// Residual reporting groups.
enum class ConstraintClass : int { kRod = 0, kBend, kPlate, kCable, kTendon, kAnchor };
inline constexpr std::size_t kConstraintClassCount = 6;
std::string_view to_string(ConstraintClass cls);

struct DistanceConstraint {
  int i = 0;
  int j = 0;
  double rest = 0.0;
  double compliance = 0.0;
  bool tension_only = false;
  double lambda = 0.0;
};

// C = |x_a + x_c - 2 x_b|; zero for a straight, evenly spaced triple.
struct BendConstraint {
  int a = 0;
  int b = 0;
  int c = 0;
  double compliance = 0.0;
  double lambda = 0.0;
};

// Members are pulled onto their best-fit plane, refit at every projection.
struct CoplanarConstraint {
  std::vector<int> members;
  double compliance = 0.0;
  std::vector<double> lambda;  // one per member
};

struct AnchorConstraint {
  int i = 0;
  Vec3 target = Vec3::Zero();
  double compliance = 0.0;
  double lambda = 0.0;
};

using ConstraintKind =
    std::variant<DistanceConstraint, BendConstraint, CoplanarConstraint, AnchorConstraint>;

struct Constraint {
  ConstraintKind kind;
  ConstraintClass cls = ConstraintClass::kRod;
  int tag = -1;  // tendon id for tendon chain segments, topology cable index for cables
};

// Reported once per constraint projection when SimState::on_projection is set.
struct ProjectionEvent {
  std::size_t constraint = 0;
  ConstraintClass cls = ConstraintClass::kRod;
  bool tension_only = false;
  double violation = 0.0;   // C before the projection
  double correction = 0.0;  // largest particle displacement applied
};

struct PlateGroup {
  int level = 0;
  std::vector<int> members;
};

struct SimState {
  std::vector<Particle> particles;
  std::vector<Constraint> constraints;
  std::vector<PlateGroup> plates;  // rigid plates, bottom to top
  double time = 0.0;
  double substep_dt = 0.0;  // dt of the most recent substep, 0 before stepping
  std::function<void(const ProjectionEvent&)> on_projection;
};

struct SolverConfig {
  double dt = 1e-3;
  int substeps = 4;
  int iterations = 40;
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  double velocity_damping = 0.02;
  double speed_tolerance = 1e-5;       // m/s
  double residual_tolerance = 1e-6;    // m
  int hold_steps = 50;
  int max_steps = 20000;

  void validate() const;
};

using Residuals = std::array<double, kConstraintClassCount>;

inline double max_residual(const Residuals& r) {
  double out = 0.0;
  for (double v : r) out = std::max(out, v);
  return out;
}

// Plate tilt: alpha = atan2(n_x, n_z), beta = atan2(n_y, n_z) for the upward normal.
struct Pose {
  double alpha = 0.0;
  double beta = 0.0;
};

struct EquilibriumReport {
  bool converged = false;
  int steps_taken = 0;
  double max_speed = 0.0;
  Residuals residuals{};
  Pose tip_pose;
  Vec3 tip_position = Vec3::Zero();  // centroid of the top plate
};

// Throws InvalidScene.
SimState build_sim(const structure::Scene& scene);

// Projects constraint `index` once with substep length `dt`.
void project_constraint(SimState& state, std::size_t index, double dt);

// Throws NumericalBlowup and leaves the state as it was before the call.
void step(SimState& state, const SolverConfig& config);

EquilibriumReport solve_to_equilibrium(SimState& state, const SolverConfig& config);

// max |C + compliance / dt^2 * lambda| per class. Slack tension-only constraints give 0.
Residuals constraint_residuals(const SimState& state);

double max_speed(const SimState& state);

// Best-fit plane through points: centroid and unit normal (smallest principal axis).
struct Plane {
  Vec3 centroid = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double spread_ratio = 0.0;  // middle / largest eigenvalue; ~0 for collinear points
};
Plane fit_plane(const std::vector<Vec3>& points);

// Throws DegeneratePlate for collinear members.
Pose plate_pose(const SimState& state, const PlateGroup& plate);
Vec3 plate_centroid(const SimState& state, const PlateGroup& plate);

// Copies particle positions back into the scene.
void write_positions(const SimState& state, structure::Scene& scene);

}  // namespace tensiforge::physics
