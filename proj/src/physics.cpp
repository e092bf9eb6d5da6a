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

#include "tensiforge/physics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "tensiforge/errors.hpp"

namespace tensiforge::physics {
namespace {

// Below this length an edge has no usable direction.
constexpr double kTinyLength = 1e-12;

double scaled_compliance(double compliance, double dt) {
  return dt > 0.0 ? compliance / (dt * dt) : 0.0;
}

bool all_finite(const std::vector<Particle>& particles) {
  return std::all_of(particles.begin(), particles.end(), [](const Particle& p) {
    return p.position.allFinite() && p.velocity.allFinite();
  });
}

struct Projector {
  SimState& state;
  double dt;
  ProjectionEvent& event;

  void displace(int index, const Vec3& delta) {
    state.particles[index].position += delta;
    event.correction = std::max(event.correction, delta.norm());
  }

  void operator()(DistanceConstraint& c) {
    const Vec3 d = state.particles[c.i].position - state.particles[c.j].position;
    const double len = d.norm();
    if (len < kTinyLength) return;
    const double violation = len - c.rest;
    event.violation = violation;
    event.tension_only = c.tension_only;
    if (c.tension_only && violation <= 0.0) return;

    const double wi = state.particles[c.i].inverse_mass;
    const double wj = state.particles[c.j].inverse_mass;
    const double alpha = scaled_compliance(c.compliance, dt);
    const double denom = wi + wj + alpha;
    if (denom <= 0.0) return;
    double dlambda = (-violation - alpha * c.lambda) / denom;
    if (c.tension_only) {
      // Accumulated multiplier may only ever pull.
      dlambda = std::min(c.lambda + dlambda, 0.0) - c.lambda;
    }
    c.lambda += dlambda;
    const Vec3 n = d / len;
    if (wi > 0.0) displace(c.i, wi * dlambda * n);
    if (wj > 0.0) displace(c.j, -wj * dlambda * n);
  }

  void operator()(BendConstraint& c) {
    auto& pa = state.particles[c.a];
    auto& pb = state.particles[c.b];
    auto& pc = state.particles[c.c];
    const Vec3 b = pa.position + pc.position - 2.0 * pb.position;
    const double violation = b.norm();
    event.violation = violation;
    if (violation < kTinyLength) return;
    const Vec3 n = b / violation;
    const double alpha = scaled_compliance(c.compliance, dt);
    const double denom = pa.inverse_mass + pc.inverse_mass + 4.0 * pb.inverse_mass + alpha;
    if (denom <= 0.0) return;
    const double dlambda = (-violation - alpha * c.lambda) / denom;
    c.lambda += dlambda;
    if (pa.inverse_mass > 0.0) displace(c.a, pa.inverse_mass * dlambda * n);
    if (pc.inverse_mass > 0.0) displace(c.c, pc.inverse_mass * dlambda * n);
    if (pb.inverse_mass > 0.0) displace(c.b, -2.0 * pb.inverse_mass * dlambda * n);
  }

  void operator()(CoplanarConstraint& c) {
    std::vector<Vec3> points;
    points.reserve(c.members.size());
    for (int idx : c.members) points.push_back(state.particles[idx].position);
    const Plane plane = fit_plane(points);
    if (plane.spread_ratio < 1e-12) return;
    const double alpha = scaled_compliance(c.compliance, dt);
    for (std::size_t k = 0; k < c.members.size(); ++k) {
      const int idx = c.members[k];
      const double w = state.particles[idx].inverse_mass;
      const double dist = plane.normal.dot(points[k] - plane.centroid);
      if (std::abs(dist) > std::abs(event.violation)) event.violation = dist;
      const double denom = w + alpha;
      if (denom <= 0.0) continue;
      const double dlambda = (-dist - alpha * c.lambda[k]) / denom;
      c.lambda[k] += dlambda;
      if (w > 0.0) displace(idx, w * dlambda * plane.normal);
    }
  }

  void operator()(AnchorConstraint& c) {
    auto& p = state.particles[c.i];
    const Vec3 d = p.position - c.target;
    const double violation = d.norm();
    event.violation = violation;
    if (violation < kTinyLength) return;
    const double alpha = scaled_compliance(c.compliance, dt);
    const double denom = p.inverse_mass + alpha;
    if (denom <= 0.0 || p.inverse_mass <= 0.0) return;
    const double dlambda = (-violation - alpha * c.lambda) / denom;
    c.lambda += dlambda;
    displace(c.i, p.inverse_mass * dlambda * (d / violation));
  }
};

struct LambdaReset {
  void operator()(DistanceConstraint& c) const { c.lambda = 0.0; }
  void operator()(BendConstraint& c) const { c.lambda = 0.0; }
  void operator()(CoplanarConstraint& c) const { std::fill(c.lambda.begin(), c.lambda.end(), 0.0); }
  void operator()(AnchorConstraint& c) const { c.lambda = 0.0; }
};

struct ResidualOf {
  const SimState& state;
  double dt;

  double operator()(const DistanceConstraint& c) const {
    const double len = (state.particles[c.i].position - state.particles[c.j].position).norm();
    const double violation = len - c.rest;
    if (c.tension_only && violation <= 0.0) return 0.0;
    return std::abs(violation + scaled_compliance(c.compliance, dt) * c.lambda);
  }
  double operator()(const BendConstraint& c) const {
    const Vec3 b = state.particles[c.a].position + state.particles[c.c].position -
                   2.0 * state.particles[c.b].position;
    return std::abs(b.norm() + scaled_compliance(c.compliance, dt) * c.lambda);
  }
  double operator()(const CoplanarConstraint& c) const {
    std::vector<Vec3> points;
    for (int idx : c.members) points.push_back(state.particles[idx].position);
    const Plane plane = fit_plane(points);
    const double alpha = scaled_compliance(c.compliance, dt);
    double worst = 0.0;
    for (std::size_t k = 0; k < points.size(); ++k) {
      const double dist = plane.normal.dot(points[k] - plane.centroid);
      worst = std::max(worst, std::abs(dist + alpha * c.lambda[k]));
    }
    return worst;
  }
  double operator()(const AnchorConstraint& c) const {
    const double violation = (state.particles[c.i].position - c.target).norm();
    return std::abs(violation + scaled_compliance(c.compliance, dt) * c.lambda);
  }
};

void add_distance(SimState& state, int i, int j, double rest, double compliance, bool tension_only,
                  ConstraintClass cls, int tag, const char* what) {
  if (!(rest > kTinyLength)) {
    throw InvalidScene(std::string("degenerate zero-length ") + what + " between particles " +
                       std::to_string(i) + " and " + std::to_string(j));
  }
  state.constraints.push_back(
      {DistanceConstraint{i, j, rest, compliance, tension_only, 0.0}, cls, tag});
}

}  // namespace

std::string_view to_string(ConstraintClass cls) {
  switch (cls) {
    case ConstraintClass::kRod: return "rod";
    case ConstraintClass::kBend: return "bend";
    case ConstraintClass::kPlate: return "plate";
    case ConstraintClass::kCable: return "cable";
    case ConstraintClass::kTendon: return "tendon";
    case ConstraintClass::kAnchor: return "anchor";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw RangeError("dt must be > 0");
  if (substeps < 1) throw RangeError("substeps must be >= 1");
  if (iterations < 1) throw RangeError("iterations must be >= 1");
  if (!(velocity_damping >= 0.0 && velocity_damping <= 1.0)) {
    throw RangeError("velocity_damping must lie in [0, 1]");
  }
  if (!gravity.allFinite()) throw RangeError("gravity must be finite");
  if (hold_steps < 1) throw RangeError("hold_steps must be >= 1");
  if (max_steps < 1) throw RangeError("max_steps must be >= 1");
}

Plane fit_plane(const std::vector<Vec3>& points) {
  Plane plane;
  if (points.empty()) return plane;
  for (const Vec3& p : points) plane.centroid += p;
  plane.centroid /= static_cast<double>(points.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const Vec3& p : points) {
    const Vec3 d = p - plane.centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  const Vec3 values = solver.eigenvalues();
  plane.normal = solver.eigenvectors().col(0).normalized();
  plane.spread_ratio = values(2) > 0.0 ? values(1) / values(2) : 0.0;
  // Orient into the +z hemisphere (then +y, then +x) so repeated fits agree in sign.
  const Vec3& n = plane.normal;
  const bool flip = n.z() < 0.0 || (n.z() == 0.0 && (n.y() < 0.0 || (n.y() == 0.0 && n.x() < 0.0)));
  if (flip) plane.normal = -plane.normal;
  return plane;
}

Vec3 plate_centroid(const SimState& state, const PlateGroup& plate) {
  Vec3 c = Vec3::Zero();
  for (int idx : plate.members) c += state.particles[idx].position;
  return plate.members.empty() ? c : Vec3(c / static_cast<double>(plate.members.size()));
}

Pose plate_pose(const SimState& state, const PlateGroup& plate) {
  std::vector<Vec3> points;
  for (int idx : plate.members) points.push_back(state.particles[idx].position);
  const Plane plane = fit_plane(points);
  if (points.size() < 3 || plane.spread_ratio < 1e-10) {
    throw DegeneratePlate("plate at level " + std::to_string(plate.level) + " is collinear");
  }
  return {std::atan2(plane.normal.x(), plane.normal.z()),
          std::atan2(plane.normal.y(), plane.normal.z())};
}

SimState build_sim(const structure::Scene& scene) {
  using structure::Topology;
  const Topology& topo = scene.topology;
  const auto& spec = scene.spec;

  std::size_t interior = 0;
  for (const auto& nodes : scene.rod_nodes) interior += nodes.size() >= 2 ? nodes.size() - 2 : 0;
  const std::size_t expected = topo.vertices.size() + interior + scene.eyelets.size();
  if (scene.positions.size() != expected || scene.rod_nodes.size() != topo.rods.size() ||
      scene.cable_rest.size() != topo.cables.size() ||
      scene.cable_compliance.size() != topo.cables.size()) {
    throw InvalidScene("scene is missing positions or element data (" +
                       std::to_string(scene.positions.size()) + " positions, expected " +
                       std::to_string(expected) + ")");
  }
  if (!(spec.particle_mass > 0.0)) throw InvalidScene("particle_mass must be > 0");

  SimState state;
  state.particles.resize(scene.positions.size());
  for (std::size_t i = 0; i < scene.positions.size(); ++i) {
    if (!scene.positions[i].allFinite()) {
      throw InvalidScene("non-finite position for particle " + std::to_string(i));
    }
    auto& p = state.particles[i];
    p.position = p.previous_position = scene.positions[i];
    p.inverse_mass = 1.0 / spec.particle_mass;
  }
  // The base plate and its eyelets are fixed to the ground.
  for (std::size_t vi = 0; vi < topo.vertices.size(); ++vi) {
    if (topo.vertices[vi].level() == 0) state.particles[vi].inverse_mass = 0.0;
  }
  for (const auto& eyelet : scene.eyelets) {
    if (eyelet.level == 0) state.particles[eyelet.particle].inverse_mass = 0.0;
  }

  const auto rest_of = [&](int a, int b) {
    return (scene.positions[a] - scene.positions[b]).norm();
  };

  for (std::size_t c = 0; c < topo.cables.size(); ++c) {
    const int a = static_cast<int>(topo.vertex_index(topo.cables[c].a));
    const int b = static_cast<int>(topo.vertex_index(topo.cables[c].b));
    add_distance(state, a, b, scene.cable_rest[c], scene.cable_compliance[c], true,
                 ConstraintClass::kCable, static_cast<int>(c), "cable");
  }

  for (const auto& tendon : scene.tendons) {
    const std::size_t segments = tendon.eyelets.size() >= 2 ? tendon.eyelets.size() - 1 : 0;
    if (segments == 0) throw InvalidScene("tendon " + std::to_string(tendon.id) + " has no segments");
    const double rest = tendon.factor * tendon.natural_length / static_cast<double>(segments);
    for (std::size_t k = 0; k < segments; ++k) {
      const int a = scene.eyelets.at(tendon.eyelets[k]).particle;
      const int b = scene.eyelets.at(tendon.eyelets[k + 1]).particle;
      add_distance(state, a, b, rest, spec.compliance.tendon, true, ConstraintClass::kTendon,
                   tendon.id, "tendon segment");
    }
  }
  for (std::size_t r = 0; r < scene.rod_nodes.size(); ++r) {
    const auto& nodes = scene.rod_nodes[r];
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
      add_distance(state, nodes[k], nodes[k + 1], rest_of(nodes[k], nodes[k + 1]),
                   spec.compliance.rod, false, ConstraintClass::kRod, static_cast<int>(r), "rod");
    }
  }
  for (std::size_t r = 0; r < scene.rod_nodes.size(); ++r) {
    const auto& nodes = scene.rod_nodes[r];
    for (std::size_t k = 1; k + 1 < nodes.size(); ++k) {
      state.constraints.push_back(
          {BendConstraint{nodes[k - 1], nodes[k], nodes[k + 1], spec.compliance.bend, 0.0},
           ConstraintClass::kBend, static_cast<int>(r)});
    }
  }

  for (std::size_t p = 0; p < topo.plates.size(); ++p) {
    const auto& plate = topo.plates[p];
    PlateGroup group;
    group.level = plate.level;
    for (const auto& v : plate.members) group.members.push_back(static_cast<int>(topo.vertex_index(v)));
    if (plate.rigid) {
      for (std::size_t a = 0; a < group.members.size(); ++a) {
        for (std::size_t b = a + 1; b < group.members.size(); ++b) {
          const int ia = group.members[a];
          const int ib = group.members[b];
          add_distance(state, ia, ib, rest_of(ia, ib), spec.compliance.plate, false,
                       ConstraintClass::kPlate, static_cast<int>(p), "plate rim link");
        }
      }
      if (group.members.size() >= 4) {
        CoplanarConstraint coplanar;
        coplanar.members = group.members;
        coplanar.compliance = spec.compliance.plate;
        coplanar.lambda.assign(group.members.size(), 0.0);
        state.constraints.push_back({std::move(coplanar), ConstraintClass::kPlate, static_cast<int>(p)});
      }
    }
    state.plates.push_back(std::move(group));
  }

  for (const auto& eyelet : scene.eyelets) {
    for (std::size_t k = 0; k < eyelet.links.size(); ++k) {
      const double rest = k < eyelet.link_rest.size() ? eyelet.link_rest[k]
                                                      : rest_of(eyelet.particle, eyelet.links[k]);
      add_distance(state, eyelet.particle, eyelet.links[k], rest, spec.compliance.link, false,
                   ConstraintClass::kRod, eyelet.tendon, "eyelet link");
    }
    // In-plane links leave the eyelet free to sag out of the plane of its
    // anchors; keep it on that plane.
    if (eyelet.links.size() == 3 && state.particles[eyelet.particle].inverse_mass > 0.0) {
      CoplanarConstraint coplanar;
      coplanar.members = {eyelet.particle, eyelet.links[0], eyelet.links[1], eyelet.links[2]};
      coplanar.compliance = spec.compliance.link;
      coplanar.lambda.assign(4, 0.0);
      state.constraints.push_back({std::move(coplanar), ConstraintClass::kRod, eyelet.tendon});
    }
  }

  return state;
}

void project_constraint(SimState& state, std::size_t index, double dt) {
  Constraint& constraint = state.constraints[index];
  ProjectionEvent event;
  event.constraint = index;
  event.cls = constraint.cls;
  std::visit(Projector{state, dt, event}, constraint.kind);
  if (state.on_projection) state.on_projection(event);
}

void step(SimState& state, const SolverConfig& config) {
  const std::vector<Particle> saved_particles = state.particles;
  const std::vector<Constraint> saved_constraints = state.constraints;
  const double saved_time = state.time;
  const double saved_dt = state.substep_dt;

  const double h = config.dt / config.substeps;
  const double keep = 1.0 - config.velocity_damping;
  for (int sub = 0; sub < config.substeps; ++sub) {
    for (Particle& p : state.particles) {
      p.previous_position = p.position;
      if (p.inverse_mass <= 0.0) continue;
      p.velocity += config.gravity * h;
      p.position += p.velocity * h;
    }
    for (Constraint& c : state.constraints) std::visit(LambdaReset{}, c.kind);
    for (int it = 0; it < config.iterations; ++it) {
      for (std::size_t ci = 0; ci < state.constraints.size(); ++ci) project_constraint(state, ci, h);
    }
    for (Particle& p : state.particles) {
      if (p.inverse_mass <= 0.0) {
        p.velocity.setZero();
        continue;
      }
      p.velocity = (p.position - p.previous_position) / h * keep;
    }
  }
  state.time += config.dt;
  state.substep_dt = h;

  if (!all_finite(state.particles)) {
    state.particles = saved_particles;
    state.constraints = saved_constraints;
    state.time = saved_time;
    state.substep_dt = saved_dt;
    throw NumericalBlowup("non-finite particle state at t = " + std::to_string(saved_time + config.dt));
  }
}

double max_speed(const SimState& state) {
  double out = 0.0;
  for (const Particle& p : state.particles) out = std::max(out, p.velocity.norm());
  return out;
}

Residuals constraint_residuals(const SimState& state) {
  Residuals out{};
  const ResidualOf residual{state, state.substep_dt};
  for (const Constraint& c : state.constraints) {
    double& slot = out[static_cast<std::size_t>(c.cls)];
    slot = std::max(slot, std::visit(residual, c.kind));
  }
  return out;
}

EquilibriumReport solve_to_equilibrium(SimState& state, const SolverConfig& config) {
  config.validate();
  EquilibriumReport report;
  int held = 0;
  while (report.steps_taken < config.max_steps) {
    step(state, config);
    ++report.steps_taken;
    report.max_speed = max_speed(state);
    report.residuals = constraint_residuals(state);
    if (report.max_speed < config.speed_tolerance &&
        max_residual(report.residuals) < config.residual_tolerance) {
      if (++held >= config.hold_steps) {
        report.converged = true;
        break;
      }
    } else {
      held = 0;
    }
  }
  if (!state.plates.empty()) {
    report.tip_pose = plate_pose(state, state.plates.back());
    report.tip_position = plate_centroid(state, state.plates.back());
  }
  return report;
}

void write_positions(const SimState& state, structure::Scene& scene) {
  scene.positions.resize(state.particles.size());
  for (std::size_t i = 0; i < state.particles.size(); ++i) {
    scene.positions[i] = state.particles[i].position;
  }
}

}  // namespace tensiforge::physics
