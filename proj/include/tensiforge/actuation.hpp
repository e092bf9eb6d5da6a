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

#include <cmath>
#include <cstddef>
#include <deque>
#include <vector>

#include "tensiforge/errors.hpp"
#include "tensiforge/physics.hpp"
#include "tensiforge/structure.hpp"

namespace tensiforge::actuation {

using physics::Pose;

inline constexpr double kDegree = 3.14159265358979323846 / 180.0;
inline constexpr double kDefaultThetaMax = 45.0 * kDegree;

struct FactorBounds {
  double min = 0.7;
  double max = 1.2;

  bool contains(double f) const { return f >= min && f <= max; }
};

struct TendonActuator {
  int tendon_id = 0;
  int segment = 0;
  double azimuth = 0.0;                 // rad
  std::vector<std::size_t> constraints; // chain segments, base to top
  double natural_length = 0.0;          // m
  double length_factor = 1.0;
};

struct SegmentCommand {
  int segment = 0;
  double alpha = 0.0;  // yaw, rad
  double beta = 0.0;   // pitch, rad
};

// Constant-curvature feedforward geometry of one segment.
struct FeedforwardGeometry {
  double tendon_radius = 0.0;   // m
  double length = 0.0;          // m
  std::vector<double> azimuths; // rad, one per tendon
  std::vector<int> tendons;     // plant factor index of each azimuth
};

struct FactorResult {
  std::vector<double> factors;
  std::vector<int> clamped;  // positions in `factors` that hit a bound
};

// Throws RangeError when the command exceeds theta_max or the geometry is
// not positive.
FactorResult angles_to_factors(const SegmentCommand& cmd, const FeedforwardGeometry& geom,
                               const FactorBounds& bounds = {},
                               double theta_max = kDefaultThetaMax);

// Change in factors produced by a correction (u_alpha, u_beta).
std::vector<double> correction_to_factors(double u_alpha, double u_beta,
                                          const FeedforwardGeometry& geom);

// One actuator per scene tendon, bound to its chain constraints in `sim`.
// Throws UnboundActuator when a tendon has no chain in the simulation.
std::vector<TendonActuator> bind_actuators(const structure::Scene& scene,
                                           const physics::SimState& sim);

// Sets the chain rest lengths; positions change only when stepping.
// Throws RangeError outside the bounds.
void apply_length_factor(physics::SimState& sim, TendonActuator& actuator, double factor,
                         const FactorBounds& bounds = {});

double chain_length(const physics::SimState& sim, const TendonActuator& actuator);

// Pose of the top plate of `segment`. Throws RangeError for a missing
// segment and DegeneratePlate for collinear members.
Pose measure_pose(const physics::SimState& sim, int segment);

// A scene plus its live simulation and actuators.
class Robot {
 public:
  explicit Robot(structure::Scene scene, physics::SolverConfig solver = {},
                 FactorBounds bounds = {});

  const structure::Scene& scene() const noexcept { return scene_; }
  physics::SimState& sim() noexcept { return sim_; }
  const physics::SimState& sim() const noexcept { return sim_; }
  std::vector<TendonActuator>& actuators() noexcept { return actuators_; }
  const std::vector<TendonActuator>& actuators() const noexcept { return actuators_; }
  const physics::SolverConfig& solver() const noexcept { return solver_; }
  const FactorBounds& bounds() const noexcept { return bounds_; }
  int segment_count() const noexcept;

  FeedforwardGeometry geometry(int segment) const;
  std::vector<double> factors() const;
  // Applies one factor per actuator (ordered by tendon id).
  void set_factors(const std::vector<double>& factors);
  physics::EquilibriumReport settle();

  // Settles with all factors at 1, then takes the resulting taut chain
  // lengths as the tendons' natural lengths.
  physics::EquilibriumReport home();

  // Copies live positions and factors back into a scene.
  structure::Scene snapshot() const;

 private:
  structure::Scene scene_;
  physics::SimState sim_;
  std::vector<TendonActuator> actuators_;
  physics::SolverConfig solver_;
  FactorBounds bounds_;
};

// Grunwald-Letnikov weights w_0..w_M of order q.
std::vector<double> gl_weights(double q, int memory);

struct FoPidConfig {
  double kp = 0.6;
  double ki = 0.8;
  double kd = 0.0;
  double lambda = 0.9;  // integral order, (0, 2)
  double mu = 0.5;      // derivative order, [0, 2)
  int memory = 256;
  double h = 1.0;       // s

  void validate() const;  // throws RangeError
};

class ControllerState {
 public:
  explicit ControllerState(const FoPidConfig& cfg);

  bool matches(const FoPidConfig& cfg) const noexcept;
  const std::deque<double>& history() const noexcept { return history_; }
  const std::vector<double>& integral_weights() const noexcept { return w_int_; }
  const std::vector<double>& derivative_weights() const noexcept { return w_der_; }

 private:
  friend double fo_pid_step(ControllerState&, const FoPidConfig&, double);
  double lambda_;
  double mu_;
  int memory_;
  std::vector<double> w_int_;
  std::vector<double> w_der_;
  std::deque<double> history_;  // newest first, at most memory + 1 entries
};

// Throws RangeError when the state was built for different orders or memory.
double fo_pid_step(ControllerState& ctrl, const FoPidConfig& cfg, double error);

// Anything that takes factors and reports a pose.
class Plant {
 public:
  virtual ~Plant() = default;
  virtual int tendon_count() const = 0;
  virtual FeedforwardGeometry geometry(int segment) const = 0;
  virtual std::vector<double> factors() const = 0;
  // Factors for every tendon, ordered by tendon id.
  virtual void apply(const std::vector<double>& factors) = 0;
  virtual Pose measure(int segment) = 0;
};

class SimPlant : public Plant {
 public:
  explicit SimPlant(Robot& robot) : robot_(robot) {}

  int tendon_count() const override { return static_cast<int>(robot_.actuators().size()); }
  FeedforwardGeometry geometry(int segment) const override { return robot_.geometry(segment); }
  std::vector<double> factors() const override { return robot_.factors(); }
  void apply(const std::vector<double>& factors) override;
  Pose measure(int segment) override { return measure_pose(robot_.sim(), segment); }
  const physics::EquilibriumReport& last_report() const noexcept { return last_; }

 private:
  Robot& robot_;
  physics::EquilibriumReport last_;
};

struct RefineConfig {
  FoPidConfig pid;
  FactorBounds bounds;
  double tolerance = 0.5 * kDegree;  // rad, per axis
  int max_iters = 200;
};

struct TraceEntry {
  int iteration = 0;  // 0 is the feedforward step
  Pose pose;
  double error_alpha = 0.0;
  double error_beta = 0.0;
  double u_alpha = 0.0;
  double u_beta = 0.0;
  std::vector<double> factors;
};

struct RefineResult {
  std::vector<double> factors;
  std::vector<TraceEntry> trace;
  int iterations = 0;  // corrective iterations after the feedforward
};

class RefineNonConvergence : public ControllerNonConvergence {
 public:
  RefineNonConvergence(const std::string& what, std::vector<TraceEntry> trace)
      : ControllerNonConvergence(what), trace_(std::move(trace)) {}
  const std::vector<TraceEntry>& trace() const noexcept { return trace_; }

 private:
  std::vector<TraceEntry> trace_;
};

// Throws RefineNonConvergence after max_iters, RangeError when a
// correction leaves the factor bounds.
RefineResult closed_loop_refine(Plant& plant, const SegmentCommand& target,
                                const RefineConfig& cfg = {});

}  // namespace tensiforge::actuation
