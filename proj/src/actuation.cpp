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

#include "tensiforge/actuation.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <string>
#include <variant>

namespace tensiforge::actuation {
namespace {

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void check_geometry(const FeedforwardGeometry& geom) {
  if (!(geom.tendon_radius > 0.0) || !(geom.length > 0.0) || geom.azimuths.empty()) {
    throw RangeError("feedforward geometry needs r_t > 0, L > 0 and at least one tendon");
  }
}

}  // namespace

FactorResult angles_to_factors(const SegmentCommand& cmd, const FeedforwardGeometry& geom,
                               const FactorBounds& bounds, double theta_max) {
  check_geometry(geom);
  const double theta = std::hypot(cmd.alpha, cmd.beta);
  if (!std::isfinite(theta) || theta > theta_max) {
    throw RangeError("bending angle " + fmt_num(theta / kDegree) + " deg exceeds theta_max " +
                     fmt_num(theta_max / kDegree) + " deg");
  }
  const double dir = std::atan2(cmd.beta, cmd.alpha);
  const double gain = geom.tendon_radius * theta / geom.length;
  FactorResult out;
  out.factors.reserve(geom.azimuths.size());
  for (std::size_t k = 0; k < geom.azimuths.size(); ++k) {
    const double f = 1.0 - gain * std::cos(geom.azimuths[k] - dir);
    const double c = std::clamp(f, bounds.min, bounds.max);
    if (c != f) out.clamped.push_back(static_cast<int>(k));
    out.factors.push_back(c);
  }
  if (!out.clamped.empty()) {
    spdlog::warn("clamped {} tendon factor(s) to [{}, {}] for segment {}", out.clamped.size(),
                 bounds.min, bounds.max, cmd.segment);
  }
  return out;
}

std::vector<double> correction_to_factors(double u_alpha, double u_beta,
                                          const FeedforwardGeometry& geom) {
  check_geometry(geom);
  std::vector<double> out;
  out.reserve(geom.azimuths.size());
  const double scale = geom.tendon_radius / geom.length;
  for (double phi : geom.azimuths) {
    out.push_back(-scale * (u_alpha * std::cos(phi) + u_beta * std::sin(phi)));
  }
  return out;
}

std::vector<TendonActuator> bind_actuators(const structure::Scene& scene,
                                           const physics::SimState& sim) {
  std::vector<TendonActuator> out;
  out.reserve(scene.tendons.size());
  for (const auto& tendon : scene.tendons) {
    TendonActuator a;
    a.tendon_id = tendon.id;
    a.segment = tendon.segment;
    a.azimuth = tendon.azimuth;
    a.natural_length = tendon.natural_length;
    a.length_factor = tendon.factor;
    for (std::size_t c = 0; c < sim.constraints.size(); ++c) {
      const auto& con = sim.constraints[c];
      if (con.cls == physics::ConstraintClass::kTendon && con.tag == tendon.id &&
          std::holds_alternative<physics::DistanceConstraint>(con.kind)) {
        a.constraints.push_back(c);
      }
    }
    if (a.constraints.empty()) {
      throw UnboundActuator("tendon " + std::to_string(tendon.id) + " has no chain in the simulation");
    }
    if (!(a.natural_length > 0.0)) {
      throw UnboundActuator("tendon " + std::to_string(tendon.id) + " has no natural length");
    }
    out.push_back(std::move(a));
  }
  std::sort(out.begin(), out.end(),
            [](const TendonActuator& x, const TendonActuator& y) { return x.tendon_id < y.tendon_id; });
  return out;
}

void apply_length_factor(physics::SimState& sim, TendonActuator& actuator, double factor,
                         const FactorBounds& bounds) {
  if (!std::isfinite(factor) || !bounds.contains(factor)) {
    throw RangeError("length factor " + fmt_num(factor) + " for tendon " +
                     std::to_string(actuator.tendon_id) + " outside [" + fmt_num(bounds.min) +
                     ", " + fmt_num(bounds.max) + "]");
  }
  const double rest = factor * actuator.natural_length / static_cast<double>(actuator.constraints.size());
  for (std::size_t c : actuator.constraints) {
    std::get<physics::DistanceConstraint>(sim.constraints.at(c).kind).rest = rest;
  }
  actuator.length_factor = factor;
}

double chain_length(const physics::SimState& sim, const TendonActuator& actuator) {
  double total = 0.0;
  for (std::size_t c : actuator.constraints) {
    const auto& d = std::get<physics::DistanceConstraint>(sim.constraints.at(c).kind);
    total += (sim.particles[d.i].position - sim.particles[d.j].position).norm();
  }
  return total;
}

Pose measure_pose(const physics::SimState& sim, int segment) {
  const int plates = static_cast<int>(sim.plates.size());
  if (segment < 0 || segment + 1 >= plates) {
    throw RangeError("segment " + std::to_string(segment) + " has no top plate (" +
                     std::to_string(plates) + " plates)");
  }
  return physics::plate_pose(sim, sim.plates[segment + 1]);
}

Robot::Robot(structure::Scene scene, physics::SolverConfig solver, FactorBounds bounds)
    : scene_(std::move(scene)),
      sim_(physics::build_sim(scene_)),
      actuators_(bind_actuators(scene_, sim_)),
      solver_(std::move(solver)),
      bounds_(bounds) {
  solver_.validate();
}

int Robot::segment_count() const noexcept {
  return std::max(0, static_cast<int>(sim_.plates.size()) - 1);
}

FeedforwardGeometry Robot::geometry(int segment) const {
  FeedforwardGeometry g;
  g.tendon_radius = scene_.spec.tendon_radius;
  double total = 0.0;
  for (std::size_t k = 0; k < actuators_.size(); ++k) {
    if (actuators_[k].segment != segment) continue;
    g.azimuths.push_back(actuators_[k].azimuth);
    g.tendons.push_back(static_cast<int>(k));
    total += actuators_[k].natural_length;
  }
  if (g.tendons.empty()) {
    throw RangeError("segment " + std::to_string(segment) + " has no tendons");
  }
  g.length = total / static_cast<double>(g.tendons.size());
  return g;
}

std::vector<double> Robot::factors() const {
  std::vector<double> out;
  out.reserve(actuators_.size());
  for (const auto& a : actuators_) out.push_back(a.length_factor);
  return out;
}

void Robot::set_factors(const std::vector<double>& factors) {
  if (factors.size() != actuators_.size()) {
    throw RangeError("expected " + std::to_string(actuators_.size()) + " factors, got " +
                     std::to_string(factors.size()));
  }
  for (double f : factors) {
    if (!std::isfinite(f) || !bounds_.contains(f)) {
      throw RangeError("length factor " + fmt_num(f) + " outside [" + fmt_num(bounds_.min) + ", " +
                       fmt_num(bounds_.max) + "]");
    }
  }
  for (std::size_t k = 0; k < factors.size(); ++k) {
    apply_length_factor(sim_, actuators_[k], factors[k], bounds_);
  }
}

physics::EquilibriumReport Robot::settle() {
  auto report = physics::solve_to_equilibrium(sim_, solver_);
  spdlog::debug("settled in {} steps (converged {}, max residual {:.3g})", report.steps_taken,
                report.converged, physics::max_residual(report.residuals));
  return report;
}

physics::EquilibriumReport Robot::home() {
  set_factors(std::vector<double>(actuators_.size(), 1.0));
  auto report = settle();
  for (auto& a : actuators_) {
    a.natural_length = chain_length(sim_, a);
    apply_length_factor(sim_, a, 1.0, bounds_);
  }
  for (auto& tendon : scene_.tendons) {
    for (const auto& a : actuators_) {
      if (a.tendon_id == tendon.id) {
        tendon.natural_length = a.natural_length;
        tendon.factor = 1.0;
      }
    }
  }
  return report;
}

structure::Scene Robot::snapshot() const {
  structure::Scene out = scene_;
  physics::write_positions(sim_, out);
  for (auto& tendon : out.tendons) {
    for (const auto& a : actuators_) {
      if (a.tendon_id == tendon.id) {
        tendon.natural_length = a.natural_length;
        tendon.factor = a.length_factor;
      }
    }
  }
  return out;
}

std::vector<double> gl_weights(double q, int memory) {
  if (memory < 1) throw RangeError("memory must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(memory) + 1);
  w[0] = 1.0;
  for (int j = 1; j <= memory; ++j) {
    w[j] = w[j - 1] * (1.0 - (q + 1.0) / static_cast<double>(j));
  }
  return w;
}

void FoPidConfig::validate() const {
  if (!std::isfinite(kp) || !std::isfinite(ki) || !std::isfinite(kd)) {
    throw RangeError("controller gains must be finite");
  }
  if (!(lambda > 0.0 && lambda < 2.0)) throw RangeError("integral order must be in (0, 2)");
  if (!(mu >= 0.0 && mu < 2.0)) throw RangeError("derivative order must be in [0, 2)");
  if (memory < 1 || memory > 65536) throw RangeError("memory must be in [1, 65536]");
  if (!(h > 0.0) || !std::isfinite(h)) throw RangeError("sample time must be > 0");
}

ControllerState::ControllerState(const FoPidConfig& cfg)
    : lambda_(cfg.lambda), mu_(cfg.mu), memory_(cfg.memory) {
  cfg.validate();
  w_int_ = gl_weights(-cfg.lambda, cfg.memory);
  w_der_ = gl_weights(cfg.mu, cfg.memory);
}

bool ControllerState::matches(const FoPidConfig& cfg) const noexcept {
  return cfg.lambda == lambda_ && cfg.mu == mu_ && cfg.memory == memory_;
}

double fo_pid_step(ControllerState& ctrl, const FoPidConfig& cfg, double error) {
  if (!ctrl.matches(cfg)) throw RangeError("controller state was built for a different config");
  ctrl.history_.push_front(error);
  if (ctrl.history_.size() > static_cast<std::size_t>(ctrl.memory_) + 1) ctrl.history_.pop_back();
  double integral = 0.0;
  double derivative = 0.0;
  for (std::size_t j = 0; j < ctrl.history_.size(); ++j) {
    integral += ctrl.w_int_[j] * ctrl.history_[j];
    derivative += ctrl.w_der_[j] * ctrl.history_[j];
  }
  return cfg.kp * error + cfg.ki * std::pow(cfg.h, cfg.lambda) * integral +
         cfg.kd * std::pow(cfg.h, -cfg.mu) * derivative;
}

void SimPlant::apply(const std::vector<double>& factors) {
  robot_.set_factors(factors);
  last_ = robot_.settle();
  if (!last_.converged) {
    spdlog::warn("plant did not settle within {} steps", last_.steps_taken);
  }
}

RefineResult closed_loop_refine(Plant& plant, const SegmentCommand& target, const RefineConfig& cfg) {
  cfg.pid.validate();
  if (cfg.max_iters < 0) throw RangeError("max_iters must be >= 0");
  const FeedforwardGeometry geom = plant.geometry(target.segment);
  const FactorResult ff = angles_to_factors(target, geom, cfg.bounds);

  RefineResult result;
  result.factors = plant.factors();
  for (std::size_t k = 0; k < geom.tendons.size(); ++k) result.factors[geom.tendons[k]] = ff.factors[k];

  const auto record = [&](int iteration, double ua, double ub) {
    TraceEntry e;
    e.iteration = iteration;
    e.pose = plant.measure(target.segment);
    e.error_alpha = target.alpha - e.pose.alpha;
    e.error_beta = target.beta - e.pose.beta;
    e.u_alpha = ua;
    e.u_beta = ub;
    e.factors = result.factors;
    spdlog::debug("refine {}: pose ({:.4f}, {:.4f}) deg, error ({:.4f}, {:.4f}) deg", iteration,
                  e.pose.alpha / kDegree, e.pose.beta / kDegree, e.error_alpha / kDegree,
                  e.error_beta / kDegree);
    result.trace.push_back(std::move(e));
    return result.trace.back();
  };
  const auto within = [&](const TraceEntry& e) {
    return std::abs(e.error_alpha) < cfg.tolerance && std::abs(e.error_beta) < cfg.tolerance;
  };

  plant.apply(result.factors);
  TraceEntry last = record(0, 0.0, 0.0);
  if (within(last)) return result;

  ControllerState axis_alpha(cfg.pid);
  ControllerState axis_beta(cfg.pid);
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const double ua = fo_pid_step(axis_alpha, cfg.pid, last.error_alpha);
    const double ub = fo_pid_step(axis_beta, cfg.pid, last.error_beta);
    const auto delta = correction_to_factors(ua, ub, geom);
    for (std::size_t k = 0; k < geom.tendons.size(); ++k) {
      const double f = ff.factors[k] + delta[k];
      if (!std::isfinite(f) || !cfg.bounds.contains(f)) {
        throw RangeError("correction drives tendon " + std::to_string(geom.tendons[k]) +
                         " to factor " + fmt_num(f) + ", outside [" + fmt_num(cfg.bounds.min) +
                         ", " + fmt_num(cfg.bounds.max) + "]");
      }
      result.factors[geom.tendons[k]] = f;
    }
    plant.apply(result.factors);
    last = record(it, ua, ub);
    result.iterations = it;
    if (within(last)) return result;
  }
  throw RefineNonConvergence("closed loop did not reach " + fmt_num(cfg.tolerance / kDegree) +
                                 " deg within " + std::to_string(cfg.max_iters) + " iterations",
                             result.trace);
}

}  // namespace tensiforge::actuation
