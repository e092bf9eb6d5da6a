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


#include "tensiforge/cli.hpp"

#include <fcntl.h>
#include <signal.h>
#include <termios.h>
#include <unistd.h>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <thread>

#include "tensiforge/bridge.hpp"
#include "tensiforge/export.hpp"
#include "tensiforge/serve.hpp"
#include "tensiforge/structure.hpp"

namespace tensiforge::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

volatile bool g_stop = false;

extern "C" void on_stop_signal(int) { g_stop = true; }

void install_stop_handlers() {
  g_stop = false;
  struct sigaction sa {};
  sa.sa_handler = on_stop_signal;
  sigemptyset(&sa.sa_mask);
  ::sigaction(SIGINT, &sa, nullptr);
  ::sigaction(SIGTERM, &sa, nullptr);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorFamily::kInput, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorFamily::kInput, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorFamily::kInput, "failed writing " + path.string());
}

structure::Scene load_scene(const fs::path& path) {
  return exporter::import_scene_json(read_file(path));
}

bool is_homed(const structure::Scene& scene) {
  const auto it = scene.provenance.find("homed");
  return it != scene.provenance.end() && it->second == "true";
}

// Robot whose tendon natural lengths come from its own rest equilibrium.
actuation::Robot homed_robot(structure::Scene scene, const physics::SolverConfig& solver) {
  const bool homed = is_homed(scene);
  actuation::Robot robot(std::move(scene), solver);
  if (!homed) {
    const auto report = robot.home();
    if (!report.converged) {
      throw NonConvergence("rest state did not converge within " + std::to_string(report.steps_taken) + " steps");
    }
  }
  return robot;
}

structure::Scene posed_scene(const actuation::Robot& robot, const std::string& stage, bool homed) {
  structure::Scene out = robot.snapshot();
  if (homed) out.provenance["homed"] = "true";
  out.provenance["stage"] = stage;
  return out;
}

struct SolverFlags {
  int max_steps = physics::SolverConfig{}.max_steps;
  int substeps = physics::SolverConfig{}.substeps;
  int iterations = physics::SolverConfig{}.iterations;
  double dt = physics::SolverConfig{}.dt;

  void add(CLI::App* cmd) {
    cmd->add_option("--max-steps", max_steps, "Step budget per equilibrium solve")->capture_default_str();
    cmd->add_option("--substeps", substeps, "Substeps per step")->capture_default_str();
    cmd->add_option("--iterations", iterations, "Projection sweeps per substep")->capture_default_str();
    cmd->add_option("--dt", dt, "Step size in seconds")->capture_default_str();
  }
  physics::SolverConfig config() const {
    physics::SolverConfig cfg;
    cfg.max_steps = max_steps;
    cfg.substeps = substeps;
    cfg.iterations = iterations;
    cfg.dt = dt;
    return cfg;
  }
};

struct TargetFlags {
  int segment = 0;
  double alpha_deg = 0.0;
  double beta_deg = 0.0;
  int max_iters = actuation::RefineConfig{}.max_iters;
  double tol_deg = 0.5;
  actuation::FoPidConfig pid;

  void add(CLI::App* cmd) {
    cmd->add_option("--segment", segment, "Segment index")->capture_default_str();
    cmd->add_option("--alpha-deg", alpha_deg, "Yaw target in degrees")->capture_default_str();
    cmd->add_option("--beta-deg", beta_deg, "Pitch target in degrees")->capture_default_str();
    cmd->add_option("--max-iters", max_iters, "Closed-loop iteration budget")->capture_default_str();
    cmd->add_option("--tol-deg", tol_deg, "Per-axis closed-loop tolerance in degrees")->capture_default_str();
    cmd->add_option("--kp", pid.kp)->capture_default_str();
    cmd->add_option("--ki", pid.ki)->capture_default_str();
    cmd->add_option("--kd", pid.kd)->capture_default_str();
    cmd->add_option("--lambda", pid.lambda, "Integral order")->capture_default_str();
    cmd->add_option("--mu", pid.mu, "Derivative order")->capture_default_str();
  }
  actuation::SegmentCommand command() const {
    return {segment, alpha_deg * actuation::kDegree, beta_deg * actuation::kDegree};
  }
  actuation::RefineConfig refine() const {
    actuation::RefineConfig cfg;
    cfg.pid = pid;
    cfg.max_iters = max_iters;
    cfg.tolerance = tol_deg * actuation::kDegree;
    if (!(cfg.tolerance > 0.0)) throw RangeError("tolerance must be positive");
    return cfg;
  }
};

// ---- commands ---------------------------------------------------------------

struct BuildFlags {
  int n = 3;
  int m = 3;
  double radius_mm = 60.0;
  double height_mm = 45.0;
  std::optional<double> twist_deg;
  int rod_segments = 1;
  int tendons = 3;
  double tendon_radius_mm = 40.0;
  double mass = 0.01;
  double prestress = structure::StructureSpec{}.cable_prestress;
  std::string out;
};

int cmd_build(const BuildFlags& f, std::ostream& out) {
  structure::StructureSpec spec;
  spec.n = f.n;
  spec.m = f.m;
  spec.base_radius = f.radius_mm / 1000.0;
  spec.layer_height = f.height_mm / 1000.0;
  if (f.twist_deg) spec.twist = *f.twist_deg * actuation::kDegree;
  spec.rod_segments = f.rod_segments;
  spec.tendon_count = f.tendons;
  spec.tendon_radius = f.tendon_radius_mm / 1000.0;
  spec.particle_mass = f.mass;
  spec.cable_prestress = f.prestress;
  const structure::Scene scene = structure::build_scene(spec);
  write_file(f.out, exporter::export_scene_json(scene));
  out << "wrote " << f.out << ": " << scene.positions.size() << " particles, " << scene.topology.cables.size()
      << " cables, " << scene.tendons.size() << " tendons\n";
  return kExitOk;
}

int cmd_simulate(const std::string& scene_path, const std::string& report_path, const std::string& scene_out,
                 const SolverFlags& solver, std::ostream& out) {
  actuation::Robot robot(load_scene(scene_path), solver.config());
  const auto report = robot.settle();
  const std::string text = report_to_json(report).dump(2) + "\n";
  if (!report_path.empty()) {
    write_file(report_path, text);
  } else {
    out << text;
  }
  if (!scene_out.empty()) write_file(scene_out, exporter::export_scene_json(posed_scene(robot, "simulate", is_homed(robot.scene()))));
  if (!report.converged) {
    throw NonConvergence("no equilibrium within " + std::to_string(report.steps_taken) + " steps");
  }
  return kExitOk;
}

int cmd_actuate(const std::string& scene_path, const TargetFlags& target, bool closed_loop,
                const std::string& scene_out, const std::string& trace_path, const SolverFlags& solver,
                std::ostream& out) {
  actuation::Robot robot = homed_robot(load_scene(scene_path), solver.config());
  actuation::SimPlant plant(robot);
  actuation::RefineConfig cfg = target.refine();
  if (!closed_loop) cfg.max_iters = 0;
  const auto cmd = target.command();

  const auto write_outputs = [&](const std::vector<actuation::TraceEntry>& trace, bool converged) {
    if (!trace_path.empty()) write_file(trace_path, trace_to_json(cmd, trace, converged).dump(2) + "\n");
    if (!scene_out.empty()) write_file(scene_out, exporter::export_scene_json(posed_scene(robot, "actuate", true)));
  };

  actuation::RefineResult result;
  try {
    result = actuation::closed_loop_refine(plant, cmd, cfg);
  } catch (const actuation::RefineNonConvergence& e) {
    if (!closed_loop) {
      // Open loop has no convergence target; the feedforward pose is the result.
      write_outputs(e.trace(), false);
      const auto& last = e.trace().back();
      out << "pose alpha " << last.pose.alpha / actuation::kDegree << " deg, beta "
          << last.pose.beta / actuation::kDegree << " deg (open loop)\n";
      return kExitOk;
    }
    write_outputs(e.trace(), false);
    throw;
  }
  write_outputs(result.trace, true);
  const auto& last = result.trace.back();
  out << "pose alpha " << last.pose.alpha / actuation::kDegree << " deg, beta " << last.pose.beta / actuation::kDegree
      << " deg after " << result.iterations << " corrective iterations\n";
  return kExitOk;
}

struct ServeFlags {
  std::string scene;
  serve::ServeConfig cfg;
  std::string assets_dir;
  double duration = 0.0;
};

int cmd_serve(const ServeFlags& f, const SolverFlags& solver, std::ostream& out) {
  actuation::Robot robot = homed_robot(load_scene(f.scene), solver.config());
  serve::ServeConfig cfg = f.cfg;
  cfg.assets_dir = f.assets_dir;
  serve::SessionServer server(std::move(robot), cfg);
  install_stop_handlers();
  server.start();
  out << "listening on http://" << cfg.host << ":" << server.port() << "/" << std::endl;
  const auto started = std::chrono::steady_clock::now();
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    if (f.duration > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() >= f.duration) {
      break;
    }
  }
  server.stop();
  return kExitOk;
}

int cmd_device(const std::string& scene_path, double duration, const SolverFlags& solver, std::ostream& out) {
  std::shared_ptr<actuation::Robot> robot;
  bridge::MotorConfig motors;
  if (!scene_path.empty()) {
    robot = std::make_shared<actuation::Robot>(homed_robot(load_scene(scene_path), solver.config()));
    motors = bridge::motors_for(robot->actuators());
  }
  bridge::MockDevice device(motors, robot);

  const int master = ::posix_openpt(O_RDWR | O_NOCTTY);
  if (master < 0 || ::grantpt(master) != 0 || ::unlockpt(master) != 0) {
    throw Error(ErrorFamily::kDevice, "cannot allocate a pseudo-terminal");
  }
  const std::string slave = ::ptsname(master);
  // Holding the slave open keeps the master readable between clients.
  const int hold = ::open(slave.c_str(), O_RDWR | O_NOCTTY);
  if (hold >= 0) {
    termios tio{};
    ::tcgetattr(hold, &tio);
    ::cfmakeraw(&tio);
    ::tcsetattr(hold, TCSANOW, &tio);
  }
  out << slave << std::endl;

  install_stop_handlers();
  std::thread timer;
  std::atomic<bool> done{false};
  if (duration > 0.0) {
    timer = std::thread([&] {
      const auto until = std::chrono::steady_clock::now() + std::chrono::duration<double>(duration);
      while (!done && std::chrono::steady_clock::now() < until) std::this_thread::sleep_for(std::chrono::milliseconds(20));
      g_stop = true;
    });
  }
  bridge::serve_device_fd(master, device, &g_stop);
  done = true;
  if (timer.joinable()) timer.join();
  if (hold >= 0) ::close(hold);
  ::close(master);
  return kExitOk;
}

struct LoopFlags {
  std::string scene;
  bool mock = false;
  std::string port;
  int baud = 115200;
  int timeout_ms = 5000;
  std::int64_t speed = bridge::SessionConfig{}.speed;
  std::string transcript;
  std::string trace;
};

int cmd_loop(const LoopFlags& f, const TargetFlags& target, const SolverFlags& solver, std::ostream& out) {
  if (!f.port.empty() && f.mock) throw RangeError("--mock and --port are mutually exclusive");
  auto robot = std::make_shared<actuation::Robot>(homed_robot(load_scene(f.scene), solver.config()));
  const auto actuators = robot->actuators();
  const auto geometry = robot->geometry(target.segment);
  const bridge::MotorConfig motors = bridge::motors_for(actuators);

  std::unique_ptr<bridge::LineLink> link;
  if (f.port.empty()) {
    link = std::make_unique<bridge::MockLink>(std::make_shared<bridge::MockDevice>(motors, robot));
  } else {
    link = std::make_unique<bridge::SerialLink>(f.port, f.baud);
  }
  bridge::SessionConfig session_cfg;
  session_cfg.speed = f.speed;
  session_cfg.timeout = std::chrono::milliseconds(f.timeout_ms);
  bridge::HilSession session(*link, motors, session_cfg);
  const auto cmd = target.command();

  const auto write_outputs = [&](const std::vector<actuation::TraceEntry>* trace, bool converged) {
    if (!f.transcript.empty()) write_file(f.transcript, session.transcript().to_text());
    if (trace && !f.trace.empty()) write_file(f.trace, trace_to_json(cmd, *trace, converged).dump(2) + "\n");
  };

  actuation::RefineResult result;
  try {
    session.home();
    bridge::HilPlant plant(session, actuators, geometry);
    result = actuation::closed_loop_refine(plant, cmd, target.refine());
    // Latch the final targets so the session ends on settled motors.
    auto latched = actuators;
    for (std::size_t k = 0; k < latched.size(); ++k) latched[k].length_factor = result.factors[k];
    session.move(bridge::factors_to_steps(latched, motors));
  } catch (const actuation::RefineNonConvergence& e) {
    write_outputs(&e.trace(), false);
    throw;
  } catch (const Error&) {
    write_outputs(nullptr, false);
    throw;
  }
  write_outputs(&result.trace, true);
  const auto& last = result.trace.back();
  out << "pose alpha " << last.pose.alpha / actuation::kDegree << " deg, beta " << last.pose.beta / actuation::kDegree
      << " deg after " << result.iterations << " corrective iterations, " << session.transcript().entries.size()
      << " transcript lines\n";
  return kExitOk;
}

int cmd_replay(const std::string& transcript_path, const std::string& scene_path, const std::string& out_path,
               const SolverFlags& solver, std::ostream& out) {
  const auto recorded = bridge::Transcript::parse(read_file(transcript_path));
  std::shared_ptr<actuation::Robot> robot;
  bridge::MotorConfig motors;
  if (!scene_path.empty()) {
    robot = std::make_shared<actuation::Robot>(homed_robot(load_scene(scene_path), solver.config()));
    motors = bridge::motors_for(robot->actuators());
  }
  bridge::MockLink link(std::make_shared<bridge::MockDevice>(motors, robot));
  const auto replayed = bridge::replay(recorded, link);
  if (!out_path.empty()) write_file(out_path, replayed.to_text());
  if (replayed == recorded) {
    out << "replay identical: " << replayed.entries.size() << " lines\n";
    return kExitOk;
  }
  const std::size_t n = std::min(recorded.entries.size(), replayed.entries.size());
  std::size_t at = 0;
  while (at < n && recorded.entries[at] == replayed.entries[at]) ++at;
  throw DeviceFault("replay diverges at line " + std::to_string(at + 1) + " of " +
                    std::to_string(recorded.entries.size()));
}

struct ExportFlags {
  std::string scene;
  std::string parts_dir;
  std::string name;
  exporter::FabConfig fab;
};

int cmd_export(const ExportFlags& f, std::ostream& out) {
  const auto scene = load_scene(f.scene);
  f.fab.validate();
  const auto parts = exporter::decompose_parts(scene, f.fab);
  const std::string name = f.name.empty() ? fs::path(f.scene).stem().string() : f.name;
  const auto paths = exporter::write_parts(parts, f.parts_dir, name);
  for (const auto& p : paths) out << p.string() << "\n";
  return kExitOk;
}

}  // namespace

void configure_logging() {
  auto logger = spdlog::get("tensiforge");
  if (!logger) logger = spdlog::stderr_color_mt("tensiforge");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("TENSIFORGE_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
    if (level != "info") spdlog::warn("TENSIFORGE_LOG={} is not one of error, info, debug; using info", level);
  }
}

json report_to_json(const physics::EquilibriumReport& report) {
  json residuals = json::object();
  for (std::size_t k = 0; k < physics::kConstraintClassCount; ++k) {
    residuals[std::string(physics::to_string(static_cast<physics::ConstraintClass>(k)))] = report.residuals[k];
  }
  return json{{"converged", report.converged},
              {"steps_taken", report.steps_taken},
              {"max_speed", report.max_speed},
              {"residuals", std::move(residuals)},
              {"tip_pose", {{"alpha", report.tip_pose.alpha}, {"beta", report.tip_pose.beta}}},
              {"tip_position_mm",
               {report.tip_position.x() * 1000.0, report.tip_position.y() * 1000.0, report.tip_position.z() * 1000.0}}};
}

json trace_to_json(const actuation::SegmentCommand& target, const std::vector<actuation::TraceEntry>& trace,
                   bool converged) {
  json entries = json::array();
  for (const auto& e : trace) {
    entries.push_back({{"iteration", e.iteration},
                       {"pose", {{"alpha", e.pose.alpha}, {"beta", e.pose.beta}}},
                       {"error", {{"alpha", e.error_alpha}, {"beta", e.error_beta}}},
                       {"correction", {{"alpha", e.u_alpha}, {"beta", e.u_beta}}},
                       {"factors", e.factors}});
  }
  return json{{"target", {{"segment", target.segment}, {"alpha", target.alpha}, {"beta", target.beta}}},
              {"converged", converged},
              {"entries", std::move(entries)}};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"TensiForge: tensegrity continuum robot toolkit", "tensiforge"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  SolverFlags solver;
  std::function<int()> action;

  BuildFlags build;
  auto* c_build = app.add_subcommand("build", "Generate a tower and write its scene file");
  c_build->add_option("--n", build.n, "Struts per rod set")->capture_default_str();
  c_build->add_option("--m", build.m, "Layer count (3, 6, 9, ...)")->capture_default_str();
  c_build->add_option("--radius-mm", build.radius_mm, "Base radius")->capture_default_str();
  c_build->add_option("--height-mm", build.height_mm, "Layer height")->capture_default_str();
  c_build->add_option("--twist-deg", build.twist_deg, "Twist between rod ends (default 180)");
  c_build->add_option("--rod-segments", build.rod_segments, "Particles segments per rod")->capture_default_str();
  c_build->add_option("--tendons", build.tendons, "Tendons per segment")->capture_default_str();
  c_build->add_option("--tendon-radius-mm", build.tendon_radius_mm, "Eyelet radius")->capture_default_str();
  c_build->add_option("--mass", build.mass, "Particle mass in kg")->capture_default_str();
  c_build->add_option("--prestress", build.prestress, "Cable prestrain in [0, 1)")->capture_default_str();
  c_build->add_option("--out", build.out, "Scene file")->required();
  c_build->callback([&] { action = [&] { return cmd_build(build, out); }; });

  std::string scene_path, report_path, scene_out, trace_path;
  auto* c_sim = app.add_subcommand("simulate", "Solve a scene to equilibrium and write a report");
  c_sim->add_option("--scene", scene_path, "Scene file")->required();
  c_sim->add_option("--out", report_path, "Report file (stdout if omitted)");
  c_sim->add_option("--scene-out", scene_out, "Equilibrated scene file");
  solver.add(c_sim);
  c_sim->callback([&] { action = [&] { return cmd_simulate(scene_path, report_path, scene_out, solver, out); }; });

  TargetFlags target;
  bool closed_loop = false;
  auto* c_act = app.add_subcommand("actuate", "Pose a segment by yaw and pitch");
  c_act->add_option("--scene", scene_path, "Scene file")->required();
  target.add(c_act);
  c_act->add_flag("--closed-loop", closed_loop, "Refine with the fractional-order controller");
  c_act->add_option("--out", scene_out, "Posed scene file");
  c_act->add_option("--trace", trace_path, "Controller trace file");
  solver.add(c_act);
  c_act->callback([&] {
    action = [&] { return cmd_actuate(scene_path, target, closed_loop, scene_out, trace_path, solver, out); };
  });

  ServeFlags serve_flags;
  auto* c_serve = app.add_subcommand("serve", "Run a live session over HTTP and WebSocket");
  c_serve->add_option("--scene", serve_flags.scene, "Scene file")->required();
  c_serve->add_option("--host", serve_flags.cfg.host, "IPv4 address to bind")->capture_default_str();
  c_serve->add_option("--port", serve_flags.cfg.port, "TCP port, 0 picks one")->capture_default_str();
  c_serve->add_option("--fps", serve_flags.cfg.fps, "State frames per second")->capture_default_str();
  c_serve->add_option("--assets-dir", serve_flags.assets_dir, "Directory served at /");
  c_serve->add_option("--duration", serve_flags.duration, "Seconds to run, 0 until interrupted")->capture_default_str();
  solver.add(c_serve);
  c_serve->callback([&] { action = [&] { return cmd_serve(serve_flags, solver, out); }; });

  double device_duration = 0.0;
  auto* c_dev = app.add_subcommand("device", "Run the mock motor controller on a pseudo-terminal");
  c_dev->add_option("--scene", scene_path, "Scene driving the simulated sensors");
  c_dev->add_option("--duration", device_duration, "Seconds to run, 0 until interrupted")->capture_default_str();
  solver.add(c_dev);
  c_dev->callback([&] { action = [&] { return cmd_device(scene_path, device_duration, solver, out); }; });

  LoopFlags loop;
  auto* c_loop = app.add_subcommand("loop", "Closed-loop pose control through the device protocol");
  c_loop->add_option("--scene", loop.scene, "Scene file")->required();
  c_loop->add_flag("--mock", loop.mock, "Use the built-in mock device (default)");
  c_loop->add_option("--port", loop.port, "Serial device path");
  c_loop->add_option("--baud", loop.baud, "Serial baud rate")->capture_default_str();
  c_loop->add_option("--timeout-ms", loop.timeout_ms, "Reply timeout")->capture_default_str();
  c_loop->add_option("--speed", loop.speed, "Motor speed in steps/s")->capture_default_str();
  c_loop->add_option("--transcript", loop.transcript, "Transcript file");
  c_loop->add_option("--trace", loop.trace, "Controller trace file");
  target.add(c_loop);
  solver.add(c_loop);
  c_loop->callback([&] { action = [&] { return cmd_loop(loop, target, solver, out); }; });

  std::string transcript_path;
  auto* c_replay = app.add_subcommand("replay", "Replay a transcript against the mock device");
  c_replay->add_option("--transcript", transcript_path, "Recorded transcript")->required();
  c_replay->add_option("--scene", scene_path, "Scene the recording was made with");
  c_replay->add_option("--out", report_path, "Replayed transcript file");
  solver.add(c_replay);
  c_replay->callback([&] { action = [&] { return cmd_replay(transcript_path, scene_path, report_path, solver, out); }; });

  ExportFlags exp;
  auto* c_exp = app.add_subcommand("export", "Write printable STL parts");
  c_exp->add_option("--scene", exp.scene, "Scene file")->required();
  c_exp->add_option("--parts-dir", exp.parts_dir, "Output directory")->required();
  c_exp->add_option("--name", exp.name, "File name prefix (scene file stem by default)");
  c_exp->add_option("--plate-thickness-mm", exp.fab.plate_thickness_mm)->capture_default_str();
  c_exp->add_option("--rod-radius-mm", exp.fab.rod_radius_mm)->capture_default_str();
  c_exp->add_option("--rod-sides", exp.fab.rod_sides)->capture_default_str();
  c_exp->callback([&] { action = [&] { return cmd_export(exp, out); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    return action ? action() : kExitInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.family());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace tensiforge::cli
