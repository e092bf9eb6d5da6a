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
#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tensiforge/actuation.hpp"
#include "tensiforge/errors.hpp"

namespace tensiforge::bridge {

// Wire messages. One ASCII line each, fields separated by single spaces.
struct SetMotor {
  int motor = 0;
  std::int64_t steps = 0;  // absolute target, positive = reel in
  std::int64_t speed = 1;  // steps/s, > 0
  bool operator==(const SetMotor&) const = default;
};
struct Home {
  bool operator==(const Home&) const = default;
};
struct QuerySensors {
  bool operator==(const QuerySensors&) const = default;
};
struct Ack {
  int id = 0;
  bool operator==(const Ack&) const = default;
};
struct SensorReport {
  int sensor = 0;
  double value_mm = 0.0;  // sent with two decimals
  bool operator==(const SensorReport&) const = default;
};
struct DeviceError {
  int code = 0;
  bool operator==(const DeviceError&) const = default;
};

using WireMessage = std::variant<SetMotor, Home, QuerySensors, Ack, SensorReport, DeviceError>;

// Device error codes.
inline constexpr int kErrUnknownMotor = 1;
inline constexpr int kErrMalformed = 2;
inline constexpr int kErrOutOfRange = 3;

// Sensor channels of the mock device, and the value reported when no plant
// is attached.
inline constexpr int kSensorHeight = 0;
inline constexpr int kSensorX = 1;
inline constexpr int kSensorY = 2;
inline constexpr int kSensorCount = 3;
inline constexpr double kSensorSentinel = -1.0;

// Newline-terminated line. Throws ParseError for values the grammar cannot carry.
std::string encode_message(const WireMessage& msg);
// Accepts the line with or without its trailing newline. Throws ParseError.
WireMessage decode_message(std::string_view line);

struct MotorConfig {
  int steps_per_rev = 200;
  int microstepping = 8;
  double spool_diameter = 0.020;         // m
  std::vector<int> tendon_of_motor{0, 1, 2};

  void validate() const;  // throws RangeError
  int motor_count() const noexcept { return static_cast<int>(tendon_of_motor.size()); }
  double mm_per_step() const;
};

// One motor per tendon, in tendon order.
MotorConfig motors_for(const std::vector<actuation::TendonActuator>& actuators);

// Target steps per motor. Throws UnboundActuator when a motor names a missing
// tendon or an actuator has no motor.
std::vector<std::int64_t> factors_to_steps(const std::vector<actuation::TendonActuator>& actuators,
                                           const MotorConfig& motors);
double steps_to_factor(std::int64_t steps, double natural_length, const MotorConfig& motors);

// Stand-in for the motor controller. Optionally drives a simulated robot
// whose tendons follow the motor positions.
class MockDevice {
 public:
  explicit MockDevice(MotorConfig motors, std::shared_ptr<actuation::Robot> robot = nullptr);

  // Immediate replies to one inbound message.
  std::vector<WireMessage> receive(const WireMessage& msg);
  // Advances motors by dt seconds; returns the Acks of completed commands.
  std::vector<WireMessage> tick(double dt);

  const std::vector<std::int64_t>& current() const noexcept { return current_; }
  const std::vector<std::int64_t>& target() const noexcept { return target_; }
  bool idle() const noexcept;
  std::array<double, kSensorCount> sensors();

 private:
  void push_factors();

  MotorConfig motors_;
  std::shared_ptr<actuation::Robot> robot_;
  std::vector<std::int64_t> current_;
  std::vector<std::int64_t> target_;
  std::vector<std::int64_t> speed_;
  std::vector<double> carry_;  // fractional steps owed per motor
  std::vector<bool> pending_;
  bool dirty_ = false;
};

// A line-oriented duplex channel with its own clock.
class LineLink {
 public:
  virtual ~LineLink() = default;
  virtual void send_line(const std::string& line) = 0;
  // Next inbound line without its newline, or nullopt after `timeout`.
  virtual std::optional<std::string> read_line(std::chrono::milliseconds timeout) = 0;
  virtual std::chrono::system_clock::time_point now() const = 0;
};

// Talks to a MockDevice on a virtual clock, so sessions are reproducible.
class MockLink : public LineLink {
 public:
  explicit MockLink(std::shared_ptr<MockDevice> device,
                    std::chrono::milliseconds tick = std::chrono::milliseconds(10));

  void send_line(const std::string& line) override;
  std::optional<std::string> read_line(std::chrono::milliseconds timeout) override;
  std::chrono::system_clock::time_point now() const override;
  MockDevice& device() noexcept { return *device_; }

 private:
  std::shared_ptr<MockDevice> device_;
  std::chrono::milliseconds tick_;
  std::chrono::milliseconds elapsed_{0};
  std::deque<std::string> inbox_;
};

// Raw 8-N-1 serial port (or pseudo-terminal) on the wall clock.
class SerialLink : public LineLink {
 public:
  explicit SerialLink(const std::string& path, int baud = 115200);
  ~SerialLink() override;
  SerialLink(const SerialLink&) = delete;
  SerialLink& operator=(const SerialLink&) = delete;

  void send_line(const std::string& line) override;
  std::optional<std::string> read_line(std::chrono::milliseconds timeout) override;
  std::chrono::system_clock::time_point now() const override;

 private:
  int fd_ = -1;
  std::string buffer_;
};

// Serves a mock device over a file descriptor until EOF or `stop` is set.
void serve_device_fd(int fd, MockDevice& device, const volatile bool* stop = nullptr,
                     std::chrono::milliseconds tick = std::chrono::milliseconds(10));

enum class Direction { kTx, kRx };

struct TranscriptEntry {
  std::string timestamp;  // ISO-8601, UTC, milliseconds
  Direction dir = Direction::kTx;
  std::string line;       // without newline
  bool operator==(const TranscriptEntry&) const = default;
};

struct Transcript {
  std::vector<TranscriptEntry> entries;

  std::string to_text() const;
  static Transcript parse(std::string_view text);  // throws ParseError
  bool operator==(const Transcript&) const = default;
};

std::string iso8601(std::chrono::system_clock::time_point t);

struct Telemetry {
  double height_mm = kSensorSentinel;
  double x_mm = kSensorSentinel;
  double y_mm = kSensorSentinel;
};

struct SessionConfig {
  std::int64_t speed = 800;  // steps/s
  std::chrono::milliseconds timeout{5000};
};

// Host side of a device session. Every line crossing the link is logged.
class HilSession {
 public:
  HilSession(LineLink& link, MotorConfig motors, SessionConfig cfg = {});

  void home();
  // Sends one SetMotor per motor and waits for all Acks. Throws Timeout,
  // ParseError, or Error on a device error report.
  void move(const std::vector<std::int64_t>& steps);
  Telemetry query();

  const Transcript& transcript() const noexcept { return transcript_; }
  const MotorConfig& motors() const noexcept { return motors_; }

 private:
  void send(const WireMessage& msg);
  WireMessage receive();

  LineLink& link_;
  MotorConfig motors_;
  SessionConfig cfg_;
  Transcript transcript_;
};

// Moves to each factor set in turn and samples the sensors after each.
Transcript run_hil_session(LineLink& link, const std::vector<std::vector<double>>& commands,
                           const std::vector<actuation::TendonActuator>& actuators,
                           const MotorConfig& motors, const SessionConfig& cfg = {},
                           std::vector<Telemetry>* telemetry = nullptr);

// Resends every TX line of `recorded` and collects what the link answers.
Transcript replay(const Transcript& recorded, LineLink& link,
                  std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));

// Closed-loop plant over a device session. Pose comes from the tip offset
// sensors assuming constant curvature: angle = 2 atan2(offset, height).
class HilPlant : public actuation::Plant {
 public:
  HilPlant(HilSession& session, std::vector<actuation::TendonActuator> actuators,
           actuation::FeedforwardGeometry geometry);

  int tendon_count() const override { return static_cast<int>(actuators_.size()); }
  actuation::FeedforwardGeometry geometry(int segment) const override;
  std::vector<double> factors() const override;
  void apply(const std::vector<double>& factors) override;
  actuation::Pose measure(int segment) override;

 private:
  HilSession& session_;
  std::vector<actuation::TendonActuator> actuators_;
  actuation::FeedforwardGeometry geometry_;
};

}  // namespace tensiforge::bridge
