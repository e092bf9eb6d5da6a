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

#include "tensiforge/bridge.hpp"

#include <fcntl.h>
#include <poll.h>
#include <termios.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <ctime>
#include <set>

namespace tensiforge::bridge {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Printable form of a possibly binary line for error messages.
std::string quote(std::string_view raw) {
  std::string out = "\"";
  for (unsigned char c : raw.substr(0, 64)) {
    if (c >= 0x20 && c < 0x7f && c != '"' && c != '\\') {
      out.push_back(static_cast<char>(c));
    } else {
      char buf[8];
      std::snprintf(buf, sizeof buf, "\\x%02x", c);
      out += buf;
    }
  }
  if (raw.size() > 64) out += "...";
  return out + "\"";
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t sp = line.find(' ', start);
    out.push_back(line.substr(start, sp == std::string_view::npos ? std::string_view::npos : sp - start));
    if (sp == std::string_view::npos) break;
    start = sp + 1;
  }
  return out;
}

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  if (s.empty() || s.front() == '+') return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// -?digits.dd
bool parse_centi(std::string_view s, double& out) {
  std::size_t i = 0;
  if (i < s.size() && s[i] == '-') ++i;
  const std::size_t digits_begin = i;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
  if (i == digits_begin || i - digits_begin > 12) return false;
  if (i + 3 != s.size() || s[i] != '.') return false;
  if (s[i + 1] < '0' || s[i + 1] > '9' || s[i + 2] < '0' || s[i + 2] > '9') return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_centi(double v) {
  if (!std::isfinite(v) || std::abs(v) >= 1e12) {
    throw ParseError("sensor value " + std::to_string(v) + " cannot be encoded");
  }
  double r = std::round(v * 100.0) / 100.0;
  if (r == 0.0) r = 0.0;  // no "-0.00"
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", r);
  return buf;
}

double round_centi(double v) {
  const double r = std::round(v * 100.0) / 100.0;
  return r == 0.0 ? 0.0 : r;
}

std::string strip_newline(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

std::chrono::system_clock::time_point virtual_epoch() {
  // 2026-01-01T00:00:00Z
  return std::chrono::system_clock::from_time_t(static_cast<std::time_t>(1767225600));
}

speed_t baud_constant(int baud) {
  switch (baud) {
    case 9600: return B9600;
    case 19200: return B19200;
    case 38400: return B38400;
    case 57600: return B57600;
    case 115200: return B115200;
    case 230400: return B230400;
    default: throw RangeError("unsupported baud rate " + std::to_string(baud));
  }
}

bool write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

std::string encode_message(const WireMessage& msg) {
  struct Encoder {
    std::string operator()(const SetMotor& m) const {
      if (m.motor < 0) throw ParseError("motor id must be >= 0");
      if (m.speed <= 0) throw ParseError("speed must be > 0");
      return "M " + std::to_string(m.motor) + " " + std::to_string(m.steps) + " " +
             std::to_string(m.speed) + "\n";
    }
    std::string operator()(const Home&) const { return "H\n"; }
    std::string operator()(const QuerySensors&) const { return "Q\n"; }
    std::string operator()(const Ack& m) const {
      if (m.id < 0) throw ParseError("ack id must be >= 0");
      return "A " + std::to_string(m.id) + "\n";
    }
    std::string operator()(const SensorReport& m) const {
      if (m.sensor < 0) throw ParseError("sensor id must be >= 0");
      return "S " + std::to_string(m.sensor) + " " + format_centi(m.value_mm) + "\n";
    }
    std::string operator()(const DeviceError& m) const { return "E " + std::to_string(m.code) + "\n"; }
  };
  return std::visit(Encoder{}, msg);
}

WireMessage decode_message(std::string_view line) {
  const std::string_view raw = line;
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  const auto fail = [&](const std::string& why) -> ParseError {
    return ParseError(why + " in line " + quote(raw));
  };
  if (line.empty()) throw fail("empty message");
  if (line.find('\n') != std::string_view::npos) throw fail("embedded newline");

  const auto fields = split_fields(line);
  const std::string_view tag = fields[0];
  const auto arity = [&](std::size_t n) {
    if (fields.size() != n) {
      throw fail("tag " + std::string(tag) + " takes " + std::to_string(n - 1) + " field(s), got " +
                 std::to_string(fields.size() - 1));
    }
  };
  const auto id_field = [&](std::size_t k, const char* what) {
    int v = 0;
    if (!parse_int(fields[k], v) || v < 0) throw fail(std::string("bad ") + what);
    return v;
  };

  if (tag == "M") {
    arity(4);
    SetMotor m;
    m.motor = id_field(1, "motor id");
    if (!parse_int(fields[2], m.steps)) throw fail("bad step count");
    if (!parse_int(fields[3], m.speed) || m.speed <= 0) throw fail("bad speed");
    return m;
  }
  if (tag == "H") {
    arity(1);
    return Home{};
  }
  if (tag == "Q") {
    arity(1);
    return QuerySensors{};
  }
  if (tag == "A") {
    arity(2);
    return Ack{id_field(1, "ack id")};
  }
  if (tag == "S") {
    arity(3);
    SensorReport m;
    m.sensor = id_field(1, "sensor id");
    if (!parse_centi(fields[2], m.value_mm)) throw fail("bad sensor value");
    return m;
  }
  if (tag == "E") {
    arity(2);
    DeviceError m;
    if (!parse_int(fields[1], m.code)) throw fail("bad error code");
    return m;
  }
  throw fail("unknown tag");
}

void MotorConfig::validate() const {
  if (steps_per_rev <= 0 || microstepping <= 0) throw RangeError("steps per rev and microstepping must be > 0");
  if (!(spool_diameter > 0.0) || !std::isfinite(spool_diameter)) throw RangeError("spool diameter must be > 0");
  if (tendon_of_motor.empty()) throw RangeError("at least one motor is required");
}

double MotorConfig::mm_per_step() const {
  validate();
  return kPi * spool_diameter * 1000.0 / static_cast<double>(steps_per_rev * microstepping);
}

MotorConfig motors_for(const std::vector<actuation::TendonActuator>& actuators) {
  MotorConfig out;
  out.tendon_of_motor.clear();
  for (const auto& a : actuators) out.tendon_of_motor.push_back(a.tendon_id);
  return out;
}

std::vector<std::int64_t> factors_to_steps(const std::vector<actuation::TendonActuator>& actuators,
                                           const MotorConfig& motors) {
  const double mm = motors.mm_per_step();
  std::vector<std::int64_t> out;
  out.reserve(motors.tendon_of_motor.size());
  for (int tendon : motors.tendon_of_motor) {
    const auto it = std::find_if(actuators.begin(), actuators.end(),
                                 [&](const auto& a) { return a.tendon_id == tendon; });
    if (it == actuators.end()) {
      throw UnboundActuator("motor bound to tendon " + std::to_string(tendon) + ", which does not exist");
    }
    const double delta_mm = (1.0 - it->length_factor) * it->natural_length * 1000.0;
    out.push_back(static_cast<std::int64_t>(std::llround(delta_mm / mm)));
  }
  for (const auto& a : actuators) {
    if (std::find(motors.tendon_of_motor.begin(), motors.tendon_of_motor.end(), a.tendon_id) ==
        motors.tendon_of_motor.end()) {
      throw UnboundActuator("tendon " + std::to_string(a.tendon_id) + " has no motor");
    }
  }
  return out;
}

double steps_to_factor(std::int64_t steps, double natural_length, const MotorConfig& motors) {
  return 1.0 - static_cast<double>(steps) * motors.mm_per_step() / (natural_length * 1000.0);
}

MockDevice::MockDevice(MotorConfig motors, std::shared_ptr<actuation::Robot> robot)
    : motors_(std::move(motors)), robot_(std::move(robot)) {
  motors_.validate();
  const std::size_t n = motors_.tendon_of_motor.size();
  current_.assign(n, 0);
  target_.assign(n, 0);
  speed_.assign(n, 1);
  carry_.assign(n, 0.0);
  pending_.assign(n, false);
  if (robot_) factors_to_steps(robot_->actuators(), motors_);  // binding check
}

bool MockDevice::idle() const noexcept {
  return std::none_of(pending_.begin(), pending_.end(), [](bool p) { return p; });
}

std::vector<WireMessage> MockDevice::receive(const WireMessage& msg) {
  std::vector<WireMessage> out;
  if (const auto* m = std::get_if<SetMotor>(&msg)) {
    if (m->motor >= motors_.motor_count()) {
      out.push_back(DeviceError{kErrUnknownMotor});
      return out;
    }
    if (robot_) {
      const int tendon = motors_.tendon_of_motor[m->motor];
      for (const auto& a : robot_->actuators()) {
        if (a.tendon_id == tendon && !robot_->bounds().contains(steps_to_factor(m->steps, a.natural_length, motors_))) {
          out.push_back(DeviceError{kErrOutOfRange});
          return out;
        }
      }
    }
    target_[m->motor] = m->steps;
    speed_[m->motor] = m->speed;
    carry_[m->motor] = 0.0;
    pending_[m->motor] = true;
  } else if (std::holds_alternative<Home>(msg)) {
    std::fill(current_.begin(), current_.end(), 0);
    std::fill(target_.begin(), target_.end(), 0);
    std::fill(carry_.begin(), carry_.end(), 0.0);
    std::fill(pending_.begin(), pending_.end(), false);
    push_factors();
  } else if (std::holds_alternative<QuerySensors>(msg)) {
    const auto values = sensors();
    for (int s = 0; s < kSensorCount; ++s) out.push_back(SensorReport{s, round_centi(values[s])});
  } else {
    out.push_back(DeviceError{kErrMalformed});
  }
  return out;
}

std::vector<WireMessage> MockDevice::tick(double dt) {
  std::vector<WireMessage> out;
  bool moved = false;
  for (std::size_t k = 0; k < current_.size(); ++k) {
    if (!pending_[k]) continue;
    const std::int64_t remaining = target_[k] - current_[k];
    if (remaining != 0) {
      const double allowance = static_cast<double>(speed_[k]) * dt + carry_[k];
      const auto budget = static_cast<std::int64_t>(std::floor(allowance));
      carry_[k] = allowance - static_cast<double>(budget);
      const std::int64_t move = std::min<std::int64_t>(budget, std::llabs(remaining));
      current_[k] += remaining > 0 ? move : -move;
      moved = moved || move != 0;
    }
    if (current_[k] == target_[k]) {
      pending_[k] = false;
      carry_[k] = 0.0;
      out.push_back(Ack{static_cast<int>(k)});
    }
  }
  if (moved) push_factors();
  return out;
}

void MockDevice::push_factors() {
  if (!robot_) return;
  auto factors = robot_->factors();
  const auto& acts = robot_->actuators();
  for (std::size_t k = 0; k < current_.size(); ++k) {
    for (std::size_t a = 0; a < acts.size(); ++a) {
      if (acts[a].tendon_id == motors_.tendon_of_motor[k]) {
        factors[a] = steps_to_factor(current_[k], acts[a].natural_length, motors_);
      }
    }
  }
  robot_->set_factors(factors);
  dirty_ = true;
}

std::array<double, kSensorCount> MockDevice::sensors() {
  std::array<double, kSensorCount> out{kSensorSentinel, kSensorSentinel, kSensorSentinel};
  if (!robot_ || robot_->sim().plates.empty()) return out;
  if (dirty_) {
    robot_->settle();
    dirty_ = false;
  }
  const Vec3 tip = physics::plate_centroid(robot_->sim(), robot_->sim().plates.back());
  out[kSensorHeight] = tip.z() * 1000.0;
  out[kSensorX] = tip.x() * 1000.0;
  out[kSensorY] = tip.y() * 1000.0;
  return out;
}

MockLink::MockLink(std::shared_ptr<MockDevice> device, std::chrono::milliseconds tick)
    : device_(std::move(device)), tick_(tick) {
  if (!device_) throw RangeError("mock link needs a device");
  if (tick_.count() <= 0) throw RangeError("mock tick must be > 0 ms");
}

void MockLink::send_line(const std::string& line) {
  std::vector<WireMessage> replies;
  try {
    replies = device_->receive(decode_message(line));
  } catch (const ParseError&) {
    replies.push_back(DeviceError{kErrMalformed});
  }
  for (const auto& r : replies) inbox_.push_back(strip_newline(encode_message(r)));
}

std::optional<std::string> MockLink::read_line(std::chrono::milliseconds timeout) {
  std::chrono::milliseconds waited{0};
  while (inbox_.empty() && waited < timeout) {
    for (const auto& r : device_->tick(std::chrono::duration<double>(tick_).count())) {
      inbox_.push_back(strip_newline(encode_message(r)));
    }
    elapsed_ += tick_;
    waited += tick_;
  }
  if (inbox_.empty()) return std::nullopt;
  std::string line = std::move(inbox_.front());
  inbox_.pop_front();
  return line;
}

std::chrono::system_clock::time_point MockLink::now() const {
  return virtual_epoch() + std::chrono::duration_cast<std::chrono::system_clock::duration>(elapsed_);
}

SerialLink::SerialLink(const std::string& path, int baud) {
  const speed_t speed = baud_constant(baud);
  fd_ = ::open(path.c_str(), O_RDWR | O_NOCTTY | O_CLOEXEC);
  if (fd_ < 0) throw DeviceFault("cannot open " + path + ": " + std::strerror(errno));
  termios tio{};
  if (::tcgetattr(fd_, &tio) == 0) {
    ::cfmakeraw(&tio);
    tio.c_cflag |= CLOCAL | CREAD;
    tio.c_cflag &= ~(PARENB | CSTOPB | CSIZE);
    tio.c_cflag |= CS8;
    ::cfsetispeed(&tio, speed);
    ::cfsetospeed(&tio, speed);
    ::tcsetattr(fd_, TCSANOW, &tio);
  }
}

SerialLink::~SerialLink() {
  if (fd_ >= 0) ::close(fd_);
}

void SerialLink::send_line(const std::string& line) {
  std::string out = line;
  if (out.empty() || out.back() != '\n') out.push_back('\n');
  if (!write_all(fd_, out)) throw DeviceFault(std::string("serial write failed: ") + std::strerror(errno));
}

std::optional<std::string> SerialLink::read_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = strip_newline(buffer_.substr(0, nl));
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    pollfd pfd{fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc < 0 && errno == EINTR) continue;
    if (rc <= 0) return std::nullopt;
    char buf[256];
    const ssize_t n = ::read(fd_, buf, sizeof buf);
    if (n > 0) {
      buffer_.append(buf, static_cast<std::size_t>(n));
    } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
      throw DeviceFault("serial port closed");
    }
  }
}

std::chrono::system_clock::time_point SerialLink::now() const { return std::chrono::system_clock::now(); }

void serve_device_fd(int fd, MockDevice& device, const volatile bool* stop,
                     std::chrono::milliseconds tick) {
  std::string buffer;
  auto last = std::chrono::steady_clock::now();
  const auto reply = [&](const std::vector<WireMessage>& msgs) {
    for (const auto& m : msgs) write_all(fd, encode_message(m));
  };
  while (!(stop && *stop)) {
    pollfd pfd{fd, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(tick.count()));
    if (rc > 0 && (pfd.revents & POLLIN)) {
      char buf[256];
      const ssize_t n = ::read(fd, buf, sizeof buf);
      if (n == 0) return;
      if (n < 0 && errno != EINTR && errno != EAGAIN && errno != EIO) return;
      if (n > 0) buffer.append(buf, static_cast<std::size_t>(n));
      for (auto nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n')) {
        const std::string line = buffer.substr(0, nl + 1);
        buffer.erase(0, nl + 1);
        try {
          reply(device.receive(decode_message(line)));
        } catch (const ParseError& e) {
          spdlog::debug("device: {}", e.what());
          reply({DeviceError{kErrMalformed}});
        }
      }
    } else if (rc > 0 && (pfd.revents & (POLLHUP | POLLERR))) {
      // Nobody on the other end yet; keep the port open.
      ::usleep(static_cast<useconds_t>(tick.count()) * 1000);
    }
    const auto now = std::chrono::steady_clock::now();
    reply(device.tick(std::chrono::duration<double>(now - last).count()));
    last = now;
  }
}

std::string iso8601(std::chrono::system_clock::time_point t) {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  ::gmtime_r(&secs, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms % 1000));
  return out;
}

std::string Transcript::to_text() const {
  std::string out;
  for (const auto& e : entries) {
    out += e.timestamp;
    out += e.dir == Direction::kTx ? " TX " : " RX ";
    out += e.line;
    out += '\n';
  }
  return out;
}

Transcript Transcript::parse(std::string_view text) {
  Transcript out;
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto s1 = line.find(' ');
    const auto s2 = s1 == std::string_view::npos ? s1 : line.find(' ', s1 + 1);
    if (s2 == std::string_view::npos) {
      throw ParseError("transcript line " + std::to_string(lineno) + ": expected '<time> <TX|RX> <line>'");
    }
    TranscriptEntry e;
    e.timestamp = std::string(line.substr(0, s1));
    const auto dir = line.substr(s1 + 1, s2 - s1 - 1);
    if (dir == "TX") {
      e.dir = Direction::kTx;
    } else if (dir == "RX") {
      e.dir = Direction::kRx;
    } else {
      throw ParseError("transcript line " + std::to_string(lineno) + ": direction must be TX or RX");
    }
    e.line = std::string(line.substr(s2 + 1));
    out.entries.push_back(std::move(e));
  }
  return out;
}

HilSession::HilSession(LineLink& link, MotorConfig motors, SessionConfig cfg)
    : link_(link), motors_(std::move(motors)), cfg_(cfg) {
  motors_.validate();
  if (cfg_.speed <= 0) throw RangeError("motor speed must be > 0");
}

void HilSession::send(const WireMessage& msg) {
  const std::string line = encode_message(msg);
  transcript_.entries.push_back({iso8601(link_.now()), Direction::kTx, strip_newline(line)});
  link_.send_line(line);
}

WireMessage HilSession::receive() {
  auto line = link_.read_line(cfg_.timeout);
  if (!line) {
    throw Timeout("no reply from device within " + std::to_string(cfg_.timeout.count()) + " ms");
  }
  transcript_.entries.push_back({iso8601(link_.now()), Direction::kRx, *line});
  WireMessage msg = decode_message(*line);
  if (const auto* err = std::get_if<DeviceError>(&msg)) {
    throw DeviceFault("device reported error " + std::to_string(err->code));
  }
  return msg;
}

void HilSession::home() { send(Home{}); }

void HilSession::move(const std::vector<std::int64_t>& steps) {
  if (static_cast<int>(steps.size()) != motors_.motor_count()) {
    throw RangeError("expected " + std::to_string(motors_.motor_count()) + " motor targets");
  }
  std::set<int> waiting;
  for (int k = 0; k < motors_.motor_count(); ++k) {
    send(SetMotor{k, steps[k], cfg_.speed});
    waiting.insert(k);
  }
  while (!waiting.empty()) {
    const WireMessage msg = receive();
    if (const auto* ack = std::get_if<Ack>(&msg)) waiting.erase(ack->id);
  }
}

Telemetry HilSession::query() {
  send(QuerySensors{});
  std::array<std::optional<double>, kSensorCount> seen;
  int missing = kSensorCount;
  while (missing > 0) {
    const WireMessage msg = receive();
    if (const auto* s = std::get_if<SensorReport>(&msg)) {
      if (s->sensor < kSensorCount && !seen[s->sensor]) {
        seen[s->sensor] = s->value_mm;
        --missing;
      }
    }
  }
  return {*seen[kSensorHeight], *seen[kSensorX], *seen[kSensorY]};
}

Transcript run_hil_session(LineLink& link, const std::vector<std::vector<double>>& commands,
                           const std::vector<actuation::TendonActuator>& actuators,
                           const MotorConfig& motors, const SessionConfig& cfg,
                           std::vector<Telemetry>* telemetry) {
  HilSession session(link, motors, cfg);
  auto acts = actuators;
  for (const auto& factors : commands) {
    if (factors.size() != acts.size()) {
      throw RangeError("command has " + std::to_string(factors.size()) + " factors, expected " +
                       std::to_string(acts.size()));
    }
    for (std::size_t k = 0; k < acts.size(); ++k) acts[k].length_factor = factors[k];
    session.move(factors_to_steps(acts, motors));
    const Telemetry t = session.query();
    if (telemetry) telemetry->push_back(t);
  }
  return session.transcript();
}

Transcript replay(const Transcript& recorded, LineLink& link, std::chrono::milliseconds timeout) {
  Transcript out;
  for (const auto& e : recorded.entries) {
    if (e.dir == Direction::kTx) {
      out.entries.push_back({iso8601(link.now()), Direction::kTx, e.line});
      link.send_line(e.line + "\n");
    } else {
      auto line = link.read_line(timeout);
      if (!line) break;
      out.entries.push_back({iso8601(link.now()), Direction::kRx, *line});
    }
  }
  return out;
}

HilPlant::HilPlant(HilSession& session, std::vector<actuation::TendonActuator> actuators,
                   actuation::FeedforwardGeometry geometry)
    : session_(session), actuators_(std::move(actuators)), geometry_(std::move(geometry)) {}

actuation::FeedforwardGeometry HilPlant::geometry(int) const { return geometry_; }

std::vector<double> HilPlant::factors() const {
  std::vector<double> out;
  for (const auto& a : actuators_) out.push_back(a.length_factor);
  return out;
}

void HilPlant::apply(const std::vector<double>& factors) {
  if (factors.size() != actuators_.size()) throw RangeError("factor count does not match tendons");
  for (std::size_t k = 0; k < factors.size(); ++k) actuators_[k].length_factor = factors[k];
  session_.move(factors_to_steps(actuators_, session_.motors()));
}

actuation::Pose HilPlant::measure(int) {
  const Telemetry t = session_.query();
  if (!(t.height_mm > 0.0)) throw DeviceFault("device reported no tip height");
  return {2.0 * std::atan2(t.x_mm, t.height_mm), 2.0 * std::atan2(t.y_mm, t.height_mm)};
}

}  // namespace tensiforge::bridge
