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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "tensiforge/actuation.hpp"

namespace tensiforge::serve {

// ---- WebSocket framing ------------------------------------------------------

inline constexpr int kOpContinuation = 0x0;
inline constexpr int kOpText = 0x1;
inline constexpr int kOpBinary = 0x2;
inline constexpr int kOpClose = 0x8;
inline constexpr int kOpPing = 0x9;
inline constexpr int kOpPong = 0xA;

// Sec-WebSocket-Accept for a client key.
std::string websocket_accept_key(std::string_view client_key);

struct WsFrame {
  bool fin = true;
  int opcode = kOpText;
  std::string payload;
};

// Clients must mask; servers must not.
std::string encode_ws_frame(std::string_view payload, int opcode = kOpText,
                            std::optional<std::uint32_t> mask = std::nullopt);

// Decodes the frame at the front of `buf`. Returns nullopt when more bytes
// are needed; sets `consumed` otherwise. Throws ParseError on bad frames.
std::optional<WsFrame> decode_ws_frame(std::string_view buf, std::size_t& consumed,
                                       std::size_t max_payload = 1 << 20);

// ---- JSON frames ------------------------------------------------------------

struct SetAngles {
  int segment = 0;
  double alpha = 0.0;
  double beta = 0.0;
};
struct SetFactor {
  int tendon = 0;
  double factor = 1.0;
};
struct Reset {};
struct Snapshot {};

using CommandKind = std::variant<SetAngles, SetFactor, Reset, Snapshot>;

struct CommandFrame {
  CommandKind kind;
  std::optional<std::int64_t> id;  // echoed back in the acknowledging frame
};

// Throws ParseError with a human-readable reason.
CommandFrame parse_command(std::string_view text);

std::string error_frame(std::string_view reason);

// ---- live session -----------------------------------------------------------

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  double fps = 30.0;
  std::filesystem::path assets_dir;  // empty serves the built-in page
};

// Owns the robot and its solver loop; streams StateFrames to /ws clients.
class SessionServer {
 public:
  SessionServer(actuation::Robot robot, ServeConfig cfg);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  // Binds and starts serving. Throws Error when the port cannot be bound.
  void start();
  void stop();
  int port() const noexcept { return port_; }
  std::size_t client_count() const;
  std::uint64_t frames_sent() const noexcept { return frames_sent_; }

 private:
  struct Client;
  struct Pending {
    std::shared_ptr<Client> from;
    std::string text;
  };

  void accept_loop();
  void handle_connection(int fd);
  void client_loop(const std::shared_ptr<Client>& client, std::string buffered);
  void solver_loop();
  void apply(const Pending& pending, std::vector<std::int64_t>& acks);
  std::string state_frame(const std::vector<std::int64_t>& acks) const;
  void broadcast(const std::string& text);
  void send_to(Client& client, const std::string& text);
  std::string page(const std::string& path, std::string& content_type) const;

  actuation::Robot robot_;
  std::vector<physics::Particle> rest_particles_;
  ServeConfig cfg_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> frames_sent_{0};
  std::thread accept_thread_;
  std::thread solver_thread_;

  mutable std::mutex clients_mu_;
  std::vector<std::shared_ptr<Client>> clients_;
  std::vector<std::thread> connection_threads_;

  std::mutex queue_mu_;
  std::deque<Pending> queue_;

  bool converged_ = false;
  int held_ = 0;
};

// Minimal blocking WebSocket client, enough for scripts and tests.
class WsClient {
 public:
  WsClient(const std::string& host, int port, const std::string& path = "/ws");
  ~WsClient();
  WsClient(const WsClient&) = delete;
  WsClient& operator=(const WsClient&) = delete;

  void send_text(std::string_view text);
  // Next text message, or nullopt on timeout or close.
  std::optional<std::string> recv_text(std::chrono::milliseconds timeout);
  void close();

 private:
  int fd_ = -1;
  std::string buffer_;
  std::uint32_t mask_seed_ = 0x5eed1234u;
};

// Plain HTTP GET returning (status, body). Throws Error on connection failure.
std::pair<int, std::string> http_get(const std::string& host, int port, const std::string& path);

}  // namespace tensiforge::serve
