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

#include "tensiforge/serve.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/evp.h>
#include <openssl/sha.h>
#include <spdlog/spdlog.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tensiforge/export.hpp"

namespace tensiforge::serve {

using nlohmann::json;

namespace {

constexpr std::string_view kWsGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
constexpr std::size_t kMaxHeader = 16 * 1024;

constexpr std::string_view kIndexPage = R"html(<!doctype html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>TensiForge session</title>
<style>
body { font-family: sans-serif; margin: 1.5rem; }
pre { background: #f4f4f4; padding: 0.75rem; }
#status.down { color: #b00; }
</style>
</head>
<body>
<h1>TensiForge live session</h1>
<p id="status">connecting...</p>
<pre id="state"></pre>
<script>
const status = document.getElementById('status');
const view = document.getElementById('state');
let last = -1;
function connect() {
  const ws = new WebSocket(`ws://${location.host}/ws`);
  ws.onopen = () => { status.textContent = 'connected'; status.className = ''; };
  ws.onclose = () => { status.textContent = 'disconnected'; status.className = 'down'; setTimeout(connect, 1000); };
  ws.onmessage = (ev) => {
    const f = JSON.parse(ev.data);
    if (f.type !== 'state' || f.time < last) return;
    last = f.time;
    view.textContent = JSON.stringify({time: f.time, converged: f.converged, factors: f.factors,
                                       poses: f.poses, residuals: f.residuals}, null, 2);
  };
}
connect();
</script>
</body>
</html>
)html";

std::string base64(const unsigned char* data, std::size_t n) {
  std::string out(4 * ((n + 2) / 3) + 1, '\0');
  const int len = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data, static_cast<int>(n));
  out.resize(static_cast<std::size_t>(len));
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

// Reads until the blank line ending an HTTP head. Leftover bytes stay in `rest`.
std::optional<std::string> read_head(int fd, std::string& rest, std::chrono::milliseconds timeout) {
  std::string buf;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    const auto end = buf.find("\r\n\r\n");
    if (end != std::string::npos) {
      rest = buf.substr(end + 4);
      buf.resize(end);
      return buf;
    }
    if (buf.size() > kMaxHeader) return std::nullopt;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    pollfd pfd{fd, POLLIN, 0};
    if (::poll(&pfd, 1, static_cast<int>(left.count())) <= 0) return std::nullopt;
    char tmp[2048];
    const ssize_t n = ::recv(fd, tmp, sizeof tmp, 0);
    if (n <= 0) return std::nullopt;
    buf.append(tmp, static_cast<std::size_t>(n));
  }
}

struct HttpHead {
  std::string method;
  std::string path;
  std::string status_line;
  std::vector<std::pair<std::string, std::string>> headers;  // lower-cased names

  std::string header(std::string_view name) const {
    for (const auto& [k, v] : headers) {
      if (k == name) return v;
    }
    return {};
  }
};

HttpHead parse_head(const std::string& text) {
  HttpHead head;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  head.status_line = trim(line);
  std::istringstream first(head.status_line);
  first >> head.method >> head.path;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    head.headers.emplace_back(lower(trim(std::string_view(line).substr(0, colon))),
                              trim(std::string_view(line).substr(colon + 1)));
  }
  return head;
}

std::string http_response(int status, std::string_view reason, std::string_view type, std::string_view body) {
  std::string out = "HTTP/1.1 " + std::to_string(status) + " " + std::string(reason) + "\r\n";
  out += "Content-Type: " + std::string(type) + "\r\n";
  out += "Content-Length: " + std::to_string(body.size()) + "\r\n";
  out += "Cache-Control: no-store\r\nConnection: close\r\n\r\n";
  out += body;
  return out;
}

std::string content_type_for(const std::filesystem::path& p) {
  const std::string ext = lower(p.extension().string());
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

int connect_tcp(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || !res) {
    throw Error(ErrorFamily::kInput, "cannot resolve " + host);
  }
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw Error(ErrorFamily::kInput, "cannot connect to " + host + ":" + service);
  return fd;
}

double number_field(const json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(std::string("missing field '") + key + "'");
  if (!it->is_number()) throw ParseError(std::string("field '") + key + "' must be a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw ParseError(std::string("field '") + key + "' must be finite");
  return v;
}

int int_field(const json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(std::string("missing field '") + key + "'");
  if (!it->is_number_integer()) throw ParseError(std::string("field '") + key + "' must be an integer");
  const auto v = it->get<std::int64_t>();
  if (v < 0 || v > 1'000'000) throw ParseError(std::string("field '") + key + "' out of range");
  return static_cast<int>(v);
}

}  // namespace

std::string websocket_accept_key(std::string_view client_key) {
  const std::string joined = std::string(client_key) + std::string(kWsGuid);
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(joined.data()), joined.size(), digest);
  return base64(digest, sizeof digest);
}

std::string encode_ws_frame(std::string_view payload, int opcode, std::optional<std::uint32_t> mask) {
  std::string out;
  out.push_back(static_cast<char>(0x80 | (opcode & 0x0f)));
  const unsigned char mask_bit = mask ? 0x80 : 0x00;
  const std::size_t n = payload.size();
  if (n < 126) {
    out.push_back(static_cast<char>(mask_bit | n));
  } else if (n <= 0xffff) {
    out.push_back(static_cast<char>(mask_bit | 126));
    out.push_back(static_cast<char>((n >> 8) & 0xff));
    out.push_back(static_cast<char>(n & 0xff));
  } else {
    out.push_back(static_cast<char>(mask_bit | 127));
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<char>((static_cast<std::uint64_t>(n) >> shift) & 0xff));
  }
  if (!mask) {
    out.append(payload);
    return out;
  }
  const unsigned char key[4] = {static_cast<unsigned char>(*mask >> 24), static_cast<unsigned char>(*mask >> 16),
                                static_cast<unsigned char>(*mask >> 8), static_cast<unsigned char>(*mask)};
  out.append(reinterpret_cast<const char*>(key), 4);
  for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<char>(payload[i] ^ key[i % 4]));
  return out;
}

std::optional<WsFrame> decode_ws_frame(std::string_view buf, std::size_t& consumed, std::size_t max_payload) {
  if (buf.size() < 2) return std::nullopt;
  const auto b0 = static_cast<unsigned char>(buf[0]);
  const auto b1 = static_cast<unsigned char>(buf[1]);
  if (b0 & 0x70) throw ParseError("websocket frame uses reserved bits");
  WsFrame frame;
  frame.fin = (b0 & 0x80) != 0;
  frame.opcode = b0 & 0x0f;
  const bool masked = (b1 & 0x80) != 0;
  std::uint64_t len = b1 & 0x7f;
  std::size_t pos = 2;
  if (len == 126) {
    if (buf.size() < 4) return std::nullopt;
    len = (static_cast<std::uint64_t>(static_cast<unsigned char>(buf[2])) << 8) | static_cast<unsigned char>(buf[3]);
    pos = 4;
  } else if (len == 127) {
    if (buf.size() < 10) return std::nullopt;
    len = 0;
    for (int i = 0; i < 8; ++i) len = (len << 8) | static_cast<unsigned char>(buf[2 + i]);
    pos = 10;
  }
  if (len > max_payload) throw ParseError("websocket frame of " + std::to_string(len) + " bytes is too large");
  if (frame.opcode >= 0x8 && (len > 125 || !frame.fin)) throw ParseError("malformed websocket control frame");
  unsigned char key[4] = {0, 0, 0, 0};
  if (masked) {
    if (buf.size() < pos + 4) return std::nullopt;
    std::memcpy(key, buf.data() + pos, 4);
    pos += 4;
  }
  if (buf.size() < pos + len) return std::nullopt;
  frame.payload.assign(buf.data() + pos, static_cast<std::size_t>(len));
  if (masked) {
    for (std::size_t i = 0; i < frame.payload.size(); ++i) frame.payload[i] = static_cast<char>(frame.payload[i] ^ key[i % 4]);
  }
  consumed = pos + static_cast<std::size_t>(len);
  return frame;
}

CommandFrame parse_command(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error&) {
    throw ParseError("command is not valid JSON");
  }
  if (!doc.is_object()) throw ParseError("command must be a JSON object");
  const auto type_it = doc.find("type");
  if (type_it == doc.end() || !type_it->is_string()) throw ParseError("command needs a string 'type'");
  const std::string type = type_it->get<std::string>();
  CommandFrame out;
  if (const auto id = doc.find("id"); id != doc.end()) {
    if (!id->is_number_integer()) throw ParseError("field 'id' must be an integer");
    out.id = id->get<std::int64_t>();
  }
  if (type == "set_angles") {
    out.kind = SetAngles{int_field(doc, "segment"), number_field(doc, "alpha"), number_field(doc, "beta")};
  } else if (type == "set_factor") {
    out.kind = SetFactor{int_field(doc, "tendon"), number_field(doc, "factor")};
  } else if (type == "reset") {
    out.kind = Reset{};
  } else if (type == "snapshot") {
    out.kind = Snapshot{};
  } else {
    throw ParseError("unknown command type '" + type + "'");
  }
  return out;
}

std::string error_frame(std::string_view reason) {
  return json{{"type", "error"}, {"reason", reason}}.dump();
}

struct SessionServer::Client {
  int fd = -1;
  std::mutex send_mu;
  std::atomic<bool> alive{true};
};

SessionServer::SessionServer(actuation::Robot robot, ServeConfig cfg)
    : robot_(std::move(robot)), cfg_(std::move(cfg)) {
  if (!(cfg_.fps > 0.0) || cfg_.fps > 1000.0) throw RangeError("frame rate must be in (0, 1000]");
  if (cfg_.port < 0 || cfg_.port > 65535) throw RangeError("port must be in [0, 65535]");
  rest_particles_ = robot_.sim().particles;
}

SessionServer::~SessionServer() { stop(); }

void SessionServer::start() {
  if (running_) return;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw Error(ErrorFamily::kInput, std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(cfg_.port));
  if (::inet_pton(AF_INET, cfg_.host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw RangeError("host must be an IPv4 address, got " + cfg_.host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(ErrorFamily::kInput, "cannot listen on " + cfg_.host + ":" + std::to_string(cfg_.port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  solver_thread_ = std::thread([this] { solver_loop(); });
  accept_thread_ = std::thread([this] { accept_loop(); });
  spdlog::info("serving on http://{}:{}/ (state stream at /ws)", cfg_.host, port_);
}

void SessionServer::stop() {
  if (!running_.exchange(false)) return;
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
  {
    std::lock_guard lock(clients_mu_);
    for (auto& c : clients_) ::shutdown(c->fd, SHUT_RDWR);
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  if (solver_thread_.joinable()) solver_thread_.join();
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(clients_mu_);
    threads.swap(connection_threads_);
  }
  for (auto& t : threads) {
    if (t.joinable()) t.join();
  }
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
}

std::size_t SessionServer::client_count() const {
  std::lock_guard lock(clients_mu_);
  return static_cast<std::size_t>(std::count_if(clients_.begin(), clients_.end(),
                                                [](const auto& c) { return c->alive.load(); }));
}

void SessionServer::accept_loop() {
  while (running_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, 100);
    if (rc <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    timeval tv{2, 0};
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
    std::lock_guard lock(clients_mu_);
    connection_threads_.emplace_back([this, fd] { handle_connection(fd); });
  }
}

std::string SessionServer::page(const std::string& path, std::string& content_type) const {
  std::string clean = path.substr(0, path.find('?'));
  if (clean == "/") clean = "/index.html";
  if (!cfg_.assets_dir.empty()) {
    if (clean.find("..") != std::string::npos) return {};
    const auto file = cfg_.assets_dir / clean.substr(1);
    std::ifstream in(file, std::ios::binary);
    if (in) {
      content_type = content_type_for(file);
      return std::string(std::istreambuf_iterator<char>(in), {});
    }
  }
  if (clean == "/index.html") {
    content_type = "text/html; charset=utf-8";
    return std::string(kIndexPage);
  }
  return {};
}

void SessionServer::handle_connection(int fd) {
  std::string rest;
  const auto head_text = read_head(fd, rest, std::chrono::milliseconds(5000));
  if (!head_text) {
    ::close(fd);
    return;
  }
  const HttpHead head = parse_head(*head_text);
  const std::string path = head.path.substr(0, head.path.find('?'));
  if (path == "/ws") {
    const std::string key = head.header("sec-websocket-key");
    if (head.method != "GET" || lower(head.header("upgrade")) != "websocket" || key.empty()) {
      send_all(fd, http_response(400, "Bad Request", "text/plain", "websocket upgrade required\n"));
      ::close(fd);
      return;
    }
    const std::string reply = "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                              "Sec-WebSocket-Accept: " + websocket_accept_key(key) + "\r\n\r\n";
    if (!send_all(fd, reply)) {
      ::close(fd);
      return;
    }
    auto client = std::make_shared<Client>();
    client->fd = fd;
    {
      std::lock_guard lock(clients_mu_);
      clients_.push_back(client);
    }
    client_loop(client, std::move(rest));
    {
      std::lock_guard lock(clients_mu_);
      clients_.erase(std::remove(clients_.begin(), clients_.end(), client), clients_.end());
    }
    {
      std::lock_guard lock(client->send_mu);
      client->alive = false;
      ::close(fd);
    }
    return;
  }
  if (head.method != "GET" && head.method != "HEAD") {
    send_all(fd, http_response(405, "Method Not Allowed", "text/plain", "only GET is supported\n"));
  } else {
    std::string type;
    const std::string body = page(path, type);
    if (body.empty()) {
      send_all(fd, http_response(404, "Not Found", "text/plain", "not found\n"));
    } else {
      send_all(fd, http_response(200, "OK", type, head.method == "HEAD" ? std::string_view{} : body));
    }
  }
  ::shutdown(fd, SHUT_WR);
  ::close(fd);
}

void SessionServer::client_loop(const std::shared_ptr<Client>& client, std::string buffer) {
  std::string message;
  int message_op = -1;
  while (running_ && client->alive) {
    std::size_t used = 0;
    std::optional<WsFrame> frame;
    try {
      frame = decode_ws_frame(buffer, used);
    } catch (const ParseError& e) {
      spdlog::debug("closing client: {}", e.what());
      return;
    }
    if (!frame) {
      pollfd pfd{client->fd, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, 100);
      if (rc == 0) continue;
      if (rc < 0 && errno == EINTR) continue;
      char tmp[4096];
      const ssize_t n = rc > 0 ? ::recv(client->fd, tmp, sizeof tmp, 0) : -1;
      if (n <= 0) return;
      buffer.append(tmp, static_cast<std::size_t>(n));
      continue;
    }
    buffer.erase(0, used);
    switch (frame->opcode) {
      case kOpClose: {
        std::lock_guard lock(client->send_mu);
        send_all(client->fd, encode_ws_frame(frame->payload.substr(0, 2), kOpClose));
        return;
      }
      case kOpPing: {
        std::lock_guard lock(client->send_mu);
        send_all(client->fd, encode_ws_frame(frame->payload, kOpPong));
        break;
      }
      case kOpPong:
        break;
      case kOpText:
      case kOpBinary:
        message = frame->payload;
        message_op = frame->opcode;
        break;
      case kOpContinuation:
        if (message_op < 0) return;
        message += frame->payload;
        break;
      default:
        return;
    }
    if ((frame->opcode == kOpText || frame->opcode == kOpBinary || frame->opcode == kOpContinuation) && frame->fin) {
      if (message_op == kOpText) {
        std::lock_guard lock(queue_mu_);
        queue_.push_back({client, std::move(message)});
      } else {
        send_to(*client, error_frame("binary frames are not accepted"));
      }
      message.clear();
      message_op = -1;
    }
  }
}

void SessionServer::send_to(Client& client, const std::string& text) {
  std::lock_guard lock(client.send_mu);
  if (!client.alive) return;
  if (!send_all(client.fd, encode_ws_frame(text))) {
    client.alive = false;
    ::shutdown(client.fd, SHUT_RDWR);
  }
}

void SessionServer::broadcast(const std::string& text) {
  std::vector<std::shared_ptr<Client>> targets;
  {
    std::lock_guard lock(clients_mu_);
    targets = clients_;
  }
  for (auto& c : targets) send_to(*c, text);
  ++frames_sent_;
}

void SessionServer::apply(const Pending& pending, std::vector<std::int64_t>& acks) {
  CommandFrame cmd;
  try {
    cmd = parse_command(pending.text);
  } catch (const ParseError& e) {
    if (pending.from) send_to(*pending.from, error_frame(e.what()));
    return;
  }
  try {
    auto factors = robot_.factors();
    if (const auto* a = std::get_if<SetAngles>(&cmd.kind)) {
      if (a->segment >= robot_.segment_count()) throw RangeError("segment " + std::to_string(a->segment) + " does not exist");
      const auto geom = robot_.geometry(a->segment);
      const auto ff = actuation::angles_to_factors({a->segment, a->alpha, a->beta}, geom, robot_.bounds());
      for (std::size_t k = 0; k < geom.tendons.size(); ++k) factors[geom.tendons[k]] = ff.factors[k];
      robot_.set_factors(factors);
    } else if (const auto* f = std::get_if<SetFactor>(&cmd.kind)) {
      if (f->tendon >= static_cast<int>(factors.size())) throw RangeError("tendon " + std::to_string(f->tendon) + " does not exist");
      if (!robot_.bounds().contains(f->factor)) {
        throw RangeError("factor " + std::to_string(f->factor) + " outside [" + std::to_string(robot_.bounds().min) +
                         ", " + std::to_string(robot_.bounds().max) + "]");
      }
      factors[f->tendon] = f->factor;
      robot_.set_factors(factors);
    } else if (std::holds_alternative<Reset>(cmd.kind)) {
      robot_.set_factors(std::vector<double>(factors.size(), 1.0));
      robot_.sim().particles = rest_particles_;
    } else if (std::holds_alternative<Snapshot>(cmd.kind)) {
      json doc = {{"type", "snapshot"},
                  {"time", robot_.sim().time},
                  {"scene", json::parse(exporter::export_scene_json(robot_.snapshot()))}};
      if (cmd.id) doc["id"] = *cmd.id;
      if (pending.from) send_to(*pending.from, doc.dump());
    }
  } catch (const Error& e) {
    if (pending.from) send_to(*pending.from, error_frame(e.what()));
    return;
  }
  if (!std::holds_alternative<Snapshot>(cmd.kind)) {
    converged_ = false;
    held_ = 0;
  }
  if (cmd.id) acks.push_back(*cmd.id);
}

std::string SessionServer::state_frame(const std::vector<std::int64_t>& acks) const {
  const auto& sim = robot_.sim();
  json positions = json::array();
  for (const auto& p : sim.particles) {
    positions.push_back({exporter::round_sig9(p.position.x() * 1000.0), exporter::round_sig9(p.position.y() * 1000.0),
                         exporter::round_sig9(p.position.z() * 1000.0)});
  }
  json residuals = json::object();
  const auto r = physics::constraint_residuals(sim);
  for (std::size_t k = 0; k < physics::kConstraintClassCount; ++k) {
    residuals[std::string(physics::to_string(static_cast<physics::ConstraintClass>(k)))] = r[k];
  }
  json poses = json::array();
  for (int s = 0; s < robot_.segment_count(); ++s) {
    try {
      const auto pose = actuation::measure_pose(sim, s);
      poses.push_back({{"segment", s}, {"alpha", pose.alpha}, {"beta", pose.beta}});
    } catch (const Error&) {
      poses.push_back({{"segment", s}, {"alpha", nullptr}, {"beta", nullptr}});
    }
  }
  json taut = json::array();
  for (const auto& c : sim.constraints) {
    if (c.cls != physics::ConstraintClass::kCable) continue;
    const auto& d = std::get<physics::DistanceConstraint>(c.kind);
    taut.push_back((sim.particles[d.i].position - sim.particles[d.j].position).norm() > d.rest);
  }
  json tendon_taut = json::array();
  for (const auto& a : robot_.actuators()) {
    tendon_taut.push_back(actuation::chain_length(sim, a) > a.length_factor * a.natural_length);
  }
  return json{{"type", "state"},
              {"time", sim.time},
              {"positions_mm", std::move(positions)},
              {"residuals", std::move(residuals)},
              {"factors", robot_.factors()},
              {"poses", std::move(poses)},
              {"converged", converged_},
              {"cables_taut", std::move(taut)},
              {"tendons_taut", std::move(tendon_taut)},
              {"ack", acks}}
      .dump();
}

void SessionServer::solver_loop() {
  using clock = std::chrono::steady_clock;
  const auto interval = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / cfg_.fps));
  auto next_frame = clock::now();
  std::vector<std::int64_t> acks;
  const auto& solver = robot_.solver();
  while (running_) {
    std::deque<Pending> batch;
    {
      std::lock_guard lock(queue_mu_);
      batch.swap(queue_);
    }
    for (const auto& p : batch) apply(p, acks);

    if (!converged_) {
      try {
        physics::step(robot_.sim(), solver);
      } catch (const NumericalBlowup& e) {
        spdlog::error("{}; restoring rest state", e.what());
        robot_.set_factors(std::vector<double>(robot_.actuators().size(), 1.0));
        robot_.sim().particles = rest_particles_;
      }
      const bool still = physics::max_speed(robot_.sim()) < solver.speed_tolerance &&
                         physics::max_residual(physics::constraint_residuals(robot_.sim())) < solver.residual_tolerance;
      held_ = still ? held_ + 1 : 0;
      converged_ = held_ >= solver.hold_steps;
    }
    const auto now = clock::now();
    if (now >= next_frame) {
      broadcast(state_frame(acks));
      acks.clear();
      next_frame = now + interval;
    } else if (converged_) {
      std::this_thread::sleep_for(std::min<clock::duration>(next_frame - now, std::chrono::milliseconds(5)));
    }
  }
}

WsClient::WsClient(const std::string& host, int port, const std::string& path) {
  fd_ = connect_tcp(host, port);
  const std::string key = "dGVuc2lmb3JnZS1jbGllbnQ=";
  const std::string request = "GET " + path + " HTTP/1.1\r\nHost: " + host + ":" + std::to_string(port) +
                              "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: " + key +
                              "\r\nSec-WebSocket-Version: 13\r\n\r\n";
  if (!send_all(fd_, request)) throw Error(ErrorFamily::kInput, "websocket handshake failed");
  const auto head = read_head(fd_, buffer_, std::chrono::milliseconds(5000));
  if (!head) throw Error(ErrorFamily::kInput, "no websocket handshake reply");
  const HttpHead reply = parse_head(*head);
  if (reply.status_line.find(" 101 ") == std::string::npos ||
      reply.header("sec-websocket-accept") != websocket_accept_key(key)) {
    throw Error(ErrorFamily::kInput, "websocket handshake rejected: " + reply.status_line);
  }
}

WsClient::~WsClient() {
  if (fd_ >= 0) ::close(fd_);
}

void WsClient::send_text(std::string_view text) {
  mask_seed_ = mask_seed_ * 1664525u + 1013904223u;
  if (!send_all(fd_, encode_ws_frame(text, kOpText, mask_seed_))) throw Error(ErrorFamily::kInput, "websocket send failed");
}

std::optional<std::string> WsClient::recv_text(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (fd_ >= 0) {
    std::size_t used = 0;
    if (auto frame = decode_ws_frame(buffer_, used, std::size_t{64} << 20)) {
      buffer_.erase(0, used);
      if (frame->opcode == kOpText) return frame->payload;
      if (frame->opcode == kOpClose) return std::nullopt;
      continue;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    pollfd pfd{fd_, POLLIN, 0};
    if (::poll(&pfd, 1, static_cast<int>(left.count())) <= 0) return std::nullopt;
    char tmp[8192];
    const ssize_t n = ::recv(fd_, tmp, sizeof tmp, 0);
    if (n <= 0) return std::nullopt;
    buffer_.append(tmp, static_cast<std::size_t>(n));
  }
  return std::nullopt;
}

void WsClient::close() {
  if (fd_ < 0) return;
  mask_seed_ = mask_seed_ * 1664525u + 1013904223u;
  send_all(fd_, encode_ws_frame(std::string("\x03\xe8", 2), kOpClose, mask_seed_));
  ::close(fd_);
  fd_ = -1;
}

std::pair<int, std::string> http_get(const std::string& host, int port, const std::string& path) {
  const int fd = connect_tcp(host, port);
  const std::string request = "GET " + path + " HTTP/1.1\r\nHost: " + host + "\r\nConnection: close\r\n\r\n";
  send_all(fd, request);
  std::string rest;
  const auto head = read_head(fd, rest, std::chrono::milliseconds(5000));
  if (!head) {
    ::close(fd);
    throw Error(ErrorFamily::kInput, "no HTTP reply");
  }
  const HttpHead reply = parse_head(*head);
  std::string body = std::move(rest);
  char tmp[4096];
  while (true) {
    pollfd pfd{fd, POLLIN, 0};
    if (::poll(&pfd, 1, 2000) <= 0) break;
    const ssize_t n = ::recv(fd, tmp, sizeof tmp, 0);
    if (n <= 0) break;
    body.append(tmp, static_cast<std::size_t>(n));
  }
  ::close(fd);
  int status = 0;
  std::istringstream(reply.status_line) >> rest >> status;
  return {status, body};
}

}  // namespace tensiforge::serve
