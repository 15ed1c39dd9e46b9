// Copyright 2026 The comom Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Client for out-of-process model adapters.
//
// Wire protocol (newline-delimited JSON, UTF-8, one object per line):
//
//   adapter -> client, once on connect:
//     {"type":"hello","version":1,"capabilities":[...],"tagset":[...],"labelset":[...]}
//   client -> adapter:
//     {"type":"request","id":N,"task":"sentence"|"tag"|"quadruple","tokens":[...]}
//     quadruple requests add "quad":[subject,object,aspect,predicate], each
//     [start,end] or null.
//   adapter -> client, one per request, in request order:
//     {"type":"response","id":N,"logits":[...]}   flat for sentence/quadruple,
//                                                 one row per token for tag
//     {"type":"error","id":N|null,"message":"..."}
//
// capabilities use the names sentence-2way, token-9tag and quintuple-9label;
// tagset must list the nine BIO tags and labelset the eight comparison labels
// followed by NONE, both in this library's order. Ids start at 1 and increase
// by one per request on a connection.

#pragma once

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "comom/backend.hpp"
#include "comom/core.hpp"
#include "comom/error.hpp"
#include "json.hpp"

extern char** environ;

namespace comom {

inline constexpr int kProtocolVersion = 1;

using Clock = std::chrono::steady_clock;
using Millis = std::chrono::milliseconds;

// Bidirectional line-oriented byte stream.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void send_line(std::string_view line) = 0;
  // Next line without its terminator. Throws Timeout when nothing complete
  // arrives in time and BackendUnavailable on end of stream.
  virtual std::string receive_line(Millis timeout) = 0;
};

namespace detail {

class FdLineChannel : public LineChannel {
 public:
  FdLineChannel(int read_fd, int write_fd, bool socket) : read_fd_(read_fd), write_fd_(write_fd), socket_(socket) {}

  void send_line(std::string_view line) override {
    std::string buf(line);
    buf.push_back('\n');
    std::size_t off = 0;
    while (off < buf.size()) {
      const ssize_t n = write_some(buf.data() + off, buf.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::kBackendUnavailable, std::string("write to adapter failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string receive_line(Millis timeout) override {
    const auto deadline = Clock::now() + timeout;
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      if (eof_) fail(ErrorCode::kBackendUnavailable, "adapter closed the connection");
      const auto left = std::chrono::duration_cast<Millis>(deadline - Clock::now()).count();
      if (left <= 0) fail(ErrorCode::kTimeout, "no reply from adapter within " + std::to_string(timeout.count()) + " ms");
      pollfd pfd{read_fd_, POLLIN, 0};
      const int r = ::poll(&pfd, 1, static_cast<int>(left));
      if (r < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::kBackendUnavailable, std::string("poll failed: ") + std::strerror(errno));
      }
      if (r == 0) continue;
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        fail(ErrorCode::kBackendUnavailable, std::string("read from adapter failed: ") + std::strerror(errno));
      }
      if (n == 0) {
        eof_ = true;
        continue;
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 protected:
  void close_fds() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    read_fd_ = write_fd_ = -1;
  }

  void close_write() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) {
      ::close(write_fd_);
      write_fd_ = -1;
    }
  }

 private:
  // Writing to a dead peer must surface as an error, not a SIGPIPE.
  ssize_t write_some(const char* data, std::size_t size) {
    if (socket_) return ::send(write_fd_, data, size, MSG_NOSIGNAL);
    sigset_t block, old;
    sigemptyset(&block);
    sigaddset(&block, SIGPIPE);
    pthread_sigmask(SIG_BLOCK, &block, &old);
    const ssize_t n = ::write(write_fd_, data, size);
    const int saved = errno;
    if (n < 0 && saved == EPIPE) {
      const timespec zero{0, 0};
      sigtimedwait(&block, nullptr, &zero);
    }
    pthread_sigmask(SIG_SETMASK, &old, nullptr);
    errno = saved;
    return n;
  }

  int read_fd_;
  int write_fd_;
  bool socket_;
  std::string buffer_;
  bool eof_ = false;
};

}  // namespace detail

// Adapter running as a child process speaking the protocol on stdin/stdout.
class ChildProcessChannel : public detail::FdLineChannel {
 public:
  static std::unique_ptr<ChildProcessChannel> spawn(const std::vector<std::string>& argv) {
    if (argv.empty()) fail(ErrorCode::kInvalidArgument, "empty adapter command line");
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0) fail(ErrorCode::kBackendUnavailable, "pipe() failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      fail(ErrorCode::kBackendUnavailable, "pipe() failed");
    }
    ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
    ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&actions, to_child[0]);
    posix_spawn_file_actions_addclose(&actions, from_child[1]);

    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    pid_t pid = 0;
    const int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
      ::close(to_child[1]);
      ::close(from_child[0]);
      fail(ErrorCode::kBackendUnavailable,
           "cannot start adapter '" + argv[0] + "': " + std::strerror(rc));
    }
    return std::unique_ptr<ChildProcessChannel>(new ChildProcessChannel(from_child[0], to_child[1], pid));
  }

  ~ChildProcessChannel() override {
    close_write();
    // Give the adapter a moment to exit on EOF, then make sure it is gone.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) != 0) {
        close_fds();
        return;
      }
      std::this_thread::sleep_for(Millis(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    close_fds();
  }

  pid_t pid() const { return pid_; }

 private:
  ChildProcessChannel(int read_fd, int write_fd, pid_t pid)
      : FdLineChannel(read_fd, write_fd, false), pid_(pid) {}
  pid_t pid_;
};

// Adapter listening on a TCP address. Connection attempts are retried until
// the deadline so an adapter that is still starting up can be reached.
class TcpChannel : public detail::FdLineChannel {
 public:
  static std::unique_ptr<TcpChannel> connect(const std::string& host, std::uint16_t port,
                                             Millis timeout) {
    const auto deadline = Clock::now() + timeout;
    std::string last_error = "no attempt made";
    do {
      addrinfo hints{};
      hints.ai_family = AF_UNSPEC;
      hints.ai_socktype = SOCK_STREAM;
      addrinfo* res = nullptr;
      const int gai = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res);
      if (gai != 0) {
        last_error = ::gai_strerror(gai);
      } else {
        for (addrinfo* ai = res; ai; ai = ai->ai_next) {
          const int fd = try_connect(ai, deadline, last_error);
          if (fd >= 0) {
            ::freeaddrinfo(res);
            return std::unique_ptr<TcpChannel>(new TcpChannel(fd));
          }
        }
        ::freeaddrinfo(res);
      }
      std::this_thread::sleep_for(Millis(20));
    } while (Clock::now() < deadline);
    fail(ErrorCode::kTimeout, "cannot reach adapter at " + host + ":" + std::to_string(port) +
                                  " within " + std::to_string(timeout.count()) + " ms (" +
                                  last_error + ")");
  }

  ~TcpChannel() override { close_fds(); }

 private:
  explicit TcpChannel(int fd) : FdLineChannel(fd, fd, true) {}

  static int try_connect(const addrinfo* ai, Clock::time_point deadline, std::string& error) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) {
      error = std::strerror(errno);
      return -1;
    }
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc != 0 && errno == EINPROGRESS) {
      const auto left = std::chrono::duration_cast<Millis>(deadline - Clock::now()).count();
      pollfd pfd{fd, POLLOUT, 0};
      rc = ::poll(&pfd, 1, static_cast<int>(std::max<long long>(left, 0)));
      if (rc == 1) {
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        rc = err == 0 ? 0 : -1;
        errno = err;
      } else {
        rc = -1;
        errno = ETIMEDOUT;
      }
    }
    if (rc != 0) {
      error = std::strerror(errno);
      ::close(fd);
      return -1;
    }
    ::fcntl(fd, F_SETFL, flags);
    return fd;
  }
};

// ---------------------------------------------------------------------------
// Protocol messages.

namespace protocol {

inline nlohmann::ordered_json hello_message(const std::set<Task>& capabilities) {
  nlohmann::ordered_json j;
  j["type"] = "hello";
  j["version"] = kProtocolVersion;
  j["capabilities"] = nlohmann::ordered_json::array();
  for (Task t : kTasks) {
    if (capabilities.count(t)) j["capabilities"].push_back(std::string(capability_name(t)));
  }
  j["tagset"] = nlohmann::ordered_json::array();
  for (auto name : kTagNames) j["tagset"].push_back(std::string(name));
  j["labelset"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < kStageLabelCount; ++i) {
    j["labelset"].push_back(std::string(stage_label_name(static_cast<StageLabel>(i))));
  }
  return j;
}

inline std::string dump(const nlohmann::ordered_json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

inline std::string request_line(std::uint64_t id, Task task, const Sentence& sentence,
                                const Quadruple* quad = nullptr) {
  nlohmann::ordered_json j;
  j["type"] = "request";
  j["id"] = id;
  j["task"] = std::string(task_name(task));
  j["tokens"] = nlohmann::ordered_json::array();
  for (const Token& t : sentence.tokens) j["tokens"].push_back(t.text);
  if (quad) {
    j["quad"] = nlohmann::ordered_json::array();
    for (const auto& span : *quad) {
      if (span) {
        j["quad"].push_back(nlohmann::ordered_json::array({span->start, span->end}));
      } else {
        j["quad"].push_back(nullptr);
      }
    }
  }
  return dump(j);
}

// Validates a hello line and returns the advertised capabilities.
inline std::set<Task> parse_hello(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kHandshakeFailure, std::string("hello is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("type", std::string()) != "hello") {
    fail(ErrorCode::kHandshakeFailure, "first message is not a hello");
  }
  if (!j.contains("version") || !j["version"].is_number_integer() ||
      j["version"].get<int>() != kProtocolVersion) {
    fail(ErrorCode::kHandshakeFailure, "unsupported protocol version (expected " +
                                           std::to_string(kProtocolVersion) + ")");
  }
  if (!j.contains("capabilities") || !j["capabilities"].is_array()) {
    fail(ErrorCode::kHandshakeFailure, "hello lacks a capabilities list");
  }
  std::set<Task> caps;
  for (const auto& c : j["capabilities"]) {
    if (!c.is_string()) fail(ErrorCode::kHandshakeFailure, "capability names must be strings");
    const std::string name = c.get<std::string>();
    bool known = false;
    for (Task t : kTasks) {
      if (name == capability_name(t)) {
        caps.insert(t);
        known = true;
      }
    }
    if (!known) fail(ErrorCode::kHandshakeFailure, "unknown capability '" + name + "'");
  }
  if (caps.empty()) fail(ErrorCode::kHandshakeFailure, "adapter advertises no capability");
  const auto expected = hello_message(caps);
  if (!j.contains("tagset") || j["tagset"] != expected["tagset"]) {
    fail(ErrorCode::kHandshakeFailure, "adapter tagset differs from the 9-tag BIO alphabet");
  }
  if (!j.contains("labelset") || j["labelset"] != expected["labelset"]) {
    fail(ErrorCode::kHandshakeFailure, "adapter labelset differs from the 9-label alphabet");
  }
  return caps;
}

// Parses a response line for request `id` and returns its logits rows (a
// single row for flat responses).
inline std::vector<LogitVector> parse_response(std::string_view line, std::uint64_t id, bool rows) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kProtocolError, std::string("reply is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::kProtocolError, "reply is not a JSON object");
  const std::string type = j.value("type", std::string());
  if (type == "error") {
    fail(ErrorCode::kRemoteError, "adapter error for request " + std::to_string(id) + ": " +
                                      j.value("message", std::string("(no message)")));
  }
  if (type != "response") fail(ErrorCode::kProtocolError, "unexpected message type '" + type + "'");
  if (!j.contains("id") || !j["id"].is_number_unsigned() || j["id"].get<std::uint64_t>() != id) {
    fail(ErrorCode::kProtocolError, "response id does not echo request " + std::to_string(id));
  }
  if (!j.contains("logits") || !j["logits"].is_array()) {
    fail(ErrorCode::kProtocolError, "response lacks logits");
  }
  auto read_row = [](const nlohmann::json& arr) {
    if (!arr.is_array()) fail(ErrorCode::kProtocolError, "logit rows must be arrays");
    LogitVector row;
    for (const auto& v : arr) {
      if (!v.is_number()) fail(ErrorCode::kProtocolError, "logits must be numbers");
      row.push_back(v.get<double>());
    }
    return row;
  };
  std::vector<LogitVector> out;
  if (rows) {
    for (const auto& r : j["logits"]) out.push_back(read_row(r));
  } else {
    out.push_back(read_row(j["logits"]));
  }
  return out;
}

}  // namespace protocol

struct ExternalOptions {
  Millis timeout{30000};
};

// Handle on a connected adapter. Requests are serialized: one outstanding
// request per connection, answered in order.
class ExternalBackend : public Backend {
 public:
  ExternalBackend(std::unique_ptr<LineChannel> channel, BackendDescriptor descriptor,
                  ExternalOptions options)
      : channel_(std::move(channel)), descriptor_(std::move(descriptor)), options_(options) {}

  const BackendDescriptor& descriptor() const override { return descriptor_; }

  std::vector<LogitVector> classify_sentences(std::span<const Sentence> batch) override {
    std::vector<LogitVector> out;
    for (const Sentence& s : batch) out.push_back(call(Task::kSentence, s, nullptr).front());
    return out;
  }

  std::vector<TagLogits> tag_sentences(std::span<const Sentence> batch) override {
    std::vector<TagLogits> out;
    for (const Sentence& s : batch) out.push_back(call(Task::kTag, s, nullptr));
    return out;
  }

  std::vector<LogitVector> classify_quadruples(const Sentence& sentence,
                                               std::span<const Quadruple> quads) override {
    std::vector<LogitVector> out;
    for (const Quadruple& q : quads) out.push_back(call(Task::kQuadruple, sentence, &q).front());
    return out;
  }

  std::uint64_t requests_sent() const { return next_id_ - 1; }

 private:
  std::vector<LogitVector> call(Task task, const Sentence& s, const Quadruple* quad) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (broken_) {
      fail(ErrorCode::kBackendUnavailable,
           "connection to '" + descriptor_.name + "' is out of sync after an earlier failure");
    }
    const std::uint64_t id = next_id_++;
    std::string reply;
    try {
      channel_->send_line(protocol::request_line(id, task, s, quad));
      reply = channel_->receive_line(options_.timeout);
    } catch (const Error&) {
      // A late reply would be read as the answer to the next request.
      broken_ = true;
      throw;
    }
    return protocol::parse_response(reply, id, task == Task::kTag);
  }

  std::unique_ptr<LineChannel> channel_;
  BackendDescriptor descriptor_;
  ExternalOptions options_;
  std::mutex mutex_;
  std::uint64_t next_id_ = 1;
  bool broken_ = false;
};

// Opens the descriptor's transport, waits for the adapter's hello and records
// the capabilities it advertises.
inline std::shared_ptr<ExternalBackend> connect_external(std::unique_ptr<LineChannel> channel,
                                                         BackendDescriptor descriptor,
                                                         ExternalOptions options = {}) {
  std::string hello;
  try {
    hello = channel->receive_line(options.timeout);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kBackendUnavailable) {
      fail(ErrorCode::kHandshakeFailure, "adapter '" + descriptor.name + "' exited before its hello");
    }
    throw;
  }
  descriptor.capabilities = protocol::parse_hello(hello);
  descriptor.kind = BackendKind::kExternal;
  return std::make_shared<ExternalBackend>(std::move(channel), std::move(descriptor), options);
}

inline std::shared_ptr<ExternalBackend> connect_external(BackendDescriptor descriptor,
                                                         ExternalOptions options = {}) {
  if (!descriptor.transport) {
    fail(ErrorCode::kInvalidArgument, "external backend '" + descriptor.name + "' has no transport");
  }
  std::unique_ptr<LineChannel> channel;
  if (const auto* child = std::get_if<ChildProcessTransport>(&*descriptor.transport)) {
    channel = ChildProcessChannel::spawn(child->argv);
  } else {
    const auto& tcp = std::get<TcpTransport>(*descriptor.transport);
    channel = TcpChannel::connect(tcp.host, tcp.port, options.timeout);
  }
  return connect_external(std::move(channel), std::move(descriptor), options);
}

}  // namespace comom
