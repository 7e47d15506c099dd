// Copyright 2026 The ppgpr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Point-to-point message channels between the two computing servers and the
// assistant, with a byte-exact wire format:
//
//   [protocol_tag: u64 LE][payload word count: u64 LE][payload words: u64 LE]...

#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "ppgpr/errors.hpp"

namespace ppgpr {

enum class PartyRole : int { kCompute0 = 0, kCompute1 = 1, kAssistant = 2 };

inline const char* role_name(PartyRole r) {
  switch (r) {
    case PartyRole::kCompute0: return "S0";
    case PartyRole::kCompute1: return "S1";
    case PartyRole::kAssistant: return "T";
  }
  return "?";
}

struct Message {
  std::uint64_t tag = 0;
  std::vector<std::uint64_t> payload;

  friend bool operator==(const Message&, const Message&) = default;
};

inline constexpr std::size_t kHeaderBytes = 16;

inline void put_u64_le(unsigned char* dst, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) dst[i] = static_cast<unsigned char>(v >> (8 * i));
}

inline std::uint64_t get_u64_le(const unsigned char* src) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | src[i];
  return v;
}

inline std::vector<unsigned char> encode_message(const Message& m) {
  std::vector<unsigned char> out(kHeaderBytes + 8 * m.payload.size());
  put_u64_le(out.data(), m.tag);
  put_u64_le(out.data() + 8, m.payload.size());
  for (std::size_t i = 0; i < m.payload.size(); ++i) put_u64_le(out.data() + 16 + 8 * i, m.payload[i]);
  return out;
}

inline Message decode_message(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kHeaderBytes) throw TransportError("message shorter than header");
  Message m;
  m.tag = get_u64_le(bytes.data());
  const std::uint64_t n = get_u64_le(bytes.data() + 8);
  if (bytes.size() != kHeaderBytes + 8 * n) throw TransportError("message length mismatch");
  m.payload.resize(n);
  for (std::size_t i = 0; i < n; ++i) m.payload[i] = get_u64_le(bytes.data() + 16 + 8 * i);
  return m;
}

inline std::size_t wire_bytes(const Message& m) { return kHeaderBytes + 8 * m.payload.size(); }

class Channel {
 public:
  virtual ~Channel() = default;
  virtual void send(Message m) = 0;
  virtual Message recv() = 0;
  // Wakes any blocked receiver on either end with a TransportError.
  virtual void close() = 0;
  // True when send() can block until the peer reads, so that simultaneous
  // sends from both ends must not happen on the receiving threads.
  virtual bool send_may_block() const { return false; }
};

using ChannelPtr = std::shared_ptr<Channel>;

// ---- in-process backend ----------------------------------------------------

namespace detail {

struct DuplexQueue {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Message> q[2];  // q[i]: messages destined to endpoint i
  bool closed = false;
};

class InProcEndpoint final : public Channel {
 public:
  InProcEndpoint(std::shared_ptr<DuplexQueue> q, int side, std::chrono::milliseconds timeout)
      : q_(std::move(q)), side_(side), timeout_(timeout) {}

  void send(Message m) override {
    {
      std::lock_guard lk(q_->mu);
      if (q_->closed) throw TransportError("send on closed channel");
      q_->q[1 - side_].push_back(std::move(m));
    }
    q_->cv.notify_all();
  }

  Message recv() override {
    std::unique_lock lk(q_->mu);
    auto ready = [&] { return q_->closed || !q_->q[side_].empty(); };
    if (!q_->cv.wait_for(lk, timeout_, ready)) throw TransportError("receive timed out");
    if (q_->q[side_].empty()) throw TransportError("channel closed");
    Message m = std::move(q_->q[side_].front());
    q_->q[side_].pop_front();
    return m;
  }

  void close() override {
    {
      std::lock_guard lk(q_->mu);
      q_->closed = true;
    }
    q_->cv.notify_all();
  }

 private:
  std::shared_ptr<DuplexQueue> q_;
  int side_;
  std::chrono::milliseconds timeout_;
};

}  // namespace detail

inline std::pair<ChannelPtr, ChannelPtr> make_inproc_pair(
    std::chrono::milliseconds timeout = std::chrono::minutes(10)) {
  auto q = std::make_shared<detail::DuplexQueue>();
  return {std::make_shared<detail::InProcEndpoint>(q, 0, timeout),
          std::make_shared<detail::InProcEndpoint>(q, 1, timeout)};
}

// ---- socket backend --------------------------------------------------------

class TcpChannel final : public Channel {
 public:
  explicit TcpChannel(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  ~TcpChannel() override {
    if (fd_ >= 0) ::close(fd_);
  }
  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;

  // Accepts exactly one peer on host:port.
  static std::shared_ptr<TcpChannel> listen_once(const std::string& host, int port,
                                                 std::chrono::milliseconds timeout) {
    int lfd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (lfd < 0) throw TransportError("socket() failed");
    int one = 1;
    ::setsockopt(lfd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr = resolve(host, port);
    if (::bind(lfd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      ::close(lfd);
      throw TransportError("bind to " + host + ":" + std::to_string(port) + " failed");
    }
    ::listen(lfd, 1);
    timeval tv{static_cast<long>(timeout.count() / 1000), static_cast<long>(timeout.count() % 1000) * 1000};
    ::setsockopt(lfd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    int fd = ::accept(lfd, nullptr, nullptr);
    ::close(lfd);
    if (fd < 0) throw TransportError("accept on port " + std::to_string(port) + " failed");
    return std::make_shared<TcpChannel>(fd);
  }

  static std::shared_ptr<TcpChannel> connect_to(const std::string& host, int port,
                                                std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      int fd = ::socket(AF_INET, SOCK_STREAM, 0);
      if (fd < 0) throw TransportError("socket() failed");
      sockaddr_in addr = resolve(host, port);
      if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0) {
        return std::make_shared<TcpChannel>(fd);
      }
      ::close(fd);
      if (std::chrono::steady_clock::now() > deadline) {
        throw TransportError("connect to " + host + ":" + std::to_string(port) + " timed out");
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  }

  void send(Message m) override {
    auto bytes = encode_message(m);
    std::lock_guard lk(send_mu_);
    write_all(bytes.data(), bytes.size());
  }

  Message recv() override {
    std::lock_guard lk(recv_mu_);
    unsigned char header[kHeaderBytes];
    read_all(header, sizeof header);
    Message m;
    m.tag = get_u64_le(header);
    const std::uint64_t n = get_u64_le(header + 8);
    std::vector<unsigned char> body(8 * n);
    read_all(body.data(), body.size());
    m.payload.resize(n);
    for (std::size_t i = 0; i < n; ++i) m.payload[i] = get_u64_le(body.data() + 8 * i);
    return m;
  }

  void close() override {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  }
  bool send_may_block() const override { return true; }

 private:
  static sockaddr_in resolve(const std::string& host, int port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      addrinfo hints{}, *res = nullptr;
      hints.ai_family = AF_INET;
      if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
        throw TransportError("cannot resolve host " + host);
      }
      addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
      ::freeaddrinfo(res);
    }
    return addr;
  }

  void write_all(const unsigned char* p, std::size_t n) {
    while (n > 0) {
      ssize_t w = ::send(fd_, p, n, MSG_NOSIGNAL);
      if (w <= 0) throw TransportError("connection lost while sending");
      p += w;
      n -= static_cast<std::size_t>(w);
    }
  }

  void read_all(unsigned char* p, std::size_t n) {
    while (n > 0) {
      ssize_t r = ::recv(fd_, p, n, 0);
      if (r <= 0) throw TransportError("connection lost while receiving");
      p += r;
      n -= static_cast<std::size_t>(r);
    }
  }

  int fd_;
  std::mutex send_mu_, recv_mu_;
};

// ---- transcripts -----------------------------------------------------------

struct TranscriptEntry {
  bool outgoing = false;
  Message message;
  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

// Decorator that records every message crossing an endpoint.
class RecordingChannel final : public Channel {
 public:
  explicit RecordingChannel(ChannelPtr inner) : inner_(std::move(inner)) {}

  void send(Message m) override {
    {
      std::lock_guard lk(mu_);
      log_.push_back({true, m});
    }
    inner_->send(std::move(m));
  }
  Message recv() override {
    Message m = inner_->recv();
    std::lock_guard lk(mu_);
    log_.push_back({false, m});
    return m;
  }
  void close() override { inner_->close(); }
  bool send_may_block() const override { return inner_->send_may_block(); }

  std::vector<TranscriptEntry> transcript() const {
    std::lock_guard lk(mu_);
    return log_;
  }

 private:
  ChannelPtr inner_;
  mutable std::mutex mu_;
  std::vector<TranscriptEntry> log_;
};

// ---- accounting ------------------------------------------------------------

struct ProtocolStats {
  std::uint64_t rounds = 0;
  std::uint64_t elements_sent = 0;
  std::uint64_t bits_sent = 0;   // elements x l
  std::uint64_t bytes_sent = 0;  // wire bytes including headers

  ProtocolStats& operator+=(const ProtocolStats& o) {
    rounds += o.rounds;
    elements_sent += o.elements_sent;
    bits_sent += o.bits_sent;
    bytes_sent += o.bytes_sent;
    return *this;
  }
};

// Per-party counters. Online counters only move on exchanges between the
// computing servers; offline traffic from the assistant is tracked apart.
struct RoundStats {
  ProtocolStats online;
  std::map<std::string, ProtocolStats> per_protocol;
  std::uint64_t offline_messages = 0;
  std::uint64_t offline_bytes_received = 0;
  std::uint64_t offline_bytes_sent = 0;
};

}  // namespace ppgpr
