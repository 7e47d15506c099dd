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

// Runtime state of one computing server: its peer channel, its offline
// source, the exchange barrier and the round accounting.

#pragma once

#include <cstdint>
#include <exception>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ppgpr/errors.hpp"
#include "ppgpr/offline.hpp"
#include "ppgpr/params.hpp"
#include "ppgpr/ring.hpp"
#include "ppgpr/sharing.hpp"
#include "ppgpr/transport.hpp"

namespace ppgpr {

struct ProtocolConfig {
  ExpParams exp;
  DivisionConfig division;
  SqrtConfig sqrt;
};

class Party {
 public:
  Party(int id, FixedPointCodec codec, ProtocolConfig config, ChannelPtr peer,
        OfflineSource& offline)
      : id_(id), codec_(codec), config_(config), peer_(std::move(peer)), offline_(&offline) {
    if (id != 0 && id != 1) throw std::invalid_argument("party id must be 0 or 1");
    config_.division.validate();
  }

  int id() const { return id_; }
  const FixedPointCodec& codec() const { return codec_; }
  const RingParams& ring() const { return codec_.params(); }
  const ProtocolConfig& config() const { return config_; }
  OfflineSource& offline() { return *offline_; }

  // One synchronized bidirectional round: sends `mine`, returns the peer's
  // vector of the same length.
  std::vector<Word> exchange(std::span<const Word> mine) {
    const std::uint64_t tag = next_tag();
    Message out{tag, {}};
    put_elements(ring(), mine, out.payload);
    const std::size_t words = out.payload.size();
    const std::size_t bytes = wire_bytes(out);

    Message in;
    if (peer_->send_may_block()) {
      std::exception_ptr send_error;
      std::thread sender([&] {
        try {
          peer_->send(std::move(out));
        } catch (...) {
          send_error = std::current_exception();
        }
      });
      try {
        in = peer_->recv();
      } catch (...) {
        peer_->close();
        sender.join();
        throw;
      }
      sender.join();
      if (send_error) std::rethrow_exception(send_error);
    } else {
      peer_->send(std::move(out));
      in = peer_->recv();
    }

    if (in.tag != tag) {
      throw ProtocolError("exchange tag mismatch in " + scope_path() + " (expected " +
                          std::to_string(tag) + ", got " + std::to_string(in.tag) + ")");
    }
    if (in.payload.size() != words) throw ProtocolError("exchange length mismatch in " + scope_path());

    ProtocolStats s;
    s.rounds = 1;
    s.elements_sent = mine.size();
    s.bits_sent = static_cast<std::uint64_t>(mine.size()) * static_cast<std::uint64_t>(ring().bits);
    s.bytes_sent = bytes;
    stats_.online += s;
    std::set<std::string> seen;
    for (const auto& name : scopes_) {
      if (seen.insert(name).second) stats_.per_protocol[name] += s;
    }
    return get_elements(ring(), in.payload, mine.size());
  }

  // Marks offline material as used; a second use is a protocol error.
  void consume(MaterialKind kind, std::uint64_t seq) {
    if (!consumed_.insert({static_cast<std::uint64_t>(kind), seq}).second) {
      throw ProtocolError(std::string("offline material reused: ") + material_name(kind) + "#" +
                          std::to_string(seq));
    }
  }

  class Scope {
   public:
    Scope(Party& p, std::string name) : p_(p), uncaught_(std::uncaught_exceptions()) {
      p_.scopes_.push_back(std::move(name));
    }
    ~Scope() {
      if (std::uncaught_exceptions() > uncaught_ && p_.failure_scope_.empty()) {
        p_.failure_scope_ = p_.scope_path();
      }
      p_.scopes_.pop_back();
    }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Party& p_;
    int uncaught_;
  };

  [[nodiscard]] Scope scope(std::string name) { return Scope(*this, std::move(name)); }

  std::string scope_path() const {
    std::string s;
    for (const auto& n : scopes_) {
      if (!s.empty()) s += '/';
      s += n;
    }
    return s.empty() ? "session" : s;
  }

  // Innermost protocol that was active when an exception escaped.
  const std::string& failure_scope() const { return failure_scope_; }

  RoundStats stats() const {
    RoundStats s = stats_;
    s.offline_messages = offline_->traffic().messages;
    s.offline_bytes_received = offline_->traffic().bytes_received;
    s.offline_bytes_sent = offline_->traffic().bytes_sent;
    return s;
  }

  const ProtocolStats& online() const { return stats_.online; }

 private:
  std::uint64_t next_tag() {
    // FNV-1a of the outermost scope in the high half, a counter below.
    std::uint64_t h = 1469598103934665603ULL;
    if (!scopes_.empty()) {
      for (unsigned char c : scopes_.front()) h = (h ^ c) * 1099511628211ULL;
    }
    return (h & 0xffffffff00000000ULL) | (exchanges_++ & 0xffffffffULL);
  }

  int id_;
  FixedPointCodec codec_;
  ProtocolConfig config_;
  ChannelPtr peer_;
  OfflineSource* offline_;
  RoundStats stats_;
  std::vector<std::string> scopes_;
  std::string failure_scope_;
  std::set<std::pair<std::uint64_t, std::uint64_t>> consumed_;
  std::uint64_t exchanges_ = 0;
};

}  // namespace ppgpr
